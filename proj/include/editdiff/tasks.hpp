#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "editdiff/training.hpp"
#include "editdiff/vocab.hpp"

namespace editdiff {

// Desk-scale synthetic tasks:
//   copy                 target == source
//   reverse              target = reversed source
//   substitute           deterministic lexicon swap (style-transfer stand-in)
//   summarize-synthetic  target = source with <drop>-marked chunks removed
struct SynthResult {
  Vocab vocab;
  std::vector<CorpusPair> pairs;
};

SynthResult synth_corpus(const std::string& task, std::size_t size, std::uint64_t seed);

// Deterministic 80/10/10 split by hash of the example index.
// 0 = train, 1 = dev, 2 = test.
int split_of_index(std::size_t index);

void write_corpus(const std::string& path, const std::vector<CorpusPair>& pairs,
                  const nlohmann::ordered_json& header);

// split: "train", "dev", "test" or "all".
std::vector<CorpusPair> load_corpus(const std::string& path, const std::string& split);

}  // namespace editdiff
