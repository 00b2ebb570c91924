#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "editdiff/training.hpp"
#include "editdiff/vocab.hpp"

namespace editdiff {

// Versioned container: a JSON header line (format version, vocab hash, model
// family, hyperparameters, config echo) followed by a little-endian double
// blob holding the flat parameters.
struct Checkpoint {
  int format_version = 1;
  std::uint64_t vocab_hash = 0;
  std::string family;
  nlohmann::ordered_json hyper;
  nlohmann::ordered_json config_echo;
  std::uint64_t step_counter = 0;
  std::vector<double> params;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

Checkpoint make_checkpoint(const TrainedModel& model, const Vocab& vocab,
                           nlohmann::ordered_json config_echo);

// Rebuilds the scorers; rejects vocab hash mismatches.
TrainedModel restore_models(const Checkpoint& ckpt, const Vocab& vocab);

}  // namespace editdiff
