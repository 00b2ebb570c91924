#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "editdiff/corruption.hpp"
#include "editdiff/model_neural.hpp"
#include "editdiff/model_ngram.hpp"
#include "editdiff/scoring.hpp"
#include "editdiff/vocab.hpp"

namespace editdiff {

struct CorpusPair {
  TokenSeq source;
  TokenSeq target;
};

struct TrainConfig {
  std::string family = "neural";  // "neural" or "ngram"
  NeuralConfig neural;
  NGramConfig ngram;
  CorruptionConfig corruption;
  std::size_t train_steps = 40000;  // examples processed
  double learning_rate = 0.02;
  double tag_loss_weight = 1.0;
  double gen_loss_weight = 1.0;
  // Fraction of steps supervised by the minimal edit script from a bootstrap
  // input (source text, or the null sequence) to the target, instead of a
  // corruption step. Teaches source-prototype editing and null-start
  // generation directly.
  double bootstrap_mix = 0.0;
  std::uint64_t seed = 7;
};

struct TrainStats {
  double first_decile_loss = 0.0;
  double last_decile_loss = 0.0;
  std::size_t steps_run = 0;
  std::size_t skipped_examples = 0;
};

struct TrainedModel {
  std::string family;
  std::unique_ptr<Tagger> tagger;
  std::unique_ptr<Generator> generator;
  TrainStats stats;
};

// Gold tags + per-slot payload supervision extracted from a tag expansion.
struct SupervisedStep {
  TokenSeq input;
  std::vector<EditTag> tags;
  StepPlan plan;
  std::vector<TokenSeq> payloads;  // parallel to plan.slots
};

// Builds the teacher-forcing view of one example; returns false when a gold
// payload exceeds max_span (the example should be skipped).
bool build_supervised_step(const TokenSeq& input, const TagExpansion& gold, std::size_t max_span,
                           SupervisedStep* out);

// Trains the configured family. Deterministic given config + corpus.
TrainedModel train(const std::vector<CorpusPair>& corpus, const TrainConfig& cfg,
                   const Vocab& vocab);

// Scores a fixed probe batch; used for checkpoint round-trip checks.
std::vector<double> probe_scores(const Tagger& tagger, const Generator& gen,
                                 const std::vector<CorpusPair>& probe);

}  // namespace editdiff
