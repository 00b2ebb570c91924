#pragma once

#include <cstdint>
#include <vector>

#include "editdiff/chain.hpp"
#include "editdiff/edit_script.hpp"
#include "editdiff/rand.hpp"
#include "editdiff/vocab.hpp"

namespace editdiff {

enum class LengthKind { kPoisson, kUniform };

// Edit length distribution: Poisson(lambda) truncated to >= 1, or Uniform{1..max}.
struct LengthDist {
  LengthKind kind = LengthKind::kPoisson;
  double lambda = 3.0;
  int uniform_max = 4;
};

enum class DistractorSource { kUniformVocab, kEmpiricalUnigram };

struct CorruptionConfig {
  // Edit type distribution over {KEEP, REPLACE, INSERT, DELETE}.
  double p_keep = 0.6;
  double p_replace = 0.2;
  double p_insert = 0.1;
  double p_delete = 0.1;

  LengthDist length;
  DistractorSource distractor = DistractorSource::kUniformVocab;
  std::vector<double> unigram;  // content-vocab weights for the empirical mode

  int max_steps = 12;  // T_max
  std::uint64_t seed = 0;

  // Apply a single sampled edit per step instead of the left-to-right
  // multi-edit walk.
  bool single_edit_per_step = false;

  void validate(const Vocab& vocab) const;
};

// One corruption step with its exact inverse (the gold denoising supervision).
// The inverse is derived structurally (INSERT <-> DELETE, REPLACE payload
// swap), never by re-alignment.
struct CorruptionStepRecord {
  TokenSeq before;
  TokenSeq after;
  EditScript forward_script;
  EditScript inverse_script;
};

EditTag sample_edit_type(Rng& rng, const CorruptionConfig& cfg);
int sample_edit_length(Rng& rng, const LengthDist& dist);
TokenId sample_distractor(Rng& rng, const CorruptionConfig& cfg, const Vocab& vocab);

CorruptionStepRecord corrupt_step(const TokenSeq& x, const CorruptionConfig& cfg,
                                  const Vocab& vocab, Rng& rng);

// Chain ordered most-corrupted-first: revisions [x_steps ... x_0], scripts are
// the inverse (denoising) scripts. Deterministic given the rng state.
RevisionChain corrupt_chain(const TokenSeq& x0, int steps, const CorruptionConfig& cfg,
                            const Vocab& vocab, Rng& rng);

// Corrupts x0 for t ~ Uniform{1..max_steps} steps and exposes the inverse of
// the last step as per-token tags + payload targets.
struct TrainingExample {
  TokenSeq input;      // x_t
  TagExpansion gold;   // reverses the final corruption step
  TokenSeq x_prev;     // x_{t-1}; applying gold to input reproduces this
  int t = 0;
};

TrainingExample make_training_example(const TokenSeq& x0, const CorruptionConfig& cfg,
                                      const Vocab& vocab, Rng& rng);

}  // namespace editdiff
