#pragma once

#include <span>
#include <string>
#include <vector>

#include "editdiff/chain.hpp"
#include "editdiff/rand.hpp"
#include "editdiff/scoring.hpp"
#include "editdiff/vocab.hpp"

namespace editdiff {

enum class DecodeMethod { kGreedy, kBeam, kNucleus, kBeam2d };
enum class InitMode { kNull, kRandom, kArBootstrap, kSourceBootstrap };

// Length policy for the RANDOM initialization: uniform in
// [lo_frac*len(source), hi_frac*len(source)] when a source exists, else
// uniform in [lo_abs, max_len].
struct RandomLenPolicy {
  double lo_frac = 0.8;
  double hi_frac = 1.2;
  std::size_t lo_abs = 5;
};

struct InitSpec {
  InitMode mode = InitMode::kSourceBootstrap;
  RandomLenPolicy random_len;
};

struct DecodeConfig {
  int steps = 12;          // T
  int intra_width = 5;     // b, token-level beam
  int inter_width = 3;     // r, revision-level beam
  double nucleus_p = 0.6;  // top-p mass
  std::size_t max_len = 48;
  std::size_t max_span_len = 16;
  bool early_stop = false;
  double length_norm_alpha = 0.7;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Models {
  const Tagger* tagger = nullptr;
  const Generator* generator = nullptr;
};

// A candidate revision with its accumulated score and the scripts that
// produced it; replaying the trace from the initialization reproduces tokens.
struct Hypothesis {
  TokenSeq tokens;
  double cum_logp = 0.0;
  int step_index = 0;
  std::vector<EditScript> trace;
  std::size_t gen_token_count = 0;
  bool last_step_all_keep = false;
};

// Inter-revision score: cum_logp / max(1, generated tokens)^alpha.
double normalized_score(const Hypothesis& h, double alpha);

Hypothesis make_hypothesis(TokenSeq tokens);

TokenSeq init_sequence(const InitSpec& spec, const TokenSeq* source, const Models& models,
                       const DecodeConfig& cfg, const Vocab& vocab, Rng& rng);

enum class StepStrategy { kGreedy, kBeam, kNucleus };

// One reverse-process step from `start`: per-position tag assignment (argmax
// for greedy/beam, top-p sampling for nucleus), deletion, then payload
// generation per strategy. Returns 1 (greedy/nucleus) or up to b (beam)
// extended hypotheses, best first. Emits the all-KEEP fallback when the step
// would otherwise produce an empty sequence.
std::vector<Hypothesis> denoise_step(const Hypothesis& start, const Models& models,
                                     StepStrategy strategy, const DecodeConfig& cfg,
                                     const TokenSeq* source, Rng& rng,
                                     const std::vector<bool>* keep_pinned = nullptr);

struct DecodeResult {
  TokenSeq output;
  RevisionChain chain;  // x_T ... x_0 with the applied scripts
  double cum_logp = 0.0;
  double norm_score = 0.0;
};

DecodeResult decode(const TokenSeq* source, const Models& models, const InitSpec& init,
                    DecodeMethod method, const DecodeConfig& cfg, const Vocab& vocab, Rng& rng);

// Single-pass generation: one INSERT payload decoded from the null sequence.
TokenSeq ar_generate(const TokenSeq& source, const Models& models, const DecodeConfig& cfg,
                     std::size_t beam_width = 1);

// Samples from the smallest probability prefix whose mass reaches p
// (descending order, ties by lower index).
std::size_t nucleus_sample(std::span<const double> dist, double p, Rng& rng);

// Per-step styled diff: ANSI colors or plain [-..-] / {+..+} / {~..~} markers.
std::string render_trace(const RevisionChain& chain, const Vocab& vocab, bool color);

}  // namespace editdiff
