#pragma once

#include <array>
#include <limits>
#include <vector>

#include "editdiff/chain.hpp"
#include "editdiff/edit_script.hpp"
#include "editdiff/vocab.hpp"

namespace editdiff {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Dist = std::vector<double>;
// Indexed by EditTag (KEEP, DELETE, REPLACE, INSERT).
using TagDist = std::array<double, 4>;

// Context for generating one INSERT/REPLACE span. `base` is x_t with
// DELETE-tagged tokens removed (REPLACE spans still present); the old span
// occupies [span_begin, span_end) in base (begin == end for INSERT gaps).
// `left_output` holds the output tokens already emitted left of the span.
struct GenContext {
  const TokenSeq* base = nullptr;
  std::size_t span_begin = 0;
  std::size_t span_end = 0;
  EditTag kind = EditTag::kInsert;
  const TokenSeq* left_output = nullptr;
  const TokenSeq* source = nullptr;  // optional conditioning
};

// Per-position edit-type scorer. Output length is len(x) + 1: index 0 is the
// leading insertion gap, index i >= 1 tags token x[i-1]. Every distribution
// sums to 1 within 1e-6.
class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual std::vector<TagDist> score_tags(const TokenSeq& x, const TokenSeq* source) const = 0;
  virtual std::size_t vocab_size() const = 0;
};

// Autoregressive span generator. Distributions cover the full vocabulary;
// Vocab::kEndOfSpan terminates the span. Once the prefix reaches
// max_span_len the distribution collapses to a point mass on kEndOfSpan.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual Dist next_token_dist(const GenContext& ctx, const TokenSeq& prefix) const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::size_t max_span_len() const = 0;
};

// A tag assignment over x decomposed into the output-order walk the generator
// follows: kept tokens interleaved with generation slots.
struct StepPlan {
  struct Piece {
    bool is_slot = false;
    TokenId token = 0;      // valid when !is_slot
    std::size_t slot = 0;   // valid when is_slot
  };
  struct Slot {
    EditTag kind = EditTag::kInsert;  // kInsert or kReplace
    std::size_t begin = 0, end = 0;   // old-span bounds in base
    std::size_t tag_pos = 0;          // originating tag position (payload key)
  };

  TokenSeq base;  // x minus DELETE-tagged tokens
  std::vector<Piece> pieces;
  std::vector<Slot> slots;
};

StepPlan plan_step(const TokenSeq& x, const std::vector<EditTag>& tags);

// Log-probability of one denoising step decomposed into its two factors.
struct StepLogLik {
  double tag_term = 0.0;
  double gen_term = 0.0;
  double total() const { return tag_term + gen_term; }
};

// Teacher-forced log-probability of a payload in a span context; kNegInf when
// any factor has zero probability.
double payload_log_prob(const Generator& gen, const GenContext& ctx, const TokenSeq& payload);

// Scores the script's expanded tags under the tagger plus every payload under
// the generator. The script is canonicalized first so any valid script is
// scorable. Throws DataError on vocab or length mismatches.
StepLogLik step_log_likelihood(const TokenSeq& x_t, const EditScript& script, const Tagger& tagger,
                               const Generator& gen, const TokenSeq* source = nullptr);

// Sum of step log-likelihoods along the chain; -inf when any step has zero
// probability.
double chain_log_likelihood(const RevisionChain& chain, const Tagger& tagger, const Generator& gen,
                            const TokenSeq* source = nullptr);

}  // namespace editdiff
