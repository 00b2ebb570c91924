#pragma once

#include <cstdint>
#include <vector>

#include "editdiff/scoring.hpp"
#include "editdiff/vocab.hpp"

namespace editdiff {

struct NGramConfig {
  std::size_t max_span_len = 16;
  double pointer_hit = 0.9;  // mass on the pointer's proposed token
  double count_smoothing = 0.2;
};

// Log-linear per-position tagger over hand features plus per-token weights.
// No gradient machinery: plain SGD on the cross-entropy of the closed-form
// log-linear gradient.
class LogLinearTagger final : public Tagger {
 public:
  explicit LogLinearTagger(std::size_t vocab_size);

  std::vector<TagDist> score_tags(const TokenSeq& x, const TokenSeq* source) const override;
  std::size_t vocab_size() const override { return vocab_size_; }

  // One SGD step over every position of the example; returns the example loss.
  double sgd_step(const TokenSeq& x, const TokenSeq* source, const std::vector<EditTag>& gold,
                  double lr);

  std::vector<double>& weights() { return w_; }
  const std::vector<double>& weights() const { return w_; }

 private:
  TagDist score_pos(std::size_t i, const TokenSeq& x, const TokenSeq* source,
                    double* feat_out) const;

  std::size_t vocab_size_;
  std::vector<double> w_;  // [4 x NF] feature weights then [4 x V] token weights
};

// Interpolated span generator: source-pointer, aligned-rewrite, bigram and
// unigram components mixed with EM-trained weights.
class NGramGenerator final : public Generator {
 public:
  NGramGenerator(std::size_t vocab_size, const NGramConfig& cfg);

  Dist next_token_dist(const GenContext& ctx, const TokenSeq& prefix) const override;
  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t max_span_len() const override { return cfg_.max_span_len; }

  // Count accumulation for one gold span (teacher forced).
  void observe(const GenContext& ctx, const TokenSeq& payload);
  // Collects per-component probabilities at the gold token for EM fitting.
  void observe_dev(const GenContext& ctx, const TokenSeq& payload);
  // Fits interpolation weights on the collected dev events.
  void fit_interpolation(int iterations = 50);

  std::vector<double>& table() { return table_; }
  const std::vector<double>& table() const { return table_; }

 private:
  struct Components {
    double ptr = 0, rw = 0, bi = 0, uni = 0;
    bool ptr_active = false, rw_active = false;
  };
  Components components_at(const GenContext& ctx, const TokenSeq& prefix, TokenId v) const;
  Dist mix(const GenContext& ctx, const TokenSeq& prefix) const;

  double* uni_() { return table_.data(); }
  double* bi_() { return table_.data() + vocab_size_; }
  double* rw_() { return table_.data() + vocab_size_ + vocab_size_ * vocab_size_; }
  double* lambda_() { return table_.data() + vocab_size_ + 2 * vocab_size_ * vocab_size_; }
  const double* uni_() const { return table_.data(); }
  const double* bi_() const { return table_.data() + vocab_size_; }
  const double* rw_() const { return table_.data() + vocab_size_ + vocab_size_ * vocab_size_; }
  const double* lambda_() const {
    return table_.data() + vocab_size_ + 2 * vocab_size_ * vocab_size_;
  }

  std::size_t vocab_size_;
  NGramConfig cfg_;
  // uni[V] | bi[V*V] | rw[V*V] | lambda[4]
  std::vector<double> table_;
  std::vector<std::array<double, 6>> dev_events_;  // ptr, rw, bi, uni, ptr_active, rw_active
};

// Pointer proposal shared by generation and tests: index of the source token
// the span should continue with, or -1 when no anchor matches.
long pointer_next_source_index(const TokenSeq& source, TokenId t1, TokenId t2);

}  // namespace editdiff
