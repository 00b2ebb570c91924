#pragma once

#include <cstdint>
#include <vector>

#include "editdiff/scoring.hpp"
#include "editdiff/vocab.hpp"

namespace editdiff {

struct NeuralConfig {
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 32;
  std::size_t max_span_len = 16;
  std::uint64_t init_seed = 1;
};

// Named views into one flat parameter vector; gradient buffer is parallel.
class ParamStore {
 public:
  std::size_t add(std::size_t rows, std::size_t cols);
  void allocate_random(std::uint64_t seed, double scale);

  double* t(std::size_t id) { return theta_.data() + offsets_[id]; }
  const double* t(std::size_t id) const { return theta_.data() + offsets_[id]; }
  double* g(std::size_t id) { return grad_.data() + offsets_[id]; }

  std::vector<double>& theta() { return theta_; }
  const std::vector<double>& theta() const { return theta_; }
  std::vector<double>& grad() { return grad_; }
  void zero_grad();
  std::size_t size() const { return total_; }

 private:
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
  std::vector<double> theta_;
  std::vector<double> grad_;
};

// Windowed MLP tagger with dot-product attention over the source sequence and
// a handful of match indicator features.
class NeuralTagger final : public Tagger {
 public:
  NeuralTagger(std::size_t vocab_size, const NeuralConfig& cfg);

  std::vector<TagDist> score_tags(const TokenSeq& x, const TokenSeq* source) const override;
  std::size_t vocab_size() const override { return vocab_size_; }

  // Cross-entropy of the gold tags; accumulates parameter gradients.
  double loss_backward(const TokenSeq& x, const TokenSeq* source,
                       const std::vector<EditTag>& gold);
  double loss(const TokenSeq& x, const TokenSeq* source, const std::vector<EditTag>& gold) const;

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const NeuralConfig& config() const { return cfg_; }

 private:
  struct SrcIndex;
  struct PosCache;
  void forward_pos(std::size_t i, const TokenSeq& x, const SrcIndex& src, PosCache& cache) const;
  void backward_pos(const SrcIndex& src, const PosCache& cache, const double* dlogits);

  std::size_t vocab_size_;
  NeuralConfig cfg_;
  ParamStore params_;
  std::size_t emb_, attn_q_, w1_, b1_, w2_, b2_;
  std::size_t in_dim_;
};

// Pointer-generator span model: source attention proposes copies, a gated
// softmax handles rewrites, and the edit-type embedding is summed into the
// last-context-token slot.
class NeuralGenerator final : public Generator {
 public:
  NeuralGenerator(std::size_t vocab_size, const NeuralConfig& cfg);

  Dist next_token_dist(const GenContext& ctx, const TokenSeq& prefix) const override;
  std::size_t vocab_size() const override { return vocab_size_; }
  std::size_t max_span_len() const override { return cfg_.max_span_len; }

  // Teacher-forced cross-entropy of payload + end-of-span; accumulates grads.
  double loss_backward(const GenContext& ctx, const TokenSeq& payload);
  double loss(const GenContext& ctx, const TokenSeq& payload) const;

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const NeuralConfig& config() const { return cfg_; }

 private:
  struct StepCache;
  void forward_step(const GenContext& ctx, const TokenSeq& prefix, StepCache& cache) const;
  void backward_step(const GenContext& ctx, const StepCache& cache, TokenId gold);

  std::size_t vocab_size_;
  NeuralConfig cfg_;
  ParamStore params_;
  std::size_t emb_, kind_emb_, ptr_q_, match1_, match2_, match_bos_, pos_prior_, w1_, b1_, w2_,
      b2_, gate_w_, gate_b_;
  std::size_t in_dim_;
};

}  // namespace editdiff
