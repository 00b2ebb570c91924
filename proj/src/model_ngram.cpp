#include "editdiff/model_ngram.hpp"

#include <cmath>
#include <unordered_set>

#include "editdiff/errors.hpp"

namespace editdiff {

namespace {

constexpr std::size_t kFeatCount = 11;

inline std::uint64_t bigram_key(TokenId a, TokenId b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

void fill_features(std::size_t i, const TokenSeq& x, const TokenSeq* source, double* f) {
  const std::size_t n = x.size();
  const TokenId c = i >= 1 ? x[i - 1] : Vocab::kBos;
  const TokenId l = i >= 2 ? x[i - 2] : Vocab::kBos;
  const TokenId r = i < n ? x[i] : Vocab::kEos;
  const bool has_src = source != nullptr && !source->empty();

  std::unordered_set<TokenId> toks;
  std::unordered_set<std::uint64_t> bis;
  if (has_src) {
    toks.insert(source->begin(), source->end());
    for (std::size_t j = 1; j < source->size(); ++j)
      bis.insert(bigram_key((*source)[j - 1], (*source)[j]));
  }
  auto in_src = [&](TokenId t) { return has_src && toks.count(t) ? 1.0 : 0.0; };
  auto bi_src = [&](TokenId a, TokenId b) {
    return has_src && bis.count(bigram_key(a, b)) ? 1.0 : 0.0;
  };

  f[0] = in_src(c);
  f[1] = in_src(l);
  f[2] = in_src(r);
  f[3] = bi_src(l, c);
  f[4] = bi_src(c, r);
  f[5] = i == 0 ? 1.0 : 0.0;
  f[6] = i == n ? 1.0 : 0.0;
  f[7] = c == r ? 1.0 : 0.0;
  f[8] = has_src ? 1.0 : 0.0;
  f[9] = has_src
             ? std::min(2.0, static_cast<double>(n) / std::max<std::size_t>(1, source->size()))
             : 0.0;
  f[10] = static_cast<double>(i) / static_cast<double>(n + 1);
}

}  // namespace

// ---------------------------------------------------------------------------
// LogLinearTagger

LogLinearTagger::LogLinearTagger(std::size_t vocab_size) : vocab_size_(vocab_size) {
  w_.assign(4 * kFeatCount + 4 * vocab_size_, 0.0);
}

TagDist LogLinearTagger::score_pos(std::size_t i, const TokenSeq& x, const TokenSeq* source,
                                   double* feat_out) const {
  double feats[kFeatCount];
  fill_features(i, x, source, feats);
  if (feat_out != nullptr)
    for (std::size_t f = 0; f < kFeatCount; ++f) feat_out[f] = feats[f];

  const TokenId c = i >= 1 ? x[i - 1] : Vocab::kBos;
  TagDist logits{};
  for (std::size_t t = 0; t < 4; ++t) {
    double acc = w_[4 * kFeatCount + t * vocab_size_ + c];
    for (std::size_t f = 0; f < kFeatCount; ++f) acc += w_[t * kFeatCount + f] * feats[f];
    logits[t] = acc;
  }
  double mx = std::max(std::max(logits[0], logits[1]), std::max(logits[2], logits[3]));
  double sum = 0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

std::vector<TagDist> LogLinearTagger::score_tags(const TokenSeq& x,
                                                 const TokenSeq* source) const {
  for (TokenId id : x)
    if (id >= vocab_size_) throw DataError("tagger: token id outside vocabulary");
  std::vector<TagDist> out(x.size() + 1);
  for (std::size_t i = 0; i <= x.size(); ++i) out[i] = score_pos(i, x, source, nullptr);
  return out;
}

double LogLinearTagger::sgd_step(const TokenSeq& x, const TokenSeq* source,
                                 const std::vector<EditTag>& gold, double lr) {
  if (gold.size() != x.size() + 1) throw InternalError("log-linear tagger: gold length mismatch");
  double loss = 0;
  for (std::size_t i = 0; i <= x.size(); ++i) {
    double feats[kFeatCount];
    TagDist p = score_pos(i, x, source, feats);
    const auto g = static_cast<std::size_t>(gold[i]);
    loss -= std::log(std::max(p[g], 1e-300));
    const TokenId c = i >= 1 ? x[i - 1] : Vocab::kBos;
    for (std::size_t t = 0; t < 4; ++t) {
      const double err = p[t] - (t == g ? 1.0 : 0.0);
      for (std::size_t f = 0; f < kFeatCount; ++f) w_[t * kFeatCount + f] -= lr * err * feats[f];
      w_[4 * kFeatCount + t * vocab_size_ + c] -= lr * err;
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// NGramGenerator

long pointer_next_source_index(const TokenSeq& source, TokenId t1, TokenId t2) {
  if (source.empty()) return -2;  // no anchor possible
  if (t1 == Vocab::kBos) return -1;  // continue from the source start
  long best = -2;
  int best_score = 0;
  for (std::size_t j = 0; j < source.size(); ++j) {
    if (source[j] != t1) continue;
    int score = 1 + (j >= 1 && source[j - 1] == t2 ? 1 : 0);
    if (score > best_score) {
      best_score = score;
      best = static_cast<long>(j);
    }
  }
  return best;
}

NGramGenerator::NGramGenerator(std::size_t vocab_size, const NGramConfig& cfg)
    : vocab_size_(vocab_size), cfg_(cfg) {
  table_.assign(vocab_size_ + 2 * vocab_size_ * vocab_size_ + 4, 0.0);
  double* l = lambda_();
  l[0] = 0.4;  // pointer
  l[1] = 0.2;  // aligned rewrite
  l[2] = 0.25; // bigram
  l[3] = 0.15; // unigram
}

NGramGenerator::Components NGramGenerator::components_at(const GenContext& ctx,
                                                         const TokenSeq& prefix, TokenId v) const {
  const TokenSeq& base = *ctx.base;
  const TokenSeq& left = *ctx.left_output;
  const std::size_t total = left.size() + prefix.size();
  auto pick = [&](std::size_t k) { return k < left.size() ? left[k] : prefix[k - left.size()]; };
  const TokenId t1 = total >= 1 ? pick(total - 1) : Vocab::kBos;
  const TokenId t2 = total >= 2 ? pick(total - 2) : Vocab::kBos;
  const TokenId rt = ctx.span_end < base.size() ? base[ctx.span_end] : Vocab::kEos;
  const double V = static_cast<double>(vocab_size_);
  const double eps = cfg_.count_smoothing;

  Components out;

  // Pointer: continue the best source match of the recent context; close the
  // span once the proposal reaches the right context or the source end.
  if (ctx.source != nullptr && !ctx.source->empty()) {
    out.ptr_active = true;
    const TokenSeq& s = *ctx.source;
    long j = pointer_next_source_index(s, t1, t2);
    const double miss = (1.0 - cfg_.pointer_hit) / V;
    if (j == -2) {
      out.ptr = 1.0 / V;
    } else {
      const std::size_t next_idx = static_cast<std::size_t>(j + 1);
      TokenId proposal =
          next_idx < s.size() ? s[next_idx] : static_cast<TokenId>(Vocab::kEndOfSpan);
      if (proposal == rt) proposal = Vocab::kEndOfSpan;
      out.ptr = miss + (v == proposal ? cfg_.pointer_hit : 0.0);
    }
  }

  // Aligned rewrite: old span token at this payload offset predicts the new one.
  const std::size_t span_len = ctx.span_end - ctx.span_begin;
  if (ctx.kind == EditTag::kReplace && prefix.size() < span_len) {
    out.rw_active = true;
    const TokenId old = base[ctx.span_begin + prefix.size()];
    const double* row = rw_() + static_cast<std::size_t>(old) * vocab_size_;
    double total_row = 0;
    for (std::size_t k = 0; k < vocab_size_; ++k) total_row += row[k];
    out.rw = (row[v] + eps) / (total_row + eps * V);
  }

  const double* brow = bi_() + static_cast<std::size_t>(t1) * vocab_size_;
  double btotal = 0;
  for (std::size_t k = 0; k < vocab_size_; ++k) btotal += brow[k];
  out.bi = (brow[v] + eps) / (btotal + eps * V);

  const double* u = uni_();
  double utotal = 0;
  for (std::size_t k = 0; k < vocab_size_; ++k) utotal += u[k];
  out.uni = (u[v] + eps) / (utotal + eps * V);

  return out;
}

Dist NGramGenerator::mix(const GenContext& ctx, const TokenSeq& prefix) const {
  Dist p(vocab_size_, 0.0);
  const double* l = lambda_();
  // Activity is v-independent; probe once.
  Components probe = components_at(ctx, prefix, 0);
  double denom = l[2] + l[3] + (probe.ptr_active ? l[0] : 0.0) + (probe.rw_active ? l[1] : 0.0);
  for (TokenId v = 0; v < vocab_size_; ++v) {
    Components c = components_at(ctx, prefix, v);
    double acc = l[2] * c.bi + l[3] * c.uni;
    if (c.ptr_active) acc += l[0] * c.ptr;
    if (c.rw_active) acc += l[1] * c.rw;
    p[v] = acc / denom;
  }
  return p;
}

Dist NGramGenerator::next_token_dist(const GenContext& ctx, const TokenSeq& prefix) const {
  if (ctx.base == nullptr || ctx.left_output == nullptr)
    throw InternalError("generator: missing context");
  if (prefix.size() >= cfg_.max_span_len) {
    Dist p(vocab_size_, 0.0);
    p[Vocab::kEndOfSpan] = 1.0;
    return p;
  }
  return mix(ctx, prefix);
}

void NGramGenerator::observe(const GenContext& ctx, const TokenSeq& payload) {
  const TokenSeq& base = *ctx.base;
  const TokenSeq& left = *ctx.left_output;
  const std::size_t span_len = ctx.span_end - ctx.span_begin;
  for (std::size_t k = 0; k <= payload.size(); ++k) {
    const TokenId gold = k < payload.size() ? payload[k] : Vocab::kEndOfSpan;
    const std::size_t total = left.size() + k;
    auto pick = [&](std::size_t q) {
      return q < left.size() ? left[q] : payload[q - left.size()];
    };
    const TokenId t1 = total >= 1 ? pick(total - 1) : Vocab::kBos;
    uni_()[gold] += 1.0;
    bi_()[static_cast<std::size_t>(t1) * vocab_size_ + gold] += 1.0;
    if (ctx.kind == EditTag::kReplace && k < span_len) {
      const TokenId old = base[ctx.span_begin + k];
      rw_()[static_cast<std::size_t>(old) * vocab_size_ + gold] += 1.0;
    }
  }
}

void NGramGenerator::observe_dev(const GenContext& ctx, const TokenSeq& payload) {
  TokenSeq prefix;
  for (std::size_t k = 0; k <= payload.size(); ++k) {
    const TokenId gold = k < payload.size() ? payload[k] : Vocab::kEndOfSpan;
    Components c = components_at(ctx, prefix, gold);
    dev_events_.push_back({c.ptr, c.rw, c.bi, c.uni, c.ptr_active ? 1.0 : 0.0,
                           c.rw_active ? 1.0 : 0.0});
    if (k < payload.size()) prefix.push_back(payload[k]);
  }
}

void NGramGenerator::fit_interpolation(int iterations) {
  if (dev_events_.empty()) return;
  double* l = lambda_();
  for (int it = 0; it < iterations; ++it) {
    double resp[4] = {0, 0, 0, 0};
    double norm = 0;
    for (const auto& e : dev_events_) {
      const bool pa = e[4] > 0.5, ra = e[5] > 0.5;
      double weights[4] = {pa ? l[0] : 0.0, ra ? l[1] : 0.0, l[2], l[3]};
      double wsum = weights[0] + weights[1] + weights[2] + weights[3];
      double probs[4] = {e[0], e[1], e[2], e[3]};
      double mixp = 0;
      for (int k = 0; k < 4; ++k) mixp += weights[k] / wsum * probs[k];
      if (!(mixp > 0)) continue;
      for (int k = 0; k < 4; ++k) resp[k] += (weights[k] / wsum * probs[k]) / mixp;
      norm += 1.0;
    }
    if (norm == 0) return;
    double total = 0;
    for (int k = 0; k < 4; ++k) total += resp[k];
    for (int k = 0; k < 4; ++k) l[k] = std::max(1e-4, resp[k] / total);
  }
  dev_events_.clear();
}

}  // namespace editdiff
