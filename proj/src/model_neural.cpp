#include "editdiff/model_neural.hpp"

#include <cmath>
#include <cstring>
#include <unordered_set>

#include "editdiff/errors.hpp"
#include "editdiff/rand.hpp"

namespace editdiff {

namespace {

constexpr std::size_t kTagFeatCount = 14;
constexpr std::size_t kGenFeatCount = 7;
constexpr double kAlignBumpWidth = 1.0;

void softmax_inplace(std::vector<double>& v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double sum = 0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

inline std::uint64_t bigram_key(TokenId a, TokenId b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

// ---------------------------------------------------------------------------
// ParamStore

std::size_t ParamStore::add(std::size_t rows, std::size_t cols) {
  offsets_.push_back(total_);
  total_ += rows * cols;
  return offsets_.size() - 1;
}

void ParamStore::allocate_random(std::uint64_t seed, double scale) {
  theta_.resize(total_);
  grad_.assign(total_, 0.0);
  Rng rng(splitmix64(seed));
  for (double& w : theta_) w = scale * (2.0 * rand_unit(rng) - 1.0);
}

void ParamStore::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

// ---------------------------------------------------------------------------
// NeuralTagger

struct NeuralTagger::SrcIndex {
  const TokenSeq* src = nullptr;
  std::unordered_set<TokenId> tokens;
  std::unordered_set<std::uint64_t> bigrams;

  explicit SrcIndex(const TokenSeq* s) {
    if (s == nullptr || s->empty()) return;
    src = s;
    tokens.insert(s->begin(), s->end());
    for (std::size_t j = 1; j < s->size(); ++j) bigrams.insert(bigram_key((*s)[j - 1], (*s)[j]));
  }
  bool has() const { return src != nullptr; }
  double tok(TokenId t) const { return has() && tokens.count(t) ? 1.0 : 0.0; }
  double bi(TokenId a, TokenId b) const {
    return has() && bigrams.count(bigram_key(a, b)) ? 1.0 : 0.0;
  }
  // Position-aligned match against the source, exact and within a +-1 window.
  double aligned(TokenId t, std::size_t pos) const {
    return has() && pos < src->size() && (*src)[pos] == t ? 1.0 : 0.0;
  }
  double near(TokenId t, std::size_t pos) const {
    if (!has()) return 0.0;
    for (std::size_t j = pos > 0 ? pos - 1 : 0; j <= pos + 1 && j < src->size(); ++j)
      if ((*src)[j] == t) return 1.0;
    return 0.0;
  }
  double overlap(const TokenSeq& x) const {
    if (!has() || x.empty()) return 0.0;
    std::size_t hits = 0;
    for (TokenId t : x)
      if (tokens.count(t)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(x.size());
  }
};

struct NeuralTagger::PosCache {
  std::size_t i = 0, n = 0;
  TokenId c = 0, l = 0, r = 0;
  std::vector<double> h0, h1, p;
  std::vector<double> q, alpha;
};

NeuralTagger::NeuralTagger(std::size_t vocab_size, const NeuralConfig& cfg)
    : vocab_size_(vocab_size), cfg_(cfg) {
  const std::size_t d = cfg_.embed_dim, h = cfg_.hidden_dim;
  in_dim_ = 4 * d + kTagFeatCount;
  emb_ = params_.add(vocab_size_, d);
  attn_q_ = params_.add(d, d);
  w1_ = params_.add(h, in_dim_);
  b1_ = params_.add(h, 1);
  w2_ = params_.add(4, h);
  b2_ = params_.add(4, 1);
  params_.allocate_random(cfg_.init_seed * 2 + 1, 0.08);
}

void NeuralTagger::forward_pos(std::size_t i, const TokenSeq& x, const SrcIndex& src,
                               PosCache& cache) const {
  const std::size_t d = cfg_.embed_dim, h = cfg_.hidden_dim;
  const std::size_t n = x.size();
  cache.i = i;
  cache.n = n;
  cache.c = i >= 1 ? x[i - 1] : Vocab::kBos;
  cache.l = i >= 2 ? x[i - 2] : Vocab::kBos;
  cache.r = i < n ? x[i] : Vocab::kEos;

  const double* E = params_.t(emb_);
  const double* ec = E + cache.c * d;
  const double* el = E + cache.l * d;
  const double* er = E + cache.r * d;

  cache.h0.assign(in_dim_, 0.0);
  double* h0 = cache.h0.data();
  std::memcpy(h0, el, d * sizeof(double));
  std::memcpy(h0 + d, ec, d * sizeof(double));
  std::memcpy(h0 + 2 * d, er, d * sizeof(double));

  // Source attention keyed by the center token.
  cache.alpha.clear();
  if (src.has()) {
    const TokenSeq& s = *src.src;
    const std::size_t m = s.size();
    const double* Aq = params_.t(attn_q_);
    cache.q.assign(d, 0.0);
    for (std::size_t a = 0; a < d; ++a) {
      double acc = 0;
      for (std::size_t b = 0; b < d; ++b) acc += Aq[a * d + b] * ec[b];
      cache.q[a] = acc;
    }
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    cache.alpha.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double* es = E + s[j] * d;
      double acc = 0;
      for (std::size_t a = 0; a < d; ++a) acc += cache.q[a] * es[a];
      cache.alpha[j] = acc * inv_sqrt_d;
    }
    softmax_inplace(cache.alpha);
    for (std::size_t j = 0; j < m; ++j) {
      const double* es = E + s[j] * d;
      for (std::size_t a = 0; a < d; ++a) h0[3 * d + a] += cache.alpha[j] * es[a];
    }
  }

  const std::size_t m = src.has() ? src.src->size() : 0;
  double* f = h0 + 4 * d;
  f[0] = src.tok(cache.c);
  f[1] = src.tok(cache.l);
  f[2] = src.tok(cache.r);
  f[3] = src.bi(cache.l, cache.c);
  f[4] = src.bi(cache.c, cache.r);
  f[5] = i == 0 ? 1.0 : 0.0;
  f[6] = i == n ? 1.0 : 0.0;
  f[7] = cache.c == cache.r ? 1.0 : 0.0;
  f[8] = src.has() ? 1.0 : 0.0;
  f[9] = src.has() ? std::min(2.0, static_cast<double>(n) / std::max<std::size_t>(1, m)) : 0.0;
  f[10] = static_cast<double>(i) / static_cast<double>(n + 1);
  f[11] = i >= 1 ? src.aligned(cache.c, i - 1) : 0.0;
  f[12] = i >= 1 ? src.near(cache.c, i - 1) : 0.0;
  f[13] = src.overlap(x);

  const double* W1 = params_.t(w1_);
  const double* B1 = params_.t(b1_);
  cache.h1.assign(h, 0.0);
  for (std::size_t k = 0; k < h; ++k) {
    double acc = B1[k];
    const double* row = W1 + k * in_dim_;
    for (std::size_t j = 0; j < in_dim_; ++j) acc += row[j] * h0[j];
    cache.h1[k] = std::tanh(acc);
  }

  const double* W2 = params_.t(w2_);
  const double* B2 = params_.t(b2_);
  cache.p.assign(4, 0.0);
  for (std::size_t t = 0; t < 4; ++t) {
    double acc = B2[t];
    const double* row = W2 + t * h;
    for (std::size_t k = 0; k < h; ++k) acc += row[k] * cache.h1[k];
    cache.p[t] = acc;
  }
  softmax_inplace(cache.p);
}

void NeuralTagger::backward_pos(const SrcIndex& src, const PosCache& cache,
                                const double* dlogits) {
  const std::size_t d = cfg_.embed_dim, h = cfg_.hidden_dim;
  double* gW2 = params_.g(w2_);
  double* gB2 = params_.g(b2_);
  const double* W2 = params_.t(w2_);

  std::vector<double> dh1(h, 0.0);
  for (std::size_t t = 0; t < 4; ++t) {
    gB2[t] += dlogits[t];
    for (std::size_t k = 0; k < h; ++k) {
      gW2[t * h + k] += dlogits[t] * cache.h1[k];
      dh1[k] += W2[t * h + k] * dlogits[t];
    }
  }

  const double* W1 = params_.t(w1_);
  double* gW1 = params_.g(w1_);
  double* gB1 = params_.g(b1_);
  std::vector<double> dh0(in_dim_, 0.0);
  for (std::size_t k = 0; k < h; ++k) {
    const double dpre = dh1[k] * (1.0 - cache.h1[k] * cache.h1[k]);
    gB1[k] += dpre;
    const double* row = W1 + k * in_dim_;
    double* grow = gW1 + k * in_dim_;
    for (std::size_t j = 0; j < in_dim_; ++j) {
      grow[j] += dpre * cache.h0[j];
      dh0[j] += row[j] * dpre;
    }
  }

  double* gE = params_.g(emb_);
  const double* E = params_.t(emb_);
  for (std::size_t a = 0; a < d; ++a) {
    gE[cache.l * d + a] += dh0[a];
    gE[cache.c * d + a] += dh0[d + a];
    gE[cache.r * d + a] += dh0[2 * d + a];
  }

  if (src.has()) {
    const TokenSeq& s = *src.src;
    const std::size_t m = s.size();
    const double* datt = dh0.data() + 3 * d;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    std::vector<double> dalpha(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double* es = E + s[j] * d;
      double acc = 0;
      for (std::size_t a = 0; a < d; ++a) {
        acc += datt[a] * es[a];
        gE[s[j] * d + a] += cache.alpha[j] * datt[a];
      }
      dalpha[j] = acc;
    }
    double mix = 0;
    for (std::size_t j = 0; j < m; ++j) mix += cache.alpha[j] * dalpha[j];
    std::vector<double> dq(d, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double dscore = cache.alpha[j] * (dalpha[j] - mix) * inv_sqrt_d;
      const double* es = E + s[j] * d;
      for (std::size_t a = 0; a < d; ++a) {
        dq[a] += dscore * es[a];
        gE[s[j] * d + a] += dscore * cache.q[a];
      }
    }
    double* gAq = params_.g(attn_q_);
    const double* Aq = params_.t(attn_q_);
    const double* ec = E + cache.c * d;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) {
        gAq[a * d + b] += dq[a] * ec[b];
        gE[cache.c * d + b] += Aq[a * d + b] * dq[a];
      }
  }
}

std::vector<TagDist> NeuralTagger::score_tags(const TokenSeq& x, const TokenSeq* source) const {
  for (TokenId id : x)
    if (id >= vocab_size_) throw DataError("tagger: token id outside vocabulary");
  SrcIndex src(source);
  std::vector<TagDist> out(x.size() + 1);
  PosCache cache;
  for (std::size_t i = 0; i <= x.size(); ++i) {
    forward_pos(i, x, src, cache);
    for (std::size_t t = 0; t < 4; ++t) out[i][t] = cache.p[t];
  }
  return out;
}

double NeuralTagger::loss_backward(const TokenSeq& x, const TokenSeq* source,
                                   const std::vector<EditTag>& gold) {
  if (gold.size() != x.size() + 1) throw InternalError("tagger loss: gold length mismatch");
  SrcIndex src(source);
  PosCache cache;
  double loss = 0;
  for (std::size_t i = 0; i <= x.size(); ++i) {
    forward_pos(i, x, src, cache);
    const auto g = static_cast<std::size_t>(gold[i]);
    loss -= std::log(std::max(cache.p[g], 1e-300));
    double dlogits[4];
    for (std::size_t t = 0; t < 4; ++t) dlogits[t] = cache.p[t] - (t == g ? 1.0 : 0.0);
    backward_pos(src, cache, dlogits);
  }
  return loss;
}

double NeuralTagger::loss(const TokenSeq& x, const TokenSeq* source,
                          const std::vector<EditTag>& gold) const {
  if (gold.size() != x.size() + 1) throw InternalError("tagger loss: gold length mismatch");
  SrcIndex src(source);
  PosCache cache;
  double loss = 0;
  for (std::size_t i = 0; i <= x.size(); ++i) {
    forward_pos(i, x, src, cache);
    loss -= std::log(std::max(cache.p[static_cast<std::size_t>(gold[i])], 1e-300));
  }
  return loss;
}

// ---------------------------------------------------------------------------
// NeuralGenerator

struct NeuralGenerator::StepCache {
  bool forced_eos = false;
  TokenId t1 = 0, t2 = 0, rt = 0;
  bool has_src = false;
  std::size_t m = 0;
  std::size_t span_len = 0;
  std::vector<double> h0, h1, z, pg, p;
  std::vector<double> q, alpha, att, r_att, pos_bump;
  std::vector<TokenId> succ;
  double gate_pre = 0, g = 0, succ_feat = 0;
};

NeuralGenerator::NeuralGenerator(std::size_t vocab_size, const NeuralConfig& cfg)
    : vocab_size_(vocab_size), cfg_(cfg) {
  const std::size_t d = cfg_.embed_dim, h = cfg_.hidden_dim;
  in_dim_ = 6 * d + kGenFeatCount;
  emb_ = params_.add(vocab_size_, d);
  kind_emb_ = params_.add(2, d);
  ptr_q_ = params_.add(d, d);
  match1_ = params_.add(1, 1);
  match2_ = params_.add(1, 1);
  match_bos_ = params_.add(1, 1);
  pos_prior_ = params_.add(1, 1);
  w1_ = params_.add(h, in_dim_);
  b1_ = params_.add(h, 1);
  w2_ = params_.add(vocab_size_, h);
  b2_ = params_.add(vocab_size_, 1);
  gate_w_ = params_.add(1, h);
  gate_b_ = params_.add(1, 1);
  params_.allocate_random(cfg_.init_seed * 2 + 2, 0.08);
}

void NeuralGenerator::forward_step(const GenContext& ctx, const TokenSeq& prefix,
                                   StepCache& cache) const {
  const std::size_t d = cfg_.embed_dim, h = cfg_.hidden_dim;

  if (prefix.size() >= cfg_.max_span_len) {
    cache.forced_eos = true;
    cache.p.assign(vocab_size_, 0.0);
    cache.p[Vocab::kEndOfSpan] = 1.0;
    return;
  }
  cache.forced_eos = false;

  const TokenSeq& base = *ctx.base;
  const TokenSeq& left = *ctx.left_output;
  const std::size_t total = left.size() + prefix.size();
  auto pick = [&](std::size_t k) { return k < left.size() ? left[k] : prefix[k - left.size()]; };
  cache.t1 = total >= 1 ? pick(total - 1) : Vocab::kBos;
  cache.t2 = total >= 2 ? pick(total - 2) : Vocab::kBos;
  cache.rt = ctx.span_end < base.size() ? base[ctx.span_end] : Vocab::kEos;
  cache.span_len = ctx.span_end - ctx.span_begin;
  cache.has_src = ctx.source != nullptr && !ctx.source->empty();
  cache.m = cache.has_src ? ctx.source->size() : 0;

  const double* E = params_.t(emb_);
  const double* kind = params_.t(kind_emb_) + (ctx.kind == EditTag::kInsert ? 0 : 1) * d;

  cache.h0.assign(in_dim_, 0.0);
  double* h0 = cache.h0.data();
  for (std::size_t a = 0; a < d; ++a) h0[a] = E[cache.t1 * d + a] + kind[a];
  std::memcpy(h0 + d, E + cache.t2 * d, d * sizeof(double));
  std::memcpy(h0 + 2 * d, E + cache.rt * d, d * sizeof(double));
  if (cache.span_len > 0) {
    for (std::size_t j = ctx.span_begin; j < ctx.span_end; ++j)
      for (std::size_t a = 0; a < d; ++a) h0[3 * d + a] += E[base[j] * d + a];
    for (std::size_t a = 0; a < d; ++a) h0[3 * d + a] /= static_cast<double>(cache.span_len);
  }

  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  cache.alpha.clear();
  cache.succ.clear();
  if (cache.has_src) {
    const TokenSeq& s = *ctx.source;
    const double* Pq = params_.t(ptr_q_);
    cache.q.assign(d, 0.0);
    const double* et1 = E + cache.t1 * d;
    for (std::size_t a = 0; a < d; ++a) {
      double acc = 0;
      for (std::size_t b = 0; b < d; ++b) acc += Pq[a * d + b] * et1[b];
      cache.q[a] = acc;
    }
    const double m1 = *params_.t(match1_);
    const double m2 = *params_.t(match2_);
    const double mb = *params_.t(match_bos_);
    const double wpos = *params_.t(pos_prior_);
    const double expected = static_cast<double>(total);
    cache.pos_bump.assign(cache.m, 0.0);
    cache.alpha.assign(cache.m, 0.0);
    cache.succ.assign(cache.m, 0);
    for (std::size_t j = 0; j < cache.m; ++j) {
      const double* es = E + s[j] * d;
      double acc = 0;
      for (std::size_t a = 0; a < d; ++a) acc += cache.q[a] * es[a];
      acc *= inv_sqrt_d;
      if (j >= 1 && s[j - 1] == cache.t1) acc += m1;
      if (j >= 2 && s[j - 2] == cache.t2) acc += m2;
      if (j == 0 && cache.t1 == Vocab::kBos) acc += mb;
      // Monotone alignment prior: the next emission usually continues near
      // the current absolute output position.
      cache.pos_bump[j] =
          kAlignBumpWidth / (kAlignBumpWidth + std::abs(static_cast<double>(j) - expected));
      acc += wpos * cache.pos_bump[j];
      cache.alpha[j] = acc;
      cache.succ[j] = j + 1 < cache.m ? s[j + 1] : Vocab::kEos;
    }
    softmax_inplace(cache.alpha);
    cache.att.assign(d, 0.0);
    cache.r_att.assign(d, 0.0);
    for (std::size_t j = 0; j < cache.m; ++j) {
      const double* es = E + s[j] * d;
      const double* esucc = E + cache.succ[j] * d;
      for (std::size_t a = 0; a < d; ++a) {
        cache.att[a] += cache.alpha[j] * es[a];
        cache.r_att[a] += cache.alpha[j] * esucc[a];
      }
    }
    std::memcpy(h0 + 4 * d, cache.att.data(), d * sizeof(double));
    std::memcpy(h0 + 5 * d, cache.r_att.data(), d * sizeof(double));
    double succ_feat = 0;
    const double* ert = E + cache.rt * d;
    for (std::size_t a = 0; a < d; ++a) succ_feat += cache.r_att[a] * ert[a];
    cache.succ_feat = succ_feat * inv_sqrt_d;
  } else {
    cache.succ_feat = 0;
  }

  const double span_cap = static_cast<double>(cfg_.max_span_len);
  double* f = h0 + 6 * d;
  f[0] = static_cast<double>(prefix.size()) / span_cap;
  f[1] = static_cast<double>(cache.span_len) / span_cap;
  f[2] = (static_cast<double>(cache.span_len) - static_cast<double>(prefix.size())) / span_cap;
  f[3] = ctx.kind == EditTag::kInsert ? 1.0 : 0.0;
  f[4] = cache.has_src ? 1.0 : 0.0;
  f[5] = cache.rt == Vocab::kEos ? 1.0 : 0.0;
  f[6] = cache.succ_feat;

  const double* W1 = params_.t(w1_);
  const double* B1 = params_.t(b1_);
  cache.h1.assign(h, 0.0);
  for (std::size_t k = 0; k < h; ++k) {
    double acc = B1[k];
    const double* row = W1 + k * in_dim_;
    for (std::size_t j = 0; j < in_dim_; ++j) acc += row[j] * h0[j];
    cache.h1[k] = std::tanh(acc);
  }

  const double* W2 = params_.t(w2_);
  const double* B2 = params_.t(b2_);
  cache.z.assign(vocab_size_, 0.0);
  for (std::size_t v = 0; v < vocab_size_; ++v) {
    double acc = B2[v];
    const double* row = W2 + v * h;
    for (std::size_t k = 0; k < h; ++k) acc += row[k] * cache.h1[k];
    cache.z[v] = acc;
  }
  cache.pg = cache.z;
  softmax_inplace(cache.pg);

  if (cache.has_src) {
    const double* Gw = params_.t(gate_w_);
    double acc = *params_.t(gate_b_);
    for (std::size_t k = 0; k < h; ++k) acc += Gw[k] * cache.h1[k];
    cache.gate_pre = acc;
    cache.g = 1.0 / (1.0 + std::exp(-acc));
  } else {
    cache.gate_pre = 0;
    cache.g = 0;
  }

  cache.p.assign(vocab_size_, 0.0);
  for (std::size_t v = 0; v < vocab_size_; ++v) cache.p[v] = (1.0 - cache.g) * cache.pg[v];
  if (cache.has_src) {
    const TokenSeq& s = *ctx.source;
    for (std::size_t j = 0; j < cache.m; ++j) cache.p[s[j]] += cache.g * cache.alpha[j];
  }
}

void NeuralGenerator::backward_step(const GenContext& ctx, const StepCache& cache, TokenId gold) {
  if (cache.forced_eos) return;
  const std::size_t d = cfg_.embed_dim, h = cfg_.hidden_dim;
  const double* E = params_.t(emb_);
  double* gE = params_.g(emb_);

  const double dp_gold = -1.0 / std::max(cache.p[gold], 1e-300);

  // Copy mass at the gold token (zero without a source).
  double pcopy_gold = 0;
  if (cache.has_src) {
    const TokenSeq& s = *ctx.source;
    for (std::size_t j = 0; j < cache.m; ++j)
      if (s[j] == gold) pcopy_gold += cache.alpha[j];
  }

  const double dg = dp_gold * (pcopy_gold - cache.pg[gold]);
  const double dpg_gold = dp_gold * (1.0 - cache.g);
  const double dpcopy_gold = dp_gold * cache.g;

  // Softmax backward with the single nonzero upstream entry.
  std::vector<double> dz(vocab_size_, 0.0);
  const double inner = dpg_gold * cache.pg[gold];
  for (std::size_t v = 0; v < vocab_size_; ++v)
    dz[v] = cache.pg[v] * ((v == gold ? dpg_gold : 0.0) - inner);

  std::vector<double> dh1(h, 0.0);
  const double* W2 = params_.t(w2_);
  double* gW2 = params_.g(w2_);
  double* gB2 = params_.g(b2_);
  for (std::size_t v = 0; v < vocab_size_; ++v) {
    if (dz[v] == 0.0) continue;
    gB2[v] += dz[v];
    const double* row = W2 + v * h;
    double* grow = gW2 + v * h;
    for (std::size_t k = 0; k < h; ++k) {
      grow[k] += dz[v] * cache.h1[k];
      dh1[k] += row[k] * dz[v];
    }
  }

  if (cache.has_src) {
    const double dgate_pre = dg * cache.g * (1.0 - cache.g);
    double* gGw = params_.g(gate_w_);
    const double* Gw = params_.t(gate_w_);
    *params_.g(gate_b_) += dgate_pre;
    for (std::size_t k = 0; k < h; ++k) {
      gGw[k] += dgate_pre * cache.h1[k];
      dh1[k] += Gw[k] * dgate_pre;
    }
  }

  const double* W1 = params_.t(w1_);
  double* gW1 = params_.g(w1_);
  double* gB1 = params_.g(b1_);
  std::vector<double> dh0(in_dim_, 0.0);
  for (std::size_t k = 0; k < h; ++k) {
    const double dpre = dh1[k] * (1.0 - cache.h1[k] * cache.h1[k]);
    gB1[k] += dpre;
    const double* row = W1 + k * in_dim_;
    double* grow = gW1 + k * in_dim_;
    for (std::size_t j = 0; j < in_dim_; ++j) {
      grow[j] += dpre * cache.h0[j];
      dh0[j] += row[j] * dpre;
    }
  }

  // Unpack h0 blocks.
  const double* kind = params_.t(kind_emb_) + (ctx.kind == EditTag::kInsert ? 0 : 1) * d;
  double* gkind = params_.g(kind_emb_) + (ctx.kind == EditTag::kInsert ? 0 : 1) * d;
  (void)kind;
  for (std::size_t a = 0; a < d; ++a) {
    gE[cache.t1 * d + a] += dh0[a];
    gkind[a] += dh0[a];
    gE[cache.t2 * d + a] += dh0[d + a];
    gE[cache.rt * d + a] += dh0[2 * d + a];
  }
  if (cache.span_len > 0) {
    const TokenSeq& base = *ctx.base;
    const double inv = 1.0 / static_cast<double>(cache.span_len);
    for (std::size_t j = ctx.span_begin; j < ctx.span_end; ++j)
      for (std::size_t a = 0; a < d; ++a) gE[base[j] * d + a] += dh0[3 * d + a] * inv;
  }

  if (!cache.has_src) return;

  const TokenSeq& s = *ctx.source;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> datt(dh0.begin() + 3 * d + d, dh0.begin() + 5 * d);
  std::vector<double> dr_att(dh0.begin() + 5 * d, dh0.begin() + 6 * d);

  // succ_feat = (r_att . e_rt) / sqrt(d) feeds the scalar feature slot.
  const double dsucc = dh0[6 * d + 6];
  const double* ert = E + cache.rt * d;
  for (std::size_t a = 0; a < d; ++a) {
    dr_att[a] += dsucc * ert[a] * inv_sqrt_d;
    gE[cache.rt * d + a] += dsucc * cache.r_att[a] * inv_sqrt_d;
  }

  std::vector<double> dalpha(cache.m, 0.0);
  for (std::size_t j = 0; j < cache.m; ++j) {
    const double* es = E + s[j] * d;
    const double* esucc = E + cache.succ[j] * d;
    double acc = s[j] == gold ? dpcopy_gold : 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      acc += datt[a] * es[a] + dr_att[a] * esucc[a];
      gE[s[j] * d + a] += cache.alpha[j] * datt[a];
      gE[cache.succ[j] * d + a] += cache.alpha[j] * dr_att[a];
    }
    dalpha[j] = acc;
  }
  double mix = 0;
  for (std::size_t j = 0; j < cache.m; ++j) mix += cache.alpha[j] * dalpha[j];

  std::vector<double> dq(d, 0.0);
  double* gm1 = params_.g(match1_);
  double* gm2 = params_.g(match2_);
  double* gmb = params_.g(match_bos_);
  double* gwpos = params_.g(pos_prior_);
  for (std::size_t j = 0; j < cache.m; ++j) {
    const double dscore = cache.alpha[j] * (dalpha[j] - mix);
    const double* es = E + s[j] * d;
    for (std::size_t a = 0; a < d; ++a) {
      dq[a] += dscore * es[a] * inv_sqrt_d;
      gE[s[j] * d + a] += dscore * cache.q[a] * inv_sqrt_d;
    }
    if (j >= 1 && s[j - 1] == cache.t1) *gm1 += dscore;
    if (j >= 2 && s[j - 2] == cache.t2) *gm2 += dscore;
    if (j == 0 && cache.t1 == Vocab::kBos) *gmb += dscore;
    *gwpos += dscore * cache.pos_bump[j];
  }
  double* gPq = params_.g(ptr_q_);
  const double* Pq = params_.t(ptr_q_);
  const double* et1 = E + cache.t1 * d;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      gPq[a * d + b] += dq[a] * et1[b];
      gE[cache.t1 * d + b] += Pq[a * d + b] * dq[a];
    }
}

Dist NeuralGenerator::next_token_dist(const GenContext& ctx, const TokenSeq& prefix) const {
  if (ctx.base == nullptr || ctx.left_output == nullptr)
    throw InternalError("generator: missing context");
  StepCache cache;
  forward_step(ctx, prefix, cache);
  return cache.p;
}

double NeuralGenerator::loss_backward(const GenContext& ctx, const TokenSeq& payload) {
  double loss = 0;
  TokenSeq prefix;
  StepCache cache;
  for (std::size_t k = 0; k <= payload.size(); ++k) {
    const TokenId gold = k < payload.size() ? payload[k] : Vocab::kEndOfSpan;
    forward_step(ctx, prefix, cache);
    loss -= std::log(std::max(cache.p[gold], 1e-300));
    backward_step(ctx, cache, gold);
    if (k < payload.size()) prefix.push_back(payload[k]);
  }
  return loss;
}

double NeuralGenerator::loss(const GenContext& ctx, const TokenSeq& payload) const {
  double loss = 0;
  TokenSeq prefix;
  StepCache cache;
  for (std::size_t k = 0; k <= payload.size(); ++k) {
    const TokenId gold = k < payload.size() ? payload[k] : Vocab::kEndOfSpan;
    forward_step(ctx, prefix, cache);
    loss -= std::log(std::max(cache.p[gold], 1e-300));
    if (k < payload.size()) prefix.push_back(payload[k]);
  }
  return loss;
}

}  // namespace editdiff
