#include "editdiff/training.hpp"

#include <algorithm>
#include <cmath>

#include "editdiff/alignment.hpp"
#include "editdiff/errors.hpp"
#include "editdiff/rand.hpp"

namespace editdiff {

namespace {

class Adam {
 public:
  explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& theta, const std::vector<double>& grad, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad[i];
      if (g == 0.0 && m_[i] == 0.0 && v_[i] == 0.0) continue;
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
      theta[i] -= lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
    }
  }

 private:
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

// Linear decay to a tenth of the base rate by the final step.
double decayed_lr(double base, std::size_t step, std::size_t total) {
  if (total <= 1) return base;
  const double frac = static_cast<double>(step) / static_cast<double>(total - 1);
  return base * (1.0 - 0.9 * frac);
}

void shuffled_order(std::vector<std::size_t>& order, std::uint64_t seed, std::size_t epoch) {
  Rng rng(derive_stream(seed, 0xe90c * (epoch + 1)));
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rand_index(rng, i)]);
}

// Supervision for one training step: either a sampled corruption reversal or
// a bootstrap edit script (source -> target or null -> target).
bool draw_supervision(const CorpusPair& pair, const TrainConfig& cfg, const Vocab& vocab,
                      Rng& rng, SupervisedStep* out, const TokenSeq** source_out) {
  *source_out = &pair.source;
  const std::size_t max_span =
      cfg.family == "neural" ? cfg.neural.max_span_len : cfg.ngram.max_span_len;
  if (cfg.bootstrap_mix > 0.0 && rand_unit(rng) < cfg.bootstrap_mix) {
    const bool from_null = rand_unit(rng) < 0.5;
    TokenSeq input = from_null ? TokenSeq{} : pair.source;
    EditScript script = min_edit_script(input, pair.target);
    TagExpansion gold = expand_tags(normalize_script(script, input));
    if (!build_supervised_step(input, gold, max_span, out)) return false;
    return true;
  }
  TrainingExample ex = make_training_example(pair.target, cfg.corruption, vocab, rng);
  if (!build_supervised_step(ex.input, ex.gold, max_span, out)) return false;
  return true;
}

TrainedModel train_neural(const std::vector<CorpusPair>& corpus, const TrainConfig& cfg,
                          const Vocab& vocab) {
  auto tagger = std::make_unique<NeuralTagger>(vocab.size(), cfg.neural);
  auto gen = std::make_unique<NeuralGenerator>(vocab.size(), cfg.neural);
  Adam adam_t(tagger->params().size());
  Adam adam_g(gen->params().size());

  TrainStats stats;
  std::vector<double> losses;
  losses.reserve(cfg.train_steps);

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t epoch = 0;
  shuffled_order(order, cfg.seed, epoch);

  SupervisedStep sup;
  for (std::size_t step = 0; step < cfg.train_steps; ++step) {
    const std::size_t cursor = step % corpus.size();
    if (step > 0 && cursor == 0) shuffled_order(order, cfg.seed, ++epoch);
    const CorpusPair& pair = corpus[order[cursor]];
    Rng rng(derive_stream(cfg.seed, step));

    const TokenSeq* source = nullptr;
    if (!draw_supervision(pair, cfg, vocab, rng, &sup, &source)) {
      ++stats.skipped_examples;
      continue;
    }

    tagger->params().zero_grad();
    gen->params().zero_grad();

    double loss = cfg.tag_loss_weight * tagger->loss_backward(sup.input, source, sup.tags);
    TokenSeq left_output;
    std::size_t slot_cursor = 0;
    for (const StepPlan::Piece& piece : sup.plan.pieces) {
      if (!piece.is_slot) {
        left_output.push_back(piece.token);
        continue;
      }
      const StepPlan::Slot& slot = sup.plan.slots[piece.slot];
      GenContext ctx{&sup.plan.base, slot.begin, slot.end, slot.kind, &left_output, source};
      const TokenSeq& payload = sup.payloads[slot_cursor++];
      loss += cfg.gen_loss_weight * gen->loss_backward(ctx, payload);
      left_output.insert(left_output.end(), payload.begin(), payload.end());
    }
    if (!std::isfinite(loss))
      throw InternalError("train: non-finite loss at step " + std::to_string(step));
    losses.push_back(loss);

    if (cfg.tag_loss_weight != 1.0)
      for (double& g : tagger->params().grad()) g *= cfg.tag_loss_weight;
    if (cfg.gen_loss_weight != 1.0)
      for (double& g : gen->params().grad()) g *= cfg.gen_loss_weight;

    const double lr = decayed_lr(cfg.learning_rate, step, cfg.train_steps);
    adam_t.step(tagger->params().theta(), tagger->params().grad(), lr);
    adam_g.step(gen->params().theta(), gen->params().grad(), lr);
  }

  stats.steps_run = losses.size();
  const std::size_t decile = std::max<std::size_t>(1, losses.size() / 10);
  if (!losses.empty()) {
    double first = 0, last = 0;
    for (std::size_t i = 0; i < decile; ++i) first += losses[i];
    for (std::size_t i = losses.size() - decile; i < losses.size(); ++i) last += losses[i];
    stats.first_decile_loss = first / decile;
    stats.last_decile_loss = last / decile;
  }

  TrainedModel out;
  out.family = "neural";
  out.tagger = std::move(tagger);
  out.generator = std::move(gen);
  out.stats = stats;
  return out;
}

TrainedModel train_ngram(const std::vector<CorpusPair>& corpus, const TrainConfig& cfg,
                         const Vocab& vocab) {
  auto tagger = std::make_unique<LogLinearTagger>(vocab.size());
  auto gen = std::make_unique<NGramGenerator>(vocab.size(), cfg.ngram);

  TrainStats stats;
  std::vector<double> losses;
  losses.reserve(cfg.train_steps);

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t epoch = 0;
  shuffled_order(order, cfg.seed, epoch);

  SupervisedStep sup;
  for (std::size_t step = 0; step < cfg.train_steps; ++step) {
    const std::size_t cursor = step % corpus.size();
    if (step > 0 && cursor == 0) shuffled_order(order, cfg.seed, ++epoch);
    const CorpusPair& pair = corpus[order[cursor]];
    Rng rng(derive_stream(cfg.seed, step));

    const TokenSeq* source = nullptr;
    if (!draw_supervision(pair, cfg, vocab, rng, &sup, &source)) {
      ++stats.skipped_examples;
      continue;
    }

    double loss = tagger->sgd_step(sup.input, source, sup.tags, cfg.learning_rate);

    TokenSeq left_output;
    std::size_t slot_cursor = 0;
    const bool dev_step = step % 10 == 9;
    for (const StepPlan::Piece& piece : sup.plan.pieces) {
      if (!piece.is_slot) {
        left_output.push_back(piece.token);
        continue;
      }
      const StepPlan::Slot& slot = sup.plan.slots[piece.slot];
      GenContext ctx{&sup.plan.base, slot.begin, slot.end, slot.kind, &left_output, source};
      const TokenSeq& payload = sup.payloads[slot_cursor++];
      if (dev_step)
        gen->observe_dev(ctx, payload);
      else
        gen->observe(ctx, payload);
      loss += payload_log_prob(*gen, ctx, payload) * -1.0;
      left_output.insert(left_output.end(), payload.begin(), payload.end());
    }
    if (!std::isfinite(loss))
      throw InternalError("train: non-finite loss at step " + std::to_string(step));
    losses.push_back(loss);
  }
  gen->fit_interpolation();

  stats.steps_run = losses.size();
  const std::size_t decile = std::max<std::size_t>(1, losses.size() / 10);
  if (!losses.empty()) {
    double first = 0, last = 0;
    for (std::size_t i = 0; i < decile; ++i) first += losses[i];
    for (std::size_t i = losses.size() - decile; i < losses.size(); ++i) last += losses[i];
    stats.first_decile_loss = first / decile;
    stats.last_decile_loss = last / decile;
  }

  TrainedModel out;
  out.family = "ngram";
  out.tagger = std::move(tagger);
  out.generator = std::move(gen);
  out.stats = stats;
  return out;
}

}  // namespace

bool build_supervised_step(const TokenSeq& input, const TagExpansion& gold, std::size_t max_span,
                           SupervisedStep* out) {
  out->input = input;
  out->tags = gold.tags;
  out->plan = plan_step(input, gold.tags);
  out->payloads.clear();
  for (const StepPlan::Slot& slot : out->plan.slots) {
    const TokenSeq& payload = gold.payloads[slot.tag_pos];
    if (payload.size() > max_span) return false;
    out->payloads.push_back(payload);
  }
  return true;
}

TrainedModel train(const std::vector<CorpusPair>& corpus, const TrainConfig& cfg,
                   const Vocab& vocab) {
  if (corpus.empty()) throw DataError("train: empty corpus");
  cfg.corruption.validate(vocab);
  for (const CorpusPair& p : corpus)
    for (TokenId id : p.target)
      if (id >= vocab.size()) throw DataError("train: target token outside vocabulary");
  if (cfg.family == "neural") return train_neural(corpus, cfg, vocab);
  if (cfg.family == "ngram") return train_ngram(corpus, cfg, vocab);
  throw DataError("train: unknown model family '" + cfg.family + "'");
}

std::vector<double> probe_scores(const Tagger& tagger, const Generator& gen,
                                 const std::vector<CorpusPair>& probe) {
  std::vector<double> out;
  for (const CorpusPair& p : probe) {
    auto tags = tagger.score_tags(p.target, &p.source);
    for (const TagDist& d : tags)
      for (double v : d) out.push_back(v);
    TokenSeq left;
    GenContext ctx{&p.target, 0, std::min<std::size_t>(1, p.target.size()), EditTag::kReplace,
                   &left, &p.source};
    Dist dist = gen.next_token_dist(ctx, {});
    out.insert(out.end(), dist.begin(), dist.end());
  }
  return out;
}

}  // namespace editdiff
