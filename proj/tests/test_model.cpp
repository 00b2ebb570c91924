#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "editdiff/checkpoint.hpp"
#include "editdiff/errors.hpp"
#include "editdiff/model_neural.hpp"
#include "editdiff/model_ngram.hpp"
#include "editdiff/scoring.hpp"
#include "editdiff/training.hpp"
#include "test_util.hpp"

using namespace editdiff;
using testutil::content_id;

namespace {

// Test-only scorers with closed-form behavior.
class UniformTagger final : public Tagger {
 public:
  explicit UniformTagger(std::size_t v) : v_(v) {}
  std::vector<TagDist> score_tags(const TokenSeq& x, const TokenSeq*) const override {
    return std::vector<TagDist>(x.size() + 1, TagDist{0.25, 0.25, 0.25, 0.25});
  }
  std::size_t vocab_size() const override { return v_; }

 private:
  std::size_t v_;
};

class KeepSureTagger final : public Tagger {
 public:
  explicit KeepSureTagger(std::size_t v) : v_(v) {}
  std::vector<TagDist> score_tags(const TokenSeq& x, const TokenSeq*) const override {
    return std::vector<TagDist>(x.size() + 1, TagDist{1.0, 0.0, 0.0, 0.0});
  }
  std::size_t vocab_size() const override { return v_; }

 private:
  std::size_t v_;
};

class UniformGenerator final : public Generator {
 public:
  explicit UniformGenerator(std::size_t v) : v_(v) {}
  Dist next_token_dist(const GenContext&, const TokenSeq&) const override {
    return Dist(v_, 1.0 / static_cast<double>(v_));
  }
  std::size_t vocab_size() const override { return v_; }
  std::size_t max_span_len() const override { return 64; }

 private:
  std::size_t v_;
};

std::vector<CorpusPair> copy_corpus(Rng& rng, std::size_t n, std::size_t content, std::size_t lo,
                                    std::size_t hi) {
  std::vector<CorpusPair> corpus;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t len = lo + rand_index(rng, hi - lo + 1);
    // Sample without replacement so pointer alignment is unambiguous.
    std::vector<std::size_t> pool(content);
    for (std::size_t k = 0; k < content; ++k) pool[k] = k;
    TokenSeq seq;
    for (std::size_t k = 0; k < len; ++k) {
      std::size_t pick = rand_index(rng, pool.size());
      seq.push_back(content_id(pool[pick]));
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    corpus.push_back({seq, seq});
  }
  return corpus;
}

}  // namespace

TEST_CASE("tagger distributions are normalized") {
  NeuralConfig cfg;
  cfg.embed_dim = 8;
  cfg.hidden_dim = 12;
  NeuralTagger tagger(30, cfg);
  Rng rng(1);
  for (int it = 0; it < 50; ++it) {
    TokenSeq x = testutil::random_seq(rng, rand_index(rng, 10), 20);
    TokenSeq src = testutil::random_seq(rng, 1 + rand_index(rng, 10), 20);
    auto scores = tagger.score_tags(x, it % 2 == 0 ? &src : nullptr);
    REQUIRE(scores.size() == x.size() + 1);
    for (const TagDist& d : scores) {
      double sum = d[0] + d[1] + d[2] + d[3];
      CHECK(std::abs(sum - 1.0) < 1e-6);
      for (double p : d) CHECK(p >= 0.0);
    }
  }
}

TEST_CASE("generator distributions are normalized and force termination") {
  NeuralConfig cfg;
  cfg.embed_dim = 8;
  cfg.hidden_dim = 12;
  cfg.max_span_len = 4;
  NeuralGenerator gen(30, cfg);
  Rng rng(2);
  for (int it = 0; it < 50; ++it) {
    TokenSeq base = testutil::random_seq(rng, 2 + rand_index(rng, 8), 20);
    TokenSeq src = testutil::random_seq(rng, 1 + rand_index(rng, 10), 20);
    TokenSeq left(base.begin(), base.begin() + 1);
    GenContext ctx{&base, 1, std::min<std::size_t>(3, base.size()), EditTag::kReplace, &left,
                   it % 2 == 0 ? &src : nullptr};
    TokenSeq prefix = testutil::random_seq(rng, rand_index(rng, 3), 20);
    Dist d = gen.next_token_dist(ctx, prefix);
    REQUIRE(d.size() == 30);
    double sum = 0;
    for (double p : d) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-6);

    TokenSeq long_prefix = testutil::random_seq(rng, 4, 20);
    Dist forced = gen.next_token_dist(ctx, long_prefix);
    CHECK(forced[Vocab::kEndOfSpan] == doctest::Approx(1.0));
  }
}

TEST_CASE("analytic tagger gradients match central finite differences") {
  NeuralConfig cfg;
  cfg.embed_dim = 6;
  cfg.hidden_dim = 8;
  cfg.init_seed = 3;
  NeuralTagger tagger(16, cfg);
  Rng rng(4);

  for (int input_case = 0; input_case < 2; ++input_case) {
    TokenSeq x = testutil::random_seq(rng, 5, 10);
    TokenSeq src = testutil::random_seq(rng, 6, 10);
    std::vector<EditTag> gold(x.size() + 1);
    for (auto& t : gold) t = static_cast<EditTag>(rand_index(rng, 4));
    const TokenSeq* source = input_case == 0 ? &src : nullptr;

    tagger.params().zero_grad();
    tagger.loss_backward(x, source, gold);
    std::vector<double> analytic = tagger.params().grad();

    for (int probe = 0; probe < 40; ++probe) {
      std::size_t idx = rand_index(rng, tagger.params().theta().size());
      double& w = tagger.params().theta()[idx];
      const double keep = w;
      const double h = 1e-6 * std::max(1.0, std::abs(keep));
      w = keep + h;
      double up = tagger.loss(x, source, gold);
      w = keep - h;
      double down = tagger.loss(x, source, gold);
      w = keep;
      double numeric = (up - down) / (2 * h);
      double rel = std::abs(analytic[idx] - numeric) /
                   std::max({std::abs(analytic[idx]), std::abs(numeric), 1e-4});
      CHECK(rel < 1e-4);
    }
  }
}

TEST_CASE("analytic generator gradients match central finite differences") {
  NeuralConfig cfg;
  cfg.embed_dim = 6;
  cfg.hidden_dim = 8;
  cfg.max_span_len = 8;
  cfg.init_seed = 5;
  NeuralGenerator gen(16, cfg);
  Rng rng(6);

  for (int input_case = 0; input_case < 3; ++input_case) {
    TokenSeq base = testutil::random_seq(rng, 6, 10);
    TokenSeq src = testutil::random_seq(rng, 7, 10);
    TokenSeq left(base.begin(), base.begin() + 2);
    const bool replace = input_case != 1;
    GenContext ctx{&base,
                   2,
                   replace ? static_cast<std::size_t>(4) : static_cast<std::size_t>(2),
                   replace ? EditTag::kReplace : EditTag::kInsert,
                   &left,
                   input_case == 2 ? nullptr : &src};
    TokenSeq payload = testutil::random_seq(rng, 3, 10);

    gen.params().zero_grad();
    gen.loss_backward(ctx, payload);
    std::vector<double> analytic = gen.params().grad();

    for (int probe = 0; probe < 40; ++probe) {
      std::size_t idx = rand_index(rng, gen.params().theta().size());
      double& w = gen.params().theta()[idx];
      const double keep = w;
      const double h = 1e-6 * std::max(1.0, std::abs(keep));
      w = keep + h;
      double up = gen.loss(ctx, payload);
      w = keep - h;
      double down = gen.loss(ctx, payload);
      w = keep;
      double numeric = (up - down) / (2 * h);
      double rel = std::abs(analytic[idx] - numeric) /
                   std::max({std::abs(analytic[idx]), std::abs(numeric), 1e-4});
      CHECK(rel < 1e-4);
    }
  }
}

TEST_CASE("step_log_likelihood closed form under uniform scorers") {
  const std::size_t V = 12;
  UniformTagger tagger(V);
  UniformGenerator gen(V);

  // All-KEEP script of length n: (n+1) * log(1/4), no generation term.
  TokenSeq x = {content_id(0), content_id(1), content_id(2)};
  EditScript keep;
  keep.ops = {{EditTag::kKeep, 1, {}}, {EditTag::kKeep, 1, {}}, {EditTag::kKeep, 1, {}}};
  StepLogLik ll = step_log_likelihood(x, keep, tagger, gen);
  CHECK(ll.tag_term == doctest::Approx(4.0 * std::log(0.25)));
  CHECK(ll.gen_term == doctest::Approx(0.0));

  // Single INSERT of one token: tags still cost (n+1) log(1/4); the payload
  // costs log(1/V) for the token plus log(1/V) for end-of-span.
  EditScript ins;
  ins.ops = {{EditTag::kKeep, 1, {}},
             {EditTag::kInsert, 0, {content_id(5)}},
             {EditTag::kKeep, 1, {}},
             {EditTag::kKeep, 1, {}}};
  StepLogLik ll2 = step_log_likelihood(x, ins, tagger, gen);
  CHECK(ll2.tag_term == doctest::Approx(4.0 * std::log(0.25)));
  CHECK(ll2.gen_term == doctest::Approx(2.0 * std::log(1.0 / V)));
  CHECK(ll2.total() == doctest::Approx(ll2.tag_term + ll2.gen_term));
}

TEST_CASE("chain_log_likelihood sums steps and honors sentinels") {
  const std::size_t V = 10;
  UniformTagger tagger(V);
  UniformGenerator gen(V);
  KeepSureTagger keep_tagger(V);

  TokenSeq x = {content_id(0), content_id(1)};
  EditScript keep;
  keep.ops = {{EditTag::kKeep, 1, {}}, {EditTag::kKeep, 1, {}}};
  RevisionChain chain;
  chain.revisions = {x, x};
  chain.scripts = {keep};

  // KEEP-certain tagger: probability 1 everywhere, log-likelihood 0.
  CHECK(chain_log_likelihood(chain, keep_tagger, gen) == doctest::Approx(0.0));

  // Two uniform steps: additive.
  RevisionChain two;
  two.revisions = {x, x, x};
  two.scripts = {keep, keep};
  double one = chain_log_likelihood(chain, tagger, gen);
  CHECK(chain_log_likelihood(two, tagger, gen) == doctest::Approx(2.0 * one));

  // A DELETE under the KEEP-certain tagger has zero probability.
  EditScript del;
  del.ops = {{EditTag::kDelete, 1, {}}, {EditTag::kKeep, 1, {}}};
  RevisionChain bad;
  bad.revisions = {x, TokenSeq{content_id(1)}};
  bad.scripts = {del};
  CHECK(chain_log_likelihood(bad, keep_tagger, gen) == kNegInf);
}

TEST_CASE("chain_log_likelihood is additive over concatenation") {
  Rng rng(7);
  NeuralConfig cfg;
  cfg.embed_dim = 6;
  cfg.hidden_dim = 8;
  NeuralTagger tagger(16, cfg);
  NeuralGenerator gen(16, cfg);

  TokenSeq a = testutil::random_seq(rng, 5, 10);
  EditScript s1 = testutil::random_script(rng, a, 10);
  TokenSeq b = apply_script(s1, a);
  EditScript s2 = testutil::random_script(rng, b, 10);
  TokenSeq c = apply_script(s2, b);

  RevisionChain full;
  full.revisions = {a, b, c};
  full.scripts = {s1, s2};
  RevisionChain front;
  front.revisions = {a, b};
  front.scripts = {s1};
  RevisionChain back;
  back.revisions = {b, c};
  back.scripts = {s2};

  CHECK(chain_log_likelihood(full, tagger, gen) ==
        doctest::Approx(chain_log_likelihood(front, tagger, gen) +
                        chain_log_likelihood(back, tagger, gen)));
}

TEST_CASE("vocab mismatch is rejected") {
  UniformTagger tagger(8);
  UniformGenerator gen(8);
  TokenSeq x = {200};
  EditScript keep;
  keep.ops = {{EditTag::kKeep, 1, {}}};
  CHECK_THROWS_AS(step_log_likelihood(x, keep, tagger, gen), DataError);
}

TEST_CASE("training reduces loss and is seed-deterministic") {
  Rng rng(8);
  auto corpus = copy_corpus(rng, 300, 18, 5, 8);
  Vocab vocab = testutil::make_vocab(18);

  TrainConfig cfg;
  cfg.family = "neural";
  cfg.neural.embed_dim = 8;
  cfg.neural.hidden_dim = 12;
  cfg.neural.max_span_len = 10;
  cfg.corruption.max_steps = 2;
  cfg.train_steps = 1200;
  cfg.learning_rate = 0.02;
  cfg.seed = 42;

  TrainedModel m1 = train(corpus, cfg, vocab);
  CHECK(m1.stats.last_decile_loss < m1.stats.first_decile_loss);

  TrainedModel m2 = train(corpus, cfg, vocab);
  auto p1 = probe_scores(*m1.tagger, *m1.generator, {corpus[0], corpus[1]});
  auto p2 = probe_scores(*m2.tagger, *m2.generator, {corpus[0], corpus[1]});
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);
}

TEST_CASE("zero training steps leaves the initialization untouched") {
  Rng rng(9);
  auto corpus = copy_corpus(rng, 50, 18, 5, 8);
  Vocab vocab = testutil::make_vocab(18);

  TrainConfig cfg;
  cfg.family = "neural";
  cfg.neural.embed_dim = 8;
  cfg.neural.hidden_dim = 12;
  cfg.train_steps = 0;

  TrainedModel trained = train(corpus, cfg, vocab);
  NeuralTagger fresh_tagger(vocab.size(), cfg.neural);
  NeuralGenerator fresh_gen(vocab.size(), cfg.neural);
  auto p1 = probe_scores(*trained.tagger, *trained.generator, {corpus[0]});
  auto p2 = probe_scores(fresh_tagger, fresh_gen, {corpus[0]});
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);
}

TEST_CASE("trained tagger reaches gold-majority on held-out positions") {
  Rng rng(10);
  auto corpus = copy_corpus(rng, 3000, 32, 5, 9);
  Vocab vocab = testutil::make_vocab(32);

  TrainConfig cfg;
  cfg.family = "neural";
  cfg.neural.embed_dim = 12;
  cfg.neural.hidden_dim = 24;
  cfg.neural.max_span_len = 10;
  // Mild single-pass corruption keeps the gold tags nearly deterministic.
  cfg.corruption.max_steps = 1;
  cfg.corruption.p_keep = 0.8;
  cfg.corruption.p_replace = 0.2;
  cfg.corruption.p_insert = 0.0;
  cfg.corruption.p_delete = 0.0;
  cfg.corruption.length.kind = LengthKind::kPoisson;
  cfg.corruption.length.lambda = 1.5;
  cfg.train_steps = 24000;
  cfg.learning_rate = 0.02;
  cfg.seed = 11;

  TrainedModel model = train(corpus, cfg, vocab);

  Rng heldout_rng(777);
  auto heldout = copy_corpus(heldout_rng, 200, 32, 5, 9);
  std::size_t majority = 0, total = 0;
  for (const CorpusPair& pair : heldout) {
    Rng erng(derive_stream(123456, total));
    TrainingExample ex = make_training_example(pair.target, cfg.corruption, vocab, erng);
    auto scores = model.tagger->score_tags(ex.input, &pair.source);
    for (std::size_t i = 0; i < ex.gold.tags.size(); ++i) {
      if (scores[i][static_cast<std::size_t>(ex.gold.tags[i])] > 0.5) ++majority;
      ++total;
    }
  }
  const double rate = static_cast<double>(majority) / static_cast<double>(total);
  CHECK(rate >= 0.95);
}

TEST_CASE("trained gold script outscores a random valid script") {
  Rng rng(12);
  auto corpus = copy_corpus(rng, 2000, 24, 5, 8);
  Vocab vocab = testutil::make_vocab(24);

  TrainConfig cfg;
  cfg.family = "neural";
  cfg.neural.embed_dim = 12;
  cfg.neural.hidden_dim = 24;
  cfg.neural.max_span_len = 12;
  cfg.corruption.max_steps = 2;
  cfg.corruption.length.lambda = 1.5;
  cfg.train_steps = 16000;
  cfg.learning_rate = 0.02;
  cfg.seed = 13;

  TrainedModel model = train(corpus, cfg, vocab);

  Rng heldout_rng(888);
  auto heldout = copy_corpus(heldout_rng, 150, 24, 5, 8);
  int wins = 0, checked = 0;
  for (const CorpusPair& pair : heldout) {
    Rng erng(derive_stream(9876, checked));
    TrainingExample ex = make_training_example(pair.target, cfg.corruption, vocab, erng);
    EditScript gold = tags_to_script(ex.gold);
    EditScript random = testutil::random_script(erng, ex.input, 18);
    double gold_ll =
        step_log_likelihood(ex.input, gold, *model.tagger, *model.generator, &pair.source).total();
    double rand_ll =
        step_log_likelihood(ex.input, random, *model.tagger, *model.generator, &pair.source)
            .total();
    if (gold_ll > rand_ll) ++wins;
    ++checked;
  }
  CHECK(static_cast<double>(wins) / checked >= 0.9);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  Rng rng(14);
  auto corpus = copy_corpus(rng, 100, 16, 5, 8);
  Vocab vocab = testutil::make_vocab(16);

  TrainConfig cfg;
  cfg.family = "neural";
  cfg.neural.embed_dim = 8;
  cfg.neural.hidden_dim = 12;
  cfg.train_steps = 300;

  TrainedModel model = train(corpus, cfg, vocab);
  Checkpoint ckpt = make_checkpoint(model, vocab, {{"note", "test"}});
  ckpt.save("ckpt_roundtrip.bin");
  Checkpoint loaded = Checkpoint::load("ckpt_roundtrip.bin");
  TrainedModel restored = restore_models(loaded, vocab);

  auto p1 = probe_scores(*model.tagger, *model.generator, {corpus[0], corpus[1]});
  auto p2 = probe_scores(*restored.tagger, *restored.generator, {corpus[0], corpus[1]});
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);

  // Wrong vocab is rejected.
  Vocab other = testutil::make_vocab(17);
  CHECK_THROWS_AS(restore_models(loaded, other), DataError);
}

TEST_CASE("ngram family trains, scores and round-trips") {
  Rng rng(15);
  auto corpus = copy_corpus(rng, 500, 16, 5, 8);
  Vocab vocab = testutil::make_vocab(16);

  TrainConfig cfg;
  cfg.family = "ngram";
  cfg.ngram.max_span_len = 10;
  cfg.corruption.max_steps = 2;
  cfg.train_steps = 2500;
  cfg.learning_rate = 0.15;
  cfg.seed = 16;

  TrainedModel model = train(corpus, cfg, vocab);
  CHECK(model.stats.last_decile_loss < model.stats.first_decile_loss);

  // Distributions normalize.
  TokenSeq x = corpus[0].target;
  auto tags = model.tagger->score_tags(x, &corpus[0].source);
  for (const TagDist& d : tags) {
    double sum = d[0] + d[1] + d[2] + d[3];
    CHECK(std::abs(sum - 1.0) < 1e-6);
  }
  TokenSeq left;
  GenContext ctx{&x, 0, 1, EditTag::kReplace, &left, &corpus[0].source};
  Dist dist = model.generator->next_token_dist(ctx, {});
  double sum = 0;
  for (double p : dist) sum += p;
  CHECK(std::abs(sum - 1.0) < 1e-6);

  Checkpoint ckpt = make_checkpoint(model, vocab, {});
  ckpt.save("ckpt_ngram.bin");
  TrainedModel restored = restore_models(Checkpoint::load("ckpt_ngram.bin"), vocab);
  auto p1 = probe_scores(*model.tagger, *model.generator, {corpus[0]});
  auto p2 = probe_scores(*restored.tagger, *restored.generator, {corpus[0]});
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);
}

TEST_CASE("payload_log_prob returns the sentinel on zero-probability tokens") {
  KeepSureTagger tagger(8);
  (void)tagger;
  // A generator that always ends the span immediately.
  class EosGenerator final : public Generator {
   public:
    Dist next_token_dist(const GenContext&, const TokenSeq&) const override {
      Dist d(8, 0.0);
      d[Vocab::kEndOfSpan] = 1.0;
      return d;
    }
    std::size_t vocab_size() const override { return 8; }
    std::size_t max_span_len() const override { return 8; }
  } gen;

  TokenSeq base = {content_id(0)};
  TokenSeq left;
  GenContext ctx{&base, 0, 0, EditTag::kInsert, &left, nullptr};
  CHECK(payload_log_prob(gen, ctx, {}) == doctest::Approx(0.0));
  CHECK(payload_log_prob(gen, ctx, {content_id(0)}) == kNegInf);
}
