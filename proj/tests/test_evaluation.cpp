#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "editdiff/errors.hpp"
#include "editdiff/evaluation.hpp"
#include "editdiff/model_neural.hpp"
#include "test_util.hpp"

using namespace editdiff;
using testutil::content_id;

namespace {
TokenSeq ids(std::initializer_list<std::size_t> ks) {
  TokenSeq out;
  for (auto k : ks) out.push_back(content_id(k));
  return out;
}
}  // namespace

TEST_CASE("bleu trivial cases") {
  std::vector<TokenSeq> refs = {ids({0, 1, 2, 3}), ids({4, 5})};
  CHECK(bleu(refs, refs) == doctest::Approx(100.0));

  std::vector<TokenSeq> empty_hyps = {{}, {}};
  CHECK(bleu(empty_hyps, refs) == doctest::Approx(0.0));

  CHECK_THROWS_AS(bleu({ids({0})}, refs), DataError);
}

TEST_CASE("bleu matches the hand-computed fixture") {
  // Pair 1: hyp = ref = [a b c d]
  // Pair 2: hyp [a b x] vs ref [a b c]
  // Pair 3: hyp = ref = [e f]
  //
  // 1-gram: totals 4+3+2 = 9, matches 4+2+2 = 8          -> p1 = 8/9
  // 2-gram: totals 3+2+1 = 6, matches 3+1+1 = 5 (add-1)  -> p2 = 6/7
  // 3-gram: totals 2+1+0 = 3, matches 2+0+0 = 2 (add-1)  -> p3 = 3/4
  // 4-gram: totals 1, matches 1 (add-1)                  -> p4 = 2/2 = 1
  // lengths: hyp 9 = ref 9 -> brevity penalty 1
  // BLEU = 100 * (8/9 * 6/7 * 3/4 * 1)^(1/4)
  std::vector<TokenSeq> hyps = {ids({0, 1, 2, 3}), ids({0, 1, 9}), ids({4, 5})};
  std::vector<TokenSeq> refs = {ids({0, 1, 2, 3}), ids({0, 1, 2}), ids({4, 5})};
  const double expected = 100.0 * std::pow((8.0 / 9.0) * (6.0 / 7.0) * (3.0 / 4.0), 0.25);
  CHECK(bleu(hyps, refs) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("bleu applies the brevity penalty") {
  // Identical content but hypothesis shorter than reference.
  std::vector<TokenSeq> hyps = {ids({0, 1})};
  std::vector<TokenSeq> refs = {ids({0, 1, 2, 3})};
  double score = bleu(hyps, refs);
  CHECK(score < 100.0);
  CHECK(score > 0.0);
}

TEST_CASE("bleu and exact_match are permutation invariant") {
  Rng rng(1);
  std::vector<TokenSeq> hyps, refs;
  for (int k = 0; k < 12; ++k) {
    refs.push_back(testutil::random_seq(rng, 3 + rand_index(rng, 6), 10));
    hyps.push_back(rand_unit(rng) < 0.5 ? refs.back()
                                        : testutil::random_seq(rng, 3 + rand_index(rng, 6), 10));
  }
  double b1 = bleu(hyps, refs);
  double e1 = exact_match(hyps, refs);
  std::vector<std::size_t> perm(hyps.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rand_index(rng, i)]);
  std::vector<TokenSeq> hyps2, refs2;
  for (std::size_t i : perm) {
    hyps2.push_back(hyps[i]);
    refs2.push_back(refs[i]);
  }
  CHECK(bleu(hyps2, refs2) == doctest::Approx(b1));
  CHECK(exact_match(hyps2, refs2) == doctest::Approx(e1));
}

TEST_CASE("exact_match counting") {
  std::vector<TokenSeq> refs = {ids({0}), ids({1}), ids({2}), ids({3})};
  CHECK(exact_match(refs, refs) == doctest::Approx(1.0));
  std::vector<TokenSeq> none = {ids({9}), ids({9}), ids({9}), ids({9})};
  CHECK(exact_match(none, refs) == doctest::Approx(0.0));
  std::vector<TokenSeq> half = {ids({0}), ids({1}), ids({9}), ids({9})};
  CHECK(exact_match(half, refs) == doctest::Approx(0.5));
}

namespace {
struct TinyWorld {
  Vocab vocab;
  NeuralTagger tagger;
  NeuralGenerator gen;
  Models models;
  TinyWorld(std::size_t content, std::uint64_t seed)
      : vocab(testutil::make_vocab(content)),
        tagger(vocab.size(), cfg_of(seed)),
        gen(vocab.size(), cfg_of(seed + 1)),
        models{&tagger, &gen} {}
  static NeuralConfig cfg_of(std::uint64_t seed) {
    NeuralConfig c;
    c.embed_dim = 6;
    c.hidden_dim = 8;
    c.max_span_len = 6;
    c.init_seed = seed;
    return c;
  }
};
}  // namespace

TEST_CASE("steps_curve grid zero scores the raw initialization") {
  TinyWorld w(8, 2);
  std::vector<EvalInstance> data;
  Rng rng(3);
  for (int k = 0; k < 5; ++k) {
    TokenSeq s = testutil::random_seq(rng, 4, 8);
    data.push_back({s, s});
  }
  DecodeConfig cfg;
  cfg.max_len = 10;
  InitSpec init;
  init.mode = InitMode::kSourceBootstrap;
  auto curve = steps_curve(data, w.models, DecodeMethod::kGreedy, init, cfg, {0}, w.vocab);
  REQUIRE(curve.size() == 1);
  // T = 0 with source bootstrap echoes the source == reference.
  CHECK(curve[0].exact == doctest::Approx(1.0));
  CHECK(curve[0].bleu_score == doctest::Approx(100.0));

  CHECK_THROWS_AS(
      steps_curve(data, w.models, DecodeMethod::kGreedy, init, cfg, {4, 2}, w.vocab), DataError);
}

TEST_CASE("latency self-comparison stays within measurement noise") {
  TinyWorld w(8, 4);
  std::vector<EvalInstance> data;
  Rng rng(5);
  for (int k = 0; k < 12; ++k) {
    TokenSeq s = testutil::random_seq(rng, 5, 8);
    data.push_back({s, s});
  }
  DecodeConfig cfg;
  cfg.steps = 6;
  cfg.max_len = 10;
  InitSpec init;
  init.mode = InitMode::kSourceBootstrap;
  auto stats = latency_bench(data, w.models, {DecodeMethod::kGreedy, DecodeMethod::kGreedy}, init,
                             cfg, 7, w.vocab);
  REQUIRE(stats.size() == 2);
  const double ratio = stats[0].median_ms / stats[1].median_ms;
  CHECK(ratio > 0.8);
  CHECK(ratio < 1.25);
}

TEST_CASE("report aggregates are recomputable from example records") {
  EvalReport report;
  report.examples = {{0, ids({0, 1}), ids({0, 1}), true, 0.0},
                     {1, ids({2}), ids({3}), false, 1.0}};
  std::vector<TokenSeq> hyps, refs;
  for (const auto& r : report.examples) {
    hyps.push_back(r.hypothesis);
    refs.push_back(r.reference);
  }
  report.aggregate_bleu = bleu(hyps, refs);
  report.aggregate_exact = exact_match(hyps, refs);
  report.mean_edit_distance = 0.5;
  auto j = report.to_json();
  // Recompute from the serialized records.
  std::vector<TokenSeq> hyps2, refs2;
  for (const auto& item : j.at("examples")) {
    hyps2.push_back(item.at("hypothesis").get<TokenSeq>());
    refs2.push_back(item.at("reference").get<TokenSeq>());
  }
  CHECK(bleu(hyps2, refs2) == doctest::Approx(j.at("aggregate").at("bleu").get<double>()));
  CHECK(exact_match(hyps2, refs2) ==
        doctest::Approx(j.at("aggregate").at("exact_match").get<double>()));
}

TEST_CASE("method and init names round-trip") {
  for (auto m : {DecodeMethod::kGreedy, DecodeMethod::kBeam, DecodeMethod::kNucleus,
                 DecodeMethod::kBeam2d})
    CHECK(method_from_name(method_name(m)) == m);
  for (auto m : {InitMode::kNull, InitMode::kRandom, InitMode::kArBootstrap,
                 InitMode::kSourceBootstrap})
    CHECK(init_from_name(init_name(m)) == m);
  CHECK_THROWS_AS(method_from_name("bogus"), UsageError);
}
