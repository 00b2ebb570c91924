#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "editdiff/alignment.hpp"
#include "editdiff/errors.hpp"
#include "test_util.hpp"

using namespace editdiff;
using testutil::content_id;

namespace {
TokenSeq from_string(const std::string& s) {
  TokenSeq out;
  for (char c : s) out.push_back(content_id(static_cast<std::size_t>(c - 'a')));
  return out;
}
}  // namespace

TEST_CASE("edit_distance basics") {
  CHECK(edit_distance(from_string("abc"), from_string("abc")) == doctest::Approx(0.0));
  CHECK(edit_distance({}, from_string("abc")) == doctest::Approx(3.0));
  CHECK(edit_distance(from_string("kitten"), from_string("sitting")) == doctest::Approx(3.0));
  CHECK(edit_distance(from_string("kitten"), from_string("sitting")) ==
        doctest::Approx(testutil::oracle_unit_distance(from_string("kitten"),
                                                       from_string("sitting"))));
}

TEST_CASE("edit_distance is symmetric under symmetric costs") {
  Rng rng(11);
  for (int it = 0; it < 100; ++it) {
    TokenSeq a = testutil::random_seq(rng, rand_index(rng, 10), 6);
    TokenSeq b = testutil::random_seq(rng, rand_index(rng, 10), 6);
    CHECK(edit_distance(a, b) == doctest::Approx(edit_distance(b, a)));
  }
}

TEST_CASE("alignment cost validation") {
  AlignmentCosts bad;
  bad.replace_cost = 3.0;  // > insert + delete
  CHECK_THROWS_AS(edit_distance({}, {}, bad), DataError);
}

TEST_CASE("min_edit_script trivial cases") {
  TokenSeq a = from_string("abca");
  EditScript same = min_edit_script(a, a);
  for (const EditOp& op : same.ops) CHECK(op.tag == EditTag::kKeep);
  CHECK(same.ops.size() == a.size());

  EditScript ins = min_edit_script({}, from_string("xy"));
  REQUIRE(ins.ops.size() == 1);
  CHECK(ins.ops[0].tag == EditTag::kInsert);
  CHECK(ins.ops[0].payload == from_string("xy"));
}

TEST_CASE("min_edit_script cost matches the oracle and replays, 1000 random pairs") {
  Rng rng(22);
  for (int it = 0; it < 1000; ++it) {
    TokenSeq a = testutil::random_seq(rng, rand_index(rng, 13), 10);
    TokenSeq b = testutil::random_seq(rng, rand_index(rng, 13), 10);
    EditScript s = min_edit_script(a, b);
    CHECK(apply_script(s, a) == b);
    int oracle = testutil::oracle_unit_distance(a, b);
    CHECK(edit_distance(a, b) == doctest::Approx(oracle));
    // Unit-cost script cost: replaces count per token, deletes/inserts per token.
    double cost = 0;
    for (const EditOp& op : s.ops) {
      if (op.tag == EditTag::kDelete) cost += op.consume;
      if (op.tag == EditTag::kInsert) cost += op.payload.size();
      if (op.tag == EditTag::kReplace) cost += op.consume;  // merged 1:1 replaces
    }
    CHECK(cost == doctest::Approx(oracle));
  }
}

TEST_CASE("min_edit_script alignment is monotone") {
  Rng rng(33);
  for (int it = 0; it < 200; ++it) {
    TokenSeq a = testutil::random_seq(rng, 1 + rand_index(rng, 12), 6);
    TokenSeq b = testutil::random_seq(rng, 1 + rand_index(rng, 12), 6);
    EditScript s = min_edit_script(a, b);
    // Source and target cursors only move forward, and every op moves at
    // least one of them.
    std::size_t src = 0, dst = 0;
    for (const EditOp& op : s.ops) {
      std::size_t produced = op.tag == EditTag::kKeep ? 1 : op.payload.size();
      CHECK(op.consume + produced > 0);
      src += op.consume;
      dst += produced;
    }
    CHECK(src == a.size());
    CHECK(dst == b.size());
  }
}

TEST_CASE("min_edit_script is deterministic") {
  Rng rng(44);
  TokenSeq a = testutil::random_seq(rng, 9, 4);
  TokenSeq b = testutil::random_seq(rng, 9, 4);
  CHECK(min_edit_script(a, b) == min_edit_script(a, b));
}

TEST_CASE("tie-break prefers KEEP over rewrites") {
  // a -> a has distance 0; the preference shows on equal-cost rewrites:
  // ("ab" -> "ba") admits [REPLACE, REPLACE] at cost 2 among other cost-2
  // paths; the backtrace order keeps it deterministic.
  EditScript s = min_edit_script(from_string("ab"), from_string("ba"));
  CHECK(apply_script(s, from_string("ab")) == from_string("ba"));
  double cost = 0;
  for (const EditOp& op : s.ops) {
    if (op.tag == EditTag::kDelete) cost += op.consume;
    if (op.tag == EditTag::kInsert) cost += op.payload.size();
    if (op.tag == EditTag::kReplace) cost += op.consume;
  }
  CHECK(cost == doctest::Approx(2.0));
}

TEST_CASE("divide-and-conquer path agrees with the full table") {
  Rng rng(55);
  AlignmentOptions small_table;
  small_table.full_table_limit = 8;  // force the Hirschberg path
  for (int it = 0; it < 200; ++it) {
    TokenSeq a = testutil::random_seq(rng, 10 + rand_index(rng, 30), 6);
    TokenSeq b = testutil::random_seq(rng, 10 + rand_index(rng, 30), 6);
    EditScript s = min_edit_script(a, b, small_table);
    CHECK(apply_script(s, a) == b);
    CHECK(edit_distance(a, b) == doctest::Approx(testutil::oracle_unit_distance(a, b)));
    double cost = 0;
    for (const EditOp& op : s.ops) {
      if (op.tag == EditTag::kDelete) cost += op.consume;
      if (op.tag == EditTag::kInsert) cost += op.payload.size();
      if (op.tag == EditTag::kReplace) cost += op.consume;
    }
    CHECK(cost == doctest::Approx(testutil::oracle_unit_distance(a, b)));
  }
}

TEST_CASE("long-sequence alignment stays linear in memory and exact") {
  Rng rng(66);
  TokenSeq a = testutil::random_seq(rng, 5000, 12);
  TokenSeq b = a;
  // Perturb b a little so the script is non-trivial.
  for (int k = 0; k < 40; ++k) b[rand_index(rng, b.size())] = content_id(rand_index(rng, 12));
  EditScript s = min_edit_script(a, b);
  CHECK(apply_script(s, a) == b);
}

TEST_CASE("word_level_script keeps word boundaries") {
  Vocab v = Vocab::make({"Ge", "##werk", "##schaften", "von", "zu", "neu"});
  auto id = [&](const char* s) { return v.id(s); };
  TokenSeq a = {id("Ge"), id("##werk"), id("##schaften"), id("von")};
  TokenSeq b = {id("Ge"), id("##werk"), id("##schaften"), id("zu")};

  EditScript s = word_level_script(a, b, v);
  CHECK(apply_script(s, a) == b);
  // The multi-token word is kept whole; only the last word is replaced.
  REQUIRE(s.ops.size() == 4);
  CHECK(s.ops[0].tag == EditTag::kKeep);
  CHECK(s.ops[1].tag == EditTag::kKeep);
  CHECK(s.ops[2].tag == EditTag::kKeep);
  CHECK(s.ops[3].tag == EditTag::kReplace);
  CHECK(s.ops[3].payload == TokenSeq{id("zu")});

  // Identical sequences: all KEEP.
  EditScript same = word_level_script(a, a, v);
  for (const EditOp& op : same.ops) CHECK(op.tag == EditTag::kKeep);
}

TEST_CASE("word_level_script replays on random pairs") {
  std::vector<std::string> surfaces = {"aa", "##b", "cc", "##d", "ee", "ff"};
  Vocab v = Vocab::make(surfaces);
  Rng rng(77);
  for (int it = 0; it < 200; ++it) {
    TokenSeq a, b;
    std::size_t la = rand_index(rng, 10), lb = rand_index(rng, 10);
    for (std::size_t i = 0; i < la; ++i) a.push_back(content_id(rand_index(rng, surfaces.size())));
    for (std::size_t i = 0; i < lb; ++i) b.push_back(content_id(rand_index(rng, surfaces.size())));
    EditScript s = word_level_script(a, b, v);
    CHECK(apply_script(s, a) == b);
  }
}
