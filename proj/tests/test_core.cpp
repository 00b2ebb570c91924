#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "editdiff/chain.hpp"
#include "editdiff/edit_script.hpp"
#include "editdiff/errors.hpp"
#include "editdiff/vocab.hpp"
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

TEST_CASE("apply_script definitional cases") {
  TokenSeq src = ids({0, 1, 2});
  EditScript s;
  s.ops = {{EditTag::kKeep, 1, {}},
           {EditTag::kReplace, 1, ids({9})},
           {EditTag::kKeep, 1, {}}};
  CHECK(apply_script(s, src) == ids({0, 9, 2}));

  CHECK(apply_script({}, {}) == TokenSeq{});
}

TEST_CASE("apply_script rejects consumption mismatch") {
  EditScript s;
  s.ops = {{EditTag::kKeep, 1, {}}};
  CHECK_THROWS_AS(apply_script(s, ids({0, 1})), DataError);
  CHECK_THROWS_AS(apply_script({}, ids({0})), DataError);
}

TEST_CASE("apply_script matches the independent interpreter on random pairs") {
  Rng rng(101);
  for (int it = 0; it < 500; ++it) {
    TokenSeq src = testutil::random_seq(rng, rand_index(rng, 12), 10);
    EditScript s = testutil::random_script(rng, src, 10);
    CHECK(apply_script(s, src) == testutil::oracle_apply(s, src));
  }
}

TEST_CASE("invert_script duality cases") {
  TokenSeq src = ids({0, 1});
  EditScript s;
  s.ops = {{EditTag::kKeep, 1, {}}, {EditTag::kDelete, 1, {}}};
  EditScript inv = invert_script(s, src);
  REQUIRE(inv.ops.size() == 2);
  CHECK(inv.ops[0].tag == EditTag::kKeep);
  CHECK(inv.ops[1].tag == EditTag::kInsert);
  CHECK(inv.ops[1].payload == ids({1}));

  EditScript all_keep;
  all_keep.ops = {{EditTag::kKeep, 1, {}}, {EditTag::kKeep, 1, {}}};
  CHECK(invert_script(all_keep, src) == all_keep);
}

TEST_CASE("invert_script round-trip recovers the source") {
  Rng rng(202);
  for (int it = 0; it < 500; ++it) {
    TokenSeq src = testutil::random_seq(rng, rand_index(rng, 12), 10);
    EditScript s = testutil::random_script(rng, src, 10);
    TokenSeq dst = apply_script(s, src);
    EditScript inv = invert_script(s, src);
    CHECK(apply_script(inv, dst) == src);
  }
}

TEST_CASE("consumption and production are conserved") {
  Rng rng(303);
  for (int it = 0; it < 200; ++it) {
    TokenSeq src = testutil::random_seq(rng, rand_index(rng, 12), 10);
    EditScript s = testutil::random_script(rng, src, 10);
    CHECK(script_consumed(s) == src.size());
    CHECK(script_produced(s) == apply_script(s, src).size());
  }
}

TEST_CASE("normalize_script preserves semantics and reaches canonical form") {
  Rng rng(404);
  for (int it = 0; it < 400; ++it) {
    TokenSeq src = testutil::random_seq(rng, 1 + rand_index(rng, 10), 8);
    EditScript s = testutil::random_script(rng, src, 8);
    EditScript canon = normalize_script(s, src);
    CHECK(apply_script(canon, src) == apply_script(s, src));
    // Canonical scripts are tag-expressible and expansion round-trips.
    TagExpansion ex = expand_tags(canon);
    EditScript back = tags_to_script(ex);
    CHECK(apply_script(back, src) == apply_script(s, src));
    // No INSERT may follow a DELETE or REPLACE after normalization.
    for (std::size_t k = 1; k < canon.ops.size(); ++k) {
      if (canon.ops[k].tag == EditTag::kInsert) {
        CHECK(canon.ops[k - 1].tag == EditTag::kKeep);
      }
    }
  }
}

TEST_CASE("normalize_script canonicalizes identity REPLACE to KEEP") {
  TokenSeq src = ids({3, 4});
  EditScript s;
  s.ops = {{EditTag::kReplace, 2, ids({3, 4})}};
  EditScript canon = normalize_script(s, src);
  REQUIRE(canon.ops.size() == 2);
  CHECK(canon.ops[0].tag == EditTag::kKeep);
  CHECK(canon.ops[1].tag == EditTag::kKeep);
}

TEST_CASE("expand_tags anchors INSERT after the kept token") {
  // src [a,b,c], delete b: the inverse insertion anchors after a.
  TokenSeq src = ids({0, 1, 2});
  EditScript del_b;
  del_b.ops = {{EditTag::kKeep, 1, {}}, {EditTag::kDelete, 1, {}}, {EditTag::kKeep, 1, {}}};
  TokenSeq after = apply_script(del_b, src);
  EditScript inv = invert_script(del_b, src);
  TagExpansion ex = expand_tags(normalize_script(inv, after));
  REQUIRE(ex.tags.size() == after.size() + 1);
  CHECK(ex.tags[0] == EditTag::kKeep);
  CHECK(ex.tags[1] == EditTag::kInsert);  // keep a, insert [b] after it
  CHECK(ex.payloads[1] == ids({1}));
  CHECK(ex.tags[2] == EditTag::kKeep);
  CHECK(apply_script(tags_to_script(ex), after) == src);
}

TEST_CASE("expand_tags handles the leading gap") {
  TokenSeq src = ids({5});
  EditScript s;
  s.ops = {{EditTag::kInsert, 0, ids({7})}, {EditTag::kKeep, 1, {}}};
  TagExpansion ex = expand_tags(s);
  CHECK(ex.tags[0] == EditTag::kInsert);
  CHECK(ex.payloads[0] == ids({7}));
  CHECK(tags_to_script(ex) == s);
}

TEST_CASE("expand_tags rejects non-expressible scripts") {
  EditScript s;
  s.ops = {{EditTag::kDelete, 1, {}}, {EditTag::kInsert, 0, ids({1})}};
  CHECK_THROWS_AS(expand_tags(s), DataError);
}

TEST_CASE("script json round-trips bit-exactly") {
  Rng rng(505);
  for (int it = 0; it < 200; ++it) {
    TokenSeq src = testutil::random_seq(rng, rand_index(rng, 10), 8);
    EditScript s = testutil::random_script(rng, src, 8);
    auto j = script_to_json(s);
    CHECK(script_from_json(j) == s);
    CHECK(script_to_json(script_from_json(j)).dump() == j.dump());
  }
}

TEST_CASE("tag names are stable") {
  CHECK(std::string(tag_name(EditTag::kKeep)) == "KEEP");
  CHECK(std::string(tag_name(EditTag::kDelete)) == "DELETE");
  CHECK(std::string(tag_name(EditTag::kReplace)) == "REPLACE");
  CHECK(std::string(tag_name(EditTag::kInsert)) == "INSERT");
  CHECK(tag_from_name("INSERT") == EditTag::kInsert);
  CHECK_THROWS_AS(tag_from_name("SWAP"), DataError);
}

TEST_CASE("vocab bijection and reserved layout") {
  Vocab v = testutil::make_vocab(6);
  CHECK(v.size() == Vocab::kReservedCount + 6);
  for (TokenId id = 0; id < v.size(); ++id) CHECK(v.id(v.surface(id)) == id);
  CHECK(v.is_reserved(Vocab::kPad));
  CHECK(!v.is_reserved(content_id(0)));
  CHECK(v.id("nonexistent") == Vocab::kUnk);
}

TEST_CASE("vocab file round-trip and header validation") {
  Vocab v = testutil::make_vocab(4);
  const std::string path = "vocab_roundtrip.txt";
  v.save(path);
  Vocab loaded = Vocab::load(path);
  CHECK(loaded.size() == v.size());
  CHECK(loaded.hash64() == v.hash64());
  CHECK(loaded.surface(content_id(3)) == "w3");
}

TEST_CASE("segment_words groups continuation tokens") {
  Vocab v = Vocab::make({"Ge", "##werk", "##schaften", "von"});
  TokenSeq seq = {v.id("Ge"), v.id("##werk"), v.id("##schaften"), v.id("von")};
  auto spans = segment_words(seq, v);
  REQUIRE(spans.size() == 2);
  CHECK(spans[0] == std::vector<std::size_t>{0, 1, 2});
  CHECK(spans[1] == std::vector<std::size_t>{3});

  // No continuation markers: one span per token.
  TokenSeq plain = {v.id("Ge"), v.id("von")};
  auto plain_spans = segment_words(plain, v);
  CHECK(plain_spans.size() == 2);
}

TEST_CASE("segment_words flattened spans cover all positions") {
  Rng rng(606);
  std::vector<std::string> surfaces = {"aa", "##b", "cc", "##d", "##e", "ff"};
  Vocab v = Vocab::make(surfaces);
  for (int it = 0; it < 100; ++it) {
    TokenSeq seq;
    std::size_t len = rand_index(rng, 12);
    for (std::size_t i = 0; i < len; ++i)
      seq.push_back(content_id(rand_index(rng, surfaces.size())));
    auto spans = segment_words(seq, v);
    std::vector<std::size_t> flat;
    for (const auto& s : spans) flat.insert(flat.end(), s.begin(), s.end());
    std::vector<std::size_t> expect(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) expect[i] = i;
    CHECK(flat == expect);
  }
}

TEST_CASE("chain validation replays every script") {
  TokenSeq x0 = ids({0, 1});
  EditScript s;
  s.ops = {{EditTag::kKeep, 1, {}}, {EditTag::kReplace, 1, ids({2})}};
  RevisionChain chain;
  chain.revisions = {x0, apply_script(s, x0)};
  chain.scripts = {s};
  CHECK_NOTHROW(validate_chain(chain));

  chain.revisions[1] = ids({9, 9});
  CHECK_THROWS_AS(validate_chain(chain), DataError);
}

TEST_CASE("chain json round-trip") {
  Rng rng(707);
  TokenSeq x = testutil::random_seq(rng, 6, 8);
  EditScript s = testutil::random_script(rng, x, 8);
  RevisionChain chain;
  chain.revisions = {x, apply_script(s, x)};
  chain.scripts = {s};
  auto j = chain_to_json(chain, 42);
  RevisionChain back = chain_from_json(j);
  CHECK(back == chain);
  CHECK(j.at("seed").get<std::uint64_t>() == 42);
}
