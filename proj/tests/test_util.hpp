#pragma once

// Shared helpers for the test suites. Oracles here are written independently
// of the library code paths they check.

#include <string>
#include <vector>

#include "editdiff/edit_script.hpp"
#include "editdiff/rand.hpp"
#include "editdiff/vocab.hpp"

namespace testutil {

using editdiff::EditOp;
using editdiff::EditScript;
using editdiff::EditTag;
using editdiff::Rng;
using editdiff::TokenId;
using editdiff::TokenSeq;
using editdiff::Vocab;

inline Vocab make_vocab(std::size_t content_count) {
  std::vector<std::string> surfaces;
  for (std::size_t i = 0; i < content_count; ++i) surfaces.push_back("w" + std::to_string(i));
  return Vocab::make(surfaces);
}

inline TokenId content_id(std::size_t k) {
  return static_cast<TokenId>(Vocab::kReservedCount + k);
}

inline TokenSeq random_seq(Rng& rng, std::size_t len, std::size_t content_count) {
  TokenSeq out;
  for (std::size_t i = 0; i < len; ++i)
    out.push_back(content_id(editdiff::rand_index(rng, content_count)));
  return out;
}

inline TokenSeq random_payload(Rng& rng, std::size_t max_len, std::size_t content_count) {
  std::size_t len = 1 + editdiff::rand_index(rng, max_len);
  return random_seq(rng, len, content_count);
}

// Random valid script over src (arbitrary mix of the four op kinds).
inline EditScript random_script(Rng& rng, const TokenSeq& src, std::size_t content_count) {
  EditScript s;
  std::size_t pos = 0;
  while (pos < src.size()) {
    switch (editdiff::rand_index(rng, 4)) {
      case 0:
        s.ops.push_back({EditTag::kKeep, 1, {}});
        pos += 1;
        break;
      case 1: {
        auto len = static_cast<std::uint32_t>(
            1 + editdiff::rand_index(rng, std::min<std::size_t>(3, src.size() - pos)));
        s.ops.push_back({EditTag::kDelete, len, {}});
        pos += len;
        break;
      }
      case 2: {
        auto len = static_cast<std::uint32_t>(
            1 + editdiff::rand_index(rng, std::min<std::size_t>(3, src.size() - pos)));
        s.ops.push_back({EditTag::kReplace, len, random_payload(rng, 3, content_count)});
        pos += len;
        break;
      }
      case 3:
        s.ops.push_back({EditTag::kInsert, 0, random_payload(rng, 3, content_count)});
        break;
    }
  }
  if (editdiff::rand_unit(rng) < 0.3)
    s.ops.push_back({EditTag::kInsert, 0, random_payload(rng, 3, content_count)});
  return s;
}

// Independent single-pass interpreter: expands the script into emission
// records first, then concatenates.
inline TokenSeq oracle_apply(const EditScript& s, const TokenSeq& src) {
  std::vector<TokenSeq> parts;
  std::size_t cursor = 0;
  for (const EditOp& op : s.ops) {
    switch (op.tag) {
      case EditTag::kKeep:
        parts.push_back({src.at(cursor)});
        cursor += 1;
        break;
      case EditTag::kDelete:
        cursor += op.consume;
        break;
      case EditTag::kReplace:
        parts.push_back(op.payload);
        cursor += op.consume;
        break;
      case EditTag::kInsert:
        parts.push_back(op.payload);
        break;
    }
  }
  if (cursor != src.size()) throw std::runtime_error("oracle_apply: consumption mismatch");
  TokenSeq out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// Plain quadratic Wagner-Fischer distance, integer unit costs. Independent of
// the library DP (no cost struct, no backtrace).
inline int oracle_unit_distance(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1, 0));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j) {
      int best = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      best = std::min(best, d[i - 1][j] + 1);
      best = std::min(best, d[i][j - 1] + 1);
      d[i][j] = best;
    }
  return d[a.size()][b.size()];
}

}  // namespace testutil
