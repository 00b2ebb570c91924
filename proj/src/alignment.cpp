#include "editdiff/alignment.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "editdiff/errors.hpp"

namespace editdiff {

void AlignmentCosts::validate() const {
  if (insert_cost < 0 || delete_cost < 0 || replace_cost < 0)
    throw DataError("alignment costs must be non-negative");
  if (replace_cost > insert_cost + delete_cost)
    throw DataError("replace_cost must not exceed insert_cost + delete_cost");
}

namespace {

// Forward DP row: dist(a[0..i), b[0..j)) for all j at the final i.
std::vector<double> dp_row(const TokenSeq& a, const TokenSeq& b, const AlignmentCosts& c) {
  std::vector<double> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<double>(j) * c.insert_cost;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<double>(i) * c.delete_cost;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      double sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0.0 : c.replace_cost);
      double del = prev[j] + c.delete_cost;
      double ins = cur[j - 1] + c.insert_cost;
      cur[j] = std::min({sub, del, ins});
    }
    std::swap(prev, cur);
  }
  return prev;
}

void merge_spans(std::vector<EditOp>& ops) {
  std::vector<EditOp> out;
  for (EditOp& op : ops) {
    if (!out.empty() && out.back().tag == op.tag && op.tag != EditTag::kKeep) {
      out.back().consume += op.consume;
      out.back().payload.insert(out.back().payload.end(), op.payload.begin(), op.payload.end());
    } else {
      out.push_back(std::move(op));
    }
  }
  ops = std::move(out);
}

// Full-table alignment with deterministic backtrace preference
// KEEP > REPLACE > DELETE > INSERT. Emits unmerged single-token ops.
std::vector<EditOp> align_full(const TokenSeq& a, const TokenSeq& b, const AlignmentCosts& c) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> table((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> double& { return table[i * (m + 1) + j]; };
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<double>(j) * c.insert_cost;
  for (std::size_t i = 1; i <= n; ++i) {
    at(i, 0) = static_cast<double>(i) * c.delete_cost;
    for (std::size_t j = 1; j <= m; ++j) {
      double sub = at(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0.0 : c.replace_cost);
      double del = at(i - 1, j) + c.delete_cost;
      double ins = at(i, j - 1) + c.insert_cost;
      at(i, j) = std::min({sub, del, ins});
    }
  }

  std::vector<EditOp> rev;
  std::size_t i = n, j = m;
  const double eps = 1e-9;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && a[i - 1] == b[j - 1] && std::abs(at(i, j) - at(i - 1, j - 1)) < eps) {
      rev.push_back({EditTag::kKeep, 1, {}});
      --i;
      --j;
    } else if (i > 0 && j > 0 &&
               std::abs(at(i, j) - (at(i - 1, j - 1) + c.replace_cost)) < eps) {
      rev.push_back({EditTag::kReplace, 1, {b[j - 1]}});
      --i;
      --j;
    } else if (i > 0 && std::abs(at(i, j) - (at(i - 1, j) + c.delete_cost)) < eps) {
      rev.push_back({EditTag::kDelete, 1, {}});
      --i;
    } else if (j > 0 && std::abs(at(i, j) - (at(i, j - 1) + c.insert_cost)) < eps) {
      rev.push_back({EditTag::kInsert, 0, {b[j - 1]}});
      --j;
    } else {
      throw InternalError("alignment backtrace: no consistent move");
    }
  }
  std::reverse(rev.begin(), rev.end());
  return rev;
}

// Hirschberg-style divide and conquer; linear memory in min(n, m).
std::vector<EditOp> align_rec(const TokenSeq& a, const TokenSeq& b, const AlignmentOptions& opts) {
  const std::size_t n = a.size(), m = b.size();
  if (n <= 1 || (n <= opts.full_table_limit && m <= opts.full_table_limit))
    return align_full(a, b, opts.costs);

  const std::size_t mid = n / 2;
  TokenSeq a_left(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(mid));
  TokenSeq a_right(a.begin() + static_cast<std::ptrdiff_t>(mid), a.end());
  TokenSeq a_right_rev(a_right.rbegin(), a_right.rend());
  TokenSeq b_rev(b.rbegin(), b.rend());

  std::vector<double> fwd = dp_row(a_left, b, opts.costs);
  std::vector<double> bwd = dp_row(a_right_rev, b_rev, opts.costs);

  std::size_t split = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j <= m; ++j) {
    double total = fwd[j] + bwd[m - j];
    if (total < best - 1e-12) {
      best = total;
      split = j;
    }
  }

  TokenSeq b_left(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(split));
  TokenSeq b_right(b.begin() + static_cast<std::ptrdiff_t>(split), b.end());
  std::vector<EditOp> left = align_rec(a_left, b_left, opts);
  std::vector<EditOp> right = align_rec(a_right, b_right, opts);
  left.insert(left.end(), std::make_move_iterator(right.begin()),
              std::make_move_iterator(right.end()));
  return left;
}

}  // namespace

double edit_distance(const TokenSeq& a, const TokenSeq& b, const AlignmentCosts& costs) {
  costs.validate();
  return dp_row(a, b, costs).back();
}

EditScript min_edit_script(const TokenSeq& a, const TokenSeq& b, const AlignmentOptions& opts) {
  opts.costs.validate();
  EditScript script;
  script.ops = align_rec(a, b, opts);
  merge_spans(script.ops);
  validate_script(script);
  return script;
}

EditScript word_level_script(const TokenSeq& a, const TokenSeq& b, const Vocab& vocab,
                             const AlignmentOptions& opts) {
  auto spans_a = segment_words(a, vocab);
  auto spans_b = segment_words(b, vocab);

  // Intern each word (token tuple) so the DP compares single ids.
  std::map<TokenSeq, TokenId> intern;
  auto word_ids = [&](const TokenSeq& seq, const std::vector<std::vector<std::size_t>>& spans) {
    TokenSeq ids;
    for (const auto& span : spans) {
      TokenSeq word;
      for (std::size_t p : span) word.push_back(seq[p]);
      auto [it, _] = intern.emplace(std::move(word), static_cast<TokenId>(intern.size()));
      ids.push_back(it->second);
    }
    return ids;
  };
  TokenSeq wa = word_ids(a, spans_a);
  TokenSeq wb = word_ids(b, spans_b);

  EditScript word_script = min_edit_script(wa, wb, opts);

  // Expand word ops back to token-level spans.
  EditScript out;
  std::size_t ai = 0;  // word cursor in a
  std::size_t bi = 0;  // word cursor in b
  auto tokens_of = [](const TokenSeq& seq, const std::vector<std::vector<std::size_t>>& spans,
                      std::size_t lo, std::size_t hi) {
    TokenSeq toks;
    for (std::size_t w = lo; w < hi; ++w)
      for (std::size_t p : spans[w]) toks.push_back(seq[p]);
    return toks;
  };
  for (const EditOp& op : word_script.ops) {
    switch (op.tag) {
      case EditTag::kKeep:
        for (std::size_t k = 0; k < spans_a[ai].size(); ++k)
          out.ops.push_back({EditTag::kKeep, 1, {}});
        ai += 1;
        bi += 1;
        break;
      case EditTag::kDelete: {
        TokenSeq toks = tokens_of(a, spans_a, ai, ai + op.consume);
        out.ops.push_back({EditTag::kDelete, static_cast<std::uint32_t>(toks.size()), {}});
        ai += op.consume;
        break;
      }
      case EditTag::kReplace: {
        TokenSeq src_toks = tokens_of(a, spans_a, ai, ai + op.consume);
        TokenSeq dst_toks = tokens_of(b, spans_b, bi, bi + op.payload.size());
        out.ops.push_back(
            {EditTag::kReplace, static_cast<std::uint32_t>(src_toks.size()), std::move(dst_toks)});
        ai += op.consume;
        bi += op.payload.size();
        break;
      }
      case EditTag::kInsert: {
        TokenSeq dst_toks = tokens_of(b, spans_b, bi, bi + op.payload.size());
        out.ops.push_back({EditTag::kInsert, 0, std::move(dst_toks)});
        bi += op.payload.size();
        break;
      }
    }
  }
  merge_spans(out.ops);
  validate_script(out);
  return out;
}

}  // namespace editdiff
