#pragma once

#include "editdiff/edit_script.hpp"
#include "editdiff/vocab.hpp"

namespace editdiff {

// Costs for the alignment DP. keep is fixed at 0. Scripts degenerate unless
// replace_cost <= insert_cost + delete_cost.
struct AlignmentCosts {
  double insert_cost = 1.0;
  double delete_cost = 1.0;
  double replace_cost = 1.0;

  void validate() const;
};

struct AlignmentOptions {
  AlignmentCosts costs;
  // Above this length the script path switches to the two-row distance +
  // divide-and-conquer extraction (full table memory would be O(nm)).
  std::size_t full_table_limit = 4096;
};

// Minimal total cost to transform a into b.
double edit_distance(const TokenSeq& a, const TokenSeq& b, const AlignmentCosts& costs = {});

// Minimal-cost script with deterministic tie-breaking (KEEP > REPLACE >
// DELETE > INSERT preference during backtrace); adjacent same-tag ops are
// merged into spans. apply(result, a) == b.
EditScript min_edit_script(const TokenSeq& a, const TokenSeq& b, const AlignmentOptions& opts = {});

// min_edit_script over word units (continuation-marker segmentation), expanded
// back to token-level spans; applying it to a still yields b exactly.
EditScript word_level_script(const TokenSeq& a, const TokenSeq& b, const Vocab& vocab,
                             const AlignmentOptions& opts = {});

}  // namespace editdiff
