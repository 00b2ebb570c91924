#pragma once

// Brute-force search oracle: enumerates every chain the decoder can reach
// (argmax tags per state, every payload filling, mirrored budget rule) and
// maximizes the summed step score by memoized recursion. Independent of the
// library's beam search; used to check search optimality at tiny scale.

#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "editdiff/decoding.hpp"
#include "editdiff/scoring.hpp"

namespace testoracle {

using editdiff::Dist;
using editdiff::EditTag;
using editdiff::Models;
using editdiff::StepPlan;
using editdiff::TagDist;
using editdiff::TokenId;
using editdiff::TokenSeq;
using editdiff::Vocab;

struct StepCand {
  TokenSeq out;
  double delta = 0.0;
};

inline std::vector<EditTag> oracle_tags(const std::vector<TagDist>& scores, bool input_empty,
                                        double* tag_logp) {
  std::vector<EditTag> tags(scores.size());
  *tag_logp = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == 0 && input_empty) {
      tags[0] = EditTag::kInsert;
      continue;
    }
    std::size_t best = 0;
    for (std::size_t t = 1; t < 4; ++t)
      if (scores[i][t] > scores[i][best]) best = t;
    tags[i] = static_cast<EditTag>(best);
    *tag_logp += std::log(scores[i][best]);
  }
  if (tags[0] == EditTag::kDelete || tags[0] == EditTag::kReplace) tags[0] = EditTag::kKeep;
  return tags;
}

inline void fill_slots(const Models& models, const StepPlan& plan, const TokenSeq* source,
                       const editdiff::DecodeConfig& cfg, std::size_t piece_idx, TokenSeq out,
                       double gen_logp, std::vector<StepCand>* cands) {
  while (piece_idx < plan.pieces.size() && !plan.pieces[piece_idx].is_slot) {
    out.push_back(plan.pieces[piece_idx].token);
    ++piece_idx;
  }
  if (piece_idx >= plan.pieces.size()) {
    cands->push_back({std::move(out), gen_logp});
    return;
  }
  const StepPlan::Slot& slot = plan.slots[plan.pieces[piece_idx].slot];
  std::size_t reserve = 0;
  for (std::size_t k = piece_idx + 1; k < plan.pieces.size(); ++k) {
    const StepPlan::Piece& p = plan.pieces[k];
    reserve += p.is_slot ? (plan.slots[p.slot].kind == EditTag::kReplace ? 1 : 0) : 1;
  }
  const std::size_t room =
      cfg.max_len > reserve + out.size() ? cfg.max_len - reserve - out.size() : 0;
  const std::size_t cap = std::min({room, cfg.max_span_len, models.generator->max_span_len()});

  struct Frame {
    TokenSeq payload;
    double logp;
  };
  std::vector<Frame> stack = {{{}, 0.0}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    editdiff::GenContext ctx{&plan.base, slot.begin, slot.end, slot.kind, &out, source};
    if (f.payload.size() >= cap) {
      TokenSeq next = out;
      next.insert(next.end(), f.payload.begin(), f.payload.end());
      fill_slots(models, plan, source, cfg, piece_idx + 1, std::move(next), gen_logp + f.logp,
                 cands);
      continue;
    }
    Dist dist = models.generator->next_token_dist(ctx, f.payload);
    for (std::size_t v = 0; v < dist.size(); ++v) {
      if (!(dist[v] > 0.0)) continue;
      if (v == Vocab::kEndOfSpan) {
        TokenSeq next = out;
        next.insert(next.end(), f.payload.begin(), f.payload.end());
        fill_slots(models, plan, source, cfg, piece_idx + 1, std::move(next),
                   gen_logp + f.logp + std::log(dist[v]), cands);
      } else {
        Frame child;
        child.payload = f.payload;
        child.payload.push_back(static_cast<TokenId>(v));
        child.logp = f.logp + std::log(dist[v]);
        stack.push_back(std::move(child));
      }
    }
  }
}

inline std::vector<StepCand> step_candidates(const TokenSeq& x, const Models& models,
                                             const TokenSeq* source,
                                             const editdiff::DecodeConfig& cfg) {
  auto scores = models.tagger->score_tags(x, source);
  double tag_logp = 0.0;
  std::vector<EditTag> tags = oracle_tags(scores, x.empty(), &tag_logp);

  bool all_delete = !x.empty() && tags[0] != EditTag::kInsert;
  for (std::size_t i = 1; i < tags.size() && all_delete; ++i)
    if (tags[i] != EditTag::kDelete) all_delete = false;

  std::vector<StepCand> cands;
  if (!all_delete) {
    StepPlan plan = editdiff::plan_step(x, tags);
    fill_slots(models, plan, source, cfg, 0, {}, 0.0, &cands);
    std::vector<StepCand> kept;
    for (StepCand& c : cands) {
      if (c.out.empty() && !x.empty()) continue;
      c.delta += tag_logp;
      kept.push_back(std::move(c));
    }
    cands = std::move(kept);
  }
  if (cands.empty()) {
    double keep_logp = 0.0;
    for (const TagDist& d : scores)
      keep_logp += std::log(d[static_cast<std::size_t>(EditTag::kKeep)]);
    cands.push_back({x, keep_logp});
  }
  return cands;
}

inline double best_chain(const TokenSeq& x, const Models& models, const TokenSeq* source,
                         const editdiff::DecodeConfig& cfg, int steps,
                         std::map<std::pair<TokenSeq, int>, double>* memo,
                         std::size_t* state_count = nullptr) {
  if (steps == 0) return 0.0;
  auto key = std::make_pair(x, steps);
  auto it = memo->find(key);
  if (it != memo->end()) return it->second;
  if (state_count != nullptr) ++*state_count;
  double best = -std::numeric_limits<double>::infinity();
  for (const StepCand& c : step_candidates(x, models, source, cfg)) {
    double total = c.delta + best_chain(c.out, models, source, cfg, steps - 1, memo, state_count);
    best = std::max(best, total);
  }
  (*memo)[key] = best;
  return best;
}

}  // namespace testoracle
