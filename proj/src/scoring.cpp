#include "editdiff/scoring.hpp"

#include <cmath>

#include "editdiff/errors.hpp"

namespace editdiff {

StepPlan plan_step(const TokenSeq& x, const std::vector<EditTag>& tags) {
  if (tags.size() != x.size() + 1) throw DataError("plan_step: tag count must be len(x) + 1");

  StepPlan plan;
  // Base sequence (post-deletion) and the base index of each surviving token.
  std::vector<std::size_t> base_index(x.size() + 1, 0);
  for (std::size_t i = 1; i < tags.size(); ++i) {
    if (tags[i] == EditTag::kDelete) continue;
    base_index[i] = plan.base.size();
    plan.base.push_back(x[i - 1]);
  }

  auto add_slot = [&](EditTag kind, std::size_t begin, std::size_t end, std::size_t tag_pos) {
    plan.pieces.push_back({true, 0, plan.slots.size()});
    plan.slots.push_back({kind, begin, end, tag_pos});
  };

  if (tags[0] == EditTag::kInsert) add_slot(EditTag::kInsert, 0, 0, 0);

  std::size_t i = 1;
  while (i < tags.size()) {
    switch (tags[i]) {
      case EditTag::kDelete:
        ++i;
        break;
      case EditTag::kKeep:
        plan.pieces.push_back({false, x[i - 1], 0});
        ++i;
        break;
      case EditTag::kInsert:
        plan.pieces.push_back({false, x[i - 1], 0});
        add_slot(EditTag::kInsert, base_index[i] + 1, base_index[i] + 1, i);
        ++i;
        break;
      case EditTag::kReplace: {
        std::size_t run = 0;
        while (i + run < tags.size() && tags[i + run] == EditTag::kReplace) ++run;
        add_slot(EditTag::kReplace, base_index[i], base_index[i] + run, i);
        i += run;
        break;
      }
    }
  }
  return plan;
}

double payload_log_prob(const Generator& gen, const GenContext& ctx, const TokenSeq& payload) {
  double total = 0.0;
  TokenSeq prefix;
  prefix.reserve(payload.size());
  for (std::size_t k = 0; k <= payload.size(); ++k) {
    Dist dist = gen.next_token_dist(ctx, prefix);
    const TokenId tok = k < payload.size() ? payload[k] : Vocab::kEndOfSpan;
    if (tok >= dist.size()) throw DataError("payload_log_prob: token outside model vocabulary");
    if (!(dist[tok] > 0.0)) return kNegInf;
    total += std::log(dist[tok]);
    if (k < payload.size()) prefix.push_back(payload[k]);
  }
  return total;
}

StepLogLik step_log_likelihood(const TokenSeq& x_t, const EditScript& script, const Tagger& tagger,
                               const Generator& gen, const TokenSeq* source) {
  for (TokenId id : x_t)
    if (id >= tagger.vocab_size()) throw DataError("step_log_likelihood: vocab mismatch");

  const TagExpansion ex = expand_tags(normalize_script(script, x_t));
  const std::vector<TagDist> tag_scores = tagger.score_tags(x_t, source);
  if (tag_scores.size() != ex.tags.size())
    throw InternalError("step_log_likelihood: tagger output length mismatch");

  StepLogLik ll;
  for (std::size_t i = 0; i < ex.tags.size(); ++i) {
    const double p = tag_scores[i][static_cast<std::size_t>(ex.tags[i])];
    if (!(p > 0.0)) {
      ll.tag_term = kNegInf;
      return ll;
    }
    ll.tag_term += std::log(p);
  }

  const StepPlan plan = plan_step(x_t, ex.tags);
  TokenSeq left_output;
  for (const StepPlan::Piece& piece : plan.pieces) {
    if (!piece.is_slot) {
      left_output.push_back(piece.token);
      continue;
    }
    const StepPlan::Slot& slot = plan.slots[piece.slot];
    const TokenSeq& payload = ex.payloads[slot.tag_pos];
    GenContext ctx{&plan.base, slot.begin, slot.end, slot.kind, &left_output, source};
    const double lp = payload_log_prob(gen, ctx, payload);
    if (lp == kNegInf) {
      ll.gen_term = kNegInf;
      return ll;
    }
    ll.gen_term += lp;
    left_output.insert(left_output.end(), payload.begin(), payload.end());
  }
  return ll;
}

double chain_log_likelihood(const RevisionChain& chain, const Tagger& tagger, const Generator& gen,
                            const TokenSeq* source) {
  double total = 0.0;
  for (std::size_t k = 0; k < chain.scripts.size(); ++k) {
    StepLogLik ll = step_log_likelihood(chain.revisions[k], chain.scripts[k], tagger, gen, source);
    if (ll.total() == kNegInf) return kNegInf;
    total += ll.total();
  }
  return total;
}

}  // namespace editdiff
