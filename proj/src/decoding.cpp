#include "editdiff/decoding.hpp"

#include <algorithm>
#include <map>
#include <cmath>

#include "editdiff/errors.hpp"

namespace editdiff {

void DecodeConfig::validate() const {
  if (steps < 0) throw DataError("decode: steps must be >= 0");
  if (intra_width < 1) throw DataError("decode: intra width b must be >= 1");
  if (inter_width < 1) throw DataError("decode: inter width r must be >= 1");
  if (!(nucleus_p > 0.0) || nucleus_p > 1.0) throw DataError("decode: nucleus_p must be in (0,1]");
  if (max_len < 1) throw DataError("decode: max_len must be >= 1");
  if (length_norm_alpha < 0) throw DataError("decode: length_norm_alpha must be >= 0");
}

double normalized_score(const Hypothesis& h, double alpha) {
  const double denom = std::pow(static_cast<double>(std::max<std::size_t>(1, h.gen_token_count)),
                                alpha);
  return h.cum_logp / denom;
}

Hypothesis make_hypothesis(TokenSeq tokens) {
  Hypothesis h;
  h.tokens = std::move(tokens);
  return h;
}

std::size_t nucleus_sample(std::span<const double> dist, double p, Rng& rng) {
  std::vector<std::size_t> order(dist.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dist[a] != dist[b]) return dist[a] > dist[b];
    return a < b;
  });
  double mass = 0.0;
  std::size_t cut = 0;
  while (cut < order.size()) {
    mass += dist[order[cut]];
    ++cut;
    if (mass >= p) break;
  }
  const double u = rand_unit(rng) * mass;
  double acc = 0.0;
  for (std::size_t k = 0; k < cut; ++k) {
    acc += dist[order[k]];
    if (u < acc) return order[k];
  }
  return order[cut - 1];
}

namespace {

bool lex_less(const TokenSeq& a, const TokenSeq& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Deterministic hypothesis preference: higher score, then lexicographically
// smaller tokens, then earlier arrival.
struct Ranked {
  double score;
  std::size_t order;
  Hypothesis hyp;
};

bool ranked_better(const Ranked& a, const Ranked& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.hyp.tokens != b.hyp.tokens) return lex_less(a.hyp.tokens, b.hyp.tokens);
  return a.order < b.order;
}

// ---------------------------------------------------------------------------
// Payload search over one step's slots

struct GenPath {
  std::size_t piece_idx = 0;
  bool slot_open = false;
  TokenSeq cur;
  std::vector<TokenSeq> payloads;
  TokenSeq out;
  double logp = 0.0;
  std::size_t gen_count = 0;
  std::size_t order = 0;
};

bool path_better(const GenPath& a, const GenPath& b) {
  if (a.logp != b.logp) return a.logp > b.logp;
  if (a.out != b.out) return lex_less(a.out, b.out);
  if (a.cur != b.cur) return lex_less(a.cur, b.cur);
  return a.order < b.order;
}

struct StepContext {
  const StepPlan* plan;
  const Models* models;
  const TokenSeq* source;
  std::size_t max_len;
  std::size_t span_cap;  // min(cfg.max_span_len, generator cap)
  std::vector<std::size_t> suffix_min;  // min production of pieces after index i
};

StepContext make_step_context(const StepPlan& plan, const Models& models, const TokenSeq* source,
                              const DecodeConfig& cfg) {
  StepContext sc;
  sc.plan = &plan;
  sc.models = &models;
  sc.source = source;
  sc.max_len = cfg.max_len;
  sc.span_cap = std::min(cfg.max_span_len, models.generator->max_span_len());
  sc.suffix_min.assign(plan.pieces.size() + 1, 0);
  for (std::size_t i = plan.pieces.size(); i-- > 0;) {
    const StepPlan::Piece& piece = plan.pieces[i];
    std::size_t need = 1;
    if (piece.is_slot) need = plan.slots[piece.slot].kind == EditTag::kReplace ? 1 : 0;
    sc.suffix_min[i] = sc.suffix_min[i + 1] + need;
  }
  return sc;
}

std::size_t slot_budget(const StepContext& sc, const GenPath& path) {
  const std::size_t reserve = sc.suffix_min[path.piece_idx + 1] + path.out.size();
  const std::size_t room = sc.max_len > reserve ? sc.max_len - reserve : 0;
  return std::min(room, sc.span_cap);
}

// Emits kept tokens and closes budget-exhausted slots until the path reaches a
// slot that can branch, or finishes.
void settle(const StepContext& sc, GenPath& path) {
  const StepPlan& plan = *sc.plan;
  for (;;) {
    if (path.slot_open) {
      if (path.cur.size() < slot_budget(sc, path)) return;  // may branch
      // Budget reached: forced close, no probability factor.
      path.payloads.push_back(path.cur);
      path.out.insert(path.out.end(), path.cur.begin(), path.cur.end());
      path.cur.clear();
      path.slot_open = false;
      ++path.piece_idx;
      continue;
    }
    if (path.piece_idx >= plan.pieces.size()) return;  // complete
    const StepPlan::Piece& piece = plan.pieces[path.piece_idx];
    if (piece.is_slot) {
      path.slot_open = true;
      continue;
    }
    path.out.push_back(piece.token);
    ++path.piece_idx;
  }
}

bool path_done(const StepContext& sc, const GenPath& path) {
  return !path.slot_open && path.piece_idx >= sc.plan->pieces.size();
}

GenContext slot_context(const StepContext& sc, const GenPath& path) {
  const StepPlan::Slot& slot = sc.plan->slots[sc.plan->pieces[path.piece_idx].slot];
  return GenContext{&sc.plan->base, slot.begin, slot.end, slot.kind, &path.out, sc.source};
}

void close_slot(GenPath& path, double eos_logp) {
  path.logp += eos_logp;
  path.payloads.push_back(path.cur);
  path.out.insert(path.out.end(), path.cur.begin(), path.cur.end());
  path.cur.clear();
  path.slot_open = false;
  ++path.piece_idx;
}

// Single-path payload decoding (greedy argmax or nucleus sampling).
GenPath run_single_path(const StepContext& sc, bool sample, double nucleus_p, Rng& rng) {
  GenPath path;
  settle(sc, path);
  while (!path_done(sc, path)) {
    GenContext ctx = slot_context(sc, path);
    Dist dist = sc.models->generator->next_token_dist(ctx, path.cur);
    std::size_t pick;
    if (sample) {
      pick = nucleus_sample(dist, nucleus_p, rng);
    } else {
      pick = 0;
      for (std::size_t v = 1; v < dist.size(); ++v)
        if (dist[v] > dist[pick]) pick = v;
    }
    const double lp = std::log(std::max(dist[pick], 1e-300));
    if (pick == Vocab::kEndOfSpan) {
      close_slot(path, lp);
    } else {
      path.cur.push_back(static_cast<TokenId>(pick));
      path.logp += lp;
      path.gen_count += 1;
    }
    settle(sc, path);
  }
  return path;
}

// Lockstep beam over the step's generation events; completed paths best-first.
std::vector<GenPath> run_beam_paths(const StepContext& sc, std::size_t width) {
  std::vector<GenPath> live;
  std::vector<GenPath> done;
  std::size_t arrival = 0;

  GenPath init;
  settle(sc, init);
  init.order = arrival++;
  if (path_done(sc, init)) return {init};
  live.push_back(std::move(init));

  auto prune = [&](std::vector<GenPath>& v) {
    std::sort(v.begin(), v.end(), path_better);
    if (v.size() > width) v.resize(width);
  };

  while (!live.empty()) {
    std::vector<GenPath> next;
    for (GenPath& path : live) {
      GenContext ctx = slot_context(sc, path);
      Dist dist = sc.models->generator->next_token_dist(ctx, path.cur);
      for (std::size_t v = 0; v < dist.size(); ++v) {
        if (!(dist[v] > 0.0)) continue;
        GenPath child = path;
        child.order = arrival++;
        const double lp = std::log(dist[v]);
        if (v == Vocab::kEndOfSpan) {
          close_slot(child, lp);
        } else {
          child.cur.push_back(static_cast<TokenId>(v));
          child.logp += lp;
          child.gen_count += 1;
        }
        settle(sc, child);
        if (path_done(sc, child))
          done.push_back(std::move(child));
        else
          next.push_back(std::move(child));
      }
    }
    prune(next);
    prune(done);
    live = std::move(next);
  }
  prune(done);
  return done;
}

// ---------------------------------------------------------------------------
// Tag handling

EditTag argmax_tag(const TagDist& d) {
  std::size_t best = 0;
  for (std::size_t t = 1; t < 4; ++t)
    if (d[t] > d[best]) best = t;
  return static_cast<EditTag>(best);
}

struct TagChoice {
  std::vector<EditTag> tags;
  double tag_logp = 0.0;
};

TagChoice choose_tags(const std::vector<TagDist>& scores, StepStrategy strategy,
                      const DecodeConfig& cfg, bool input_empty,
                      const std::vector<bool>* keep_pinned, Rng& rng) {
  TagChoice choice;
  choice.tags.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    // Pinned token positions are locked to KEEP (renormalized: contributes 0).
    if (i >= 1 && keep_pinned != nullptr && i - 1 < keep_pinned->size() &&
        (*keep_pinned)[i - 1]) {
      choice.tags[i] = EditTag::kKeep;
      continue;
    }
    // From the empty sequence the only productive edit is a leading insertion.
    if (i == 0 && input_empty) {
      choice.tags[0] = EditTag::kInsert;
      continue;
    }
    if (strategy == StepStrategy::kNucleus) {
      std::size_t pick = nucleus_sample(std::span<const double>(scores[i].data(), 4),
                                        cfg.nucleus_p, rng);
      choice.tags[i] = static_cast<EditTag>(pick);
      choice.tag_logp += std::log(std::max(scores[i][pick], 1e-300));
    } else {
      EditTag t = argmax_tag(scores[i]);
      choice.tags[i] = t;
      choice.tag_logp += std::log(std::max(scores[i][static_cast<std::size_t>(t)], 1e-300));
    }
  }
  // The gap cannot delete or replace; those picks mean "no prefix insert".
  if (choice.tags[0] == EditTag::kDelete || choice.tags[0] == EditTag::kReplace)
    choice.tags[0] = EditTag::kKeep;
  return choice;
}

bool tags_produce_empty(const std::vector<EditTag>& tags) {
  if (tags[0] == EditTag::kInsert) return false;
  for (std::size_t i = 1; i < tags.size(); ++i)
    if (tags[i] != EditTag::kDelete) return false;
  return tags.size() > 1;
}

Hypothesis all_keep_fallback(const Hypothesis& start, const std::vector<TagDist>& scores) {
  Hypothesis h = start;
  double tag_logp = 0.0;
  for (const TagDist& d : scores)
    tag_logp += std::log(std::max(d[static_cast<std::size_t>(EditTag::kKeep)], 1e-300));
  EditScript script;
  for (std::size_t k = 0; k < start.tokens.size(); ++k)
    script.ops.push_back({EditTag::kKeep, 1, {}});
  h.cum_logp += tag_logp;
  h.step_index += 1;
  h.trace.push_back(std::move(script));
  h.last_step_all_keep = true;
  return h;
}

// Builds the final per-position expansion with generated payloads, degrading
// empty REPLACE payloads to DELETE and dropping empty INSERTs.
Hypothesis assemble_hypothesis(const Hypothesis& start, const std::vector<EditTag>& tags,
                               const StepPlan& plan, const GenPath& path, double tag_logp) {
  TagExpansion ex;
  ex.tags = tags;
  ex.payloads.assign(tags.size(), {});
  for (std::size_t s = 0; s < plan.slots.size(); ++s) {
    const StepPlan::Slot& slot = plan.slots[s];
    const TokenSeq& payload = path.payloads[s];
    if (payload.empty()) {
      if (slot.kind == EditTag::kInsert) {
        ex.tags[slot.tag_pos] = EditTag::kKeep;
      } else {
        for (std::size_t i = slot.tag_pos; i < ex.tags.size() && ex.tags[i] == EditTag::kReplace;
             ++i)
          ex.tags[i] = EditTag::kDelete;
      }
      continue;
    }
    ex.payloads[slot.tag_pos] = payload;
  }

  Hypothesis h = start;
  h.tokens = path.out;
  h.cum_logp += tag_logp + path.logp;
  h.step_index += 1;
  h.gen_token_count += path.gen_count;
  h.trace.push_back(tags_to_script(ex));
  h.last_step_all_keep = ex.all_keep();
  return h;
}

}  // namespace

std::vector<Hypothesis> denoise_step(const Hypothesis& start, const Models& models,
                                     StepStrategy strategy, const DecodeConfig& cfg,
                                     const TokenSeq* source, Rng& rng,
                                     const std::vector<bool>* keep_pinned) {
  const TokenSeq& x = start.tokens;
  if (x.size() > cfg.max_len) throw DataError("denoise_step: input exceeds max_len");

  const std::vector<TagDist> scores = models.tagger->score_tags(x, source);
  TagChoice choice = choose_tags(scores, strategy, cfg, x.empty(), keep_pinned, rng);

  if (tags_produce_empty(choice.tags)) return {all_keep_fallback(start, scores)};

  StepPlan plan = plan_step(x, choice.tags);
  StepContext sc = make_step_context(plan, models, source, cfg);

  std::vector<GenPath> paths;
  if (strategy == StepStrategy::kBeam) {
    paths = run_beam_paths(sc, static_cast<std::size_t>(cfg.intra_width));
  } else {
    paths.push_back(run_single_path(sc, strategy == StepStrategy::kNucleus, cfg.nucleus_p, rng));
  }

  std::vector<Hypothesis> out;
  for (const GenPath& path : paths) {
    if (path.out.empty() && !x.empty()) continue;  // guarded below
    out.push_back(assemble_hypothesis(start, choice.tags, plan, path, choice.tag_logp));
  }
  if (out.empty()) return {all_keep_fallback(start, scores)};
  return out;
}

TokenSeq init_sequence(const InitSpec& spec, const TokenSeq* source, const Models& models,
                       const DecodeConfig& cfg, const Vocab& vocab, Rng& rng) {
  switch (spec.mode) {
    case InitMode::kNull:
      return {};
    case InitMode::kRandom: {
      std::size_t lo, hi;
      if (source != nullptr && !source->empty()) {
        const double len = static_cast<double>(source->size());
        lo = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.random_len.lo_frac * len)));
        hi = std::max(lo, static_cast<std::size_t>(std::llround(spec.random_len.hi_frac * len)));
      } else {
        lo = std::min(spec.random_len.lo_abs, cfg.max_len);
        hi = cfg.max_len;
      }
      hi = std::min(hi, cfg.max_len);
      lo = std::min(lo, hi);
      const std::size_t len = lo + rand_index(rng, hi - lo + 1);
      TokenSeq out;
      out.reserve(len);
      for (std::size_t k = 0; k < len; ++k)
        out.push_back(
            static_cast<TokenId>(Vocab::kReservedCount + rand_index(rng, vocab.content_size())));
      return out;
    }
    case InitMode::kArBootstrap: {
      if (source == nullptr) throw DataError("init: AR bootstrap requires a source sequence");
      return ar_generate(*source, models, cfg);
    }
    case InitMode::kSourceBootstrap: {
      if (source == nullptr) throw DataError("init: source bootstrap requires a source sequence");
      if (source->size() > cfg.max_len)
        throw DataError("init: source exceeds max_len");
      return *source;
    }
  }
  throw InternalError("init_sequence: bad mode");
}

TokenSeq ar_generate(const TokenSeq& source, const Models& models, const DecodeConfig& cfg,
                     std::size_t beam_width) {
  // A single INSERT span grown from the null sequence.
  StepPlan plan;
  plan.pieces.push_back({true, 0, 0});
  plan.slots.push_back({EditTag::kInsert, 0, 0, 0});
  DecodeConfig ar_cfg = cfg;
  ar_cfg.max_span_len = std::min<std::size_t>(cfg.max_len, models.generator->max_span_len());
  StepContext sc = make_step_context(plan, models, &source, ar_cfg);

  if (beam_width <= 1) {
    Rng unused(0);
    return run_single_path(sc, false, 1.0, unused).out;
  }
  std::vector<GenPath> paths = run_beam_paths(sc, beam_width);
  return paths.front().out;
}

namespace {

Hypothesis run_greedy(const Hypothesis& start, const Models& models, const DecodeConfig& cfg,
                      const TokenSeq* source, Rng& rng, StepStrategy strategy) {
  Hypothesis cur = start;
  for (int t = 0; t < cfg.steps; ++t) {
    cur = std::move(denoise_step(cur, models, strategy, cfg, source, rng).front());
    if (cfg.early_stop && cur.last_step_all_keep) break;
  }
  return cur;
}

// Intra-revision beam with greedy inter-revision selection. The greedy
// trajectory is tracked alongside so widening the search can never return a
// worse-scoring result than greedy decoding.
Hypothesis run_beam(const Hypothesis& start, const Models& models, const DecodeConfig& cfg,
                    const TokenSeq* source, Rng& rng) {
  Hypothesis main = start;
  for (int t = 0; t < cfg.steps; ++t) {
    std::vector<Hypothesis> cands = denoise_step(main, models, StepStrategy::kBeam, cfg, source,
                                                 rng);
    std::vector<Ranked> ranked;
    ranked.reserve(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i)
      ranked.push_back({normalized_score(cands[i], cfg.length_norm_alpha), i, std::move(cands[i])});
    std::sort(ranked.begin(), ranked.end(), ranked_better);
    main = std::move(ranked.front().hyp);
    if (cfg.early_stop && main.last_step_all_keep) break;
  }
  Hypothesis shadow = run_greedy(start, models, cfg, source, rng, StepStrategy::kGreedy);
  Ranked a{normalized_score(main, cfg.length_norm_alpha), 0, std::move(main)};
  Ranked b{normalized_score(shadow, cfg.length_norm_alpha), 1, std::move(shadow)};
  return ranked_better(a, b) ? std::move(a.hyp) : std::move(b.hyp);
}

Hypothesis run_beam2d(const Hypothesis& start, const Models& models, const DecodeConfig& cfg,
                      const TokenSeq* source, Rng& rng) {
  const auto r = static_cast<std::size_t>(cfg.inter_width);
  std::vector<Hypothesis> beams = {start};
  for (int t = 0; t < cfg.steps; ++t) {
    std::vector<Ranked> pool;
    for (Hypothesis& h : beams) {
      std::vector<Hypothesis> cands = denoise_step(h, models, StepStrategy::kBeam, cfg, source,
                                                   rng);
      for (Hypothesis& c : cands)
        pool.push_back({normalized_score(c, cfg.length_norm_alpha), pool.size(), std::move(c)});
    }
    if (pool.size() > r * static_cast<std::size_t>(cfg.intra_width))
      throw InternalError("2d beam: candidate pool exceeded r*b");
    std::sort(pool.begin(), pool.end(), ranked_better);
    // Recombination: among hypotheses with identical tokens and generated
    // token counts the lower-scoring ones are dominated for every possible
    // continuation; keep only the best.
    std::map<std::pair<TokenSeq, std::size_t>, bool> seen;
    beams.clear();
    for (Ranked& rk : pool) {
      if (beams.size() >= r) break;
      auto key = std::make_pair(rk.hyp.tokens, rk.hyp.gen_token_count);
      if (seen.emplace(std::move(key), true).second) beams.push_back(std::move(rk.hyp));
    }
    if (cfg.early_stop && beams.front().last_step_all_keep) break;
  }
  // The beam and greedy trajectories bound the result from below.
  Hypothesis beam_best = run_beam(start, models, cfg, source, rng);
  std::vector<Ranked> finals;
  finals.push_back({normalized_score(beams.front(), cfg.length_norm_alpha), 0,
                    std::move(beams.front())});
  finals.push_back({normalized_score(beam_best, cfg.length_norm_alpha), 1, std::move(beam_best)});
  std::sort(finals.begin(), finals.end(), ranked_better);
  return std::move(finals.front().hyp);
}

}  // namespace

DecodeResult decode(const TokenSeq* source, const Models& models, const InitSpec& init,
                    DecodeMethod method, const DecodeConfig& cfg, const Vocab& vocab, Rng& rng) {
  cfg.validate();
  if (models.tagger == nullptr || models.generator == nullptr)
    throw InternalError("decode: missing models");

  Hypothesis start = make_hypothesis(init_sequence(init, source, models, cfg, vocab, rng));
  Hypothesis best;
  if (cfg.steps == 0) {
    best = start;
  } else {
    switch (method) {
      case DecodeMethod::kGreedy:
        best = run_greedy(start, models, cfg, source, rng, StepStrategy::kGreedy);
        break;
      case DecodeMethod::kNucleus:
        best = run_greedy(start, models, cfg, source, rng, StepStrategy::kNucleus);
        break;
      case DecodeMethod::kBeam:
        best = run_beam(start, models, cfg, source, rng);
        break;
      case DecodeMethod::kBeam2d:
        best = run_beam2d(start, models, cfg, source, rng);
        break;
    }
  }

  DecodeResult result;
  result.cum_logp = best.cum_logp;
  result.norm_score = normalized_score(best, cfg.length_norm_alpha);
  result.chain.revisions.push_back(start.tokens);
  for (const EditScript& s : best.trace) {
    result.chain.scripts.push_back(s);
    result.chain.revisions.push_back(apply_script(s, result.chain.revisions.back()));
  }
  result.output = result.chain.revisions.back();
  if (result.output != best.tokens)
    throw InternalError("decode: trace does not replay to the decoded sequence");
  return result;
}

// ---------------------------------------------------------------------------
// Trace rendering

namespace {

constexpr const char* kRed = "\x1b[31m";
constexpr const char* kBlue = "\x1b[34m";
constexpr const char* kYellow = "\x1b[33m";
constexpr const char* kReset = "\x1b[0m";

std::string join_tokens(const TokenSeq& seq, const Vocab& vocab, std::size_t begin,
                        std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += vocab.surface(seq[i]);
  }
  return out;
}

}  // namespace

std::string render_trace(const RevisionChain& chain, const Vocab& vocab, bool color) {
  std::string out;
  out += "step 0: " + join_tokens(chain.revisions[0], vocab, 0, chain.revisions[0].size()) + "\n";
  for (std::size_t k = 0; k < chain.scripts.size(); ++k) {
    const TokenSeq& src = chain.revisions[k];
    out += "step " + std::to_string(k + 1) + ":";
    std::size_t pos = 0;
    for (const EditOp& op : chain.scripts[k].ops) {
      switch (op.tag) {
        case EditTag::kKeep:
          out += " " + vocab.surface(src[pos]);
          pos += 1;
          break;
        case EditTag::kDelete:
          out += " ";
          if (color) out += kRed;
          out += "[-" + join_tokens(src, vocab, pos, pos + op.consume) + "-]";
          if (color) out += kReset;
          pos += op.consume;
          break;
        case EditTag::kInsert:
          out += " ";
          if (color) out += kBlue;
          out += "{+" + join_tokens(op.payload, vocab, 0, op.payload.size()) + "+}";
          if (color) out += kReset;
          break;
        case EditTag::kReplace:
          out += " ";
          if (color) out += kYellow;
          out += "{~" + join_tokens(src, vocab, pos, pos + op.consume) + " => " +
                 join_tokens(op.payload, vocab, 0, op.payload.size()) + "~}";
          if (color) out += kReset;
          pos += op.consume;
          break;
      }
    }
    out += "\n";
  }
  return out;
}

}  // namespace editdiff
