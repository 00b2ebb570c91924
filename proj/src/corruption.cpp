#include "editdiff/corruption.hpp"

#include <array>
#include <cmath>

#include "editdiff/errors.hpp"

namespace editdiff {

namespace {
constexpr int kMaxResamples = 16;
}

void CorruptionConfig::validate(const Vocab& vocab) const {
  const double sum = p_keep + p_replace + p_insert + p_delete;
  if (std::abs(sum - 1.0) > 1e-9)
    throw DataError("corruption: edit type probabilities must sum to 1");
  if (p_keep < 0 || p_replace < 0 || p_insert < 0 || p_delete < 0)
    throw DataError("corruption: edit type probabilities must be non-negative");
  if (length.kind == LengthKind::kPoisson && !(length.lambda > 0))
    throw DataError("corruption: poisson lambda must be positive");
  if (length.kind == LengthKind::kUniform && length.uniform_max < 1)
    throw DataError("corruption: uniform length max must be >= 1");
  if (max_steps < 1) throw DataError("corruption: max_steps must be >= 1");
  if (distractor == DistractorSource::kEmpiricalUnigram &&
      unigram.size() != vocab.content_size())
    throw DataError("corruption: unigram weights must cover the content vocabulary");
  if (vocab.content_size() == 0) throw DataError("corruption: empty content vocabulary");
}

EditTag sample_edit_type(Rng& rng, const CorruptionConfig& cfg) {
  const std::array<double, 4> probs = {cfg.p_keep, cfg.p_replace, cfg.p_insert, cfg.p_delete};
  switch (sample_categorical(rng, probs)) {
    case 0: return EditTag::kKeep;
    case 1: return EditTag::kReplace;
    case 2: return EditTag::kInsert;
    default: return EditTag::kDelete;
  }
}

int sample_edit_length(Rng& rng, const LengthDist& dist) {
  if (dist.kind == LengthKind::kPoisson) return sample_truncated_poisson(rng, dist.lambda);
  return static_cast<int>(1 + rand_index(rng, static_cast<std::size_t>(dist.uniform_max)));
}

TokenId sample_distractor(Rng& rng, const CorruptionConfig& cfg, const Vocab& vocab) {
  if (cfg.distractor == DistractorSource::kUniformVocab)
    return static_cast<TokenId>(Vocab::kReservedCount + rand_index(rng, vocab.content_size()));
  std::size_t k = sample_categorical(rng, cfg.unigram);
  return static_cast<TokenId>(Vocab::kReservedCount + k);
}

namespace {

TokenSeq sample_distractors(Rng& rng, const CorruptionConfig& cfg, const Vocab& vocab, int count) {
  TokenSeq out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(sample_distractor(rng, cfg, vocab));
  return out;
}

// Left-to-right multi-edit walk. Every emitted op corresponds to exactly one
// iid draw from the edit type distribution.
EditScript walk_script(const TokenSeq& x, const CorruptionConfig& cfg, const Vocab& vocab,
                       Rng& rng) {
  EditScript fwd;
  const std::size_t n = x.size();
  std::size_t pos = 0;
  while (pos < n) {
    const EditTag tag = sample_edit_type(rng, cfg);
    switch (tag) {
      case EditTag::kKeep:
        fwd.ops.push_back({EditTag::kKeep, 1, {}});
        pos += 1;
        break;
      case EditTag::kDelete: {
        auto len = static_cast<std::uint32_t>(
            std::min<std::size_t>(static_cast<std::size_t>(sample_edit_length(rng, cfg.length)),
                                  n - pos));
        fwd.ops.push_back({EditTag::kDelete, len, {}});
        pos += len;
        break;
      }
      case EditTag::kReplace: {
        auto len = static_cast<std::uint32_t>(
            std::min<std::size_t>(static_cast<std::size_t>(sample_edit_length(rng, cfg.length)),
                                  n - pos));
        fwd.ops.push_back(
            {EditTag::kReplace, len, sample_distractors(rng, cfg, vocab, static_cast<int>(len))});
        pos += len;
        break;
      }
      case EditTag::kInsert: {
        int len = sample_edit_length(rng, cfg.length);
        fwd.ops.push_back({EditTag::kInsert, 0, sample_distractors(rng, cfg, vocab, len)});
        break;
      }
    }
  }
  return fwd;
}

// Single sampled edit applied at one random location; KEEP leaves x unchanged.
EditScript single_edit_script(const TokenSeq& x, const CorruptionConfig& cfg, const Vocab& vocab,
                              Rng& rng) {
  const std::size_t n = x.size();
  EditScript fwd;
  const EditTag tag = sample_edit_type(rng, cfg);
  auto keep_run = [&](std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) fwd.ops.push_back({EditTag::kKeep, 1, {}});
  };
  if (tag == EditTag::kKeep) {
    keep_run(n);
    return fwd;
  }
  if (tag == EditTag::kInsert) {
    std::size_t gap = rand_index(rng, n + 1);
    int len = sample_edit_length(rng, cfg.length);
    keep_run(gap);
    fwd.ops.push_back({EditTag::kInsert, 0, sample_distractors(rng, cfg, vocab, len)});
    keep_run(n - gap);
    return fwd;
  }
  std::size_t start = rand_index(rng, n);
  auto len = static_cast<std::uint32_t>(std::min<std::size_t>(
      static_cast<std::size_t>(sample_edit_length(rng, cfg.length)), n - start));
  keep_run(start);
  if (tag == EditTag::kDelete)
    fwd.ops.push_back({EditTag::kDelete, len, {}});
  else
    fwd.ops.push_back(
        {EditTag::kReplace, len, sample_distractors(rng, cfg, vocab, static_cast<int>(len))});
  keep_run(n - start - len);
  return fwd;
}

}  // namespace

CorruptionStepRecord corrupt_step(const TokenSeq& x, const CorruptionConfig& cfg,
                                  const Vocab& vocab, Rng& rng) {
  cfg.validate(vocab);

  if (x.empty()) {
    // The only productive edit on an empty sequence is an insertion.
    for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
      if (sample_edit_type(rng, cfg) != EditTag::kInsert) continue;
      int len = sample_edit_length(rng, cfg.length);
      EditScript fwd;
      fwd.ops.push_back({EditTag::kInsert, 0, sample_distractors(rng, cfg, vocab, len)});
      CorruptionStepRecord rec;
      rec.before = x;
      rec.after = apply_script(fwd, x);
      rec.inverse_script = invert_script(fwd, x);
      rec.forward_script = std::move(fwd);
      return rec;
    }
    throw DataError("corrupt_step: cannot corrupt an empty sequence (no INSERT sampled)");
  }

  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    EditScript fwd = cfg.single_edit_per_step ? single_edit_script(x, cfg, vocab, rng)
                                              : walk_script(x, cfg, vocab, rng);
    TokenSeq after = apply_script(fwd, x);
    if (after.empty()) continue;  // a step may not erase the sequence entirely
    CorruptionStepRecord rec;
    rec.before = x;
    rec.after = std::move(after);
    rec.inverse_script = invert_script(fwd, x);
    rec.forward_script = std::move(fwd);
    return rec;
  }
  throw DataError("corrupt_step: exceeded resample budget without a non-empty result");
}

RevisionChain corrupt_chain(const TokenSeq& x0, int steps, const CorruptionConfig& cfg,
                            const Vocab& vocab, Rng& rng) {
  if (steps < 1 || steps > cfg.max_steps)
    throw DataError("corrupt_chain: steps must be in [1, max_steps]");
  std::vector<CorruptionStepRecord> records;
  records.reserve(static_cast<std::size_t>(steps));
  TokenSeq x = x0;
  for (int t = 0; t < steps; ++t) {
    records.push_back(corrupt_step(x, cfg, vocab, rng));
    x = records.back().after;
  }
  RevisionChain chain;
  chain.revisions.reserve(records.size() + 1);
  chain.scripts.reserve(records.size());
  // Most-corrupted-first: the scripts attached are the denoising trajectory.
  for (std::size_t k = records.size(); k-- > 0;) {
    chain.revisions.push_back(records[k].after);
    chain.scripts.push_back(records[k].inverse_script);
  }
  chain.revisions.push_back(x0);
  return chain;
}

TrainingExample make_training_example(const TokenSeq& x0, const CorruptionConfig& cfg,
                                      const Vocab& vocab, Rng& rng) {
  const int t = 1 + static_cast<int>(rand_index(rng, static_cast<std::size_t>(cfg.max_steps)));
  TokenSeq x = x0;
  CorruptionStepRecord last;
  for (int k = 0; k < t; ++k) {
    last = corrupt_step(x, cfg, vocab, rng);
    x = last.after;
  }
  TrainingExample ex;
  ex.input = last.after;
  ex.x_prev = last.before;
  ex.t = t;
  ex.gold = expand_tags(normalize_script(last.inverse_script, last.after));
  return ex;
}

}  // namespace editdiff
