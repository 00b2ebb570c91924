#include "editdiff/tasks.hpp"

#include <fstream>

#include "editdiff/errors.hpp"
#include "editdiff/rand.hpp"

namespace editdiff {

namespace {

std::vector<std::string> generic_surfaces(std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::string name = "w";
    if (i < 10) name += "0";
    name += std::to_string(i);
    out.push_back(name);
  }
  return out;
}

// Distinct tokens, unbiased order.
TokenSeq sample_without_replacement(Rng& rng, std::size_t count, TokenId lo, std::size_t pool_size) {
  std::vector<TokenId> pool(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) pool[i] = lo + static_cast<TokenId>(i);
  TokenSeq out;
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t pick = rand_index(rng, pool.size());
    out.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

}  // namespace

SynthResult synth_corpus(const std::string& task, std::size_t size, std::uint64_t seed) {
  SynthResult result;

  if (task == "copy" || task == "reverse") {
    result.vocab = Vocab::make(generic_surfaces(48));
    Rng gen(splitmix64(seed));
    for (std::size_t i = 0; i < size; ++i) {
      std::size_t len = 5 + rand_index(gen, 8);  // 5..12
      TokenSeq src = sample_without_replacement(gen, len, Vocab::kReservedCount, 48);
      TokenSeq tgt = src;
      if (task == "reverse") std::reverse(tgt.begin(), tgt.end());
      result.pairs.push_back({std::move(src), std::move(tgt)});
    }
    return result;
  }

  if (task == "substitute") {
    // 40 generic tokens plus 4 swap pairs: sK appears only in sources and is
    // rewritten to tK in targets.
    std::vector<std::string> surfaces = generic_surfaces(40);
    for (int k = 0; k < 4; ++k) surfaces.push_back("s" + std::to_string(k));
    for (int k = 0; k < 4; ++k) surfaces.push_back("t" + std::to_string(k));
    result.vocab = Vocab::make(surfaces);
    const TokenId s_base = Vocab::kReservedCount + 40;
    const TokenId t_base = s_base + 4;

    Rng gen(splitmix64(seed));
    for (std::size_t i = 0; i < size; ++i) {
      std::size_t generic_len = 6 + rand_index(gen, 5);          // 6..10
      std::size_t swap_count = 1 + rand_index(gen, 3);           // 1..3
      TokenSeq generics =
          sample_without_replacement(gen, generic_len, Vocab::kReservedCount, 40);
      TokenSeq swaps = sample_without_replacement(gen, swap_count, s_base, 4);
      TokenSeq src = generics;
      for (TokenId s : swaps) {
        std::size_t pos = rand_index(gen, src.size() + 1);
        src.insert(src.begin() + static_cast<std::ptrdiff_t>(pos), s);
      }
      TokenSeq tgt = src;
      for (TokenId& id : tgt)
        if (id >= s_base && id < t_base) id = t_base + (id - s_base);
      result.pairs.push_back({std::move(src), std::move(tgt)});
    }
    return result;
  }

  if (task == "summarize-synthetic") {
    // Chunked documents: every chunk is introduced by a <keep> or <drop>
    // marker; the target is the concatenation of kept chunks, markers removed.
    std::vector<std::string> surfaces = generic_surfaces(44);
    surfaces.push_back("<keep>");
    surfaces.push_back("<drop>");
    result.vocab = Vocab::make(surfaces);
    const TokenId keep_marker = Vocab::kReservedCount + 44;
    const TokenId drop_marker = keep_marker + 1;

    Rng gen(splitmix64(seed));
    for (std::size_t i = 0; i < size; ++i) {
      std::size_t chunks = 2 + rand_index(gen, 3);  // 2..4
      std::size_t keep_at = rand_index(gen, chunks);
      TokenSeq pool = sample_without_replacement(gen, 16, Vocab::kReservedCount, 44);
      std::size_t cursor = 0;
      TokenSeq src, tgt;
      for (std::size_t c = 0; c < chunks; ++c) {
        const bool keep = c == keep_at || rand_unit(gen) < 0.5;
        std::size_t chunk_len = 2 + rand_index(gen, 3);  // 2..4
        src.push_back(keep ? keep_marker : drop_marker);
        for (std::size_t k = 0; k < chunk_len && cursor < pool.size(); ++k) {
          src.push_back(pool[cursor]);
          if (keep) tgt.push_back(pool[cursor]);
          ++cursor;
        }
      }
      result.pairs.push_back({std::move(src), std::move(tgt)});
    }
    return result;
  }

  throw UsageError("synth: unknown task '" + task + "'");
}

int split_of_index(std::size_t index) {
  const std::uint64_t h = splitmix64(0x5eedf00dULL + index);
  const std::uint64_t bucket = h % 10;
  if (bucket < 8) return 0;
  return bucket == 8 ? 1 : 2;
}

void write_corpus(const std::string& path, const std::vector<CorpusPair>& pairs,
                  const nlohmann::ordered_json& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("corpus: cannot write " + path);
  out << header.dump() << '\n';
  for (const CorpusPair& p : pairs) {
    nlohmann::ordered_json line;
    line["source"] = p.source;
    line["target"] = p.target;
    out << line.dump() << '\n';
  }
}

std::vector<CorpusPair> load_corpus(const std::string& path, const std::string& split) {
  std::ifstream in(path);
  if (!in) throw DataError("corpus: cannot open " + path);
  int want = -1;
  if (split == "train")
    want = 0;
  else if (split == "dev")
    want = 1;
  else if (split == "test")
    want = 2;
  else if (split != "all")
    throw UsageError("corpus: unknown split '" + split + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("corpus: empty file " + path);
  // Header line is validated lightly: it must be an object with a format tag.
  auto header = nlohmann::ordered_json::parse(line);
  if (!header.is_object() || !header.contains("format"))
    throw DataError("corpus: missing header line in " + path);

  std::vector<CorpusPair> out;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::ordered_json::parse(line);
    if (want < 0 || split_of_index(index) == want) {
      CorpusPair p;
      p.source = j.at("source").get<TokenSeq>();
      p.target = j.at("target").get<TokenSeq>();
      out.push_back(std::move(p));
    }
    ++index;
  }
  return out;
}

}  // namespace editdiff
