#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace editdiff {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

// Token inventory with a fixed block of reserved ids at the bottom.
// File format: one surface per line, UTF-8; the first lines are the reserved
// surfaces in canonical order, so content token at line k gets id k.
class Vocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kEndOfSpan = 3;  // terminates generated spans
  static constexpr TokenId kUnk = 4;
  static constexpr std::size_t kReservedCount = 5;

  // Builds a vocab from content surfaces (reserved tokens added automatically).
  static Vocab make(const std::vector<std::string>& content_surfaces);

  static Vocab load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t size() const { return surfaces_.size(); }
  std::size_t content_size() const { return surfaces_.size() - kReservedCount; }

  const std::string& surface(TokenId id) const;
  // Returns kUnk for unknown surfaces.
  TokenId id(const std::string& surface) const;
  bool contains(const std::string& surface) const;

  bool is_reserved(TokenId id) const { return id < kReservedCount; }
  // Subword continuation tokens carry a "##" surface prefix.
  bool is_continuation(TokenId id) const;

  // FNV-1a over the surface list; used to bind checkpoints to a vocab.
  std::uint64_t hash64() const;

  // Whitespace-tokenized surface text -> ids (unknowns map to kUnk).
  TokenSeq encode(const std::string& text) const;
  std::string decode(const TokenSeq& seq) const;

 private:
  std::vector<std::string> surfaces_;
  std::unordered_map<std::string, TokenId> ids_;

  void index_surfaces();
};

// Partition of [0, len(seq)) into contiguous word spans; a token whose surface
// starts with "##" extends the preceding word.
std::vector<std::vector<std::size_t>> segment_words(const TokenSeq& seq, const Vocab& vocab);

}  // namespace editdiff
