#include "editdiff/vocab.hpp"

#include <fstream>
#include <sstream>

#include "editdiff/errors.hpp"

namespace editdiff {

namespace {
const char* kReservedSurfaces[Vocab::kReservedCount] = {
    "<pad>", "<bos>", "<eos>", "<eosp>", "<unk>",
};
}  // namespace

Vocab Vocab::make(const std::vector<std::string>& content_surfaces) {
  Vocab v;
  v.surfaces_.reserve(kReservedCount + content_surfaces.size());
  for (const char* s : kReservedSurfaces) v.surfaces_.emplace_back(s);
  for (const auto& s : content_surfaces) {
    if (s.empty()) throw DataError("vocab: empty surface form");
    v.surfaces_.push_back(s);
  }
  v.index_surfaces();
  return v;
}

void Vocab::index_surfaces() {
  ids_.clear();
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    auto [it, inserted] = ids_.emplace(surfaces_[i], static_cast<TokenId>(i));
    if (!inserted) throw DataError("vocab: duplicate surface form '" + surfaces_[i] + "'");
  }
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("vocab: cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.size() < kReservedCount)
    throw DataError("vocab: file too short for reserved header: " + path);
  for (std::size_t i = 0; i < kReservedCount; ++i) {
    if (lines[i] != kReservedSurfaces[i])
      throw DataError("vocab: bad reserved header line " + std::to_string(i) + " in " + path);
  }
  Vocab v;
  v.surfaces_ = std::move(lines);
  while (!v.surfaces_.empty() && v.surfaces_.back().empty()) v.surfaces_.pop_back();
  v.index_surfaces();
  return v;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("vocab: cannot write " + path);
  for (const auto& s : surfaces_) out << s << '\n';
}

const std::string& Vocab::surface(TokenId id) const {
  if (id >= surfaces_.size())
    throw DataError("vocab: id " + std::to_string(id) + " out of range");
  return surfaces_[id];
}

TokenId Vocab::id(const std::string& surface) const {
  auto it = ids_.find(surface);
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocab::contains(const std::string& surface) const { return ids_.count(surface) != 0; }

bool Vocab::is_continuation(TokenId id) const {
  const std::string& s = surface(id);
  return s.size() > 2 && s[0] == '#' && s[1] == '#';
}

std::uint64_t Vocab::hash64() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& s : surfaces_) {
    for (unsigned char c : s) mix(c);
    mix('\n');
  }
  return h;
}

TokenSeq Vocab::encode(const std::string& text) const {
  TokenSeq out;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) out.push_back(id(tok));
  return out;
}

std::string Vocab::decode(const TokenSeq& seq) const {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += surface(seq[i]);
  }
  return out;
}

std::vector<std::vector<std::size_t>> segment_words(const TokenSeq& seq, const Vocab& vocab) {
  std::vector<std::vector<std::size_t>> spans;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i == 0 || !vocab.is_continuation(seq[i])) spans.emplace_back();
    spans.back().push_back(i);
  }
  return spans;
}

}  // namespace editdiff
