#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "editdiff/vocab.hpp"

namespace editdiff {

// The four Levenshtein edit operations. Serialized names are stable.
enum class EditTag : std::uint8_t { kKeep = 0, kDelete = 1, kReplace = 2, kInsert = 3 };

const char* tag_name(EditTag tag);
EditTag tag_from_name(const std::string& name);

// One aligned operation: consumes `consume` source tokens and produces
// `payload`. KEEP consumes exactly 1 and reproduces it (payload stays empty),
// DELETE consumes >= 1 and produces nothing, REPLACE consumes >= 1 and
// produces >= 1, INSERT consumes 0 and produces >= 1.
struct EditOp {
  EditTag tag = EditTag::kKeep;
  std::uint32_t consume = 1;
  TokenSeq payload;

  bool operator==(const EditOp&) const = default;
};

// Aligned sequence of operations transforming one token sequence into another.
// The total `consume` over ops must equal the length of the source it applies to.
struct EditScript {
  std::vector<EditOp> ops;

  bool operator==(const EditScript&) const = default;
};

// Throws DataError if any op violates the per-tag shape invariants.
void validate_script(const EditScript& script);

std::size_t script_consumed(const EditScript& script);
std::size_t script_produced(const EditScript& script);

// Pure application; throws DataError on consumption/length mismatch.
TokenSeq apply_script(const EditScript& script, const TokenSeq& src);

// Structural inverse: INSERT <-> DELETE, REPLACE swaps payload with the
// consumed span, KEEP stays. apply(invert(s, src), apply(s, src)) == src.
EditScript invert_script(const EditScript& script, const TokenSeq& src);

// Canonical form: zero-length ops dropped, identity REPLACE turned into KEEP
// runs, adjacent same-tag spans merged, and any INSERT adjacent to a DELETE or
// REPLACE folded into a REPLACE so the script is expressible as per-token tags.
// Application semantics are preserved exactly.
EditScript normalize_script(const EditScript& script, const TokenSeq& src);

// Per-position tag view of a script over a source of length n.
// tags[0] is the leading insertion gap; tags[i] (i >= 1) tags source token
// i-1. An INSERT tag at i >= 1 means "keep token i-1 and insert after it".
// payloads[i] holds the INSERT payload at i, or the payload of the REPLACE run
// starting at i; empty elsewhere.
struct TagExpansion {
  std::vector<EditTag> tags;
  std::vector<TokenSeq> payloads;

  std::size_t source_len() const { return tags.empty() ? 0 : tags.size() - 1; }
  bool all_keep() const;
};

// Expansion fails (DataError) on scripts where an INSERT follows a DELETE or
// REPLACE; normalize_script first. Adjacent same-tag ops are merged in place.
TagExpansion expand_tags(const EditScript& script);

// Inverse of expand_tags: rebuilds the (canonical) script.
EditScript tags_to_script(const TagExpansion& expansion);

// JSON wire format: [{"tag": name, "consume": int, "payload": [ids]}, ...].
// Round-trips bit-exactly.
nlohmann::ordered_json script_to_json(const EditScript& script);
EditScript script_from_json(const nlohmann::ordered_json& j);

}  // namespace editdiff
