#pragma once

#include <json.hpp>

#include "editdiff/edit_script.hpp"
#include "editdiff/vocab.hpp"

namespace editdiff {

// Ordered revisions x_T ... x_0 with the scripts linking them:
// apply(scripts[k], revisions[k]) == revisions[k+1].
struct RevisionChain {
  std::vector<TokenSeq> revisions;
  std::vector<EditScript> scripts;

  std::size_t step_count() const { return scripts.size(); }
  const TokenSeq& initial() const { return revisions.front(); }
  const TokenSeq& final() const { return revisions.back(); }

  bool operator==(const RevisionChain&) const = default;
};

// Replays every script; throws DataError on any mismatch.
void validate_chain(const RevisionChain& chain);

// {"revisions": [[ids]...], "scripts": [script-json...], "seed": int}
nlohmann::ordered_json chain_to_json(const RevisionChain& chain, std::uint64_t seed);
RevisionChain chain_from_json(const nlohmann::ordered_json& j);

}  // namespace editdiff
