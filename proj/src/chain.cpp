#include "editdiff/chain.hpp"

#include "editdiff/errors.hpp"

namespace editdiff {

void validate_chain(const RevisionChain& chain) {
  if (chain.revisions.size() != chain.scripts.size() + 1)
    throw DataError("chain: revision count must be step count + 1");
  for (std::size_t k = 0; k < chain.scripts.size(); ++k) {
    if (apply_script(chain.scripts[k], chain.revisions[k]) != chain.revisions[k + 1])
      throw DataError("chain: script " + std::to_string(k) + " does not replay to revision " +
                      std::to_string(k + 1));
  }
}

nlohmann::ordered_json chain_to_json(const RevisionChain& chain, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["revisions"] = chain.revisions;
  nlohmann::ordered_json scripts = nlohmann::ordered_json::array();
  for (const auto& s : chain.scripts) scripts.push_back(script_to_json(s));
  j["scripts"] = std::move(scripts);
  j["seed"] = seed;
  return j;
}

RevisionChain chain_from_json(const nlohmann::ordered_json& j) {
  RevisionChain chain;
  chain.revisions = j.at("revisions").get<std::vector<TokenSeq>>();
  for (const auto& s : j.at("scripts")) chain.scripts.push_back(script_from_json(s));
  validate_chain(chain);
  return chain;
}

}  // namespace editdiff
