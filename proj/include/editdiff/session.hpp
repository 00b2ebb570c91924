#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "editdiff/decoding.hpp"
#include "editdiff/vocab.hpp"

namespace editdiff {

struct SessionOptions {
  DecodeConfig decode;
  const TokenSeq* source = nullptr;  // optional conditioning
  bool color = false;
  std::string log_path;  // session log JSONL; empty disables logging
  nlohmann::ordered_json config_echo;
};

// Prototype-revision REPL. Commands:
//   <text>              set the working sequence from whitespace tokens
//   :step [n]           run n denoise steps (default 1) and show the diff
//   :pin <a> <b>        lock token range [a, b) to KEEP
//   :unpin              clear all pins
//   :edit <a> <b> <t..> splice tokens over range [a, b)
//   :show               print the current tokens with indices
//   :finalize           print the final text and exit
//   :quit               exit
// Malformed commands re-prompt; decode errors are reported inline. The full
// revision history (with scripts) is written to the log on exit.
int run_session(std::istream& in, std::ostream& out, const Models& models, const Vocab& vocab,
                const SessionOptions& opts);

}  // namespace editdiff
