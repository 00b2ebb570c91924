#include "editdiff/session.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "editdiff/errors.hpp"
#include "editdiff/version.hpp"

namespace editdiff {

namespace {

struct SessionState {
  Hypothesis hyp;
  std::vector<bool> pinned;
  RevisionChain history;
  nlohmann::ordered_json events = nlohmann::ordered_json::array();

  void reset(TokenSeq tokens) {
    hyp = make_hypothesis(std::move(tokens));
    pinned.assign(hyp.tokens.size(), false);
    history.revisions = {hyp.tokens};
    history.scripts.clear();
  }
};

void log_event(SessionState& st, const char* kind, const TokenSeq& tokens) {
  nlohmann::ordered_json e;
  e["event"] = kind;
  e["tokens"] = tokens;
  st.events.push_back(std::move(e));
}

// Pins follow kept tokens through an applied script; generated tokens are
// never pinned.
std::vector<bool> remap_pins(const EditScript& script, const std::vector<bool>& pins) {
  std::vector<bool> out;
  std::size_t pos = 0;
  for (const EditOp& op : script.ops) {
    switch (op.tag) {
      case EditTag::kKeep:
        out.push_back(pos < pins.size() && pins[pos]);
        pos += 1;
        break;
      case EditTag::kDelete:
        pos += op.consume;
        break;
      case EditTag::kReplace:
        out.insert(out.end(), op.payload.size(), false);
        pos += op.consume;
        break;
      case EditTag::kInsert:
        out.insert(out.end(), op.payload.size(), false);
        break;
    }
  }
  return out;
}

void show_tokens(std::ostream& out, const SessionState& st, const Vocab& vocab) {
  out << "tokens:";
  for (std::size_t i = 0; i < st.hyp.tokens.size(); ++i) {
    out << ' ' << i << ':' << vocab.surface(st.hyp.tokens[i]);
    if (st.pinned[i]) out << "*";
  }
  out << '\n';
}

bool parse_range(std::istringstream& ss, std::size_t limit, std::size_t* a, std::size_t* b) {
  long lo = 0, hi = 0;
  if (!(ss >> lo >> hi)) return false;
  if (lo < 0 || hi < lo || static_cast<std::size_t>(hi) > limit) return false;
  *a = static_cast<std::size_t>(lo);
  *b = static_cast<std::size_t>(hi);
  return true;
}

}  // namespace

int run_session(std::istream& in, std::ostream& out, const Models& models, const Vocab& vocab,
                const SessionOptions& opts) {
  SessionState st;
  st.reset({});
  Rng rng(opts.decode.seed);
  bool finalized = false;

  out << "editdiff " << kVersion << " interactive session; :quit exits\n";
  std::string line;
  while (!finalized && (out << "> " << std::flush, std::getline(in, line))) {
    if (line.empty()) continue;
    if (line[0] != ':') {
      st.reset(vocab.encode(line));
      log_event(st, "prototype", st.hyp.tokens);
      show_tokens(out, st, vocab);
      continue;
    }

    std::istringstream ss(line);
    std::string cmd;
    ss >> cmd;
    if (cmd == ":quit") break;
    if (cmd == ":finalize") {
      out << vocab.decode(st.hyp.tokens) << '\n';
      log_event(st, "finalize", st.hyp.tokens);
      finalized = true;
      continue;
    }
    if (cmd == ":show") {
      show_tokens(out, st, vocab);
      continue;
    }
    if (cmd == ":pin") {
      std::size_t a = 0, b = 0;
      if (!parse_range(ss, st.hyp.tokens.size(), &a, &b)) {
        out << "usage: :pin <begin> <end>\n";
        continue;
      }
      for (std::size_t i = a; i < b; ++i) st.pinned[i] = true;
      out << "pinned [" << a << ", " << b << ")\n";
      continue;
    }
    if (cmd == ":unpin") {
      st.pinned.assign(st.hyp.tokens.size(), false);
      out << "pins cleared\n";
      continue;
    }
    if (cmd == ":edit") {
      std::size_t a = 0, b = 0;
      if (!parse_range(ss, st.hyp.tokens.size(), &a, &b)) {
        out << "usage: :edit <begin> <end> <tokens...>\n";
        continue;
      }
      std::string rest;
      std::getline(ss, rest);
      TokenSeq patch = vocab.encode(rest);
      TokenSeq next(st.hyp.tokens.begin(), st.hyp.tokens.begin() + static_cast<std::ptrdiff_t>(a));
      next.insert(next.end(), patch.begin(), patch.end());
      next.insert(next.end(), st.hyp.tokens.begin() + static_cast<std::ptrdiff_t>(b),
                  st.hyp.tokens.end());
      st.reset(std::move(next));
      log_event(st, "edit", st.hyp.tokens);
      show_tokens(out, st, vocab);
      continue;
    }
    if (cmd == ":step") {
      int n = 1;
      ss >> n;
      if (n < 1) n = 1;
      for (int k = 0; k < n; ++k) {
        try {
          auto hyps = denoise_step(st.hyp, models, StepStrategy::kGreedy, opts.decode,
                                   opts.source, rng, &st.pinned);
          const EditScript& script = hyps.front().trace.back();
          RevisionChain step_chain;
          step_chain.revisions = {st.hyp.tokens, hyps.front().tokens};
          step_chain.scripts = {script};
          // Print only the edited line of the two-line trace.
          std::string trace = render_trace(step_chain, vocab, opts.color);
          out << trace.substr(trace.find('\n') + 1);
          st.history.scripts.push_back(script);
          st.history.revisions.push_back(hyps.front().tokens);
          st.pinned = remap_pins(script, st.pinned);
          st.hyp = std::move(hyps.front());
          nlohmann::ordered_json e;
          e["event"] = "step";
          e["tokens"] = st.hyp.tokens;
          e["script"] = script_to_json(script);
          st.events.push_back(std::move(e));
        } catch (const std::exception& ex) {
          out << "step failed: " << ex.what() << '\n';
          break;
        }
      }
      continue;
    }
    out << "unknown command " << cmd << "\n";
  }

  if (!opts.log_path.empty()) {
    std::ofstream log(opts.log_path, std::ios::binary);
    if (!log) throw DataError("session: cannot write log " + opts.log_path);
    nlohmann::ordered_json header;
    header["format"] = "editdiff-session";
    header["version"] = kVersion;
    header["config"] = opts.config_echo;
    log << header.dump() << '\n';
    for (const auto& e : st.events) log << e.dump() << '\n';
  }
  return 0;
}

}  // namespace editdiff
