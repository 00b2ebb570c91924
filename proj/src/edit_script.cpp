#include "editdiff/edit_script.hpp"

#include <algorithm>

#include "editdiff/errors.hpp"

namespace editdiff {

const char* tag_name(EditTag tag) {
  switch (tag) {
    case EditTag::kKeep: return "KEEP";
    case EditTag::kDelete: return "DELETE";
    case EditTag::kReplace: return "REPLACE";
    case EditTag::kInsert: return "INSERT";
  }
  throw InternalError("tag_name: bad tag");
}

EditTag tag_from_name(const std::string& name) {
  if (name == "KEEP") return EditTag::kKeep;
  if (name == "DELETE") return EditTag::kDelete;
  if (name == "REPLACE") return EditTag::kReplace;
  if (name == "INSERT") return EditTag::kInsert;
  throw DataError("unknown edit tag '" + name + "'");
}

void validate_script(const EditScript& script) {
  for (const EditOp& op : script.ops) {
    switch (op.tag) {
      case EditTag::kKeep:
        if (op.consume != 1 || !op.payload.empty())
          throw DataError("KEEP must consume 1 and carry no payload");
        break;
      case EditTag::kDelete:
        if (op.consume < 1 || !op.payload.empty())
          throw DataError("DELETE must consume >= 1 and carry no payload");
        break;
      case EditTag::kReplace:
        if (op.consume < 1 || op.payload.empty())
          throw DataError("REPLACE must consume >= 1 and produce >= 1");
        break;
      case EditTag::kInsert:
        if (op.consume != 0 || op.payload.empty())
          throw DataError("INSERT must consume 0 and produce >= 1");
        break;
    }
  }
}

std::size_t script_consumed(const EditScript& script) {
  std::size_t total = 0;
  for (const EditOp& op : script.ops) total += op.consume;
  return total;
}

std::size_t script_produced(const EditScript& script) {
  std::size_t total = 0;
  for (const EditOp& op : script.ops) {
    if (op.tag == EditTag::kKeep)
      total += 1;
    else
      total += op.payload.size();
  }
  return total;
}

namespace {

void check_consumption(const EditScript& script, const TokenSeq& src, const char* what) {
  std::size_t want = script_consumed(script);
  if (want != src.size())
    throw DataError(std::string(what) + ": script consumes " + std::to_string(want) +
                    " tokens but source has " + std::to_string(src.size()));
}

}  // namespace

TokenSeq apply_script(const EditScript& script, const TokenSeq& src) {
  validate_script(script);
  check_consumption(script, src, "apply_script");
  TokenSeq out;
  out.reserve(script_produced(script));
  std::size_t pos = 0;
  for (const EditOp& op : script.ops) {
    switch (op.tag) {
      case EditTag::kKeep:
        out.push_back(src[pos]);
        pos += 1;
        break;
      case EditTag::kDelete:
        pos += op.consume;
        break;
      case EditTag::kReplace:
        out.insert(out.end(), op.payload.begin(), op.payload.end());
        pos += op.consume;
        break;
      case EditTag::kInsert:
        out.insert(out.end(), op.payload.begin(), op.payload.end());
        break;
    }
  }
  return out;
}

EditScript invert_script(const EditScript& script, const TokenSeq& src) {
  validate_script(script);
  check_consumption(script, src, "invert_script");
  EditScript inv;
  inv.ops.reserve(script.ops.size());
  std::size_t pos = 0;
  for (const EditOp& op : script.ops) {
    TokenSeq span(src.begin() + static_cast<std::ptrdiff_t>(pos),
                  src.begin() + static_cast<std::ptrdiff_t>(pos + op.consume));
    switch (op.tag) {
      case EditTag::kKeep:
        inv.ops.push_back({EditTag::kKeep, 1, {}});
        break;
      case EditTag::kDelete:
        inv.ops.push_back({EditTag::kInsert, 0, std::move(span)});
        break;
      case EditTag::kReplace:
        inv.ops.push_back(
            {EditTag::kReplace, static_cast<std::uint32_t>(op.payload.size()), std::move(span)});
        break;
      case EditTag::kInsert:
        inv.ops.push_back({EditTag::kDelete, static_cast<std::uint32_t>(op.payload.size()), {}});
        break;
    }
    pos += op.consume;
  }
  return inv;
}

namespace {

// One merge/canonicalization pass; returns true if anything changed.
bool normalize_pass(std::vector<EditOp>& ops) {
  bool changed = false;
  std::vector<EditOp> out;
  out.reserve(ops.size());
  for (EditOp& op : ops) {
    // Degenerate shapes first.
    if (op.tag == EditTag::kInsert && op.payload.empty()) {
      changed = true;
      continue;
    }
    if (op.tag == EditTag::kDelete && op.consume == 0) {
      changed = true;
      continue;
    }
    if (op.tag == EditTag::kReplace && op.payload.empty()) {
      op.tag = EditTag::kDelete;  // replace-with-nothing is a delete
      changed = true;
    }
    if (out.empty()) {
      out.push_back(std::move(op));
      continue;
    }
    EditOp& prev = out.back();
    auto is_span = [](EditTag t) { return t == EditTag::kDelete || t == EditTag::kReplace; };
    if (prev.tag == op.tag && op.tag != EditTag::kKeep) {
      // Same-tag spans merge (KEEP stays single-token by definition).
      prev.consume += op.consume;
      prev.payload.insert(prev.payload.end(), op.payload.begin(), op.payload.end());
      changed = true;
    } else if (prev.tag == EditTag::kInsert && is_span(op.tag)) {
      // INSERT followed by DELETE/REPLACE: fold into one REPLACE, payload first.
      TokenSeq payload = std::move(prev.payload);
      payload.insert(payload.end(), op.payload.begin(), op.payload.end());
      prev = EditOp{EditTag::kReplace, op.consume, std::move(payload)};
      changed = true;
    } else if (is_span(prev.tag) && op.tag == EditTag::kInsert) {
      // DELETE/REPLACE followed by INSERT: payload appends after the span's.
      prev.tag = EditTag::kReplace;
      prev.payload.insert(prev.payload.end(), op.payload.begin(), op.payload.end());
      changed = true;
    } else {
      out.push_back(std::move(op));
    }
  }
  ops = std::move(out);
  return changed;
}

}  // namespace

EditScript normalize_script(const EditScript& script, const TokenSeq& src) {
  validate_script(script);
  check_consumption(script, src, "normalize_script");

  // Identity REPLACE ops become KEEP runs.
  EditScript canon;
  std::size_t pos = 0;
  for (const EditOp& op : script.ops) {
    if (op.tag == EditTag::kReplace && op.payload.size() == op.consume &&
        std::equal(op.payload.begin(), op.payload.end(), src.begin() + static_cast<std::ptrdiff_t>(pos))) {
      for (std::uint32_t k = 0; k < op.consume; ++k) canon.ops.push_back({EditTag::kKeep, 1, {}});
    } else {
      canon.ops.push_back(op);
    }
    pos += op.consume;
  }

  while (normalize_pass(canon.ops)) {
  }
  validate_script(canon);
  return canon;
}

bool TagExpansion::all_keep() const {
  return std::all_of(tags.begin(), tags.end(), [](EditTag t) { return t == EditTag::kKeep; });
}

TagExpansion expand_tags(const EditScript& script) {
  validate_script(script);
  const std::size_t n = script_consumed(script);
  TagExpansion ex;
  ex.tags.assign(n + 1, EditTag::kKeep);
  ex.payloads.assign(n + 1, {});

  std::size_t cursor = 0;  // source tokens consumed so far == current tag slot
  for (const EditOp& op : script.ops) {
    switch (op.tag) {
      case EditTag::kKeep:
        cursor += 1;
        ex.tags[cursor] = EditTag::kKeep;
        break;
      case EditTag::kDelete:
        for (std::uint32_t k = 0; k < op.consume; ++k) ex.tags[cursor + 1 + k] = EditTag::kDelete;
        cursor += op.consume;
        break;
      case EditTag::kReplace: {
        const std::size_t start = cursor + 1;
        for (std::uint32_t k = 0; k < op.consume; ++k) ex.tags[cursor + 1 + k] = EditTag::kReplace;
        // Adjacent REPLACE runs merge: attach at the run's true start.
        std::size_t run_start = start;
        while (run_start > 1 && ex.tags[run_start - 1] == EditTag::kReplace) --run_start;
        ex.payloads[run_start].insert(ex.payloads[run_start].end(), op.payload.begin(),
                                      op.payload.end());
        cursor += op.consume;
        break;
      }
      case EditTag::kInsert: {
        // Anchors to the previous kept token (or the leading gap).
        if (cursor == 0) {
          ex.tags[0] = EditTag::kInsert;
          ex.payloads[0].insert(ex.payloads[0].end(), op.payload.begin(), op.payload.end());
        } else if (ex.tags[cursor] == EditTag::kKeep || ex.tags[cursor] == EditTag::kInsert) {
          ex.tags[cursor] = EditTag::kInsert;
          ex.payloads[cursor].insert(ex.payloads[cursor].end(), op.payload.begin(),
                                     op.payload.end());
        } else {
          throw DataError("expand_tags: INSERT after DELETE/REPLACE is not tag-expressible; "
                          "normalize the script first");
        }
        break;
      }
    }
  }
  return ex;
}

EditScript tags_to_script(const TagExpansion& ex) {
  if (ex.tags.size() != ex.payloads.size() || ex.tags.empty())
    throw DataError("tags_to_script: malformed expansion");
  EditScript script;
  if (ex.tags[0] == EditTag::kInsert) {
    if (ex.payloads[0].empty()) throw DataError("tags_to_script: empty leading INSERT payload");
    script.ops.push_back({EditTag::kInsert, 0, ex.payloads[0]});
  }
  const std::size_t n = ex.tags.size() - 1;
  std::size_t i = 1;
  while (i <= n) {
    switch (ex.tags[i]) {
      case EditTag::kKeep:
        script.ops.push_back({EditTag::kKeep, 1, {}});
        ++i;
        break;
      case EditTag::kInsert:
        if (ex.payloads[i].empty()) throw DataError("tags_to_script: empty INSERT payload");
        script.ops.push_back({EditTag::kKeep, 1, {}});
        script.ops.push_back({EditTag::kInsert, 0, ex.payloads[i]});
        ++i;
        break;
      case EditTag::kDelete: {
        std::uint32_t run = 0;
        while (i + run <= n && ex.tags[i + run] == EditTag::kDelete) ++run;
        script.ops.push_back({EditTag::kDelete, run, {}});
        i += run;
        break;
      }
      case EditTag::kReplace: {
        std::uint32_t run = 0;
        while (i + run <= n && ex.tags[i + run] == EditTag::kReplace) ++run;
        if (ex.payloads[i].empty()) throw DataError("tags_to_script: empty REPLACE payload");
        script.ops.push_back({EditTag::kReplace, run, ex.payloads[i]});
        i += run;
        break;
      }
    }
  }
  validate_script(script);
  return script;
}

nlohmann::ordered_json script_to_json(const EditScript& script) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const EditOp& op : script.ops) {
    nlohmann::ordered_json item;
    item["tag"] = tag_name(op.tag);
    item["consume"] = op.consume;
    item["payload"] = op.payload;
    arr.push_back(std::move(item));
  }
  return arr;
}

EditScript script_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_array()) throw DataError("script json: expected array");
  EditScript script;
  for (const auto& item : j) {
    EditOp op;
    op.tag = tag_from_name(item.at("tag").get<std::string>());
    op.consume = item.at("consume").get<std::uint32_t>();
    op.payload = item.at("payload").get<TokenSeq>();
    script.ops.push_back(std::move(op));
  }
  validate_script(script);
  return script;
}

}  // namespace editdiff
