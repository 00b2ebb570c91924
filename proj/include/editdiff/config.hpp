#pragma once

#include <string>

#include <json.hpp>

#include "editdiff/decoding.hpp"
#include "editdiff/training.hpp"

namespace editdiff {

// Fully-resolved run configuration. Loaded from a single JSON tree; unknown
// keys are rejected; the resolved form is echoed into every artifact.
struct RunConfig {
  std::string task = "copy";
  std::string vocab_path;

  struct Paths {
    std::string corpus;
    std::string checkpoint;
    std::string report;
  } paths;

  TrainConfig model;  // includes the corruption section
  DecodeConfig decode;
  InitMode init = InitMode::kSourceBootstrap;
  DecodeMethod method = DecodeMethod::kGreedy;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_json(const nlohmann::ordered_json& j);
  nlohmann::ordered_json echo() const;

  // Built-in per-task defaults (corruption strength, bootstrap mix, lengths).
  static RunConfig defaults_for_task(const std::string& task);
};

}  // namespace editdiff
