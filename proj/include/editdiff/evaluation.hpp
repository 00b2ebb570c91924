#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "editdiff/decoding.hpp"
#include "editdiff/vocab.hpp"

namespace editdiff {

// Corpus BLEU in [0, 100] with brevity penalty; add-one smoothing on the
// n > 1 precisions keeps tiny corpora non-degenerate.
double bleu(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references,
            int max_n = 4);

// Fraction of exact sequence matches.
double exact_match(const std::vector<TokenSeq>& hypotheses,
                   const std::vector<TokenSeq>& references);

struct EvalInstance {
  TokenSeq source;
  TokenSeq reference;
};

struct CurvePoint {
  int steps = 0;
  double bleu_score = 0.0;
  double exact = 0.0;
};

// Decodes the dataset once per grid point with T set accordingly; per-example
// rng streams are fixed across grid points.
std::vector<CurvePoint> steps_curve(const std::vector<EvalInstance>& data, const Models& models,
                                    DecodeMethod method, const InitSpec& init,
                                    const DecodeConfig& cfg, const std::vector<int>& step_grid,
                                    const Vocab& vocab);

struct LatencyStat {
  std::string method;
  double median_ms = 0.0;
  double iqr_ms = 0.0;
  std::size_t samples = 0;
};

// Median and IQR of per-example wall-clock per method; methods run round-robin
// within each repetition, with one untimed warmup pass.
std::vector<LatencyStat> latency_bench(const std::vector<EvalInstance>& data, const Models& models,
                                       const std::vector<DecodeMethod>& methods,
                                       const InitSpec& init, const DecodeConfig& cfg,
                                       int repetitions, const Vocab& vocab);

struct ExampleRecord {
  std::size_t id = 0;
  TokenSeq hypothesis;
  TokenSeq reference;
  bool exact = false;
  double edit_dist = 0.0;
};

struct EvalReport {
  std::vector<ExampleRecord> examples;
  double aggregate_bleu = 0.0;
  double aggregate_exact = 0.0;
  double mean_edit_distance = 0.0;
  std::vector<CurvePoint> curve;
  std::vector<LatencyStat> latency;
  std::string hardware;
  nlohmann::ordered_json config_echo;

  nlohmann::ordered_json to_json() const;
  std::string to_csv() const;  // curve + latency series
};

std::string hardware_string();

const char* method_name(DecodeMethod m);
DecodeMethod method_from_name(const std::string& name);
const char* init_name(InitMode m);
InitMode init_from_name(const std::string& name);

}  // namespace editdiff
