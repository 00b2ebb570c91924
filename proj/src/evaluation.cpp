#include "editdiff/evaluation.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "editdiff/alignment.hpp"
#include "editdiff/errors.hpp"
#include "editdiff/version.hpp"

namespace editdiff {

double bleu(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references,
            int max_n) {
  if (hypotheses.empty() || hypotheses.size() != references.size())
    throw DataError("bleu: hypothesis/reference lists must be parallel and non-empty");

  std::vector<double> matches(static_cast<std::size_t>(max_n), 0.0);
  std::vector<double> totals(static_cast<std::size_t>(max_n), 0.0);
  double hyp_len = 0.0, ref_len = 0.0;

  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    const TokenSeq& hyp = hypotheses[k];
    const TokenSeq& ref = references[k];
    hyp_len += static_cast<double>(hyp.size());
    ref_len += static_cast<double>(ref.size());
    for (int n = 1; n <= max_n; ++n) {
      if (hyp.size() < static_cast<std::size_t>(n)) continue;
      std::map<TokenSeq, int> ref_counts;
      if (ref.size() >= static_cast<std::size_t>(n))
        for (std::size_t i = 0; i + n <= ref.size(); ++i)
          ref_counts[TokenSeq(ref.begin() + static_cast<std::ptrdiff_t>(i),
                              ref.begin() + static_cast<std::ptrdiff_t>(i + n))] += 1;
      std::map<TokenSeq, int> hyp_counts;
      for (std::size_t i = 0; i + n <= hyp.size(); ++i)
        hyp_counts[TokenSeq(hyp.begin() + static_cast<std::ptrdiff_t>(i),
                            hyp.begin() + static_cast<std::ptrdiff_t>(i + n))] += 1;
      for (const auto& [gram, count] : hyp_counts) {
        totals[static_cast<std::size_t>(n - 1)] += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end())
          matches[static_cast<std::size_t>(n - 1)] += std::min(count, it->second);
      }
    }
  }

  if (hyp_len == 0.0 || totals[0] == 0.0 || matches[0] == 0.0) return 0.0;

  double log_precision = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const double m = matches[static_cast<std::size_t>(n - 1)];
    const double t = totals[static_cast<std::size_t>(n - 1)];
    const double p = n == 1 ? m / t : (m + 1.0) / (t + 1.0);
    log_precision += std::log(p);
  }
  const double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  return 100.0 * bp * std::exp(log_precision / max_n);
}

double exact_match(const std::vector<TokenSeq>& hypotheses,
                   const std::vector<TokenSeq>& references) {
  if (hypotheses.empty() || hypotheses.size() != references.size())
    throw DataError("exact_match: hypothesis/reference lists must be parallel and non-empty");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < hypotheses.size(); ++k)
    if (hypotheses[k] == references[k]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(hypotheses.size());
}

std::vector<CurvePoint> steps_curve(const std::vector<EvalInstance>& data, const Models& models,
                                    DecodeMethod method, const InitSpec& init,
                                    const DecodeConfig& cfg, const std::vector<int>& step_grid,
                                    const Vocab& vocab) {
  for (std::size_t k = 1; k < step_grid.size(); ++k)
    if (step_grid[k] <= step_grid[k - 1]) throw DataError("steps_curve: grid must be ascending");

  std::vector<CurvePoint> out;
  for (int steps : step_grid) {
    DecodeConfig point_cfg = cfg;
    point_cfg.steps = steps;
    std::vector<TokenSeq> hyps, refs;
    for (std::size_t k = 0; k < data.size(); ++k) {
      Rng rng(derive_stream(cfg.seed, k));
      hyps.push_back(
          decode(&data[k].source, models, init, method, point_cfg, vocab, rng).output);
      refs.push_back(data[k].reference);
    }
    out.push_back({steps, bleu(hyps, refs), exact_match(hyps, refs)});
  }
  return out;
}

std::vector<LatencyStat> latency_bench(const std::vector<EvalInstance>& data, const Models& models,
                                       const std::vector<DecodeMethod>& methods,
                                       const InitSpec& init, const DecodeConfig& cfg,
                                       int repetitions, const Vocab& vocab) {
  if (repetitions < 3) throw DataError("latency_bench: repetitions must be >= 3");
  using Clock = std::chrono::steady_clock;

  std::vector<std::vector<double>> samples(methods.size());
  // Warmup pass, untimed.
  for (std::size_t m = 0; m < methods.size(); ++m) {
    Rng rng(derive_stream(cfg.seed, 1000 + m));
    (void)decode(&data.front().source, models, init, methods[m], cfg, vocab, rng);
  }
  for (int rep = 0; rep < repetitions; ++rep) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      for (std::size_t k = 0; k < data.size(); ++k) {
        Rng rng(derive_stream(cfg.seed, k));
        const auto t0 = Clock::now();
        (void)decode(&data[k].source, models, init, methods[m], cfg, vocab, rng);
        const auto t1 = Clock::now();
        samples[m].push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
    }
  }

  auto quantile = [](std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
  };

  std::vector<LatencyStat> out;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    LatencyStat stat;
    stat.method = method_name(methods[m]);
    stat.median_ms = quantile(samples[m], 0.5);
    stat.iqr_ms = quantile(samples[m], 0.75) - quantile(samples[m], 0.25);
    stat.samples = samples[m].size();
    out.push_back(std::move(stat));
  }
  return out;
}

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "editdiff-eval-report";
  j["version"] = kVersion;
  j["config"] = config_echo;
  j["hardware"] = hardware;
  nlohmann::ordered_json agg;
  agg["bleu"] = aggregate_bleu;
  agg["exact_match"] = aggregate_exact;
  agg["mean_edit_distance"] = mean_edit_distance;
  j["aggregate"] = std::move(agg);
  nlohmann::ordered_json ex = nlohmann::ordered_json::array();
  for (const ExampleRecord& r : examples) {
    nlohmann::ordered_json item;
    item["id"] = r.id;
    item["hypothesis"] = r.hypothesis;
    item["reference"] = r.reference;
    item["exact"] = r.exact;
    item["edit_distance"] = r.edit_dist;
    ex.push_back(std::move(item));
  }
  j["examples"] = std::move(ex);
  nlohmann::ordered_json curve_json = nlohmann::ordered_json::array();
  for (const CurvePoint& p : curve) {
    nlohmann::ordered_json item;
    item["steps"] = p.steps;
    item["bleu"] = p.bleu_score;
    item["exact_match"] = p.exact;
    curve_json.push_back(std::move(item));
  }
  j["curve"] = std::move(curve_json);
  nlohmann::ordered_json lat = nlohmann::ordered_json::array();
  for (const LatencyStat& s : latency) {
    nlohmann::ordered_json item;
    item["method"] = s.method;
    item["median_ms"] = s.median_ms;
    item["iqr_ms"] = s.iqr_ms;
    item["samples"] = s.samples;
    lat.push_back(std::move(item));
  }
  j["latency"] = std::move(lat);
  return j;
}

std::string EvalReport::to_csv() const {
  std::string out = "series,key,value1,value2\n";
  for (const CurvePoint& p : curve)
    out += "curve," + std::to_string(p.steps) + "," + std::to_string(p.bleu_score) + "," +
           std::to_string(p.exact) + "\n";
  for (const LatencyStat& s : latency)
    out += "latency," + s.method + "," + std::to_string(s.median_ms) + "," +
           std::to_string(s.iqr_ms) + "\n";
  return out;
}

std::string hardware_string() {
  utsname info{};
  if (uname(&info) != 0) return "unknown";
  return std::string(info.sysname) + " " + info.release + " " + info.machine;
}

const char* method_name(DecodeMethod m) {
  switch (m) {
    case DecodeMethod::kGreedy: return "greedy";
    case DecodeMethod::kBeam: return "beam";
    case DecodeMethod::kNucleus: return "nucleus";
    case DecodeMethod::kBeam2d: return "2dbeam";
  }
  throw InternalError("method_name: bad method");
}

DecodeMethod method_from_name(const std::string& name) {
  if (name == "greedy") return DecodeMethod::kGreedy;
  if (name == "beam") return DecodeMethod::kBeam;
  if (name == "nucleus") return DecodeMethod::kNucleus;
  if (name == "2dbeam") return DecodeMethod::kBeam2d;
  throw UsageError("unknown decode method '" + name + "'");
}

const char* init_name(InitMode m) {
  switch (m) {
    case InitMode::kNull: return "null";
    case InitMode::kRandom: return "random";
    case InitMode::kArBootstrap: return "ar";
    case InitMode::kSourceBootstrap: return "source";
  }
  throw InternalError("init_name: bad mode");
}

InitMode init_from_name(const std::string& name) {
  if (name == "null") return InitMode::kNull;
  if (name == "random") return InitMode::kRandom;
  if (name == "ar") return InitMode::kArBootstrap;
  if (name == "source") return InitMode::kSourceBootstrap;
  throw UsageError("unknown init mode '" + name + "'");
}

}  // namespace editdiff
