#include "editdiff/config.hpp"

#include <fstream>
#include <set>

#include "editdiff/errors.hpp"
#include "editdiff/evaluation.hpp"

namespace editdiff {

namespace {

using Json = nlohmann::ordered_json;

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw DataError("config: unknown key '" + item.key() + "' in " + where);
}

template <typename T>
void read_if(const Json& j, const char* key, T* out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

void parse_corruption(const Json& j, CorruptionConfig* cfg) {
  reject_unknown(j, {"type_dist", "length_dist", "distractor", "max_steps", "seed",
                     "single_edit_per_step"},
                 "corruption");
  if (j.contains("type_dist")) {
    const Json& td = j.at("type_dist");
    reject_unknown(td, {"keep", "replace", "insert", "delete"}, "corruption.type_dist");
    read_if(td, "keep", &cfg->p_keep);
    read_if(td, "replace", &cfg->p_replace);
    read_if(td, "insert", &cfg->p_insert);
    read_if(td, "delete", &cfg->p_delete);
  }
  if (j.contains("length_dist")) {
    const Json& ld = j.at("length_dist");
    reject_unknown(ld, {"kind", "lambda", "max"}, "corruption.length_dist");
    if (ld.contains("kind")) {
      const auto kind = ld.at("kind").get<std::string>();
      if (kind == "poisson")
        cfg->length.kind = LengthKind::kPoisson;
      else if (kind == "uniform")
        cfg->length.kind = LengthKind::kUniform;
      else
        throw DataError("config: unknown length_dist kind '" + kind + "'");
    }
    read_if(ld, "lambda", &cfg->length.lambda);
    read_if(ld, "max", &cfg->length.uniform_max);
  }
  if (j.contains("distractor")) {
    const auto d = j.at("distractor").get<std::string>();
    if (d == "uniform")
      cfg->distractor = DistractorSource::kUniformVocab;
    else if (d == "unigram")
      cfg->distractor = DistractorSource::kEmpiricalUnigram;
    else
      throw DataError("config: unknown distractor source '" + d + "'");
  }
  read_if(j, "max_steps", &cfg->max_steps);
  read_if(j, "seed", &cfg->seed);
  read_if(j, "single_edit_per_step", &cfg->single_edit_per_step);
}

void parse_model(const Json& j, TrainConfig* cfg) {
  reject_unknown(j, {"family", "embed_dim", "hidden_dim", "max_span_len", "train_steps",
                     "learning_rate", "tag_loss_weight", "gen_loss_weight", "bootstrap_mix",
                     "seed"},
                 "model");
  read_if(j, "family", &cfg->family);
  read_if(j, "embed_dim", &cfg->neural.embed_dim);
  read_if(j, "hidden_dim", &cfg->neural.hidden_dim);
  if (j.contains("max_span_len")) {
    const auto v = j.at("max_span_len").get<std::size_t>();
    cfg->neural.max_span_len = v;
    cfg->ngram.max_span_len = v;
  }
  read_if(j, "train_steps", &cfg->train_steps);
  read_if(j, "learning_rate", &cfg->learning_rate);
  read_if(j, "tag_loss_weight", &cfg->tag_loss_weight);
  read_if(j, "gen_loss_weight", &cfg->gen_loss_weight);
  read_if(j, "bootstrap_mix", &cfg->bootstrap_mix);
  read_if(j, "seed", &cfg->seed);
}

void parse_decode(const Json& j, RunConfig* cfg) {
  reject_unknown(j, {"steps", "b", "r", "p", "max_len", "max_span_len", "early_stop", "alpha",
                     "seed", "init", "method"},
                 "decode");
  read_if(j, "steps", &cfg->decode.steps);
  read_if(j, "b", &cfg->decode.intra_width);
  read_if(j, "r", &cfg->decode.inter_width);
  read_if(j, "p", &cfg->decode.nucleus_p);
  read_if(j, "max_len", &cfg->decode.max_len);
  read_if(j, "max_span_len", &cfg->decode.max_span_len);
  read_if(j, "early_stop", &cfg->decode.early_stop);
  read_if(j, "alpha", &cfg->decode.length_norm_alpha);
  read_if(j, "seed", &cfg->decode.seed);
  if (j.contains("init")) cfg->init = init_from_name(j.at("init").get<std::string>());
  if (j.contains("method")) cfg->method = method_from_name(j.at("method").get<std::string>());
}

}  // namespace

RunConfig RunConfig::from_json(const Json& j) {
  RunConfig cfg;
  reject_unknown(j, {"task", "vocab", "paths", "corruption", "model", "decode"}, "config root");
  if (j.contains("task")) {
    cfg = defaults_for_task(j.at("task").get<std::string>());
  }
  if (j.contains("vocab")) cfg.vocab_path = j.at("vocab").get<std::string>();
  if (j.contains("paths")) {
    const Json& p = j.at("paths");
    reject_unknown(p, {"corpus", "checkpoint", "report"}, "paths");
    read_if(p, "corpus", &cfg.paths.corpus);
    read_if(p, "checkpoint", &cfg.paths.checkpoint);
    read_if(p, "report", &cfg.paths.report);
  }
  if (j.contains("corruption")) parse_corruption(j.at("corruption"), &cfg.model.corruption);
  if (j.contains("model")) parse_model(j.at("model"), &cfg.model);
  if (j.contains("decode")) parse_decode(j.at("decode"), &cfg);
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("config: cannot open " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw DataError("config: parse error in " + path + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::ordered_json RunConfig::echo() const {
  Json j;
  j["task"] = task;
  j["vocab"] = vocab_path;
  j["paths"] = {{"corpus", paths.corpus}, {"checkpoint", paths.checkpoint},
                {"report", paths.report}};
  Json c;
  c["type_dist"] = {{"keep", model.corruption.p_keep},
                    {"replace", model.corruption.p_replace},
                    {"insert", model.corruption.p_insert},
                    {"delete", model.corruption.p_delete}};
  c["length_dist"] = {
      {"kind", model.corruption.length.kind == LengthKind::kPoisson ? "poisson" : "uniform"},
      {"lambda", model.corruption.length.lambda},
      {"max", model.corruption.length.uniform_max}};
  c["distractor"] =
      model.corruption.distractor == DistractorSource::kUniformVocab ? "uniform" : "unigram";
  c["max_steps"] = model.corruption.max_steps;
  c["seed"] = model.corruption.seed;
  c["single_edit_per_step"] = model.corruption.single_edit_per_step;
  j["corruption"] = std::move(c);
  Json m;
  m["family"] = model.family;
  m["embed_dim"] = model.neural.embed_dim;
  m["hidden_dim"] = model.neural.hidden_dim;
  m["max_span_len"] = model.neural.max_span_len;
  m["train_steps"] = model.train_steps;
  m["learning_rate"] = model.learning_rate;
  m["tag_loss_weight"] = model.tag_loss_weight;
  m["gen_loss_weight"] = model.gen_loss_weight;
  m["bootstrap_mix"] = model.bootstrap_mix;
  m["seed"] = model.seed;
  j["model"] = std::move(m);
  Json d;
  d["steps"] = decode.steps;
  d["b"] = decode.intra_width;
  d["r"] = decode.inter_width;
  d["p"] = decode.nucleus_p;
  d["max_len"] = decode.max_len;
  d["max_span_len"] = decode.max_span_len;
  d["early_stop"] = decode.early_stop;
  d["alpha"] = decode.length_norm_alpha;
  d["seed"] = decode.seed;
  d["init"] = init_name(init);
  d["method"] = method_name(method);
  j["decode"] = std::move(d);
  return j;
}

RunConfig RunConfig::defaults_for_task(const std::string& task) {
  RunConfig cfg;
  cfg.task = task;
  // Shallow corruption depth keeps the one-step reversal supervision sharp:
  // with deep chains most stale distractors carry KEEP gold and the tagger
  // drifts toward preserving junk.
  if (task == "copy" || task == "reverse") {
    cfg.model.corruption.length.lambda = 3.0;
    cfg.model.corruption.max_steps = 2;
    cfg.model.bootstrap_mix = 0.25;
    cfg.decode.max_len = 24;
  } else if (task == "substitute") {
    cfg.model.corruption.length.lambda = 2.0;
    cfg.model.corruption.max_steps = 2;
    cfg.model.bootstrap_mix = 0.25;
    cfg.decode.max_len = 24;
  } else if (task == "summarize-synthetic") {
    cfg.model.corruption.length.lambda = 4.0;
    cfg.model.corruption.max_steps = 2;
    cfg.model.bootstrap_mix = 0.25;
    cfg.decode.max_len = 32;
  } else {
    throw DataError("config: unknown task '" + task + "'");
  }
  return cfg;
}

}  // namespace editdiff
