#include "editdiff/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "editdiff/errors.hpp"

namespace editdiff {

namespace {
constexpr const char* kMagic = "EDCK";
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  nlohmann::ordered_json header;
  header["format_version"] = format_version;
  header["vocab_hash"] = vocab_hash;
  header["family"] = family;
  header["hyper"] = hyper;
  header["config"] = config_echo;
  header["step_counter"] = step_counter;
  header["param_count"] = params.size();
  out << kMagic << '\n' << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  std::string magic, header_line;
  if (!std::getline(in, magic) || magic != kMagic)
    throw DataError("checkpoint: bad magic in " + path);
  if (!std::getline(in, header_line)) throw DataError("checkpoint: missing header in " + path);
  nlohmann::ordered_json header = nlohmann::ordered_json::parse(header_line);

  Checkpoint ckpt;
  ckpt.format_version = header.at("format_version").get<int>();
  if (ckpt.format_version != 1)
    throw DataError("checkpoint: unsupported format version " +
                    std::to_string(ckpt.format_version));
  ckpt.vocab_hash = header.at("vocab_hash").get<std::uint64_t>();
  ckpt.family = header.at("family").get<std::string>();
  ckpt.hyper = header.at("hyper");
  ckpt.config_echo = header.at("config");
  ckpt.step_counter = header.at("step_counter").get<std::uint64_t>();
  const auto count = header.at("param_count").get<std::size_t>();
  ckpt.params.resize(count);
  in.read(reinterpret_cast<char*>(ckpt.params.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
    throw DataError("checkpoint: truncated parameter blob in " + path);
  return ckpt;
}

Checkpoint make_checkpoint(const TrainedModel& model, const Vocab& vocab,
                           nlohmann::ordered_json config_echo) {
  Checkpoint ckpt;
  ckpt.vocab_hash = vocab.hash64();
  ckpt.family = model.family;
  ckpt.config_echo = std::move(config_echo);
  ckpt.step_counter = model.stats.steps_run;

  if (model.family == "neural") {
    const auto* tagger = dynamic_cast<const NeuralTagger*>(model.tagger.get());
    const auto* gen = dynamic_cast<const NeuralGenerator*>(model.generator.get());
    if (tagger == nullptr || gen == nullptr)
      throw InternalError("checkpoint: family/model mismatch");
    ckpt.hyper["vocab_size"] = tagger->vocab_size();
    ckpt.hyper["embed_dim"] = tagger->config().embed_dim;
    ckpt.hyper["hidden_dim"] = tagger->config().hidden_dim;
    ckpt.hyper["max_span_len"] = gen->config().max_span_len;
    ckpt.hyper["tagger_params"] = tagger->params().theta().size();
    ckpt.hyper["generator_params"] = gen->params().theta().size();
    ckpt.params = tagger->params().theta();
    ckpt.params.insert(ckpt.params.end(), gen->params().theta().begin(),
                       gen->params().theta().end());
    return ckpt;
  }
  if (model.family == "ngram") {
    const auto* tagger = dynamic_cast<const LogLinearTagger*>(model.tagger.get());
    const auto* gen = dynamic_cast<const NGramGenerator*>(model.generator.get());
    if (tagger == nullptr || gen == nullptr)
      throw InternalError("checkpoint: family/model mismatch");
    ckpt.hyper["vocab_size"] = tagger->vocab_size();
    ckpt.hyper["max_span_len"] = gen->max_span_len();
    ckpt.hyper["tagger_params"] = tagger->weights().size();
    ckpt.hyper["generator_params"] = gen->table().size();
    ckpt.params = tagger->weights();
    ckpt.params.insert(ckpt.params.end(), gen->table().begin(), gen->table().end());
    return ckpt;
  }
  throw InternalError("checkpoint: unknown family " + model.family);
}

TrainedModel restore_models(const Checkpoint& ckpt, const Vocab& vocab) {
  if (ckpt.vocab_hash != vocab.hash64())
    throw DataError("checkpoint: vocab hash mismatch (model was trained on a different vocab)");
  const auto vocab_size = ckpt.hyper.at("vocab_size").get<std::size_t>();
  if (vocab_size != vocab.size()) throw DataError("checkpoint: vocab size mismatch");

  TrainedModel model;
  model.family = ckpt.family;
  model.stats.steps_run = ckpt.step_counter;

  const auto tagger_n = ckpt.hyper.at("tagger_params").get<std::size_t>();
  const auto gen_n = ckpt.hyper.at("generator_params").get<std::size_t>();
  if (tagger_n + gen_n != ckpt.params.size())
    throw DataError("checkpoint: parameter blob size mismatch");

  if (ckpt.family == "neural") {
    NeuralConfig ncfg;
    ncfg.embed_dim = ckpt.hyper.at("embed_dim").get<std::size_t>();
    ncfg.hidden_dim = ckpt.hyper.at("hidden_dim").get<std::size_t>();
    ncfg.max_span_len = ckpt.hyper.at("max_span_len").get<std::size_t>();
    auto tagger = std::make_unique<NeuralTagger>(vocab_size, ncfg);
    auto gen = std::make_unique<NeuralGenerator>(vocab_size, ncfg);
    if (tagger->params().size() != tagger_n || gen->params().size() != gen_n)
      throw DataError("checkpoint: hyperparameters do not match parameter counts");
    std::copy(ckpt.params.begin(), ckpt.params.begin() + static_cast<std::ptrdiff_t>(tagger_n),
              tagger->params().theta().begin());
    std::copy(ckpt.params.begin() + static_cast<std::ptrdiff_t>(tagger_n), ckpt.params.end(),
              gen->params().theta().begin());
    model.tagger = std::move(tagger);
    model.generator = std::move(gen);
    return model;
  }
  if (ckpt.family == "ngram") {
    NGramConfig gcfg;
    gcfg.max_span_len = ckpt.hyper.at("max_span_len").get<std::size_t>();
    auto tagger = std::make_unique<LogLinearTagger>(vocab_size);
    auto gen = std::make_unique<NGramGenerator>(vocab_size, gcfg);
    if (tagger->weights().size() != tagger_n || gen->table().size() != gen_n)
      throw DataError("checkpoint: hyperparameters do not match parameter counts");
    std::copy(ckpt.params.begin(), ckpt.params.begin() + static_cast<std::ptrdiff_t>(tagger_n),
              tagger->weights().begin());
    std::copy(ckpt.params.begin() + static_cast<std::ptrdiff_t>(tagger_n), ckpt.params.end(),
              gen->table().begin());
    model.tagger = std::move(tagger);
    model.generator = std::move(gen);
    return model;
  }
  throw DataError("checkpoint: unknown family " + ckpt.family);
}

}  // namespace editdiff
