// editdiff: corpus synthesis, training, decoding, evaluation, corruption
// inspection and an interactive revision session for the edit-denoising
// engine.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "editdiff/alignment.hpp"
#include "editdiff/checkpoint.hpp"
#include "editdiff/config.hpp"
#include "editdiff/corruption.hpp"
#include "editdiff/decoding.hpp"
#include "editdiff/errors.hpp"
#include "editdiff/evaluation.hpp"
#include "editdiff/session.hpp"
#include "editdiff/tasks.hpp"
#include "editdiff/training.hpp"
#include "editdiff/version.hpp"

namespace {

using namespace editdiff;

struct CommonArgs {
  std::string config_path;
  bool has_seed = false;
  std::uint64_t seed = 0;
};

RunConfig load_config(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty() ? RunConfig::defaults_for_task("copy")
                                           : RunConfig::from_file(args.config_path);
  if (args.has_seed) {
    cfg.model.corruption.seed = args.seed;
    cfg.model.seed = args.seed;
    cfg.decode.seed = args.seed;
  }
  return cfg;
}

Vocab load_vocab_for(const RunConfig& cfg) {
  if (cfg.vocab_path.empty()) throw DataError("config: vocab path not set");
  return Vocab::load(cfg.vocab_path);
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

int cmd_synth(const std::string& task, std::size_t size, std::uint64_t seed,
              const std::string& out_path, const std::string& vocab_out) {
  SynthResult synth = synth_corpus(task, size, seed);
  nlohmann::ordered_json header;
  header["format"] = "editdiff-corpus";
  header["version"] = kVersion;
  header["task"] = task;
  header["size"] = size;
  header["seed"] = seed;
  header["vocab"] = vocab_out;
  write_corpus(out_path, synth.pairs, header);
  if (!vocab_out.empty()) synth.vocab.save(vocab_out);
  std::cout << "wrote " << synth.pairs.size() << " pairs to " << out_path << "\n";
  return 0;
}

int cmd_train(const CommonArgs& common, std::string corpus_path, std::string out_path) {
  RunConfig cfg = load_config(common);
  if (!corpus_path.empty()) cfg.paths.corpus = corpus_path;
  if (!out_path.empty()) cfg.paths.checkpoint = out_path;
  if (cfg.paths.corpus.empty()) throw DataError("train: corpus path not set");
  if (cfg.paths.checkpoint.empty()) throw DataError("train: checkpoint path not set");

  Vocab vocab = load_vocab_for(cfg);
  std::vector<CorpusPair> corpus = load_corpus(cfg.paths.corpus, "train");
  TrainedModel model = train(corpus, cfg.model, vocab);
  Checkpoint ckpt = make_checkpoint(model, vocab, cfg.echo());
  ckpt.save(cfg.paths.checkpoint);
  std::cout << "trained " << model.stats.steps_run << " steps (loss "
            << model.stats.first_decile_loss << " -> " << model.stats.last_decile_loss
            << "), checkpoint " << cfg.paths.checkpoint << "\n";
  return 0;
}

struct DecodeArgs {
  std::string checkpoint;
  std::string input_path;
  std::string split = "test";
  std::string out_path;
  std::string trace_json;
  std::string init_name_arg;
  std::string method_name_arg;
  int steps = -1;
  int b = -1;
  int r = -1;
  double p = -1.0;
  bool trace = false;
  bool color = false;
};

int cmd_decode(const CommonArgs& common, const DecodeArgs& args) {
  RunConfig cfg = load_config(common);
  if (!args.checkpoint.empty()) cfg.paths.checkpoint = args.checkpoint;
  if (cfg.paths.checkpoint.empty()) throw DataError("decode: checkpoint path not set");
  if (!args.init_name_arg.empty()) cfg.init = init_from_name(args.init_name_arg);
  if (!args.method_name_arg.empty()) cfg.method = method_from_name(args.method_name_arg);
  if (args.steps >= 0) cfg.decode.steps = args.steps;
  if (args.b >= 0) cfg.decode.intra_width = args.b;
  if (args.r >= 0) cfg.decode.inter_width = args.r;
  if (args.p >= 0) cfg.decode.nucleus_p = args.p;

  Vocab vocab = load_vocab_for(cfg);
  Checkpoint ckpt = Checkpoint::load(cfg.paths.checkpoint);
  TrainedModel model = restore_models(ckpt, vocab);
  Models models{model.tagger.get(), model.generator.get()};

  std::vector<TokenSeq> sources;
  if (!args.input_path.empty()) {
    std::vector<std::string> lines;
    if (args.input_path == "-") {
      lines = read_lines(std::cin);
    } else {
      std::ifstream in(args.input_path);
      if (!in) throw DataError("decode: cannot open " + args.input_path);
      lines = read_lines(in);
    }
    for (const std::string& line : lines)
      if (!line.empty()) sources.push_back(vocab.encode(line));
  } else {
    if (cfg.paths.corpus.empty()) throw DataError("decode: no input file and no corpus path");
    for (const CorpusPair& p : load_corpus(cfg.paths.corpus, args.split))
      sources.push_back(p.source);
  }

  std::ostream* out = &std::cout;
  std::ofstream out_file;
  if (!args.out_path.empty()) {
    out_file.open(args.out_path, std::ios::binary);
    if (!out_file) throw DataError("decode: cannot write " + args.out_path);
    out = &out_file;
  }
  std::ofstream trace_json;
  if (!args.trace_json.empty()) {
    trace_json.open(args.trace_json, std::ios::binary);
    if (!trace_json) throw DataError("decode: cannot write " + args.trace_json);
    nlohmann::ordered_json header;
    header["format"] = "editdiff-chains";
    header["version"] = kVersion;
    header["config"] = cfg.echo();
    trace_json << header.dump() << '\n';
  }

  InitSpec init;
  init.mode = cfg.init;
  for (std::size_t k = 0; k < sources.size(); ++k) {
    Rng rng(derive_stream(cfg.decode.seed, k));
    DecodeResult res = decode(&sources[k], models, init, cfg.method, cfg.decode, vocab, rng);
    (*out) << vocab.decode(res.output) << '\n';
    if (args.trace) std::cout << render_trace(res.chain, vocab, args.color);
    if (trace_json.is_open())
      trace_json << chain_to_json(res.chain, derive_stream(cfg.decode.seed, k)).dump() << '\n';
  }
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string split = "test";
  std::string report_path;
  std::string csv_path;
  std::string curve_grid;
  std::string bench_methods;
  int reps = 5;
  std::size_t limit = 0;
};

int cmd_eval(const CommonArgs& common, const EvalArgs& args) {
  RunConfig cfg = load_config(common);
  if (!args.checkpoint.empty()) cfg.paths.checkpoint = args.checkpoint;
  if (cfg.paths.checkpoint.empty()) throw DataError("eval: checkpoint path not set");
  if (cfg.paths.corpus.empty()) throw DataError("eval: corpus path not set");
  if (!args.report_path.empty()) cfg.paths.report = args.report_path;

  Vocab vocab = load_vocab_for(cfg);
  TrainedModel model = restore_models(Checkpoint::load(cfg.paths.checkpoint), vocab);
  Models models{model.tagger.get(), model.generator.get()};

  std::vector<EvalInstance> data;
  for (const CorpusPair& p : load_corpus(cfg.paths.corpus, args.split))
    data.push_back({p.source, p.target});
  if (data.empty()) throw DataError("eval: empty split");
  if (args.limit > 0 && data.size() > args.limit) data.resize(args.limit);

  InitSpec init;
  init.mode = cfg.init;

  EvalReport report;
  report.config_echo = cfg.echo();
  report.hardware = hardware_string();

  std::vector<TokenSeq> hyps, refs;
  for (std::size_t k = 0; k < data.size(); ++k) {
    Rng rng(derive_stream(cfg.decode.seed, k));
    DecodeResult res = decode(&data[k].source, models, init, cfg.method, cfg.decode, vocab, rng);
    ExampleRecord rec;
    rec.id = k;
    rec.hypothesis = res.output;
    rec.reference = data[k].reference;
    rec.exact = res.output == data[k].reference;
    rec.edit_dist = edit_distance(res.output, data[k].reference);
    report.examples.push_back(rec);
    hyps.push_back(res.output);
    refs.push_back(data[k].reference);
  }
  report.aggregate_bleu = bleu(hyps, refs);
  report.aggregate_exact = exact_match(hyps, refs);
  double dist_sum = 0;
  for (const ExampleRecord& r : report.examples) dist_sum += r.edit_dist;
  report.mean_edit_distance = dist_sum / static_cast<double>(report.examples.size());

  if (!args.curve_grid.empty()) {
    std::vector<int> grid;
    std::stringstream ss(args.curve_grid);
    std::string tok;
    while (std::getline(ss, tok, ',')) grid.push_back(std::stoi(tok));
    report.curve = steps_curve(data, models, cfg.method, init, cfg.decode, grid, vocab);
  }
  if (!args.bench_methods.empty()) {
    std::vector<DecodeMethod> methods;
    std::stringstream ss(args.bench_methods);
    std::string tok;
    while (std::getline(ss, tok, ',')) methods.push_back(method_from_name(tok));
    report.latency = latency_bench(data, models, methods, init, cfg.decode, args.reps, vocab);
  }

  if (!cfg.paths.report.empty()) {
    std::ofstream out(cfg.paths.report, std::ios::binary);
    if (!out) throw DataError("eval: cannot write " + cfg.paths.report);
    out << report.to_json().dump(2) << '\n';
  }
  if (!args.csv_path.empty()) {
    std::ofstream out(args.csv_path, std::ios::binary);
    if (!out) throw DataError("eval: cannot write " + args.csv_path);
    out << report.to_csv();
  }
  std::cout << "bleu=" << report.aggregate_bleu << " exact=" << report.aggregate_exact
            << " mean_edit_distance=" << report.mean_edit_distance << "\n";
  return 0;
}

int cmd_corrupt(const CommonArgs& common, const std::string& input_path, int steps,
                const std::string& out_path) {
  RunConfig cfg = load_config(common);
  Vocab vocab = load_vocab_for(cfg);

  std::vector<std::string> lines;
  if (input_path.empty() || input_path == "-") {
    lines = read_lines(std::cin);
  } else {
    std::ifstream in(input_path);
    if (!in) throw DataError("corrupt: cannot open " + input_path);
    lines = read_lines(in);
  }

  std::ofstream out_file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    out_file.open(out_path, std::ios::binary);
    if (!out_file) throw DataError("corrupt: cannot write " + out_path);
    out = &out_file;
  }
  nlohmann::ordered_json header;
  header["format"] = "editdiff-chains";
  header["version"] = kVersion;
  header["config"] = cfg.echo();
  (*out) << header.dump() << '\n';

  const int chain_steps = steps > 0 ? steps : cfg.model.corruption.max_steps;
  std::size_t index = 0;
  for (const std::string& line : lines) {
    if (line.empty()) continue;
    TokenSeq x0 = vocab.encode(line);
    const std::uint64_t stream = derive_stream(cfg.model.corruption.seed, index);
    Rng rng(stream);
    RevisionChain chain = corrupt_chain(x0, chain_steps, cfg.model.corruption, vocab, rng);
    (*out) << chain_to_json(chain, stream).dump() << '\n';
    ++index;
  }
  return 0;
}

int cmd_interactive(const CommonArgs& common, const std::string& checkpoint,
                    const std::string& source_text, const std::string& log_path, bool color) {
  RunConfig cfg = load_config(common);
  if (!checkpoint.empty()) cfg.paths.checkpoint = checkpoint;
  if (cfg.paths.checkpoint.empty()) throw DataError("interactive: checkpoint path not set");
  Vocab vocab = load_vocab_for(cfg);
  TrainedModel model = restore_models(Checkpoint::load(cfg.paths.checkpoint), vocab);
  Models models{model.tagger.get(), model.generator.get()};

  TokenSeq source;
  SessionOptions opts;
  opts.decode = cfg.decode;
  opts.color = color;
  opts.log_path = log_path;
  opts.config_echo = cfg.echo();
  if (!source_text.empty()) {
    source = vocab.encode(source_text);
    opts.source = &source;
  }
  return run_session(std::cin, std::cout, models, vocab, opts);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edit-based denoising text generation engine"};
  app.set_version_flag("--version", editdiff::kVersion);
  app.require_subcommand(1);

  CommonArgs common;

  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "run configuration file (JSON)");
    sub->add_option("--seed", common.seed, "override all seeds")
        ->each([&common](const std::string&) { common.has_seed = true; });
  };

  // synth
  std::string synth_task = "copy", synth_out = "corpus.jsonl", synth_vocab = "vocab.txt";
  std::size_t synth_size = 1000;
  std::uint64_t synth_seed = 1;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic task corpus");
  synth->add_option("--task", synth_task, "copy | reverse | substitute | summarize-synthetic");
  synth->add_option("--size", synth_size, "number of pairs");
  synth->add_option("--seed", synth_seed, "generation seed");
  synth->add_option("--out", synth_out, "corpus JSONL path");
  synth->add_option("--vocab-out", synth_vocab, "vocabulary file path");

  // train
  std::string train_corpus, train_out;
  CLI::App* train_cmd = app.add_subcommand("train", "train a tagger/generator pair");
  add_common(train_cmd);
  train_cmd->add_option("--corpus", train_corpus, "corpus JSONL (overrides config)");
  train_cmd->add_option("--out", train_out, "checkpoint path (overrides config)");

  // decode
  DecodeArgs dec;
  CLI::App* decode_cmd = app.add_subcommand("decode", "denoise from an initialization");
  add_common(decode_cmd);
  decode_cmd->add_option("--checkpoint", dec.checkpoint, "checkpoint path");
  decode_cmd->add_option("--input", dec.input_path, "text file of sources, or - for stdin");
  decode_cmd->add_option("--split", dec.split, "corpus split when no --input (default test)");
  decode_cmd->add_option("--out", dec.out_path, "write hypotheses here instead of stdout");
  decode_cmd->add_option("--init", dec.init_name_arg, "null | random | ar | source");
  decode_cmd->add_option("--method", dec.method_name_arg, "greedy | beam | nucleus | 2dbeam");
  decode_cmd->add_option("--steps", dec.steps, "diffusion steps T");
  decode_cmd->add_option("--b", dec.b, "intra-revision beam width");
  decode_cmd->add_option("--r", dec.r, "inter-revision beam width");
  decode_cmd->add_option("--p", dec.p, "nucleus mass");
  decode_cmd->add_flag("--trace", dec.trace, "print the per-step diff");
  decode_cmd->add_flag("--color", dec.color, "ANSI colors in traces");
  decode_cmd->add_option("--trace-json", dec.trace_json, "dump revision chains as JSONL");

  // eval
  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "metrics, step curves and latency");
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "checkpoint path");
  eval_cmd->add_option("--split", ev.split, "corpus split (default test)");
  eval_cmd->add_option("--report", ev.report_path, "report JSON path");
  eval_cmd->add_option("--csv", ev.csv_path, "emit curve/latency series as CSV");
  eval_cmd->add_option("--curve", ev.curve_grid, "comma-separated step grid");
  eval_cmd->add_option("--bench", ev.bench_methods, "comma-separated methods to time");
  eval_cmd->add_option("--reps", ev.reps, "bench repetitions (default 5)");
  eval_cmd->add_option("--limit", ev.limit, "cap the number of evaluated examples");

  // corrupt
  std::string cor_input, cor_out;
  int cor_steps = 0;
  CLI::App* corrupt_cmd = app.add_subcommand("corrupt", "sample corruption chains");
  add_common(corrupt_cmd);
  corrupt_cmd->add_option("--input", cor_input, "text file, or - for stdin");
  corrupt_cmd->add_option("--steps", cor_steps, "chain length (default corruption max_steps)");
  corrupt_cmd->add_option("--out", cor_out, "chain JSONL path (default stdout)");

  // interactive
  std::string inter_ckpt, inter_source, inter_log;
  bool inter_color = false;
  CLI::App* inter_cmd = app.add_subcommand("interactive", "prototype-revision session");
  add_common(inter_cmd);
  inter_cmd->add_option("--checkpoint", inter_ckpt, "checkpoint path");
  inter_cmd->add_option("--source", inter_source, "conditioning source text");
  inter_cmd->add_option("--log", inter_log, "session log JSONL path");
  inter_cmd->add_flag("--color", inter_color, "ANSI colors in diffs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_task, synth_size, synth_seed, synth_out, synth_vocab);
    if (train_cmd->parsed()) return cmd_train(common, train_corpus, train_out);
    if (decode_cmd->parsed()) return cmd_decode(common, dec);
    if (eval_cmd->parsed()) return cmd_eval(common, ev);
    if (corrupt_cmd->parsed()) return cmd_corrupt(common, cor_input, cor_steps, cor_out);
    if (inter_cmd->parsed())
      return cmd_interactive(common, inter_ckpt, inter_source, inter_log, inter_color);
  } catch (const editdiff::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const editdiff::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
