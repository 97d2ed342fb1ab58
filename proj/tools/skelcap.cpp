// skelcap: data generation, preprocessing, splitting, training and scoring
// from the command line. Every command writes a resolved-config snapshot that
// can be passed back through --config to reproduce the run.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "skelcap/skelcap.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat dotted-key settings bound to command-line options. Values from a config
// file fill in whatever the command line left unset.
class Settings {
 public:
  template <class T>
  CLI::Option* bind(CLI::App* app, const std::string& key, const std::string& flags, T& target,
                    const std::string& help) {
    CLI::Option* opt = app->add_option(flags, target, help)->capture_default_str();
    add(key, opt, target);
    return opt;
  }

  void flag(CLI::App* app, const std::string& key, const std::string& flags, bool& target, const std::string& help) {
    add(key, app->add_flag(flags, target, help), target);
  }

  void apply_file(const std::string& path, const std::string& command) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw skelcap::IoError("cannot open config " + path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError("config " + path + ": " + e.what());
    }
    if (!j.is_object()) throw UsageError("config " + path + " must be a flat JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "command") {
        if (value != command) throw UsageError("config " + path + " was written for '" + value.dump() + "'");
        continue;
      }
      auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
      if (it == entries_.end()) throw UsageError("config " + path + ": unknown key '" + key + "' for " + command);
      if (it->option->count() == 0) it->set(value);
    }
  }

  void require(const std::string& key) { required_.push_back(key); }

  // Required keys may come from either the command line or the config file.
  void check_required() const {
    for (const auto& key : required_) {
      auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
      if (it->get() == ojson(""))
        throw UsageError(it->option->get_name() + " is required (flag or config key '" + key + "')");
    }
  }

  ojson resolved(const std::string& command) const {
    ojson j;
    j["command"] = command;
    for (const auto& e : entries_) j[e.key] = e.get();
    return j;
  }

 private:
  struct Entry {
    std::string key;
    CLI::Option* option;
    std::function<ojson()> get;
    std::function<void(const nlohmann::json&)> set;
  };

  template <class T>
  void add(const std::string& key, CLI::Option* opt, T& target) {
    entries_.push_back({key, opt, [&target] { return ojson(target); },
                        [&target, key](const nlohmann::json& v) {
                          try {
                            target = v.get<T>();
                          } catch (const nlohmann::json::exception&) {
                            throw UsageError("config key '" + key + "' has the wrong type");
                          }
                        }});
  }

  std::vector<Entry> entries_;
  std::vector<std::string> required_;
};

struct Command {
  CLI::App* app = nullptr;
  Settings settings;
  std::string config_path;

  virtual ~Command() = default;
  virtual void run() = 0;

  // Snapshot location for an output path; empty when the output is stdout.
  virtual fs::path snapshot_path() const = 0;

  void execute() {
    if (!config_path.empty()) settings.apply_file(config_path, app->get_name());
    settings.check_required();
    const auto snapshot = settings.resolved(app->get_name());
    spdlog::debug("resolved config: {}", snapshot.dump());
    run();
    if (const auto p = snapshot_path(); !p.empty()) {
      std::ofstream out(p, std::ios::binary | std::ios::trunc);
      if (!out) throw skelcap::IoError("cannot write " + p.string());
      out << snapshot.dump(2) << '\n';
    } else {
      spdlog::info("resolved config: {}", snapshot.dump());
    }
  }

  void attach(CLI::App& parent, const std::string& name, const std::string& help) {
    app = parent.add_subcommand(name, help);
    app->add_option("--config", config_path, "flat JSON config; flags override its values");
    setup();
  }

  virtual void setup() = 0;
};

fs::path file_snapshot(const std::string& output) {
  if (output.empty()) return {};
  fs::path p(output);
  return p.replace_extension(".config.json");
}

void require_distinct(const std::string& input, const std::string& output) {
  if (output.empty() || input.empty()) return;
  std::error_code ec;
  if (fs::exists(output) && fs::equivalent(input, output, ec))
    throw UsageError("output would overwrite the input file " + input);
}

void emit(const std::string& output, const std::function<void(std::ostream&)>& write) {
  if (output.empty()) {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw skelcap::IoError("cannot open " + output + " for writing");
  write(out);
  out.flush();
  if (!out) throw skelcap::IoError("failed writing " + output);
}

bool is_preprocessed(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw skelcap::IoError("cannot open " + path);
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto& frames = j.at("frames");
      return frames.is_array() && !frames.empty() && frames[0].contains("points");
    } catch (const nlohmann::json::exception&) {
      return false;  // let the typed reader report the error
    }
  }
  return false;
}

// Restricts samples to one side of a split manifest; all samples without one.
template <class Frame>
std::vector<skelcap::CaptionSample<Frame>> pick_side(const std::vector<skelcap::CaptionSample<Frame>>& samples,
                                                      const std::string& manifest, const std::string& side) {
  if (side != "train" && side != "test" && side != "all")
    throw UsageError("--side must be train, test or all");
  if (manifest.empty() || side == "all") return samples;
  return skelcap::SplitManifest::load(manifest).select(samples, side == "test");
}

// ---------------------------------------------------------------------------

struct GenData : Command {
  std::size_t signs = 12, signers = 8, per_pair = 3;
  std::uint64_t seed = 0;
  skelcap::SynthOptions opt;
  std::string output;

  void setup() override {
    settings.bind(app, "data.signs", "--signs", signs, "distinct signs");
    settings.bind(app, "data.signers", "--signers", signers, "distinct signers");
    settings.bind(app, "data.per_pair", "--per-pair", per_pair, "renderings per (sign, signer)");
    settings.bind(app, "data.seed", "--seed", seed, "generator seed");
    settings.bind(app, "synth.shoulder_width_min", "--shoulder-width-min", opt.shoulder_width_min, "");
    settings.bind(app, "synth.shoulder_width_max", "--shoulder-width-max", opt.shoulder_width_max, "");
    settings.bind(app, "synth.limb_jitter", "--limb-jitter", opt.limb_jitter, "relative limb length spread");
    settings.bind(app, "synth.speed_min", "--speed-min", opt.speed_min, "");
    settings.bind(app, "synth.speed_max", "--speed-max", opt.speed_max, "");
    settings.bind(app, "synth.noise_sigma", "--noise-sigma", opt.noise_sigma, "per-coordinate noise");
    settings.bind(app, "synth.translation_range", "--translation-range", opt.translation_range, "");
    settings.bind(app, "synth.sample_jitter", "--sample-jitter", opt.sample_jitter, "");
    settings.bind(app, "synth.frame_jitter", "--frame-jitter", opt.frame_jitter, "");
    settings.bind(app, "synth.hand_dropout", "--hand-dropout", opt.hand_dropout, "probability a hand is missing");
    settings.bind(app, "output", "-o,--output", output, "raw corpus JSONL (stdout if absent)");
  }

  fs::path snapshot_path() const override { return file_snapshot(output); }

  void run() override {
    const auto samples = skelcap::synth_generate(signs, signers, per_pair, seed, opt);
    spdlog::info("generated {} samples", samples.size());
    emit(output, [&](std::ostream& out) {
      for (const auto& s : samples) out << skelcap::sample_to_line(s) << '\n';
    });
  }
};

struct Preprocess : Command {
  std::string input, output;

  void setup() override {
    settings.bind(app, "input", "-i,--input", input, "raw corpus JSONL");
    settings.require("input");
    settings.bind(app, "output", "-o,--output", output, "preprocessed JSONL (stdout if absent)");
  }

  fs::path snapshot_path() const override { return file_snapshot(output); }

  void run() override {
    require_distinct(input, output);
    const auto raw = skelcap::read_raw_samples(input);
    std::size_t degenerate = 0;
    emit(output, [&](std::ostream& out) {
      for (const auto& s : raw) {
        const auto p = skelcap::preprocess_sample(s);
        for (const auto& f : p.frames) degenerate += f.degenerate;
        out << skelcap::sample_to_line(p) << '\n';
      }
    });
    spdlog::info("preprocessed {} samples ({} degenerate frames)", raw.size(), degenerate);
  }
};

struct Split : Command {
  std::string input, output, mode = "signer_agnostic";
  double fraction = 0.25;
  std::uint64_t seed = 0;

  void setup() override {
    settings.bind(app, "input", "-i,--input", input, "corpus JSONL, raw or preprocessed");
    settings.require("input");
    settings.bind(app, "split.mode", "--mode", mode, "signer | sign (or signer_agnostic | sign_agnostic)");
    settings.bind(app, "split.fraction", "--fraction", fraction, "target test fraction of samples");
    settings.bind(app, "split.seed", "--seed", seed, "shuffle seed");
    settings.bind(app, "output", "-o,--output", output, "split manifest JSON (stdout if absent)");
  }

  fs::path snapshot_path() const override { return file_snapshot(output); }

  void run() override {
    require_distinct(input, output);
    const auto m = skelcap::split_mode_from_string(mode);
    auto manifest = is_preprocessed(input)
                        ? skelcap::SplitManifest::of(
                              skelcap::split(skelcap::read_preprocessed_samples(input), m, fraction, seed))
                        : skelcap::SplitManifest::of(skelcap::split(skelcap::read_raw_samples(input), m, fraction, seed));
    spdlog::info("{} split: {} train, {} test", skelcap::to_string(m), manifest.train.size(), manifest.test.size());
    emit(output, [&](std::ostream& out) { out << manifest.to_json().dump() << '\n'; });
  }
};

struct Train : Command {
  std::string input, split, out_dir;
  skelcap::nn::ModelConfig model;
  skelcap::nn::TrainConfig cfg;
  std::uint64_t model_seed = 0;
  std::size_t min_freq = 1;
  double clip = 0.0;
  bool resume = false;

  void setup() override {
    settings.bind(app, "input", "-i,--input", input, "preprocessed corpus JSONL");
    settings.require("input");
    settings.bind(app, "split", "--split", split, "split manifest; trains on its train side");
    settings.bind(app, "model.d_model", "--d-model", model.d_model, "");
    settings.bind(app, "model.n_heads", "--heads", model.n_heads, "");
    settings.bind(app, "model.n_encoder_layers", "--encoder-layers", model.n_encoder_layers, "");
    settings.bind(app, "model.n_decoder_layers", "--decoder-layers", model.n_decoder_layers, "");
    settings.bind(app, "model.d_ff", "--d-ff", model.d_ff, "");
    settings.bind(app, "model.dropout", "--dropout", model.dropout_p, "");
    settings.bind(app, "model.max_src_len", "--max-src-len", model.max_src_len, "frames kept per sample");
    settings.bind(app, "model.max_tgt_len", "--max-tgt-len", model.max_tgt_len, "decoder positions");
    settings.bind(app, "model.seed", "--model-seed", model_seed, "initialization seed");
    settings.bind(app, "vocab.min_freq", "--min-freq", min_freq, "");
    settings.bind(app, "train.learning_rate", "--lr", cfg.learning_rate, "");
    settings.bind(app, "train.beta1", "--beta1", cfg.adam_beta1, "");
    settings.bind(app, "train.beta2", "--beta2", cfg.adam_beta2, "");
    settings.bind(app, "train.eps", "--adam-eps", cfg.adam_eps, "");
    settings.bind(app, "train.batch_size", "--batch-size", cfg.batch_size, "");
    settings.bind(app, "train.max_steps", "--steps", cfg.max_steps, "optimizer steps in total");
    settings.bind(app, "train.seed", "--seed", cfg.seed, "batch order and dropout seed");
    settings.bind(app, "train.gradient_clip_norm", "--clip", clip, "global gradient norm limit, 0 disables");
    settings.bind(app, "train.log_every", "--log-every", cfg.log_every, "");
    settings.bind(app, "train.checkpoint_every", "--checkpoint-every", cfg.checkpoint_every, "0: only at the end");
    settings.flag(app, "train.resume", "--resume", resume, "continue from the checkpoint in the output directory");
    settings.bind(app, "output", "-o,--output", out_dir, "run directory");
    settings.require("output");
  }

  fs::path snapshot_path() const override { return fs::path(out_dir) / "resolved_config.json"; }

  void run() override {
    if (clip < 0.0) throw skelcap::ConfigError("train config: gradient_clip_norm must be non-negative");
    if (clip > 0.0) cfg.gradient_clip_norm = clip;
    fs::create_directories(out_dir);
    const fs::path ckpt = fs::path(out_dir) / "model.ckpt";
    const fs::path vocab_path = fs::path(out_dir) / "vocab.txt";
    const fs::path log_path = fs::path(out_dir) / "train_log.csv";
    cfg.checkpoint_path = ckpt;

    const auto samples = pick_side(skelcap::read_preprocessed_samples(input), split, "train");
    std::vector<std::string> text;
    for (const auto& s : samples) text.push_back(s.description);
    auto vocab = skelcap::build_vocab(text, min_freq);
    model.vocab_size = vocab.size();

    std::optional<skelcap::nn::Seq2SeqModel> net;
    skelcap::nn::AdamState state;
    if (resume) {
      auto c = skelcap::nn::load_checkpoint(ckpt);
      if (!(c.model.config == model)) throw skelcap::ConfigError("checkpoint model config differs from the run config");
      if (!(skelcap::Vocabulary::load(vocab_path) == vocab))
        throw skelcap::ConfigError("vocabulary differs from the one the checkpoint was trained with");
      if (!c.optimizer) throw skelcap::CorruptFileError("checkpoint has no optimizer state to resume from");
      net.emplace(std::move(c.model));
      state = std::move(*c.optimizer);
      spdlog::info("resuming at step {}", state.step);
    } else {
      net.emplace(skelcap::nn::init_model(model, model_seed));
      vocab.save(vocab_path);
    }
    spdlog::info("{} training samples, vocabulary {}, {} parameters", samples.size(), vocab.size(), net->size());

    std::ofstream log(log_path, std::ios::binary | (resume ? std::ios::app : std::ios::trunc));
    if (!log) throw skelcap::IoError("cannot write " + log_path.string());
    if (!resume) log << "step,loss\n";
    log.precision(std::numeric_limits<double>::max_digits10);
    const auto examples = skelcap::nn::make_examples(samples, vocab, model);
    const auto entries = skelcap::nn::train(*net, state, examples, cfg, [](const skelcap::nn::TrainLogEntry& e) {
      spdlog::info("step {} loss {:.6f}", e.step, e.loss);
    });
    for (const auto& e : entries) log << e.step << ',' << e.loss << '\n';
    if (!log) throw skelcap::IoError("failed writing " + log_path.string());
  }
};

// Shared by decode and eval.
struct ModelInput {
  std::string checkpoint, vocab, input, split, side = "test";

  void bind(Settings& s, CLI::App* app) {
    s.bind(app, "checkpoint", "--checkpoint", checkpoint, "model checkpoint");
    s.require("checkpoint");
    s.bind(app, "vocab", "--vocab", vocab, "vocabulary file (default: next to the checkpoint)");
    s.bind(app, "input", "-i,--input", input, "preprocessed corpus JSONL");
    s.require("input");
    s.bind(app, "split", "--split", split, "split manifest");
    s.bind(app, "side", "--side", side, "train | test | all (with --split)");
  }

  struct Loaded {
    skelcap::nn::Seq2SeqModel model;
    skelcap::Vocabulary vocab;
    std::vector<skelcap::PreprocessedSample> samples;
  };

  Loaded load() const {
    auto ckpt = skelcap::nn::load_checkpoint(checkpoint);
    const fs::path vp = vocab.empty() ? fs::path(checkpoint).parent_path() / "vocab.txt" : fs::path(vocab);
    auto v = skelcap::Vocabulary::load(vp);
    if (v.size() != ckpt.model.config.vocab_size)
      throw skelcap::ConfigError("vocabulary size " + std::to_string(v.size()) + " does not match the checkpoint's " +
                                 std::to_string(ckpt.model.config.vocab_size));
    auto samples = pick_side(skelcap::read_preprocessed_samples(input), split, side);
    if (samples.empty()) throw skelcap::EmptyInputError("no samples to caption");
    return {std::move(ckpt.model), std::move(v), std::move(samples)};
  }
};

struct Decode : Command {
  ModelInput in;
  std::string output;

  void setup() override {
    in.bind(settings, app);
    settings.bind(app, "output", "-o,--output", output, "JSONL of captions (stdout if absent)");
  }

  fs::path snapshot_path() const override { return file_snapshot(output); }

  void run() override {
    require_distinct(in.input, output);
    const auto l = in.load();
    emit(output, [&](std::ostream& out) {
      for (const auto& s : l.samples) {
        ojson j;
        j["sample_id"] = s.sample_id;
        j["reference"] = s.description;
        j["hypothesis"] = skelcap::nn::greedy_decode(l.model, s, l.vocab);
        out << j.dump() << '\n';
      }
    });
    spdlog::info("captioned {} samples", l.samples.size());
  }
};

struct Eval : Command {
  ModelInput in;
  std::string output, hypotheses;

  void setup() override {
    in.bind(settings, app);
    settings.bind(app, "output", "-o,--output", output, "metric report JSON (stdout if absent)");
    settings.bind(app, "hypotheses", "--hypotheses", hypotheses, "also write generated captions as JSONL");
  }

  fs::path snapshot_path() const override { return file_snapshot(output); }

  void run() override {
    require_distinct(in.input, output);
    const auto l = in.load();
    std::vector<std::string> hyps;
    const auto report = skelcap::nn::evaluate_model(l.model, l.samples, l.vocab, &hyps);
    if (!hypotheses.empty())
      emit(hypotheses, [&](std::ostream& out) {
        for (std::size_t i = 0; i < hyps.size(); ++i)
          out << ojson{{"sample_id", l.samples[i].sample_id}, {"hypothesis", hyps[i]}}.dump() << '\n';
      });
    spdlog::info("\n{}", report.table(in.split.empty() ? "all" : in.side));
    emit(output, [&](std::ostream& out) { out << report.to_json().dump() << '\n'; });
  }
};

struct Baseline : Command {
  std::string input, split, side = "all", output;
  std::size_t max_pairs = skelcap::kDefaultBaselinePairs;
  std::uint64_t seed = 0;

  void setup() override {
    settings.bind(app, "input", "-i,--input", input, "corpus JSONL, raw or preprocessed");
    settings.require("input");
    settings.bind(app, "split", "--split", split, "split manifest");
    settings.bind(app, "side", "--side", side, "train | test | all (with --split)");
    settings.bind(app, "baseline.max_pairs", "--max-pairs", max_pairs, "pair budget before subsampling");
    settings.bind(app, "baseline.seed", "--seed", seed, "subsampling seed");
    settings.bind(app, "output", "-o,--output", output, "metric report JSON (stdout if absent)");
  }

  fs::path snapshot_path() const override { return file_snapshot(output); }

  void run() override {
    require_distinct(input, output);
    const auto report =
        is_preprocessed(input)
            ? skelcap::corpus_baseline(pick_side(skelcap::read_preprocessed_samples(input), split, side), max_pairs, seed)
            : skelcap::corpus_baseline(pick_side(skelcap::read_raw_samples(input), split, side), max_pairs, seed);
    spdlog::info("\n{}", report.table("baseline"));
    emit(output, [&](std::ostream& out) { out << report.to_json().dump() << '\n'; });
  }
};

struct Stats : Command {
  std::string input, out_dir;
  std::size_t bins = 50;

  void setup() override {
    settings.bind(app, "input", "-i,--input", input, "preprocessed corpus JSONL");
    settings.require("input");
    settings.bind(app, "stats.bins", "--bins", bins, "histogram bins per axis");
    settings.bind(app, "output", "-o,--output", out_dir, "directory for x.csv and y.csv (stdout if absent)");
  }

  fs::path snapshot_path() const override {
    return out_dir.empty() ? fs::path{} : fs::path(out_dir) / "resolved_config.json";
  }

  void run() override {
    if (bins == 0) throw skelcap::InvalidParamsError("--bins must be positive");
    const auto st = skelcap::coord_stats(skelcap::read_preprocessed_samples(input), bins);
    if (out_dir.empty()) {
      std::cout << "# x\n";
      st.x.write_csv(std::cout);
      std::cout << "# y\n";
      st.y.write_csv(std::cout);
      return;
    }
    fs::create_directories(out_dir);
    st.x.write_csv(fs::path(out_dir) / "x.csv");
    st.y.write_csv(fs::path(out_dir) / "y.csv");
    spdlog::info("x in [{:.4f}, {:.4f}], y in [{:.4f}, {:.4f}]", st.x.lo, st.x.hi, st.y.lo, st.y.hi);
  }
};

struct GradCheck : Command {
  std::uint64_t seed = 1;
  double eps = 1e-5, tolerance = 1e-4;
  std::size_t vocab = 12;
  std::string output;

  void setup() override {
    settings.bind(app, "grad_check.seed", "--seed", seed, "");
    settings.bind(app, "grad_check.eps", "--eps", eps, "finite-difference step");
    settings.bind(app, "grad_check.tolerance", "--tolerance", tolerance, "maximum relative error");
    settings.bind(app, "grad_check.vocab_size", "--vocab-size", vocab, "");
    settings.bind(app, "output", "-o,--output", output, "result JSON (stdout if absent)");
  }

  fs::path snapshot_path() const override { return file_snapshot(output); }

  void run() override {
    const auto c = skelcap::nn::tiny_config(vocab);
    const auto r = skelcap::nn::gradient_check(c, skelcap::nn::random_check_batch(c, seed), eps, seed);
    const bool ok = r.max_relative_error < tolerance;
    ojson j{{"max_relative_error", r.max_relative_error},
            {"worst_tensor", r.worst_tensor},
            {"worst_index", r.worst_index},
            {"analytic", r.analytic},
            {"numeric", r.numeric},
            {"checked", r.checked},
            {"passed", ok}};
    emit(output, [&](std::ostream& out) { out << j.dump() << '\n'; });
    if (!ok)
      throw skelcap::Error("gradient check failed: relative error " + std::to_string(r.max_relative_error) + " in " +
                           r.worst_tensor);
  }
};

void configure_logging() {
  auto logger = spdlog::stderr_logger_st("skelcap");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("SKELCAP_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else throw UsageError("SKELCAP_LOG must be error, info or debug");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skeleton-sequence captioning toolkit"};
  app.require_subcommand(1);

  std::vector<std::unique_ptr<Command>> commands;
  auto add = [&](std::unique_ptr<Command> c, const std::string& name, const std::string& help) {
    c->attach(app, name, help);
    commands.push_back(std::move(c));
  };
  add(std::make_unique<GenData>(), "gen-data", "render a synthetic captioned skeleton corpus");
  add(std::make_unique<Preprocess>(), "preprocess", "impute missing landmarks and normalize frames");
  add(std::make_unique<Split>(), "split", "write a signer- or sign-disjoint train/test manifest");
  add(std::make_unique<Train>(), "train", "train a captioning model");
  add(std::make_unique<Decode>(), "decode", "caption samples with a trained model");
  add(std::make_unique<Eval>(), "eval", "score a trained model with ROUGE and BLEU");
  add(std::make_unique<Baseline>(), "baseline-metrics", "score captions against each other");
  add(std::make_unique<Stats>(), "stats", "histograms of normalized coordinates");
  add(std::make_unique<GradCheck>(), "grad-check", "compare analytic and numeric gradients");

  try {
    configure_logging();
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  for (auto& c : commands) {
    if (!c->app->parsed()) continue;
    try {
      c->execute();
      return 0;
    } catch (const UsageError& e) {
      spdlog::error("{}", e.what());
      return 2;
    } catch (const std::exception& e) {
      spdlog::error("{}", e.what());
      return 1;
    }
  }
  return 2;
}
