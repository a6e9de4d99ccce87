// react: scenario generation, training, clustering, change detection,
// threshold sweeps and embedding benchmarks from the command line.

#include <openssl/evp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "react/react.hpp"

#ifndef REACT_VERSION
#define REACT_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace react;

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kValidation = 4,
  kDivergence = 5,
  kDimension = 6,
  kInfeasible = 7,
  kInternal = 70,
};

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage: return kUsage;
    case ErrorKind::io: return kIo;
    case ErrorKind::validation: return kValidation;
    case ErrorKind::divergence: return kDivergence;
    case ErrorKind::dimension: return kDimension;
    case ErrorKind::infeasible: return kInfeasible;
  }
  return kInternal;
}

std::string sha256_file(const std::string& path) {
  const std::string data = read_text_file(path);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::io, "sha256 failed for " + path);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

// Run manifest: resolved config, seed, input hashes and tool version.
class Manifest {
 public:
  explicit Manifest(std::string command) : command_(std::move(command)) {}

  void config(const std::string& key, json value) { config_[key] = std::move(value); }
  void seed(std::uint64_t s) { seed_ = s; }
  void input(const std::string& role, const std::string& path) {
    inputs_[role] = {{"path", path}, {"sha256", sha256_file(path)}};
  }
  void output(const std::string& name) { outputs_.push_back(name); }

  void write(const fs::path& dir) const {
    json j = {{"tool", "react"},
              {"version", REACT_VERSION},
              {"command", command_},
              {"seed", seed_ ? json(*seed_) : json(nullptr)},
              {"config", config_},
              {"inputs", inputs_},
              {"outputs", outputs_}};
    write_text_file((dir / "manifest.json").string(), j.dump(1) + "\n");
  }

 private:
  std::string command_;
  json config_ = json::object();
  std::optional<std::uint64_t> seed_;
  json inputs_ = json::object();
  std::vector<std::string> outputs_;
};

fs::path prepare_out(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out))
    throw Error(ErrorKind::io, "cannot create output directory " + out);
  return fs::path(out);
}

void emit(const fs::path& dir, Manifest& m, const std::string& name, const std::string& text) {
  write_text_file((dir / name).string(), text);
  m.output(name);
}

std::vector<std::size_t> parse_size_list(const std::string& s, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(tok, &pos);
      if (pos != tok.size() || v < 0) throw std::invalid_argument(tok);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Error(ErrorKind::usage, what + ": bad entry '" + tok + "'");
    }
  }
  if (out.empty()) throw Error(ErrorKind::usage, what + ": empty list");
  return out;
}

std::vector<Frame> load_frames(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open for reading: " + path);
  return frames_from_ndjson(in);
}

GroundTruth load_truth(const std::string& path) {
  return parse_json_as<GroundTruth>(read_text_file(path), path);
}

std::string scenario_file(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// Commands --------------------------------------------------------------------

struct GenOptions {
  std::string preset;
  std::string spec;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_gen(const GenOptions& o) {
  if (o.preset.empty() == o.spec.empty())
    throw Error(ErrorKind::usage, "gen: give exactly one of --preset or --spec");
  Manifest m("gen");
  m.seed(o.seed);
  ScenarioSpec spec;
  if (!o.preset.empty()) {
    spec = preset(o.preset, o.seed);
    m.config("preset", o.preset);
  } else {
    spec = parse_json_as<ScenarioSpec>(read_text_file(o.spec), o.spec);
    spec.seed = o.seed;
    m.input("spec", o.spec);
  }
  const Scenario sc = generate(spec);
  const fs::path dir = prepare_out(o.out);
  m.config("scenario", json(sc.spec));
  emit(dir, m, "scenario.json", json(sc.spec).dump(1) + "\n");
  for (int s = 0; s < 2; ++s) {
    const std::string tag = "session_" + std::to_string(s);
    emit(dir, m, tag + ".snapshot.json", json(sc.snapshots[s]).dump(1) + "\n");
    emit(dir, m, tag + ".frames.ndjson", frames_to_ndjson(sc.frames[s]));
  }
  emit(dir, m, "ground_truth.json", json(sc.truth).dump(1) + "\n");
  m.write(dir);
  spdlog::info("gen: {} instances -> {} ({} matched, {} absent, {} new)",
               sc.snapshots[0].instances.size(), o.out, sc.truth.matched.size(),
               sc.truth.absent.size(), sc.truth.added.size());
}

struct TrainOptions {
  std::string scenario;
  std::string snapshot;
  std::string truth;
  std::uint64_t seed = 0;
  int epochs = 30;
  double lr = 0.001;
  int batch_size = 64;
  int views_per_label = 4;
  double train_fraction = 0.85;
  std::string layers = "192,128,64";
  bool no_normalize = false;
  double margin = 1.0;
  bool no_hard_fallback = false;
  std::string augment = "auto";
  std::string out;
};

void cmd_train(const TrainOptions& o) {
  Manifest m("train");
  m.seed(o.seed);
  std::string snap_path = o.snapshot, truth_path = o.truth;
  std::optional<ScenarioSpec> spec;
  if (!o.scenario.empty()) {
    if (snap_path.empty()) snap_path = scenario_file(o.scenario, "session_0.snapshot.json");
    if (truth_path.empty()) truth_path = scenario_file(o.scenario, "ground_truth.json");
    const std::string spec_path = scenario_file(o.scenario, "scenario.json");
    if (fs::exists(spec_path)) {
      spec = parse_json_as<ScenarioSpec>(read_text_file(spec_path), spec_path);
      m.input("scenario", spec_path);
    }
  }
  if (snap_path.empty() || truth_path.empty())
    throw Error(ErrorKind::usage, "train: need --scenario or both --snapshot and --truth");
  m.input("snapshot", snap_path);
  m.input("truth", truth_path);
  const SceneSnapshot snap = load_snapshot(snap_path);
  const GroundTruth truth = load_truth(truth_path);
  if (truth.sessions.empty()) throw Error(ErrorKind::validation, "train: truth has no sessions");

  TrainConfig tc;
  tc.seed = o.seed;
  tc.epochs = o.epochs;
  tc.learning_rate = o.lr;
  tc.batch_size = o.batch_size;
  tc.views_per_label = o.views_per_label;
  tc.hard_fallback = !o.no_hard_fallback;
  std::string aug = o.augment;
  if (aug == "auto")
    aug = spec && spec->view_model.mode == DescriptorMode::patch ? "patch" : "abstract";
  if (aug == "none") {
    tc.augmentation.mode = AugmentMode::none;
  } else if (aug == "abstract") {
    tc.augmentation.mode = AugmentMode::abstract;
  } else if (aug == "patch") {
    tc.augmentation.mode = AugmentMode::patch;
    if (spec) {
      tc.augmentation.patch_height = spec->view_model.patch_height;
      tc.augmentation.patch_width = spec->view_model.patch_width;
      tc.augmentation.patch_channels = spec->view_model.patch_channels;
    }
  } else {
    throw Error(ErrorKind::usage, "train: --augment must be auto|none|abstract|patch");
  }

  const auto dims = parse_size_list(o.layers, "--layers");
  const TrainingSplit split =
      make_training_set(snap, truth.sessions[0], o.train_fraction, o.seed);
  const EmbeddingModel init = EmbeddingModel::create(dims, o.seed, !o.no_normalize, o.margin);
  spdlog::info("train: {} training views, {} validation views, {} epochs", split.train.items.size(),
               split.validation.items.size(), tc.epochs);
  const TrainResult res = train(init, split.train, tc);
  for (const auto& st : res.curve)
    spdlog::debug("epoch {} loss {:.6f} active {:.3f}", st.epoch, st.mean_loss,
                  st.active_triplet_fraction);

  m.config("epochs", tc.epochs);
  m.config("learning_rate", tc.learning_rate);
  m.config("batch_size", tc.batch_size);
  m.config("views_per_label", tc.views_per_label);
  m.config("train_fraction", o.train_fraction);
  m.config("layer_dims", dims);
  m.config("normalize_output", !o.no_normalize);
  m.config("margin", o.margin);
  m.config("hard_fallback", tc.hard_fallback);
  m.config("augment", aug);
  m.config("adam", {{"beta1", tc.adam_beta1}, {"beta2", tc.adam_beta2}, {"eps", tc.adam_eps}});

  const fs::path dir = prepare_out(o.out);
  emit(dir, m, "model.json", model_to_json(res.model).dump(1) + "\n");
  emit(dir, m, "loss.csv", loss_curve_csv(res.curve));
  nlohmann::json val = {{"train_loss", dataset_loss(res.model, split.train, res.model.margin())}};
  if (split.validation.by_label().size() >= 2)
    val["validation_loss"] = dataset_loss(res.model, split.validation, res.model.margin());
  emit(dir, m, "validation.json", val.dump(1) + "\n");
  m.write(dir);
  spdlog::info("train: final epoch loss {:.6f}", res.curve.back().mean_loss);
}

struct ClusterOptions {
  std::string snapshot;
  std::string model;
  double gamma = 1.0;
  std::string out;
};

void cmd_cluster(const ClusterOptions& o) {
  Manifest m("cluster");
  m.input("snapshot", o.snapshot);
  m.input("model", o.model);
  m.config("gamma", o.gamma);
  const SceneSnapshot snap = load_snapshot(o.snapshot);
  const EmbeddingModel model = load_model(o.model);
  const SceneSnapshot out = cluster_snapshot(snap, model, ClusterConfig{o.gamma});
  const fs::path dir = prepare_out(o.out);
  emit(dir, m, "clustered.snapshot.json", json(out).dump(1) + "\n");
  m.write(dir);
  spdlog::info("cluster: {} instances -> {} clusters", out.instances.size(), out.clusters.size());
}

struct MatchOptions {
  std::string ref;
  std::string cur;
  std::string model;
  double gamma = 1.0;
  std::string method = "react";
  std::string out;
};

ChangeReport match_snapshots(const SceneSnapshot& ref, const SceneSnapshot& cur,
                             const EmbeddingModel& model, double gamma, Method method) {
  if (method == Method::greedy)
    return greedy_detect_changes(ref, cur, model, MatchConfig{gamma});
  const ClusterConfig cc{gamma};
  return detect_changes(cluster_snapshot(ref, model, cc), cluster_snapshot(cur, model, cc),
                        MatchConfig{gamma});
}

void cmd_match(const MatchOptions& o) {
  Manifest m("match");
  const Method method = parse_method(o.method);
  m.input("ref", o.ref);
  m.input("cur", o.cur);
  m.input("model", o.model);
  m.config("gamma", o.gamma);
  m.config("method", to_string(method));
  const SceneSnapshot ref = load_snapshot(o.ref);
  const SceneSnapshot cur = load_snapshot(o.cur);
  const EmbeddingModel model = load_model(o.model);
  const ChangeReport rep = match_snapshots(ref, cur, model, o.gamma, method);
  const fs::path dir = prepare_out(o.out);
  emit(dir, m, "report.json", json(rep).dump(1) + "\n");
  m.write(dir);
  spdlog::info("match: {} matched, {} absent, {} new, total distance {:.4f} m",
               rep.matched.size(), rep.absent.size(), rep.added.size(), rep.total_distance);
}

struct OnlineOptions {
  std::string ref;
  std::string frames;
  std::string model;
  double gamma = 1.0;
  double max_distance = 0.1;
  double max_embedding_distance = 2.0;
  std::string session_id = "session1";
  std::int64_t time_index = 1;
  std::string out;
};

void cmd_online(const OnlineOptions& o) {
  Manifest m("online");
  m.input("ref", o.ref);
  m.input("frames", o.frames);
  m.input("model", o.model);
  m.config("gamma", o.gamma);
  m.config("association", {{"max_distance", o.max_distance},
                           {"max_embedding_distance", o.max_embedding_distance}});
  m.config("session_id", o.session_id);
  m.config("time_index", o.time_index);
  const SceneSnapshot ref_raw = load_snapshot(o.ref);
  const EmbeddingModel model = load_model(o.model);
  const std::vector<Frame> frames = load_frames(o.frames);

  OnlineConfig cfg;
  cfg.gamma = o.gamma;
  cfg.association = {o.max_distance, o.max_embedding_distance};
  cfg.session_id = o.session_id;
  cfg.time_index = o.time_index;
  OnlineMatcher matcher(cluster_snapshot(ref_raw, model, ClusterConfig{o.gamma}), model, cfg);

  std::string interim;
  for (const auto& f : frames) {
    matcher.process_frame(f);
    json line = {{"frame_index", f.frame_index},
                 {"observations", f.observations.size()},
                 {"instances", matcher.current().instances.size()}};
    if (const auto& r = matcher.last_report()) {
      line["matched"] = r->matched.size();
      line["absent"] = r->absent.size();
      line["new"] = r->added.size();
      line["total_distance"] = r->total_distance;
    }
    interim += line.dump() + "\n";
  }
  const ChangeReport rep = matcher.finalize();
  const fs::path dir = prepare_out(o.out);
  emit(dir, m, "report.json", json(rep).dump(1) + "\n");
  emit(dir, m, "interim.ndjson", interim);
  SceneSnapshot current = matcher.current();
  current.clusters.clear();
  emit(dir, m, "current.snapshot.json", json(current).dump(1) + "\n");
  m.write(dir);
  spdlog::info("online: {} frames, {} views embedded; {} matched, {} absent, {} new",
               matcher.frames_processed(), matcher.library().embed_calls(), rep.matched.size(),
               rep.absent.size(), rep.added.size());
}

struct SweepOptions {
  std::string scenario;
  std::string ref;
  std::string cur;
  std::string truth;
  std::string model;
  std::string method = "both";
  std::string out;
};

void cmd_sweep(const SweepOptions& o) {
  Manifest m("sweep");
  std::string ref = o.ref, cur = o.cur, truth = o.truth;
  if (!o.scenario.empty()) {
    if (ref.empty()) ref = scenario_file(o.scenario, "session_0.snapshot.json");
    if (cur.empty()) cur = scenario_file(o.scenario, "session_1.snapshot.json");
    if (truth.empty()) truth = scenario_file(o.scenario, "ground_truth.json");
  }
  if (ref.empty() || cur.empty() || truth.empty())
    throw Error(ErrorKind::usage, "sweep: need --scenario or --ref, --cur and --truth");
  std::vector<Method> methods;
  if (o.method == "both") {
    methods = {Method::react, Method::greedy};
  } else {
    methods = {parse_method(o.method)};
  }
  m.input("ref", ref);
  m.input("cur", cur);
  m.input("truth", truth);
  m.input("model", o.model);
  json ms = json::array();
  for (Method x : methods) ms.push_back(to_string(x));
  m.config("methods", ms);
  m.config("gamma_grid", default_gamma_grid());

  const SweepResult res = sweep(load_snapshot(ref), load_snapshot(cur), load_truth(truth),
                                load_model(o.model), methods);
  const fs::path dir = prepare_out(o.out);
  emit(dir, m, "sweep.csv", sweep_csv(res));
  emit(dir, m, "summary.json", sweep_summary_json(res).dump(1) + "\n");
  m.write(dir);
  for (const auto& s : res.summaries)
    spdlog::info("sweep: {} optimal gamma {:.1f} aggregated F1 {:.4f} plateau {}",
                 to_string(s.method), s.best.gamma, s.best.aggregated(), s.plateau_width);
}

struct BenchOptions {
  std::string model;
  std::string layers = "192,128,64";
  std::uint64_t seed = 0;
  std::string masks = "0,1,2,4,8,13,16";
  int repeats = 101;
  std::string out;
};

void cmd_bench(const BenchOptions& o) {
  Manifest m("bench");
  m.seed(o.seed);
  EmbeddingModel model;
  if (!o.model.empty()) {
    m.input("model", o.model);
    model = load_model(o.model);
  } else {
    const auto dims = parse_size_list(o.layers, "--layers");
    m.config("layer_dims", dims);
    model = EmbeddingModel::create(dims, o.seed);
  }
  const auto masks = parse_size_list(o.masks, "--masks");
  m.config("masks", masks);
  m.config("repeats", o.repeats);
  const auto rows = bench_embedding(model, masks, o.repeats, o.seed);
  const fs::path dir = prepare_out(o.out);
  emit(dir, m, "bench.csv", bench_csv(rows));
  m.write(dir);
  for (const auto& r : rows)
    spdlog::info("bench: {} masks median {:.4f} ms p95 {:.4f} ms", r.masks, r.median_ms, r.p95_ms);
}

struct LabelOptions {
  std::string snapshot;
  std::string labels;
  std::string out;
};

// Turns a manual {instance_id: category} file into a single-session ground
// truth usable by `train --snapshot ... --truth ...`.
void cmd_label(const LabelOptions& o) {
  Manifest m("label");
  m.input("snapshot", o.snapshot);
  m.input("labels", o.labels);
  const SceneSnapshot snap = load_snapshot(o.snapshot);
  std::map<std::string, std::string> manual;
  try {
    manual = json::parse(read_text_file(o.labels)).get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::validation, o.labels + ": " + e.what());
  }
  GroundTruth gt;
  SessionTruth st;
  st.session_id = snap.session_id;
  std::map<std::string, int> label_of;
  for (const auto& [id, cat] : manual) label_of.emplace(cat, 0);
  int next = 0;
  for (auto& [cat, label] : label_of) {
    label = next++;
    gt.label_names[label] = cat;
  }
  for (const auto& inst : snap.instances) {
    auto it = manual.find(inst.instance_id);
    if (it == manual.end())
      throw Error(ErrorKind::validation, "label: no label for instance " + inst.instance_id);
    st.instances[inst.instance_id] = {inst.instance_id, inst.semantic_class, 1,
                                      label_of.at(it->second)};
    for (const auto& v : inst.views) st.view_owner[v.view_id] = inst.instance_id;
  }
  for (const auto& [id, cat] : manual)
    if (!snap.find(id))
      throw Error(ErrorKind::validation, "label: unknown instance " + id);
  gt.sessions.push_back(std::move(st));
  const fs::path dir = prepare_out(o.out);
  emit(dir, m, "ground_truth.json", json(gt).dump(1) + "\n");
  m.write(dir);
  spdlog::info("label: {} instances in {} categories", manual.size(), gt.label_names.size());
}

void configure_logging(const std::string& flag) {
  std::string level = flag;
  if (level.empty()) {
    const char* env = std::getenv("REACT_LOG_LEVEL");
    level = env ? env : "info";
  }
  const auto lvl = spdlog::level::from_str(level);
  if (lvl == spdlog::level::off && level != "off")
    throw Error(ErrorKind::usage, "unknown log level '" + level + "'");
  auto logger = spdlog::stderr_color_mt("react");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(lvl);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-level change detection between scene sessions"};
  app.set_version_flag("--version", REACT_VERSION);
  app.set_config("--config", "", "TOML/INI config file; flags take precedence");
  app.require_subcommand(1);
  std::string log_level;
  app.add_option("--log-level", log_level,
                 "trace|debug|info|warn|error|off (env REACT_LOG_LEVEL)");

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate a two-session scenario");
  g->add_option("--preset", gen.preset, "coffeeroom|flat|labfront|studyhall");
  g->add_option("--spec", gen.spec, "Scenario spec JSON");
  g->add_option("--seed", gen.seed)->required();
  g->add_option("--out", gen.out)->required();

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train the embedding model with triplet loss");
  t->add_option("--scenario", tr.scenario, "Directory written by gen");
  t->add_option("--snapshot", tr.snapshot, "Reference snapshot (overrides --scenario)");
  t->add_option("--truth", tr.truth, "Ground truth or label file (overrides --scenario)");
  t->add_option("--seed", tr.seed)->required();
  t->add_option("--epochs", tr.epochs)->capture_default_str();
  t->add_option("--lr", tr.lr)->capture_default_str();
  t->add_option("--batch-size", tr.batch_size)->capture_default_str();
  t->add_option("--views-per-label", tr.views_per_label)->capture_default_str();
  t->add_option("--train-fraction", tr.train_fraction)->capture_default_str();
  t->add_option("--layers", tr.layers, "Comma-separated layer widths")->capture_default_str();
  t->add_flag("--no-normalize", tr.no_normalize, "Disable L2 output normalization");
  t->add_option("--margin", tr.margin)->capture_default_str();
  t->add_flag("--no-hard-fallback", tr.no_hard_fallback);
  t->add_option("--augment", tr.augment, "auto|none|abstract|patch")->capture_default_str();
  t->add_option("--out", tr.out)->required();

  ClusterOptions cl;
  auto* c = app.add_subcommand("cluster", "Cluster a snapshot into identical-object groups");
  c->add_option("--snapshot", cl.snapshot)->required();
  c->add_option("--model", cl.model)->required();
  c->add_option("--gamma", cl.gamma)->capture_default_str();
  c->add_option("--out", cl.out)->required();

  MatchOptions ma;
  auto* mt = app.add_subcommand("match", "Detect changes between two snapshots");
  mt->add_option("--ref", ma.ref)->required();
  mt->add_option("--cur", ma.cur)->required();
  mt->add_option("--model", ma.model)->required();
  mt->add_option("--gamma", ma.gamma)->capture_default_str();
  mt->add_option("--method", ma.method, "react|greedy")->capture_default_str();
  mt->add_option("--out", ma.out)->required();

  OnlineOptions on;
  auto* ol = app.add_subcommand("online", "Match a frame stream against a reference");
  ol->add_option("--ref", on.ref)->required();
  ol->add_option("--frames", on.frames, "NDJSON frame stream")->required();
  ol->add_option("--model", on.model)->required();
  ol->add_option("--gamma", on.gamma)->capture_default_str();
  ol->add_option("--max-distance", on.max_distance)->capture_default_str();
  ol->add_option("--max-embedding-distance", on.max_embedding_distance)->capture_default_str();
  ol->add_option("--session-id", on.session_id)->capture_default_str();
  ol->add_option("--time-index", on.time_index)->capture_default_str();
  ol->add_option("--out", on.out)->required();

  SweepOptions sw;
  auto* s = app.add_subcommand("sweep", "Sweep gamma over 0..5 for both methods");
  s->add_option("--scenario", sw.scenario);
  s->add_option("--ref", sw.ref);
  s->add_option("--cur", sw.cur);
  s->add_option("--truth", sw.truth);
  s->add_option("--model", sw.model)->required();
  s->add_option("--method", sw.method, "react|greedy|both")->capture_default_str();
  s->add_option("--out", sw.out)->required();

  BenchOptions be;
  auto* b = app.add_subcommand("bench", "Embedding latency versus mask count");
  b->add_option("--model", be.model, "Model file; default is a fresh model");
  b->add_option("--layers", be.layers)->capture_default_str();
  b->add_option("--seed", be.seed)->required();
  b->add_option("--masks", be.masks)->capture_default_str();
  b->add_option("--repeats", be.repeats)->capture_default_str();
  b->add_option("--out", be.out)->required();

  LabelOptions la;
  auto* l = app.add_subcommand("label", "Build a label file for an external snapshot");
  l->add_option("--snapshot", la.snapshot)->required();
  l->add_option("--labels", la.labels, "JSON object instance_id -> category")->required();
  l->add_option("--out", la.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    configure_logging(log_level);
    if (*g) cmd_gen(gen);
    else if (*t) cmd_train(tr);
    else if (*c) cmd_cluster(cl);
    else if (*mt) cmd_match(ma);
    else if (*ol) cmd_online(on);
    else if (*s) cmd_sweep(sw);
    else if (*b) cmd_bench(be);
    else if (*l) cmd_label(la);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}
