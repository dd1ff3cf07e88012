#pragma once

// Experiment configuration (YAML).
//
//   experiment: same-device-noisy     # lcc-vs-full-noisy | same-device-noisy |
//                                     # layer-study | gw-comparison | equivalence-check
//   seed: 0
//   workers: 1
//   output: results/same-device-noisy # prefix of <output>.csv and <output>.best.csv
//   trials: 24
//   sample_shots: 1024
//   dataset:
//     table: noisy-tableI             # noisy-tableI | noiseless-tableII | custom
//     n_min: 10
//     n_max: 12
//     seeds_per_row: 1                # 0 keeps all seeds
//     instances:                      # for table: custom
//       - {generator: er, n: 10, p: 0.5, seed: 0}
//       - {generator: reg, n: 12, d: 3, seed: 1}
//       - {file: graphs/my_graph.txt}
//   ansatz: {layers: 1, entanglement: circular}
//   optimizer: {method: cobyla, max_evals: auto, initial_step: 0.5, tolerance: 1.0e-4}
//   noise: {trajectories: 32, shots: 256, report_trajectories: 512,
//           placement: best-path, analytic_readout: true}
//   backends: {lcc: backends/backend7.spec, full: backends/backend27.spec}
//   layer_study: {layers: [1, 2, 3], threshold: 0.99}
//   gw: {trials: 24}
//   equivalence: {n_min: 4, n_max: 12, layers: [1, 2, 3], draws: 100,
//                 entanglements: [circular, linear], tolerance: 1.0e-9}
//   scales:                           # optional overrides picked by --scale
//     desk: {trials: 8}
//     full: {dataset: {n_max: 100}}
//
// Relative paths resolve against the config file's directory first, then
// against the data directory ($LCCVQE_DATA_DIR, else the build default).

#include <yaml-cpp/yaml.h>

#include <climits>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lccvqe/ansatz.hpp"
#include "lccvqe/dataset.hpp"
#include "lccvqe/error.hpp"
#include "lccvqe/noise.hpp"
#include "lccvqe/optimize.hpp"

#ifndef LCCVQE_DEFAULT_DATA_DIR
#define LCCVQE_DEFAULT_DATA_DIR "data"
#endif

namespace lccvqe {

enum class ExperimentKind {
  kLccVsFullNoisy,
  kSameDeviceNoisy,
  kLayerStudy,
  kGwComparison,
  kEquivalenceCheck,
};

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kLccVsFullNoisy: return "lcc-vs-full-noisy";
    case ExperimentKind::kSameDeviceNoisy: return "same-device-noisy";
    case ExperimentKind::kLayerStudy: return "layer-study";
    case ExperimentKind::kGwComparison: return "gw-comparison";
    case ExperimentKind::kEquivalenceCheck: return "equivalence-check";
  }
  return "?";
}

inline ExperimentKind parse_experiment(const std::string& s) {
  for (auto k : {ExperimentKind::kLccVsFullNoisy, ExperimentKind::kSameDeviceNoisy,
                 ExperimentKind::kLayerStudy, ExperimentKind::kGwComparison,
                 ExperimentKind::kEquivalenceCheck})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown experiment '" + s + "'");
}

inline std::string data_dir() {
  if (const char* env = std::getenv("LCCVQE_DATA_DIR"); env && *env) return env;
  return LCCVQE_DEFAULT_DATA_DIR;
}

/// Absolute paths pass through; relative ones are tried against `base_dir`
/// and then against the data directory.
inline std::string resolve_path(const std::string& p, const std::string& base_dir = {}) {
  namespace fs = std::filesystem;
  if (p.empty() || fs::path(p).is_absolute()) return p;
  if (!base_dir.empty() && fs::exists(fs::path(base_dir) / p))
    return (fs::path(base_dir) / p).string();
  if (fs::exists(p)) return p;
  return (fs::path(data_dir()) / p).string();
}

struct NoiseSettings {
  int trajectories = 32;
  int shots = 256;
  int report_trajectories = 512;
  Placement placement = Placement::kBestPath;
  bool analytic_readout = true;

  NoisySimConfig optimize_config() const {
    return {trajectories, shots, 0, placement, analytic_readout};
  }
  NoisySimConfig report_config() const {
    return {report_trajectories, shots, 0, placement, analytic_readout};
  }
};

struct EquivalenceSettings {
  int n_min = 4;
  int n_max = 12;
  std::vector<int> layers{1, 2, 3};
  int draws = 100;
  std::vector<Entanglement> entanglements{Entanglement::kCircular, Entanglement::kLinear};
  double tolerance = 1e-9;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kEquivalenceCheck;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output = "results/run";
  int trials = 24;
  int sample_shots = 1024;
  DatasetConfig dataset;
  int layers = 1;
  Entanglement entanglement = Entanglement::kCircular;
  OptimizerConfig optimizer;
  NoiseSettings noise;
  std::string backend_lcc = "backends/backend7.spec";
  std::string backend_full = "backends/backend27.spec";
  std::vector<int> study_layers{1, 2, 3};
  double threshold = 0.99;
  int gw_trials = 24;
  EquivalenceSettings equivalence;
  std::string base_dir;  // directory of the config file, for relative paths

  void validate() const {
    auto positive = [](long v, const char* what) {
      if (v < 1) throw InvalidArgument(std::string(what) + " must be >= 1");
    };
    positive(workers, "workers");
    positive(trials, "trials");
    positive(layers, "ansatz.layers");
    positive(gw_trials, "gw.trials");
    positive(noise.trajectories, "noise.trajectories");
    positive(noise.shots, "noise.shots");
    positive(noise.report_trajectories, "noise.report_trajectories");
    positive(equivalence.draws, "equivalence.draws");
    if (sample_shots < 0) throw InvalidArgument("sample_shots must be >= 0");
    if (output.empty()) throw InvalidArgument("output must not be empty");
    optimizer.validate();
    if (study_layers.empty()) throw InvalidArgument("layer_study.layers must not be empty");
    for (int L : study_layers) positive(L, "layer_study.layers entries");
    for (int L : equivalence.layers) positive(L, "equivalence.layers entries");
    if (equivalence.n_min < 2 || equivalence.n_max < equivalence.n_min)
      throw InvalidArgument("equivalence needs 2 <= n_min <= n_max");
    if (dataset.n_min > dataset.n_max) throw InvalidArgument("dataset.n_min exceeds n_max");
    const bool noisy = experiment == ExperimentKind::kLccVsFullNoisy ||
                       experiment == ExperimentKind::kSameDeviceNoisy;
    if (noisy) {
      for (const auto& b : {backend_lcc, backend_full}) {
        const auto p = resolve_path(b, base_dir);
        if (!std::filesystem::exists(p)) throw IoError("backend file not found: " + p);
      }
    }
    if (experiment != ExperimentKind::kEquivalenceCheck && dataset.table == "custom") {
      if (dataset.instances.empty())
        throw InvalidArgument("custom dataset lists no instances");
      for (const auto& s : dataset.instances)
        if (!s.file.empty() && !std::filesystem::exists(resolve_path(s.file, base_dir)))
          throw IoError("instance file not found: " + resolve_path(s.file, base_dir));
    }
  }
};

namespace detail {

inline void check_keys(const YAML::Node& n, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  if (!n.IsMap()) throw ParseError("config: '" + where + "' must be a mapping");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!ok.count(key))
      throw ParseError("config: unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const YAML::Node& parent, const char* key, const std::string& where, T& out) {
  const auto n = parent[key];
  if (!n || n.IsNull()) return;
  try {
    out = n.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError("config: bad value for " + where + key + " (line " +
                     std::to_string(n.Mark().line + 1) + ")");
  }
}

/// Deep merge: scalars and sequences in `over` replace those in `base`.
inline YAML::Node merged(const YAML::Node& base, const YAML::Node& over) {
  if (!base.IsMap() || !over.IsMap()) return YAML::Clone(over);
  YAML::Node out = YAML::Clone(base);
  for (const auto& kv : over) {
    const auto key = kv.first.as<std::string>();
    out[key] = out[key] ? merged(out[key], kv.second) : YAML::Clone(kv.second);
  }
  return out;
}

inline InstanceSpec parse_instance(const YAML::Node& n, std::size_t k) {
  const std::string where = "dataset.instances[" + std::to_string(k) + "]";
  check_keys(n, where, {"generator", "n", "p", "d", "seed", "file"});
  InstanceSpec s;
  if (n["file"]) {
    s.file = n["file"].as<std::string>();
    s.kind = GeneratorKind::kCustom;
    return s;
  }
  std::string gen;
  read(n, "generator", where + ".", gen);
  if (gen == "er" || gen == "gnp") s.kind = GeneratorKind::kGnp;
  else if (gen == "reg" || gen == "regular") s.kind = GeneratorKind::kRegular;
  else throw ParseError("config: " + where + ".generator must be er or reg");
  read(n, "n", where + ".", s.n);
  read(n, "p", where + ".", s.p);
  read(n, "d", where + ".", s.degree);
  read(n, "seed", where + ".", s.seed);
  if (s.n < 1) throw ParseError("config: " + where + ".n must be >= 1");
  return s;
}

}  // namespace detail

/// Builds a config from YAML, applying scales.<scale> on top when present.
inline ExperimentConfig parse_config(const YAML::Node& doc, const std::string& scale = "",
                                     const std::string& base_dir = {}) {
  using detail::check_keys;
  using detail::read;
  YAML::Node root = doc;
  if (!root || !root.IsMap()) throw ParseError("config: top level must be a mapping");
  if (!scale.empty()) {
    const auto scales = root["scales"];
    if (!scales || !scales[scale])
      throw InvalidArgument("config has no scale '" + scale + "'");
    root = detail::merged(root, scales[scale]);
  }
  check_keys(root, "top level",
             {"experiment", "seed", "workers", "output", "trials", "sample_shots",
              "dataset", "ansatz", "optimizer", "noise", "backends", "layer_study", "gw",
              "equivalence", "scales"});
  ExperimentConfig c;
  c.base_dir = base_dir;
  if (!root["experiment"]) throw ParseError("config: missing key 'experiment'");
  try {
    c.experiment = parse_experiment(root["experiment"].as<std::string>());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  read(root, "seed", "", c.seed);
  read(root, "workers", "", c.workers);
  read(root, "output", "", c.output);
  read(root, "trials", "", c.trials);
  read(root, "sample_shots", "", c.sample_shots);

  if (const auto d = root["dataset"]) {
    check_keys(d, "dataset", {"table", "n_min", "n_max", "seeds_per_row", "instances"});
    read(d, "table", "dataset.", c.dataset.table);
    read(d, "n_min", "dataset.", c.dataset.n_min);
    read(d, "n_max", "dataset.", c.dataset.n_max);
    read(d, "seeds_per_row", "dataset.", c.dataset.seeds_per_row);
    if (const auto list = d["instances"]) {
      if (!list.IsSequence()) throw ParseError("config: dataset.instances must be a list");
      for (std::size_t k = 0; k < list.size(); ++k)
        c.dataset.instances.push_back(detail::parse_instance(list[k], k));
    }
  }
  if (const auto a = root["ansatz"]) {
    check_keys(a, "ansatz", {"layers", "entanglement"});
    read(a, "layers", "ansatz.", c.layers);
    std::string ent = to_string(c.entanglement);
    read(a, "entanglement", "ansatz.", ent);
    c.entanglement = parse_entanglement(ent);
  }
  if (const auto o = root["optimizer"]) {
    check_keys(o, "optimizer", {"method", "max_evals", "initial_step", "tolerance"});
    std::string m = to_string(c.optimizer.method);
    read(o, "method", "optimizer.", m);
    c.optimizer.method = parse_method(m);
    if (const auto me = o["max_evals"]; me && !me.IsNull() && me.as<std::string>() != "auto") {
      int v = 0;
      read(o, "max_evals", "optimizer.", v);
      c.optimizer.max_evals = v;
    }
    read(o, "initial_step", "optimizer.", c.optimizer.initial_step);
    read(o, "tolerance", "optimizer.", c.optimizer.tolerance);
  }
  if (const auto n = root["noise"]) {
    check_keys(n, "noise",
               {"trajectories", "shots", "report_trajectories", "placement", "analytic_readout"});
    read(n, "trajectories", "noise.", c.noise.trajectories);
    read(n, "shots", "noise.", c.noise.shots);
    read(n, "report_trajectories", "noise.", c.noise.report_trajectories);
    std::string p = to_string(c.noise.placement);
    read(n, "placement", "noise.", p);
    c.noise.placement = parse_placement(p);
    read(n, "analytic_readout", "noise.", c.noise.analytic_readout);
  }
  if (const auto b = root["backends"]) {
    check_keys(b, "backends", {"lcc", "full"});
    read(b, "lcc", "backends.", c.backend_lcc);
    read(b, "full", "backends.", c.backend_full);
  }
  if (const auto l = root["layer_study"]) {
    check_keys(l, "layer_study", {"layers", "threshold"});
    read(l, "layers", "layer_study.", c.study_layers);
    read(l, "threshold", "layer_study.", c.threshold);
  }
  if (const auto g = root["gw"]) {
    check_keys(g, "gw", {"trials"});
    read(g, "trials", "gw.", c.gw_trials);
  }
  if (const auto e = root["equivalence"]) {
    check_keys(e, "equivalence",
               {"n_min", "n_max", "layers", "draws", "entanglements", "tolerance"});
    read(e, "n_min", "equivalence.", c.equivalence.n_min);
    read(e, "n_max", "equivalence.", c.equivalence.n_max);
    read(e, "layers", "equivalence.", c.equivalence.layers);
    read(e, "draws", "equivalence.", c.equivalence.draws);
    read(e, "tolerance", "equivalence.", c.equivalence.tolerance);
    if (const auto ents = e["entanglements"]) {
      std::vector<std::string> names;
      read(e, "entanglements", "equivalence.", names);
      c.equivalence.entanglements.clear();
      for (const auto& s : names) c.equivalence.entanglements.push_back(parse_entanglement(s));
    }
  }
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::string& scale = "",
                                          const std::string& base_dir = {}) {
  YAML::Node doc;
  try {
    doc = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return parse_config(doc, scale, base_dir);
}

inline ExperimentConfig load_config(const std::string& path, const std::string& scale = "") {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), scale,
                           std::filesystem::path(path).parent_path().string());
}

/// Every setting that influences results, one "key: value" per line.
/// Workers and output location are left out: they do not change results.
inline std::vector<std::string> config_lines(const ExperimentConfig& c) {
  std::vector<std::string> out;
  auto add = [&](const std::string& k, const auto& v) {
    std::ostringstream os;
    os.precision(17);
    os << k << ": " << v;
    out.push_back(os.str());
  };
  auto list = [](const auto& xs, auto fmt) {
    std::string s = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
    return s + "]";
  };
  auto num = [](auto x) { return std::to_string(x); };
  add("experiment", to_string(c.experiment));
  add("seed", c.seed);
  if (c.experiment == ExperimentKind::kEquivalenceCheck) {
    const auto& e = c.equivalence;
    add("equivalence.n_min", e.n_min);
    add("equivalence.n_max", e.n_max);
    add("equivalence.layers", list(e.layers, num));
    add("equivalence.draws", e.draws);
    add("equivalence.entanglements",
        list(e.entanglements, [](Entanglement x) { return to_string(x); }));
    add("equivalence.tolerance", e.tolerance);
    return out;
  }
  add("trials", c.trials);
  add("sample_shots", c.sample_shots);
  add("dataset.table", c.dataset.table);
  add("dataset.n_min", c.dataset.n_min);
  add("dataset.n_max", c.dataset.n_max == INT_MAX ? std::string("none") : num(c.dataset.n_max));
  add("dataset.seeds_per_row", c.dataset.seeds_per_row);
  for (std::size_t k = 0; k < c.dataset.instances.size(); ++k) {
    const auto& s = c.dataset.instances[k];
    std::ostringstream os;
    if (!s.file.empty()) os << "file=" << s.file;
    else
      os << "generator=" << to_string(s.kind) << " n=" << s.n << " p=" << s.p
         << " d=" << s.degree << " seed=" << s.seed;
    add("dataset.instances[" + std::to_string(k) + "]", os.str());
  }
  add("ansatz.layers", c.layers);
  add("ansatz.entanglement", to_string(c.entanglement));
  add("optimizer.method", to_string(c.optimizer.method));
  add("optimizer.max_evals",
      c.optimizer.max_evals ? num(*c.optimizer.max_evals) : std::string("auto"));
  add("optimizer.initial_step", c.optimizer.initial_step);
  add("optimizer.tolerance", c.optimizer.tolerance);
  if (c.experiment == ExperimentKind::kLccVsFullNoisy ||
      c.experiment == ExperimentKind::kSameDeviceNoisy) {
    add("noise.trajectories", c.noise.trajectories);
    add("noise.shots", c.noise.shots);
    add("noise.report_trajectories", c.noise.report_trajectories);
    add("noise.placement", to_string(c.noise.placement));
    add("noise.analytic_readout", c.noise.analytic_readout ? "true" : "false");
    if (c.experiment == ExperimentKind::kLccVsFullNoisy) add("backends.lcc", c.backend_lcc);
    add("backends.full", c.backend_full);
  }
  if (c.experiment == ExperimentKind::kLayerStudy) {
    add("layer_study.layers", list(c.study_layers, num));
    add("layer_study.threshold", c.threshold);
  }
  add("gw.trials", c.gw_trials);
  return out;
}

}  // namespace lccvqe
