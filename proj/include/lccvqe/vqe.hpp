#pragma once

// VQE driver: random restarts, minimisation of -E(theta), and reporting.
//
// Seeds per trial t of a run with seed s:
//   trial    = derive_seed(s, t)
//   theta0   from Rng(derive_seed(trial, 0)), uniform in [0, 2pi)
//   noisy objective seed derive_seed(trial, 1), fixed for the whole trial
//   report   seed derive_seed(trial, 2)
//   sampling seed derive_seed(trial, 3)

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "lccvqe/ansatz.hpp"
#include "lccvqe/error.hpp"
#include "lccvqe/graph.hpp"
#include "lccvqe/lightcone.hpp"
#include "lccvqe/noise.hpp"
#include "lccvqe/optimize.hpp"
#include "lccvqe/rng.hpp"

namespace lccvqe {

enum class EvaluatorKind { kNoiselessLcc, kNoiselessFull, kNoisyLcc, kNoisyFull };

inline std::string to_string(EvaluatorKind k) {
  switch (k) {
    case EvaluatorKind::kNoiselessLcc: return "noiseless-lcc";
    case EvaluatorKind::kNoiselessFull: return "noiseless-full";
    case EvaluatorKind::kNoisyLcc: return "noisy-lcc";
    case EvaluatorKind::kNoisyFull: return "noisy-full";
  }
  return "?";
}

inline EvaluatorKind parse_evaluator(const std::string& s) {
  for (auto k : {EvaluatorKind::kNoiselessLcc, EvaluatorKind::kNoiselessFull,
                 EvaluatorKind::kNoisyLcc, EvaluatorKind::kNoisyFull})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown evaluator '" + s + "'");
}

inline bool is_noisy(EvaluatorKind k) {
  return k == EvaluatorKind::kNoisyLcc || k == EvaluatorKind::kNoisyFull;
}

inline bool uses_lcc(EvaluatorKind k) {
  return k == EvaluatorKind::kNoiselessLcc || k == EvaluatorKind::kNoisyLcc;
}

/// E(theta) for one (graph, ansatz) pair in one of the four modes.
class Evaluator {
 public:
  Evaluator(const MaxCutInstance& g, const AnsatzSpec& spec, EvaluatorKind kind,
            const BackendSpec* backend = nullptr, NoisySimConfig noise = {})
      : kind_(kind), graph_(g), spec_(spec) {
    spec.validate();
    if (is_noisy(kind) && !backend)
      throw InvalidArgument("noisy evaluator needs a backend");
    switch (kind) {
      case EvaluatorKind::kNoiselessLcc:
        impl_ = std::make_shared<LccEvaluator>(g, spec);
        break;
      case EvaluatorKind::kNoiselessFull:
        check_dense(g, spec);
        break;
      case EvaluatorKind::kNoisyLcc:
        impl_ = std::make_shared<NoisyLccEvaluator>(g, spec, *backend, noise);
        backend_name_ = backend->name;
        break;
      case EvaluatorKind::kNoisyFull:
        impl_ = std::make_shared<NoisyFullEvaluator>(g, spec, *backend, noise);
        backend_name_ = backend->name;
        break;
    }
  }

  EvaluatorKind kind() const noexcept { return kind_; }
  const AnsatzSpec& spec() const noexcept { return spec_; }
  const MaxCutInstance& graph() const noexcept { return graph_; }
  const std::string& backend_name() const noexcept { return backend_name_; }

  /// `seed` only matters for noisy modes.
  double operator()(const ParameterMatrix& theta, std::uint64_t seed = 0) const {
    return std::visit(
        [&](const auto& p) -> double {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, std::monostate>)
            return full_expectation(graph_, spec_, theta);
          else if constexpr (std::is_same_v<T, std::shared_ptr<LccEvaluator>>)
            return p->expectation(theta);
          else
            return p->expectation(theta, seed);
        },
        impl_);
  }

  bool routing_fallback() const {
    if (auto* p = std::get_if<std::shared_ptr<NoisyLccEvaluator>>(&impl_))
      return (*p)->routing_fallback();
    if (auto* p = std::get_if<std::shared_ptr<NoisyFullEvaluator>>(&impl_))
      return (*p)->routing_fallback();
    return false;
  }

  /// Widest simulated circuit (structural).
  int max_circuit_qubits() const {
    return std::visit(
        [&](const auto& p) -> int {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, std::monostate>)
            return spec_.n;
          else if constexpr (std::is_same_v<T, std::shared_ptr<LccEvaluator>>)
            return p->max_component_qubits();
          else
            return p->max_circuit_qubits();
        },
        impl_);
  }

  /// Widest state actually simulated so far (noiseless LCC only; else the
  /// structural width).
  int widest_simulated() const {
    if (auto* p = std::get_if<std::shared_ptr<LccEvaluator>>(&impl_))
      return (*p)->widest_simulated();
    return max_circuit_qubits();
  }

 private:
  EvaluatorKind kind_;
  MaxCutInstance graph_;
  AnsatzSpec spec_;
  std::string backend_name_;
  std::variant<std::monostate, std::shared_ptr<LccEvaluator>,
               std::shared_ptr<NoisyLccEvaluator>,
               std::shared_ptr<NoisyFullEvaluator>>
      impl_;
};

inline double approximation_ratio(double expectation, double optimum) {
  if (!(optimum > 0))
    throw InvalidArgument("approximation ratio needs a positive optimum");
  return expectation / optimum;
}

struct TrialResult {
  int trial = 0;
  ParameterMatrix theta_star;
  double expectation = 0.0;  // reported E(theta*)
  double objective = 0.0;    // best E seen by the optimizer
  double ar = 0.0;
  int evals_used = 0;
  bool budget_exhausted = false;
  int best_sampled_cut = 0;
  double wall_seconds = 0.0;

  bool operator==(const TrialResult& o) const {
    return trial == o.trial && theta_star == o.theta_star &&
           expectation == o.expectation && objective == o.objective &&
           ar == o.ar && evals_used == o.evals_used &&
           budget_exhausted == o.budget_exhausted &&
           best_sampled_cut == o.best_sampled_cut;
  }
};

struct VqeOptions {
  int trials = 24;
  std::uint64_t seed = 0;
  OptimizerConfig optimizer;
  /// Shots for the best sampled cut (drawn from the noiseless state).
  std::size_t sample_shots = 1024;
  int workers = 1;
};

struct VqeResult {
  std::vector<TrialResult> trials;
  std::size_t best = 0;
  const TrialResult& best_trial() const { return trials.at(best); }
};

/// Best cut among bitstrings drawn from the noiseless state at theta. Above
/// the dense limit each qubit is rounded by the sign of its own <Z>.
inline int best_sampled_cut(const MaxCutInstance& g, const AnsatzSpec& spec,
                            const ParameterMatrix& theta, std::size_t shots,
                            std::uint64_t seed) {
  if (g.n() <= kMaxDenseQubits) {
    int best = 0;
    for (const auto& a : sample_bitstrings(g, spec, theta, shots, seed))
      best = std::max(best, cut_value(g, a));
    return best;
  }
  Assignment a(static_cast<std::size_t>(g.n()));
  for (int q = 0; q < g.n(); ++q) a[q] = single_z_expectation(spec, q, theta) < 0.0;
  return cut_value(g, a);
}

/// One VQE trial. `report` re-evaluates theta* (e.g. a higher-fidelity noisy
/// evaluator); by default the optimisation evaluator is reused with the
/// report seed.
inline TrialResult vqe_trial(const Evaluator& ev, double optimum, int trial,
                             const VqeOptions& opt,
                             const Evaluator* report = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  const auto& spec = ev.spec();
  const auto tseed = derive_seed(opt.seed, static_cast<std::uint64_t>(trial));
  Rng rng(derive_seed(tseed, 0));
  const auto theta0 = ParameterMatrix::random(spec, rng);
  const auto objective_seed = derive_seed(tseed, 1);
  const int rows = spec.n, cols = spec.layers + 1;

  const Objective f = [&](const std::vector<double>& x) {
    return -ev(ParameterMatrix(rows, cols, x), objective_seed);
  };
  const auto flat = theta0.flat();
  const auto r = minimize(f, {flat.begin(), flat.end()}, opt.optimizer);

  TrialResult out;
  out.trial = trial;
  out.theta_star = ParameterMatrix(rows, cols, r.x).canonical();
  out.objective = -r.f;
  out.evals_used = r.evals;
  out.budget_exhausted = r.budget_exhausted;
  const auto& rep = report ? *report : ev;
  out.expectation = is_noisy(rep.kind()) ? rep(out.theta_star, derive_seed(tseed, 2))
                                         : rep(out.theta_star);
  out.ar = approximation_ratio(out.expectation, optimum);
  if (opt.sample_shots > 0)
    out.best_sampled_cut = best_sampled_cut(ev.graph(), spec, out.theta_star,
                                            opt.sample_shots, derive_seed(tseed, 3));
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

/// Runs opt.trials independent trials (optionally on worker threads) and
/// picks the highest-AR trial, lowest index on ties.
inline VqeResult vqe_run(const Evaluator& ev, double optimum, const VqeOptions& opt,
                         const Evaluator* report = nullptr) {
  if (opt.trials < 1) throw InvalidArgument("trials must be >= 1");
  approximation_ratio(0.0, optimum);  // validates the optimum
  VqeResult res;
  res.trials.resize(static_cast<std::size_t>(opt.trials));
  const int workers = std::max(1, std::min(opt.workers, opt.trials));
  if (workers == 1) {
    for (int t = 0; t < opt.trials; ++t) res.trials[t] = vqe_trial(ev, optimum, t, opt, report);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (int t = next++; t < opt.trials; t = next++)
            res.trials[t] = vqe_trial(ev, optimum, t, opt, report);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (std::size_t t = 1; t < res.trials.size(); ++t)
    if (res.trials[t].ar > res.trials[res.best].ar) res.best = t;
  return res;
}

inline VqeResult vqe_run(const MaxCutInstance& g, const AnsatzSpec& spec,
                         EvaluatorKind kind, double optimum, const VqeOptions& opt,
                         const BackendSpec* backend = nullptr,
                         const NoisySimConfig& noise = {}) {
  const Evaluator ev(g, spec, kind, backend, noise);
  return vqe_run(ev, optimum, opt);
}

struct LayerRow {
  int layers = 0;
  int hits = 0;
  int total = 0;
  double percentage() const { return total ? 100.0 * hits / total : 0.0; }
};

struct LayerStudyInstance {
  MaxCutInstance graph;
  double optimum = 0.0;
};

/// Share of trials reaching AR >= threshold for each layer count, pooled
/// over instances.
inline std::vector<LayerRow> layer_study(
    const std::vector<LayerStudyInstance>& instances,
    const std::vector<int>& layer_list, VqeOptions opt, double threshold = 0.99,
    EvaluatorKind kind = EvaluatorKind::kNoiselessLcc,
    Entanglement ent = Entanglement::kCircular) {
  if (is_noisy(kind)) throw InvalidArgument("layer study uses noiseless evaluators");
  std::vector<LayerRow> rows;
  const auto base = opt.seed;
  for (int L : layer_list) {
    LayerRow row{L, 0, 0};
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const auto& inst = instances[i];
      opt.seed = derive_seed(base, {static_cast<std::uint64_t>(L), i});
      const auto r = vqe_run(inst.graph, AnsatzSpec{inst.graph.n(), L, ent}, kind,
                             inst.optimum, opt);
      for (const auto& t : r.trials) {
        ++row.total;
        row.hits += t.ar >= threshold;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace lccvqe
