#pragma once

// Experiment pipelines. Each dataset instance expands into jobs (one per
// evaluator and layer count, plus a GW job where relevant); a job runs all
// its trials and appends their rows to <output>.csv in one flush, so an
// interrupted run resumes by skipping jobs that are already complete.
//
// Instance seed: derive_seed(cfg.seed, fnv1a(instance id)), shared by every
// job of that instance, so LCC and full-circuit runs start each trial from
// the same parameters.
//
// Optimum: brute force for n <= 26, otherwise the best of gw.trials GW
// roundings (optimum_source = gw-best), in which case AR can exceed 1.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lccvqe/config.hpp"
#include "lccvqe/dataset.hpp"
#include "lccvqe/gw.hpp"
#include "lccvqe/lightcone.hpp"
#include "lccvqe/results.hpp"
#include "lccvqe/vqe.hpp"

namespace lccvqe {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kInvalidArgument: return "invalid-argument";
    case ErrorCategory::kSizeLimit: return "size-limit";
    case ErrorCategory::kCapacity: return "capacity";
    case ErrorCategory::kParse: return "parse";
    case ErrorCategory::kRetryExhausted: return "retry-exhausted";
    case ErrorCategory::kUnsupported: return "unsupported";
    case ErrorCategory::kContract: return "contract";
    case ErrorCategory::kIo: return "io";
  }
  return "error";
}

// ---------------------------------------------------------------------------
// Equivalence check

struct EquivalenceRow {
  int n = 0;
  int layers = 0;
  Entanglement entanglement = Entanglement::kCircular;
  int draws = 0;
  double max_abs_diff = 0.0;
};

inline MaxCutInstance complete_graph(int n) {
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) edges.emplace_back(u, v);
  return MaxCutInstance(n, std::move(edges));
}

/// |LCC - full| of the cost on complete graphs (every ring distance
/// appears), `draws` random parameter matrices per (n, L, entanglement).
inline std::vector<EquivalenceRow> run_equivalence(const EquivalenceSettings& e,
                                                   std::uint64_t seed) {
  std::vector<EquivalenceRow> rows;
  for (int n = e.n_min; n <= e.n_max; ++n) {
    const auto g = complete_graph(n);
    for (int L : e.layers)
      for (auto ent : e.entanglements) {
        const AnsatzSpec spec{n, L, ent};
        const LccEvaluator lcc(g, spec);
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(n),
                                   static_cast<std::uint64_t>(L),
                                   static_cast<std::uint64_t>(ent)}));
        EquivalenceRow row{n, L, ent, e.draws, 0.0};
        for (int k = 0; k < e.draws; ++k) {
          const auto theta = ParameterMatrix::random(spec, rng);
          const double d = std::abs(lcc.expectation(theta) - full_expectation(g, spec, theta));
          row.max_abs_diff = std::max(row.max_abs_diff, d);
        }
        rows.push_back(row);
      }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Dataset experiments

struct RunReport {
  std::string trials_path;
  std::string best_path;
  int jobs_run = 0;
  int jobs_skipped = 0;
  int error_rows = 0;
  std::optional<double> max_abs_diff;  // equivalence-check only
  bool passed = true;                  // equivalence-check: within tolerance
};

namespace detail {

struct Job {
  std::string mode;
  EvaluatorKind kind = EvaluatorKind::kNoiselessLcc;
  const BackendSpec* backend = nullptr;
  int layers = 0;
  bool gw = false;
};

inline ResultRow row_stub(const MaxCutInstance& g, const Job& j, Entanglement ent) {
  ResultRow r;
  r.instance = g.id();
  r.n = g.n();
  r.generator = to_string(g.meta().kind);
  if (g.meta().kind == GeneratorKind::kGnp) r.param = fmt_double(g.meta().p);
  if (g.meta().kind == GeneratorKind::kRegular) r.param = std::to_string(g.meta().degree);
  r.gen_seed = g.meta().seed;
  r.edges = static_cast<int>(g.num_edges());
  r.mode = j.mode;
  r.backend = j.backend ? j.backend->name : "";
  r.layers = j.layers;
  r.entanglement = j.gw ? "" : to_string(ent);
  return r;
}

inline void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

inline std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

inline std::vector<std::string> run_meta(const ExperimentConfig& cfg) {
  auto meta = config_lines(cfg);
  meta.push_back("run: workers=" + std::to_string(cfg.workers));
  return meta;
}

inline RunReport run_equivalence_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  RunReport rep;
  rep.trials_path = cfg.output + ".csv";
  ensure_parent(rep.trials_path);
  const auto rows = run_equivalence(cfg.equivalence, cfg.seed);
  auto out = open_out(rep.trials_path, std::ios::trunc);
  out << "# schema=" << kSchemaVersion << '\n';
  for (const auto& m : run_meta(cfg)) out << "# " << m << '\n';
  out << "n,layers,entanglement,draws,max_abs_diff\n";
  double worst = 0.0;
  for (const auto& r : rows) {
    out << r.n << ',' << r.layers << ',' << to_string(r.entanglement) << ',' << r.draws
        << ',' << fmt_double(r.max_abs_diff) << '\n';
    log << "n=" << r.n << " L=" << r.layers << " " << to_string(r.entanglement)
        << " draws=" << r.draws << " max_abs_diff=" << r.max_abs_diff << '\n';
    worst = std::max(worst, r.max_abs_diff);
  }
  rep.max_abs_diff = worst;
  rep.passed = worst <= cfg.equivalence.tolerance;
  log << "max_abs_diff=" << worst << " tolerance=" << cfg.equivalence.tolerance << " "
      << (rep.passed ? "PASS" : "FAIL") << '\n';
  return rep;
}

}  // namespace detail

inline RunReport run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.experiment == ExperimentKind::kEquivalenceCheck)
    return detail::run_equivalence_experiment(cfg, log);

  RunReport rep;
  rep.trials_path = cfg.output + ".csv";
  rep.best_path = cfg.output + ".best.csv";
  detail::ensure_parent(rep.trials_path);

  DatasetConfig ds = cfg.dataset;
  for (auto& s : ds.instances)
    if (!s.file.empty()) s.file = resolve_path(s.file, cfg.base_dir);
  const auto instances = build_dataset(ds);

  std::optional<BackendSpec> b_lcc, b_full;
  const bool noisy = cfg.experiment == ExperimentKind::kLccVsFullNoisy ||
                     cfg.experiment == ExperimentKind::kSameDeviceNoisy;
  if (noisy) {
    b_full = load_backend(resolve_path(cfg.backend_full, cfg.base_dir));
    b_lcc = cfg.experiment == ExperimentKind::kLccVsFullNoisy
                ? load_backend(resolve_path(cfg.backend_lcc, cfg.base_dir))
                : b_full;
  }

  std::vector<detail::Job> jobs;
  switch (cfg.experiment) {
    case ExperimentKind::kLccVsFullNoisy:
    case ExperimentKind::kSameDeviceNoisy:
      jobs.push_back({to_string(EvaluatorKind::kNoisyLcc), EvaluatorKind::kNoisyLcc,
                      &*b_lcc, cfg.layers, false});
      jobs.push_back({to_string(EvaluatorKind::kNoisyFull), EvaluatorKind::kNoisyFull,
                      &*b_full, cfg.layers, false});
      break;
    case ExperimentKind::kLayerStudy:
      for (int L : cfg.study_layers)
        jobs.push_back({to_string(EvaluatorKind::kNoiselessLcc), EvaluatorKind::kNoiselessLcc,
                        nullptr, L, false});
      break;
    case ExperimentKind::kGwComparison:
      jobs.push_back({to_string(EvaluatorKind::kNoiselessLcc), EvaluatorKind::kNoiselessLcc,
                      nullptr, cfg.layers, false});
      jobs.push_back({"gw", EvaluatorKind::kNoiselessLcc, nullptr, 0, true});
      break;
    case ExperimentKind::kEquivalenceCheck:
      break;
  }

  // Resume: keep complete jobs from an existing file written with the same
  // configuration.
  const auto meta = detail::run_meta(cfg);
  const auto fingerprint = config_lines(cfg);
  std::vector<ResultRow> kept;
  std::map<std::string, bool> done;
  if (std::filesystem::exists(rep.trials_path)) {
    auto table = read_results_file(rep.trials_path, true);
    std::vector<std::string> old;
    for (const auto& m : table.meta)
      if (m.rfind("run:", 0) != 0) old.push_back(m);
    if (old != fingerprint)
      throw InvalidArgument(rep.trials_path +
                            " was written with a different configuration; choose another "
                            "--out or remove the file");
    std::map<std::string, std::pair<int, bool>> count;  // ok rows, has error row
    for (const auto& r : table.rows) {
      auto& c = count[r.job_key()];
      if (r.ok()) ++c.first;
      else c.second = true;
    }
    for (const auto& [key, c] : count) {
      const bool gw = key.find("|gw|") != std::string::npos;
      done[key] = c.second || c.first == (gw ? cfg.gw_trials : cfg.trials);
    }
    bool dropped = table.truncated;
    for (auto& r : table.rows) {
      if (done[r.job_key()]) kept.push_back(std::move(r));
      else dropped = true;
    }
    if (dropped) {
      auto out = detail::open_out(rep.trials_path, std::ios::trunc);
      write_results_header(out, meta);
      for (const auto& r : kept) out << to_csv(r) << '\n';
    }
  } else {
    auto out = detail::open_out(rep.trials_path, std::ios::trunc);
    write_results_header(out, meta);
  }
  auto out = detail::open_out(rep.trials_path, std::ios::app);
  std::vector<ResultRow> all = kept;

  auto write_best = [&] {
    auto bout = detail::open_out(rep.best_path, std::ios::trunc);
    write_results_header(bout, meta);
    for (const auto& r : best_rows(all)) bout << to_csv(r) << '\n';
  };

  for (const auto& g : instances) {
    const auto iseed = derive_seed(cfg.seed, fnv1a(g.id()));
    std::optional<std::pair<double, std::string>> optimum;
    auto get_optimum = [&] {
      if (!optimum) {
        if (g.n() <= kBruteForceCap)
          optimum = {static_cast<double>(max_cut_bruteforce(g).value), "exact"};
        else
          optimum = {static_cast<double>(
                         gw_solve(g, cfg.gw_trials, derive_seed(iseed, 0x6777)).best_cut),
                     "gw-best"};
      }
      return *optimum;
    };
    for (const auto& job : jobs) {
      const auto stub = detail::row_stub(g, job, cfg.entanglement);
      if (done.count(stub.job_key()) && done[stub.job_key()]) {
        ++rep.jobs_skipped;
        continue;
      }
      const auto start = std::chrono::steady_clock::now();
      std::vector<ResultRow> rows;
      try {
        if (g.num_edges() == 0) throw InvalidArgument("instance has no edges");
        const auto [opt_value, opt_source] = get_optimum();
        if (job.gw) {
          const auto res = gw_solve(g, cfg.gw_trials, derive_seed(iseed, 0x6777));
          for (int t = 0; t < res.trials; ++t) {
            auto r = stub;
            r.trial = t;
            r.expectation = res.cuts[t];
            r.optimum = opt_value;
            r.optimum_source = opt_source;
            r.ar = approximation_ratio(r.expectation, opt_value);
            r.best_sampled_cut = res.cuts[t];
            rows.push_back(r);
          }
        } else {
          const AnsatzSpec spec{g.n(), job.layers, cfg.entanglement};
          VqeOptions opt;
          opt.trials = cfg.trials;
          opt.seed = iseed;
          opt.optimizer = cfg.optimizer;
          opt.sample_shots = static_cast<std::size_t>(cfg.sample_shots);
          opt.workers = cfg.workers;
          const Evaluator ev(g, spec, job.kind, job.backend, cfg.noise.optimize_config());
          std::optional<Evaluator> report;
          if (is_noisy(job.kind))
            report.emplace(g, spec, job.kind, job.backend, cfg.noise.report_config());
          const auto res = vqe_run(ev, opt_value, opt, report ? &*report : nullptr);
          for (const auto& t : res.trials) {
            auto r = stub;
            r.trial = t.trial;
            r.ar = t.ar;
            r.expectation = t.expectation;
            r.optimum = opt_value;
            r.optimum_source = opt_source;
            r.best_sampled_cut = t.best_sampled_cut;
            r.evals = t.evals_used;
            r.budget_exhausted = t.budget_exhausted;
            r.routing_fallback = ev.routing_fallback();
            r.max_qubits = ev.max_circuit_qubits();
            r.wall_seconds = t.wall_seconds;
            rows.push_back(r);
          }
        }
      } catch (const Error& e) {
        auto r = stub;
        r.trial = -1;
        r.status = "error:" + category_name(e.category()) + ": " + e.what();
        rows = {r};
        ++rep.error_rows;
      }
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      for (const auto& r : rows) out << to_csv(r) << '\n';
      out.flush();
      if (!out) throw IoError("write failed on " + rep.trials_path);
      all.insert(all.end(), rows.begin(), rows.end());
      ++rep.jobs_run;
      const auto best = best_rows(rows).front();
      log << g.id() << " " << stub.group() << ": ";
      if (best.ok()) log << "best_ar=" << best.ar;
      else log << best.status;
      if (best.routing_fallback) log << " routing=fallback";
      log << " (" << secs << " s)" << std::endl;
    }
    write_best();
  }
  write_best();
  return rep;
}

}  // namespace lccvqe
