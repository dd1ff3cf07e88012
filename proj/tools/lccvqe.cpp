// lccvqe command-line driver.
//
//   lccvqe gen --table noisy-tableI --out instances/
//   lccvqe run --config configs/same-device-noisy.yaml --scale desk
//   lccvqe check-equivalence --n-max 12 --layers 1,2,3
//   lccvqe summarize results/same-device-noisy.csv
//
// Exit codes: 0 success, 2 usage error, otherwise the failure category
// (3 invalid argument, 4 size limit, 5 capacity, 6 parse, 7 retry
// exhausted, 8 unsupported, 9 contract / failed check, 10 I/O).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lccvqe/lccvqe.hpp"

using namespace lccvqe;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::string scale;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Master seed (overrides the config)");
  cmd->add_option("--workers", o.workers, "Worker threads for trials")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "Output path");
  cmd->add_option("--scale", o.scale, "Config preset to apply")
      ->check(CLI::IsMember({"desk", "full"}));
}

ExperimentConfig config_from(const std::string& path, const Overrides& o) {
  std::string scale = o.scale;
  if (scale.empty()) {
    // Presets with a scales section default to the desk variant.
    std::ifstream probe(path);
    if (!probe) throw IoError("cannot read config " + path);
    std::string text((std::istreambuf_iterator<char>(probe)), {});
    if (YAML::Load(text)["scales"]["desk"]) scale = "desk";
  }
  auto cfg = load_config(path, scale);
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (!o.out.empty()) cfg.output = o.out;
  return cfg;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw InvalidArgument("bad integer '" + tok + "' in list '" + s + "'");
    }
  }
  return out;
}

int cmd_gen(const std::string& table, const std::string& config, const std::string& gnp,
            const std::string& regular, const Overrides& o) {
  DatasetConfig ds;
  if (!config.empty()) {
    ds = config_from(config, o).dataset;
  } else if (!table.empty()) {
    ds.table = table;
  } else if (!gnp.empty() || !regular.empty()) {
    const auto spec = gnp.empty() ? regular : gnp;
    const auto comma = spec.find(',');
    if (comma == std::string::npos)
      throw InvalidArgument("expected 'n,p' or 'n,d', got '" + spec + "'");
    InstanceSpec s;
    s.n = std::stoi(spec.substr(0, comma));
    s.seed = o.seed.value_or(0);
    if (!gnp.empty()) {
      s.kind = GeneratorKind::kGnp;
      s.p = std::stod(spec.substr(comma + 1));
    } else {
      s.kind = GeneratorKind::kRegular;
      s.degree = std::stoi(spec.substr(comma + 1));
    }
    ds.instances = {s};
  } else {
    throw InvalidArgument("gen needs --table, --config, --gnp or --regular");
  }
  const auto dir = o.out.empty() ? std::string("instances") : o.out;
  const auto paths = write_dataset(build_dataset(ds), dir);
  for (const auto& p : paths) std::cout << p << '\n';
  std::cout << paths.size() << " instance(s) written to " << dir << '\n';
  return 0;
}

int cmd_run(const std::string& config, const Overrides& o) {
  const auto cfg = config_from(config, o);
  std::cout << "# experiment=" << to_string(cfg.experiment) << '\n';
  for (const auto& line : config_lines(cfg)) std::cout << "# " << line << '\n';
  const auto rep = run_experiment(cfg, std::cout);
  std::cout << "wrote " << rep.trials_path;
  if (!rep.best_path.empty()) std::cout << " and " << rep.best_path;
  std::cout << " (jobs run " << rep.jobs_run << ", resumed " << rep.jobs_skipped
            << ", error rows " << rep.error_rows << ")\n";
  if (!rep.passed) return static_cast<int>(ErrorCategory::kContract);
  return 0;
}

int cmd_equivalence(int n_min, int n_max, const std::string& layers, int draws,
                    const Overrides& o) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::kEquivalenceCheck;
  cfg.seed = o.seed.value_or(0);
  cfg.equivalence.n_min = n_min;
  cfg.equivalence.n_max = n_max;
  cfg.equivalence.layers = parse_int_list(layers);
  cfg.equivalence.draws = draws;
  cfg.output = o.out.empty() ? std::string("results/equivalence") : o.out;
  const auto rep = run_experiment(cfg, std::cout);
  return rep.passed ? 0 : static_cast<int>(ErrorCategory::kContract);
}

int cmd_summarize(const std::string& csv, const std::string& plot, double threshold) {
  const auto table = read_results_file(csv);
  const auto s = summarize_rows(table.rows, threshold);
  print_summary(s, std::cout, threshold);
  std::string path = plot;
  if (path.empty()) {
    auto p = std::filesystem::path(csv);
    path = (p.parent_path() / (p.stem().string() + ".plot.csv")).string();
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_plot_data(s, out);
  std::cout << "plot data: " << path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-cone-cut VQE for Max-Cut: experiments and tools"};
  app.require_subcommand(1);

  Overrides og, orun, oeq;
  auto* gen = app.add_subcommand("gen", "Write dataset instances as edge lists");
  std::string table, gen_config, gnp, regular;
  gen->add_option("--table", table, "noisy-tableI or noiseless-tableII");
  gen->add_option("--config", gen_config, "Use the dataset section of a config");
  gen->add_option("--gnp", gnp, "Single G(n,p) instance: n,p");
  gen->add_option("--regular", regular, "Single d-regular instance: n,d");
  add_common(gen, og);

  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  std::string run_config;
  run->add_option("--config", run_config, "Experiment config (YAML)")->required();
  add_common(run, orun);

  auto* eq = app.add_subcommand("check-equivalence",
                                "Compare light-cone and full-circuit costs");
  int n_min = 4, n_max = 12, draws = 100;
  std::string layers = "1,2,3";
  eq->add_option("--n-min", n_min, "Smallest n")->capture_default_str();
  eq->add_option("--n-max", n_max, "Largest n")->capture_default_str();
  eq->add_option("--layers", layers, "Comma-separated layer counts")->capture_default_str();
  eq->add_option("--draws", draws, "Random parameter draws per case")->capture_default_str();
  add_common(eq, oeq);

  auto* sum = app.add_subcommand("summarize", "Statistics of a results CSV");
  std::string csv, plot;
  double threshold = 0.99;
  sum->add_option("csv", csv, "Per-trial results CSV")->required();
  sum->add_option("--out", plot, "Plot-data output (default <csv stem>.plot.csv)");
  sum->add_option("--threshold", threshold, "AR threshold for hit rates")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen(table, gen_config, gnp, regular, og);
    if (*run) return cmd_run(run_config, orun);
    if (*eq) return cmd_equivalence(n_min, n_max, layers, draws, oeq);
    if (*sum) return cmd_summarize(csv, plot, threshold);
  } catch (const Error& e) {
    std::cerr << "error [" << category_name(e.category()) << "]: " << e.what() << '\n';
    return static_cast<int>(e.category());
  } catch (const YAML::Exception& e) {
    std::cerr << "error [parse]: " << e.what() << '\n';
    return static_cast<int>(ErrorCategory::kParse);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
