#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "lccvqe/vqe.hpp"

using namespace lccvqe;
using Catch::Matchers::WithinAbs;

namespace {

double rosenbrock(const std::vector<double>& x) {
  return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
}

OptimizerConfig with(Method m, std::optional<int> evals = {}) {
  OptimizerConfig c;
  c.method = m;
  c.max_evals = evals;
  return c;
}

}  // namespace

TEST_CASE("one-dimensional quadratic", "[optimize]") {
  for (auto m : {Method::kCobyla, Method::kNelderMead}) {
    int calls = 0;
    auto f = [&](const std::vector<double>& x) {
      ++calls;
      return (x[0] - 3) * (x[0] - 3);
    };
    auto cfg = with(m);
    cfg.tolerance = 1e-6;
    const auto r = minimize(f, {0.0}, cfg);
    CHECK_THAT(r.x[0], WithinAbs(3.0, 1e-4));
    CHECK(r.evals == calls);
    CHECK_FALSE(r.budget_exhausted);
  }
}

TEST_CASE("Rosenbrock from the standard start", "[optimize]") {
  for (auto m : {Method::kCobyla, Method::kNelderMead}) {
    auto cfg = with(m, 2000);
    cfg.tolerance = 1e-8;
    const auto r = minimize(rosenbrock, {-1.2, 1.0}, cfg);
    INFO(to_string(m) << " f*=" << r.f << " evals=" << r.evals);
    // Linear models converge slowly along the curved valley.
    CHECK(r.f <= (m == Method::kCobyla ? 1e-2 : 1e-3));
    CHECK(r.evals <= 2000);
    CHECK(rosenbrock(r.x) == r.f);
  }
}

TEST_CASE("constant objective returns the start point", "[optimize]") {
  for (auto m : {Method::kCobyla, Method::kNelderMead}) {
    const auto r = minimize([](const std::vector<double>&) { return 7.0; },
                            {0.3, -2.0, 5.0}, with(m));
    CHECK(r.x == std::vector<double>{0.3, -2.0, 5.0});
    CHECK(r.f == 7.0);
  }
}

TEST_CASE("budget exhaustion returns best so far", "[optimize]") {
  for (auto m : {Method::kCobyla, Method::kNelderMead}) {
    int calls = 0;
    auto f = [&](const std::vector<double>& x) {
      ++calls;
      return rosenbrock(x);
    };
    const auto r = minimize(f, {-1.2, 1.0}, with(m, 25));
    CHECK(r.budget_exhausted);
    CHECK(r.evals == 25);
    CHECK(calls == 25);
    CHECK(r.f <= rosenbrock({-1.2, 1.0}));
  }
  CHECK_THROWS_AS(minimize(rosenbrock, {0, 0}, with(Method::kCobyla, 0)), InvalidArgument);
  OptimizerConfig bad;
  bad.tolerance = 0;
  CHECK_THROWS_AS(minimize(rosenbrock, {0, 0}, bad), InvalidArgument);
  CHECK_THROWS_AS(minimize(rosenbrock, {}, OptimizerConfig{}), InvalidArgument);
}

TEST_CASE("default evaluation budget", "[optimize]") {
  OptimizerConfig c;
  CHECK(c.budget(4) == 800);
  CHECK(c.budget(200) == 10000);
  c.max_evals = 5;
  CHECK(c.budget(200) == 5);
}

TEST_CASE("minimizers never worsen the start value", "[optimize][property]") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(12));
    std::vector<double> x0(d), c(d), w(d);
    for (int i = 0; i < d; ++i) {
      x0[i] = rng.uniform(-3, 3);
      c[i] = rng.uniform(-3, 3);
      w[i] = rng.uniform(0.1, 3);
    }
    // Multi-modal test function with many local minima.
    auto f = [&](const std::vector<double>& x) {
      double s = 0;
      for (int i = 0; i < d; ++i)
        s += w[i] * (x[i] - c[i]) * (x[i] - c[i]) + std::cos(3 * x[i]);
      return s;
    };
    const int budget = 50 + static_cast<int>(rng.below(300));
    for (auto m : {Method::kCobyla, Method::kNelderMead}) {
      const auto r = minimize(f, x0, with(m, budget));
      CHECK(r.f <= f(x0));
      CHECK(r.evals <= budget);
      CHECK(f(r.x) == r.f);
    }
  }
}

TEST_CASE("trust-region method handles many variables", "[optimize]") {
  const int d = 60;
  auto f = [&](const std::vector<double>& x) {
    double s = 0;
    for (int i = 0; i < d; ++i) s += (i % 5 + 1) * (x[i] - 0.1 * i) * (x[i] - 0.1 * i);
    return s;
  };
  auto cfg = with(Method::kCobyla);
  cfg.tolerance = 1e-5;
  const auto r = minimize(f, std::vector<double>(d, 0.0), cfg);
  CHECK(r.f < 1e-6);
}

TEST_CASE("approximation ratio", "[vqe]") {
  CHECK(approximation_ratio(4.0, 4) == 1.0);
  CHECK(approximation_ratio(0.0, 5) == 0.0);
  CHECK_THAT(approximation_ratio(3.3, 4), WithinAbs(0.825, 1e-15));
  CHECK_THROWS_AS(approximation_ratio(1.0, 0), InvalidArgument);
  CHECK_THROWS_AS(approximation_ratio(1.0, -2), InvalidArgument);
}

TEST_CASE("VQE solves the three-vertex path", "[vqe]") {
  const MaxCutInstance p3(3, {{0, 1}, {1, 2}});
  const AnsatzSpec spec{3, 1, Entanglement::kCircular};
  VqeOptions opt;
  opt.trials = 24;
  opt.seed = 1;
  opt.optimizer.tolerance = 1e-7;
  const auto r = vqe_run(p3, spec, EvaluatorKind::kNoiselessLcc, 2.0, opt);
  REQUIRE(r.trials.size() == 24);
  CHECK_THAT(r.best_trial().ar, WithinAbs(1.0, 1e-6));
  CHECK(r.best_trial().best_sampled_cut == 2);
  for (const auto& t : r.trials) {
    CHECK(t.ar <= 1.0 + 1e-9);
    CHECK(t.ar >= 0.0);
    CHECK(t.best_sampled_cut <= 2);
    CHECK(t.evals_used <= opt.optimizer.budget(6));
    CHECK_THAT(t.ar, WithinAbs(t.expectation / 2.0, 1e-15));
    CHECK_THAT(t.expectation, WithinAbs(t.objective, 1e-12));
    for (double x : t.theta_star.flat()) {
      CHECK(x >= 0);
      CHECK(x < 2 * std::numbers::pi);
    }
  }
  for (std::size_t t = 0; t < r.trials.size(); ++t)
    CHECK(r.trials[t].ar <= r.best_trial().ar);
}

TEST_CASE("VQE runs are deterministic", "[vqe]") {
  const auto g = gen_gnp(6, 0.5, 3);
  const AnsatzSpec spec{6, 1, Entanglement::kCircular};
  const double opt_value = max_cut_bruteforce(g).value;
  VqeOptions opt;
  opt.trials = 1;
  opt.seed = 42;
  opt.optimizer.max_evals = 300;
  const auto a = vqe_run(g, spec, EvaluatorKind::kNoiselessLcc, opt_value, opt);
  const auto b = vqe_run(g, spec, EvaluatorKind::kNoiselessLcc, opt_value, opt);
  CHECK(a.trials[0] == b.trials[0]);

  // Threads do not change results.
  opt.trials = 4;
  const auto serial = vqe_run(g, spec, EvaluatorKind::kNoiselessLcc, opt_value, opt);
  opt.workers = 3;
  const auto parallel = vqe_run(g, spec, EvaluatorKind::kNoiselessLcc, opt_value, opt);
  for (int t = 0; t < 4; ++t) CHECK(serial.trials[t] == parallel.trials[t]);

  // LCC and full evaluators start from the same point and reach the same
  // basin; rounding differences may shift the final iterate slightly.
  opt.workers = 1;
  opt.trials = 2;
  const auto full = vqe_run(g, spec, EvaluatorKind::kNoiselessFull, opt_value, opt);
  for (int t = 0; t < 2; ++t)
    CHECK_THAT(full.trials[t].ar, WithinAbs(serial.trials[t].ar, 1e-2));
}

TEST_CASE("noisy VQE uses common random numbers per trial", "[vqe][noise]") {
  const auto g = gen_gnp(5, 0.6, 1);
  const AnsatzSpec spec{5, 1, Entanglement::kCircular};
  const auto b7 = load_backend(std::string(LCCVQE_DATA_DIR) + "/backends/backend7.spec");
  NoisySimConfig noise{8, 32, 0, Placement::kBestPath, false};
  const Evaluator ev(g, spec, EvaluatorKind::kNoisyLcc, &b7, noise);
  const double opt_value = max_cut_bruteforce(g).value;
  VqeOptions opt;
  opt.trials = 2;
  opt.optimizer.max_evals = 60;
  const auto a = vqe_run(ev, opt_value, opt);
  const auto b = vqe_run(ev, opt_value, opt);
  for (int t = 0; t < 2; ++t) {
    CHECK(a.trials[t] == b.trials[t]);
    CHECK(a.trials[t].budget_exhausted);
    CHECK(a.trials[t].evals_used == 60);
    CHECK(a.trials[t].ar >= 0.0);
  }
  CHECK_THROWS_AS(Evaluator(g, spec, EvaluatorKind::kNoisyLcc), InvalidArgument);
}

TEST_CASE("layer study bookkeeping", "[vqe]") {
  const auto g = gen_gnp(6, 0.5, 2);
  const double opt_value = max_cut_bruteforce(g).value;
  VqeOptions opt;
  opt.trials = 3;
  opt.optimizer.max_evals = 100;
  opt.sample_shots = 0;
  const auto all = layer_study({{g, opt_value}}, {1, 2}, opt, 0.0);
  REQUIRE(all.size() == 2);
  for (const auto& row : all) {
    CHECK(row.total == 3);
    CHECK(row.percentage() == 100.0);
  }
  const auto none = layer_study({{g, opt_value}}, {1}, opt, 1.5);
  CHECK(none[0].hits == 0);
  CHECK(none[0].percentage() == 0.0);
  CHECK_THROWS_AS(layer_study({{g, opt_value}}, {1}, opt, 0.5, EvaluatorKind::kNoisyLcc),
                  InvalidArgument);
}
