#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "lccvqe/noise.hpp"

using namespace lccvqe;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kPi = std::numbers::pi;

std::string backend_path(const std::string& name) {
  return std::string(LCCVQE_DATA_DIR) + "/backends/" + name;
}

MaxCutInstance complete(int n) {
  std::vector<Edge> e;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) e.emplace_back(a, b);
  return MaxCutInstance(n, e);
}

// Standard error of a mean of T trajectories x S shots of +-1 outcomes whose
// per-trajectory mean is itself +-1 (a Z eigenstate) with probability q of the
// flipped value: trajectory-level variance only.
double eigenstate_sigma(double mean, int trajectories) {
  return std::sqrt((1.0 - mean * mean) / trajectories);
}

const char* kMinimal = R"(
name: tiny
n_qubits: 2
couplings:
  - {pair: [0, 1], cnot_error: 0.01}
qubits:
  - {id: 0, frequency: 5.0, t1: 100.0, t2: 90.0, readout_error: 0.02, sq_error: 0.001}
  - {id: 1, frequency: 5.1, t1: 80.0, t2: 70.0, readout_error: 0.03, sq_error: 0.002}
)";

}  // namespace

TEST_CASE("bundled seven-qubit backend", "[noise][backend]") {
  const auto b = load_backend(backend_path("backend7.spec"));
  CHECK(b.name == "backend7");
  CHECK(b.n_qubits == 7);
  const std::vector<std::pair<Edge, double>> cnot{
      {{0, 1}, 1.83e-2}, {{1, 2}, 1.62e-2}, {{1, 3}, 7.49e-3},
      {{3, 5}, 1.26e-2}, {{4, 5}, 1.31e-2}, {{5, 6}, 8.70e-3}};
  REQUIRE(b.cnot_error.size() == cnot.size());
  for (auto [e, p] : cnot) CHECK(b.cnot_error.at(e) == p);

  const double readout[] = {1.97e-2, 1.44e-2, 1.78e-2, 1.56e-2,
                            1.54e-2, 1.74e-2, 3.26e-2};
  const double sq[] = {3.51e-4, 8.98e-4, 3.62e-4, 2.61e-4,
                       5.43e-4, 4.81e-4, 4.63e-4};
  const double t1[] = {102.88, 111.41, 78.93, 88.06, 98.93, 83.95, 65.59};
  const double t2[] = {53.56, 109.47, 132.42, 77.27, 39.94, 122.30, 63.50};
  const double freq[] = {4.82, 4.76, 4.91, 4.88, 4.87, 4.96, 5.18};
  for (int q = 0; q < 7; ++q) {
    CHECK(b.readout_error[q] == readout[q]);
    CHECK(b.sq_error[q] == sq[q]);
    CHECK(b.t1[q] == t1[q]);
    CHECK(b.t2[q] == t2[q]);
    CHECK(b.frequency[q] == freq[q]);
  }
  CHECK_NOTHROW(b.validate());
}

TEST_CASE("bundled twenty-seven-qubit backend", "[noise][backend]") {
  const auto b = load_backend(backend_path("backend27.spec"));
  CHECK(b.n_qubits == 27);
  CHECK(b.couplings.size() == 28);
  CHECK(b.sq_error[3] == 1.83e-3);
  CHECK(b.readout_error[0] == 2.49e-2);
  CHECK(b.readout_error[5] == 2.11e-1);
  CHECK(b.readout_error[15] == 1.03e-1);
  CHECK(b.readout_error[26] == 6.90e-3);
  CHECK(b.sq_error[17] == 2.26e-3);
  CHECK(b.t1[12] == 17.98);
  CHECK(b.t2[13] == 151.39);
  CHECK(b.cnot_error.at({2, 3}) == 6.52e-2);
  CHECK(b.cnot_error.at({17, 18}) == 2.92e-2);
  CHECK(b.cnot_error.at({25, 26}) == 8.01e-3);
  CHECK_FALSE(b.coupled(0, 2));
  // Heavy-hex degrees never exceed three.
  for (const auto& a : b.adjacency()) CHECK(a.size() <= 3);
}

TEST_CASE("backend parse errors name the field", "[noise][backend]") {
  CHECK(parse_backend(kMinimal).cnot_error.at({0, 1}) == 0.01);

  auto broken = [](const std::string& from, const std::string& to) {
    std::string s = kMinimal;
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  CHECK_THROWS_WITH(parse_backend(broken("sq_error: 0.002", "sq_err: 0.002")),
                    ContainsSubstring("sq_error"));
  CHECK_THROWS_WITH(parse_backend(broken("readout_error: 0.02", "readout_error: 2")),
                    ContainsSubstring("readout_error"));
  CHECK_THROWS_WITH(parse_backend(broken("pair: [0, 1]", "pair: [0, 5]")),
                    ContainsSubstring("pair"));
  CHECK_THROWS_WITH(parse_backend(broken("cnot_error: 0.01", "cnot_error: x")),
                    ContainsSubstring("cnot_error"));
  CHECK_THROWS_WITH(parse_backend(broken("{id: 1,", "{id: 0,")),
                    ContainsSubstring("id"));
  CHECK_THROWS_WITH(parse_backend(broken("name: tiny\n", "")),
                    ContainsSubstring("name"));
  CHECK_THROWS_AS(parse_backend("[1, 2"), ParseError);
  CHECK_THROWS_AS(load_backend("/nonexistent/backend.spec"), IoError);
}

TEST_CASE("basis decomposition", "[noise][transpile]") {
  Rng rng(20);
  for (int k = 0; k < 20; ++k) {
    const double theta = rng.uniform(0.0, 2 * kPi);
    const Circuit c{1, {Gate::ry(0, theta)}};
    const auto basis = basis_decompose(c);
    REQUIRE(basis.gates.size() == 5);
    for (const auto& g : basis.gates) CHECK(is_basis_gate(g.kind));
    CHECK_THAT(expectation_pauli_z(run_circuit(basis), {0}),
               WithinAbs(expectation_pauli_z(run_circuit(c), {0}), 1e-12));
  }

  const Circuit rz{2, {Gate::rz(0, 0.3), Gate::rz(1, -1.0)}};
  CHECK(basis_decompose(rz).gates == rz.gates);

  // CZ becomes H-conjugated CNOT with H expanded: 3 + 1 + 3 gates.
  CHECK(basis_decompose(Circuit{2, {Gate::cz(0, 1)}}).gates.size() == 7);
}

TEST_CASE("transpiled ansatz keeps every expectation", "[noise][transpile][property]") {
  Rng rng(4);
  for (int n = 2; n <= 7; ++n)
    for (int L = 1; L <= 2; ++L) {
      const AnsatzSpec spec{n, L, Entanglement::kCircular};
      const auto theta = ParameterMatrix::random(spec, rng);
      const auto c = build_ansatz(spec, theta);
      const auto b = basis_decompose(c);
      const auto psi = run_circuit(c), phi = run_circuit(b);
      // Equal up to global phase.
      Complex overlap = 0.0;
      for (std::size_t x = 0; x < psi.dim(); ++x) overlap += std::conj(psi[x]) * phi[x];
      CHECK_THAT(std::abs(overlap), WithinAbs(1.0, 1e-10));
      for (int a = 0; a < n; ++a) {
        CHECK_THAT(expectation_pauli_z(phi, {a}),
                   WithinAbs(expectation_pauli_z(psi, {a}), 1e-10));
        for (int q = a + 1; q < n; ++q)
          CHECK_THAT(expectation_pauli_z(phi, {a, q}),
                     WithinAbs(expectation_pauli_z(psi, {a, q}), 1e-10));
      }
    }
}

TEST_CASE("parameter re-binding of transpiled circuits", "[noise][transpile]") {
  const AnsatzSpec spec{4, 1, Entanglement::kCircular};
  Rng rng(8);
  const auto b = uniform_backend(4, 0.0, 0.0, 0.0);
  auto nc = transpile(build_ansatz(spec, ParameterMatrix::zeros(spec)), b);
  CHECK(nc.bindings.size() == 8);
  const auto theta = ParameterMatrix::random(spec, rng);
  nc.bind(theta);
  const auto psi = run_circuit(build_ansatz(spec, theta));
  const auto phi = run_circuit(nc.circuit);
  for (int a = 0; a < 4; ++a)
    CHECK_THAT(expectation_pauli_z(phi, {a, (a + 1) % 4}),
               WithinAbs(expectation_pauli_z(psi, {a, (a + 1) % 4}), 1e-10));
}

TEST_CASE("placement on the coupling map", "[noise][transpile]") {
  const auto b7 = load_backend(backend_path("backend7.spec"));
  const AnsatzSpec spec{10, 1, Entanglement::kCircular};
  const auto parts = build_subcircuits(complete(10), spec, {3, 4});
  REQUIRE(parts.size() == 1);
  const auto& sub = parts[0];
  REQUIRE(sub.n_qubits() == 4);

  const auto on_path = transpile_with_layout(sub.circuit, b7, {0, 1, 3, 5});
  CHECK_FALSE(on_path.routing_fallback);

  for (auto strategy : {Placement::kBestPath, Placement::kFirstPath}) {
    const auto nc = transpile(sub.circuit, b7, strategy, sub.observables);
    CHECK_FALSE(nc.routing_fallback);
    for (int k = 0; k + 1 < 4; ++k) CHECK(b7.coupled(nc.layout[k], nc.layout[k + 1]));
  }

  // Best path never costs more than the hand-picked one.
  const auto usage = detail::usage_of(basis_decompose(sub.circuit), sub.observables);
  const auto best = place(basis_decompose(sub.circuit), b7, Placement::kBestPath,
                          sub.observables);
  CHECK(detail::layout_cost(usage, b7, best) <=
        detail::layout_cost(usage, b7, {0, 1, 3, 5}) + 1e-15);

  // The seven-qubit map has no six-vertex path: greedy placement, fallback.
  const AnsatzSpec six{6, 1, Entanglement::kLinear};
  const auto wide = transpile(build_ansatz(six, ParameterMatrix::zeros(six)), b7);
  CHECK(wide.routing_fallback);

  const AnsatzSpec eight{8, 1, Entanglement::kLinear};
  CHECK_THROWS_AS(transpile(build_ansatz(eight, ParameterMatrix::zeros(eight)), b7),
                  CapacityError);
  CHECK_THROWS_AS(transpile_with_layout(Circuit{2, {}}, b7, {0, 0}), InvalidArgument);
}

TEST_CASE("error rates attached to basis gates", "[noise][transpile]") {
  const auto b = parse_backend(kMinimal);
  const auto nc = transpile_with_layout(
      Circuit{2, {Gate::rz(0, 1.0), Gate::sx(1), Gate::x(0), Gate::cnot(1, 0)}}, b,
      {0, 1});
  CHECK(nc.error == std::vector<double>{0.0, 0.002, 0.001, 0.01});
  CHECK(nc.readout == std::vector<double>{0.02, 0.03});

  const auto swapped = transpile_with_layout(Circuit{2, {Gate::sx(0)}}, b, {1, 0});
  CHECK(swapped.error == std::vector<double>{0.002});

  auto three = uniform_backend(3, 0.01, 0.0, 0.0);
  three.cnot_error[{1, 2}] = 0.03;
  const auto far = transpile_with_layout(Circuit{3, {Gate::cnot(0, 2)}}, three, {0, 1, 2});
  CHECK(far.routing_fallback);
  CHECK_THAT(far.error[0], WithinAbs(0.02, 1e-15));  // device mean
}

TEST_CASE("untranspiled circuits are rejected", "[noise]") {
  NoisyCircuit nc;
  nc.circuit = Circuit{1, {Gate::ry(0, 0.5)}};
  nc.error = {0.0};
  nc.readout = {0.0};
  CHECK_THROWS_AS(noisy_expectation(nc, {0}, NoisySimConfig{}), ContractViolation);
  NoisySimConfig bad;
  bad.shots = 0;
  const auto ok = transpile(Circuit{1, {}}, uniform_backend(1, 0, 0, 0));
  CHECK_THROWS_AS(noisy_expectation(ok, {0}, bad), InvalidArgument);
}

TEST_CASE("zero-error channels reproduce ideal expectations", "[noise][statistics]") {
  const auto b = uniform_backend(5, 0.0, 0.0, 0.0);
  const AnsatzSpec spec{5, 2, Entanglement::kCircular};
  Rng rng(12);
  const auto theta = ParameterMatrix::random(spec, rng);
  const auto circuit = build_ansatz(spec, theta);
  const auto nc = transpile(circuit, b);
  const auto psi = run_circuit(circuit);
  NoisySimConfig cfg;
  cfg.seed = 5;
  const std::vector<std::vector<int>> z{{0}, {0, 1}, {2, 4}, {1, 2, 3}};
  const auto est = noisy_expectations(nc, z, cfg);
  const double samples = double(cfg.trajectories) * cfg.shots;
  for (std::size_t s = 0; s < z.size(); ++s) {
    const double ideal = expectation_pauli_z(psi, z[s]);
    const double sigma = std::sqrt((1 - ideal * ideal) / samples);
    CHECK(std::abs(est[s] - ideal) <= 3 * sigma + 1e-12);
  }
  cfg.analytic_readout = true;
  const auto exact = noisy_expectations(nc, z, cfg);
  for (std::size_t s = 0; s < z.size(); ++s)
    CHECK_THAT(exact[s], WithinAbs(expectation_pauli_z(psi, z[s]), 1e-12));
}

TEST_CASE("readout and depolarizing analytics", "[noise][statistics]") {
  NoisySimConfig cfg;  // 256 trajectories x 1024 shots
  cfg.seed = 77;
  const double samples = double(cfg.trajectories) * cfg.shots;

  for (double eps : {0.01, 0.05, 0.2}) {
    const auto nc = transpile(Circuit{1, {}}, uniform_backend(1, 0.0, 0.0, eps));
    const double expect = 1 - 2 * eps;
    const double sigma = std::sqrt((1 - expect * expect) / samples);
    CHECK(std::abs(noisy_expectation(nc, {0}, cfg) - expect) <= 3 * sigma);
  }

  // X then depolarizing(p): <Z> = -(1 - p). Trajectory states are Z
  // eigenstates, so many trajectories with few shots each sharpen the test.
  NoisySimConfig many = cfg;
  many.trajectories = 1 << 16;
  many.shots = 4;
  for (double p : {0.02, 0.1, 0.4}) {
    const auto nc = transpile(Circuit{1, {Gate::x(0)}}, uniform_backend(1, 0.0, p, 0.0));
    const double expect = -(1 - p);
    CHECK(std::abs(noisy_expectation(nc, {0}, cfg) - expect) <=
          3 * eigenstate_sigma(expect, cfg.trajectories));
    CHECK(std::abs(noisy_expectation(nc, {0}, many) - expect) <=
          3 * eigenstate_sigma(expect, many.trajectories));
  }

  // Two-qubit depolarizing after CNOT on |00>: each marginal contracts by 1 - p,
  // the parity Z0 Z1 too (8 of the 15 Paulis anticommute with it).
  const double p = 0.2;
  const auto cx = transpile(Circuit{2, {Gate::cnot(0, 1)}}, uniform_backend(2, p, 0.0, 0.0));
  const auto z = noisy_expectations(cx, {{0}, {1}, {0, 1}}, many);
  for (double v : z) CHECK(std::abs(v - (1 - p)) <= 3 * eigenstate_sigma(1 - p, many.trajectories));
}

TEST_CASE("noisy estimates are deterministic per seed", "[noise]") {
  const auto b7 = load_backend(backend_path("backend7.spec"));
  const auto g = gen_gnp(8, 0.5, 2);
  const AnsatzSpec spec{8, 1, Entanglement::kCircular};
  Rng rng(1);
  const auto theta = ParameterMatrix::random(spec, rng);
  NoisySimConfig cfg{32, 64, 9, Placement::kBestPath, false};
  const NoisyLccEvaluator ev(g, spec, b7, cfg);
  CHECK(ev.expectation(theta) == ev.expectation(theta));
  CHECK(ev.expectation(theta) == noisy_lcc_expectation(g, spec, theta, b7, cfg));
  CHECK(ev.expectation(theta, 1) != ev.expectation(theta, 2));
}

TEST_CASE("noisy cost with and without light cone cancellation", "[noise]") {
  const auto g = gen_gnp(8, 0.5, 6);
  const AnsatzSpec spec{8, 1, Entanglement::kCircular};
  Rng rng(3);
  const auto theta = ParameterMatrix::random(spec, rng);
  const double ideal = full_expectation(g, spec, theta);
  const double m = static_cast<double>(g.num_edges());

  const auto clean = uniform_backend(8, 0.0, 0.0, 0.0);
  NoisySimConfig cfg;
  cfg.trajectories = 8;
  cfg.shots = 4096;
  // Each correlator has sd <= 1/sqrt(S); the cost is half their sum.
  const double bound = 3 * 0.5 * m / std::sqrt(double(cfg.trajectories) * cfg.shots);
  CHECK(std::abs(noisy_lcc_expectation(g, spec, theta, clean, cfg) - ideal) <= bound);
  CHECK(std::abs(noisy_full_expectation(g, spec, theta, clean, cfg) - ideal) <= bound);
  cfg.analytic_readout = true;
  CHECK_THAT(noisy_lcc_expectation(g, spec, theta, clean, cfg), WithinAbs(ideal, 1e-10));
  CHECK_THAT(noisy_full_expectation(g, spec, theta, clean, cfg), WithinAbs(ideal, 1e-10));

  const auto b27 = load_backend(backend_path("backend27.spec"));
  const NoisyFullEvaluator full(g, spec, b27, cfg);
  const NoisyLccEvaluator lcc(g, spec, b27, cfg);
  CHECK(full.routing_fallback());  // the ring does not embed in heavy-hex
  CHECK_FALSE(lcc.routing_fallback());
  for (double v : {full.expectation(theta), lcc.expectation(theta)}) {
    CHECK(v >= 0.0);
    CHECK(v <= m);
  }

  const auto b7 = load_backend(backend_path("backend7.spec"));
  CHECK_THROWS_AS(NoisyFullEvaluator(g, spec, b7, cfg), CapacityError);
  const auto big = gen_gnp(16, 0.3, 1);
  CHECK_THROWS_AS(NoisyFullEvaluator(big, AnsatzSpec{16, 1}, b27, cfg), SizeLimitError);
}

TEST_CASE("stronger noise lowers the cost at a good point", "[noise][property]") {
  // Basis encoding of the optimum cut: the noiseless cost equals the optimum.
  const auto g = gen_gnp(9, 0.5, 4);
  const AnsatzSpec spec{9, 1, Entanglement::kCircular};
  const auto opt = max_cut_bruteforce(g);
  ParameterMatrix theta(9, 2);
  for (int q = 0; q < 9; ++q) theta(q, 0) = opt.witness[q] ? kPi : 0.0;
  const auto b7 = load_backend(backend_path("backend7.spec"));
  NoisySimConfig cfg{256, 16, 3, Placement::kBestPath, true};
  double prev = static_cast<double>(opt.value);
  for (double scale : {1.0, 3.0, 9.0}) {
    const double e = NoisyLccEvaluator(g, spec, scaled(b7, scale), cfg).expectation(theta);
    // Tolerance: 3 sd of a sum of |E| trajectory averages of +-1 variables.
    const double slack = 3 * 0.5 * g.num_edges() / std::sqrt(256.0);
    CHECK(e <= prev + slack);
    CHECK(e < opt.value);
    prev = e;
  }
}

TEST_CASE("hundred-vertex instance on the seven-qubit device", "[noise]") {
  const auto g = gen_regular(100, 3, 1);
  const AnsatzSpec spec{100, 1, Entanglement::kCircular};
  const auto b7 = load_backend(backend_path("backend7.spec"));
  const NoisyLccEvaluator ev(g, spec, b7, NoisySimConfig{4, 32, 0, Placement::kBestPath, false});
  CHECK(ev.max_circuit_qubits() <= 5);
  CHECK_FALSE(ev.routing_fallback());
  Rng rng(0);
  const double e = ev.expectation(ParameterMatrix::random(spec, rng));
  CHECK(e >= 0.0);
  CHECK(e <= 150.0);
}
