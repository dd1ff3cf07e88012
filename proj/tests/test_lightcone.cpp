#include <catch_amalgamated.hpp>

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "lccvqe/lightcone.hpp"

using namespace lccvqe;
using Catch::Matchers::WithinAbs;

namespace {

MaxCutInstance complete(int n) {
  std::vector<Edge> e;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) e.emplace_back(a, b);
  return MaxCutInstance(n, e);
}

std::multiset<int> part_sizes(const std::vector<Subcircuit>& parts) {
  std::multiset<int> s;
  for (const auto& p : parts) s.insert(p.n_qubits());
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// <Z_i Z_j> on the unpruned n-qubit ansatz state.
double full_zz(const AnsatzSpec& spec, const ParameterMatrix& theta, Edge e) {
  const auto psi = run_circuit(build_ansatz(spec, theta));
  return expectation_pauli_z(psi, {e.first, e.second});
}

}  // namespace

TEST_CASE("cone sets on the ring", "[lightcone]") {
  const auto adj = cone_sets(3, 4, 10, 1);
  CHECK(adj.S[0] == std::vector<int>{3, 4});
  CHECK(adj.S[1] == std::vector<int>{2, 3, 4, 5});
  CHECK(adj.T[1] == std::vector<std::pair<int, int>>{{2, 3}, {3, 4}, {4, 5}});

  CHECK(cone_sets(3, 5, 10, 1).S[1].size() == 5);

  const auto apart = cone_sets(2, 7, 10, 1);
  CHECK(apart.S[1] == std::vector<int>{1, 2, 3, 6, 7, 8});

  // Wrap-around: qubit 0 neighbours qubit 9.
  CHECK(cone_sets(0, 5, 10, 1).S[1] == std::vector<int>{0, 1, 4, 5, 6, 9});
  // Linear entanglement does not wrap.
  CHECK(cone_sets(0, 5, 10, 1, Entanglement::kLinear).S[1] ==
        std::vector<int>{0, 1, 4, 5, 6});

  CHECK_THROWS_AS(cone_sets(3, 3, 10, 1), InvalidArgument);
  CHECK_THROWS_AS(cone_sets(3, 10, 10, 1), InvalidArgument);
  CHECK_THROWS_AS(cone_sets(0, 1, 10, 1, Entanglement::kFull), Unsupported);
}

TEST_CASE("cone sets grow monotonically with depth", "[lightcone][property]") {
  for (int n = 3; n <= 12; ++n)
    for (int L = 1; L <= 3; ++L)
      for (int j = 1; j < n; ++j) {
        const auto lc = cone_sets(0, j, n, L);
        for (int m = 0; m < L; ++m)
          CHECK(std::includes(lc.S[m + 1].begin(), lc.S[m + 1].end(),
                              lc.S[m].begin(), lc.S[m].end()));
      }
}

TEST_CASE("maximum subcircuit width", "[lightcone]") {
  CHECK(max_qubits(2, 1) == 5);
  CHECK(max_qubits(2, 2) == 9);
  CHECK(max_qubits(1, 1) == 3);
  CHECK_THROWS_AS(max_qubits(0, 1), InvalidArgument);
}

TEST_CASE("subcircuit shapes for one circular layer", "[lightcone]") {
  const AnsatzSpec spec{10, 1, Entanglement::kCircular};
  const auto g = complete(10);

  const auto adjacent = build_subcircuits(g, spec, {3, 4});
  REQUIRE(adjacent.size() == 1);
  CHECK(adjacent[0].n_qubits() == 4);
  CHECK(adjacent[0].circuit.count(GateKind::kCZ) == 3);
  CHECK(adjacent[0].circuit.count(GateKind::kRy) == 6);
  CHECK(adjacent[0].observables.size() == 2);

  const auto one_apart = build_subcircuits(g, spec, {3, 5});
  REQUIRE(one_apart.size() == 1);
  CHECK(one_apart[0].n_qubits() == 5);
  CHECK(one_apart[0].circuit.count(GateKind::kCZ) == 4);

  const auto far = build_subcircuits(g, spec, {2, 7});
  REQUIRE(far.size() == 2);
  CHECK(cone_qubit_count(spec, {2, 7}) == 6);
  for (const auto& p : far) {
    CHECK(p.n_qubits() == 3);
    CHECK(p.observables.size() == 1);
    CHECK(p.circuit.count(GateKind::kCZ) == 2);
  }
  CHECK(far[0].qubit_map[far[0].observables[0]] == 2);
  CHECK(far[1].qubit_map[far[1].observables[0]] == 7);

  // Three apart: union is contiguous but CZ(3,4) lies outside the cone.
  CHECK(part_sizes(build_subcircuits(g, spec, {2, 5})) == std::multiset<int>{3, 3});
}

TEST_CASE("six-ring antipodal edge", "[lightcone]") {
  const AnsatzSpec spec{6, 1, Entanglement::kCircular};
  const auto lc = cone_sets(0, 3, 6, 1);
  CHECK(lc.S[1].size() == 6);
  CHECK(cone_qubit_count(spec, {0, 3}) == 6);
  const auto parts = build_subcircuits(complete(6), spec, {0, 3});
  CHECK(part_sizes(parts) == std::multiset<int>{3, 3});
}

TEST_CASE("compact labels follow the entanglement chain", "[lightcone]") {
  const AnsatzSpec spec{10, 1, Entanglement::kCircular};
  const auto parts = build_subcircuits(complete(10), spec, {0, 1});
  REQUIRE(parts.size() == 1);
  for (const auto& g : parts[0].circuit.gates)
    if (g.kind == GateKind::kCZ) CHECK(std::abs(g.q0 - g.q1) == 1);
  const std::set<int> qubits(parts[0].qubit_map.begin(), parts[0].qubit_map.end());
  CHECK(qubits == std::set<int>{9, 0, 1, 2});
}

TEST_CASE("linear entanglement boundary cones", "[lightcone]") {
  const AnsatzSpec spec{8, 1, Entanglement::kLinear};
  const auto g = complete(8);
  CHECK(build_subcircuits(g, spec, {0, 1})[0].n_qubits() == 3);
  CHECK(part_sizes(build_subcircuits(g, spec, {0, 7})) == std::multiset<int>{2, 2});
  CHECK(build_subcircuits(g, spec, {3, 4})[0].n_qubits() == 4);
}

TEST_CASE("full entanglement is rejected", "[lightcone]") {
  const AnsatzSpec spec{5, 1, Entanglement::kFull};
  CHECK_THROWS_AS(build_subcircuits(complete(5), spec, {0, 1}), Unsupported);
  CHECK_THROWS_AS(LccEvaluator(complete(5), spec), Unsupported);
}

TEST_CASE("subcircuit expectations", "[lightcone]") {
  const AnsatzSpec spec{8, 1, Entanglement::kCircular};
  const auto g = complete(8);
  const auto zero = ParameterMatrix::zeros(spec);
  for (const auto& e : g.edges())
    CHECK_THAT(subcircuit_expectation(build_subcircuits(g, spec, e), zero),
               WithinAbs(1.0, 1e-14));

  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    const auto theta = ParameterMatrix::random(spec, rng);
    for (const auto& e : g.edges())
      CHECK_THAT(subcircuit_expectation(build_subcircuits(g, spec, e), theta),
                 WithinAbs(full_zz(spec, theta, e), 1e-10));
  }

  // A dangling coordinate must not be silently resolved.
  auto parts = build_subcircuits(g, spec, {0, 1});
  parts[0].circuit.gates[0].param = ParamCoord{8, 0};
  CHECK_THROWS_AS(subcircuit_expectation(parts, zero), ContractViolation);
}

TEST_CASE("LCC expectation equals the full-circuit expectation",
          "[lightcone][property]") {
  Rng rng(1234);
  const auto g10 = gen_gnp(10, 0.5, 0);
  const AnsatzSpec spec10{10, 1, Entanglement::kCircular};
  CHECK_THAT(lcc_expectation(g10, spec10, ParameterMatrix::zeros(spec10)),
             WithinAbs(0.0, 1e-12));
  for (int trial = 0; trial < 10; ++trial) {
    const auto theta = ParameterMatrix::random(spec10, rng);
    CHECK_THAT(lcc_expectation(g10, spec10, theta),
               WithinAbs(full_expectation(g10, spec10, theta), 1e-9));
  }

  for (int n = 4; n <= 9; ++n)
    for (int L = 1; L <= 3; ++L)
      for (auto ent : {Entanglement::kCircular, Entanglement::kLinear}) {
        const AnsatzSpec spec{n, L, ent};
        const auto g = complete(n);
        const LccEvaluator tight(g, spec);
        const LccEvaluator loose(g, spec, ConeForm::kLoose);
        for (int draw = 0; draw < 4; ++draw) {
          const auto theta = ParameterMatrix::random(spec, rng);
          const double full = full_expectation(g, spec, theta);
          CHECK_THAT(tight.expectation(theta), WithinAbs(full, 1e-9));
          CHECK_THAT(loose.expectation(theta), WithinAbs(full, 1e-9));
        }
      }
}

TEST_CASE("component width bound and one-layer taxonomy",
          "[lightcone][property]") {
  for (int n = 3; n <= 15; ++n)
    for (int L = 1; L <= 3; ++L)
      for (auto ent : {Entanglement::kCircular, Entanglement::kLinear}) {
        const AnsatzSpec spec{n, L, ent};
        const auto g = complete(n);
        for (const auto& e : g.edges())
          for (const auto& p : build_subcircuits(g, spec, e))
            CHECK(p.n_qubits() <= std::min(n, max_qubits(2, L)));
      }

  for (int n = 7; n <= 15; ++n) {
    const AnsatzSpec spec{n, 1, Entanglement::kCircular};
    const auto g = complete(n);
    for (const auto& e : g.edges()) {
      const int d = qubit_distance(e.first, e.second, n, Entanglement::kCircular);
      const auto sizes = part_sizes(build_subcircuits(g, spec, e));
      if (d == 1) CHECK(sizes == std::multiset<int>{4});
      else if (d == 2) CHECK(sizes == std::multiset<int>{5});
      else CHECK(sizes == std::multiset<int>{3, 3});
    }
  }
}

TEST_CASE("parameter coordinates stay inside theta", "[lightcone][property]") {
  for (int L = 1; L <= 3; ++L) {
    const auto g = gen_gnp(12, 0.5, static_cast<std::uint64_t>(L));
    const AnsatzSpec spec{12, L, Entanglement::kCircular};
    const LccEvaluator ev(g, spec);
    for (const auto& t : ev.terms()) {
      std::set<ParamCoord> seen;
      for (const auto& p : t.parts)
        for (const auto& gate : p.circuit.gates)
          if (gate.kind == GateKind::kRy) {
            REQUIRE(gate.param.has_value());
            CHECK(gate.param->qubit >= 0);
            CHECK(gate.param->qubit < 12);
            CHECK(gate.param->layer >= 0);
            CHECK(gate.param->layer <= L);
            CHECK(seen.insert(*gate.param).second);  // each used once
          }
    }
  }
}

TEST_CASE("build_subcircuits is deterministic", "[lightcone]") {
  const auto g = gen_regular(20, 3, 2);
  const AnsatzSpec spec{20, 2, Entanglement::kCircular};
  for (const auto& e : g.edges())
    CHECK(dump(build_subcircuits(g, spec, e), e) ==
          dump(build_subcircuits(g, spec, e), e));
}

TEST_CASE("golden subcircuit dumps", "[lightcone][golden]") {
  const AnsatzSpec spec{10, 1, Entanglement::kCircular};
  const auto g = complete(10);
  for (Edge e : {Edge{3, 4}, Edge{3, 5}, Edge{2, 7}}) {
    const auto name = std::string(LCCVQE_GOLDEN_DIR) + "/subcircuit_n10_L1_" +
                      std::to_string(e.first) + "_" + std::to_string(e.second) +
                      ".txt";
    CHECK(dump(build_subcircuits(g, spec, e), e) == read_file(name));
  }
}

TEST_CASE("hundred-vertex instance uses at most five qubits", "[lightcone]") {
  const auto g = gen_regular(100, 3, 0);
  const AnsatzSpec spec{100, 1, Entanglement::kCircular};
  const LccEvaluator ev(g, spec);
  CHECK(ev.max_component_qubits() <= 5);
  Rng rng(100);
  const auto theta = ParameterMatrix::random(spec, rng);
  const double e = ev.expectation(theta);
  CHECK(std::isfinite(e));
  CHECK(e >= 0.0);
  CHECK(e <= 150.0);
  CHECK(ev.widest_simulated() <= 5);
}

TEST_CASE("single-qubit marginals from their own cone", "[lightcone]") {
  const AnsatzSpec spec{7, 2, Entanglement::kCircular};
  Rng rng(5);
  const auto theta = ParameterMatrix::random(spec, rng);
  const auto psi = run_circuit(build_ansatz(spec, theta));
  for (int q = 0; q < 7; ++q)
    CHECK_THAT(single_z_expectation(spec, q, theta),
               WithinAbs(expectation_pauli_z(psi, {q}), 1e-12));
}
