#pragma once

// Device noise descriptions and a Monte-Carlo trajectory simulator.
//
// Channel model. A gate with tabulated error p is followed by a depolarizing
// channel with parameter p, rho -> (1 - p) rho + p I/d, unravelled by
// inserting a uniformly random non-identity Pauli with probability
// p (d^2 - 1) / d^2. Rz is error free; X and SX use the qubit's single-qubit
// error; CNOT uses the coupling's error, or the device mean when the pair is
// not coupled. Measured bits flip independently with the qubit's readout
// error. T1, T2 and frequency are carried along but not simulated.
//
// Backend files are YAML:
//
//   name: backend7
//   n_qubits: 7
//   couplings:
//     - {pair: [0, 1], cnot_error: 1.83e-2}
//   qubits:
//     - {id: 0, frequency: 4.82, t1: 102.88, t2: 53.56,
//        readout_error: 1.97e-2, sq_error: 3.51e-4}

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lccvqe/ansatz.hpp"
#include "lccvqe/error.hpp"
#include "lccvqe/graph.hpp"
#include "lccvqe/lightcone.hpp"
#include "lccvqe/rng.hpp"
#include "lccvqe/statevec.hpp"

namespace lccvqe {

struct BackendSpec {
  std::string name;
  int n_qubits = 0;
  std::vector<Edge> couplings;            // u < v, file order
  std::map<Edge, double> cnot_error;
  std::vector<double> sq_error;           // X and SX
  std::vector<double> readout_error;
  std::vector<double> t1, t2, frequency;  // reference only

  bool coupled(int a, int b) const {
    return cnot_error.contains(Edge{std::min(a, b), std::max(a, b)});
  }

  double mean_cnot_error() const {
    if (cnot_error.empty()) return 0.0;
    double s = 0.0;
    for (const auto& [e, p] : cnot_error) s += p;
    return s / static_cast<double>(cnot_error.size());
  }

  /// Error charged to a CNOT on (a, b); uncoupled pairs get the mean.
  double cnot_error_for(int a, int b) const {
    auto it = cnot_error.find(Edge{std::min(a, b), std::max(a, b)});
    return it == cnot_error.end() ? mean_cnot_error() : it->second;
  }

  std::vector<std::vector<int>> adjacency() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_qubits));
    for (auto [u, v] : couplings) {
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
  }

  void validate() const {
    auto prob = [&](double p, const std::string& what) {
      if (!(p >= 0.0 && p <= 1.0))
        throw InvalidArgument("backend " + name + ": " + what +
                              " is not a probability");
    };
    if (n_qubits < 1) throw InvalidArgument("backend " + name + ": no qubits");
    const auto n = static_cast<std::size_t>(n_qubits);
    if (sq_error.size() != n || readout_error.size() != n)
      throw InvalidArgument("backend " + name + ": per-qubit tables incomplete");
    for (int q = 0; q < n_qubits; ++q) {
      prob(sq_error[q], "sq_error[" + std::to_string(q) + "]");
      prob(readout_error[q], "readout_error[" + std::to_string(q) + "]");
    }
    for (auto [u, v] : couplings) {
      if (u < 0 || v >= n_qubits || u >= v)
        throw InvalidArgument("backend " + name + ": bad coupling");
      if (!cnot_error.contains(Edge{u, v}))
        throw InvalidArgument("backend " + name + ": coupling without error");
    }
    for (const auto& [e, p] : cnot_error) prob(p, "cnot_error");
  }
};

/// Backend with the same error on every qubit and coupling; couplings
/// default to a line 0-1-...-(n-1).
inline BackendSpec uniform_backend(int n, double cnot, double sq,
                                   double readout,
                                   std::vector<Edge> couplings = {}) {
  BackendSpec b;
  b.name = "uniform";
  b.n_qubits = n;
  if (couplings.empty())
    for (int q = 0; q + 1 < n; ++q) couplings.emplace_back(q, q + 1);
  for (auto [u, v] : couplings) {
    const Edge e{std::min(u, v), std::max(u, v)};
    b.couplings.push_back(e);
    b.cnot_error[e] = cnot;
  }
  const auto un = static_cast<std::size_t>(n);
  b.sq_error.assign(un, sq);
  b.readout_error.assign(un, readout);
  b.t1.assign(un, 0.0);
  b.t2.assign(un, 0.0);
  b.frequency.assign(un, 0.0);
  b.validate();
  return b;
}

/// Every error rate multiplied by `factor` (clamped to 1).
inline BackendSpec scaled(BackendSpec b, double factor) {
  if (factor < 0) throw InvalidArgument("scale factor must be non-negative");
  auto s = [&](double p) { return std::min(1.0, p * factor); };
  for (auto& [e, p] : b.cnot_error) p = s(p);
  for (auto& p : b.sq_error) p = s(p);
  for (auto& p : b.readout_error) p = s(p);
  return b;
}

namespace detail {

template <class T>
T field(const YAML::Node& node, const std::string& key,
        const std::string& where) {
  const auto v = node[key];
  if (!v) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw ParseError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

inline BackendSpec parse_backend(const std::string& text,
                                 const std::string& source = "<string>") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  if (!root.IsMap()) throw ParseError(source + ": expected a mapping");
  BackendSpec b;
  b.name = detail::field<std::string>(root, "name", source);
  b.n_qubits = detail::field<int>(root, "n_qubits", source);
  if (b.n_qubits < 1 || b.n_qubits > 1024)
    throw ParseError(source + ": field 'n_qubits' out of range");
  const auto n = static_cast<std::size_t>(b.n_qubits);

  const auto couplings = root["couplings"];
  if (!couplings || !couplings.IsSequence())
    throw ParseError(source + ": missing field 'couplings'");
  for (std::size_t k = 0; k < couplings.size(); ++k) {
    const auto where = source + ": couplings[" + std::to_string(k) + "]";
    const auto pair = detail::field<std::vector<int>>(couplings[k], "pair", where);
    if (pair.size() != 2 || pair[0] == pair[1] || pair[0] < 0 || pair[1] < 0 ||
        pair[0] >= b.n_qubits || pair[1] >= b.n_qubits)
      throw ParseError(where + ": field 'pair' is not a valid qubit pair");
    const Edge e{std::min(pair[0], pair[1]), std::max(pair[0], pair[1])};
    if (b.cnot_error.contains(e))
      throw ParseError(where + ": field 'pair' repeats a coupling");
    const double p = detail::field<double>(couplings[k], "cnot_error", where);
    if (!(p >= 0 && p <= 1))
      throw ParseError(where + ": field 'cnot_error' is not a probability");
    b.couplings.push_back(e);
    b.cnot_error[e] = p;
  }

  const auto qubits = root["qubits"];
  if (!qubits || !qubits.IsSequence())
    throw ParseError(source + ": missing field 'qubits'");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (auto* v : {&b.sq_error, &b.readout_error, &b.t1, &b.t2, &b.frequency})
    v->assign(n, nan);
  std::vector<char> seen(n, 0);
  for (std::size_t k = 0; k < qubits.size(); ++k) {
    const auto where = source + ": qubits[" + std::to_string(k) + "]";
    const int id = detail::field<int>(qubits[k], "id", where);
    if (id < 0 || id >= b.n_qubits || seen[id])
      throw ParseError(where + ": field 'id' is out of range or repeated");
    seen[id] = 1;
    b.frequency[id] = detail::field<double>(qubits[k], "frequency", where);
    b.t1[id] = detail::field<double>(qubits[k], "t1", where);
    b.t2[id] = detail::field<double>(qubits[k], "t2", where);
    for (auto [key, vec] : {std::pair{"readout_error", &b.readout_error},
                            std::pair{"sq_error", &b.sq_error}}) {
      const double p = detail::field<double>(qubits[k], key, where);
      if (!(p >= 0 && p <= 1))
        throw ParseError(where + ": field '" + key + "' is not a probability");
      (*vec)[id] = p;
    }
  }
  for (std::size_t q = 0; q < n; ++q)
    if (!seen[q])
      throw ParseError(source + ": field 'qubits' has no entry for qubit " +
                       std::to_string(q));
  return b;
}

inline BackendSpec load_backend(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open backend file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_backend(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Transpilation

enum class Placement { kBestPath, kFirstPath, kGreedy };

inline std::string to_string(Placement p) {
  switch (p) {
    case Placement::kBestPath: return "best-path";
    case Placement::kFirstPath: return "first-path";
    case Placement::kGreedy: return "greedy";
  }
  return "?";
}

inline Placement parse_placement(const std::string& s) {
  if (s == "best-path") return Placement::kBestPath;
  if (s == "first-path") return Placement::kFirstPath;
  if (s == "greedy") return Placement::kGreedy;
  throw InvalidArgument("unknown placement '" + s + "'");
}

/// Re-binding record: gate `gate` gets angle theta(coord) + offset.
struct Binding {
  std::size_t gate = 0;
  ParamCoord coord;
  double offset = 0.0;
  bool operator==(const Binding&) const = default;
};

struct NoisyCircuit {
  Circuit circuit;              // basis gates over logical qubits
  std::vector<double> error;    // depolarizing parameter after each gate
  std::vector<double> readout;  // per logical qubit
  std::vector<int> layout;      // logical -> physical
  bool routing_fallback = false;
  std::vector<Binding> bindings;

  int n_qubits() const { return circuit.n_qubits; }

  void bind(const ParameterMatrix& theta) {
    for (const auto& b : bindings)
      circuit.gates[b.gate].angle = theta.at(b.coord) + b.offset;
  }
};

inline bool is_basis_gate(GateKind k) {
  return k == GateKind::kRz || k == GateKind::kX || k == GateKind::kSqrtX ||
         k == GateKind::kCNOT;
}

/// Rewrites a circuit into {Rz, SX, X, CNOT}:
///   Ry(t)    -> Rz(0) SX Rz(t + pi) SX Rz(pi)
///   H        -> Rz(pi/2) SX Rz(pi/2)
///   CZ(a, b) -> H_b CNOT(a, b) H_b
/// Parameterised Ry gates leave a Binding on their middle Rz.
inline Circuit basis_decompose(const Circuit& c,
                               std::vector<Binding>* bindings = nullptr) {
  validate_circuit(c);
  constexpr double pi = std::numbers::pi;
  Circuit out{c.n_qubits, {}};
  auto hadamard = [&](int q) {
    out.gates.push_back(Gate::rz(q, pi / 2));
    out.gates.push_back(Gate::sx(q));
    out.gates.push_back(Gate::rz(q, pi / 2));
  };
  for (const auto& g : c.gates) {
    switch (g.kind) {
      case GateKind::kRy:
        out.gates.push_back(Gate::rz(g.q0, 0.0));
        out.gates.push_back(Gate::sx(g.q0));
        if (g.param && bindings)
          bindings->push_back({out.gates.size(), *g.param, pi});
        out.gates.push_back(Gate::rz(g.q0, g.angle + pi));
        out.gates.push_back(Gate::sx(g.q0));
        out.gates.push_back(Gate::rz(g.q0, pi));
        break;
      case GateKind::kH: hadamard(g.q0); break;
      case GateKind::kCZ:
        hadamard(g.q1);
        out.gates.push_back(Gate::cnot(g.q0, g.q1));
        hadamard(g.q1);
        break;
      default: out.gates.push_back(g); break;
    }
  }
  return out;
}

namespace detail {

struct Usage {
  std::vector<int> one_qubit;            // noisy 1q gates per logical qubit
  std::map<Edge, int> two_qubit;         // CNOTs per logical pair
  std::vector<int> measured;
};

inline Usage usage_of(const Circuit& basis, const std::vector<int>& measured) {
  Usage u;
  u.one_qubit.assign(static_cast<std::size_t>(basis.n_qubits), 0);
  for (const auto& g : basis.gates) {
    if (g.kind == GateKind::kX || g.kind == GateKind::kSqrtX) ++u.one_qubit[g.q0];
    if (g.kind == GateKind::kCNOT)
      ++u.two_qubit[Edge{std::min(g.q0, g.q1), std::max(g.q0, g.q1)}];
  }
  u.measured = measured;
  return u;
}

inline double layout_cost(const Usage& u, const BackendSpec& b,
                          const std::vector<int>& layout) {
  double c = 0.0;
  for (std::size_t q = 0; q < u.one_qubit.size(); ++q)
    c += u.one_qubit[q] * b.sq_error[layout[q]];
  for (const auto& [e, k] : u.two_qubit)
    c += k * b.cnot_error_for(layout[e.first], layout[e.second]);
  for (int q : u.measured) c += b.readout_error[layout[q]];
  return c;
}

inline constexpr std::size_t kMaxPathCandidates = 200000;

/// Simple paths with `len` vertices, in DFS order from each start vertex.
/// Calls visit(path) for each; stops once visit returns false or the
/// candidate cap is reached.
template <class Visit>
void for_each_path(const std::vector<std::vector<int>>& adj, int len,
                   Visit&& visit) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> path;
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  std::size_t count = 0;
  bool stop = false;
  auto dfs = [&](auto&& self, int v) -> void {
    if (stop) return;
    path.push_back(v);
    used[v] = 1;
    if (static_cast<int>(path.size()) == len) {
      if (!visit(path) || ++count >= kMaxPathCandidates) stop = true;
    } else {
      for (int w : adj[v])
        if (!used[w]) self(self, w);
    }
    used[v] = 0;
    path.pop_back();
  };
  for (int s = 0; s < n && !stop; ++s) dfs(dfs, s);
}

inline std::vector<int> greedy_layout(const Usage& u, const BackendSpec& b) {
  const int k = static_cast<int>(u.one_qubit.size());
  const auto adj = b.adjacency();
  int start = 0;
  for (int q = 1; q < b.n_qubits; ++q)
    if (b.sq_error[q] + b.readout_error[q] <
        b.sq_error[start] + b.readout_error[start])
      start = q;
  std::vector<int> chosen{start};
  std::vector<char> used(static_cast<std::size_t>(b.n_qubits), 0);
  used[start] = 1;
  while (static_cast<int>(chosen.size()) < k) {
    int best = -1;
    double best_err = std::numeric_limits<double>::infinity();
    // Prefer extending from the most recent qubit so chains stay chains.
    for (auto it = chosen.rbegin(); it != chosen.rend() && best < 0; ++it)
      for (int w : adj[*it])
        if (!used[w] && b.cnot_error_for(*it, w) < best_err) {
          best = w;
          best_err = b.cnot_error_for(*it, w);
        }
    if (best < 0)
      for (int q = 0; q < b.n_qubits && best < 0; ++q)
        if (!used[q]) best = q;  // disconnected device
    used[best] = 1;
    chosen.push_back(best);
  }
  return chosen;
}

}  // namespace detail

/// Logical -> physical placement for a basis circuit. Path strategies lay
/// logical qubits 0, 1, ... along a simple path of the coupling map; if no
/// path of the right length exists they fall back to greedy growth.
inline std::vector<int> place(const Circuit& basis, const BackendSpec& b,
                              Placement strategy,
                              const std::vector<int>& measured) {
  const int k = basis.n_qubits;
  if (k > b.n_qubits)
    throw CapacityError("circuit needs " + std::to_string(k) +
                        " qubits, backend " + b.name + " has " +
                        std::to_string(b.n_qubits));
  const auto u = detail::usage_of(basis, measured);
  if (strategy == Placement::kGreedy) return detail::greedy_layout(u, b);

  std::vector<int> best;
  double best_cost = std::numeric_limits<double>::infinity();
  const bool first_only = strategy == Placement::kFirstPath;
  detail::for_each_path(b.adjacency(), k, [&](const std::vector<int>& path) {
    const double c = detail::layout_cost(u, b, path);
    if (c < best_cost - 1e-15) {
      best_cost = c;
      best = path;
    }
    return !first_only;
  });
  return best.empty() ? detail::greedy_layout(u, b) : best;
}

/// Basis circuit with per-gate error rates for a fixed layout.
inline NoisyCircuit transpile_with_layout(const Circuit& c, const BackendSpec& b,
                                          std::vector<int> layout) {
  if (c.n_qubits > b.n_qubits)
    throw CapacityError("circuit wider than backend " + b.name);
  if (static_cast<int>(layout.size()) != c.n_qubits)
    throw InvalidArgument("layout size does not match circuit width");
  {
    std::set<int> distinct(layout.begin(), layout.end());
    if (distinct.size() != layout.size() || *distinct.begin() < 0 ||
        *distinct.rbegin() >= b.n_qubits)
      throw InvalidArgument("layout is not an injection into the device");
  }
  NoisyCircuit nc;
  nc.circuit = basis_decompose(c, &nc.bindings);
  nc.layout = std::move(layout);
  nc.error.reserve(nc.circuit.gates.size());
  for (const auto& g : nc.circuit.gates) {
    switch (g.kind) {
      case GateKind::kRz: nc.error.push_back(0.0); break;
      case GateKind::kX:
      case GateKind::kSqrtX: nc.error.push_back(b.sq_error[nc.layout[g.q0]]); break;
      case GateKind::kCNOT: {
        const int pa = nc.layout[g.q0], pb = nc.layout[g.q1];
        if (!b.coupled(pa, pb)) nc.routing_fallback = true;
        nc.error.push_back(b.cnot_error_for(pa, pb));
        break;
      }
      default: throw ContractViolation("non-basis gate after decomposition");
    }
  }
  for (int p : nc.layout) nc.readout.push_back(b.readout_error[p]);
  return nc;
}

/// Measured qubits steer placement toward low readout error; empty means all.
inline NoisyCircuit transpile(const Circuit& c, const BackendSpec& b,
                              Placement strategy = Placement::kBestPath,
                              std::vector<int> measured = {}) {
  if (measured.empty()) {
    measured.resize(static_cast<std::size_t>(c.n_qubits));
    std::iota(measured.begin(), measured.end(), 0);
  }
  const auto basis = basis_decompose(c);
  return transpile_with_layout(c, b, place(basis, b, strategy, measured));
}

// ---------------------------------------------------------------------------
// Trajectory simulation

struct NoisySimConfig {
  int trajectories = 256;
  int shots = 1024;
  std::uint64_t seed = 0;
  Placement placement = Placement::kBestPath;
  /// Replace per-shot sampling by the exact readout-averaged parity
  /// prod(1 - 2 eps) <Z...> of each trajectory.
  bool analytic_readout = false;

  void validate() const {
    if (trajectories < 1) throw InvalidArgument("trajectories must be >= 1");
    if (shots < 1) throw InvalidArgument("shots must be >= 1");
  }
};

namespace detail {

inline Matrix2 matmul(const Matrix2& a, const Matrix2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

inline const Matrix2& pauli(int k) {
  using namespace std::complex_literals;
  static const Matrix2 table[4] = {{1.0, 0.0, 0.0, 1.0},
                                   {0.0, 1.0, 1.0, 0.0},
                                   {0.0, -1.0i, 1.0i, 0.0},
                                   {1.0, 0.0, 0.0, -1.0}};
  return table[k];
}

struct PauliEvent {
  std::size_t after_gate;
  int pa;  // Pauli on q0 (0..3)
  int pb;  // Pauli on q1 for two-qubit gates
};

/// Runs the circuit with Pauli insertions. Consecutive one-qubit operations
/// (gates and inserted Paulis) are fused per qubit and flushed before each
/// CNOT.
inline StateVector simulate(const Circuit& c, const std::vector<Matrix2>& mats,
                            const std::vector<PauliEvent>& events) {
  const int n = c.n_qubits;
  StateVector psi(n);
  static const Matrix2 id{1.0, 0.0, 0.0, 1.0};
  std::vector<Matrix2> pending(static_cast<std::size_t>(n), id);
  std::vector<char> dirty(static_cast<std::size_t>(n), 0);
  auto flush = [&](int q) {
    if (dirty[q]) {
      psi.apply_matrix(q, pending[q]);
      pending[q] = id;
      dirty[q] = 0;
    }
  };
  auto push = [&](int q, const Matrix2& m) {
    pending[q] = matmul(m, pending[q]);
    dirty[q] = 1;
  };
  std::size_t ev = 0;
  for (std::size_t k = 0; k < c.gates.size(); ++k) {
    const auto& g = c.gates[k];
    if (g.kind == GateKind::kCNOT) {
      flush(g.q0);
      flush(g.q1);
      psi.apply_cnot(g.q0, g.q1);
    } else {
      push(g.q0, mats[k]);
    }
    for (; ev < events.size() && events[ev].after_gate == k; ++ev) {
      if (events[ev].pa) push(g.q0, pauli(events[ev].pa));
      if (g.q1 >= 0 && events[ev].pb) push(g.q1, pauli(events[ev].pb));
    }
  }
  for (int q = 0; q < n; ++q) flush(q);
  return psi;
}

}  // namespace detail

/// Estimates <Z_S> for each qubit set S in `zstrings` from one shared set
/// of trajectories and shots.
inline std::vector<double> noisy_expectations(
    const NoisyCircuit& nc, const std::vector<std::vector<int>>& zstrings,
    const NoisySimConfig& cfg) {
  cfg.validate();
  const auto& c = nc.circuit;
  const int n = c.n_qubits;
  for (const auto& g : c.gates)
    if (!is_basis_gate(g.kind))
      throw ContractViolation(std::string("noisy simulation needs a transpiled "
                                          "circuit, found gate ") +
                              gate_name(g.kind));
  validate_circuit(c);
  if (nc.error.size() != c.gates.size() ||
      nc.readout.size() != static_cast<std::size_t>(n))
    throw ContractViolation("noisy circuit tables do not match its gates");

  std::vector<std::uint64_t> masks;
  std::uint64_t measured_mask = 0;
  for (const auto& z : zstrings) {
    masks.push_back(qubit_mask(z, n));
    measured_mask |= masks.back();
  }
  std::vector<int> measured;
  for (int q = 0; q < n; ++q)
    if ((measured_mask >> q) & 1u) measured.push_back(q);

  std::vector<Matrix2> mats(c.gates.size());
  for (std::size_t k = 0; k < c.gates.size(); ++k)
    if (c.gates[k].kind != GateKind::kCNOT) mats[k] = single_qubit_matrix(c.gates[k]);

  // Readout damping of each Z-string for the analytic path.
  std::vector<double> damping(masks.size(), 1.0);
  for (std::size_t s = 0; s < masks.size(); ++s)
    for (int q = 0; q < n; ++q)
      if ((masks[s] >> q) & 1u) damping[s] *= 1.0 - 2.0 * nc.readout[q];

  struct Measured {
    std::vector<double> cdf;
    std::vector<double> z;  // exact <Z_S> per string
  };
  auto measure_prep = [&](const StateVector& psi) {
    Measured m;
    const auto amp = psi.amplitudes();
    if (cfg.analytic_readout) {
      m.z.assign(masks.size(), 0.0);
      for (std::size_t x = 0; x < amp.size(); ++x) {
        const double p = std::norm(amp[x]);
        for (std::size_t s = 0; s < masks.size(); ++s)
          m.z[s] += (std::popcount(x & masks[s]) & 1) ? -p : p;
      }
    } else {
      m.cdf.resize(amp.size());
      double acc = 0.0;
      for (std::size_t x = 0; x < amp.size(); ++x) m.cdf[x] = acc += std::norm(amp[x]);
    }
    return m;
  };

  std::optional<Measured> ideal;
  std::vector<double> sums(masks.size(), 0.0);
  std::vector<detail::PauliEvent> events;
  for (int t = 0; t < cfg.trajectories; ++t) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    events.clear();
    for (std::size_t k = 0; k < c.gates.size(); ++k) {
      const double p = nc.error[k];
      if (p <= 0.0) continue;
      const bool two = c.gates[k].kind == GateKind::kCNOT;
      const double insert = two ? p * 15.0 / 16.0 : p * 3.0 / 4.0;
      if (rng.uniform() < insert) {
        if (two) {
          const int idx = 1 + static_cast<int>(rng.below(15));
          events.push_back({k, idx & 3, idx >> 2});
        } else {
          events.push_back({k, 1 + static_cast<int>(rng.below(3)), 0});
        }
      }
    }
    Measured local;
    const Measured* m;
    if (events.empty()) {
      if (!ideal) ideal = measure_prep(detail::simulate(c, mats, events));
      m = &*ideal;
    } else {
      local = measure_prep(detail::simulate(c, mats, events));
      m = &local;
    }

    if (cfg.analytic_readout) {
      for (std::size_t s = 0; s < masks.size(); ++s)
        sums[s] += damping[s] * m->z[s] * cfg.shots;
      continue;
    }
    const double total = m->cdf.back();
    for (int shot = 0; shot < cfg.shots; ++shot) {
      const double u = rng.uniform() * total;
      auto x = static_cast<std::uint64_t>(
          std::upper_bound(m->cdf.begin(), m->cdf.end(), u) - m->cdf.begin());
      if (x >= m->cdf.size()) x = m->cdf.size() - 1;
      for (int q : measured)
        if (nc.readout[q] > 0.0 && rng.uniform() < nc.readout[q])
          x ^= std::uint64_t{1} << q;
      for (std::size_t s = 0; s < masks.size(); ++s)
        sums[s] += (std::popcount(x & masks[s]) & 1) ? -1.0 : 1.0;
    }
  }
  const double samples = static_cast<double>(cfg.trajectories) * cfg.shots;
  for (auto& s : sums) s /= samples;
  return sums;
}

inline double noisy_expectation(const NoisyCircuit& nc,
                                const std::vector<int>& zstring,
                                const NoisySimConfig& cfg) {
  return noisy_expectations(nc, {zstring}, cfg).at(0);
}

// ---------------------------------------------------------------------------
// Noisy Max-Cut cost, with and without light cone cancellation

inline constexpr int kMaxNoisyFullQubits = 15;

/// Noisy LCC evaluation: every pruned subcircuit is transpiled once (layouts
/// shared between structurally identical subcircuits) and re-bound per call.
class NoisyLccEvaluator {
 public:
  NoisyLccEvaluator(const MaxCutInstance& g, const AnsatzSpec& spec,
                    const BackendSpec& backend, NoisySimConfig cfg)
      : spec_(spec), cfg_(cfg), num_edges_(g.num_edges()) {
    cfg_.validate();
    backend.validate();
    const LccEvaluator lcc(g, spec);
    std::map<std::string, std::vector<int>> layouts;
    for (const auto& term : lcc.terms()) {
      std::vector<Part> parts;
      for (const auto& sub : term.parts) {
        const auto key = structure_key(sub);
        auto it = layouts.find(key);
        if (it == layouts.end()) {
          const auto basis = basis_decompose(sub.circuit);
          it = layouts.emplace(key, place(basis, backend, cfg_.placement,
                                          sub.observables)).first;
        }
        Part p{transpile_with_layout(sub.circuit, backend, it->second),
               sub.observables};
        fallback_ = fallback_ || p.circuit.routing_fallback;
        widest_ = std::max(widest_, p.circuit.n_qubits());
        parts.push_back(std::move(p));
      }
      edges_.push_back(std::move(parts));
    }
  }

  double expectation(const ParameterMatrix& theta) const {
    return expectation(theta, cfg_.seed);
  }

  double expectation(const ParameterMatrix& theta, std::uint64_t seed) const {
    check_shape(spec_, theta);
    double zz = 0.0;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      double term = 1.0;
      for (std::size_t k = 0; k < edges_[e].size(); ++k) {
        NoisyCircuit c = edges_[e][k].circuit;
        c.bind(theta);
        auto cfg = cfg_;
        cfg.seed = derive_seed(seed, {e, k});
        term *= noisy_expectation(c, edges_[e][k].observables, cfg);
      }
      zz += term;
    }
    return cost_from_zz(num_edges_, zz);
  }

  bool routing_fallback() const noexcept { return fallback_; }
  int max_circuit_qubits() const noexcept { return widest_; }
  const NoisySimConfig& config() const noexcept { return cfg_; }

 private:
  struct Part {
    NoisyCircuit circuit;
    std::vector<int> observables;
  };

  static std::string structure_key(const Subcircuit& s) {
    std::ostringstream os;
    os << s.n_qubits() << "|";
    for (const auto& g : s.circuit.gates)
      os << static_cast<int>(g.kind) << ":" << g.q0 << ":" << g.q1 << ",";
    os << "|";
    for (int o : s.observables) os << o << ",";
    return os.str();
  }

  AnsatzSpec spec_;
  NoisySimConfig cfg_;
  std::size_t num_edges_ = 0;
  std::vector<std::vector<Part>> edges_;
  bool fallback_ = false;
  int widest_ = 0;
};

/// Noisy evaluation of the unpruned ansatz; all edge correlators come from
/// one shared set of trajectories and shots.
class NoisyFullEvaluator {
 public:
  NoisyFullEvaluator(const MaxCutInstance& g, const AnsatzSpec& spec,
                     const BackendSpec& backend, NoisySimConfig cfg)
      : spec_(spec), cfg_(cfg), num_edges_(g.num_edges()) {
    cfg_.validate();
    backend.validate();
    spec.validate();
    if (spec.n != g.n()) throw InvalidArgument("ansatz width does not match graph");
    if (g.n() > backend.n_qubits)
      throw CapacityError("instance with n=" + std::to_string(g.n()) +
                          " does not fit backend " + backend.name);
    if (g.n() > kMaxNoisyFullQubits)
      throw SizeLimitError("noisy full-circuit simulation limited to " +
                           std::to_string(kMaxNoisyFullQubits) + " qubits");
    circuit_ = transpile(build_ansatz(spec, ParameterMatrix::zeros(spec)),
                         backend, cfg_.placement);
    for (auto [u, v] : g.edges()) zstrings_.push_back({u, v});
  }

  double expectation(const ParameterMatrix& theta) const {
    return expectation(theta, cfg_.seed);
  }

  double expectation(const ParameterMatrix& theta, std::uint64_t seed) const {
    check_shape(spec_, theta);
    if (zstrings_.empty()) return 0.0;
    NoisyCircuit c = circuit_;
    c.bind(theta);
    auto cfg = cfg_;
    cfg.seed = seed;
    const auto z = noisy_expectations(c, zstrings_, cfg);
    return cost_from_zz(num_edges_, std::accumulate(z.begin(), z.end(), 0.0));
  }

  bool routing_fallback() const noexcept { return circuit_.routing_fallback; }
  int max_circuit_qubits() const noexcept { return circuit_.n_qubits(); }
  const NoisyCircuit& circuit() const noexcept { return circuit_; }
  const NoisySimConfig& config() const noexcept { return cfg_; }

 private:
  AnsatzSpec spec_;
  NoisySimConfig cfg_;
  std::size_t num_edges_ = 0;
  NoisyCircuit circuit_;
  std::vector<std::vector<int>> zstrings_;
};

inline double noisy_lcc_expectation(const MaxCutInstance& g,
                                    const AnsatzSpec& spec,
                                    const ParameterMatrix& theta,
                                    const BackendSpec& backend,
                                    const NoisySimConfig& cfg) {
  return NoisyLccEvaluator(g, spec, backend, cfg).expectation(theta);
}

inline double noisy_full_expectation(const MaxCutInstance& g,
                                     const AnsatzSpec& spec,
                                     const ParameterMatrix& theta,
                                     const BackendSpec& backend,
                                     const NoisySimConfig& cfg) {
  return NoisyFullEvaluator(g, spec, backend, cfg).expectation(theta);
}

}  // namespace lccvqe
