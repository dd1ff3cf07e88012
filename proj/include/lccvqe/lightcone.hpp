#pragma once

// Light cone cancellation for the two-local ansatz.
//
// For an observable Z_i Z_j measured after an L-layer R_y/CZ circuit, every
// gate outside the backward causal cone of {i, j} commutes through the
// observable and cancels against its adjoint. Walking the circuit backwards
// from the observable:
//
//   cone_L        = {i, j}
//   R_y column p  is kept on cone_p
//   CZ block p    keeps the CZs touching cone_p; cone_{p-1} = cone_p plus
//                 their endpoints
//   R_y column 0  is kept on cone_0
//
// For nearest-neighbour entanglers cone_p is the union of the distance-(L-p)
// balls around i and j. The kept CZs split the surviving qubits into
// connected components; a component holding one observable is a separate
// circuit and <Z_i Z_j> factorises into <Z_i><Z_j>.
//
// Compact qubit labels inside a subcircuit follow its entanglement chain
// (label k and k+1 are CZ-coupled), which lets the noise engine lay a
// subcircuit onto a physical path.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lccvqe/ansatz.hpp"
#include "lccvqe/error.hpp"
#include "lccvqe/graph.hpp"
#include "lccvqe/statevec.hpp"

namespace lccvqe {

struct LightCone {
  int i = 0;
  int j = 0;
  int n = 0;
  int layers = 0;
  int locality = 2;
  Entanglement entanglement = Entanglement::kCircular;
  /// S[m] = qubits within distance m of i or j, m = 0..L (sorted).
  std::vector<std::vector<int>> S;
  /// T[m] = entanglers (s, s+1) with both endpoints in S[m], m = 0..L.
  std::vector<std::vector<std::pair<int, int>>> T;
};

inline int qubit_distance(int a, int b, int n, Entanglement e) {
  const int d = std::abs(a - b);
  return e == Entanglement::kCircular ? std::min(d, n - d) : d;
}

inline LightCone cone_sets(int i, int j, int n, int layers,
                           Entanglement e = Entanglement::kCircular) {
  if (e == Entanglement::kFull)
    throw Unsupported("light cone sets are defined for circular or linear "
                      "entanglement only");
  if (n < 2 || layers < 1) throw InvalidArgument("need n >= 2 and L >= 1");
  if (i < 0 || j < 0 || i >= n || j >= n)
    throw InvalidArgument("observable qubit out of range");
  if (i == j) throw InvalidArgument("observable qubits must differ");

  LightCone lc{i, j, n, layers, 2, e, {}, {}};
  const auto block = entangling_pairs(AnsatzSpec{n, layers, e});
  for (int m = 0; m <= layers; ++m) {
    std::vector<int> s;
    for (int q = 0; q < n; ++q)
      if (qubit_distance(q, i, n, e) <= m || qubit_distance(q, j, n, e) <= m)
        s.push_back(q);
    std::vector<std::pair<int, int>> t;
    for (auto [a, b] : block)
      if (std::binary_search(s.begin(), s.end(), a) &&
          std::binary_search(s.begin(), s.end(), b))
        t.emplace_back(a, b);
    lc.S.push_back(std::move(s));
    lc.T.push_back(std::move(t));
  }
  return lc;
}

/// Largest subcircuit width for k-local observables after L layers.
inline int max_qubits(int k, int layers) {
  if (k < 1 || layers < 1) throw InvalidArgument("need k >= 1 and L >= 1");
  return 2 * k * layers + 1;
}

struct Subcircuit {
  std::vector<int> qubit_map;  // compact label -> original qubit
  Circuit circuit;             // over qubit_map.size() qubits
  std::vector<int> observables;

  int n_qubits() const { return static_cast<int>(qubit_map.size()); }
  bool operator==(const Subcircuit&) const = default;
};

/// How much of the cone to keep. kTight is the exact backward light cone.
/// kLoose keeps R_y column p on S[L-p+1] (column 0 on S[L]) and every
/// entangler with both endpoints inside that set; the extra gates cancel,
/// so both forms give the same expectation.
enum class ConeForm { kTight, kLoose };

namespace detail {

struct PrunedCircuit {
  std::vector<std::vector<int>> ry;                          // column p
  std::vector<std::vector<std::pair<int, int>>> cz;          // block p
};

inline PrunedCircuit prune(const AnsatzSpec& spec,
                           const std::vector<int>& observables,
                           ConeForm form) {
  const int L = spec.layers;
  PrunedCircuit out;
  out.ry.resize(static_cast<std::size_t>(L) + 1);
  out.cz.resize(static_cast<std::size_t>(L) + 1);
  if (form == ConeForm::kLoose) {
    const auto lc = cone_sets(observables.at(0), observables.at(1), spec.n, L,
                              spec.entanglement);
    out.ry[0] = lc.S[L];
    for (int p = 1; p <= L; ++p) {
      out.ry[p] = lc.S[L - p + 1];
      out.cz[p] = lc.T[L - p + 1];
    }
    return out;
  }
  const auto block = entangling_pairs(spec);
  std::vector<char> in_cone(static_cast<std::size_t>(spec.n), 0);
  for (int q : observables) in_cone[q] = 1;
  auto members = [&] {
    std::vector<int> v;
    for (int q = 0; q < spec.n; ++q)
      if (in_cone[q]) v.push_back(q);
    return v;
  };
  out.ry[L] = members();
  for (int p = L; p >= 1; --p) {
    for (auto [a, b] : block)
      if (in_cone[a] || in_cone[b]) out.cz[p].emplace_back(a, b);
    for (auto [a, b] : out.cz[p]) in_cone[a] = in_cone[b] = 1;
    out.ry[p - 1] = members();
  }
  return out;
}

/// Orders a connected component along its CZ chain: depth-first from the
/// lowest-labelled vertex of minimum degree, smaller neighbours first.
inline std::vector<int> chain_order(
    const std::vector<int>& comp,
    const std::map<int, std::set<int>>& adjacency) {
  auto degree = [&](int q) {
    auto it = adjacency.find(q);
    return it == adjacency.end() ? std::size_t{0} : it->second.size();
  };
  int start = comp.front();
  for (int q : comp)
    if (degree(q) < degree(start)) start = q;
  std::vector<int> order;
  std::set<int> seen;
  std::vector<int> stack{start};
  while (!stack.empty()) {
    const int q = stack.back();
    stack.pop_back();
    if (!seen.insert(q).second) continue;
    order.push_back(q);
    if (auto it = adjacency.find(q); it != adjacency.end())
      for (auto r = it->second.rbegin(); r != it->second.rend(); ++r)
        if (!seen.contains(*r)) stack.push_back(*r);
  }
  return order;
}

}  // namespace detail

inline void check_lcc_spec(const MaxCutInstance& g, const AnsatzSpec& spec) {
  spec.validate();
  if (spec.entanglement == Entanglement::kFull)
    throw Unsupported("light cone cancellation is not possible with full "
                      "entanglement");
  if (spec.n != g.n())
    throw InvalidArgument("ansatz width " + std::to_string(spec.n) +
                          " does not match graph size " +
                          std::to_string(g.n()));
}

/// Number of qubits in the (unsplit) pruned circuit for observable (i, j).
inline int cone_qubit_count(const AnsatzSpec& spec, Edge edge,
                            ConeForm form = ConeForm::kTight) {
  return static_cast<int>(
      detail::prune(spec, {edge.first, edge.second}, form).ry[0].size());
}

inline std::vector<Subcircuit> build_subcircuits(
    const MaxCutInstance& g, const AnsatzSpec& spec, Edge edge,
    ConeForm form = ConeForm::kTight) {
  check_lcc_spec(g, spec);
  const auto [i, j] = edge;
  if (i < 0 || j < 0 || i >= spec.n || j >= spec.n || i == j)
    throw InvalidArgument("observable pair (" + std::to_string(i) + ", " +
                          std::to_string(j) + ") is not a valid edge");
  const int L = spec.layers;
  const auto pruned = detail::prune(spec, {i, j}, form);

  // Union-find over the surviving qubits, joined by kept entanglers.
  std::vector<int> parent(static_cast<std::size_t>(spec.n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int q) {
    while (parent[q] != q) q = parent[q] = parent[parent[q]];
    return q;
  };
  std::map<int, std::set<int>> adjacency;
  for (int p = 1; p <= L; ++p)
    for (auto [a, b] : pruned.cz[p]) {
      parent[find(a)] = find(b);
      adjacency[a].insert(b);
      adjacency[b].insert(a);
    }

  std::vector<std::vector<int>> components;
  {
    std::map<int, std::vector<int>> by_root;
    for (int q : pruned.ry[0]) by_root[find(q)].push_back(q);
    const int ri = find(i), rj = find(j);
    components.push_back(by_root.at(ri));
    if (rj != ri) components.push_back(by_root.at(rj));
    // Components without an observable cannot occur for a backward cone;
    // they would cancel completely anyway.
  }

  std::vector<Subcircuit> parts;
  for (const auto& comp : components) {
    Subcircuit sub;
    sub.qubit_map = detail::chain_order(comp, adjacency);
    std::map<int, int> compact;
    for (int k = 0; k < static_cast<int>(sub.qubit_map.size()); ++k)
      compact[sub.qubit_map[k]] = k;
    auto inside = [&](int q) { return compact.contains(q); };

    sub.circuit.n_qubits = sub.n_qubits();
    for (int q : pruned.ry[0])
      if (inside(q))
        sub.circuit.gates.push_back(Gate::ry(compact[q], 0.0, ParamCoord{q, 0}));
    for (int p = 1; p <= L; ++p) {
      for (auto [a, b] : pruned.cz[p])
        if (inside(a) && inside(b))
          sub.circuit.gates.push_back(Gate::cz(compact[a], compact[b]));
      for (int q : pruned.ry[p])
        if (inside(q))
          sub.circuit.gates.push_back(
              Gate::ry(compact[q], 0.0, ParamCoord{q, p}));
    }
    for (int obs : {i, j})
      if (inside(obs)) sub.observables.push_back(compact[obs]);
    parts.push_back(std::move(sub));
  }
  return parts;
}

/// <Z_i Z_j> from the pruned circuits: the component expectation when both
/// observables share a component, else the product of single-Z values.
inline double subcircuit_expectation(const std::vector<Subcircuit>& parts,
                                     const ParameterMatrix& theta,
                                     int* widest_simulated = nullptr) {
  double value = 1.0;
  for (const auto& part : parts) {
    StateVector psi(part.n_qubits());
    for (const auto& g : part.circuit.gates) {
      if (g.kind == GateKind::kRy) {
        if (!g.param)
          throw ContractViolation("subcircuit rotation without parameter");
        psi.apply_ry(g.q0, theta.at(*g.param));
      } else {
        apply_gate_inplace(psi, g);
      }
    }
    if (widest_simulated)
      *widest_simulated = std::max(*widest_simulated, part.n_qubits());
    value *= expectation_pauli_z(psi, part.observables);
  }
  return value;
}

struct EdgeTerm {
  Edge edge;
  int cone_qubits = 0;  // |S^(L)| before splitting
  std::vector<Subcircuit> parts;
};

/// Pruned circuits for every edge of one (graph, ansatz) pair, built once
/// and read-only afterwards; only angles change between evaluations.
class LccEvaluator {
 public:
  LccEvaluator(const MaxCutInstance& g, const AnsatzSpec& spec,
               ConeForm form = ConeForm::kTight)
      : spec_(spec), num_edges_(g.num_edges()) {
    check_lcc_spec(g, spec);
    terms_.reserve(g.num_edges());
    for (const auto& e : g.edges()) {
      EdgeTerm t{e, cone_qubit_count(spec, e, form),
                 build_subcircuits(g, spec, e, form)};
      terms_.push_back(std::move(t));
    }
  }

  LccEvaluator(const LccEvaluator& o)
      : spec_(o.spec_), num_edges_(o.num_edges_), terms_(o.terms_),
        widest_(o.widest_.load()) {}

  const AnsatzSpec& spec() const noexcept { return spec_; }
  const std::vector<EdgeTerm>& terms() const noexcept { return terms_; }

  double edge_zz(std::size_t e, const ParameterMatrix& theta) const {
    int widest = 0;
    const double v = subcircuit_expectation(terms_[e].parts, theta, &widest);
    note_width(widest);
    return v;
  }

  double expectation(const ParameterMatrix& theta) const {
    check_shape(spec_, theta);
    double sum = 0.0;
    for (std::size_t e = 0; e < terms_.size(); ++e) sum += edge_zz(e, theta);
    return cost_from_zz(num_edges_, sum);
  }

  /// Widest component over all edges (structural).
  int max_component_qubits() const {
    int w = 0;
    for (const auto& t : terms_)
      for (const auto& p : t.parts) w = std::max(w, p.n_qubits());
    return w;
  }

  /// Widest statevector actually simulated so far.
  int widest_simulated() const noexcept { return widest_.load(); }

 private:
  void note_width(int w) const {
    int cur = widest_.load();
    while (w > cur && !widest_.compare_exchange_weak(cur, w)) {
    }
  }

  AnsatzSpec spec_;
  std::size_t num_edges_ = 0;
  std::vector<EdgeTerm> terms_;
  mutable std::atomic<int> widest_{0};
};

inline double lcc_expectation(const MaxCutInstance& g, const AnsatzSpec& spec,
                              const ParameterMatrix& theta) {
  return LccEvaluator(g, spec).expectation(theta);
}

/// <Z_q> of a single qubit from its own (single-observable) light cone.
inline double single_z_expectation(const AnsatzSpec& spec, int q,
                                   const ParameterMatrix& theta) {
  if (q < 0 || q >= spec.n) throw InvalidArgument("qubit out of range");
  const int L = spec.layers;
  const auto pruned = detail::prune(spec, {q}, ConeForm::kTight);
  const auto& ry = pruned.ry;
  const auto& cz = pruned.cz;
  const auto qubits = ry[0];
  if (static_cast<int>(qubits.size()) > kMaxStateQubits)
    throw SizeLimitError("single-Z light cone too wide");
  std::map<int, int> compact;
  for (int k = 0; k < static_cast<int>(qubits.size()); ++k)
    compact[qubits[k]] = k;
  StateVector psi(static_cast<int>(qubits.size()));
  for (int r : ry[0]) psi.apply_ry(compact[r], theta(r, 0));
  for (int p = 1; p <= L; ++p) {
    for (auto [a, b] : cz[p]) psi.apply_cz(compact[a], compact[b]);
    for (int r : ry[p]) psi.apply_ry(compact[r], theta(r, p));
  }
  return expectation_pauli_z(psi, {compact[q]});
}

/// Text dump used by golden-file tests.
inline std::string dump(const std::vector<Subcircuit>& parts, Edge edge) {
  std::ostringstream os;
  os << "edge " << edge.first << " " << edge.second << "\n";
  os << "parts " << parts.size() << "\n";
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& p = parts[k];
    os << "part " << k << " qubits " << p.n_qubits() << "\n";
    os << "  map";
    for (int q = 0; q < p.n_qubits(); ++q)
      os << " " << q << ":" << p.qubit_map[q];
    os << "\n  observables";
    for (int o : p.observables) os << " " << o;
    os << "\n";
    for (const auto& g : p.circuit.gates) {
      os << "  " << gate_name(g.kind) << " " << g.q0;
      if (g.q1 >= 0) os << " " << g.q1;
      if (g.param)
        os << " theta[" << g.param->qubit << "," << g.param->layer << "]";
      os << "\n";
    }
  }
  return os.str();
}

}  // namespace lccvqe
