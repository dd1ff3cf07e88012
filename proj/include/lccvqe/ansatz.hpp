#pragma once

// Two-local R_y / CZ ansatz and the full-circuit Max-Cut expectation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lccvqe/error.hpp"
#include "lccvqe/graph.hpp"
#include "lccvqe/rng.hpp"
#include "lccvqe/statevec.hpp"

namespace lccvqe {

enum class Entanglement { kCircular, kLinear, kFull };

inline std::string to_string(Entanglement e) {
  switch (e) {
    case Entanglement::kCircular: return "circular";
    case Entanglement::kLinear: return "linear";
    case Entanglement::kFull: return "full";
  }
  return "?";
}

inline Entanglement parse_entanglement(const std::string& s) {
  if (s == "circular") return Entanglement::kCircular;
  if (s == "linear") return Entanglement::kLinear;
  if (s == "full") return Entanglement::kFull;
  throw InvalidArgument("unknown entanglement '" + s + "'");
}

struct AnsatzSpec {
  int n = 0;
  int layers = 1;
  Entanglement entanglement = Entanglement::kCircular;

  void validate() const {
    if (n < 2) throw InvalidArgument("ansatz needs at least 2 qubits");
    if (layers < 1) throw InvalidArgument("ansatz needs at least 1 layer");
  }
  bool operator==(const AnsatzSpec&) const = default;
};

/// CZ pairs of one entangling block, in emission order. Circular emits
/// (k, k+1 mod n) for ascending k; for n = 2 the wrap-around pair repeats
/// (0, 1) and is emitted once.
inline std::vector<std::pair<int, int>> entangling_pairs(const AnsatzSpec& s) {
  std::vector<std::pair<int, int>> pairs;
  switch (s.entanglement) {
    case Entanglement::kCircular:
      for (int k = 0; k < s.n; ++k) pairs.emplace_back(k, (k + 1) % s.n);
      if (s.n == 2) pairs.pop_back();
      break;
    case Entanglement::kLinear:
      for (int k = 0; k + 1 < s.n; ++k) pairs.emplace_back(k, k + 1);
      break;
    case Entanglement::kFull:
      for (int a = 0; a < s.n; ++a)
        for (int b = a + 1; b < s.n; ++b) pairs.emplace_back(a, b);
      break;
  }
  return pairs;
}

/// Rotation angles theta(k, m): row k is the qubit, column m the R_y layer
/// (column 0 is the initial layer, column m follows the m-th CZ block).
class ParameterMatrix {
 public:
  ParameterMatrix() = default;
  ParameterMatrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw InvalidArgument("negative matrix shape");
  }
  ParameterMatrix(int rows, int cols, std::vector<double> flat)
      : rows_(rows), cols_(cols), data_(std::move(flat)) {
    if (data_.size() != static_cast<std::size_t>(rows) * cols)
      throw InvalidArgument("flat parameter vector has wrong length");
  }

  static ParameterMatrix zeros(const AnsatzSpec& s) {
    return ParameterMatrix(s.n, s.layers + 1);
  }

  /// Entries uniform in [0, 2 pi).
  static ParameterMatrix random(const AnsatzSpec& s, Rng& rng) {
    ParameterMatrix t(s.n, s.layers + 1);
    for (auto& x : t.data_) x = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return t;
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double operator()(int k, int m) const { return data_[index(k, m)]; }
  double& operator()(int k, int m) { return data_[index(k, m)]; }
  double at(ParamCoord c) const {
    if (c.qubit < 0 || c.qubit >= rows_ || c.layer < 0 || c.layer >= cols_)
      throw ContractViolation("parameter coordinate (" +
                              std::to_string(c.qubit) + ", " +
                              std::to_string(c.layer) +
                              ") outside the parameter matrix");
    return (*this)(c.qubit, c.layer);
  }

  std::span<const double> flat() const noexcept { return data_; }
  std::span<double> flat() noexcept { return data_; }

  /// Every entry wrapped into [0, 2 pi).
  ParameterMatrix canonical() const {
    ParameterMatrix out = *this;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (auto& x : out.data_) {
      x = std::fmod(x, two_pi);
      if (x < 0) x += two_pi;
      if (x >= two_pi) x = 0.0;
    }
    return out;
  }

  bool operator==(const ParameterMatrix&) const = default;

 private:
  std::size_t index(int k, int m) const {
    return static_cast<std::size_t>(k) * cols_ + m;
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;  // row-major
};

inline void check_shape(const AnsatzSpec& s, const ParameterMatrix& t) {
  if (t.rows() != s.n || t.cols() != s.layers + 1)
    throw InvalidArgument("parameter matrix is " + std::to_string(t.rows()) +
                          "x" + std::to_string(t.cols()) + ", ansatz needs " +
                          std::to_string(s.n) + "x" +
                          std::to_string(s.layers + 1));
}

inline Circuit build_ansatz(const AnsatzSpec& spec,
                            const ParameterMatrix& theta) {
  spec.validate();
  check_shape(spec, theta);
  const auto pairs = entangling_pairs(spec);
  Circuit c{spec.n, {}};
  c.gates.reserve(static_cast<std::size_t>(spec.n) * (spec.layers + 1) +
                  pairs.size() * spec.layers);
  for (int k = 0; k < spec.n; ++k)
    c.gates.push_back(Gate::ry(k, theta(k, 0), ParamCoord{k, 0}));
  for (int m = 1; m <= spec.layers; ++m) {
    for (auto [a, b] : pairs) c.gates.push_back(Gate::cz(a, b));
    for (int k = 0; k < spec.n; ++k)
      c.gates.push_back(Gate::ry(k, theta(k, m), ParamCoord{k, m}));
  }
  return c;
}

/// Overwrites the angle of every parameterised gate from theta.
inline void bind_parameters(Circuit& c, const ParameterMatrix& theta) {
  for (auto& g : c.gates)
    if (g.param) g.angle = theta.at(*g.param);
}

inline constexpr int kMaxDenseQubits = 20;

/// |E|/2 - 1/2 sum_{(i,j)} <Z_i Z_j>.
inline double cost_from_zz(std::size_t num_edges, double zz_sum) {
  return 0.5 * static_cast<double>(num_edges) - 0.5 * zz_sum;
}

inline void check_dense(const MaxCutInstance& g, const AnsatzSpec& spec) {
  if (spec.n != g.n())
    throw InvalidArgument("ansatz width " + std::to_string(spec.n) +
                          " does not match graph size " +
                          std::to_string(g.n()));
  if (g.n() > kMaxDenseQubits)
    throw SizeLimitError("full-circuit simulation limited to n <= " +
                         std::to_string(kMaxDenseQubits) + ", got n = " +
                         std::to_string(g.n()));
}

inline double zz_sum(const MaxCutInstance& g, const StateVector& psi) {
  double sum = 0.0;
  for (auto [u, v] : g.edges()) sum += expectation_pauli_z(psi, {u, v});
  return sum;
}

inline double full_expectation(const MaxCutInstance& g, const AnsatzSpec& spec,
                               const ParameterMatrix& theta) {
  check_dense(g, spec);
  const auto psi = run_circuit(build_ansatz(spec, theta));
  return cost_from_zz(g.num_edges(), zz_sum(g, psi));
}

/// Draws basis states from |amplitude|^2 of the full ansatz state.
inline std::vector<Assignment> sample_bitstrings(const MaxCutInstance& g,
                                                 const AnsatzSpec& spec,
                                                 const ParameterMatrix& theta,
                                                 std::size_t shots,
                                                 std::uint64_t seed) {
  if (shots == 0) throw InvalidArgument("shots must be positive");
  check_dense(g, spec);
  const auto psi = run_circuit(build_ansatz(spec, theta));
  const auto amp = psi.amplitudes();
  std::vector<double> cdf(amp.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < amp.size(); ++i) cdf[i] = acc += std::norm(amp[i]);

  Rng rng(seed);
  std::vector<Assignment> out;
  out.reserve(shots);
  for (std::size_t s = 0; s < shots; ++s) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    const auto idx = static_cast<std::size_t>(it - cdf.begin());
    Assignment a(static_cast<std::size_t>(g.n()));
    for (int q = 0; q < g.n(); ++q) a[q] = (idx >> q) & 1u;
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace lccvqe
