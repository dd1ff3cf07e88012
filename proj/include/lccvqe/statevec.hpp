#pragma once

// Dense statevector simulation.
//
// Qubit ordering: qubit q is bit q of the basis index (qubit 0 is the least
// significant bit), so |x_{n-1} ... x_1 x_0> has index sum_q x_q 2^q.
// Global phase is not tracked as part of any contract; only probabilities
// and expectation values are.

#include <algorithm>
#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lccvqe/error.hpp"

namespace lccvqe {

using Complex = std::complex<double>;

enum class GateKind { kRy, kRz, kX, kSqrtX, kH, kCZ, kCNOT };

inline bool is_rotation(GateKind k) {
  return k == GateKind::kRy || k == GateKind::kRz;
}
inline bool is_two_qubit(GateKind k) {
  return k == GateKind::kCZ || k == GateKind::kCNOT;
}

inline const char* gate_name(GateKind k) {
  switch (k) {
    case GateKind::kRy: return "ry";
    case GateKind::kRz: return "rz";
    case GateKind::kX: return "x";
    case GateKind::kSqrtX: return "sx";
    case GateKind::kH: return "h";
    case GateKind::kCZ: return "cz";
    case GateKind::kCNOT: return "cx";
  }
  return "?";
}

/// Row k (qubit of the original ansatz) and column m (layer) of the
/// parameter matrix.
struct ParamCoord {
  int qubit = 0;
  int layer = 0;
  auto operator<=>(const ParamCoord&) const = default;
};

struct Gate {
  GateKind kind = GateKind::kX;
  int q0 = 0;
  int q1 = -1;  // second qubit of CZ / target of CNOT, -1 otherwise
  double angle = 0.0;
  std::optional<ParamCoord> param;

  static Gate ry(int q, double theta, std::optional<ParamCoord> p = {}) {
    return {GateKind::kRy, q, -1, theta, p};
  }
  static Gate rz(int q, double theta) { return {GateKind::kRz, q, -1, theta, {}}; }
  static Gate x(int q) { return {GateKind::kX, q, -1, 0.0, {}}; }
  static Gate sx(int q) { return {GateKind::kSqrtX, q, -1, 0.0, {}}; }
  static Gate h(int q) { return {GateKind::kH, q, -1, 0.0, {}}; }
  static Gate cz(int a, int b) { return {GateKind::kCZ, a, b, 0.0, {}}; }
  static Gate cnot(int control, int target) {
    return {GateKind::kCNOT, control, target, 0.0, {}};
  }

  int arity() const { return is_two_qubit(kind) ? 2 : 1; }
  bool operator==(const Gate&) const = default;
};

struct Circuit {
  int n_qubits = 0;
  std::vector<Gate> gates;  // application order: gates[0] acts first

  std::size_t count(GateKind k) const {
    std::size_t c = 0;
    for (const auto& g : gates) c += g.kind == k;
    return c;
  }
  bool operator==(const Circuit&) const = default;
};

inline void validate_gate(const Gate& g, int n_qubits) {
  auto in_range = [&](int q) { return q >= 0 && q < n_qubits; };
  if (!in_range(g.q0))
    throw InvalidArgument(std::string(gate_name(g.kind)) + ": qubit " +
                          std::to_string(g.q0) + " out of range for " +
                          std::to_string(n_qubits) + " qubits");
  if (is_two_qubit(g.kind)) {
    if (!in_range(g.q1))
      throw InvalidArgument(std::string(gate_name(g.kind)) + ": qubit " +
                            std::to_string(g.q1) + " out of range for " +
                            std::to_string(n_qubits) + " qubits");
    if (g.q0 == g.q1)
      throw InvalidArgument(std::string(gate_name(g.kind)) +
                            ": qubits must be distinct");
  }
}

inline void validate_circuit(const Circuit& c) {
  for (const auto& g : c.gates) validate_gate(g, c.n_qubits);
}

using Matrix2 = std::array<Complex, 4>;  // row-major

inline Matrix2 single_qubit_matrix(const Gate& g) {
  using namespace std::complex_literals;
  switch (g.kind) {
    case GateKind::kRy: {
      const double c = std::cos(g.angle / 2), s = std::sin(g.angle / 2);
      return {c, -s, s, c};
    }
    case GateKind::kRz: {
      const Complex e = std::polar(1.0, g.angle / 2);
      return {std::conj(e), 0.0, 0.0, e};
    }
    case GateKind::kX: return {0.0, 1.0, 1.0, 0.0};
    case GateKind::kSqrtX:
      return {Complex(0.5, 0.5), Complex(0.5, -0.5), Complex(0.5, -0.5),
              Complex(0.5, 0.5)};
    case GateKind::kH: {
      const double r = std::numbers::sqrt2 / 2;
      return {r, r, r, -r};
    }
    default: break;
  }
  throw ContractViolation("single_qubit_matrix: two-qubit gate");
}

inline constexpr int kMaxStateQubits = 24;

class StateVector {
 public:
  explicit StateVector(int n_qubits) : n_(n_qubits) {
    if (n_qubits < 0 || n_qubits > kMaxStateQubits)
      throw SizeLimitError("statevector limited to " +
                           std::to_string(kMaxStateQubits) + " qubits, got " +
                           std::to_string(n_qubits));
    amp_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
    amp_[0] = 1.0;
  }

  StateVector(int n_qubits, std::vector<Complex> amplitudes)
      : n_(n_qubits), amp_(std::move(amplitudes)) {
    if (amp_.size() != (std::size_t{1} << n_qubits))
      throw InvalidArgument("amplitude vector has wrong dimension");
  }

  int n_qubits() const noexcept { return n_; }
  std::size_t dim() const noexcept { return amp_.size(); }
  std::span<const Complex> amplitudes() const noexcept { return amp_; }
  std::span<Complex> amplitudes() noexcept { return amp_; }
  Complex operator[](std::size_t i) const { return amp_[i]; }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& a : amp_) s += std::norm(a);
    return s;
  }

  void reset() {
    std::fill(amp_.begin(), amp_.end(), Complex{0.0, 0.0});
    amp_[0] = 1.0;
  }

  void apply_matrix(int q, const Matrix2& u) {
    const std::size_t stride = std::size_t{1} << q;
    const std::size_t dim = amp_.size();
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
      for (std::size_t i = base; i < base + stride; ++i) {
        const Complex a0 = amp_[i], a1 = amp_[i + stride];
        amp_[i] = u[0] * a0 + u[1] * a1;
        amp_[i + stride] = u[2] * a0 + u[3] * a1;
      }
    }
  }

  void apply_ry(int q, double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    const std::size_t stride = std::size_t{1} << q;
    for (std::size_t base = 0; base < amp_.size(); base += 2 * stride) {
      for (std::size_t i = base; i < base + stride; ++i) {
        const Complex a0 = amp_[i], a1 = amp_[i + stride];
        amp_[i] = c * a0 - s * a1;
        amp_[i + stride] = s * a0 + c * a1;
      }
    }
  }

  void apply_phase(int q, Complex phase0, Complex phase1) {
    const std::size_t bit = std::size_t{1} << q;
    for (std::size_t i = 0; i < amp_.size(); ++i)
      amp_[i] *= (i & bit) ? phase1 : phase0;
  }

  void apply_x(int q) {
    const std::size_t stride = std::size_t{1} << q;
    for (std::size_t base = 0; base < amp_.size(); base += 2 * stride)
      for (std::size_t i = base; i < base + stride; ++i)
        std::swap(amp_[i], amp_[i + stride]);
  }

  void apply_cz(int a, int b) {
    const std::size_t mask = (std::size_t{1} << a) | (std::size_t{1} << b);
    for (std::size_t i = 0; i < amp_.size(); ++i)
      if ((i & mask) == mask) amp_[i] = -amp_[i];
  }

  void apply_cnot(int control, int target) {
    const std::size_t cbit = std::size_t{1} << control;
    const std::size_t tbit = std::size_t{1} << target;
    for (std::size_t i = 0; i < amp_.size(); ++i)
      if ((i & cbit) && !(i & tbit)) std::swap(amp_[i], amp_[i | tbit]);
  }

  /// Pauli 1 = X, 2 = Y, 3 = Z (0 is identity).
  void apply_pauli(int q, int pauli) {
    using namespace std::complex_literals;
    switch (pauli) {
      case 1: apply_x(q); break;
      case 2: apply_matrix(q, {0.0, -1i, 1i, 0.0}); break;
      case 3: apply_phase(q, 1.0, -1.0); break;
      default: break;
    }
  }

  bool operator==(const StateVector&) const = default;

 private:
  int n_ = 0;
  std::vector<Complex> amp_;
};

inline void apply_gate_inplace(StateVector& s, const Gate& g) {
  validate_gate(g, s.n_qubits());
  switch (g.kind) {
    case GateKind::kRy: s.apply_ry(g.q0, g.angle); break;
    case GateKind::kRz: {
      const Complex e = std::polar(1.0, g.angle / 2);
      s.apply_phase(g.q0, std::conj(e), e);
      break;
    }
    case GateKind::kX: s.apply_x(g.q0); break;
    case GateKind::kSqrtX:
    case GateKind::kH: s.apply_matrix(g.q0, single_qubit_matrix(g)); break;
    case GateKind::kCZ: s.apply_cz(g.q0, g.q1); break;
    case GateKind::kCNOT: s.apply_cnot(g.q0, g.q1); break;
  }
}

inline StateVector apply_gate(StateVector s, const Gate& g) {
  apply_gate_inplace(s, g);
  return s;
}

/// Gates whose product is the adjoint of g (sqrt(X)^dagger = X sqrt(X)).
inline std::vector<Gate> adjoint(const Gate& g) {
  Gate inv = g;
  switch (g.kind) {
    case GateKind::kRy:
    case GateKind::kRz: inv.angle = -g.angle; return {inv};
    case GateKind::kSqrtX: return {Gate::sx(g.q0), Gate::x(g.q0)};
    default: return {inv};
  }
}

inline void run_circuit_inplace(StateVector& s, const Circuit& c) {
  if (c.n_qubits != s.n_qubits())
    throw InvalidArgument("circuit width " + std::to_string(c.n_qubits) +
                          " does not match state width " +
                          std::to_string(s.n_qubits()));
  for (const auto& g : c.gates) apply_gate_inplace(s, g);
}

inline StateVector run_circuit(const Circuit& c) {
  StateVector s(c.n_qubits);
  run_circuit_inplace(s, c);
  return s;
}

inline StateVector run_circuit(const Circuit& c, StateVector initial) {
  run_circuit_inplace(initial, c);
  return initial;
}

inline std::uint64_t qubit_mask(std::span<const int> targets, int n_qubits) {
  if (targets.empty())
    throw InvalidArgument("Z-string expectation needs at least one target");
  std::uint64_t mask = 0;
  for (int q : targets) {
    if (q < 0 || q >= n_qubits)
      throw InvalidArgument("target qubit " + std::to_string(q) +
                            " out of range");
    mask |= std::uint64_t{1} << q;
  }
  return mask;
}

/// <psi| prod_{q in targets} Z_q |psi>. Duplicate targets cancel (Z^2 = I)
/// only through the mask, i.e. they are treated as a set.
inline double expectation_pauli_z(const StateVector& s,
                                  std::span<const int> targets) {
  const auto mask = qubit_mask(targets, s.n_qubits());
  const auto amp = s.amplitudes();
  double e = 0.0;
  for (std::size_t i = 0; i < amp.size(); ++i) {
    const double p = std::norm(amp[i]);
    e += (std::popcount(i & mask) & 1) ? -p : p;
  }
  return e;
}

inline double expectation_pauli_z(const StateVector& s,
                                  std::initializer_list<int> targets) {
  return expectation_pauli_z(s, std::span<const int>(targets.begin(),
                                                     targets.size()));
}

}  // namespace lccvqe
