#pragma once

// Derivative-free local minimisation.
//
// kCobyla: Powell's linear-interpolation trust-region method without
// constraints. A simplex of d + 1 points carries a linear model of f; each
// iteration steps down the model gradient from the best vertex. The trust
// radius follows the usual ratio test (halve at <= 0.1, double above 0.7)
// and never drops below the resolution rho; a poor step at radius rho either
// repairs the simplex geometry or halves rho, until rho reaches the
// tolerance. Simplex parameters: alpha = 0.25, beta = 2.1, gamma = 0.5,
// delta = 1.1.
//
// kNelderMead: the classic simplex method with reflection 1, expansion 2,
// contraction 0.5 and shrink 0.5.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "lccvqe/error.hpp"

namespace lccvqe {

enum class Method { kCobyla, kNelderMead };

inline std::string to_string(Method m) {
  return m == Method::kCobyla ? "cobyla" : "nelder-mead";
}

inline Method parse_method(const std::string& s) {
  if (s == "cobyla" || s == "trust-region") return Method::kCobyla;
  if (s == "nelder-mead" || s == "simplex") return Method::kNelderMead;
  throw InvalidArgument("unknown optimizer method '" + s + "'");
}

struct OptimizerConfig {
  Method method = Method::kCobyla;
  std::optional<int> max_evals;  // default 200 d, at most 10000
  double initial_step = 0.5;
  double tolerance = 1e-4;

  int budget(std::size_t d) const {
    if (max_evals) return *max_evals;
    return static_cast<int>(std::min<std::size_t>(200 * d, 10000));
  }

  void validate() const {
    if (max_evals && *max_evals < 1) throw InvalidArgument("max_evals must be >= 1");
    if (!(tolerance > 0)) throw InvalidArgument("tolerance must be positive");
    if (!(initial_step > 0)) throw InvalidArgument("initial_step must be positive");
  }
};

struct MinimizeResult {
  std::vector<double> x;
  double f = 0.0;
  int evals = 0;
  bool budget_exhausted = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

namespace detail {

/// Counts evaluations and remembers the best point seen.
class Counted {
 public:
  Counted(const Objective& f, int budget) : f_(f), budget_(budget) {}

  bool exhausted() const { return evals_ >= budget_; }
  int evals() const { return evals_; }

  double operator()(const Eigen::VectorXd& x) {
    std::vector<double> v(x.data(), x.data() + x.size());
    const double y = f_(v);
    ++evals_;
    if (y < best_f_ || best_x_.empty()) {
      best_f_ = y;
      best_x_ = std::move(v);
    }
    return y;
  }

  MinimizeResult result(bool exhausted) const {
    return {best_x_, best_f_, evals_, exhausted};
  }

 private:
  const Objective& f_;
  int budget_;
  int evals_ = 0;
  double best_f_ = std::numeric_limits<double>::infinity();
  std::vector<double> best_x_;
};

inline MinimizeResult cobyla(const Objective& f, const Eigen::VectorXd& x0,
                             const OptimizerConfig& cfg) {
  constexpr double alpha = 0.25, beta = 2.1, gamma = 0.5, delta = 1.1;
  const auto d = x0.size();
  Counted eval(f, cfg.budget(static_cast<std::size_t>(d)));
  const double rho_end = std::min(cfg.tolerance, cfg.initial_step);
  double rho = cfg.initial_step;

  Eigen::VectorXd xp = x0;  // pivot (best vertex)
  double fp = eval(xp);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(d, d);  // columns: vertex - pivot
  Eigen::VectorXd fv(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (eval.exhausted()) return eval.result(true);
    D(j, j) = rho;
    fv(j) = eval(xp + D.col(j));
  }
  Eigen::MatrixXd S = D.inverse();  // rows s_j: s_j . d_k = [j == k]

  // Replace vertex j by pivot + dx, updating S by Sherman-Morrison.
  auto replace = [&](Eigen::Index j, const Eigen::VectorXd& dx, double fx) {
    const Eigen::VectorXd t = S * dx;
    const Eigen::RowVectorXd sj = S.row(j) / t(j);
    S -= t * sj;
    S.row(j) = sj;
    D.col(j) = dx;
    fv(j) = fx;
  };
  // Make vertex j the pivot.
  auto swap_pivot = [&](Eigen::Index j) {
    const Eigen::VectorXd dj = D.col(j);
    for (Eigen::Index k = 0; k < d; ++k)
      if (k != j) D.col(k) -= dj;
    D.col(j) = -dj;
    const Eigen::RowVectorXd sum = S.colwise().sum();
    S.row(j) = -sum;
    xp += dj;
    std::swap(fp, fv(j));
  };

  // radius: trust-region radius, never below rho. It shrinks on poor steps
  // and grows on very good ones; rho falls only once radius has reached it.
  double radius = rho;
  bool exhausted = false;
  while (true) {
    Eigen::Index jbest = 0;
    if (fv.minCoeff(&jbest) < fp) swap_pivot(jbest);

    const Eigen::VectorXd g = S.transpose() * (fv.array() - fp).matrix();
    const double gnorm = g.norm();
    const bool at_floor = radius <= rho;

    double ratio = 0.0;
    if (gnorm > 0 && std::isfinite(gnorm)) {
      if (eval.exhausted()) {
        exhausted = true;
        break;
      }
      const Eigen::VectorXd s = -radius / gnorm * g;
      const double fs = eval(xp + s);
      ratio = (fp - fs) / (radius * gnorm);

      // Vertex to drop: by default the one whose replacement keeps the
      // largest simplex volume; among replacements that keep the geometry
      // acceptable, prefer the vertex farthest from the pivot (or from the
      // new point after an improvement) beyond delta * radius.
      Eigen::Index jdrop = -1;
      double volume = 0.0;
      Eigen::Index jfar = -1;
      double edge = delta * radius;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double t = std::abs(S.row(j).dot(s));
        if (t > volume) {
          volume = t;
          jdrop = j;
        }
        const double sigma = 1.0 / S.row(j).norm();
        const double sigbar = t * sigma;
        if (sigbar >= alpha * radius || sigbar >= sigma) {
          const double dist = fs < fp ? (s - D.col(j)).norm() : D.col(j).norm();
          if (dist > edge) {
            edge = dist;
            jfar = j;
          }
        }
      }
      if (jfar >= 0) jdrop = jfar;
      if (jdrop >= 0) replace(jdrop, s, fs);

      if (ratio <= 0.1)
        radius = 0.5 * radius;
      else if (ratio <= 0.7)
        radius = std::max(0.5 * radius, rho);
      else
        radius = 2.0 * radius;
      radius = std::min(std::max(radius, rho), cfg.initial_step * 16.0);
      if (radius <= 1.5 * rho) radius = rho;
    }
    if (ratio > 0.1) continue;

    // Poor step: repair the simplex if it is badly shaped, else shrink rho
    // once the radius has come down to it.
    Eigen::Index jfar = -1, jflat = -1;
    double far = beta * radius, flat = alpha * radius;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double eta = D.col(j).norm();
      const double sigma = 1.0 / S.row(j).norm();
      if (eta > far) {
        far = eta;
        jfar = j;
      }
      if (sigma < flat) {
        flat = sigma;
        jflat = j;
      }
    }
    const Eigen::Index jgeo = jfar >= 0 ? jfar : jflat;
    if (jgeo >= 0) {
      if (eval.exhausted()) {
        exhausted = true;
        break;
      }
      Eigen::VectorXd dx = gamma * radius * S.row(jgeo).transpose() / S.row(jgeo).norm();
      if (g.dot(dx) > 0) dx = -dx;
      replace(jgeo, dx, eval(xp + dx));
      continue;
    }
    if (!at_floor) continue;
    if (rho <= rho_end) break;
    rho *= 0.5;
    if (rho <= 1.5 * rho_end) rho = rho_end;
    radius = rho;
    S = D.inverse();  // clear accumulated rounding in the updates
  }
  return eval.result(exhausted);
}

inline MinimizeResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0,
                                  const OptimizerConfig& cfg) {
  const auto d = x0.size();
  Counted eval(f, cfg.budget(static_cast<std::size_t>(d)));
  std::vector<Eigen::VectorXd> pts{x0};
  std::vector<double> fs{eval(x0)};
  for (Eigen::Index j = 0; j < d; ++j) {
    if (eval.exhausted()) return eval.result(true);
    Eigen::VectorXd x = x0;
    x(j) += cfg.initial_step;
    pts.push_back(x);
    fs.push_back(eval(x));
  }
  std::vector<std::size_t> order(pts.size());
  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return fs[a] < fs[b]; });
    const auto best = order.front(), worst = order.back(),
               second = order[order.size() - 2];
    double size = 0.0;
    for (const auto& p : pts) size = std::max(size, (p - pts[best]).norm());
    if (size <= cfg.tolerance) break;
    if (eval.exhausted()) return eval.result(true);

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (auto k : order)
      if (k != worst) centroid += pts[k];
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd xr = centroid + (centroid - pts[worst]);
    const double fr = eval(xr);
    if (fr < fs[best]) {
      if (eval.exhausted()) return eval.result(true);
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[worst]);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        fs[worst] = fe;
      } else {
        pts[worst] = xr;
        fs[worst] = fr;
      }
      continue;
    }
    if (fr < fs[second]) {
      pts[worst] = xr;
      fs[worst] = fr;
      continue;
    }
    if (eval.exhausted()) return eval.result(true);
    const bool outside = fr < fs[worst];
    const Eigen::VectorXd xc = outside ? centroid + 0.5 * (xr - centroid)
                                       : centroid + 0.5 * (pts[worst] - centroid);
    const double fc = eval(xc);
    if (fc < (outside ? fr : fs[worst])) {
      pts[worst] = xc;
      fs[worst] = fc;
      continue;
    }
    for (auto k : order) {
      if (k == best) continue;
      if (eval.exhausted()) return eval.result(true);
      pts[k] = pts[best] + 0.5 * (pts[k] - pts[best]);
      fs[k] = eval(pts[k]);
    }
  }
  return eval.result(false);
}

}  // namespace detail

/// Minimises f from x0. The returned point is the best evaluated one, so
/// f <= f(x0) always; running out of budget sets the flag instead of
/// throwing.
inline MinimizeResult minimize(const Objective& f, const std::vector<double>& x0,
                               const OptimizerConfig& cfg = {}) {
  cfg.validate();
  if (x0.empty()) throw InvalidArgument("minimize needs at least one variable");
  const Eigen::Map<const Eigen::VectorXd> x(x0.data(),
                                            static_cast<Eigen::Index>(x0.size()));
  return cfg.method == Method::kCobyla ? detail::cobyla(f, x, cfg)
                                       : detail::nelder_mead(f, x, cfg);
}

}  // namespace lccvqe
