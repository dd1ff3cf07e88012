#pragma once

// Goemans-Williamson baseline.
//
// The Max-Cut relaxation max sum_(u,v) (1 - <v_u, v_v>) / 2 over unit
// vectors is solved in low rank: rows of an n x r matrix V live on the unit
// sphere, and Riemannian gradient ascent with Armijo backtracking runs until
// the projected gradient norm drops to 1e-6 (or 5000 iterations). Rounding
// cuts the vectors with random Gaussian hyperplanes and keeps the best cut.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "lccvqe/error.hpp"
#include "lccvqe/graph.hpp"
#include "lccvqe/rng.hpp"

namespace lccvqe {

struct GwEmbedding {
  Eigen::MatrixXd vectors;  // n x rank, unit rows
  int rank = 0;
  double residual = 0.0;  // Frobenius norm of the projected gradient
  double value = 0.0;     // relaxation objective at vectors
  int iterations = 0;
};

struct GwResult {
  int best_cut = 0;
  Assignment best_assignment;
  int trials = 0;
  std::vector<int> cuts;  // one per hyperplane
  bool operator==(const GwResult&) const = default;
};

inline constexpr int kGwMaxIterations = 5000;
inline constexpr double kGwTolerance = 1e-6;

inline int gw_rank(int n) {
  return static_cast<int>(std::ceil(std::sqrt(2.0 * n))) + 1;
}

namespace detail {

inline double gw_value(const MaxCutInstance& g, const Eigen::MatrixXd& V) {
  double s = 0.0;
  for (auto [u, v] : g.edges()) s += 0.5 * (1.0 - V.row(u).dot(V.row(v)));
  return s;
}

/// Gradient of the objective projected onto the tangent space at V.
inline Eigen::MatrixXd gw_gradient(const MaxCutInstance& g, const Eigen::MatrixXd& V) {
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(V.rows(), V.cols());
  for (auto [u, v] : g.edges()) {
    G.row(u) -= 0.5 * V.row(v);
    G.row(v) -= 0.5 * V.row(u);
  }
  for (Eigen::Index i = 0; i < V.rows(); ++i) G.row(i) -= G.row(i).dot(V.row(i)) * V.row(i);
  return G;
}

inline void normalize_rows(Eigen::MatrixXd& V) {
  for (Eigen::Index i = 0; i < V.rows(); ++i) V.row(i).normalize();
}

}  // namespace detail

inline GwEmbedding gw_embed(const MaxCutInstance& g, std::uint64_t seed,
                            int max_iterations = kGwMaxIterations) {
  if (g.num_edges() == 0) throw InvalidArgument("gw_embed needs at least one edge");
  const int n = g.n();
  const int r = gw_rank(n);
  Rng rng(seed);
  Eigen::MatrixXd V(n, r);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < r; ++k) V(i, k) = rng.normal();
  detail::normalize_rows(V);

  double f = detail::gw_value(g, V);
  Eigen::MatrixXd G = detail::gw_gradient(g, V);
  double gnorm2 = G.squaredNorm();
  double step = 1.0;
  int it = 0;
  for (; it < max_iterations && std::sqrt(gnorm2) > kGwTolerance; ++it) {
    step *= 2.0;
    Eigen::MatrixXd W;
    double fw = f;
    while (true) {
      W = V + step * G;
      detail::normalize_rows(W);
      fw = detail::gw_value(g, W);
      if (fw >= f + 1e-4 * step * gnorm2 || step < 1e-12) break;
      step *= 0.5;
    }
    if (fw < f) break;  // no ascent possible at machine precision
    V = std::move(W);
    f = fw;
    G = detail::gw_gradient(g, V);
    gnorm2 = G.squaredNorm();
  }
  return {std::move(V), r, std::sqrt(gnorm2), f, it};
}

/// Best of `trials` hyperplane roundings; hyperplane t is drawn from
/// derive_seed(seed, t).
inline GwResult gw_round(const GwEmbedding& emb, const MaxCutInstance& g, int trials,
                         std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("gw_round needs at least one trial");
  if (emb.vectors.rows() != g.n())
    throw InvalidArgument("embedding has " + std::to_string(emb.vectors.rows()) +
                          " vectors for a graph with " + std::to_string(g.n()) +
                          " vertices");
  GwResult res;
  res.trials = trials;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    Eigen::VectorXd normal(emb.vectors.cols());
    for (Eigen::Index k = 0; k < normal.size(); ++k) normal(k) = rng.normal();
    const Eigen::VectorXd side = emb.vectors * normal;
    Assignment a(g.n());
    for (int i = 0; i < g.n(); ++i) a[i] = side(i) < 0 ? 1 : 0;
    const int cut = cut_value(g, a);
    res.cuts.push_back(cut);
    if (t == 0 || cut > res.best_cut) {
      res.best_cut = cut;
      res.best_assignment = std::move(a);
    }
  }
  return res;
}

inline GwResult gw_solve(const MaxCutInstance& g, int trials, std::uint64_t seed) {
  return gw_round(gw_embed(g, derive_seed(seed, 0)), g, trials, derive_seed(seed, 1));
}

}  // namespace lccvqe
