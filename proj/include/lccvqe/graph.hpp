#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lccvqe/error.hpp"
#include "lccvqe/rng.hpp"

namespace lccvqe {

using Edge = std::pair<int, int>;

enum class GeneratorKind { kCustom, kGnp, kRegular };

struct GeneratorMeta {
  GeneratorKind kind = GeneratorKind::kCustom;
  double p = 0.0;  // G(n, p) edge probability
  int degree = 0;  // d-regular degree
  std::uint64_t seed = 0;

  bool operator==(const GeneratorMeta&) const = default;
};

inline std::string to_string(GeneratorKind k) {
  switch (k) {
    case GeneratorKind::kGnp: return "er";
    case GeneratorKind::kRegular: return "reg";
    case GeneratorKind::kCustom: break;
  }
  return "custom";
}

/// Undirected, unweighted simple graph. Edges are stored as (u, v) with
/// u < v in lexicographic order, so two instances compare equal iff they
/// have the same vertex count and edge set.
class MaxCutInstance {
 public:
  MaxCutInstance() = default;

  MaxCutInstance(int n, std::vector<Edge> edges, GeneratorMeta meta = {})
      : n_(n), edges_(std::move(edges)), meta_(meta) {
    if (n < 0) throw InvalidArgument("vertex count must be non-negative");
    for (auto& [u, v] : edges_) {
      if (u < 0 || v < 0 || u >= n || v >= n)
        throw InvalidArgument("edge endpoint out of range: (" +
                              std::to_string(u) + ", " + std::to_string(v) +
                              ")");
      if (u == v)
        throw InvalidArgument("self-loop on vertex " + std::to_string(u));
      if (u > v) std::swap(u, v);
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
      throw InvalidArgument("duplicate edge");
  }

  int n() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const GeneratorMeta& meta() const noexcept { return meta_; }

  std::vector<int> degrees() const {
    std::vector<int> deg(static_cast<std::size_t>(n_), 0);
    for (auto [u, v] : edges_) {
      ++deg[u];
      ++deg[v];
    }
    return deg;
  }

  /// Short identifier, e.g. "er_n10_p0.5_s3" or "reg_n12_d3_s0".
  std::string id() const {
    std::ostringstream os;
    os << to_string(meta_.kind) << "_n" << n_;
    if (meta_.kind == GeneratorKind::kGnp) os << "_p" << meta_.p;
    if (meta_.kind == GeneratorKind::kRegular) os << "_d" << meta_.degree;
    if (meta_.kind != GeneratorKind::kCustom) os << "_s" << meta_.seed;
    else os << "_m" << edges_.size();
    return os.str();
  }

  bool operator==(const MaxCutInstance& o) const {
    return n_ == o.n_ && edges_ == o.edges_;
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  GeneratorMeta meta_;
};

/// Bit vector x with x_i in {0, 1}.
using Assignment = std::vector<std::uint8_t>;

inline Assignment complement(const Assignment& a) {
  Assignment out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] ? 0 : 1;
  return out;
}

inline int cut_value(const MaxCutInstance& g, const Assignment& a) {
  if (a.size() != static_cast<std::size_t>(g.n()))
    throw InvalidArgument("assignment length " + std::to_string(a.size()) +
                          " does not match vertex count " +
                          std::to_string(g.n()));
  int cut = 0;
  for (auto [u, v] : g.edges()) cut += (a[u] != a[v]) ? 1 : 0;
  return cut;
}

struct BruteForceResult {
  int value = 0;
  Assignment witness;
};

inline constexpr int kBruteForceCap = 26;

/// Exhaustive maximum cut. Vertex 0 is pinned to side 0 (complement
/// symmetry) and the remaining 2^(n-1) assignments are walked in Gray-code
/// order with O(1) incremental cut updates.
inline BruteForceResult max_cut_bruteforce(const MaxCutInstance& g,
                                           int cap = kBruteForceCap) {
  const int n = g.n();
  if (n > cap)
    throw SizeLimitError("brute force limited to n <= " + std::to_string(cap) +
                         ", got n = " + std::to_string(n));
  BruteForceResult best;
  best.witness.assign(static_cast<std::size_t>(n), 0);
  if (n <= 1 || g.num_edges() == 0) return best;

  std::vector<std::uint32_t> nbr(static_cast<std::size_t>(n), 0);
  for (auto [u, v] : g.edges()) {
    nbr[u] |= 1u << v;
    nbr[v] |= 1u << u;
  }
  std::uint32_t x = 0;
  std::uint32_t best_x = 0;
  int cut = 0;
  const std::uint64_t steps = 1ULL << (n - 1);
  for (std::uint64_t k = 1; k < steps; ++k) {
    // Gray code g(k) = k ^ (k >> 1) flips bit ctz(k) of the free bits 1..n-1.
    const int v = std::countr_zero(k) + 1;
    const std::uint32_t bit = 1u << v;
    const std::uint32_t other_side = (x & bit) ? ~x : x;
    const int crossing = std::popcount(nbr[v] & other_side);
    cut += std::popcount(nbr[v]) - 2 * crossing;
    x ^= bit;
    if (cut > best.value) {
      best.value = cut;
      best_x = x;
    }
  }
  for (int i = 0; i < n; ++i) best.witness[i] = (best_x >> i) & 1u;
  return best;
}

inline MaxCutInstance gen_gnp(int n, double p, std::uint64_t seed) {
  if (n < 0) throw InvalidArgument("vertex count must be non-negative");
  if (!(p >= 0.0 && p <= 1.0))
    throw InvalidArgument("edge probability must lie in [0, 1]");
  Rng rng(seed);
  std::vector<Edge> edges;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.uniform() < p) edges.emplace_back(u, v);
  return MaxCutInstance(n, std::move(edges),
                        {GeneratorKind::kGnp, p, 0, seed});
}

/// Random simple d-regular graph from the pairing (configuration) model.
/// Each round shuffles the open stubs and pairs neighbours, rejecting pairs
/// that would form a self-loop or a repeated edge; rejected stubs go back to
/// the pool. If the pool can no longer produce any legal pair, the attempt
/// is discarded and restarted.
inline MaxCutInstance gen_regular(int n, int d, std::uint64_t seed,
                                  int max_attempts = 1000) {
  if (n <= 0 || d < 0) throw InvalidArgument("need n > 0 and d >= 0");
  if (d >= n)
    throw InvalidArgument("degree " + std::to_string(d) +
                          " must be below vertex count " + std::to_string(n));
  if ((static_cast<long>(n) * d) % 2 != 0)
    throw InvalidArgument("n * d must be even for a d-regular graph");
  const GeneratorMeta meta{GeneratorKind::kRegular, 0.0, d, seed};
  if (d == 0) return MaxCutInstance(n, {}, meta);

  Rng rng(seed);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::set<Edge> edges;
    std::vector<int> stubs;
    stubs.reserve(static_cast<std::size_t>(n) * d);
    for (int k = 0; k < d; ++k)
      for (int v = 0; v < n; ++v) stubs.push_back(v);

    bool stuck = false;
    while (!stubs.empty()) {
      rng.shuffle(stubs.begin(), stubs.end());
      std::map<int, int> leftover;
      for (std::size_t s = 0; s + 1 < stubs.size(); s += 2) {
        int u = stubs[s], v = stubs[s + 1];
        if (u > v) std::swap(u, v);
        if (u != v && !edges.contains({u, v})) {
          edges.insert({u, v});
        } else {
          ++leftover[u];
          ++leftover[v];
        }
      }
      if (leftover.empty()) break;
      // Some pair of distinct leftover vertices must still be joinable.
      bool joinable = false;
      for (auto a = leftover.begin(); a != leftover.end() && !joinable; ++a)
        for (auto b = std::next(a); b != leftover.end(); ++b)
          if (!edges.contains({a->first, b->first})) {
            joinable = true;
            break;
          }
      if (!joinable) {
        stuck = true;
        break;
      }
      stubs.clear();
      for (auto [v, count] : leftover)
        for (int k = 0; k < count; ++k) stubs.push_back(v);
    }
    if (!stuck)
      return MaxCutInstance(n, std::vector<Edge>(edges.begin(), edges.end()),
                            meta);
  }
  throw RetryExhausted("no simple " + std::to_string(d) + "-regular graph on " +
                       std::to_string(n) + " vertices after " +
                       std::to_string(max_attempts) + " attempts");
}

// ---------------------------------------------------------------------------
// Edge-list files: first line "n m", then m lines "u v". Lines starting with
// '#' are comments. Generator metadata is written to a sidecar "<path>.meta"
// holding a single comment line:
//   # generator=er n=10 p=0.5 seed=3

inline std::string meta_comment(const MaxCutInstance& g) {
  std::ostringstream os;
  os << "# generator=" << to_string(g.meta().kind) << " n=" << g.n();
  if (g.meta().kind == GeneratorKind::kGnp) os << " p=" << g.meta().p;
  if (g.meta().kind == GeneratorKind::kRegular)
    os << " d=" << g.meta().degree;
  os << " seed=" << g.meta().seed;
  return os.str();
}

inline std::string to_edge_list(const MaxCutInstance& g) {
  std::ostringstream os;
  os << g.n() << ' ' << g.num_edges() << '\n';
  for (auto [u, v] : g.edges()) os << u << ' ' << v << '\n';
  return os.str();
}

inline GeneratorMeta parse_meta_comment(const std::string& line) {
  GeneratorMeta meta;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "generator") {
      meta.kind = val == "er"    ? GeneratorKind::kGnp
                  : val == "reg" ? GeneratorKind::kRegular
                                 : GeneratorKind::kCustom;
    } else if (key == "p") {
      meta.p = std::stod(val);
    } else if (key == "d") {
      meta.degree = std::stoi(val);
    } else if (key == "seed") {
      meta.seed = std::stoull(val);
    }
  }
  return meta;
}

inline MaxCutInstance parse_edge_list(std::istream& in,
                                      GeneratorMeta meta = {}) {
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError("edge list: missing header line 'n m'");
  long n = -1, m = -1;
  {
    std::istringstream is(line);
    if (!(is >> n >> m) || n < 0 || m < 0)
      throw ParseError("edge list line " + std::to_string(lineno) +
                       ": expected 'n m'");
  }
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(m));
  for (long k = 0; k < m; ++k) {
    if (!next_line())
      throw ParseError("edge list: expected " + std::to_string(m) +
                       " edges, found " + std::to_string(k));
    std::istringstream is(line);
    int u, v;
    if (!(is >> u >> v))
      throw ParseError("edge list line " + std::to_string(lineno) +
                       ": expected 'u v'");
    edges.emplace_back(u, v);
  }
  try {
    return MaxCutInstance(static_cast<int>(n), std::move(edges), meta);
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("edge list: ") + e.what());
  }
}

inline void write_edge_list(const MaxCutInstance& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << to_edge_list(g);
  std::ofstream meta(path + ".meta");
  if (!meta) throw IoError("cannot write " + path + ".meta");
  meta << meta_comment(g) << '\n';
}

inline MaxCutInstance read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  GeneratorMeta meta;
  if (std::ifstream side(path + ".meta"); side) {
    std::string line;
    std::getline(side, line);
    meta = parse_meta_comment(line);
  }
  return parse_edge_list(in, meta);
}

}  // namespace lccvqe
