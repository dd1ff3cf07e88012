#pragma once

// Instance grids. The two built-in tables list (n, generator, p or d, seeds)
// rows; each seed is one instance, generated with our own G(n, p) and
// d-regular generators from that seed.

#include <climits>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lccvqe/error.hpp"
#include "lccvqe/graph.hpp"

namespace lccvqe {

/// One instance: a generator spec, or an edge-list file when `file` is set.
struct InstanceSpec {
  GeneratorKind kind = GeneratorKind::kGnp;
  int n = 0;
  double p = 0.0;
  int degree = 0;
  std::uint64_t seed = 0;
  std::string file;

  MaxCutInstance materialize() const {
    if (!file.empty()) return read_edge_list(file);
    switch (kind) {
      case GeneratorKind::kGnp: return gen_gnp(n, p, seed);
      case GeneratorKind::kRegular: return gen_regular(n, degree, seed);
      case GeneratorKind::kCustom: break;
    }
    throw InvalidArgument("custom instances need an edge-list file");
  }
};

struct TableRow {
  int n = 0;
  GeneratorKind kind = GeneratorKind::kGnp;
  double p = 0.0;
  int degree = 0;
  std::vector<std::uint64_t> seeds;
};

inline const std::vector<TableRow>& noisy_table() {
  using K = GeneratorKind;
  static const std::vector<TableRow> rows = {
      {10, K::kGnp, 0.5, 0, {0, 1, 2, 3}},      {10, K::kRegular, 0, 3, {0, 1, 2, 3}},
      {11, K::kGnp, 0.5, 0, {0, 1, 2, 3}},      {11, K::kRegular, 0, 4, {0, 1, 2, 3}},
      {12, K::kGnp, 0.5, 0, {0, 1, 2, 3}},      {12, K::kRegular, 0, 3, {0, 1, 2, 3}},
      {13, K::kGnp, 0.5, 0, {0, 1}},            {13, K::kRegular, 0, 2, {1, 3}},
      {14, K::kGnp, 0.4, 0, {0, 1}},            {14, K::kRegular, 0, 2, {2, 5}},
      {15, K::kGnp, 0.3, 0, {1, 2}},            {15, K::kRegular, 0, 2, {3, 7}},
      {20, K::kGnp, 0.25, 0, {0, 3, 5, 17}},    {20, K::kRegular, 0, 3, {0, 1, 2, 3}},
      {30, K::kGnp, 0.12, 0, {0, 5}},           {30, K::kRegular, 0, 2, {3, 8}},
      {40, K::kGnp, 0.06, 0, {106, 125}},       {40, K::kRegular, 0, 2, {0, 1}},
      {50, K::kGnp, 0.06, 0, {126, 167, 424, 561}},
      {100, K::kGnp, 0.035, 0, {86520, 769454}}, {100, K::kRegular, 0, 3, {0, 1}},
  };
  return rows;
}

inline const std::vector<TableRow>& noiseless_table() {
  static const std::vector<TableRow> rows = [] {
    std::vector<TableRow> out;
    const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7};
    for (int d = 3; d <= 10; ++d) out.push_back({100, GeneratorKind::kRegular, 0, d, seeds});
    for (double p : {0.1, 0.2, 0.3}) out.push_back({100, GeneratorKind::kGnp, p, 0, seeds});
    return out;
  }();
  return rows;
}

struct DatasetConfig {
  std::string table = "custom";  // noisy-tableI | noiseless-tableII | custom
  std::vector<InstanceSpec> instances;
  int n_min = 0;
  int n_max = INT_MAX;
  int seeds_per_row = 0;  // 0 keeps every seed of a table row
};

inline std::vector<InstanceSpec> dataset_specs(const DatasetConfig& cfg) {
  if (cfg.seeds_per_row < 0) throw InvalidArgument("seeds_per_row must be >= 0");
  std::vector<InstanceSpec> out;
  if (cfg.table == "custom") {
    out = cfg.instances;
  } else {
    const std::vector<TableRow>* rows = nullptr;
    if (cfg.table == "noisy-tableI") rows = &noisy_table();
    else if (cfg.table == "noiseless-tableII") rows = &noiseless_table();
    else throw InvalidArgument("unknown dataset table '" + cfg.table + "'");
    for (const auto& r : *rows) {
      std::size_t k = 0;
      for (auto s : r.seeds) {
        if (cfg.seeds_per_row > 0 && k++ >= static_cast<std::size_t>(cfg.seeds_per_row)) break;
        out.push_back({r.kind, r.n, r.p, r.degree, s, {}});
      }
    }
  }
  std::erase_if(out, [&](const InstanceSpec& s) {
    return s.file.empty() && (s.n < cfg.n_min || s.n > cfg.n_max);
  });
  return out;
}

/// Materializes the dataset; generator failures propagate.
inline std::vector<MaxCutInstance> build_dataset(const DatasetConfig& cfg) {
  std::vector<MaxCutInstance> out;
  for (const auto& s : dataset_specs(cfg)) {
    auto g = s.materialize();
    if (!s.file.empty() && (g.n() < cfg.n_min || g.n() > cfg.n_max)) continue;
    out.push_back(std::move(g));
  }
  return out;
}

/// Writes <dir>/<id>.txt (plus .meta sidecar) per instance; returns paths.
inline std::vector<std::string> write_dataset(const std::vector<MaxCutInstance>& gs,
                                              const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
  std::vector<std::string> paths;
  for (const auto& g : gs) {
    const auto path = (std::filesystem::path(dir) / (g.id() + ".txt")).string();
    write_edge_list(g, path);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace lccvqe
