#pragma once

// Result tables: one CSV row per trial, a per-instance best file, and the
// statistics behind `summarize`.
//
// File layout (schema 1):
//   # schema=1
//   # <key>: <value>            resolved configuration, one line each
//   instance,n,generator,...    header, then data rows

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lccvqe/error.hpp"

namespace lccvqe {

inline constexpr int kSchemaVersion = 1;

struct ResultRow {
  std::string instance;
  int n = 0;
  std::string generator;
  std::string param;  // p for er, d for reg
  std::uint64_t gen_seed = 0;
  int edges = 0;
  std::string mode;  // evaluator kind, or "gw"
  std::string backend;
  int layers = 0;
  std::string entanglement;
  int trial = 0;  // -1 on error rows
  std::string status = "ok";
  double ar = 0.0;
  double expectation = 0.0;
  double optimum = 0.0;
  std::string optimum_source;  // exact | gw-best
  int best_sampled_cut = 0;
  int evals = 0;
  bool budget_exhausted = false;
  bool routing_fallback = false;
  int max_qubits = 0;
  double wall_seconds = 0.0;

  bool ok() const { return status == "ok"; }
  /// Rows of one (instance, evaluator, layer count) job share this key.
  std::string job_key() const {
    return instance + "|" + mode + "|" + backend + "|" + std::to_string(layers);
  }
  /// Summary grouping, e.g. "noisy-lcc@backend7 L=1".
  std::string group() const {
    std::string g = mode;
    if (!backend.empty()) g += "@" + backend;
    if (layers > 0) g += " L=" + std::to_string(layers);
    return g;
  }
};

inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols = {
      "instance", "n", "generator", "param", "gen_seed", "edges", "mode", "backend",
      "layers", "entanglement", "trial", "status", "ar", "expectation", "optimum",
      "optimum_source", "best_sampled_cut", "evals", "budget_exhausted", "routing",
      "max_qubits", "wall_seconds"};
  return cols;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline std::optional<std::vector<std::string>> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) return std::nullopt;
  out.push_back(std::move(cur));
  return out;
}

inline std::string fmt_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

}  // namespace detail

inline std::string to_csv(const ResultRow& r) {
  using detail::csv_field;
  using detail::fmt_double;
  const std::vector<std::string> f = {
      csv_field(r.instance), std::to_string(r.n), r.generator, r.param,
      std::to_string(r.gen_seed), std::to_string(r.edges), r.mode, csv_field(r.backend),
      std::to_string(r.layers), r.entanglement, std::to_string(r.trial),
      csv_field(r.status), fmt_double(r.ar), fmt_double(r.expectation),
      fmt_double(r.optimum), r.optimum_source, std::to_string(r.best_sampled_cut),
      std::to_string(r.evals), r.budget_exhausted ? "1" : "0",
      r.routing_fallback ? "fallback" : "direct", std::to_string(r.max_qubits),
      fmt_double(r.wall_seconds)};
  std::string line;
  for (std::size_t i = 0; i < f.size(); ++i) line += (i ? "," : "") + f[i];
  return line;
}

inline std::string csv_header() {
  std::string line;
  for (std::size_t i = 0; i < result_columns().size(); ++i)
    line += (i ? "," : "") + result_columns()[i];
  return line;
}

inline ResultRow parse_row(const std::string& line, int lineno) {
  const auto f = detail::split_csv(line);
  const auto where = "csv line " + std::to_string(lineno) + ": ";
  if (!f) throw ParseError(where + "unterminated quote");
  if (f->size() != result_columns().size())
    throw ParseError(where + "expected " + std::to_string(result_columns().size()) +
                     " fields, got " + std::to_string(f->size()));
  const auto& v = *f;
  ResultRow r;
  std::size_t k = 0;
  auto field = [&]() -> const std::string& { return v[k++]; };
  auto num = [&](auto& out) {
    const std::string& s = field();
    const std::string& col = result_columns()[k - 1];
    try {
      std::size_t pos = 0;
      using T = std::decay_t<decltype(out)>;
      if constexpr (std::is_same_v<T, double>) out = std::stod(s, &pos);
      else if constexpr (std::is_same_v<T, std::uint64_t>) out = std::stoull(s, &pos);
      else out = static_cast<T>(std::stol(s, &pos));
      if (pos != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ParseError(where + "bad " + col + " value '" + s + "'");
    }
  };
  r.instance = field();
  num(r.n);
  r.generator = field();
  r.param = field();
  num(r.gen_seed);
  num(r.edges);
  r.mode = field();
  r.backend = field();
  num(r.layers);
  r.entanglement = field();
  num(r.trial);
  r.status = field();
  num(r.ar);
  num(r.expectation);
  num(r.optimum);
  r.optimum_source = field();
  num(r.best_sampled_cut);
  num(r.evals);
  r.budget_exhausted = field() == "1";
  r.routing_fallback = field() == "fallback";
  num(r.max_qubits);
  num(r.wall_seconds);
  return r;
}

struct ResultTable {
  std::vector<std::string> meta;  // comment lines without the leading "# "
  std::vector<ResultRow> rows;
  int schema = 0;
  bool truncated = false;  // a malformed final line was dropped
};

/// Reads a results CSV. With `tolerate_partial`, an unparsable final line
/// (an interrupted write) is dropped instead of raising.
inline ResultTable read_results(std::istream& in, bool tolerate_partial = false) {
  ResultTable t;
  std::string line;
  int lineno = 0;
  bool header = false;
  std::vector<std::pair<int, std::string>> data;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (!header && line.rfind("#", 0) == 0) {
      auto body = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
      if (body.rfind("schema=", 0) == 0) t.schema = std::atoi(body.c_str() + 7);
      else t.meta.push_back(std::move(body));
      continue;
    }
    if (!header) {
      if (t.schema != kSchemaVersion)
        throw ParseError("csv line " + std::to_string(lineno) +
                         ": missing or unsupported '# schema=" +
                         std::to_string(kSchemaVersion) + "' header");
      if (line.back() == '\r') line.pop_back();
      if (line != csv_header())
        throw ParseError("csv line " + std::to_string(lineno) + ": unexpected column header");
      header = true;
      continue;
    }
    data.emplace_back(lineno, line);
  }
  if (!header) throw ParseError("csv: no column header found");
  for (std::size_t i = 0; i < data.size(); ++i) {
    try {
      t.rows.push_back(parse_row(data[i].second, data[i].first));
    } catch (const ParseError&) {
      if (tolerate_partial && i + 1 == data.size()) {
        t.truncated = true;
        break;
      }
      throw;
    }
  }
  return t;
}

inline ResultTable read_results_file(const std::string& path, bool tolerate_partial = false) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  return read_results(in, tolerate_partial);
}

inline void write_results_header(std::ostream& out, const std::vector<std::string>& meta) {
  out << "# schema=" << kSchemaVersion << '\n';
  for (const auto& m : meta) out << "# " << m << '\n';
  out << csv_header() << '\n';
}

/// Highest-AR ok row per job (lowest trial on ties), in first-seen order;
/// jobs with only error rows keep their first error row.
inline std::vector<ResultRow> best_rows(const std::vector<ResultRow>& rows) {
  std::vector<ResultRow> out;
  std::map<std::string, std::size_t> at;
  for (const auto& r : rows) {
    auto [it, fresh] = at.emplace(r.job_key(), out.size());
    if (fresh) {
      out.push_back(r);
      continue;
    }
    auto& b = out[it->second];
    if (r.ok() && (!b.ok() || r.ar > b.ar)) b = r;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

/// Linear-interpolated quantile of sorted data, q in [0, 1].
inline double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("quantile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Least-squares slope of y on x; empty when x has no spread.
inline std::optional<double> fit_slope(const std::vector<double>& x,
                                       const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) return std::nullopt;
  return sxy / sxx;
}

struct GroupStats {
  std::string group;
  int instances = 0;  // with at least one ok row
  int trials = 0;     // ok rows
  int hits = 0;       // ok rows with ar >= threshold
  int errors = 0;     // error rows
  int fallback = 0;   // instances whose circuits needed routing fallback
  double median = 0, mean = 0, q1 = 0, q3 = 0, min = 0, max = 0;  // of best AR
  std::optional<double> slope;  // best AR against n

  double hit_percentage() const { return trials ? 100.0 * hits / trials : 0.0; }
};

struct PairStats {
  std::string a, b;
  int shared = 0;  // instances with ok results in both groups
  int a_wins = 0;  // best AR of a >= best AR of b
};

struct Summary {
  std::vector<ResultRow> best;  // per job
  std::vector<GroupStats> groups;
  std::vector<PairStats> pairs;
};

inline Summary summarize_rows(const std::vector<ResultRow>& rows, double threshold = 0.99) {
  Summary s;
  s.best = best_rows(rows);
  std::vector<std::string> order;
  std::map<std::string, GroupStats> stats;
  std::map<std::string, std::map<std::string, double>> best_by_group;  // group -> instance -> ar
  auto touch = [&](const std::string& g) -> GroupStats& {
    if (!stats.count(g)) {
      order.push_back(g);
      stats[g].group = g;
    }
    return stats[g];
  };
  for (const auto& r : rows) {
    auto& g = touch(r.group());
    if (!r.ok()) {
      ++g.errors;
      continue;
    }
    ++g.trials;
    g.hits += r.ar >= threshold;
  }
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> xy;
  for (const auto& b : s.best) {
    auto& g = touch(b.group());
    if (!b.ok()) continue;
    ++g.instances;
    g.fallback += b.routing_fallback;
    xy[b.group()].first.push_back(b.n);
    xy[b.group()].second.push_back(b.ar);
    best_by_group[b.group()][b.instance] = b.ar;
  }
  for (const auto& name : order) {
    auto g = stats[name];
    auto [x, y] = xy[name];
    if (!y.empty()) {
      auto v = y;
      std::sort(v.begin(), v.end());
      g.median = quantile(v, 0.5);
      g.q1 = quantile(v, 0.25);
      g.q3 = quantile(v, 0.75);
      g.min = v.front();
      g.max = v.back();
      double sum = 0;
      for (double a : v) sum += a;
      g.mean = sum / static_cast<double>(v.size());
      g.slope = fit_slope(x, y);
    }
    s.groups.push_back(g);
  }
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      PairStats p{order[i], order[j], 0, 0};
      for (const auto& [inst, ar] : best_by_group[order[i]]) {
        const auto& other = best_by_group[order[j]];
        auto it = other.find(inst);
        if (it == other.end()) continue;
        ++p.shared;
        p.a_wins += ar >= it->second;
      }
      if (p.shared > 0) s.pairs.push_back(p);
    }
  return s;
}

inline std::string fmt_slope(const std::optional<double>& s) {
  if (!s) return "n/a";
  std::ostringstream os;
  os << std::setprecision(6) << *s;
  return os.str();
}

inline void print_summary(const Summary& s, std::ostream& out, double threshold = 0.99) {
  out << "per-instance best:\n";
  out << "  " << std::left << std::setw(28) << "instance" << std::setw(5) << "n"
      << std::setw(32) << "group" << "best_ar\n";
  for (const auto& b : s.best) {
    out << "  " << std::left << std::setw(28) << b.instance << std::setw(5) << b.n
        << std::setw(32) << b.group();
    if (b.ok()) out << std::fixed << std::setprecision(6) << b.ar << '\n';
    else out << b.status << '\n';
    out.unsetf(std::ios::floatfield);
  }
  out << "groups (best AR per instance):\n";
  for (const auto& g : s.groups) {
    out << "  " << g.group << ": instances=" << g.instances << " trials=" << g.trials
        << " errors=" << g.errors << std::fixed << std::setprecision(4)
        << " median=" << g.median << " mean=" << g.mean << " q1=" << g.q1
        << " q3=" << g.q3 << " min=" << g.min << " max=" << g.max;
    out.unsetf(std::ios::floatfield);
    out << " slope=" << fmt_slope(g.slope) << " hits(ar>=" << threshold
        << ")=" << std::setprecision(4) << g.hit_percentage() << "%";
    if (g.fallback) out << " routing=fallback:" << g.fallback;
    out << '\n';
    out << std::setprecision(6);
  }
  for (const auto& p : s.pairs)
    out << "pair " << p.a << " >= " << p.b << ": " << p.a_wins << " of " << p.shared
        << " instances\n";
}

/// Plot data: one line per (group, instance) with its best AR.
inline void write_plot_data(const Summary& s, std::ostream& out) {
  out << "# schema=" << kSchemaVersion << "\ngroup,instance,n,best_ar\n";
  for (const auto& b : s.best)
    if (b.ok())
      out << detail::csv_field(b.group()) << ',' << detail::csv_field(b.instance) << ','
          << b.n << ',' << detail::fmt_double(b.ar) << '\n';
}

}  // namespace lccvqe
