#include "concavelr/limit_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "concavelr/data_model.hpp"
#include "concavelr/error.hpp"
#include "concavelr/numeric.hpp"
#include "concavelr/parallel.hpp"
#include "concavelr/version.hpp"

namespace concavelr {
namespace {

constexpr double kTauTol = 1e-6;

std::size_t cells_per_side(double c, double h) {
  if (!(c > 0.0) || !(h > 0.0) || !std::isfinite(c) || !std::isfinite(h)) {
    throw DataError("limit path: c and h must be positive");
  }
  const double ratio = c / h;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * ratio) {
    throw DataError("limit path: c/h must be a positive integer");
  }
  return static_cast<std::size_t>(n);
}

// Fine grid with s[2N+1] == 0 exactly.
std::vector<double> fine_grid(std::size_t n_side, double h) {
  const std::size_t size = 4 * n_side + 3;
  const double zero = static_cast<double>(2 * n_side + 1);
  std::vector<double> s(size);
  for (std::size_t k = 0; k < size; ++k) s[k] = (static_cast<double>(k) - zero) * (0.5 * h);
  return s;
}

void fill_x(LimitPath& p) {
  p.x.resize(p.s.size());
  for (std::size_t k = 0; k < p.s.size(); ++k) {
    const double t = p.s[k];
    p.x[k] = p.sigma * p.w[k] - 4.0 * p.a * t * t * t;
  }
}

// Fit values on the fine grid: exact at odd points, linear at even interior
// points and flat beyond the outermost fit points.
std::vector<double> fine_fit(const std::vector<double>& fit) {
  const std::size_t m = fit.size();
  std::vector<double> out(2 * m + 1);
  out[0] = fit.front();
  for (std::size_t j = 0; j < m; ++j) {
    out[2 * j + 1] = fit[j];
    if (j + 1 < m) out[2 * j + 2] = 0.5 * (fit[j] + fit[j + 1]);
  }
  out[2 * m] = fit.back();
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<double> LimitPath::grid() const {
  std::vector<double> t(cells());
  for (std::size_t j = 0; j < t.size(); ++j) t[j] = s[2 * j + 1];
  return t;
}

std::vector<double> LimitPath::targets() const {
  std::vector<double> y(cells());
  for (std::size_t j = 0; j < y.size(); ++j) y[j] = (x[2 * j + 2] - x[2 * j]) / h;
  return y;
}

ConeProblem LimitPath::problem(bool pinned) const {
  ConeProblem p;
  p.grid = grid();
  p.targets = targets();
  p.weights.assign(p.grid.size(), h);
  if (pinned) p.pinned = zero_cell();
  return p;
}

LimitPath simulate_path(double c, double h, double a, double sigma, std::uint64_t seed) {
  const std::size_t n_side = cells_per_side(c, h);
  if (!(a >= 0.0) || !(sigma >= 0.0) || !std::isfinite(a) || !std::isfinite(sigma)) {
    throw DataError("limit path: a and sigma must be finite and nonnegative");
  }
  LimitPath p;
  p.c = c;
  p.h = h;
  p.a = a;
  p.sigma = sigma;
  p.seed = seed;
  p.s = fine_grid(n_side, h);
  const std::size_t size = p.s.size();
  const std::size_t zero = 2 * n_side + 1;
  p.w.assign(size, 0.0);
  std::mt19937_64 rng = replication_rng(seed, 0);
  std::normal_distribution<double> normal;
  const double sd = std::sqrt(0.5 * h);
  for (std::size_t k = zero + 1; k < size; ++k) p.w[k] = p.w[k - 1] + sd * normal(rng);
  for (std::size_t k = zero; k-- > 0;) p.w[k] = p.w[k + 1] + sd * normal(rng);
  fill_x(p);
  return p;
}

LimitPath refine(const LimitPath& path, std::uint64_t seed) {
  const std::size_t n_side = path.cells() / 2;
  LimitPath p;
  p.c = path.c;
  p.h = 0.5 * path.h;
  p.a = path.a;
  p.sigma = path.sigma;
  p.seed = seed;
  p.s = fine_grid(2 * n_side, p.h);
  p.w.assign(p.s.size(), 0.0);
  std::mt19937_64 rng = replication_rng(seed, 1);
  std::normal_distribution<double> normal;
  const double sd = std::sqrt(path.h / 8.0);
  // Old fine point i sits at new index 2i - 1; new even points are bridges.
  for (std::size_t i = 1; i + 1 < path.w.size(); ++i) p.w[2 * i - 1] = path.w[i];
  for (std::size_t i = 0; i + 1 < path.w.size(); ++i) {
    p.w[2 * i] = 0.5 * (path.w[i] + path.w[i + 1]) + sd * normal(rng);
  }
  fill_x(p);
  return p;
}

LimitPath scaled_path(const LimitPath& canonical, double a, double sigma) {
  if (!(a > 0.0) || !(sigma > 0.0)) throw DataError("scaled_path: a and sigma must be positive");
  const double g2 = std::pow(sigma / a, 0.4);
  LimitPath p;
  p.c = canonical.c * g2;
  p.h = canonical.h * g2;
  p.a = a;
  p.sigma = sigma;
  p.seed = canonical.seed;
  p.s.resize(canonical.s.size());
  p.w.resize(canonical.w.size());
  const double root = std::sqrt(g2);
  for (std::size_t k = 0; k < p.s.size(); ++k) {
    p.s[k] = canonical.s[k] * g2;
    p.w[k] = canonical.w[k] * root;
  }
  fill_x(p);
  return p;
}

std::vector<double> invelope_unconstrained(const LimitPath& path) {
  return project(path.problem(false)).fitted;
}

std::vector<double> invelope_constrained(const LimitPath& path) {
  return project(path.problem(true)).fitted;
}

double dee_draw(const LimitPath& path, const std::vector<double>& fit,
                const std::vector<double>& fit0, double b) {
  if (!(b > 0.0) || !(b <= path.c)) throw DataError("dee_draw: need 0 < b <= c");
  const auto t = path.grid();
  if (fit.size() != t.size() || fit0.size() != t.size()) {
    throw DataError("dee_draw: fit has wrong length");
  }
  const double edge = b * (1.0 + 1e-12);
  CompensatedSum d;
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (std::abs(t[j]) <= edge) d += path.h * (fit[j] * fit[j] - fit0[j] * fit0[j]);
  }
  return d.value();
}

double dee_draw(const LimitPath& path, double b) {
  return dee_draw(path, invelope_unconstrained(path), invelope_constrained(path), b);
}

double default_invelope_tol(const LimitPath& path) { return 2.0 * path.h; }

InvelopeCheckReport invelope_check(const LimitPath& path, const std::vector<double>& fit,
                                   InvelopeMode mode, double b, double tol) {
  const std::size_t m = path.cells();
  if (fit.size() != m) throw DataError("invelope_check: fit has wrong length");
  if (!(b > 0.0) || !(b < path.c)) throw DataError("invelope_check: need 0 < b < c");

  InvelopeCheckReport rep;
  rep.mode = mode;
  rep.tol = tol;

  const auto& s = path.s;
  const std::size_t size = s.size();
  const double delta = 0.5 * path.h;
  const std::vector<double> rf = fine_fit(fit);

  // Q = (second primitive of the fit) - (primitive of X), both from s[0].
  std::vector<double> q(size, 0.0);
  {
    CompensatedSum r1, r2, y;
    double r1_prev = 0.0;
    for (std::size_t k = 0; k + 1 < size; ++k) {
      r1 += delta * 0.5 * (rf[k] + rf[k + 1]);
      const double r1_next = r1.value();
      r2 += delta * 0.5 * (r1_prev + r1_next) - delta * delta * (rf[k + 1] - rf[k]) / 12.0;
      y += delta * 0.5 * (path.x[k] + path.x[k + 1]);
      q[k + 1] = r2.value() - y.value();
      r1_prev = r1_next;
    }
  }

  const auto t = path.grid();
  const double edge = b * (1.0 + 1e-12);
  std::vector<std::size_t> knots;
  for (std::size_t j : active_knots(t, fit, kTauTol)) {
    if (j > 0 && j + 1 < m) knots.push_back(j);
  }
  auto slope_change = [&](std::size_t j) {
    return ((fit[j + 1] - fit[j]) - (fit[j] - fit[j - 1])) / path.h;
  };
  // Q minus its chord through fine indices ka and kb.
  auto excess = [&](std::size_t k, std::size_t ka, std::size_t kb) {
    if (ka == kb) return q[k] - q[ka];
    const double lam = (s[k] - s[ka]) / (s[kb] - s[ka]);
    return q[k] - (q[ka] + lam * (q[kb] - q[ka]));
  };

  if (mode == InvelopeMode::kConstrained) {
    const std::size_t zc = path.zero_cell();
    const std::size_t zf = 2 * zc + 1;
    std::size_t jr = m, jl = m;
    for (std::size_t j : knots) {
      if (j >= zc && jr == m) jr = j;
      if (j <= zc) jl = j;
    }
    if (jr == m || jl == m) {
      rep.degenerate = true;
      rep.pass = false;
      return rep;
    }
    rep.tau_right = t[jr];
    rep.tau_left = t[jl];
    const std::size_t kr = 2 * jr + 1, kl = 2 * jl + 1;
    const std::size_t k_end = size - 1;
    auto e_right = [&](std::size_t k) { return excess(k, kr, k_end); };
    auto e_left = [&](std::size_t k) { return excess(k, kl, 0); };

    rep.middle_gap = e_right(zf) - e_left(zf);
    double right_max = -std::numeric_limits<double>::infinity();
    double left_max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < size; ++k) {
      if (std::abs(s[k]) > edge) continue;
      if (k >= zf) right_max = std::max(right_max, e_right(k));
      if (k <= zf) left_max = std::max(left_max, e_left(k));
    }
    rep.max_excursion_right = right_max;
    rep.max_excursion_left = left_max;
    rep.max_excursion = std::max(right_max, left_max);
    CompensatedSum il, ir, vl, vr;
    for (std::size_t j : knots) {
      if (std::abs(t[j]) > edge) continue;
      const std::size_t k = 2 * j + 1;
      const double dc = slope_change(j);
      if (j >= zc) {
        ir += e_right(k) * dc;
        vr += std::abs(dc);
      }
      if (j <= zc) {
        il += e_left(k) * dc;
        vl += std::abs(dc);
      }
    }
    rep.integral_left = vl.value() > 0.0 ? il.value() / vl.value() : 0.0;
    rep.integral_right = vr.value() > 0.0 ? ir.value() / vr.value() : 0.0;
    rep.pass = std::abs(rep.middle_gap) <= tol && rep.max_excursion <= tol &&
               std::abs(rep.integral_left) <= tol && std::abs(rep.integral_right) <= tol;
    return rep;
  }

  std::vector<std::size_t> inside;
  for (std::size_t j : knots) {
    if (std::abs(t[j]) <= edge) inside.push_back(j);
  }
  if (inside.size() < 2) {
    rep.degenerate = true;
    rep.pass = false;
    return rep;
  }
  rep.tau_left = t[inside.front()];
  rep.tau_right = t[inside.back()];
  const std::size_t ka = 2 * inside.front() + 1, kb = 2 * inside.back() + 1;
  double emax = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < size; ++k) {
    if (std::abs(s[k]) <= edge) emax = std::max(emax, excess(k, ka, kb));
  }
  rep.max_excursion = emax;
  CompensatedSum integral, variation;
  for (std::size_t j : inside) {
    integral += excess(2 * j + 1, ka, kb) * slope_change(j);
    variation += std::abs(slope_change(j));
  }
  const double normalized = variation.value() > 0.0 ? integral.value() / variation.value() : 0.0;
  rep.integral_left = rep.integral_right = normalized;
  const double vmax = max_abs(fit);
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < m; ++j) {
    if (vmax > 0.0) worst = std::max(worst, slope_change(j) * path.h / (2.0 * vmax));
  }
  rep.concavity = worst;
  rep.pass = rep.max_excursion <= tol && std::abs(normalized) <= tol &&
             worst <= kConcavityTol;
  return rep;
}

CanonicalFit rescale_canonical(const std::vector<double>& t, const std::vector<double>& fit,
                               double a, double sigma) {
  if (!(a > 0.0) || !(sigma > 0.0)) {
    throw DataError("rescale_canonical: a and sigma must be positive");
  }
  if (t.size() != fit.size()) throw DataError("rescale_canonical: size mismatch");
  CanonicalFit out;
  out.gamma1 = std::pow(a / sigma, 0.6) / sigma;
  out.gamma2 = std::pow(sigma / a, 0.4);
  const double identity = out.gamma1 * std::pow(out.gamma2, 1.5) * sigma;
  if (std::abs(identity - 1.0) > 1e-12) {
    throw SolverError("rescale_canonical: scaling identity violated");
  }
  const double factor = out.gamma1 * out.gamma2 * out.gamma2;
  out.u.resize(t.size());
  out.values.resize(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) {
    out.u[j] = t[j] / out.gamma2;
    out.values[j] = factor * fit[j];
  }
  return out;
}

CriticalTable::CriticalTable(std::vector<double> draws, TableMetadata meta)
    : draws_(std::move(draws)), meta_(std::move(meta)) {
  if (draws_.empty()) throw TableError("critical table: no draws");
  std::sort(draws_.begin(), draws_.end());
  meta_.M = draws_.size();
}

double CriticalTable::quantile(double p) const {
  if (draws_.empty()) throw TableError("critical table: empty");
  if (!(p >= 0.0 && p <= 1.0)) throw DataError("quantile: p must lie in [0, 1]");
  const double M = static_cast<double>(draws_.size());
  const double idx = std::ceil(p * M) - 1.0;
  const std::size_t k = idx <= 0.0 ? 0 : std::min(static_cast<std::size_t>(idx), draws_.size() - 1);
  return draws_[k];
}

double CriticalTable::ecdf(double v) const {
  if (draws_.empty()) throw TableError("critical table: empty");
  const auto it = std::upper_bound(draws_.begin(), draws_.end(), v);
  return static_cast<double>(it - draws_.begin()) / static_cast<double>(draws_.size());
}

double CriticalTable::upper_tail(double v) const {
  if (draws_.empty()) throw TableError("critical table: empty");
  const auto it = std::lower_bound(draws_.begin(), draws_.end(), v);
  return static_cast<double>(draws_.end() - it) / static_cast<double>(draws_.size());
}

std::filesystem::path table_sidecar(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".json");
  return p;
}

void CriticalTable::save(const std::filesystem::path& csv) const {
  std::ofstream out(csv, std::ios::binary);
  if (!out) throw TableError("cannot write table " + csv.string());
  out << "p,quantile\n";
  const std::size_t M = draws_.size();
  for (std::size_t k = 1; k <= M; ++k) {
    out << format_double(static_cast<double>(k) / static_cast<double>(M)) << ','
        << format_double(draws_[k - 1]) << '\n';
  }
  if (!out) throw TableError("failed writing table " + csv.string());

  nlohmann::ordered_json meta;
  meta["M"] = M;
  meta["c"] = meta_.c;
  meta["h"] = meta_.h;
  meta["b"] = meta_.b;
  meta["seed"] = meta_.seed;
  meta["code_version"] = meta_.code_version;
  std::ofstream side(table_sidecar(csv), std::ios::binary);
  if (!side) throw TableError("cannot write table metadata for " + csv.string());
  side << meta.dump(2) << '\n';
}

CriticalTable CriticalTable::load(const std::filesystem::path& csv) {
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw TableError("critical table not found: " + csv.string());
  std::string line;
  if (!std::getline(in, line)) throw TableError("critical table is empty: " + csv.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "p,quantile") throw TableError("critical table header must be 'p,quantile'");
  std::vector<double> draws;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw TableError("critical table line " + std::to_string(lineno) + ": expected p,quantile");
    }
    char* end = nullptr;
    const std::string value = line.substr(comma + 1);
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || !std::isfinite(v)) {
      throw TableError("critical table line " + std::to_string(lineno) + ": bad quantile");
    }
    if (!draws.empty() && v < draws.back()) {
      throw TableError("critical table quantiles must be nondecreasing");
    }
    draws.push_back(v);
  }
  if (draws.empty()) throw TableError("critical table has no rows: " + csv.string());

  TableMetadata meta;
  const auto side = table_sidecar(csv);
  if (std::filesystem::exists(side)) {
    try {
      std::ifstream js(side);
      const auto j = nlohmann::json::parse(js);
      meta.c = j.at("c").get<double>();
      meta.h = j.at("h").get<double>();
      meta.b = j.at("b").get<double>();
      meta.seed = j.at("seed").get<std::uint64_t>();
      meta.code_version = j.value("code_version", std::string{});
      if (j.at("M").get<std::size_t>() != draws.size()) {
        throw TableError("critical table metadata M does not match the row count");
      }
    } catch (const nlohmann::json::exception& e) {
      throw TableError("critical table metadata unreadable: " + std::string(e.what()));
    }
  }
  return CriticalTable(std::move(draws), meta);
}

CriticalTable critical_table(std::size_t M, double c, double h, double b, std::uint64_t seed,
                             unsigned threads) {
  if (M < 1) throw DataError("critical_table: M must be at least 1");
  cells_per_side(c, h);
  if (!(b > 0.0) || !(b <= c)) throw DataError("critical_table: need 0 < b <= c");
  std::vector<double> draws(M);
  parallel_for(M, threads, [&](std::size_t k) {
    const std::uint64_t path_seed = replication_rng(seed, k)();
    draws[k] = dee_draw(simulate_path(c, h, 1.0, 1.0, path_seed), b);
  });
  TableMetadata meta{M, c, h, b, seed, kVersion};
  return CriticalTable(std::move(draws), meta);
}

std::filesystem::path default_table_path() {
  if (const char* env = std::getenv("CONCAVELR_TABLE"); env != nullptr && *env != '\0') {
    return env;
  }
  const std::filesystem::path source = CONCAVELR_SOURCE_TABLE;
  if (std::filesystem::exists(source)) return source;
  return CONCAVELR_INSTALLED_TABLE;
}

}  // namespace concavelr
