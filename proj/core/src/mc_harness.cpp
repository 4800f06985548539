#include "concavelr/mc_harness.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "concavelr/error.hpp"
#include "concavelr/lrt.hpp"
#include "concavelr/parallel.hpp"

namespace concavelr {

std::string Scenario::name() const {
  switch (r0) {
    case TrueFunction::kNegQuadratic: return "neg_quadratic";
    case TrueFunction::kCosine: return "cosine";
    case TrueFunction::kNegExp: return "neg_exp";
  }
  return "unknown";
}

double Scenario::value(double x) const {
  switch (r0) {
    case TrueFunction::kNegQuadratic: return -x * x;
    case TrueFunction::kCosine: return std::cos(x);
    case TrueFunction::kNegExp: return -std::exp(x);
  }
  return 0.0;
}

double Scenario::second_derivative_abs() const {
  switch (r0) {
    case TrueFunction::kNegQuadratic: return 2.0;
    case TrueFunction::kCosine: return std::abs(std::cos(x0));
    case TrueFunction::kNegExp: return std::exp(x0);
  }
  return 0.0;
}

Scenario make_scenario(const std::string& name, std::size_t n, DesignKind design, double sigma,
                       std::size_t M) {
  Scenario s;
  if (name == "neg_quadratic") {
    s.r0 = TrueFunction::kNegQuadratic;
    s.lower = -1.0, s.upper = 1.0, s.x0 = 0.0;
  } else if (name == "cosine") {
    s.r0 = TrueFunction::kCosine;
    s.lower = -1.0, s.upper = 1.0, s.x0 = -0.5;
  } else if (name == "neg_exp") {
    s.r0 = TrueFunction::kNegExp;
    s.lower = 1.0, s.upper = 3.0, s.x0 = 2.0;
  } else {
    throw DataError("unknown scenario '" + name + "' (neg_quadratic, cosine, neg_exp)");
  }
  if (n < 2) throw DataError("scenario needs n >= 2");
  if (!(sigma > 0.0)) throw DataError("scenario sigma must be positive");
  s.n = n;
  s.design = design;
  s.sigma = sigma;
  s.M = M;
  return s;
}

DesignKind parse_design_kind(const std::string& name) {
  if (name == "fixed") return DesignKind::kFixed;
  if (name == "random") return DesignKind::kRandom;
  throw DataError("design must be 'fixed' or 'random'");
}

std::string to_string(DesignKind kind) {
  return kind == DesignKind::kFixed ? "fixed" : "random";
}

double d_constant(double r0_second_deriv_abs, double sigma) {
  if (!(r0_second_deriv_abs > 0.0) || !(sigma > 0.0)) {
    throw DataError("d_constant: inputs must be positive");
  }
  return std::pow(24.0 / (std::pow(sigma, 4) * r0_second_deriv_abs), 0.2);
}

Design generate_design(const Scenario& sc, std::uint64_t seed) {
  std::mt19937_64 rng = replication_rng(seed, 0);
  std::vector<double> x(sc.n);
  if (sc.design == DesignKind::kFixed) {
    const double step = (sc.upper - sc.lower) / static_cast<double>(sc.n - 1);
    for (std::size_t i = 0; i < sc.n; ++i) x[i] = sc.lower + step * static_cast<double>(i);
    x.back() = sc.upper;
  } else {
    std::uniform_real_distribution<double> unif(sc.lower, sc.upper);
    for (double& v : x) v = unif(rng);
    std::sort(x.begin(), x.end());
    if (std::adjacent_find(x.begin(), x.end()) != x.end()) {
      throw DataError("random design produced tied abscissas");
    }
  }
  std::normal_distribution<double> normal;
  std::vector<double> y(sc.n);
  for (std::size_t i = 0; i < sc.n; ++i) y[i] = sc.value(x[i]) + sc.sigma * normal(rng);
  return Design(std::move(x), std::move(y));
}

double design_cdf_distance(const Design& design, double lower, double upper) {
  const auto x = design.x();
  const double n = static_cast<double>(x.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = (x[i] - lower) / (upper - lower);
    worst = std::max({worst, std::abs(static_cast<double>(i + 1) / n - u),
                      std::abs(static_cast<double>(i) / n - u)});
  }
  return worst;
}

namespace {

struct NullDraw {
  double known = 0.0;   // 2 log lambda / sigma^2
  double stat = 0.0;    // 2 log lambda
  double sigma2_hat = 0.0;
};

std::vector<NullDraw> null_draws(const Scenario& sc, std::uint64_t seed, unsigned threads) {
  std::vector<NullDraw> out(sc.M);
  const double s2 = sc.sigma * sc.sigma;
  parallel_for(sc.M, threads, [&](std::size_t k) {
    const std::uint64_t rep_seed = replication_rng(seed, k)();
    const Design d = generate_design(sc, rep_seed);
    LrOptions opt;
    opt.sigma2 = s2;
    const LrResult lr = lr_statistic(d, sc.x0, sc.y0(), opt);
    out[k] = NullDraw{lr.two_log_lambda / s2, lr.two_log_lambda, lr.alse.sigma2_hat};
  });
  return out;
}

}  // namespace

std::vector<double> null_statistics(const Scenario& scenario, std::uint64_t seed,
                                    unsigned threads) {
  const auto draws = null_draws(scenario, seed, threads);
  std::vector<double> out(draws.size());
  for (std::size_t k = 0; k < draws.size(); ++k) out[k] = draws[k].known;
  return out;
}

std::vector<LevelEstimate> level_study(const Scenario& scenario, const std::vector<double>& alphas,
                                       const CriticalTable& table, std::uint64_t seed,
                                       unsigned threads) {
  if (scenario.M < 1) throw DataError("level_study: M must be at least 1");
  const auto draws = null_draws(scenario, seed, threads);
  const double s2 = scenario.sigma * scenario.sigma;
  const double M = static_cast<double>(draws.size());
  std::vector<LevelEstimate> out;
  for (double alpha : alphas) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
    const double q = table.quantile(1.0 - alpha);
    std::size_t known = 0, plugin = 0;
    for (const auto& d : draws) {
      if (d.stat > s2 * q) ++known;
      if (d.stat > d.sigma2_hat * q) ++plugin;
    }
    LevelEstimate e;
    e.alpha = alpha;
    e.M = draws.size();
    e.rate = static_cast<double>(known) / M;
    e.se = std::sqrt(e.rate * (1.0 - e.rate) / M);
    e.rate_plugin = static_cast<double>(plugin) / M;
    e.se_plugin = std::sqrt(e.rate_plugin * (1.0 - e.rate_plugin) / M);
    out.push_back(e);
  }
  return out;
}

EcdfStudy ecdf_study(const std::vector<Scenario>& scenarios, const CriticalTable& table,
                     std::uint64_t seed, unsigned threads) {
  EcdfStudy study;
  std::size_t M = 0;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    EcdfCurve curve;
    curve.scenario = scenarios[i].name();
    curve.values = null_statistics(scenarios[i], replication_rng(seed, i)(), threads);
    std::sort(curve.values.begin(), curve.values.end());
    M = std::max(M, curve.values.size());
    study.curves.push_back(std::move(curve));
  }
  EcdfCurve limit;
  limit.scenario = "limit";
  const auto& draws = table.draws();
  if (M == 0 || M >= draws.size()) {
    limit.values = draws;
  } else {
    // An evenly spread subsample keeps the table's ECDF shape.
    for (std::size_t k = 0; k < M; ++k) limit.values.push_back(draws[(k * draws.size()) / M]);
  }
  study.curves.push_back(std::move(limit));
  return study;
}

double chi2_1_cdf(double x) { return x <= 0.0 ? 0.0 : std::erf(std::sqrt(0.5 * x)); }

double ks_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw DataError("ks_distance: empty sample");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double worst = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return worst;
}

double ks_distance_chi2_1(const std::vector<double>& a) {
  if (a.empty()) throw DataError("ks_distance: empty sample");
  const double n = static_cast<double>(a.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = chi2_1_cdf(a[i]);
    worst = std::max({worst, std::abs(static_cast<double>(i + 1) / n - f),
                      std::abs(static_cast<double>(i) / n - f)});
  }
  return worst;
}

std::vector<BandPoint> confidence_band(std::size_t n, double sigma, double alpha,
                                       const std::vector<double>& xs, const CriticalTable& table,
                                       std::uint64_t seed, unsigned threads) {
  if (n < 2 || !(sigma > 0.0)) throw DataError("confidence_band: need n >= 2 and sigma > 0");
  std::mt19937_64 rng = replication_rng(seed, 0);
  std::normal_distribution<double> normal;
  std::vector<double> x(n), y(n);
  const double step = 2.0 / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) x[i] = -1.0 + step * static_cast<double>(i);
  x.back() = 1.0;
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * x[i] + sigma * normal(rng);
  const Design d(x, y);
  LrOptions opt;
  opt.convex = true;
  opt.sigma2 = sigma * sigma;
  const FitResult fit = fit_alse(d.negated());
  std::vector<BandPoint> out(xs.size());
  parallel_for(xs.size(), threads, [&](std::size_t i) {
    const ConfidenceInterval ci = confidence_interval(d, xs[i], alpha, table, {}, opt, 1);
    BandPoint p;
    p.x = xs[i];
    p.truth = xs[i] * xs[i];
    p.estimate = -fit.fit(xs[i]);
    p.lower = ci.lower;
    p.upper = ci.upper;
    p.covers = ci.lower <= p.truth && p.truth <= ci.upper;
    p.nonconvex = ci.nonconvex_warning;
    out[i] = p;
  });
  return out;
}

}  // namespace concavelr
