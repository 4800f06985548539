#include "concavelr/lrt.hpp"

#include <algorithm>
#include <cmath>

#include "concavelr/error.hpp"
#include "concavelr/numeric.hpp"
#include "concavelr/parallel.hpp"

namespace concavelr {
namespace {

// Working problem: the design and hypothesized value after the optional
// convex-to-concave negation.
struct Working {
  Design design;
  double y0;
};

Working working(const Design& design, double y0, bool convex) {
  if (convex) return {design.negated(), -y0};
  return {design, y0};
}

// The ALSE is feasible for the constrained class whenever it already passes
// through (x0, y0); then it is also the constrained optimum.
FitResult alse_as_nlse(const FitResult& alse, const AugmentedDesign& aug) {
  std::vector<double> values(aug.z.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = alse.fit(aug.z[i]);
  values[aug.k0] = aug.y0;
  FitResult out = alse;
  out.fit = PiecewiseLinearConcave(aug.z, std::move(values));
  return out;
}

LrResult statistic_given_alse(const Design& d, const FitResult& alse, double x0, double y0,
                              const LrOptions& options) {
  LrResult res;
  res.alse = alse;
  const AugmentedDesign aug = augment(d, x0, y0);
  const bool in_range = x0 >= alse.fit.lower() && x0 <= alse.fit.upper();
  if (in_range && alse.fit(x0) == y0) {
    res.nlse = alse_as_nlse(alse, aug);
  } else {
    res.nlse = fit_nlse(d, x0, y0, options.fit);
  }
  res.two_log_lambda = 2.0 * (res.nlse.objective - res.alse.objective);
  res.sigma2_used = options.sigma2 ? *options.sigma2 : alse.sigma2_hat;

  CompensatedSum identity, scale;
  const auto y = d.y();
  for (std::size_t q = 0; q < d.size(); ++q) {
    const std::size_t i = aug.data_index[q];
    const double r = alse.fit.values()[q] - y0;
    const double r0 = res.nlse.fit.values()[i] - y0;
    identity += r * r - r0 * r0;
    scale += (y[q] - y0) * (y[q] - y0) + r * r + r0 * r0;
  }
  res.identity_gap = std::abs(res.two_log_lambda - identity.value());
  res.scale = scale.value();
  if (aug.exterior) res.warnings.push_back("x0 lies outside the design range");
  if (alse.near_degenerate || res.nlse.near_degenerate) {
    res.warnings.push_back("a fitted knot carries a near-zero slope change");
  }
  return res;
}

void check_sigma2(double s2) {
  if (!(s2 > 0.0) || !std::isfinite(s2)) {
    throw DataError("sigma2 must be positive and finite (pass it explicitly when the fit is exact)");
  }
}

}  // namespace

LrResult lr_statistic(const Design& design, double x0, double y0, const LrOptions& options) {
  if (options.sigma2) check_sigma2(*options.sigma2);
  const Working w = working(design, y0, options.convex);
  const FitResult alse = fit_alse(w.design, options.fit);
  return statistic_given_alse(w.design, alse, x0, w.y0, options);
}

LrDecision lr_test(const Design& design, double x0, double y0, double alpha,
                   const CriticalTable& table, const LrOptions& options) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
  LrDecision out;
  out.lr = lr_statistic(design, x0, y0, options);
  out.alpha = alpha;
  out.sigma2 = out.lr.sigma2_used;
  check_sigma2(out.sigma2);
  out.statistic = out.lr.two_log_lambda;
  out.threshold = out.sigma2 * table.quantile(1.0 - alpha);
  out.reject = out.statistic > out.threshold;
  out.p_value = table.upper_tail(out.statistic / out.sigma2);
  return out;
}

LocalizationSplit lr_localization(const Design& design, double x0, double y0, double b,
                                  const LrOptions& options) {
  if (!(b > 0.0)) throw DataError("localization window b must be positive");
  const LrResult lr = lr_statistic(design, x0, y0, options);
  const Working w = working(design, y0, options.convex);
  const AugmentedDesign aug = augment(w.design, x0, w.y0);
  const double radius = b * std::pow(static_cast<double>(design.size()), -0.2);
  CompensatedSum inside, outside;
  const auto x = w.design.x();
  for (std::size_t q = 0; q < w.design.size(); ++q) {
    const std::size_t i = aug.data_index[q];
    const double r = lr.alse.fit.values()[q] - w.y0;
    const double r0 = lr.nlse.fit.values()[i] - w.y0;
    const double term = r * r - r0 * r0;
    if (std::abs(x[q] - x0) <= radius) inside += term;
    else outside += term;
  }
  return LocalizationSplit{b, inside.value(), outside.value(), lr.two_log_lambda};
}

ConfidenceInterval confidence_interval(const Design& design, double x0, double alpha,
                                       const CriticalTable& table, const GridSpec& spec,
                                       const LrOptions& options, unsigned threads) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("alpha must lie in (0, 1)");
  if (spec.points < 3) throw DataError("confidence interval grid needs at least 3 points");
  const Working w = working(design, 0.0, options.convex);
  const FitResult alse = fit_alse(w.design, options.fit);
  if (!(x0 >= alse.fit.lower() && x0 <= alse.fit.upper())) {
    throw DataError("confidence interval: x0 must lie within the design range");
  }
  const double sign = options.convex ? -1.0 : 1.0;

  ConfidenceInterval ci;
  ci.alpha = alpha;
  ci.sigma2 = options.sigma2 ? *options.sigma2 : alse.sigma2_hat;
  check_sigma2(ci.sigma2);
  ci.threshold = ci.sigma2 * table.quantile(1.0 - alpha);
  const double sigma_hat = std::sqrt(ci.sigma2);
  const double n = static_cast<double>(design.size());

  auto statistic = [&](double y) {
    return statistic_given_alse(w.design, alse, x0, sign * y, options).two_log_lambda;
  };
  auto accepted = [&](double y) { return statistic(y) <= ci.threshold; };

  const double center = spec.center ? *spec.center : sign * alse.fit(x0);
  double half = spec.half_width ? *spec.half_width : 10.0 * sigma_hat * std::pow(n, -0.4);
  if (!(half > 0.0) || !std::isfinite(half)) throw DataError("grid half-width must be positive");

  const std::size_t P = spec.points;
  for (std::size_t round = 0;; ++round) {
    ci.grid.resize(P);
    ci.statistics.assign(P, 0.0);
    for (std::size_t i = 0; i < P; ++i) {
      const double u = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(P - 1);
      ci.grid[i] = center + half * u;
    }
    parallel_for(P, threads, [&](std::size_t i) { ci.statistics[i] = statistic(ci.grid[i]); });
    ci.acceptance_flags.assign(P, false);
    for (std::size_t i = 0; i < P; ++i) ci.acceptance_flags[i] = ci.statistics[i] <= ci.threshold;
    if (!ci.acceptance_flags.front() && !ci.acceptance_flags.back()) break;
    if (round + 1 >= spec.max_doublings) {
      throw DataError(
          "confidence interval: acceptance region reaches the grid edge; widen the grid");
    }
    half *= 2.0;
  }

  std::size_t lo = P, hi = 0;
  for (std::size_t i = 0; i < P; ++i) {
    if (ci.acceptance_flags[i]) {
      lo = std::min(lo, i);
      hi = i;
    }
  }
  if (lo == P) throw DataError("confidence interval: no grid point accepted; widen the grid");
  for (std::size_t i = lo; i <= hi; ++i) {
    if (!ci.acceptance_flags[i]) ci.nonconvex_warning = true;
  }

  const double width = spec.refine_tol * sigma_hat;
  auto bisect = [&](double in, double out) {
    while (std::abs(out - in) > width) {
      const double mid = 0.5 * (in + out);
      if (mid == in || mid == out) break;
      if (accepted(mid)) in = mid;
      else out = mid;
    }
    return in;
  };
  ci.lower = bisect(ci.grid[lo], ci.grid[lo - 1]);
  ci.upper = bisect(ci.grid[hi], ci.grid[hi + 1]);
  if (ci.nonconvex_warning) {
    ci.warnings.push_back("acceptance set on the grid is not contiguous; reporting its hull");
  }
  return ci;
}

}  // namespace concavelr
