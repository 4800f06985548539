#include "concavelr/characterization.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "concavelr/error.hpp"
#include "concavelr/numeric.hpp"

namespace concavelr {
namespace {

void add(CharacterizationReport& rep, std::string label, double lhs, double rhs,
         bool is_knot, bool equality) {
  ConditionCheck c;
  c.label = std::move(label);
  c.lhs = lhs;
  c.rhs = rhs;
  c.slack = lhs - rhs;
  c.is_knot = is_knot;
  c.equality = equality;
  const double bound = rep.tol * rep.scale;
  c.pass = equality ? std::abs(c.slack) <= bound : c.slack <= bound;
  rep.conditions.push_back(std::move(c));
}

void finish(CharacterizationReport& rep) {
  rep.pass = std::all_of(rep.conditions.begin(), rep.conditions.end(),
                         [](const ConditionCheck& c) { return c.pass; });
}

// Largest second-difference violation, normalized like the concavity test.
void add_concavity(CharacterizationReport& rep, std::span<const double> grid,
                   std::span<const double> values) {
  const double m = max_abs(values);
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < grid.size(); ++j) {
    const double dl = grid[j] - grid[j - 1];
    const double dr = grid[j + 1] - grid[j];
    const double change =
        (values[j + 1] - values[j]) / dr - (values[j] - values[j - 1]) / dl;
    const double denom = m * (1.0 / dl + 1.0 / dr);
    if (denom > 0.0) worst = std::max(worst, change / denom);
    else if (change > 0.0) worst = std::max(worst, 1.0);
  }
  ConditionCheck c;
  c.label = "concave";
  c.lhs = worst;
  c.rhs = 0.0;
  c.slack = worst;
  c.pass = worst <= kConcavityTol;
  rep.conditions.push_back(std::move(c));
}

std::vector<bool> knot_mask(std::span<const double> grid, std::span<const double> values) {
  std::vector<bool> mask(grid.size(), false);
  for (std::size_t k : active_knots(grid, values, kKnotTol)) mask[k] = true;
  return mask;
}

double abs_total(std::span<const double> a, std::span<const double> b) {
  CompensatedSum s;
  for (double v : a) s += std::abs(v);
  for (double v : b) s += std::abs(v);
  return s.value();
}

}  // namespace

CharacterizationReport check_alse(const Design& design, const std::vector<double>& fitted,
                                  double tol) {
  const std::size_t n = design.size();
  if (fitted.size() != n) throw DataError("check_alse: fit has wrong length");
  const auto x = design.x();
  const auto y = design.y();

  CharacterizationReport rep;
  rep.tol = tol;
  rep.scale = abs_total(y, fitted) * (x.back() - x.front());
  const double sum_scale = abs_total(y, fitted);

  const std::vector<double> rb = prefix_sums(fitted);
  const std::vector<double> sb = prefix_sums(y);
  {
    ConditionCheck c;
    c.label = "total_sum";
    c.lhs = rb.back();
    c.rhs = sb.back();
    c.slack = c.lhs - c.rhs;
    c.equality = true;
    c.pass = std::abs(c.slack) <= tol * sum_scale;
    rep.conditions.push_back(std::move(c));
  }

  const std::vector<bool> knot = knot_mask(x, fitted);
  CompensatedSum lhs, rhs;
  for (std::size_t j = 1; j < n; ++j) {
    const double dx = x[j] - x[j - 1];
    lhs += rb[j - 1] * dx;
    rhs += sb[j - 1] * dx;
    const bool is_knot = knot[j];
    add(rep, "cumulative[" + std::to_string(j + 1) + "]", lhs.value(), rhs.value(), is_knot,
        is_knot);
  }
  add_concavity(rep, x, fitted);
  finish(rep);
  return rep;
}

CumSums cumulative_sums(const AugmentedDesign& aug, const std::vector<double>& fitted) {
  const std::size_t m = aug.z.size();
  if (fitted.size() != m) throw DataError("cumulative sums: fit has wrong length");
  CumSums cs;
  cs.r_bar = prefix_sums(fitted);
  cs.s_bar = prefix_sums(aug.w);
  CompensatedSum rl, sl;
  for (std::size_t k = 0; k < aug.k0; ++k) {
    rl += fitted[k];
    sl += aug.w[k];
    cs.r_left.push_back(rl.value());
    cs.s_left.push_back(sl.value());
  }
  const std::size_t right = m - aug.k0 - 1;
  cs.r_right.assign(right, 0.0);
  cs.s_right.assign(right, 0.0);
  CompensatedSum rr, sr;
  for (std::size_t k = m; k-- > aug.k0 + 1;) {
    rr += fitted[k];
    sr += aug.w[k];
    cs.r_right[k - aug.k0 - 1] = rr.value();
    cs.s_right[k - aug.k0 - 1] = sr.value();
  }
  return cs;
}

CharacterizationReport check_nlse(const AugmentedDesign& aug, const std::vector<double>& fitted,
                                  double tol) {
  const std::size_t m = aug.z.size();
  if (fitted.size() != m) throw DataError("check_nlse: fit has wrong length");
  if (aug.k0 >= m) throw DataError("check_nlse: constraint index out of range");
  const auto& z = aug.z;
  const std::size_t k0 = aug.k0;

  // The pinned coordinate contributes nothing to the objective when it was
  // inserted, and nothing to any generator in either case.
  CharacterizationReport rep;
  rep.tol = tol;
  rep.scale = abs_total(aug.w, fitted) * (z.back() - z.front());
  if (aug.exterior) rep.warnings.push_back("x0 lies outside the design range");

  {
    ConditionCheck c;
    c.label = "pinned";
    c.lhs = fitted[k0];
    c.equality = true;
    c.slack = fitted[k0];
    c.pass = fitted[k0] == 0.0;
    rep.conditions.push_back(std::move(c));
  }

  const CumSums cs = cumulative_sums(aug, fitted);
  const std::vector<bool> knot = knot_mask(z, fitted);

  // Left side: j = 1..k0 (0-based), sums over k < j.
  CompensatedSum lhs_l, rhs_l;
  for (std::size_t j = 1; j <= k0; ++j) {
    const double dz = z[j] - z[j - 1];
    lhs_l += cs.r_left[j - 1] * dz;
    rhs_l += cs.s_left[j - 1] * dz;
    const bool is_knot = knot[j];
    add(rep, "left[" + std::to_string(j + 1) + "]", lhs_l.value(), rhs_l.value(), is_knot,
        is_knot);
  }

  // Right side: j = k0+1..m-2 (0-based), sums over k > j of tail sums.
  std::vector<double> lhs_r(m, 0.0), rhs_r(m, 0.0);
  {
    CompensatedSum a, b;
    for (std::size_t j = m - 1; j-- > k0;) {
      const double dz = z[j + 1] - z[j];
      a += cs.r_right[j - k0] * dz;
      b += cs.s_right[j - k0] * dz;
      lhs_r[j] = a.value();
      rhs_r[j] = b.value();
    }
  }
  for (std::size_t j = k0 + 1; j + 1 < m; ++j) {
    const bool is_knot = knot[j];
    add(rep, "right[" + std::to_string(j + 1) + "]", lhs_r[j], rhs_r[j], is_knot, is_knot);
  }

  // Connect sides: left deficit at k0 equals the right deficit at k0.
  {
    CompensatedSum left, right;
    for (std::size_t k = 0; k < k0; ++k) {
      left += (cs.r_left[k] - cs.s_left[k]) * (z[k + 1] - z[k]);
    }
    for (std::size_t k = k0 + 1; k < m; ++k) {
      right += (cs.r_right[k - k0 - 1] - cs.s_right[k - k0 - 1]) * (z[k] - z[k - 1]);
    }
    add(rep, "connect_sides", left.value(), right.value(), false, true);
  }
  add_concavity(rep, z, fitted);
  finish(rep);
  return rep;
}

}  // namespace concavelr
