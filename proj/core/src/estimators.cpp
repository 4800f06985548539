#include "concavelr/estimators.hpp"

#include <algorithm>
#include <vector>

#include "concavelr/numeric.hpp"

namespace concavelr {
namespace {

double variance(const std::vector<double>& residuals, std::size_t knots,
                VarianceEstimator kind) {
  CompensatedSum ss;
  for (double r : residuals) ss += r * r;
  const std::size_t n = residuals.size();
  double denom = static_cast<double>(n);
  if (kind == VarianceEstimator::kDfCorrected) {
    denom = n > knots + 2 ? static_cast<double>(n - knots - 2) : 1.0;
  }
  return ss.value() / denom;
}

}  // namespace

ConeProblem alse_problem(const Design& design) {
  ConeProblem p;
  p.grid.assign(design.x().begin(), design.x().end());
  p.targets.assign(design.y().begin(), design.y().end());
  p.weights.assign(design.size(), 1.0);
  return p;
}

ConeProblem nlse_problem(const AugmentedDesign& aug) {
  ConeProblem p;
  p.grid = aug.z;
  p.targets = aug.w;
  p.weights.assign(aug.z.size(), 0.0);
  for (std::size_t i : aug.data_index) p.weights[i] = 1.0;
  p.pinned = aug.k0;
  return p;
}

FitResult fit_alse(const Design& design, const FitOptions& options) {
  const ConeProblem p = alse_problem(design);
  ConeSolution sol = project(p, options.solver);
  std::vector<double> residuals(design.size());
  for (std::size_t i = 0; i < design.size(); ++i) residuals[i] = design.y()[i] - sol.fitted[i];
  const double s2 = variance(residuals, sol.knots.size(), options.variance);
  return FitResult{PiecewiseLinearConcave(p.grid, std::move(sol.fitted)),
                   sol.objective,
                   std::move(residuals),
                   s2,
                   std::move(sol.knots),
                   sol.iterations,
                   sol.near_degenerate};
}

FitResult fit_nlse(const Design& design, double x0, double y0, const FitOptions& options) {
  const AugmentedDesign aug = augment(design, x0, y0);
  const ConeProblem p = nlse_problem(aug);
  ConeSolution sol = project(p, options.solver);

  std::vector<double> residuals(aug.n());
  for (std::size_t q = 0; q < aug.n(); ++q) {
    const std::size_t i = aug.data_index[q];
    residuals[q] = aug.w[i] - sol.fitted[i];
  }
  std::vector<double> values(sol.fitted.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = sol.fitted[i] + y0;
  values[aug.k0] = y0;
  const double s2 = variance(residuals, sol.knots.size(), options.variance);
  return FitResult{PiecewiseLinearConcave(aug.z, std::move(values)),
                   sol.objective,
                   std::move(residuals),
                   s2,
                   std::move(sol.knots),
                   sol.iterations,
                   sol.near_degenerate};
}

}  // namespace concavelr
