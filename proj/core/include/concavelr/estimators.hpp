#pragma once

#include <cstddef>
#include <vector>

#include "concavelr/cone_qp.hpp"
#include "concavelr/data_model.hpp"

namespace concavelr {

/// How the noise variance is estimated from ALSE residuals.
enum class VarianceEstimator {
  kMeanSquare,   // (1/n) sum residual^2
  kDfCorrected,  // sum residual^2 / (n - #knots - 2), denominator at least 1
};

struct FitOptions {
  VarianceEstimator variance = VarianceEstimator::kMeanSquare;
  ProjectOptions solver{};
};

/// A concave least-squares fit in original coordinates.
struct FitResult {
  PiecewiseLinearConcave fit;
  double objective = 0.0;           // 1/2 sum over data of residual^2
  std::vector<double> residuals;    // data order
  double sigma2_hat = 0.0;
  std::vector<std::size_t> knots;   // indices into fit.knots() where the fit bends
  std::size_t iterations = 0;
  bool near_degenerate = false;
};

/// Unconstrained concave least squares over the design abscissas.
FitResult fit_alse(const Design& design, const FitOptions& options = {});

/// Concave least squares constrained to pass through (x0, y0). The fit lives
/// on the augmented grid (x0 inserted when it is not a design point) and
/// evaluates to y0 at x0 exactly.
FitResult fit_nlse(const Design& design, double x0, double y0,
                   const FitOptions& options = {});

/// The cone problems behind the two fits; exposed for certification.
ConeProblem alse_problem(const Design& design);
ConeProblem nlse_problem(const AugmentedDesign& aug);

}  // namespace concavelr
