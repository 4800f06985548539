#pragma once

#include <optional>
#include <string>
#include <vector>

#include "concavelr/data_model.hpp"
#include "concavelr/estimators.hpp"
#include "concavelr/limit_sim.hpp"

namespace concavelr {

struct LrOptions {
  std::optional<double> sigma2;  // known noise variance; ALSE plug-in otherwise
  bool convex = false;           // fit convex functions by negating responses
  FitOptions fit{};
};

struct LrResult {
  double two_log_lambda = 0.0;
  FitResult alse;
  FitResult nlse;
  double sigma2_used = 0.0;
  /// |2 (phi0 - phi) - sum over data of (r~^2 - r~0^2)| in translated coordinates.
  double identity_gap = 0.0;
  /// sum over data of (y - y0)^2 + r~^2 + r~0^2; the gap is judged against it.
  double scale = 0.0;
  std::vector<std::string> warnings;
};

/// 2 log lambda_n(y0) = 2 (phi(nlse) - phi(alse)). In convex mode the fits
/// are returned for the negated problem.
LrResult lr_statistic(const Design& design, double x0, double y0, const LrOptions& options = {});

struct LrDecision {
  double statistic = 0.0;
  double threshold = 0.0;
  double p_value = 1.0;
  double sigma2 = 0.0;
  double alpha = 0.05;
  bool reject = false;
  LrResult lr;
};

/// Rejects iff statistic > sigma2 * quantile(1 - alpha). The p-value is the
/// table's upper tail at statistic / sigma2.
LrDecision lr_test(const Design& design, double x0, double y0, double alpha,
                   const CriticalTable& table, const LrOptions& options = {});

struct LocalizationSplit {
  double b = 0.0;
  double D_nb = 0.0;
  double E_nb = 0.0;
  double two_log_lambda = 0.0;
};

/// Splits the identity-form statistic into design points with
/// |x - x0| <= b n^(-1/5) and the rest.
LocalizationSplit lr_localization(const Design& design, double x0, double y0, double b,
                                  const LrOptions& options = {});

struct GridSpec {
  std::optional<double> center;      // default: ALSE value at x0
  std::optional<double> half_width;  // default: 10 sigma_hat n^(-2/5)
  std::size_t points = 201;
  std::size_t max_doublings = 40;
  double refine_tol = 1e-4;          // bisection width, in units of sigma_hat
};

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.05;
  double sigma2 = 0.0;
  double threshold = 0.0;
  std::vector<double> grid;
  std::vector<double> statistics;
  std::vector<bool> acceptance_flags;
  bool nonconvex_warning = false;
  std::vector<std::string> warnings;
};

/// Inverts the test over a grid of y values around the ALSE value at x0. The
/// grid is widened while an end point is still accepted, then both boundaries
/// are refined by bisection. Grid points are evaluated on `threads` workers.
ConfidenceInterval confidence_interval(const Design& design, double x0, double alpha,
                                       const CriticalTable& table, const GridSpec& grid = {},
                                       const LrOptions& options = {}, unsigned threads = 1);

}  // namespace concavelr
