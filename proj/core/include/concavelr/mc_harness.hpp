#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "concavelr/data_model.hpp"
#include "concavelr/limit_sim.hpp"

namespace concavelr {

enum class TrueFunction { kNegQuadratic, kCosine, kNegExp };
enum class DesignKind { kFixed, kRandom };

struct Scenario {
  TrueFunction r0 = TrueFunction::kNegQuadratic;
  double lower = -1.0;
  double upper = 1.0;
  double x0 = 0.0;
  std::size_t n = 100;
  DesignKind design = DesignKind::kFixed;
  double sigma = 1.0;
  std::size_t M = 1000;

  std::string name() const;
  double value(double x) const;  // r0(x)
  double y0() const { return value(x0); }
  double second_derivative_abs() const;  // |r0''(x0)|
};

/// neg_quadratic: -x^2 on [-1,1], x0 = 0. cosine: cos x on [-1,1], x0 = -0.5.
/// neg_exp: -e^x on [1,3], x0 = 2. Throws DataError for unknown names.
Scenario make_scenario(const std::string& name, std::size_t n, DesignKind design,
                       double sigma = 1.0, std::size_t M = 1000);
DesignKind parse_design_kind(const std::string& name);
std::string to_string(DesignKind kind);

/// (24 / (sigma^4 |r0''(x0)|))^(1/5).
double d_constant(double r0_second_deriv_abs, double sigma);

/// Fixed: n equispaced points including both ends. Random: n sorted uniform
/// draws. Responses r0(x) + sigma N(0,1).
Design generate_design(const Scenario& scenario, std::uint64_t seed);

/// sup over x of |F_n(x) - (x - lower)/(upper - lower)|.
double design_cdf_distance(const Design& design, double lower, double upper);

struct LevelEstimate {
  double alpha = 0.05;
  double rate = 0.0;          // known sigma
  double se = 0.0;
  double rate_plugin = 0.0;   // sigma^2 estimated from the ALSE residuals
  double se_plugin = 0.0;
  std::size_t M = 0;
};

/// Rejection rates under the null y0 = r0(x0) over scenario.M replications.
std::vector<LevelEstimate> level_study(const Scenario& scenario, const std::vector<double>& alphas,
                                       const CriticalTable& table, std::uint64_t seed,
                                       unsigned threads = 0);

/// Null statistics 2 log lambda_n / sigma^2 with known sigma, one per
/// replication in replication order.
std::vector<double> null_statistics(const Scenario& scenario, std::uint64_t seed,
                                    unsigned threads = 0);

struct EcdfCurve {
  std::string scenario;
  std::vector<double> values;  // sorted
};

struct EcdfStudy {
  std::vector<EcdfCurve> curves;  // scenarios followed by "limit"
};

/// Per-scenario sorted null statistics plus the first M limit draws of the
/// table as a final "limit" curve.
EcdfStudy ecdf_study(const std::vector<Scenario>& scenarios, const CriticalTable& table,
                     std::uint64_t seed, unsigned threads = 0);

/// CDF of the chi-square distribution with one degree of freedom.
double chi2_1_cdf(double x);

/// Two-sample sup distance between empirical CDFs (inputs sorted).
double ks_distance(const std::vector<double>& a, const std::vector<double>& b);
/// Sup distance between an empirical CDF (sorted input) and chi-square(1).
double ks_distance_chi2_1(const std::vector<double>& a);

struct BandPoint {
  double x = 0.0;
  double truth = 0.0;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool covers = false;
  bool nonconvex = false;
};

/// Pointwise intervals for the convex truth x^2 on [-1, 1] with n fixed
/// design points, evaluated at `xs`.
std::vector<BandPoint> confidence_band(std::size_t n, double sigma, double alpha,
                                       const std::vector<double>& xs, const CriticalTable& table,
                                       std::uint64_t seed, unsigned threads = 0);

}  // namespace concavelr
