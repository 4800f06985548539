#pragma once

#include <string>
#include <vector>

#include "concavelr/data_model.hpp"

namespace concavelr {

/// Cumulative sums used by the finite-sample optimality certificates.
/// Plain sums: r_bar[k] = r_0 + ... + r_k, s_bar[k] likewise for responses.
/// Left sums run over k < k0, right sums are tail sums over k > k0.
struct CumSums {
  std::vector<double> r_bar, s_bar;
  std::vector<double> r_left, s_left;    // index k for k = 0..k0-1
  std::vector<double> r_right, s_right;  // index k - (k0+1) for k = k0+1..n0-1
};

struct ConditionCheck {
  std::string label;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;   // lhs - rhs
  bool is_knot = false;
  bool equality = false;  // equality was required
  bool pass = false;
};

struct CharacterizationReport {
  std::vector<ConditionCheck> conditions;
  double scale = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::vector<std::string> warnings;
};

/// Certificate for the unconstrained fit: total-sum equality, the cumulative
/// inequalities for j = 2..n and equality at knots and at the last point.
/// `fitted` holds the fit at the design abscissas. Tolerance is relative:
/// tol * (sum|y| + sum|r|) * span.
CharacterizationReport check_alse(const Design& design, const std::vector<double>& fitted,
                                  double tol = 1e-7);

/// Certificate for the value-constrained fit, in translated coordinates:
/// `fitted` are values over aug.z minus y0 (so fitted[k0] == 0).
CharacterizationReport check_nlse(const AugmentedDesign& aug, const std::vector<double>& fitted,
                                  double tol = 1e-7);

CumSums cumulative_sums(const AugmentedDesign& aug, const std::vector<double>& fitted);

}  // namespace concavelr
