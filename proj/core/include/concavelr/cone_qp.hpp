#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace concavelr {

/// Weighted least-squares projection onto concave vectors over a grid:
///
///   minimize  1/2 * sum_j weights[j] * (targets[j] - r[j])^2
///   subject to r concave over `grid` (and r[pinned] == 0 when set).
///
/// Zero weights are allowed at the pinned index and at interior indices; an
/// unpinned endpoint must carry positive weight.
struct ConeProblem {
  std::vector<double> grid;
  std::vector<double> weights;
  std::vector<double> targets;
  std::optional<std::size_t> pinned;  // 0-based

  /// Throws DataError when the problem is malformed.
  void validate() const;
  std::size_t size() const { return grid.size(); }
};

/// Element of the finite generating set of the feasible cone, evaluated on
/// the grid.
struct Generator {
  enum class Kind { kPlusOne, kMinusOne, kPlusLinear, kMinusLinear, kHinge };
  Kind kind = Kind::kHinge;
  std::size_t knot = 0;  // hinge location (interior grid index); unused otherwise
  std::vector<double> values;

  std::string label() const;
};

/// Unconstrained: +-1, +-x and (grid[i] - x)_- for interior i.
/// Pinned at k0: +-(x - grid[k0]), (x - grid[i])_- for interior i <= k0 and
/// (grid[i] - x)_- for interior i > k0. Every pinned generator vanishes at k0.
/// Throws DataError when the grid has fewer than two points.
std::vector<Generator> generators(const std::vector<double>& grid,
                                  std::optional<std::size_t> pinned);

struct ConeSolution {
  std::vector<double> fitted;
  double objective = 0.0;
  /// Conic coefficients, aligned with generators(grid, pinned).
  std::vector<double> multipliers;
  /// Interior indices where the fit bends (the final support set).
  std::vector<std::size_t> knots;
  std::size_t iterations = 0;
  /// A support knot carries a multiplier below tolerance.
  bool near_degenerate = false;
};

struct ProjectOptions {
  /// A hinge is added while <a_i, grad phi> / s_i < -tol * |targets|_w, where
  /// s_i is the weighted norm of the part of the hinge outside the current
  /// span (a tent between the neighbouring knots). The local scale keeps the
  /// test meaningful on fine grids.
  double tol = 1e-12;
  /// 0 means 50 * m.
  std::size_t max_iterations = 0;
};

/// Support-reduction active-set projection. Throws SolverError when the
/// iteration cap is reached.
ConeSolution project(const ConeProblem& problem, const ProjectOptions& options = {});

/// Objective value 1/2 sum w (y - r)^2 with compensated accumulation.
double cone_objective(const ConeProblem& problem, const std::vector<double>& r);

/// Conic coefficients of r in the generating set (negative parts clipped).
std::vector<double> cone_multipliers(const ConeProblem& problem,
                                     const std::vector<double>& r);

struct FenchelReport {
  std::vector<std::string> labels;
  std::vector<double> inner_products;
  std::vector<double> multipliers;
  double scale = 0.0;
  double worst_inequality = 0.0;  // most negative inner product / scale
  double worst_equality = 0.0;    // largest |inner product| / scale on the support
  bool pass = false;
};

/// Checks <a_i, grad phi(r)> >= -tol*scale for every generator and
/// |<a_i, grad phi(r)>| <= tol*scale where the multiplier is positive.
/// Scale is sum_j w_j (|r_j| + |y_j|) times the grid span.
FenchelReport fenchel_check(const ConeProblem& problem,
                            const std::vector<double>& fitted, double tol = 1e-8);

}  // namespace concavelr
