#pragma once

// Exhaustive active-set enumeration for small concave projections. Shares no
// code with the library solver: every subset of second-difference constraints
// is made active, the equality-constrained weighted least squares is solved in
// the null space of the active constraints, and the best feasible candidate
// wins.

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace oracle {

struct Result {
  std::vector<double> fitted;
  double objective = 0.0;
};

inline Result brute_force(const std::vector<double>& grid, const std::vector<double>& weights,
                          const std::vector<double>& targets,
                          std::optional<std::size_t> pinned = std::nullopt,
                          double feas_tol = 1e-10) {
  const int m = static_cast<int>(grid.size());
  if (m < 2 || m > 16) throw std::invalid_argument("oracle: grid size out of range");
  const int nc = m - 2;

  // Row j of D is the slope change at interior point j+1 as a linear functional.
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(std::max(nc, 0), m);
  for (int j = 1; j + 1 < m; ++j) {
    const double dl = grid[j] - grid[j - 1];
    const double dr = grid[j + 1] - grid[j];
    D(j - 1, j - 1) = 1.0 / dl;
    D(j - 1, j) = -1.0 / dl - 1.0 / dr;
    D(j - 1, j + 1) = 1.0 / dr;
  }
  Eigen::VectorXd w(m), y(m);
  for (int i = 0; i < m; ++i) {
    w(i) = weights[i];
    y(i) = targets[i];
  }
  double yscale = 0.0;
  for (int i = 0; i < m; ++i) yscale = std::max(yscale, std::abs(y(i)));
  const double span = grid.back() - grid.front();

  Result best;
  best.objective = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << nc); ++mask) {
    int rows = pinned ? 1 : 0;
    for (int j = 0; j < nc; ++j) rows += (mask >> j) & 1u;
    Eigen::MatrixXd C(rows, m);
    int r = 0;
    for (int j = 0; j < nc; ++j) {
      if ((mask >> j) & 1u) C.row(r++) = D.row(j);
    }
    if (pinned) {
      C.row(r).setZero();
      C(r, static_cast<int>(*pinned)) = 1.0;
    }
    Eigen::MatrixXd N;
    if (rows == 0) {
      N = Eigen::MatrixXd::Identity(m, m);
    } else {
      Eigen::FullPivLU<Eigen::MatrixXd> lu(C);
      N = lu.kernel();
      if (lu.rank() == m) N = Eigen::MatrixXd::Zero(m, 0);
    }
    Eigen::VectorXd fit = Eigen::VectorXd::Zero(m);
    if (N.cols() > 0) {
      const Eigen::VectorXd sw = w.cwiseSqrt();
      const Eigen::MatrixXd A = sw.asDiagonal() * N;
      const Eigen::VectorXd b = sw.cwiseProduct(y);
      const Eigen::VectorXd coef = A.completeOrthogonalDecomposition().solve(b);
      fit = N * coef;
    }
    if (pinned) fit(static_cast<int>(*pinned)) = 0.0;
    bool feasible = true;
    for (int j = 0; j < nc; ++j) {
      const double dl = grid[j + 1] - grid[j];
      const double dr = grid[j + 2] - grid[j + 1];
      const double tol = feas_tol * std::max(yscale, 1e-300) * (1.0 / dl + 1.0 / dr) +
                         feas_tol / std::max(span, 1e-300);
      if (D.row(j).dot(fit) > tol) {
        feasible = false;
        break;
      }
    }
    if (!feasible) continue;
    const double obj = 0.5 * (w.array() * (y - fit).array().square()).sum();
    if (obj < best.objective) {
      best.objective = obj;
      best.fitted.assign(fit.data(), fit.data() + m);
    }
  }
  if (best.fitted.empty()) throw std::runtime_error("oracle: no feasible candidate");
  return best;
}

}  // namespace oracle
