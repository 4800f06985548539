#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace concavelr {

/// Observed regression data: strictly increasing abscissas with one response
/// each. Immutable once built.
class Design {
 public:
  /// Requires x strictly increasing, equal lengths, n >= 2, finite values.
  Design(std::vector<double> x, std::vector<double> y);

  /// Sorts rows by x; duplicate abscissas are rejected.
  static Design from_rows(std::vector<std::pair<double, double>> rows);

  std::span<const double> x() const { return x_; }
  std::span<const double> y() const { return y_; }
  std::size_t size() const { return x_.size(); }

  /// Same abscissas, responses multiplied by -1 (convex <-> concave).
  Design negated() const;

 private:
  std::vector<double> x_;
  std::vector<double> y_;
};

/// Reads a two-column `x,y` CSV. A header line is optional; rows may come in
/// any order. Throws DataError on malformed content or duplicate x.
Design read_design_csv(const std::filesystem::path& path);

/// The translated and possibly augmented data set used for the
/// value-constrained fit. Indices are 0-based.
struct AugmentedDesign {
  std::vector<double> z;                 // abscissas, strictly increasing
  std::vector<double> w;                 // responses minus y0; 0 at an inserted point
  std::size_t k0 = 0;                    // z[k0] == x0
  std::vector<std::size_t> data_index;   // augmented indices holding data, in order
  double x0 = 0.0;
  double y0 = 0.0;
  bool exterior = false;                 // x0 outside [x.front(), x.back()]

  bool inserted() const { return z.size() == data_index.size() + 1; }
  std::size_t n() const { return data_index.size(); }
};

/// Translates responses by y0 and inserts x0 into the grid when it is not a
/// design abscissa. Throws DataError on non-finite x0/y0.
AugmentedDesign augment(const Design& design, double x0, double y0);

/// Default relative tolerance for concavity validation.
inline constexpr double kConcavityTol = 1e-9;
/// Default relative tolerance for knot detection.
inline constexpr double kKnotTol = 1e-8;

/// Piecewise-linear concave function given by its values at a strictly
/// increasing set of abscissas. Defined only on [knots.front(), knots.back()].
///
/// Slope changes are compared against `tol * M * (1/dl + 1/dr)`, where M is
/// max |value| and dl, dr are the adjacent spacings; this is a relative
/// second-difference test that is insensitive to clustered abscissas.
class PiecewiseLinearConcave {
 public:
  /// Empty placeholder; every accessor other than size() requires a real fit.
  PiecewiseLinearConcave() = default;
  PiecewiseLinearConcave(std::vector<double> knots, std::vector<double> values,
                         double tol = kConcavityTol);

  std::span<const double> knots() const { return knots_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return knots_.size(); }
  double lower() const { return knots_.front(); }
  double upper() const { return knots_.back(); }

  /// Linear interpolation; exact at knots. Throws DataError outside the domain.
  double operator()(double t) const;

  /// slope(j) is the slope on [knots[j], knots[j+1]].
  double slope(std::size_t j) const;
  /// Right slope minus left slope at interior index j (<= 0 when concave).
  double slope_change(std::size_t j) const;
  /// Threshold against which slope_change(j) is compared at relative tol.
  double slope_change_threshold(std::size_t j, double tol) const;

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

double evaluate(const PiecewiseLinearConcave& f, double t);

/// Indices where |slope change| exceeds the relative tolerance, plus both
/// endpoints.
std::vector<std::size_t> active_knots(const PiecewiseLinearConcave& f,
                                      double tol = kKnotTol);

/// Same test applied to raw vectors that need not be concave.
std::vector<std::size_t> active_knots(std::span<const double> grid,
                                      std::span<const double> values,
                                      double tol = kKnotTol);

}  // namespace concavelr
