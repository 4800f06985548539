#include "concavelr/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "concavelr/error.hpp"
#include "concavelr/numeric.hpp"

namespace concavelr {
namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw DataError(std::string(what) + " contains a non-finite value");
    }
  }
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

Design::Design(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() != y_.size()) {
    throw DataError("design: x and y lengths differ");
  }
  if (x_.size() < 2) {
    throw DataError("design: need at least two observations");
  }
  require_finite(x_, "design x");
  require_finite(y_, "design y");
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i - 1] < x_[i])) {
      throw DataError("design: abscissas must be strictly increasing (x[" +
                      std::to_string(i) + "] duplicates or precedes x[" +
                      std::to_string(i - 1) + "])");
    }
  }
}

Design Design::from_rows(std::vector<std::pair<double, double>> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> x, y;
  x.reserve(rows.size());
  y.reserve(rows.size());
  for (const auto& [xi, yi] : rows) {
    if (!x.empty() && x.back() == xi) {
      throw DataError("design: duplicate abscissa " + std::to_string(xi));
    }
    x.push_back(xi);
    y.push_back(yi);
  }
  return Design(std::move(x), std::move(y));
}

Design Design::negated() const {
  std::vector<double> y(y_.size());
  std::transform(y_.begin(), y_.end(), y.begin(), [](double v) { return -v; });
  return Design(x_, std::move(y));
}

Design read_design_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  std::vector<std::pair<double, double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = line;
    if (lineno == 1 && sv.substr(0, 3) == "\xEF\xBB\xBF") sv.remove_prefix(3);
    sv = trim(sv);
    if (sv.empty()) continue;
    const auto comma = sv.find(',');
    double xv = 0.0, yv = 0.0;
    const bool ok = comma != std::string_view::npos &&
                    sv.find(',', comma + 1) == std::string_view::npos &&
                    parse_double(sv.substr(0, comma), xv) &&
                    parse_double(sv.substr(comma + 1), yv);
    if (!ok) {
      if (!seen_content) {
        seen_content = true;  // header
        continue;
      }
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected two numeric columns `x,y`");
    }
    seen_content = true;
    rows.emplace_back(xv, yv);
  }
  if (rows.size() < 2) {
    throw DataError(path.string() + ": need at least two data rows");
  }
  return Design::from_rows(std::move(rows));
}

AugmentedDesign augment(const Design& design, double x0, double y0) {
  if (!std::isfinite(x0) || !std::isfinite(y0)) {
    throw DataError("augment: x0 and y0 must be finite");
  }
  const auto x = design.x();
  const auto y = design.y();
  const std::size_t n = design.size();

  AugmentedDesign aug;
  aug.x0 = x0;
  aug.y0 = y0;
  aug.exterior = x0 < x.front() || x0 > x.back();

  const auto it = std::lower_bound(x.begin(), x.end(), x0);
  const auto pos = static_cast<std::size_t>(it - x.begin());
  const bool hit = it != x.end() && *it == x0;

  aug.z.reserve(n + 1);
  aug.w.reserve(n + 1);
  aug.data_index.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!hit && i == pos) {
      aug.k0 = aug.z.size();
      aug.z.push_back(x0);
      aug.w.push_back(0.0);
    }
    if (hit && i == pos) aug.k0 = aug.z.size();
    aug.data_index.push_back(aug.z.size());
    aug.z.push_back(x[i]);
    aug.w.push_back(y[i] - y0);
  }
  if (!hit && pos == n) {
    aug.k0 = aug.z.size();
    aug.z.push_back(x0);
    aug.w.push_back(0.0);
  }
  return aug;
}

PiecewiseLinearConcave::PiecewiseLinearConcave(std::vector<double> knots,
                                               std::vector<double> values,
                                               double tol)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() != values_.size()) {
    throw DataError("piecewise-linear function: knot/value lengths differ");
  }
  if (knots_.empty()) {
    throw DataError("piecewise-linear function: no knots");
  }
  require_finite(knots_, "knots");
  require_finite(values_, "values");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i - 1] < knots_[i])) {
      throw DataError("piecewise-linear function: knots must be strictly increasing");
    }
  }
  for (std::size_t j = 1; j + 1 < knots_.size(); ++j) {
    if (slope_change(j) > slope_change_threshold(j, tol)) {
      throw DataError("piecewise-linear function is not concave at knot " +
                      std::to_string(j));
    }
  }
}

double PiecewiseLinearConcave::operator()(double t) const {
  if (!(t >= knots_.front() && t <= knots_.back())) {
    throw DataError("evaluate: t outside [" + std::to_string(knots_.front()) +
                    ", " + std::to_string(knots_.back()) + "]");
  }
  const auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
  const auto j = static_cast<std::size_t>(it - knots_.begin());
  if (*it == t) return values_[j];
  const double lam = (t - knots_[j - 1]) / (knots_[j] - knots_[j - 1]);
  return values_[j - 1] + lam * (values_[j] - values_[j - 1]);
}

double PiecewiseLinearConcave::slope(std::size_t j) const {
  return (values_[j + 1] - values_[j]) / (knots_[j + 1] - knots_[j]);
}

double PiecewiseLinearConcave::slope_change(std::size_t j) const {
  return slope(j) - slope(j - 1);
}

double PiecewiseLinearConcave::slope_change_threshold(std::size_t j,
                                                      double tol) const {
  const double m = max_abs(values_);
  return tol * m *
         (1.0 / (knots_[j] - knots_[j - 1]) + 1.0 / (knots_[j + 1] - knots_[j]));
}

double evaluate(const PiecewiseLinearConcave& f, double t) { return f(t); }

std::vector<std::size_t> active_knots(std::span<const double> grid,
                                      std::span<const double> values,
                                      double tol) {
  if (grid.size() != values.size() || grid.empty()) {
    throw DataError("active_knots: size mismatch");
  }
  const double m = max_abs(values);
  std::vector<std::size_t> out{0};
  for (std::size_t j = 1; j + 1 < grid.size(); ++j) {
    const double dl = grid[j] - grid[j - 1];
    const double dr = grid[j + 1] - grid[j];
    const double change =
        (values[j + 1] - values[j]) / dr - (values[j] - values[j - 1]) / dl;
    if (std::abs(change) > tol * m * (1.0 / dl + 1.0 / dr)) out.push_back(j);
  }
  if (grid.size() > 1) out.push_back(grid.size() - 1);
  return out;
}

std::vector<std::size_t> active_knots(const PiecewiseLinearConcave& f,
                                      double tol) {
  return active_knots(f.knots(), f.values(), tol);
}

}  // namespace concavelr
