#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace concavelr {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  CompensatedSum& operator+=(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> v) {
  CompensatedSum s;
  for (double x : v) s += x;
  return s.value();
}

/// Running prefix sums with compensation: out[k] = v[0] + ... + v[k].
inline std::vector<double> prefix_sums(std::span<const double> v) {
  std::vector<double> out(v.size());
  CompensatedSum s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    s += v[i];
    out[i] = s.value();
  }
  return out;
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace concavelr
