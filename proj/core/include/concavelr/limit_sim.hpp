#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "concavelr/cone_qp.hpp"

namespace concavelr {

/// A discretized path of X(t) = sigma W(t) - 4 a t^3 on [-c, c].
///
/// The path is stored on a fine grid of step h/2, s_k = -c - h/2 + k h/2 for
/// k = 0..4N+2 with N = c/h. The fit grid consists of the odd fine points
/// t_j = s_{2j+1} = -c + j h (j = 0..2N); cell j spans [t_j - h/2, t_j + h/2]
/// and t = 0 is cell N.
struct LimitPath {
  double c = 4.0;
  double h = 0.005;
  double a = 1.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> s;  // fine grid
  std::vector<double> w;  // W on the fine grid, W(0) = 0
  std::vector<double> x;  // X on the fine grid

  std::size_t cells() const { return (x.size() - 1) / 2; }
  std::size_t zero_cell() const { return cells() / 2; }
  std::vector<double> grid() const;     // t_j
  std::vector<double> targets() const;  // (X(t_j + h/2) - X(t_j - h/2)) / h
  ConeProblem problem(bool pinned) const;
};

/// Two-sided Brownian construction outward from 0 (right side first), exact
/// cubic drift. Throws DataError unless c > 0, h > 0, c/h is an integer,
/// a >= 0 and sigma >= 0.
LimitPath simulate_path(double c, double h, double a, double sigma, std::uint64_t seed);

/// The same Brownian motion observed at step h/2, obtained by Brownian-bridge
/// midpoints drawn from `seed`.
LimitPath refine(const LimitPath& path, std::uint64_t seed);

/// The (a, sigma) path that corresponds to a canonical (1, 1) path under the
/// Brownian scaling t = gamma2 u: grid scaled by gamma2, W by sqrt(gamma2)
/// and X by sigma^(6/5) a^(-1/5).
LimitPath scaled_path(const LimitPath& canonical, double a, double sigma);

/// Discrete invelope second derivative: weighted projection of the targets.
std::vector<double> invelope_unconstrained(const LimitPath& path);
/// Same with the value at t = 0 pinned to zero.
std::vector<double> invelope_constrained(const LimitPath& path);

/// sum over cells with |t_j| <= b of h (r^2 - r0^2). With b = c every cell
/// counts and the sum is 2 (phi(r0) - phi(r)) >= 0; a smaller window can cut
/// off positive mass and go negative.
double dee_draw(const LimitPath& path, const std::vector<double>& fit,
                const std::vector<double>& fit0, double b);
/// Simulates both fits and returns the draw.
double dee_draw(const LimitPath& path, double b);

enum class InvelopeMode { kUnconstrained, kConstrained };

struct InvelopeCheckReport {
  InvelopeMode mode = InvelopeMode::kConstrained;
  double tau_left = 0.0;
  double tau_right = 0.0;
  double middle_gap = 0.0;       // condition 1 (constrained only)
  double max_excursion = 0.0;    // condition 2: largest H - Y in the window
  double max_excursion_left = 0.0;
  double max_excursion_right = 0.0;
  double integral_left = 0.0;    // condition 3 per side, divided by the total slope change
  double integral_right = 0.0;
  double concavity = 0.0;        // largest positive slope change (unconstrained)
  double tol = 0.0;
  bool degenerate = false;       // no knot on one side of 0 inside the domain
  bool pass = false;
};

/// Default pass tolerance of invelope_check: 2h (worst of 100 seeded paths
/// is below 0.9h at h = 0.01 and h = 0.005).
double default_invelope_tol(const LimitPath& path);

/// Discrete versions of the invelope characterizations on the window [-b, b].
/// Pass iff |condition 1|, condition 2 and |condition 3| are all <= tol.
InvelopeCheckReport invelope_check(const LimitPath& path, const std::vector<double>& fit,
                                   InvelopeMode mode, double b, double tol);

/// Maps a fit over t for parameters (a, sigma) to canonical coordinates:
/// u_j = t_j / gamma2, values gamma1 gamma2^2 r(t_j).
struct CanonicalFit {
  std::vector<double> u;
  std::vector<double> values;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
};
CanonicalFit rescale_canonical(const std::vector<double>& t, const std::vector<double>& fit,
                               double a, double sigma);

struct TableMetadata {
  std::size_t M = 0;
  double c = 4.0;
  double h = 0.005;
  double b = 4.0;
  std::uint64_t seed = 0;
  std::string code_version;
};

/// Sorted draws of the universal limit variable with quantile and ECDF access.
class CriticalTable {
 public:
  CriticalTable() = default;
  CriticalTable(std::vector<double> draws, TableMetadata meta);

  std::size_t size() const { return draws_.size(); }
  const std::vector<double>& draws() const { return draws_; }
  const TableMetadata& metadata() const { return meta_; }

  /// Right-continuous inverse of the ECDF: draws[max(ceil(p M) - 1, 0)].
  double quantile(double p) const;
  /// #{draws <= v} / M.
  double ecdf(double v) const;
  /// #{draws >= v} / M.
  double upper_tail(double v) const;

  /// Writes `p,quantile` rows (p = k/M) and a JSON sidecar with the same stem.
  void save(const std::filesystem::path& csv) const;
  /// Throws TableError when the file is missing or malformed, or when a
  /// sidecar is present but unreadable or disagrees on M.
  static CriticalTable load(const std::filesystem::path& csv);

 private:
  std::vector<double> draws_;
  TableMetadata meta_;
};

/// M independent draws; replication k is seeded from (seed, k) so the table is
/// identical for any thread count.
CriticalTable critical_table(std::size_t M, double c, double h, double b, std::uint64_t seed,
                             unsigned threads = 0);

/// The sidecar path for a table CSV.
std::filesystem::path table_sidecar(const std::filesystem::path& csv);

/// Table path from CONCAVELR_TABLE, falling back to the shipped default.
std::filesystem::path default_table_path();

}  // namespace concavelr
