#include "concavelr/cone_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "concavelr/data_model.hpp"
#include "concavelr/error.hpp"
#include "concavelr/numeric.hpp"

namespace concavelr {
namespace {

// Symmetric tridiagonal system: diag[q], off[q] couples q and q+1.
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;
  std::vector<double> rhs;

  explicit Tridiagonal(std::size_t n) : diag(n, 0.0), off(n > 0 ? n - 1 : 0, 0.0), rhs(n, 0.0) {}

  // Thomas algorithm; the systems built here are positive definite.
  std::vector<double> solve() const {
    const std::size_t n = diag.size();
    std::vector<double> c(n, 0.0), d(n, 0.0), x(n, 0.0);
    double denom = diag[0];
    if (!(denom > 0.0)) throw SolverError("cone_qp: singular least-squares system");
    c[0] = n > 1 ? off[0] / denom : 0.0;
    d[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
      denom = diag[i] - off[i - 1] * c[i - 1];
      if (!(denom > 0.0)) throw SolverError("cone_qp: singular least-squares system");
      c[i] = i + 1 < n ? off[i] / denom : 0.0;
      d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
  }
};

double slope_change_at(const std::vector<double>& z, const std::vector<double>& r,
                       std::size_t k) {
  return (r[k + 1] - r[k]) / (z[k + 1] - z[k]) - (r[k] - r[k - 1]) / (z[k] - z[k - 1]);
}

double grid_span(const std::vector<double>& z) { return z.back() - z.front(); }

// Largest |generator entry| over the generating set.
double generator_reach(const ConeProblem& p) {
  const double span = grid_span(p.grid);
  return p.pinned ? span : std::max(1.0, span);
}

// Weighted least squares over piecewise-linear vectors bending only at
// `support`, with the pin honoured. Linear between consecutive basis knots.
std::vector<double> solve_on_support(const ConeProblem& p,
                                     const std::vector<std::size_t>& support) {
  const auto& z = p.grid;
  const auto& w = p.weights;
  const auto& y = p.targets;
  const std::size_t m = z.size();

  std::vector<std::size_t> basis;
  basis.reserve(support.size() + 2);
  basis.push_back(0);
  basis.insert(basis.end(), support.begin(), support.end());
  basis.push_back(m - 1);
  const std::size_t nq = basis.size();

  Tridiagonal sys(nq);
  for (std::size_t s = 0; s + 1 < nq; ++s) {
    const std::size_t a = basis[s], b = basis[s + 1];
    const double za = z[a], len = z[b] - z[a];
    const std::size_t last = (s + 2 == nq) ? b : b - 1;
    for (std::size_t j = a; j <= last; ++j) {
      const double lam = (j == b) ? 1.0 : (z[j] - za) / len;
      const double ha = 1.0 - lam, hb = lam;
      const double wj = w[j];
      sys.diag[s] += wj * ha * ha;
      sys.diag[s + 1] += wj * hb * hb;
      sys.off[s] += wj * ha * hb;
      sys.rhs[s] += wj * y[j] * ha;
      sys.rhs[s + 1] += wj * y[j] * hb;
    }
  }

  std::vector<double> theta;
  std::size_t merged = nq;  // segment whose two hats were merged
  double slope_through_pin = 0.0;
  if (!p.pinned) {
    theta = sys.solve();
  } else {
    const std::size_t k0 = *p.pinned;
    const auto it = std::lower_bound(basis.begin(), basis.end(), k0);
    const auto q0 = static_cast<std::size_t>(it - basis.begin());
    if (*it == k0) {
      sys.diag[q0] = 1.0;
      sys.rhs[q0] = 0.0;
      if (q0 > 0) sys.off[q0 - 1] = 0.0;
      if (q0 + 1 < nq) sys.off[q0] = 0.0;
      theta = sys.solve();
      theta[q0] = 0.0;
    } else {
      // k0 lies strictly inside segment s; the two hats collapse into the
      // line through (z[k0], 0).
      const std::size_t s = q0 - 1;
      merged = s;
      const double ca = z[basis[s]] - z[k0];
      const double cb = z[basis[s + 1]] - z[k0];
      Tridiagonal red(nq - 1);
      for (std::size_t q = 0; q < s; ++q) {
        red.diag[q] = sys.diag[q];
        red.rhs[q] = sys.rhs[q];
        if (q + 1 < s) red.off[q] = sys.off[q];
      }
      red.diag[s] = ca * ca * sys.diag[s] + 2.0 * ca * cb * sys.off[s] + cb * cb * sys.diag[s + 1];
      red.rhs[s] = ca * sys.rhs[s] + cb * sys.rhs[s + 1];
      if (s > 0) red.off[s - 1] = ca * sys.off[s - 1];
      if (s + 2 < nq) red.off[s] = cb * sys.off[s + 1];
      for (std::size_t q = s + 2; q < nq; ++q) {
        red.diag[q - 1] = sys.diag[q];
        red.rhs[q - 1] = sys.rhs[q];
        if (q + 1 < nq) red.off[q - 1] = sys.off[q];
      }
      const auto sol = red.solve();
      slope_through_pin = sol[s];
      theta.assign(nq, 0.0);
      for (std::size_t q = 0; q < s; ++q) theta[q] = sol[q];
      theta[s] = ca * sol[s];
      theta[s + 1] = cb * sol[s];
      for (std::size_t q = s + 2; q < nq; ++q) theta[q] = sol[q - 1];
    }
  }

  std::vector<double> r(m, 0.0);
  for (std::size_t s = 0; s + 1 < nq; ++s) {
    const std::size_t a = basis[s], b = basis[s + 1];
    r[a] = theta[s];
    r[b] = theta[s + 1];
    if (s == merged) {
      const double zk = z[*p.pinned];
      for (std::size_t j = a; j <= b; ++j) r[j] = slope_through_pin * (z[j] - zk);
      r[*p.pinned] = 0.0;
      continue;
    }
    const double len = z[b] - z[a];
    for (std::size_t j = a + 1; j < b; ++j) {
      const double lam = (z[j] - z[a]) / len;
      r[j] = theta[s] + lam * (theta[s + 1] - theta[s]);
    }
  }
  if (p.pinned) r[*p.pinned] = 0.0;
  return r;
}

// Directional derivatives <a_i, grad phi(r)> for every hinge generator,
// indexed by grid position (entries at 0 and m-1 are unused).
std::vector<double> hinge_derivatives(const ConeProblem& p, const std::vector<double>& r) {
  const auto& z = p.grid;
  const std::size_t m = z.size();
  std::vector<double> g(m);
  for (std::size_t j = 0; j < m; ++j) g[j] = p.weights[j] * (r[j] - p.targets[j]);

  std::vector<double> d(m, 0.0);
  const std::size_t split = p.pinned ? *p.pinned : 0;  // left form for i <= split

  // Right form: d_i = sum_{j>i} (z_i - z_j) g_j.
  {
    CompensatedSum tail, acc;
    for (std::size_t i = m - 1; i-- > 0;) {
      tail += g[i + 1];
      acc += (z[i] - z[i + 1]) * tail.value();
      if (!p.pinned || i > split) d[i] = acc.value();
    }
  }
  // Left form: d_i = sum_{j<i} (z_j - z_i) g_j.
  if (p.pinned) {
    CompensatedSum head, acc;
    for (std::size_t i = 1; i <= split && i < m; ++i) {
      head += g[i - 1];
      acc += (z[i - 1] - z[i]) * head.value();
      d[i] = acc.value();
    }
  }
  return d;
}

// Scale of the improvement a hinge at i can still bring: modulo the current
// piecewise-linear span the hinge equals alpha_i times the tent T_i that
// rises from the basis knot L below i to 1 at i and falls to the basis knot R
// above. Returns alpha_i |T_i|_w for every interior i not in the basis.
std::vector<double> hinge_scales(const ConeProblem& p, const std::vector<std::size_t>& support) {
  const auto& z = p.grid;
  const auto& w = p.weights;
  const std::size_t m = z.size();
  std::vector<double> out(m, 0.0);
  std::vector<std::size_t> basis;
  basis.reserve(support.size() + 2);
  basis.push_back(0);
  basis.insert(basis.end(), support.begin(), support.end());
  basis.push_back(m - 1);
  std::vector<double> left(m, 0.0), right(m, 0.0);
  for (std::size_t q = 0; q + 1 < basis.size(); ++q) {
    const std::size_t L = basis[q], R = basis[q + 1];
    if (R - L < 2) continue;
    double acc = 0.0;
    for (std::size_t j = L; j < R; ++j) {
      acc += w[j] * (z[j] - z[L]) * (z[j] - z[L]);
      left[j] = acc;
    }
    acc = 0.0;
    for (std::size_t j = R; j > L; --j) {
      acc += w[j] * (z[R] - z[j]) * (z[R] - z[j]);
      right[j] = acc;
    }
    if (p.pinned && L < *p.pinned && *p.pinned < R) {
      // Tents cannot vanish at the pin here. Modulo the span, a left-form
      // hinge at i equals (z_L - z_i) times the tent that peaks at L and
      // reaches back to the previous basis knot (mirror image on the right).
      const std::size_t k0 = *p.pinned;
      double outer_left = 0.0, outer_right = 0.0;
      if (q > 0) {
        const std::size_t P = basis[q - 1];
        for (std::size_t j = P + 1; j < L; ++j) {
          const double u = (z[j] - z[P]) / (z[L] - z[P]);
          outer_left += w[j] * u * u;
        }
      }
      if (q + 2 < basis.size()) {
        const std::size_t N = basis[q + 2];
        for (std::size_t j = R + 1; j < N; ++j) {
          const double u = (z[N] - z[j]) / (z[N] - z[R]);
          outer_right += w[j] * u * u;
        }
      }
      double mass = 0.0, first = 0.0, second = 0.0;
      for (std::size_t i = L + 1; i <= k0; ++i) {
        const double delta = z[i] - z[i - 1];
        mass += w[i - 1];
        second += 2.0 * delta * first + delta * delta * mass;
        first += delta * mass;
        const double reach = z[i] - z[L];
        out[i] = std::sqrt(second + reach * reach * outer_left);
      }
      mass = first = second = 0.0;
      for (std::size_t i = R - 1; i > k0; --i) {
        const double delta = z[i + 1] - z[i];
        mass += w[i + 1];
        second += 2.0 * delta * first + delta * delta * mass;
        first += delta * mass;
        const double reach = z[R] - z[i];
        out[i] = std::sqrt(second + reach * reach * outer_right);
      }
      continue;
    }
    const double span = z[R] - z[L];
    for (std::size_t i = L + 1; i < R; ++i) {
      const double a = (z[R] - z[i]) / span;
      const double b = (z[i] - z[L]) / span;
      out[i] = std::sqrt(left[i] * a * a + right[i] * b * b);
    }
  }
  return out;
}

}  // namespace

void ConeProblem::validate() const {
  const std::size_t m = grid.size();
  if (m < 2) throw DataError("cone_qp: grid needs at least two points");
  if (weights.size() != m || targets.size() != m) {
    throw DataError("cone_qp: grid, weights and targets must have equal length");
  }
  std::size_t positive = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (!std::isfinite(grid[j]) || !std::isfinite(weights[j]) || !std::isfinite(targets[j])) {
      throw DataError("cone_qp: non-finite input");
    }
    if (j > 0 && !(grid[j - 1] < grid[j])) {
      throw DataError("cone_qp: grid must be strictly increasing");
    }
    if (weights[j] < 0.0) throw DataError("cone_qp: negative weight");
    if (weights[j] > 0.0) ++positive;
  }
  if (positive < 2) throw DataError("cone_qp: need at least two positive weights");
  if (pinned && *pinned >= m) throw DataError("cone_qp: pinned index out of range");
  for (std::size_t e : {std::size_t{0}, m - 1}) {
    if (weights[e] == 0.0 && !(pinned && *pinned == e)) {
      throw DataError("cone_qp: an unpinned endpoint must have positive weight");
    }
  }
}

std::string Generator::label() const {
  switch (kind) {
    case Kind::kPlusOne: return "+1";
    case Kind::kMinusOne: return "-1";
    case Kind::kPlusLinear: return "+x";
    case Kind::kMinusLinear: return "-x";
    case Kind::kHinge: return "hinge@" + std::to_string(knot);
  }
  return "?";
}

std::vector<Generator> generators(const std::vector<double>& grid,
                                  std::optional<std::size_t> pinned) {
  const std::size_t m = grid.size();
  if (m < 2) throw DataError("generators: grid needs at least two points");
  if (pinned && *pinned >= m) throw DataError("generators: pinned index out of range");
  std::vector<Generator> out;
  using Kind = Generator::Kind;
  if (!pinned) {
    out.push_back({Kind::kPlusOne, 0, std::vector<double>(m, 1.0)});
    out.push_back({Kind::kMinusOne, 0, std::vector<double>(m, -1.0)});
    Generator px{Kind::kPlusLinear, 0, grid};
    Generator mx{Kind::kMinusLinear, 0, grid};
    for (double& v : mx.values) v = -v;
    out.push_back(std::move(px));
    out.push_back(std::move(mx));
    for (std::size_t i = 1; i + 1 < m; ++i) {
      Generator h{Kind::kHinge, i, std::vector<double>(m, 0.0)};
      for (std::size_t j = 0; j < m; ++j) h.values[j] = std::min(grid[i] - grid[j], 0.0);
      out.push_back(std::move(h));
    }
    return out;
  }
  const std::size_t k0 = *pinned;
  const double x0 = grid[k0];
  Generator px{Kind::kPlusLinear, 0, std::vector<double>(m)};
  Generator mx{Kind::kMinusLinear, 0, std::vector<double>(m)};
  for (std::size_t j = 0; j < m; ++j) {
    px.values[j] = grid[j] - x0;
    mx.values[j] = -(grid[j] - x0);
  }
  out.push_back(std::move(px));
  out.push_back(std::move(mx));
  for (std::size_t i = 1; i + 1 < m; ++i) {
    Generator h{Kind::kHinge, i, std::vector<double>(m, 0.0)};
    for (std::size_t j = 0; j < m; ++j) {
      h.values[j] = i <= k0 ? std::min(grid[j] - grid[i], 0.0)
                            : std::min(grid[i] - grid[j], 0.0);
    }
    out.push_back(std::move(h));
  }
  return out;
}

double cone_objective(const ConeProblem& problem, const std::vector<double>& r) {
  CompensatedSum s;
  for (std::size_t j = 0; j < r.size(); ++j) {
    const double e = problem.targets[j] - r[j];
    s += problem.weights[j] * e * e;
  }
  return 0.5 * s.value();
}

std::vector<double> cone_multipliers(const ConeProblem& problem,
                                     const std::vector<double>& r) {
  const auto& z = problem.grid;
  const std::size_t m = z.size();
  auto slope = [&](std::size_t s) { return (r[s + 1] - r[s]) / (z[s + 1] - z[s]); };
  std::vector<double> out;
  if (!problem.pinned) {
    const double beta = slope(0);
    const double b = r[0] - beta * z[0];
    out = {std::max(b, 0.0), std::max(-b, 0.0), std::max(beta, 0.0), std::max(-beta, 0.0)};
  } else {
    const std::size_t k0 = *problem.pinned;
    const double beta = k0 + 1 < m ? slope(k0) : slope(m - 2);
    out = {std::max(beta, 0.0), std::max(-beta, 0.0)};
  }
  for (std::size_t i = 1; i + 1 < m; ++i) out.push_back(std::max(slope(i - 1) - slope(i), 0.0));
  return out;
}

ConeSolution project(const ConeProblem& problem, const ProjectOptions& options) {
  problem.validate();
  const auto& z = problem.grid;
  const std::size_t m = z.size();
  const std::size_t cap = options.max_iterations ? options.max_iterations : 50 * m;

  CompensatedSum target_ss;
  for (std::size_t j = 0; j < m; ++j) {
    target_ss += problem.weights[j] * problem.targets[j] * problem.targets[j];
  }
  const double target_norm = std::max(std::sqrt(target_ss.value()),
                                      std::numeric_limits<double>::min());
  const double threshold = -options.tol * target_norm;

  auto admissible = [&](std::size_t i) {
    return problem.weights[i] > 0.0 || (problem.pinned && *problem.pinned == i);
  };

  std::vector<std::size_t> support;
  std::vector<double> r = solve_on_support(problem, support);
  std::size_t iterations = 1;

  while (true) {
    const auto d = hinge_derivatives(problem, r);
    const auto norms = hinge_scales(problem, support);
    // Stop once no hinge has a normalized violation; otherwise add the most
    // violated one by raw inner product (lowest index on ties).
    std::size_t best = m;
    double best_val = 0.0;
    bool violated_any = false;
    std::size_t next = 0;  // walks the sorted support
    for (std::size_t i = 1; i + 1 < m; ++i) {
      while (next < support.size() && support[next] < i) ++next;
      if (next < support.size() && support[next] == i) continue;
      if (!admissible(i) || !(norms[i] > 0.0)) continue;
      if (d[i] < threshold * norms[i]) violated_any = true;
      if (d[i] < best_val) {
        best_val = d[i];
        best = i;
      }
    }
    if (!violated_any) best = m;
    if (best == m) break;

    std::vector<std::size_t> trial = support;
    trial.insert(std::lower_bound(trial.begin(), trial.end(), best), best);
    while (true) {
      if (++iterations > cap) {
        throw SolverError("cone_qp: active-set iteration cap (" + std::to_string(cap) +
                          ") exceeded");
      }
      const auto rn = solve_on_support(problem, trial);
      double lam_min = 1.0;
      bool violated = false;
      std::vector<double> lam(trial.size(), 2.0);
      for (std::size_t q = 0; q < trial.size(); ++q) {
        const std::size_t k = trial[q];
        const double scn = slope_change_at(z, rn, k);
        if (scn > 0.0) {
          const double sco = std::min(slope_change_at(z, r, k), 0.0);
          lam[q] = sco / (sco - scn);
          violated = true;
          lam_min = std::min(lam_min, lam[q]);
        }
      }
      if (!violated) {
        r = rn;
        support = std::move(trial);
        break;
      }
      for (std::size_t j = 0; j < m; ++j) r[j] += lam_min * (rn[j] - r[j]);
      std::vector<std::size_t> kept;
      kept.reserve(trial.size());
      for (std::size_t q = 0; q < trial.size(); ++q) {
        if (lam[q] > lam_min * (1.0 + 1e-12)) kept.push_back(trial[q]);
      }
      trial = std::move(kept);
    }
  }

  ConeSolution sol;
  sol.fitted = std::move(r);
  if (problem.pinned) sol.fitted[*problem.pinned] = 0.0;
  sol.objective = cone_objective(problem, sol.fitted);
  sol.multipliers = cone_multipliers(problem, sol.fitted);
  sol.iterations = iterations;
  const double vmax = max_abs(sol.fitted);
  for (std::size_t k : support) {
    const double dl = z[k] - z[k - 1], dr = z[k + 1] - z[k];
    const double thr = kKnotTol * vmax * (1.0 / dl + 1.0 / dr);
    if (-slope_change_at(z, sol.fitted, k) > thr) {
      sol.knots.push_back(k);
    } else {
      sol.near_degenerate = true;
    }
  }
  return sol;
}

FenchelReport fenchel_check(const ConeProblem& problem, const std::vector<double>& fitted,
                            double tol) {
  problem.validate();
  const auto& z = problem.grid;
  const std::size_t m = z.size();
  if (fitted.size() != m) throw DataError("fenchel_check: dimension mismatch");

  std::vector<double> g(m);
  double mass = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    g[j] = problem.weights[j] * (fitted[j] - problem.targets[j]);
    mass += problem.weights[j] * (std::abs(fitted[j]) + std::abs(problem.targets[j]));
  }

  FenchelReport rep;
  rep.scale = std::max(mass * generator_reach(problem), std::numeric_limits<double>::min());
  rep.multipliers = cone_multipliers(problem, fitted);
  const auto gens = generators(z, problem.pinned);
  const double vmax = max_abs(fitted);
  rep.pass = true;
  for (std::size_t q = 0; q < gens.size(); ++q) {
    const auto& gen = gens[q];
    CompensatedSum ip;
    for (std::size_t j = 0; j < m; ++j) ip += gen.values[j] * g[j];
    const double v = ip.value();
    rep.labels.push_back(gen.label());
    rep.inner_products.push_back(v);

    rep.worst_inequality = std::min(rep.worst_inequality, v / rep.scale);
    if (v < -tol * rep.scale) rep.pass = false;

    bool on_support = rep.multipliers[q] > 0.0;
    if (gen.kind == Generator::Kind::kHinge) {
      const std::size_t k = gen.knot;
      const double thr = kKnotTol * vmax * (1.0 / (z[k] - z[k - 1]) + 1.0 / (z[k + 1] - z[k]));
      on_support = rep.multipliers[q] > thr;
    }
    if (on_support) {
      rep.worst_equality = std::max(rep.worst_equality, std::abs(v) / rep.scale);
      if (std::abs(v) > tol * rep.scale) rep.pass = false;
    }
  }
  return rep;
}

}  // namespace concavelr
