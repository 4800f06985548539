#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "brute_force.hpp"
#include "concavelr/data_model.hpp"
#include "concavelr/error.hpp"
#include "concavelr/limit_sim.hpp"
#include "concavelr/parallel.hpp"

using namespace concavelr;

namespace {

double phi(const LimitPath& p, const std::vector<double>& r) {
  const auto y = p.targets();
  double v = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) v += p.h * (0.5 * r[j] * r[j] - r[j] * y[j]);
  return v;
}

bool concave_vector(const std::vector<double>& r) {
  for (std::size_t j = 1; j + 1 < r.size(); ++j) {
    if (r[j + 1] - 2 * r[j] + r[j - 1] > 1e-9 * (1.0 + std::abs(r[j]))) return false;
  }
  return true;
}

}  // namespace

TEST(SimulatePath, PureDrift) {
  const auto p = simulate_path(2.0, 0.01, 1.0, 0.0, 7);
  for (std::size_t k = 0; k < p.s.size(); ++k) {
    EXPECT_EQ(p.x[k], -4.0 * p.s[k] * p.s[k] * p.s[k]);
  }
  const auto t = p.grid();
  EXPECT_EQ(t[p.zero_cell()], 0.0);
  EXPECT_NEAR(t[p.zero_cell() + 100], 1.0, 1e-14);
  EXPECT_NEAR(p.x[2 * (p.zero_cell() + 100) + 1], -4.0, 1e-12);
  EXPECT_EQ(p.cells(), 401u);
}

TEST(SimulatePath, ZeroAtOriginAndDeterministic) {
  const auto a = simulate_path(1.0, 0.05, 1.0, 1.0, 3);
  const auto b = simulate_path(1.0, 0.05, 1.0, 1.0, 3);
  const auto c = simulate_path(1.0, 0.05, 1.0, 1.0, 4);
  const std::size_t zf = 2 * a.zero_cell() + 1;
  EXPECT_EQ(a.s[zf], 0.0);
  EXPECT_EQ(a.x[zf], 0.0);
  EXPECT_EQ(a.w[zf], 0.0);
  EXPECT_EQ(a.x, b.x);
  EXPECT_NE(a.x, c.x);
}

TEST(SimulatePath, BrownianVariance) {
  const int K = 10000;
  double s = 0.0, ss = 0.0;
  for (int k = 0; k < K; ++k) {
    const auto p = simulate_path(1.0, 0.1, 0.0, 1.0, replication_rng(99, k)());
    const double v = p.x[2 * (p.zero_cell() + 10) + 1];
    s += v;
    ss += v * v;
  }
  const double var = ss / K - (s / K) * (s / K);
  EXPECT_NEAR(var, 1.0, 3.0 * std::sqrt(2.0 / K));
}

TEST(SimulatePath, RejectsBadGrid) {
  EXPECT_THROW(simulate_path(1.0, 0.3, 1.0, 1.0, 1), DataError);
  EXPECT_THROW(simulate_path(-1.0, 0.1, 1.0, 1.0, 1), DataError);
  EXPECT_THROW(simulate_path(1.0, 0.1, -1.0, 1.0, 1), DataError);
  EXPECT_THROW(simulate_path(1.0, 0.1, 1.0, -1.0, 1), DataError);
}

TEST(Refine, KeepsOldPoints) {
  const auto p = simulate_path(1.0, 0.05, 1.0, 1.0, 5);
  const auto q = refine(p, 6);
  EXPECT_EQ(q.h, 0.025);
  EXPECT_EQ(q.cells(), 2 * p.cells() - 1);
  for (std::size_t i = 1; i + 1 < p.s.size(); ++i) {
    EXPECT_EQ(q.w[2 * i - 1], p.w[i]);
    EXPECT_NEAR(q.s[2 * i - 1], p.s[i], 1e-14);
  }
  EXPECT_EQ(q.x[2 * q.zero_cell() + 1], 0.0);
}

TEST(Invelope, DriftOnlyReproducesTargets) {
  const auto p = simulate_path(2.0, 0.01, 1.0, 0.0, 1);
  const auto y = p.targets();
  const auto r = invelope_unconstrained(p);
  for (std::size_t j = 0; j < r.size(); ++j) EXPECT_NEAR(r[j], y[j], 1e-9);
  const auto r0 = invelope_constrained(p);
  EXPECT_EQ(r0[p.zero_cell()], 0.0);
  for (std::size_t j = 0; j < r0.size(); ++j) EXPECT_NEAR(r0[j], y[j], 1e-3);
}

TEST(Invelope, ConcavePinnedNested) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = simulate_path(3.0, 0.01, 1.0, 1.0, seed);
    const auto r = invelope_unconstrained(p);
    const auto r0 = invelope_constrained(p);
    EXPECT_TRUE(concave_vector(r));
    EXPECT_TRUE(concave_vector(r0));
    EXPECT_EQ(r0[p.zero_cell()], 0.0);
    EXPECT_GE(phi(p, r0), phi(p, r) - 1e-12);
  }
}

TEST(Invelope, SmallGridMatchesOracle) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = simulate_path(0.2, 0.1, 1.0, 1.0, seed);
    ASSERT_EQ(p.cells(), 5u);
    const auto t = p.grid();
    const std::vector<double> w(5, p.h);
    const auto y = p.targets();
    const auto ou = oracle::brute_force(t, w, y);
    const auto oc = oracle::brute_force(t, w, y, p.zero_cell());
    const auto r = invelope_unconstrained(p);
    const auto r0 = invelope_constrained(p);
    for (std::size_t j = 0; j < 5; ++j) {
      EXPECT_NEAR(r[j], ou.fitted[j], 1e-8);
      EXPECT_NEAR(r0[j], oc.fitted[j], 1e-8);
    }
  }
}

TEST(DeeDraw, DriftOnlyIsZero) {
  const auto p = simulate_path(4.0, 0.005, 1.0, 0.0, 1);
  EXPECT_LE(std::abs(dee_draw(p, 4.0)), 1e-10);
  EXPECT_LE(std::abs(dee_draw(p, 3.0)), 1e-10);
}

TEST(DeeDraw, FullDomainIdentity) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto p = simulate_path(3.0, 0.01, 1.0, 1.0, replication_rng(3, seed)());
    const auto r = invelope_unconstrained(p);
    const auto r0 = invelope_constrained(p);
    const double d = dee_draw(p, r, r0, 3.0);
    EXPECT_GE(d, 0.0);
    EXPECT_NEAR(d, 2.0 * (phi(p, r0) - phi(p, r)), 1e-9 * (1.0 + d));
  }
  const auto p = simulate_path(1.0, 0.1, 1.0, 1.0, 1);
  EXPECT_THROW(dee_draw(p, 1.5), DataError);
  EXPECT_THROW(dee_draw(p, 0.0), DataError);
}

TEST(CriticalTable, QuantilesAndTails) {
  const CriticalTable t({3.0, 1.0, 2.0, 4.0}, {});
  EXPECT_EQ(t.size(), 4u);
  EXPECT_EQ(t.quantile(0.0), 1.0);
  EXPECT_EQ(t.quantile(1.0), 4.0);
  EXPECT_EQ(t.quantile(0.5), 2.0);
  EXPECT_EQ(t.quantile(0.51), 3.0);
  EXPECT_EQ(t.ecdf(2.0), 0.5);
  EXPECT_EQ(t.upper_tail(2.0), 0.75);
  EXPECT_EQ(t.upper_tail(0.0), 1.0);
  EXPECT_EQ(t.upper_tail(5.0), 0.0);
  EXPECT_THROW(t.quantile(1.5), DataError);
  EXPECT_THROW(CriticalTable({}, {}), TableError);
  const CriticalTable empty;
  EXPECT_THROW(empty.quantile(0.5), TableError);
  EXPECT_THROW(empty.ecdf(1.0), TableError);
  EXPECT_THROW(empty.upper_tail(1.0), TableError);
}

TEST(CriticalTable, DeterministicAcrossThreads) {
  const auto a = critical_table(40, 2.0, 0.02, 2.0, 17, 1);
  const auto b = critical_table(40, 2.0, 0.02, 2.0, 17, 4);
  const auto c = critical_table(40, 2.0, 0.02, 2.0, 18, 1);
  EXPECT_EQ(a.draws(), b.draws());
  EXPECT_NE(a.draws(), c.draws());
  EXPECT_GE(a.draws().front(), 0.0);
  EXPECT_EQ(a.metadata().seed, 17u);
  EXPECT_EQ(a.metadata().M, 40u);
  EXPECT_THROW(critical_table(0, 2.0, 0.02, 2.0, 1, 1), DataError);
  EXPECT_THROW(critical_table(5, 2.0, 0.02, 2.5, 1, 1), DataError);
}

TEST(CriticalTable, SaveLoadRoundTrip) {
  const auto dir = std::filesystem::path(::testing::TempDir()) / "concavelr_table";
  std::filesystem::create_directories(dir);
  const auto csv = dir / "t.csv";
  const auto a = critical_table(25, 1.0, 0.05, 1.0, 21, 2);
  a.save(csv);
  EXPECT_TRUE(std::filesystem::exists(table_sidecar(csv)));
  const auto b = CriticalTable::load(csv);
  EXPECT_EQ(a.draws(), b.draws());
  EXPECT_EQ(b.metadata().seed, 21u);
  EXPECT_EQ(b.metadata().c, 1.0);
  EXPECT_EQ(b.metadata().h, 0.05);

  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "p,quantile");

  std::filesystem::remove(table_sidecar(csv));
  EXPECT_EQ(CriticalTable::load(csv).draws(), a.draws());
  std::ofstream(table_sidecar(csv)) << R"({"M": 3, "c": 1, "h": 0.05, "b": 1, "seed": 21})";
  EXPECT_THROW(CriticalTable::load(csv), TableError);
  EXPECT_THROW(CriticalTable::load(dir / "missing.csv"), TableError);
  std::ofstream(dir / "bad.csv") << "p,q\n0.5,1\n";
  EXPECT_THROW(CriticalTable::load(dir / "bad.csv"), TableError);
}

TEST(InvelopeCheck, ConstrainedFitsPass) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto p = simulate_path(4.0, 0.01, 1.0, 1.0, replication_rng(11, seed)());
    const auto rep = invelope_check(p, invelope_constrained(p), InvelopeMode::kConstrained, 3.0,
                                    default_invelope_tol(p));
    EXPECT_TRUE(rep.pass) << "seed " << seed << " gap " << rep.middle_gap << " exc "
                          << rep.max_excursion << " int " << rep.integral_left << ","
                          << rep.integral_right;
    EXPECT_FALSE(rep.degenerate);
    EXPECT_LE(rep.tau_left, 0.0);
    EXPECT_GE(rep.tau_right, 0.0);
  }
}

TEST(InvelopeCheck, UnconstrainedFitsPass) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = simulate_path(4.0, 0.01, 1.0, 1.0, replication_rng(12, seed)());
    const auto rep = invelope_check(p, invelope_unconstrained(p), InvelopeMode::kUnconstrained,
                                    3.0, default_invelope_tol(p));
    EXPECT_TRUE(rep.pass) << "seed " << seed;
    EXPECT_LE(rep.concavity, kConcavityTol);
  }
}

TEST(InvelopeCheck, DriftOnlyNearZero) {
  const auto p = simulate_path(4.0, 0.005, 1.0, 0.0, 1);
  const auto rep = invelope_check(p, invelope_constrained(p), InvelopeMode::kConstrained, 3.0,
                                  default_invelope_tol(p));
  EXPECT_TRUE(rep.pass);
  EXPECT_LE(std::abs(rep.middle_gap), 1e-10);
  EXPECT_LE(rep.max_excursion, 10.0 * p.h * p.h);
  EXPECT_LE(std::abs(rep.integral_left), 10.0 * p.h * p.h);
}

TEST(InvelopeCheck, ShiftedFitFails) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = simulate_path(4.0, 0.01, 1.0, 1.0, replication_rng(13, seed)());
    auto r0 = invelope_constrained(p);
    for (double& v : r0) v += 0.1;
    const auto rep = invelope_check(p, r0, InvelopeMode::kConstrained, 3.0,
                                    default_invelope_tol(p));
    EXPECT_FALSE(rep.pass) << "seed " << seed;
  }
  const auto p = simulate_path(1.0, 0.1, 1.0, 1.0, 1);
  EXPECT_THROW(invelope_check(p, {1.0}, InvelopeMode::kConstrained, 0.5, 0.1), DataError);
}

TEST(Rescale, IdentityAndGammaRelation) {
  const std::vector<double> t{-1.0, 0.0, 1.0}, r{-1.0, 0.0, -2.0};
  const auto c = rescale_canonical(t, r, 1.0, 1.0);
  EXPECT_EQ(c.gamma1, 1.0);
  EXPECT_EQ(c.gamma2, 1.0);
  EXPECT_EQ(c.u, t);
  EXPECT_EQ(c.values, r);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 20.0);
  for (int k = 0; k < 100; ++k) {
    const double a = u(rng), s = u(rng);
    const auto cc = rescale_canonical(t, r, a, s);
    EXPECT_NEAR(cc.gamma1 * std::pow(cc.gamma2, 1.5) * s, 1.0, 1e-13);
  }
  EXPECT_THROW(rescale_canonical(t, r, 0.0, 1.0), DataError);
  EXPECT_THROW(rescale_canonical(t, r, 1.0, -1.0), DataError);
}

TEST(Rescale, ScaledPathCommutes) {
  const auto canon = simulate_path(3.0, 0.01, 1.0, 1.0, 8);
  const auto rc = invelope_constrained(canon);
  for (auto [a, s] : {std::pair{1.0, 2.0}, std::pair{1.0 / 12.0, 1.0}}) {
    const auto sp = scaled_path(canon, a, s);
    const auto rs = invelope_constrained(sp);
    const auto back = rescale_canonical(sp.grid(), rs, a, s);
    const auto cg = canon.grid();
    double err = 0.0;
    for (std::size_t j = 0; j < rc.size(); ++j) {
      EXPECT_NEAR(back.u[j], cg[j], 1e-12);
      err = std::max(err, std::abs(back.values[j] - rc[j]));
    }
    EXPECT_LE(err, 5.0 * canon.h);
  }
}
