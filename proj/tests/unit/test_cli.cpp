#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "concavelr/estimators.hpp"
#include "concavelr/serialize.hpp"

namespace fs = std::filesystem;
using namespace concavelr;

namespace {

fs::path tmp_dir() {
  const fs::path p = CONCAVELR_TEST_TMP;
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(const std::string& args, const std::string& tag, const std::string& env = "") {
  const fs::path out = tmp_dir() / (tag + ".stdout");
  const fs::path err = tmp_dir() / (tag + ".stderr");
  const std::string cmd = env + " '" + std::string(CONCAVELR_CLI_PATH) + "' " + args + " >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Noisy concave (or convex) data written as a CSV; returns the design too.
Design noisy_csv(const fs::path& p, std::size_t n, std::uint64_t seed, bool convex = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> x(n), y(n);
  std::string text = "x,y\n";
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    y[i] = (convex ? 1.0 : -1.0) * x[i] * x[i] + 0.2 * g(rng);
    text += fmt(x[i]) + "," + fmt(y[i]) + "\n";
  }
  write(p, text);
  return Design(x, y);
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, TwoRowFitInterpolates) {
  const fs::path in = tmp_dir() / "two.csv";
  write(in, "x,y\n0,1\n1,3\n");
  const auto r = run("fit --input " + q(in), "two");
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["objective"].get<double>(), 0.0);
  EXPECT_EQ(j["fit"]["values"][0].get<double>(), 1.0);
  EXPECT_EQ(j["fit"]["values"][1].get<double>(), 3.0);
}

TEST(Cli, CertifyPasses) {
  const fs::path in = tmp_dir() / "cert.csv";
  noisy_csv(in, 60, 1);
  const auto r = run("fit --certify --input " + q(in), "cert");
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_TRUE(j["certification"]["pass"].get<bool>());
  EXPECT_FALSE(j["certification"]["conditions"].empty());
}

TEST(Cli, MalformedInputExitsTwo) {
  const fs::path in = tmp_dir() / "bad.csv";
  write(in, "x,y\n0,1\n1,abc\n");
  const auto r = run("fit --input " + q(in), "bad");
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
  EXPECT_TRUE(r.out.empty());

  EXPECT_EQ(run("fit --input " + q(tmp_dir() / "missing.csv"), "missing").code, 2);
  EXPECT_EQ(run("fit --bogus", "bogus").code, 2);
  EXPECT_EQ(run("test --input " + q(in), "noflags").code, 2);
}

TEST(Cli, ZeroStatisticFailsToReject) {
  const fs::path in = tmp_dir() / "zero.csv";
  const Design d = noisy_csv(in, 50, 2);
  const double x0 = d.x()[20];
  const double y0 = fit_alse(d).fit(x0);
  const auto r = run("test --input " + q(in) + " --x0 " + fmt(x0) + " --y0 " + fmt(y0), "zero");
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["statistic"].get<double>(), 0.0);
  EXPECT_EQ(j["decision"], "fail_to_reject");
  EXPECT_EQ(j["p_value"].get<double>(), 1.0);
}

TEST(Cli, FitReloadsForVerification) {
  const fs::path in = tmp_dir() / "rt.csv";
  noisy_csv(in, 40, 3);
  const fs::path fit = tmp_dir() / "rt_fit.json";
  ASSERT_EQ(run("fit --input " + q(in) + " --out " + q(fit), "rt_fit").code, 0);
  const auto r = run("test --input " + q(in) + " --x0 0.1 --y0 0 --fit " + q(fit), "rt_test");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(Json::parse(r.out)["fit_certification"]["pass"].get<bool>());

  Json j = Json::parse(slurp(fit));
  j["fit"]["values"][5] = j["fit"]["values"][5].get<double>() - 0.05;
  const fs::path bad = tmp_dir() / "rt_bad.json";
  write(bad, j.dump());
  EXPECT_EQ(run("test --input " + q(in) + " --x0 0.1 --y0 0 --fit " + q(bad), "rt_bad").code, 2);
}

TEST(Cli, ConvexRoundTrip) {
  const fs::path in = tmp_dir() / "cvx.csv";
  const Design d = noisy_csv(in, 40, 4, true);
  const fs::path fit = tmp_dir() / "cvx_fit.json";
  ASSERT_EQ(run("fit --convex --input " + q(in) + " --out " + q(fit), "cvx_fit").code, 0);
  const Json j = Json::parse(slurp(fit));
  const auto ref = fit_alse(d.negated());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(j["fit"]["values"][i].get<double>(), -ref.fit.values()[i]);
  }
  const auto r =
      run("test --convex --input " + q(in) + " --x0 0 --y0 0 --fit " + q(fit), "cvx_test");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(run("test --input " + q(in) + " --x0 0 --y0 0 --fit " + q(fit), "cvx_mix").code, 2);
}

TEST(Cli, CiEmitsIntervalAndGrid) {
  const fs::path in = tmp_dir() / "ci.csv";
  const Design d = noisy_csv(in, 80, 5);
  const fs::path grid = tmp_dir() / "ci_grid.csv";
  const auto r = run("ci --input " + q(in) + " --x0 0.05 --grid-csv " + q(grid), "ci");
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  const double est = fit_alse(d).fit(0.05);
  EXPECT_LE(j["interval"][0].get<double>(), est);
  EXPECT_GE(j["interval"][1].get<double>(), est);
  const std::string csv = slurp(grid);
  EXPECT_EQ(csv.rfind("y,statistic,accepted\n", 0), 0u);
  EXPECT_EQ(j["grid"]["y"].size() + 1,
            static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')));
  const auto again = run("ci --input " + q(in) + " --x0 0.05 --threads 1", "ci_again");
  EXPECT_EQ(again.out, r.out);
}

TEST(Cli, LimitTableDeterministic) {
  const fs::path a = tmp_dir() / "lt_a.csv", b = tmp_dir() / "lt_b.csv";
  const std::string flags = " --M 10 --c 2 --h 0.02 --seed 7";
  ASSERT_EQ(run("limit-table --out " + q(a) + flags + " --threads 1", "lt_a").code, 0);
  ASSERT_EQ(run("limit-table --out " + q(b) + flags + " --threads 3", "lt_b").code, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());
  EXPECT_EQ(slurp(fs::path(a).replace_extension(".json")),
            slurp(fs::path(b).replace_extension(".json")));
  EXPECT_EQ(run("limit-table --M 10", "lt_noout").code, 2);
}

TEST(Cli, MissingTableExitsFour) {
  const fs::path in = tmp_dir() / "mt.csv";
  noisy_csv(in, 20, 6);
  const std::string args = "test --input " + q(in) + " --x0 0 --y0 0";
  EXPECT_EQ(run(args + " --table " + q(tmp_dir() / "nope.csv"), "mt").code, 4);
  EXPECT_EQ(run(args, "mt_env", "CONCAVELR_TABLE=" + q(tmp_dir() / "nope.csv")).code, 4);
}

TEST(Cli, StudiesDeterministic) {
  const std::string ls = "level-study --scenario neg_quadratic --n 30 --M 20 --seed 3 --format csv";
  const auto a = run(ls + " --threads 1", "ls_a");
  const auto b = run(ls + " --threads 2", "ls_b");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.rfind("scenario,n,design,sigma,M,alpha,rate,se,rate_plugin,se_plugin\n", 0), 0u);

  const std::string es = "ecdf-study --scenario cosine --n 30 --M 15 --seed 4";
  const auto c = run(es, "es_a");
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_EQ(c.out, run(es + " --threads 1", "es_b").out);
  const Json j = Json::parse(c.out);
  EXPECT_EQ(j["curves"].size(), 2u);
  EXPECT_EQ(j["curves"][1]["name"], "limit");
}
