#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "concavelr/characterization.hpp"
#include "concavelr/error.hpp"
#include "concavelr/estimators.hpp"
#include "concavelr/limit_sim.hpp"
#include "concavelr/lrt.hpp"
#include "concavelr/mc_harness.hpp"
#include "concavelr/parallel.hpp"
#include "concavelr/serialize.hpp"
#include "concavelr/version.hpp"

namespace fs = std::filesystem;
using namespace concavelr;

namespace {

constexpr int kExitData = 2;
constexpr int kExitSolver = 3;
constexpr int kExitTable = 4;
constexpr std::uint64_t kDefaultTableSeed = 20240501;  // seed of the shipped table

struct CliConfig {
  std::string input;
  double x0 = 0.0;
  double y0 = 0.0;
  double alpha = 0.05;
  std::optional<double> sigma2;
  std::string table;
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "json";
  bool convex = false;
  bool certify = false;
  bool df_variance = false;
  std::string fit_json;
  unsigned threads = 0;

  // ci
  std::size_t points = 201;
  std::optional<double> half_width;
  std::string grid_csv;

  // limit-table
  std::size_t M = 0;
  double c = 4.0;
  double h = 0.005;
  std::optional<double> b;

  // studies
  std::vector<std::string> scenarios;
  std::size_t n = 100;
  std::string design = "fixed";
  double sigma = 1.0;
  std::vector<double> alphas{0.05, 0.10};
  std::vector<double> xs;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(const CliConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw DataError("cannot write " + cfg.out);
  f << text;
  if (!f) throw DataError("write failed: " + cfg.out);
}

void emit_json(const CliConfig& cfg, const Json& j) { emit(cfg, j.dump(2) + "\n"); }

CriticalTable load_table(const CliConfig& cfg) {
  const fs::path p = cfg.table.empty() ? default_table_path() : fs::path(cfg.table);
  return CriticalTable::load(p);
}

FitOptions fit_options(const CliConfig& cfg) {
  FitOptions o;
  if (cfg.df_variance) o.variance = VarianceEstimator::kDfCorrected;
  return o;
}

LrOptions lr_options(const CliConfig& cfg) {
  LrOptions o;
  o.sigma2 = cfg.sigma2;
  o.convex = cfg.convex;
  o.fit = fit_options(cfg);
  return o;
}

// Flips a fit of the negated data back to the caller's orientation.
void flip_fit_json(Json& j) {
  for (auto& v : j["fit"]["values"]) v = -v.get<double>();
  for (auto& v : j["residuals"]) v = -v.get<double>();
}

int cmd_fit(const CliConfig& cfg) {
  const Design data = read_design_csv(cfg.input);
  const Design d = cfg.convex ? data.negated() : data;
  const FitResult r = fit_alse(d, fit_options(cfg));
  Json j = to_json(r);
  if (cfg.convex) flip_fit_json(j);
  j["convex"] = cfg.convex;
  if (cfg.certify) {
    const std::vector<double> f(r.fit.values().begin(), r.fit.values().end());
    j["certification"] = to_json(check_alse(d, f));
  }
  if (cfg.format == "csv") {
    std::ostringstream os;
    os << "x,y,fit\n";
    const auto& vals = j["fit"]["values"];
    for (std::size_t i = 0; i < data.size(); ++i) {
      os << fmt(data.x()[i]) << ',' << fmt(data.y()[i]) << ',' << fmt(vals[i].get<double>())
         << '\n';
    }
    emit(cfg, os.str());
  } else {
    emit_json(cfg, j);
  }
  return 0;
}

// Checks a fit written by `fit` against the characterization conditions for
// this data set.
Json verify_fit(const CliConfig& cfg, const Design& d) {
  std::ifstream f(cfg.fit_json);
  if (!f) throw DataError("cannot open fit " + cfg.fit_json);
  Json j;
  try {
    j = Json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed fit JSON: ") + e.what());
  }
  const bool convex = j.value("convex", false);
  if (convex != cfg.convex) throw DataError("fit orientation does not match --convex");
  if (convex) flip_fit_json(j);
  const auto fit = fit_from_json(j);
  if (fit.size() != d.size()) throw DataError("fit has a different number of knots than the data");
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (fit.knots()[i] != d.x()[i]) throw DataError("fit knots differ from the data abscissas");
  }
  const std::vector<double> vals(fit.values().begin(), fit.values().end());
  const auto rep = check_alse(d, vals, 1e-7);
  if (!rep.pass) throw DataError("supplied fit fails the characterization of the ALSE");
  return to_json(rep);
}

int cmd_test(const CliConfig& cfg) {
  const Design data = read_design_csv(cfg.input);
  const auto table = load_table(cfg);
  Json cert;
  if (!cfg.fit_json.empty()) cert = verify_fit(cfg, cfg.convex ? data.negated() : data);
  const auto dec = lr_test(data, cfg.x0, cfg.y0, cfg.alpha, table, lr_options(cfg));
  Json j = to_json(dec);
  j["x0"] = cfg.x0;
  j["y0"] = cfg.y0;
  j["convex"] = cfg.convex;
  j["table"] = {{"M", table.metadata().M},
                {"c", table.metadata().c},
                {"h", table.metadata().h},
                {"b", table.metadata().b},
                {"seed", table.metadata().seed}};
  if (!cert.is_null()) j["fit_certification"] = std::move(cert);
  if (cfg.format == "csv") {
    emit(cfg, "x0,y0,statistic,threshold,p_value,sigma2,decision\n" + fmt(cfg.x0) + ',' +
                  fmt(cfg.y0) + ',' + fmt(dec.statistic) + ',' + fmt(dec.threshold) + ',' +
                  fmt(dec.p_value) + ',' + fmt(dec.sigma2) + ',' +
                  (dec.reject ? "reject" : "fail_to_reject") + '\n');
  } else {
    emit_json(cfg, j);
  }
  return 0;
}

std::string grid_csv(const ConfidenceInterval& ci) {
  std::ostringstream os;
  os << "y,statistic,accepted\n";
  for (std::size_t i = 0; i < ci.grid.size(); ++i) {
    os << fmt(ci.grid[i]) << ',' << fmt(ci.statistics[i]) << ','
       << (ci.acceptance_flags[i] ? 1 : 0) << '\n';
  }
  return os.str();
}

int cmd_ci(const CliConfig& cfg) {
  const Design d = read_design_csv(cfg.input);
  const auto table = load_table(cfg);
  GridSpec grid;
  grid.points = cfg.points;
  grid.half_width = cfg.half_width;
  const auto ci = confidence_interval(d, cfg.x0, cfg.alpha, table, grid, lr_options(cfg),
                                      resolve_threads(cfg.threads));
  if (!cfg.grid_csv.empty()) {
    std::ofstream f(cfg.grid_csv, std::ios::binary);
    if (!f) throw DataError("cannot write " + cfg.grid_csv);
    f << grid_csv(ci);
  }
  if (cfg.format == "csv") {
    emit(cfg, grid_csv(ci));
    return 0;
  }
  Json j = to_json(ci);
  j["x0"] = cfg.x0;
  j["convex"] = cfg.convex;
  j["grid"] = {{"y", ci.grid}, {"statistic", ci.statistics}};
  std::vector<int> flags(ci.acceptance_flags.begin(), ci.acceptance_flags.end());
  j["grid"]["accepted"] = flags;
  emit_json(cfg, j);
  return 0;
}

int cmd_limit_table(const CliConfig& cfg) {
  if (cfg.out.empty()) throw DataError("limit-table needs --out");
  const double b = cfg.b.value_or(cfg.c);
  const auto table =
      critical_table(cfg.M == 0 ? 20000 : cfg.M, cfg.c, cfg.h, b, cfg.seed, cfg.threads);
  table.save(cfg.out);
  return 0;
}

std::vector<Scenario> scenarios(const CliConfig& cfg, std::size_t default_M) {
  std::vector<std::string> names = cfg.scenarios;
  if (names.empty()) names = {"neg_quadratic", "cosine", "neg_exp"};
  std::vector<Scenario> out;
  for (const auto& name : names) {
    out.push_back(make_scenario(name, cfg.n, parse_design_kind(cfg.design), cfg.sigma,
                                cfg.M == 0 ? default_M : cfg.M));
  }
  return out;
}

int cmd_level_study(const CliConfig& cfg) {
  const auto table = load_table(cfg);
  Json rows = Json::array();
  std::ostringstream os;
  os << "scenario,n,design,sigma,M,alpha,rate,se,rate_plugin,se_plugin\n";
  for (const auto& sc : scenarios(cfg, 1000)) {
    for (const auto& e : level_study(sc, cfg.alphas, table, cfg.seed, cfg.threads)) {
      os << sc.name() << ',' << sc.n << ',' << to_string(sc.design) << ',' << fmt(sc.sigma)
         << ',' << e.M << ',' << fmt(e.alpha) << ',' << fmt(e.rate) << ',' << fmt(e.se) << ','
         << fmt(e.rate_plugin) << ',' << fmt(e.se_plugin) << '\n';
      rows.push_back({{"scenario", sc.name()},
                      {"n", sc.n},
                      {"design", to_string(sc.design)},
                      {"sigma", sc.sigma},
                      {"M", e.M},
                      {"alpha", e.alpha},
                      {"rate", e.rate},
                      {"se", e.se},
                      {"rate_plugin", e.rate_plugin},
                      {"se_plugin", e.se_plugin}});
    }
  }
  if (cfg.format == "csv") {
    emit(cfg, os.str());
  } else {
    emit_json(cfg, rows);
  }
  return 0;
}

int cmd_ecdf_study(const CliConfig& cfg) {
  const auto table = load_table(cfg);
  const auto study = ecdf_study(scenarios(cfg, 1000), table, cfg.seed, cfg.threads);
  if (cfg.format == "csv") {
    std::ostringstream os;
    os << "curve,value,ecdf,chi2_cdf\n";
    for (const auto& curve : study.curves) {
      const double m = static_cast<double>(curve.values.size());
      for (std::size_t i = 0; i < curve.values.size(); ++i) {
        const double v = curve.values[i];
        os << curve.scenario << ',' << fmt(v) << ',' << fmt(static_cast<double>(i + 1) / m)
           << ',' << fmt(chi2_1_cdf(v)) << '\n';
      }
    }
    emit(cfg, os.str());
    return 0;
  }
  Json j;
  Json curves = Json::array();
  for (const auto& curve : study.curves) {
    curves.push_back({{"name", curve.scenario},
                      {"values", curve.values},
                      {"ks_chi2_1", ks_distance_chi2_1(curve.values)}});
  }
  j["curves"] = std::move(curves);
  Json ks = Json::array();
  for (const auto& a : study.curves) {
    std::vector<double> row;
    for (const auto& b : study.curves) row.push_back(ks_distance(a.values, b.values));
    ks.push_back(row);
  }
  j["ks"] = std::move(ks);
  emit_json(cfg, j);
  return 0;
}

int cmd_band(const CliConfig& cfg) {
  const auto table = load_table(cfg);
  std::vector<double> xs = cfg.xs;
  if (xs.empty()) {
    for (int k = -9; k <= 9; ++k) xs.push_back(0.1 * k);
  }
  const auto band = confidence_band(cfg.n, cfg.sigma, cfg.alpha, xs, table, cfg.seed, cfg.threads);
  if (cfg.format == "json") {
    Json rows = Json::array();
    for (const auto& p : band) {
      rows.push_back({{"x", p.x},
                      {"truth", p.truth},
                      {"estimate", p.estimate},
                      {"lower", p.lower},
                      {"upper", p.upper},
                      {"covers", p.covers},
                      {"nonconvex", p.nonconvex}});
    }
    emit_json(cfg, rows);
    return 0;
  }
  std::ostringstream os;
  os << "x,truth,estimate,lower,upper,covers\n";
  for (const auto& p : band) {
    os << fmt(p.x) << ',' << fmt(p.truth) << ',' << fmt(p.estimate) << ',' << fmt(p.lower) << ','
       << fmt(p.upper) << ',' << (p.covers ? 1 : 0) << '\n';
  }
  emit(cfg, os.str());
  return 0;
}

void add_common(CLI::App* sub, CliConfig& cfg) {
  sub->add_option("--out", cfg.out, "Output path (stdout when omitted)");
  sub->add_option("--format", cfg.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--seed", cfg.seed, "Random seed");
  sub->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)");
}

void add_table(CLI::App* sub, CliConfig& cfg) {
  sub->add_option("--table", cfg.table,
                  "Critical-value table CSV (default: $CONCAVELR_TABLE or the shipped table)");
}

void add_inference(CLI::App* sub, CliConfig& cfg) {
  sub->add_option("--input", cfg.input, "Data CSV with columns x,y")->required();
  sub->add_option("--x0", cfg.x0, "Point of inference")->required();
  sub->add_option("--alpha", cfg.alpha, "Significance level");
  sub->add_option("--sigma2", cfg.sigma2, "Known noise variance");
  sub->add_flag("--convex", cfg.convex, "Convex instead of concave regression");
  sub->add_flag("--df-variance", cfg.df_variance, "Degrees-of-freedom corrected variance");
  add_table(sub, cfg);
}

void add_study(CLI::App* sub, CliConfig& cfg) {
  sub->add_option("--scenario", cfg.scenarios, "neg_quadratic, cosine or neg_exp (repeatable)");
  sub->add_option("--n", cfg.n, "Sample size");
  sub->add_option("--design", cfg.design, "Design kind")->check(CLI::IsMember({"fixed", "random"}));
  sub->add_option("--sigma", cfg.sigma, "Noise standard deviation");
  sub->add_option("--M", cfg.M, "Replications");
  add_table(sub, cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concave regression, likelihood-ratio inference and the limit distribution"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  CliConfig cfg;

  auto* fit = app.add_subcommand("fit", "Unconstrained concave least-squares fit");
  fit->add_option("--input", cfg.input, "Data CSV with columns x,y")->required();
  fit->add_flag("--convex", cfg.convex, "Convex instead of concave regression");
  fit->add_flag("--certify", cfg.certify, "Attach the characterization report");
  fit->add_flag("--df-variance", cfg.df_variance, "Degrees-of-freedom corrected variance");
  add_common(fit, cfg);

  auto* test = app.add_subcommand("test", "Likelihood-ratio test of r(x0) = y0");
  add_inference(test, cfg);
  test->add_option("--y0", cfg.y0, "Hypothesized value")->required();
  test->add_option("--fit", cfg.fit_json, "Fit JSON from `fit` to verify against the data");
  add_common(test, cfg);

  auto* ci = app.add_subcommand("ci", "Confidence interval for r(x0) by test inversion");
  add_inference(ci, cfg);
  ci->add_option("--points", cfg.points, "Initial grid points");
  ci->add_option("--half-width", cfg.half_width, "Initial grid half-width");
  ci->add_option("--grid-csv", cfg.grid_csv, "Also write the acceptance grid as CSV");
  add_common(ci, cfg);

  auto* lt = app.add_subcommand("limit-table", "Simulate a critical-value table");
  lt->set_help_flag("--help", "Print this help message and exit");
  lt->add_option("--M", cfg.M, "Number of draws (default 20000)");
  lt->add_option("--c", cfg.c, "Half-length of the simulation domain");
  lt->add_option("--h", cfg.h, "Fit grid spacing");
  lt->add_option("--b", cfg.b, "Summation window (default c)");
  add_common(lt, cfg);

  auto* ls = app.add_subcommand("level-study", "Rejection rates under the null");
  add_study(ls, cfg);
  ls->add_option("--alpha", cfg.alphas, "Levels (repeatable)");
  add_common(ls, cfg);

  auto* es = app.add_subcommand("ecdf-study", "Null statistics against the limit draws");
  add_study(es, cfg);
  add_common(es, cfg);

  auto* band = app.add_subcommand("band", "Pointwise intervals for x^2 on [-1, 1]");
  band->add_option("--n", cfg.n, "Sample size");
  band->add_option("--sigma", cfg.sigma, "Noise standard deviation");
  band->add_option("--alpha", cfg.alpha, "Significance level");
  band->add_option("--x", cfg.xs, "Evaluation points (repeatable)");
  add_table(band, cfg);
  add_common(band, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitData;
  }

  try {
    if (*fit) return cmd_fit(cfg);
    if (*test) return cmd_test(cfg);
    if (*ci) return cmd_ci(cfg);
    if (*lt) {
      if (lt->count("--seed") == 0) cfg.seed = kDefaultTableSeed;
      return cmd_limit_table(cfg);
    }
    if (*ls) return cmd_level_study(cfg);
    if (*es) {
      if (es->count("--n") == 0) cfg.n = 1000;
      return cmd_ecdf_study(cfg);
    }
    if (*band) {
      if (band->count("--format") == 0) cfg.format = "csv";
      return cmd_band(cfg);
    }
  } catch (const TableError& e) {
    std::cerr << "concavelr: table error: " << e.what() << '\n';
    return kExitTable;
  } catch (const SolverError& e) {
    std::cerr << "concavelr: solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const DataError& e) {
    std::cerr << "concavelr: input error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "concavelr: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
