#include <gtest/gtest.h>

#include <random>

#include "concavelr/error.hpp"
#include "concavelr/serialize.hpp"
#include "instances.hpp"

using namespace concavelr;

namespace {

CriticalTable small_table() {
  std::vector<double> d;
  for (int k = 1; k <= 100; ++k) d.push_back(0.03 * k);
  return CriticalTable(std::move(d), {});
}

}  // namespace

TEST(Serialize, FitRoundTripIsExact) {
  std::mt19937_64 rng(91);
  const Design d = testing_support::random_design(rng, 40, true, false);
  const auto fit = fit_alse(d);
  const Json j = to_json(fit);
  const auto back = fit_from_json(Json::parse(j.dump()));
  ASSERT_EQ(back.size(), fit.fit.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back.knots()[i], fit.fit.knots()[i]);
    EXPECT_EQ(back.values()[i], fit.fit.values()[i]);
  }
  EXPECT_EQ(j["objective"].get<double>(), fit.objective);
  EXPECT_EQ(j["bends"].size(), fit.knots.size());
  EXPECT_EQ(fit_from_json(j["fit"]).size(), fit.fit.size());
}

TEST(Serialize, FitFromJsonRejectsGarbage) {
  EXPECT_THROW(fit_from_json(Json::parse(R"({"fit": {"knots": [0, 1]}})")), DataError);
  EXPECT_THROW(fit_from_json(Json::parse(R"({"knots": [0, 1], "values": [0, "a"]})")),
               DataError);
  EXPECT_THROW(fit_from_json(Json::parse(R"({"knots": [0, 1, 2], "values": [0, -1, 0]})")),
               DataError);
}

TEST(Serialize, DecisionSchema) {
  const Design d({0.0, 1.0, 2.0, 3.0}, {0.0, 1.0, 1.2, 1.0});
  LrOptions o;
  o.sigma2 = 1.0;
  const auto dec = lr_test(d, 1.0, 1.0, 0.05, small_table(), o);
  const Json j = to_json(dec);
  const std::vector<std::string> keys{"statistic", "threshold", "p_value", "sigma2",
                                      "interval", "warnings"};
  std::size_t i = 0;
  for (auto it = j.begin(); it != j.end() && i < keys.size(); ++it, ++i) {
    EXPECT_EQ(it.key(), keys[i]);
  }
  EXPECT_TRUE(j["interval"].is_null());
  EXPECT_EQ(j["decision"], "fail_to_reject");
  EXPECT_EQ(j["p_value"].get<double>(), 1.0);
}

TEST(Serialize, IntervalSchema) {
  std::mt19937_64 rng(92);
  const Design d = testing_support::random_design(rng, 50, false, false);
  const auto ci = confidence_interval(d, 0.0, 0.05, small_table());
  const Json j = to_json(ci);
  ASSERT_TRUE(j["interval"].is_array());
  EXPECT_EQ(j["interval"][0].get<double>(), ci.lower);
  EXPECT_EQ(j["interval"][1].get<double>(), ci.upper);
  EXPECT_TRUE(j.contains("warnings"));
  EXPECT_EQ(j["sigma2"].get<double>(), ci.sigma2);
}

TEST(Serialize, Reports) {
  const Design d({0.0, 1.0, 2.0}, {0.0, -1.0, 0.0});
  const Json c = to_json(check_alse(d, {-1.0 / 3, -1.0 / 3, -1.0 / 3}));
  EXPECT_TRUE(c["pass"].get<bool>());
  EXPECT_EQ(c["conditions"][0]["label"], "total_sum");

  const auto p = simulate_path(2.0, 0.02, 1.0, 1.0, 3);
  const Json inv = to_json(invelope_check(p, invelope_constrained(p), InvelopeMode::kConstrained,
                                          1.5, default_invelope_tol(p)));
  EXPECT_EQ(inv["mode"], "constrained");
  EXPECT_TRUE(inv.contains("middle_gap"));
}
