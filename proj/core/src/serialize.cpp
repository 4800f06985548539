#include "concavelr/serialize.hpp"

#include "concavelr/error.hpp"

namespace concavelr {

Json to_json(const PiecewiseLinearConcave& f) {
  Json j;
  j["knots"] = std::vector<double>(f.knots().begin(), f.knots().end());
  j["values"] = std::vector<double>(f.values().begin(), f.values().end());
  return j;
}

Json to_json(const FitResult& fit) {
  Json j;
  j["fit"] = to_json(fit.fit);
  j["objective"] = fit.objective;
  j["sigma2_hat"] = fit.sigma2_hat;
  std::vector<double> bends;
  for (std::size_t k : fit.knots) bends.push_back(fit.fit.knots()[k]);
  j["bends"] = bends;
  j["residuals"] = fit.residuals;
  j["iterations"] = fit.iterations;
  j["near_degenerate"] = fit.near_degenerate;
  return j;
}

Json to_json(const CharacterizationReport& report) {
  Json j;
  j["pass"] = report.pass;
  j["scale"] = report.scale;
  j["tol"] = report.tol;
  Json conds = Json::array();
  for (const auto& c : report.conditions) {
    conds.push_back({{"label", c.label},
                     {"lhs", c.lhs},
                     {"rhs", c.rhs},
                     {"slack", c.slack},
                     {"is_knot", c.is_knot},
                     {"equality", c.equality},
                     {"pass", c.pass}});
  }
  j["conditions"] = std::move(conds);
  j["warnings"] = report.warnings;
  return j;
}

Json to_json(const FenchelReport& report) {
  Json j;
  j["pass"] = report.pass;
  j["scale"] = report.scale;
  j["worst_inequality"] = report.worst_inequality;
  j["worst_equality"] = report.worst_equality;
  Json gens = Json::array();
  for (std::size_t i = 0; i < report.labels.size(); ++i) {
    gens.push_back({{"generator", report.labels[i]},
                    {"inner_product", report.inner_products[i]},
                    {"multiplier", report.multipliers[i]}});
  }
  j["generators"] = std::move(gens);
  return j;
}

Json to_json(const InvelopeCheckReport& r) {
  Json j;
  j["mode"] = r.mode == InvelopeMode::kConstrained ? "constrained" : "unconstrained";
  j["tau_left"] = r.tau_left;
  j["tau_right"] = r.tau_right;
  j["middle_gap"] = r.middle_gap;
  j["max_excursion"] = r.max_excursion;
  j["max_excursion_left"] = r.max_excursion_left;
  j["max_excursion_right"] = r.max_excursion_right;
  j["integral_left"] = r.integral_left;
  j["integral_right"] = r.integral_right;
  j["concavity"] = r.concavity;
  j["tol"] = r.tol;
  j["degenerate"] = r.degenerate;
  j["pass"] = r.pass;
  return j;
}

Json to_json(const LrDecision& d) {
  Json j;
  j["statistic"] = d.statistic;
  j["threshold"] = d.threshold;
  j["p_value"] = d.p_value;
  j["sigma2"] = d.sigma2;
  j["interval"] = nullptr;
  j["warnings"] = d.lr.warnings;
  j["alpha"] = d.alpha;
  j["decision"] = d.reject ? "reject" : "fail_to_reject";
  j["identity_gap"] = d.lr.identity_gap;
  return j;
}

Json to_json(const ConfidenceInterval& ci) {
  Json j;
  j["statistic"] = nullptr;
  j["threshold"] = ci.threshold;
  j["p_value"] = nullptr;
  j["sigma2"] = ci.sigma2;
  j["interval"] = {ci.lower, ci.upper};
  j["warnings"] = ci.warnings;
  j["alpha"] = ci.alpha;
  j["nonconvex_warning"] = ci.nonconvex_warning;
  return j;
}

PiecewiseLinearConcave fit_from_json(const Json& j) {
  try {
    const Json& f = j.contains("fit") ? j.at("fit") : j;
    return PiecewiseLinearConcave(f.at("knots").get<std::vector<double>>(),
                                  f.at("values").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed fit JSON: ") + e.what());
  }
}

}  // namespace concavelr
