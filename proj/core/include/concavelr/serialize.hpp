#pragma once

#include <nlohmann/json.hpp>

#include "concavelr/characterization.hpp"
#include "concavelr/cone_qp.hpp"
#include "concavelr/estimators.hpp"
#include "concavelr/limit_sim.hpp"
#include "concavelr/lrt.hpp"

namespace concavelr {

using Json = nlohmann::ordered_json;

Json to_json(const PiecewiseLinearConcave& f);
Json to_json(const FitResult& fit);
Json to_json(const CharacterizationReport& report);
Json to_json(const FenchelReport& report);
Json to_json(const InvelopeCheckReport& report);

/// {statistic, threshold, p_value, sigma2, interval, warnings} plus the
/// decision; `interval` is null for a test.
Json to_json(const LrDecision& decision);
Json to_json(const ConfidenceInterval& ci);

/// Reads the `fit` object written by to_json(FitResult). Throws DataError.
PiecewiseLinearConcave fit_from_json(const Json& j);

}  // namespace concavelr
