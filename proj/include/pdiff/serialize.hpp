#pragma once

#include <json.hpp>

#include "pdiff/likelihood.hpp"
#include "pdiff/synthetic.hpp"
#include "pdiff/trainer.hpp"

namespace pdiff {

using Json = nlohmann::ordered_json;

Json spec_to_json(const DistributionSpec& spec);
DistributionSpec spec_from_json(const Json& j);

/// Parse a training run configuration.  Every key is optional except
/// "noise" and "loss"; unknown keys are rejected so typos cannot silently
/// fall back to defaults.  The returned config has all defaults
/// materialized.
TrainConfig train_config_from_json(const Json& j);
Json train_config_to_json(const TrainConfig& cfg);

Json quadrature_to_json(const QuadratureSpec& quad);
Json nll_report_to_json(const NllReport& report);

const char* noise_name(NoiseKind k);
const char* loss_name(LossKind k);
NoiseKind noise_from_name(const std::string& s);
LossKind loss_from_name(const std::string& s);

}  // namespace pdiff
