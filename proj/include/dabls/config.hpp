#ifndef DABLS_CONFIG_HPP
#define DABLS_CONFIG_HPP

#include "dabls/da.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace dabls {

nlohmann::json to_json(const BlsConfig& config);
nlohmann::json to_json(const HyperParams& hp);

/// Missing keys keep their defaults; unknown keys are rejected.
HyperParams hyperparams_from_json(const nlohmann::json& j, HyperParams base = {});

/// Applies "key=value,key=value" overrides. Keys mirror the symbols of the model:
/// n q m r cs ct sigma tau0 balance k lambda s sae_lambda sae_iters lle_reg
/// feature_activation enhancement_activation normalize seed.
HyperParams apply_overrides(HyperParams hp, const std::string& overrides);

/// Single-key form of the above.
void set_hyperparam(HyperParams& hp, const std::string& key, const std::string& value);

}  // namespace dabls

#endif  // DABLS_CONFIG_HPP
