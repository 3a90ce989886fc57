#include "dabls/config.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace dabls {

namespace {

double parse_real(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(out))
        throw ParameterError("hyper-parameter '" + key + "': '" + value + "' is not a finite number");
    return out;
}

int parse_int(const std::string& key, const std::string& value) {
    const double real = parse_real(key, value);
    if (real != std::floor(real) || std::abs(real) > 1e9)
        throw ParameterError("hyper-parameter '" + key + "': '" + value + "' is not an integer");
    return static_cast<int>(real);
}

std::string scalar_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
        std::ostringstream os;
        os.precision(17);
        os << v.get<double>();
        return os.str();
    }
    throw ParameterError("hyper-parameter values must be numbers or strings");
}

}  // namespace

nlohmann::json to_json(const BlsConfig& c) {
    return {{"n", c.n},
            {"q", c.q},
            {"m", c.m},
            {"r", c.r},
            {"feature_activation", to_string(c.feature_activation)},
            {"enhancement_activation", to_string(c.enhancement_activation)},
            {"s", c.enhancement_scale},
            {"sae_lambda", c.sae_lambda},
            {"sae_iters", c.sae_iters},
            {"lambda", c.ridge_lambda},
            {"seed", c.seed}};
}

nlohmann::json to_json(const HyperParams& hp) {
    nlohmann::json j = to_json(hp.bls);
    j["cs"] = hp.c_s;
    j["ct"] = hp.c_t;
    j["sigma"] = hp.sigma;
    j["tau0"] = hp.tau0 ? nlohmann::json(*hp.tau0) : nlohmann::json(nullptr);
    j["balance"] = hp.class_balance;
    j["k"] = hp.k;
    j["lle_reg"] = hp.lle_reg;
    j["normalize"] = to_string(hp.normalize);
    return j;
}

void set_hyperparam(HyperParams& hp, const std::string& key, const std::string& value) {
    if (key == "n") hp.bls.n = parse_int(key, value);
    else if (key == "q") hp.bls.q = parse_int(key, value);
    else if (key == "m") hp.bls.m = parse_int(key, value);
    else if (key == "r") hp.bls.r = parse_int(key, value);
    else if (key == "cs") hp.c_s = parse_real(key, value);
    else if (key == "ct") hp.c_t = parse_real(key, value);
    else if (key == "sigma") hp.sigma = parse_real(key, value);
    else if (key == "tau0") {
        if (value == "auto" || value.empty()) hp.tau0.reset();
        else hp.tau0 = parse_real(key, value);
    } else if (key == "k") hp.k = parse_int(key, value);
    else if (key == "balance") {
        if (value == "true" || value == "1") hp.class_balance = true;
        else if (value == "false" || value == "0") hp.class_balance = false;
        else throw ParameterError("hyper-parameter 'balance': expected true or false, got '" + value + "'");
    } else if (key == "lambda") hp.bls.ridge_lambda = parse_real(key, value);
    else if (key == "s") hp.bls.enhancement_scale = parse_real(key, value);
    else if (key == "sae_lambda") hp.bls.sae_lambda = parse_real(key, value);
    else if (key == "sae_iters") hp.bls.sae_iters = parse_int(key, value);
    else if (key == "lle_reg") hp.lle_reg = parse_real(key, value);
    else if (key == "feature_activation") hp.bls.feature_activation = parse_activation(value);
    else if (key == "enhancement_activation") hp.bls.enhancement_activation = parse_activation(value);
    else if (key == "normalize") hp.normalize = parse_normalize_mode(value);
    else if (key == "seed") {
        std::uint64_t seed = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), seed);
        if (ec != std::errc{} || ptr != value.data() + value.size())
            throw ParameterError("seed must be a non-negative integer, got '" + value + "'");
        hp.bls.seed = seed;
    } else
        throw ParameterError("unknown hyper-parameter '" + key + "'");
}

HyperParams hyperparams_from_json(const nlohmann::json& j, HyperParams base) {
    if (!j.is_object()) throw ParameterError("hyper-parameters must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "tau0" && value.is_null()) {
            base.tau0.reset();
            continue;
        }
        set_hyperparam(base, key, scalar_text(value));
    }
    return base;
}

HyperParams apply_overrides(HyperParams hp, const std::string& overrides) {
    std::istringstream in(overrides);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ParameterError("hyper-parameter override '" + item + "' is not of the form key=value");
        set_hyperparam(hp, item.substr(0, eq), item.substr(eq + 1));
    }
    hp.validate();
    return hp;
}

}  // namespace dabls
