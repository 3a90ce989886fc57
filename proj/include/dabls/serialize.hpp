#ifndef DABLS_SERIALIZE_HPP
#define DABLS_SERIALIZE_HPP

#include "dabls/bls.hpp"
#include "dabls/da.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <variant>

namespace dabls {

using AnyModel = std::variant<BlsModel, DablsModel>;

/// Self-describing document: kind, config, every mapping matrix (row-major doubles),
/// normalizer and output weights.
nlohmann::json model_to_json(const AnyModel& model);
AnyModel model_from_json(const nlohmann::json& doc);

/// Paths ending in .bin or .cbor are written as CBOR, anything else as JSON text.
void save_model(const std::filesystem::path& path, const AnyModel& model);
/// Detects JSON text vs CBOR from the first byte.
AnyModel load_model(const std::filesystem::path& path);

Prediction predict(const AnyModel& model, const Eigen::MatrixXd& X);
Index input_dim(const AnyModel& model);

}  // namespace dabls

#endif  // DABLS_SERIALIZE_HPP
