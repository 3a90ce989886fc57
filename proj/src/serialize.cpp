#include "dabls/serialize.hpp"

#include "dabls/config.hpp"

#include <fstream>
#include <iterator>

namespace dabls {

namespace {

constexpr const char* kFormat = "dabls-model";
constexpr int kVersion = 1;

using json = nlohmann::json;

template <typename Derived>
json matrix_to_json(const Eigen::MatrixBase<Derived>& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) data.push_back(static_cast<double>(m(i, j)));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
        throw DataError("model file: matrix payload does not match its shape");
    Eigen::MatrixXd m(rows, cols);
    std::size_t at = 0;
    for (Index i = 0; i < rows; ++i)
        for (Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[at++].get<double>();
    return m;
}

json mapping_to_json(const BlsMapping<double>& map) {
    json j;
    j["input_dim"] = map.input_dim;
    j["sae_degenerate"] = map.sae_degenerate;
    for (std::size_t g = 0; g < map.feature_weights.size(); ++g) {
        j["feature_weights"].push_back(matrix_to_json(map.feature_weights[g]));
        j["feature_bias"].push_back(matrix_to_json(map.feature_bias[g]));
    }
    for (std::size_t g = 0; g < map.enhancement_weights.size(); ++g) {
        j["enhancement_weights"].push_back(matrix_to_json(map.enhancement_weights[g]));
        j["enhancement_bias"].push_back(matrix_to_json(map.enhancement_bias[g]));
    }
    return j;
}

BlsMapping<double> mapping_from_json(const json& j, const BlsConfig& config) {
    BlsMapping<double> map;
    map.config = config;
    map.input_dim = j.at("input_dim").get<Index>();
    map.sae_degenerate = j.value("sae_degenerate", false);
    for (const auto& w : j.at("feature_weights")) map.feature_weights.push_back(matrix_from_json(w));
    for (const auto& b : j.at("feature_bias")) map.feature_bias.push_back(matrix_from_json(b));
    for (const auto& w : j.at("enhancement_weights")) map.enhancement_weights.push_back(matrix_from_json(w));
    for (const auto& b : j.at("enhancement_bias")) map.enhancement_bias.push_back(matrix_from_json(b));

    const auto n = static_cast<std::size_t>(config.n);
    const auto m = static_cast<std::size_t>(config.m);
    if (map.feature_weights.size() != n || map.feature_bias.size() != n || map.enhancement_weights.size() != m ||
        map.enhancement_bias.size() != m)
        throw DataError("model file: group counts disagree with the stored config");
    for (std::size_t g = 0; g < n; ++g)
        if (map.feature_weights[g].rows() != map.input_dim || map.feature_weights[g].cols() != config.q ||
            map.feature_bias[g].cols() != config.q)
            throw DataError("model file: feature group shape disagrees with the stored config");
    for (std::size_t g = 0; g < m; ++g)
        if (map.enhancement_weights[g].rows() != config.feature_width() || map.enhancement_weights[g].cols() != config.r ||
            map.enhancement_bias[g].cols() != config.r)
            throw DataError("model file: enhancement group shape disagrees with the stored config");
    return map;
}

json normalizer_to_json(const Normalizer& norm) {
    return {{"mean", matrix_to_json(norm.mean)}, {"stddev", matrix_to_json(norm.stddev)}};
}

Normalizer normalizer_from_json(const json& j) {
    Normalizer norm;
    norm.mean = matrix_from_json(j.at("mean"));
    norm.stddev = matrix_from_json(j.at("stddev"));
    return norm;
}

}  // namespace

json model_to_json(const AnyModel& model) {
    return std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            json doc;
            doc["format"] = kFormat;
            doc["version"] = kVersion;
            doc["num_classes"] = m.num_classes;
            doc["config"] = to_json(m.mapping.config);
            doc["mapping"] = mapping_to_json(m.mapping);
            doc["normalizer"] = normalizer_to_json(m.normalizer);
            doc["W"] = matrix_to_json(m.W);
            if constexpr (std::is_same_v<T, DablsModel>) {
                doc["kind"] = "dabls";
                doc["hyperparams"] = to_json(m.hyperparams);
            } else {
                doc["kind"] = "bls";
            }
            return doc;
        },
        model);
}

AnyModel model_from_json(const json& doc) {
    try {
        if (doc.at("format").get<std::string>() != kFormat) throw DataError("not a dabls model document");
        if (doc.at("version").get<int>() != kVersion) throw DataError("unsupported model version");
        const HyperParams stored = hyperparams_from_json(doc.contains("hyperparams") ? doc.at("hyperparams") : doc.at("config"));
        const BlsConfig config = stored.bls;
        auto fill = [&](auto& m) {
            m.num_classes = doc.at("num_classes").get<int>();
            m.mapping = mapping_from_json(doc.at("mapping"), config);
            m.normalizer = normalizer_from_json(doc.at("normalizer"));
            m.W = matrix_from_json(doc.at("W"));
            if (m.W.rows() != config.hidden_width() || m.W.cols() != m.num_classes ||
                m.normalizer.dim() != m.mapping.input_dim || m.normalizer.stddev.size() != m.mapping.input_dim)
                throw DataError("model file: output weights or normalizer have the wrong shape");
        };
        const auto kind = doc.at("kind").get<std::string>();
        if (kind == "bls") {
            BlsModel m;
            fill(m);
            return m;
        }
        if (kind == "dabls") {
            DablsModel m;
            fill(m);
            m.hyperparams = stored;
            return m;
        }
        throw DataError("unknown model kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    } catch (const ParameterError& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const AnyModel& model) {
    const json doc = model_to_json(model);
    const auto ext = path.extension().string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    if (ext == ".bin" || ext == ".cbor") {
        const auto bytes = json::to_cbor(doc);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    } else {
        out << doc.dump() << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

AnyModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.empty()) throw DataError("model file " + path.string() + " is empty");
    try {
        const bool text = bytes.front() == '{' || bytes.front() == ' ' || bytes.front() == '\n';
        return model_from_json(text ? json::parse(bytes.begin(), bytes.end()) : json::from_cbor(bytes));
    } catch (const json::exception& e) {
        throw DataError("cannot parse model " + path.string() + ": " + e.what());
    }
}

Prediction predict(const AnyModel& model, const Eigen::MatrixXd& X) {
    return std::visit(
        [&X](const auto& m) -> Prediction {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DablsModel>)
                return dabls_predict(m, X);
            else
                return bls_predict(m, X);
        },
        model);
}

Index input_dim(const AnyModel& model) {
    return std::visit([](const auto& m) { return m.mapping.input_dim; }, model);
}

}  // namespace dabls
