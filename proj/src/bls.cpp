#include "dabls/bls.hpp"

namespace dabls {

Activation parse_activation(const std::string& text) {
    if (text == "linear") return Activation::linear;
    if (text == "tanh") return Activation::tanh;
    if (text == "sigmoid") return Activation::sigmoid;
    if (text == "relu") return Activation::relu;
    throw ParameterError("unknown activation '" + text + "' (expected linear|tanh|sigmoid|relu)");
}

std::string to_string(Activation act) {
    switch (act) {
        case Activation::linear: return "linear";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
        case Activation::relu: return "relu";
    }
    return "linear";
}

BlsModel bls_fit(const Dataset& train, const BlsConfig& config, NormalizeMode normalize) {
    config.validate();
    BlsModel model;
    model.normalizer = Normalizer::fit(train.features, normalize);
    const Eigen::MatrixXd X = model.normalizer.apply(train.features);
    model.mapping = config.sae_iters > 0 ? init_mapping<double>(X.cols(), config, X)
                                         : init_mapping<double>(X.cols(), config);
    const Eigen::MatrixXd A = hidden(X, model.mapping);
    model.W = bls_train<double>(A, one_hot(train.labels, train.num_classes), config.ridge_lambda);
    model.num_classes = train.num_classes;
    return model;
}

Prediction bls_predict(const BlsModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.mapping.input_dim)
        throw ShapeError("bls_predict: expected D=" + std::to_string(model.mapping.input_dim) + ", got D=" +
                         std::to_string(X.cols()));
    if (X.rows() == 0) return {Eigen::MatrixXd(0, model.num_classes), Labels(0)};
    Prediction out;
    out.scores = hidden(model.normalizer.apply(X), model.mapping) * model.W;
    out.labels = argmax_rows(out.scores);
    return out;
}

}  // namespace dabls
