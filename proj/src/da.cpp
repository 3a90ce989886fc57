#include "dabls/da.hpp"

#include <map>

namespace dabls {

double mean_class_size(const Labels& labels) {
    if (labels.size() == 0) throw DataError("mean_class_size: no labels");
    std::map<int, Index> counts;
    for (Index i = 0; i < labels.size(); ++i) ++counts[labels(i)];
    return static_cast<double>(labels.size()) / static_cast<double>(counts.size());
}

DablsTrainingState dabls_prepare(const Dataset& source, const Dataset& target_labeled, const HyperParams& hp,
                                 std::uint64_t seed) {
    hp.validate();
    if (target_labeled.size() == 0) throw ParameterError("dabls_fit: labeled target set is empty");
    if (source.size() == 0) throw ParameterError("dabls_fit: source set is empty");
    const Dataset train = concat(source, target_labeled);
    if (Index(hp.k) >= train.size())
        throw ParameterError("dabls_fit: k=" + std::to_string(hp.k) + " needs more than " +
                             std::to_string(train.size()) + " training samples");

    DablsTrainingState state;
    state.normalizer = Normalizer::fit(train.features, hp.normalize);
    const Eigen::MatrixXd X_train = state.normalizer.apply(train.features);
    const Index n_s = source.size();

    state.graph = build_lle_graph<double>(X_train, hp.k, hp.lle_reg);

    BlsConfig bls = hp.bls;
    bls.seed = seed;
    state.mapping = bls.sae_iters > 0 ? init_mapping<double>(X_train.cols(), bls, X_train)
                                      : init_mapping<double>(X_train.cols(), bls);
    const Eigen::MatrixXd A = hidden(X_train, state.mapping);

    auto& p = state.problem;
    p.A_s = A.topRows(n_s);
    p.A_tl = A.bottomRows(A.rows() - n_s);
    p.Y_s = one_hot(source.labels, source.num_classes);
    p.Y_tl = one_hot(target_labeled.labels, target_labeled.num_classes);
    p.M = state.graph.M;
    if (hp.class_balance) {
        p.tau_s = imbalance_weights<double>(source.labels, hp.tau0.value_or(mean_class_size(source.labels)));
        p.tau_t = imbalance_weights<double>(target_labeled.labels,
                                            hp.tau0.value_or(mean_class_size(target_labeled.labels)));
    } else {
        p.tau_s = Eigen::VectorXd::Ones(source.size());
        p.tau_t = Eigen::VectorXd::Ones(target_labeled.size());
    }
    p.c_s = hp.c_s;
    p.c_t = hp.c_t;
    p.sigma = hp.sigma;
    return state;
}

DablsModel dabls_fit(const Dataset& source, const Dataset& target_labeled, const HyperParams& hp,
                     std::uint64_t seed) {
    auto state = dabls_prepare(source, target_labeled, hp, seed);
    DablsModel model;
    model.W = solve_wt(state.problem);
    model.mapping = std::move(state.mapping);
    model.normalizer = std::move(state.normalizer);
    model.hyperparams = hp;
    model.hyperparams.bls.seed = seed;
    model.num_classes = source.num_classes;
    return model;
}

Prediction dabls_predict(const DablsModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.mapping.input_dim)
        throw ShapeError("dabls_predict: expected D=" + std::to_string(model.mapping.input_dim) + ", got D=" +
                         std::to_string(X.cols()));
    if (X.rows() == 0) return {Eigen::MatrixXd(0, model.num_classes), Labels(0)};
    Prediction out;
    out.scores = hidden(model.normalizer.apply(X), model.mapping) * model.W;
    out.labels = argmax_rows(out.scores);
    return out;
}

}  // namespace dabls
