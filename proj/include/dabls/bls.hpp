#ifndef DABLS_BLS_HPP
#define DABLS_BLS_HPP

#include "dabls/core.hpp"
#include "dabls/dataio.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace dabls {

enum class Activation { linear, tanh, sigmoid, relu };

Activation parse_activation(const std::string& text);
std::string to_string(Activation act);

template <typename Derived>
Mat<typename Derived::Scalar> activate(const Eigen::MatrixBase<Derived>& x, Activation act) {
    using Scalar = typename Derived::Scalar;
    switch (act) {
        case Activation::linear: return x;
        case Activation::tanh: return x.array().tanh().matrix();
        case Activation::sigmoid: return (Scalar(1) / (Scalar(1) + (-x.array()).exp())).matrix();
        case Activation::relu: return x.array().max(Scalar(0)).matrix();
    }
    return x;
}

/// Structural and solver settings of a broad learning system.
struct BlsConfig {
    int n = 20;  ///< feature groups
    int q = 10;  ///< nodes per feature group
    int m = 1;   ///< enhancement groups
    int r = 400; ///< nodes per enhancement group
    Activation feature_activation = Activation::linear;
    Activation enhancement_activation = Activation::tanh;
    double enhancement_scale = 0.8;
    double sae_lambda = 1e-3;
    int sae_iters = 50;
    double ridge_lambda = 1e-8;
    std::uint64_t seed = 0;

    Index feature_width() const { return Index(n) * q; }
    Index hidden_width() const { return Index(n) * q + Index(m) * r; }

    void validate() const {
        if (n < 1 || q < 1 || m < 1 || r < 1) throw ParameterError("BLS widths n, q, m, r must all be >= 1");
        if (!(enhancement_scale > 0.0)) throw ParameterError("enhancement scale s must be > 0");
        if (!(sae_lambda >= 0.0)) throw ParameterError("sae_lambda must be >= 0");
        if (sae_iters < 0) throw ParameterError("sae_iters must be >= 0");
        if (!(ridge_lambda >= 0.0)) throw ParameterError("ridge lambda must be >= 0");
        if (enhancement_activation == Activation::linear)
            throw ParameterError("enhancement activation must be tanh, sigmoid or relu");
    }
};

/// Frozen input-to-hidden parameters. Biases are single rows broadcast over samples.
template <typename Scalar>
struct BlsMapping {
    BlsConfig config;
    Index input_dim = 0;
    std::vector<Mat<Scalar>> feature_weights;      // D x q each
    std::vector<RowVec<Scalar>> feature_bias;      // 1 x q each
    std::vector<Mat<Scalar>> enhancement_weights;  // nq x r each
    std::vector<RowVec<Scalar>> enhancement_bias;  // 1 x r each
    bool sae_degenerate = false;

    Index hidden_width() const { return config.hidden_width(); }
};

template <typename Scalar>
struct SparseCode {
    Mat<Scalar> weights;  // D x q, the transpose of the lasso solution
    bool degenerate = false;
};

/// ||Z W - X||^2 + lambda * |W|_1 with W of shape q x D.
template <typename Scalar>
Scalar lasso_objective(const Mat<Scalar>& Z, const Mat<Scalar>& X, const Mat<Scalar>& W, Scalar lambda) {
    return (Z * W - X).squaredNorm() + lambda * W.cwiseAbs().sum();
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
template <typename Scalar>
Scalar power_iteration_max_eigenvalue(const Mat<Scalar>& G, int max_iters = 1000, Scalar tol = Scalar(1e-12)) {
    const Index n = G.rows();
    if (n == 0) return Scalar(0);
    Vec<Scalar> v(n);
    for (Index i = 0; i < n; ++i) v(i) = Scalar(1) + Scalar(i % 7) / Scalar(10);
    v.normalize();
    Scalar estimate = 0;
    for (int it = 0; it < max_iters; ++it) {
        Vec<Scalar> w = G * v;
        const Scalar norm = w.norm();
        if (norm == Scalar(0)) return Scalar(0);
        const Scalar next = v.dot(w);
        v = w / norm;
        if (std::abs(next - estimate) <= tol * std::abs(next)) return next;
        estimate = next;
    }
    return estimate;
}

/// Sparse autoencoder step: ISTA on ||Z W - X||^2 + lambda |W|_1 (W is q x D) with
/// step 1/L, L the largest eigenvalue of Z^T Z. Returns W^T.
template <typename Scalar>
SparseCode<Scalar> sparse_finetune(const Mat<Scalar>& Z, const Mat<Scalar>& X, Scalar lambda, int iters) {
    if (Z.rows() != X.rows())
        throw ShapeError("sparse_finetune: Z has " + std::to_string(Z.rows()) + " rows, X has " +
                         std::to_string(X.rows()));
    if (iters < 1) throw ParameterError("sparse_finetune: iters must be >= 1");
    if (lambda < Scalar(0)) throw ParameterError("sparse_finetune: lambda must be >= 0");

    const Mat<Scalar> gram = Z.transpose() * Z;
    const Mat<Scalar> zt_x = Z.transpose() * X;
    // Rayleigh quotients approach the top eigenvalue from below; the margin keeps the step safe.
    const Scalar lipschitz = power_iteration_max_eigenvalue<Scalar>(gram) * Scalar(1.01);
    if (!(lipschitz > Scalar(0))) return {Mat<Scalar>::Zero(X.cols(), Z.cols()), true};

    const Scalar step = Scalar(1) / lipschitz;
    const Scalar threshold = lambda / Scalar(2) * step;
    Mat<Scalar> W = Mat<Scalar>::Zero(Z.cols(), X.cols());
    for (int it = 0; it < iters; ++it) {
        Mat<Scalar> moved = W - step * (gram * W - zt_x);
        W = moved.unaryExpr([threshold](Scalar v) {
            if (v > threshold) return v - threshold;
            if (v < -threshold) return v + threshold;
            return Scalar(0);
        });
    }
    if (!all_finite(W)) throw NumericError("sparse_finetune diverged");
    return {W.transpose(), false};
}

namespace detail {

template <typename Scalar>
Mat<Scalar> uniform_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<Scalar> dist(Scalar(-1), Scalar(1));
    Mat<Scalar> out(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) out(i, j) = dist(rng);
    return out;
}

template <typename Scalar>
BlsMapping<Scalar> init_mapping_impl(Index input_dim, const BlsConfig& config, const Mat<Scalar>* train) {
    config.validate();
    if (input_dim < 1) throw ParameterError("init_mapping: input dimension must be >= 1");
    if (config.sae_iters > 0 && train == nullptr)
        throw ParameterError("init_mapping: sparse autoencoder fine-tuning requires training features");
    if (train != nullptr && train->cols() != input_dim)
        throw ShapeError("init_mapping: expected D=" + std::to_string(input_dim) + ", training features have D=" +
                         std::to_string(train->cols()));

    std::mt19937_64 rng(config.seed);
    BlsMapping<Scalar> map;
    map.config = config;
    map.input_dim = input_dim;
    for (int j = 0; j < config.n; ++j) {
        map.feature_weights.push_back(uniform_matrix<Scalar>(input_dim, config.q, rng));
        map.feature_bias.push_back(uniform_matrix<Scalar>(1, config.q, rng));
    }
    for (int i = 0; i < config.m; ++i) {
        Mat<Scalar> w = uniform_matrix<Scalar>(config.feature_width(), config.r, rng);
        for (Index c = 0; c < w.cols(); ++c) {
            const Scalar norm = w.col(c).norm();
            if (norm > Scalar(0)) w.col(c) /= norm;
        }
        map.enhancement_weights.push_back(Scalar(config.enhancement_scale) * w);
        map.enhancement_bias.push_back(uniform_matrix<Scalar>(1, config.r, rng));
    }

    if (config.sae_iters > 0) {
        for (int j = 0; j < config.n; ++j) {
            const Mat<Scalar> Z = ((*train) * map.feature_weights[static_cast<std::size_t>(j)]).rowwise() +
                                  map.feature_bias[static_cast<std::size_t>(j)];
            auto code = sparse_finetune<Scalar>(Z, *train, Scalar(config.sae_lambda), config.sae_iters);
            map.sae_degenerate = map.sae_degenerate || code.degenerate;
            map.feature_weights[static_cast<std::size_t>(j)] = std::move(code.weights);
        }
    }
    return map;
}

}  // namespace detail

/// Draws all weights uniformly from [-1, 1]. Enhancement columns are scaled to norm s.
/// Requires `sae_iters == 0` since no training data is available for fine-tuning.
template <typename Scalar = double>
BlsMapping<Scalar> init_mapping(Index input_dim, const BlsConfig& config) {
    return detail::init_mapping_impl<Scalar>(input_dim, config, nullptr);
}

/// As above; with `sae_iters > 0` each feature weight is replaced by its sparse code on `train`.
template <typename Scalar>
BlsMapping<Scalar> init_mapping(Index input_dim, const BlsConfig& config, const Mat<Scalar>& train) {
    return detail::init_mapping_impl<Scalar>(input_dim, config, &train);
}

/// [phi(X W_e1 + b_e1) | ... | phi(X W_en + b_en)]
template <typename Scalar>
Mat<Scalar> feature_nodes(const Mat<Scalar>& X, const BlsMapping<Scalar>& map) {
    if (X.cols() != map.input_dim)
        throw ShapeError("feature_nodes: expected D=" + std::to_string(map.input_dim) + ", got D=" +
                         std::to_string(X.cols()));
    const Index q = map.config.q;
    Mat<Scalar> out(X.rows(), map.config.feature_width());
    for (std::size_t j = 0; j < map.feature_weights.size(); ++j) {
        out.middleCols(Index(j) * q, q) =
            activate((X * map.feature_weights[j]).rowwise() + map.feature_bias[j], map.config.feature_activation);
    }
    return out;
}

/// [xi(M W_h1 + b_h1) | ... | xi(M W_hm + b_hm)]
template <typename Scalar>
Mat<Scalar> enhancement_nodes(const Mat<Scalar>& features, const BlsMapping<Scalar>& map) {
    if (features.cols() != map.config.feature_width())
        throw ShapeError("enhancement_nodes: expected " + std::to_string(map.config.feature_width()) +
                         " feature-node columns, got " + std::to_string(features.cols()));
    const Index r = map.config.r;
    Mat<Scalar> out(features.rows(), Index(map.config.m) * r);
    for (std::size_t i = 0; i < map.enhancement_weights.size(); ++i) {
        out.middleCols(Index(i) * r, r) = activate((features * map.enhancement_weights[i]).rowwise() +
                                                       map.enhancement_bias[i],
                                                   map.config.enhancement_activation);
    }
    return out;
}

/// A = [feature nodes | enhancement nodes], N x F.
template <typename Scalar>
Mat<Scalar> hidden(const Mat<Scalar>& X, const BlsMapping<Scalar>& map) {
    const Mat<Scalar> features = feature_nodes(X, map);
    Mat<Scalar> A(X.rows(), map.hidden_width());
    A.leftCols(features.cols()) = features;
    A.rightCols(A.cols() - features.cols()) = enhancement_nodes(features, map);
    return A;
}

/// Ridge output weights (A^T A + lambda I)^{-1} A^T Y via Cholesky. When N < F the
/// equivalent N x N system A^T (A A^T + lambda I)^{-1} Y is factored instead. For
/// lambda = 0 on a rank-deficient system the thresholded-SVD pseudo-inverse is used.
template <typename Scalar>
Mat<Scalar> bls_train(const Mat<Scalar>& A, const Mat<Scalar>& Y, Scalar lambda) {
    if (A.rows() != Y.rows())
        throw ShapeError("bls_train: A has " + std::to_string(A.rows()) + " rows, Y has " + std::to_string(Y.rows()));
    if (!(lambda >= Scalar(0))) throw ParameterError("bls_train: lambda must be >= 0");
    if (!all_finite(A) || !all_finite(Y)) throw NumericError("bls_train: non-finite entries in A or Y");

    const bool dual = A.rows() < A.cols();
    const Index size = dual ? A.rows() : A.cols();
    Mat<Scalar> gram = Mat<Scalar>::Zero(size, size);
    if (dual)
        gram.template selfadjointView<Eigen::Lower>().rankUpdate(A);
    else
        gram.template selfadjointView<Eigen::Lower>().rankUpdate(A.transpose());
    gram.diagonal().array() += lambda;

    Eigen::LLT<Mat<Scalar>> llt(gram);
    const bool ok = llt.info() == Eigen::Success;
    if (lambda == Scalar(0) && (!ok || llt.rcond() < Scalar(size) * Eigen::NumTraits<Scalar>::epsilon())) {
        Eigen::BDCSVD<Mat<Scalar>> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        return svd.solve(Y);
    }
    if (!ok) throw NumericError("bls_train: Cholesky factorization failed");
    Mat<Scalar> W = dual ? Mat<Scalar>(A.transpose() * llt.solve(Y)) : Mat<Scalar>(llt.solve(A.transpose() * Y));
    if (!all_finite(W)) throw NumericError("bls_train: non-finite output weights");
    return W;
}

struct Prediction {
    Eigen::MatrixXd scores;
    Labels labels;
};

/// A plain BLS classifier: normalizer, frozen mapping, ridge output weights.
struct BlsModel {
    BlsMapping<double> mapping;
    Normalizer normalizer;
    Eigen::MatrixXd W;
    int num_classes = 0;
};

/// Fits normalizer, mapping and ridge weights on one labeled dataset.
BlsModel bls_fit(const Dataset& train, const BlsConfig& config, NormalizeMode normalize = NormalizeMode::zscore);

Prediction bls_predict(const BlsModel& model, const Eigen::MatrixXd& X);

}  // namespace dabls

#endif  // DABLS_BLS_HPP
