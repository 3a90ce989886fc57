#ifndef DABLS_DA_HPP
#define DABLS_DA_HPP

#include "dabls/bls.hpp"
#include "dabls/core.hpp"
#include "dabls/dataio.hpp"
#include "dabls/lle.hpp"

#include <Eigen/Cholesky>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dabls {

/// Hyper-parameters of the manifold-regularised domain-adaptation classifier.
struct HyperParams {
    double c_s = 1e3;             ///< source error weight
    double c_t = 10.0;            ///< labeled-target error weight
    double sigma = 0.1;           ///< manifold penalty weight
    std::optional<double> tau0;   ///< imbalance scale; unset means mean class size per partition
    bool class_balance = true;    ///< false sets every tau_i to 1
    int k = 5;                    ///< LLE neighbours
    double lle_reg = 1e-3;        ///< local Gram regularisation
    NormalizeMode normalize = NormalizeMode::zscore;
    BlsConfig bls;

    void validate() const {
        if (!(c_s >= 0.0)) throw ParameterError("cs must be >= 0");
        if (!(c_t >= 0.0)) throw ParameterError("ct must be >= 0");
        if (!(sigma >= 0.0)) throw ParameterError("sigma must be >= 0");
        if (tau0 && !(*tau0 > 0.0)) throw ParameterError("tau0 must be > 0");
        if (k < 1) throw ParameterError("k must be >= 1");
        if (!(lle_reg >= 0.0)) throw ParameterError("LLE regularisation must be >= 0");
        bls.validate();
    }
};

/// tau_i = tau0 / N_i, N_i the number of samples sharing sample i's label.
template <typename Scalar = double>
Vec<Scalar> imbalance_weights(const Labels& labels, Scalar tau0) {
    if (!(tau0 > Scalar(0))) throw ParameterError("imbalance_weights: tau0 must be > 0");
    std::vector<Index> counts;
    for (Index i = 0; i < labels.size(); ++i) {
        if (labels(i) < 0) throw DataError("imbalance_weights: negative label");
        if (static_cast<std::size_t>(labels(i)) >= counts.size()) counts.resize(static_cast<std::size_t>(labels(i)) + 1, 0);
        ++counts[static_cast<std::size_t>(labels(i))];
    }
    Vec<Scalar> tau(labels.size());
    for (Index i = 0; i < labels.size(); ++i) tau(i) = tau0 / Scalar(counts[static_cast<std::size_t>(labels(i))]);
    return tau;
}

/// Mean size of the classes that occur in `labels`.
double mean_class_size(const Labels& labels);

/// Everything the weighted, manifold-regularised least-squares problem needs.
/// The training block is always [A_s; A_tl], matching the row order of M.
template <typename Scalar>
struct DaProblem {
    Mat<Scalar> A_s, Y_s;
    Mat<Scalar> A_tl, Y_tl;
    SparseMat<Scalar> M;
    Vec<Scalar> tau_s, tau_t;
    Scalar c_s = 0, c_t = 0, sigma = 0;

    Index hidden_width() const { return A_s.cols(); }
    Index num_outputs() const { return Y_s.cols(); }

    Mat<Scalar> a_train() const {
        Mat<Scalar> A(A_s.rows() + A_tl.rows(), A_s.cols());
        A << A_s, A_tl;
        return A;
    }

    void validate() const {
        auto fail = [](const std::string& term, const std::string& what) {
            throw ShapeError("DA problem, " + term + " term: " + what);
        };
        if (A_s.rows() != Y_s.rows()) fail("source", "A_s and Y_s row counts differ");
        if (A_tl.rows() != Y_tl.rows()) fail("target", "A_tl and Y_tl row counts differ");
        if (A_tl.cols() != A_s.cols()) fail("target", "A_tl and A_s column counts differ");
        if (Y_tl.cols() != Y_s.cols()) fail("target", "Y_tl and Y_s class counts differ");
        if (tau_s.size() != A_s.rows()) fail("source", "tau_s length differs from source rows");
        if (tau_t.size() != A_tl.rows()) fail("target", "tau_t length differs from target rows");
        const Index n_train = A_s.rows() + A_tl.rows();
        if (M.rows() != n_train || M.cols() != n_train)
            fail("manifold", "M is " + std::to_string(M.rows()) + "x" + std::to_string(M.cols()) + " but [A_s; A_tl] has " +
                                 std::to_string(n_train) + " rows");
    }
};

/// W^T W/2 + c_s |diag(tau_s)(Y_s - A_s W)|^2/2 + c_t |diag(tau_t)(Y_tl - A_tl W)|^2/2
///   + sigma Tr((A W)^T M (A W))/2, A = [A_s; A_tl].
template <typename Scalar>
Scalar objective(const Mat<Scalar>& W, const DaProblem<Scalar>& p) {
    p.validate();
    if (W.rows() != p.hidden_width() || W.cols() != p.num_outputs())
        throw ShapeError("objective: W has wrong shape");
    const Scalar source = (p.tau_s.asDiagonal() * (p.Y_s - p.A_s * W)).squaredNorm();
    const Scalar target = (p.tau_t.asDiagonal() * (p.Y_tl - p.A_tl * W)).squaredNorm();
    const Mat<Scalar> out = p.a_train() * W;
    const Scalar manifold = graph_penalty<Scalar>(p.M, out);
    return (W.squaredNorm() + p.c_s * source + p.c_t * target + p.sigma * manifold) / Scalar(2);
}

template <typename Scalar>
Mat<Scalar> objective_grad(const Mat<Scalar>& W, const DaProblem<Scalar>& p) {
    p.validate();
    if (W.rows() != p.hidden_width() || W.cols() != p.num_outputs())
        throw ShapeError("objective_grad: W has wrong shape");
    const Vec<Scalar> ws = p.tau_s.array().square().matrix();
    const Vec<Scalar> wt = p.tau_t.array().square().matrix();
    const Mat<Scalar> A = p.a_train();
    Mat<Scalar> grad = W;
    grad.noalias() += p.c_s * p.A_s.transpose() * (ws.asDiagonal() * (p.A_s * W - p.Y_s));
    grad.noalias() += p.c_t * p.A_tl.transpose() * (wt.asDiagonal() * (p.A_tl * W - p.Y_tl));
    const Mat<Scalar> MAW = p.M * (A * W);
    grad.noalias() += p.sigma * A.transpose() * MAW;
    return grad;
}

/// c_s A_s^T diag(tau_s^2) Y_s + c_t A_tl^T diag(tau_t^2) Y_tl
template <typename Scalar>
Mat<Scalar> solve_rhs(const DaProblem<Scalar>& p) {
    const Vec<Scalar> ws = p.tau_s.array().square().matrix();
    const Vec<Scalar> wt = p.tau_t.array().square().matrix();
    Mat<Scalar> rhs = p.c_s * p.A_s.transpose() * (ws.asDiagonal() * p.Y_s);
    rhs.noalias() += p.c_t * p.A_tl.transpose() * (wt.asDiagonal() * p.Y_tl);
    return rhs;
}

/// I + c_s A_s^T diag(tau_s^2) A_s + c_t A_tl^T diag(tau_t^2) A_tl + sigma A^T M A
template <typename Scalar>
Mat<Scalar> solve_lhs(const DaProblem<Scalar>& p) {
    const Index F = p.hidden_width();
    Mat<Scalar> lhs = Mat<Scalar>::Identity(F, F);
    const Mat<Scalar> scaled_s = (p.tau_s * std::sqrt(p.c_s)).asDiagonal() * p.A_s;
    const Mat<Scalar> scaled_t = (p.tau_t * std::sqrt(p.c_t)).asDiagonal() * p.A_tl;
    lhs.template selfadjointView<Eigen::Lower>().rankUpdate(scaled_s.transpose());
    lhs.template selfadjointView<Eigen::Lower>().rankUpdate(scaled_t.transpose());
    lhs.template triangularView<Eigen::StrictlyUpper>() = lhs.transpose();
    if (p.sigma != Scalar(0)) {
        const Mat<Scalar> A = p.a_train();
        const Mat<Scalar> MA = p.M * A;
        Mat<Scalar> manifold = A.transpose() * MA;
        lhs.noalias() += p.sigma * (manifold + manifold.transpose()) / Scalar(2);
    }
    return lhs;
}

/// Closed-form minimiser of `objective`, by Cholesky factorisation of the F x F system.
template <typename Scalar>
Mat<Scalar> solve_wt(const DaProblem<Scalar>& p) {
    p.validate();
    if (!all_finite(p.A_s) || !all_finite(p.A_tl) || !all_finite(p.Y_s) || !all_finite(p.Y_tl))
        throw NumericError("solve_wt: non-finite hidden features or targets");
    const Mat<Scalar> lhs = solve_lhs(p);
    Eigen::LLT<Mat<Scalar>> llt(lhs);
    if (llt.info() != Eigen::Success) throw NumericError("solve_wt: system matrix is not positive definite");
    Mat<Scalar> W = llt.solve(solve_rhs(p));
    if (!all_finite(W)) throw NumericError("solve_wt: non-finite solution");
    return W;
}

struct DablsModel {
    BlsMapping<double> mapping;
    Normalizer normalizer;
    Eigen::MatrixXd W;
    HyperParams hyperparams;
    int num_classes = 0;
};

/// Normalizer, LLE graph, weights and hidden blocks for one training run; exposed so
/// callers can inspect the exact problem a model was fit on.
struct DablsTrainingState {
    Normalizer normalizer;
    LleGraph<double> graph;
    BlsMapping<double> mapping;
    DaProblem<double> problem;
};

DablsTrainingState dabls_prepare(const Dataset& source, const Dataset& target_labeled, const HyperParams& hp,
                                 std::uint64_t seed);

/// Fits on source plus labeled target; `seed` drives every random draw of the mapping.
DablsModel dabls_fit(const Dataset& source, const Dataset& target_labeled, const HyperParams& hp,
                     std::uint64_t seed);

Prediction dabls_predict(const DablsModel& model, const Eigen::MatrixXd& X);

}  // namespace dabls

#endif  // DABLS_DA_HPP
