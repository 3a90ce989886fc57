#ifndef DABLS_LLE_HPP
#define DABLS_LLE_HPP

#include "dabls/core.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dabls {

using NeighborSets = std::vector<std::vector<Index>>;

template <typename Scalar>
using SparseRowMat = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
template <typename Scalar>
using SparseMat = Eigen::SparseMatrix<Scalar>;

/// Exact k nearest neighbours of every row under Euclidean distance, excluding the
/// row itself. Each list is ordered by distance; equal distances go to the lower index.
template <typename Scalar>
NeighborSets knn_neighbors(const Mat<Scalar>& X, int k) {
    const Index n = X.rows();
    if (k < 1 || Index(k) >= n)
        throw ParameterError("knn_neighbors: need 1 <= k <= N-1, got k=" + std::to_string(k) + " with N=" +
                             std::to_string(n));
    NeighborSets sets(static_cast<std::size_t>(n));
    std::vector<std::pair<Scalar, Index>> dist(static_cast<std::size_t>(n - 1));
    for (Index i = 0; i < n; ++i) {
        std::size_t slot = 0;
        for (Index j = 0; j < n; ++j)
            if (j != i) dist[slot++] = {(X.row(i) - X.row(j)).squaredNorm(), j};
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        auto& out = sets[static_cast<std::size_t>(i)];
        out.reserve(static_cast<std::size_t>(k));
        for (int a = 0; a < k; ++a) out.push_back(dist[static_cast<std::size_t>(a)].second);
    }
    return sets;
}

/// Affine reconstruction weights of one point from its neighbours: solves
/// (G + reg * tr(G)/k * I) w = 1 on the local Gram matrix and rescales w to sum to one.
template <typename Scalar>
Vec<Scalar> local_reconstruction_weights(const Mat<Scalar>& X, Index i, const std::vector<Index>& neighbors,
                                         Scalar reg) {
    const auto k = static_cast<Index>(neighbors.size());
    Mat<Scalar> diffs(k, X.cols());
    for (Index a = 0; a < k; ++a) diffs.row(a) = X.row(i) - X.row(neighbors[static_cast<std::size_t>(a)]);
    Mat<Scalar> gram = diffs * diffs.transpose();
    const Scalar trace = gram.trace();
    const Scalar ridge = trace > Scalar(0) ? reg * trace / Scalar(k) : Scalar(0);
    gram.diagonal().array() += ridge;
    if (trace == Scalar(0)) gram.diagonal().array() += Scalar(1e-12);

    Eigen::LDLT<Mat<Scalar>> ldlt(gram);
    Vec<Scalar> w = ldlt.solve(Vec<Scalar>::Ones(k));
    const Scalar total = w.sum();
    if (ldlt.info() != Eigen::Success || !all_finite(w) || total == Scalar(0) || !std::isfinite(total))
        throw NumericError("reconstruction_weights: singular local system at sample " + std::to_string(i));
    return w / total;
}

/// Row-stochastic N x N matrix V with V(i, j) != 0 only for j in Q_i.
template <typename Scalar>
SparseRowMat<Scalar> reconstruction_weights(const Mat<Scalar>& X, const NeighborSets& neighbors, Scalar reg) {
    if (static_cast<Index>(neighbors.size()) != X.rows())
        throw ShapeError("reconstruction_weights: " + std::to_string(neighbors.size()) + " neighbour sets for " +
                         std::to_string(X.rows()) + " samples");
    if (!(reg >= Scalar(0))) throw ParameterError("reconstruction_weights: reg must be >= 0");
    std::vector<Eigen::Triplet<Scalar>> triplets;
    for (Index i = 0; i < X.rows(); ++i) {
        const auto& q = neighbors[static_cast<std::size_t>(i)];
        for (Index j : q)
            if (j == i || j < 0 || j >= X.rows())
                throw DataError("reconstruction_weights: invalid neighbour " + std::to_string(j) + " for sample " +
                                std::to_string(i));
        const Vec<Scalar> w = local_reconstruction_weights(X, i, q, reg);
        for (std::size_t a = 0; a < q.size(); ++a) triplets.emplace_back(i, q[a], w(Index(a)));
    }
    SparseRowMat<Scalar> V(X.rows(), X.rows());
    V.setFromTriplets(triplets.begin(), triplets.end());
    return V;
}

/// M = (I - V)^T (I - V), symmetrised.
template <typename Scalar>
SparseMat<Scalar> graph_matrix(const SparseRowMat<Scalar>& V) {
    if (V.rows() != V.cols()) throw ShapeError("graph_matrix: V must be square");
    SparseMat<Scalar> identity(V.rows(), V.cols());
    identity.setIdentity();
    const SparseMat<Scalar> residual = identity - SparseMat<Scalar>(V);
    const SparseMat<Scalar> product = SparseMat<Scalar>(residual.transpose()) * residual;
    SparseMat<Scalar> M = (product + SparseMat<Scalar>(product.transpose())) * Scalar(0.5);
    M.prune(Scalar(0), Scalar(0));
    return M;
}

template <typename Scalar>
struct LleGraph {
    int k = 0;
    NeighborSets neighbors;
    SparseRowMat<Scalar> V;
    SparseMat<Scalar> M;

    Index size() const { return V.rows(); }
};

template <typename Scalar>
LleGraph<Scalar> build_lle_graph(const Mat<Scalar>& X, int k, Scalar reg = Scalar(1e-3)) {
    LleGraph<Scalar> g;
    g.k = k;
    g.neighbors = knn_neighbors(X, k);
    g.V = reconstruction_weights(X, g.neighbors, reg);
    g.M = graph_matrix(g.V);
    return g;
}

/// Tr(Y^T M Y) for sparse M.
template <typename Scalar, typename SparseType>
Scalar graph_penalty(const SparseType& M, const Mat<Scalar>& Y) {
    return (Y.transpose() * (M * Y)).trace();
}

/// One "row col value" line per stored entry (0-based indices).
template <typename SparseType>
void write_coordinate(std::ostream& out, const SparseType& S) {
    out.precision(17);
    for (Index outer = 0; outer < S.outerSize(); ++outer)
        for (typename SparseType::InnerIterator it(S, outer); it; ++it)
            out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace dabls

#endif  // DABLS_LLE_HPP
