#include "dabls/lle.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace dabls;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    MatrixXd m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

SparseRowMat<double> sparse_from(const MatrixXd& dense) { return dense.sparseView(); }

}  // namespace

TEST_SUITE("llegraph") {

TEST_CASE("knn on three points of a line") {
    MatrixXd X(3, 1);
    X << 0, 1, 2;
    const auto q = knn_neighbors<double>(X, 1);
    CHECK(q == NeighborSets{{1}, {0}, {1}});
}

TEST_CASE("knn selects duplicates first") {
    MatrixXd X(4, 2);
    X << 0, 0, 5, 5, 0, 0, 1, 0;
    const auto q = knn_neighbors<double>(X, 2);
    CHECK(q[0] == std::vector<Index>{2, 3});
    CHECK(q[2] == std::vector<Index>{0, 3});
}

TEST_CASE("knn matches a full sort on random points") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 5; ++trial) {
        const MatrixXd X = gaussian(50, 3, rng);
        CHECK(knn_neighbors<double>(X, 5) == oracle::brute_knn(X, 5));
    }
    MatrixXd grid(16, 2);
    for (Index i = 0; i < 16; ++i) grid.row(i) << double(i % 4), double(i / 4);
    CHECK(knn_neighbors<double>(grid, 4) == oracle::brute_knn(grid, 4));
}

TEST_CASE("knn rejects k outside [1, N-1]") {
    const MatrixXd X = MatrixXd::Zero(4, 2);
    CHECK_THROWS_AS(knn_neighbors<double>(X, 4), ParameterError);
    CHECK_THROWS_AS(knn_neighbors<double>(X, 0), ParameterError);
    CHECK_NOTHROW(knn_neighbors<double>(X, 3));
}

TEST_CASE("reconstruction weights: symmetric examples") {
    MatrixXd X(3, 2);
    X << 0, 0, 1, 0, 0, 1;
    const VectorXd w = local_reconstruction_weights<double>(X, 0, {1, 2}, 1e-3);
    CHECK(w(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w(1) == doctest::Approx(0.5).epsilon(1e-12));
    const VectorXd residual = X.row(0).transpose() - (w(0) * X.row(1) + w(1) * X.row(2)).transpose();
    CHECK(residual.squaredNorm() == doctest::Approx(0.5).epsilon(1e-12));

    MatrixXd line(3, 1);
    line << 0, 1, 2;
    const VectorXd mid = local_reconstruction_weights<double>(line, 1, {0, 2}, 1e-3);
    CHECK(mid(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(line(1, 0) - mid(0) * line(0, 0) - mid(1) * line(2, 0)) < 1e-12);
}

TEST_CASE("reconstruction weights match the KKT oracle") {
    std::mt19937_64 rng(2);
    const MatrixXd X = gaussian(10, 3, rng);
    const auto q = knn_neighbors<double>(X, 3);
    const auto V = reconstruction_weights<double>(X, q, 1e-3);
    for (Index i = 0; i < 10; ++i) {
        const auto& nb = q[static_cast<std::size_t>(i)];
        const MatrixXd G = oracle::regularized_local_gram(X, i, nb, 1e-3);
        const VectorXd expected = oracle::kkt_affine_weights(G);
        VectorXd got(3);
        for (Index a = 0; a < 3; ++a) got(a) = V.coeff(i, nb[static_cast<std::size_t>(a)]);
        CHECK(std::abs(got.dot(G * got) - expected.dot(G * expected)) < 1e-6);
        CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("reconstruction weights are scale invariant") {
    std::mt19937_64 rng(3);
    const MatrixXd X = gaussian(30, 4, rng);
    const auto q = knn_neighbors<double>(X, 5);
    const MatrixXd V1 = MatrixXd(reconstruction_weights<double>(X, q, 1e-3));
    for (double c : {1e-3, 0.5, 7.0, 1e4}) {
        const MatrixXd V2 = MatrixXd(reconstruction_weights<double>((c * X).eval(), q, 1e-3));
        CHECK((V1 - V2).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("reconstruction weights report the failing sample") {
    MatrixXd X = MatrixXd::Zero(4, 2);
    X << 0, 0, 1, 0, 0, 1, 1, 1;
    X(2, 1) = std::nan("");
    const auto q = NeighborSets{{1, 3}, {0, 3}, {0, 1}, {0, 1}};
    try {
        (void)reconstruction_weights<double>(X, q, 1e-3);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("sample") != std::string::npos);
    }
    CHECK_THROWS_AS(reconstruction_weights<double>(MatrixXd::Zero(3, 2).eval(), q, 1e-3), ShapeError);
    CHECK_THROWS_AS(reconstruction_weights<double>(MatrixXd::Ones(4, 2).eval(), q, -1.0), ParameterError);
}

TEST_CASE("duplicate neighbourhoods stay finite through the trace floor") {
    const MatrixXd X = MatrixXd::Ones(5, 3);
    const auto g = build_lle_graph<double>(X, 2);
    CHECK(all_finite(MatrixXd(g.V)));
    for (Index i = 0; i < 5; ++i) CHECK(MatrixXd(g.V).row(i).sum() == doctest::Approx(1.0));
}

TEST_CASE("graph matrix examples") {
    const MatrixXd zero = MatrixXd::Zero(3, 3);
    CHECK(MatrixXd(graph_matrix(sparse_from(zero))).isApprox(MatrixXd::Identity(3, 3)));

    MatrixXd V(2, 2);
    V << 0, 1, 1, 0;
    MatrixXd expected(2, 2);
    expected << 2, -2, -2, 2;
    const MatrixXd M = MatrixXd(graph_matrix(sparse_from(V)));
    CHECK((M - expected).cwiseAbs().maxCoeff() < 1e-15);
    const MatrixXd R = MatrixXd::Identity(2, 2) - V;
    CHECK((M - R.transpose() * R).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS_AS(graph_matrix(SparseRowMat<double>(2, 3)), ShapeError);
}

TEST_CASE("graph invariants on random data") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const Index n = 12 + static_cast<Index>(rng() % 40);
        const int k = 1 + static_cast<int>(rng() % 8);
        const MatrixXd X = gaussian(n, 1 + static_cast<Index>(rng() % 5), rng);
        const auto g = build_lle_graph<double>(X, k);
        const MatrixXd V = MatrixXd(g.V);
        const MatrixXd M = MatrixXd(g.M);
        CHECK(g.size() == n);
        for (Index i = 0; i < n; ++i) {
            CHECK(V(i, i) == 0.0);
            CHECK(std::abs(V.row(i).sum() - 1.0) < 1e-8);
            const auto& nb = g.neighbors[static_cast<std::size_t>(i)];
            CHECK(nb.size() == static_cast<std::size_t>(k));
            for (Index j = 0; j < n; ++j)
                if (V(i, j) != 0.0) CHECK(std::find(nb.begin(), nb.end(), j) != nb.end());
        }
        CHECK((M - M.transpose()).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((M * VectorXd::Ones(n)).cwiseAbs().maxCoeff() < 1e-8);
        const double smallest = Eigen::SelfAdjointEigenSolver<MatrixXd>(M, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
        CHECK(smallest >= -1e-8);
    }
}

TEST_CASE("trace form equals the reconstruction sum") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const MatrixXd X = gaussian(25, 3, rng);
        const auto g = build_lle_graph<double>(X, 4);
        const MatrixXd Y = gaussian(25, 1 + static_cast<Index>(rng() % 4), rng);
        const double trace_form = graph_penalty<double>(g.M, Y);
        const double sum_form = oracle::reconstruction_sum(MatrixXd(g.V), Y);
        CHECK(std::abs(trace_form - sum_form) <= 1e-8 * std::max(1.0, sum_form));
        CHECK(trace_form >= -1e-8 * Y.squaredNorm());
    }
}

TEST_CASE("affine outputs on collinear data carry no penalty") {
    MatrixXd X(20, 3);
    for (Index i = 0; i < 20; ++i) X.row(i) << 0.5 * i, 1.0 - 0.25 * i, 2.0 + i;
    const auto g = build_lle_graph<double>(X, 2, 1e-9);
    MatrixXd B(3, 2);
    B << 1, -2, 0.5, 3, -1, 0.25;
    const MatrixXd Y = (X * B).rowwise() + Eigen::RowVector2d(4.0, -1.0);
    CHECK(graph_penalty<double>(g.M, Y) < 1e-8);
}

TEST_CASE("coordinate dump lists stored entries") {
    MatrixXd V(2, 2);
    V << 0, 1, 1, 0;
    std::ostringstream out;
    write_coordinate(out, sparse_from(V));
    CHECK(out.str() == "0 1 1\n1 0 1\n");
}

}
