#ifndef DABLS_CORE_HPP
#define DABLS_CORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dabls {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Index = Eigen::Index;
using Labels = Eigen::VectorXi;

/// Base of every error raised by the library. The category drives CLI exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad hyper-parameter or configuration value (caller mistake, detected before work starts).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Malformed, missing or inconsistent input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Dimension mismatch between operands.
class ShapeError : public DataError {
public:
    using DataError::DataError;
};

/// Factorization failure or non-finite values.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Row-wise argmax; ties go to the lowest column index.
template <typename Derived>
Labels argmax_rows(const Eigen::MatrixBase<Derived>& scores) {
    Labels out(scores.rows());
    for (Index i = 0; i < scores.rows(); ++i) {
        Index best = 0;
        for (Index c = 1; c < scores.cols(); ++c)
            if (scores(i, c) > scores(i, best)) best = c;
        out(i) = static_cast<int>(best);
    }
    return out;
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.derived().array().isFinite().all();
}

/// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a, std::uint64_t b = 0) {
    return mix_seed(mix_seed(mix_seed(root) ^ a) ^ b);
}

}  // namespace dabls

#endif  // DABLS_CORE_HPP
