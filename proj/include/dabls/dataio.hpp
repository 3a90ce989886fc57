#ifndef DABLS_DATAIO_HPP
#define DABLS_DATAIO_HPP

#include "dabls/core.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dabls {

/// One domain: N x D features, N labels in [0, C).
struct Dataset {
    Eigen::MatrixXd features;
    Labels labels;
    int num_classes = 0;
    std::string domain_name;

    Index size() const { return features.rows(); }
    Index dim() const { return features.cols(); }
};

/// Builds a dataset and checks its invariants (shape agreement, label range,
/// finite features). Zero rows are allowed only with `allow_empty`.
Dataset make_dataset(Eigen::MatrixXd features, Labels labels, int num_classes,
                     std::string domain_name, bool allow_empty = false);

/// Rows `indices` of `ds`, in the given order.
Dataset subset(const Dataset& ds, const std::vector<Index>& indices);

/// Vertical concatenation; both parts must share D and C.
Dataset concat(const Dataset& top, const Dataset& bottom, std::string domain_name = {});

/// Label-first CSV. An optional header row is recognised by a non-numeric first
/// cell. `num_classes` overrides max(label) + 1 when given.
Dataset load_domain_csv(const std::filesystem::path& path, const std::string& domain_name,
                        std::optional<int> num_classes = std::nullopt);

void write_domain_csv(const std::filesystem::path& path, const Dataset& ds);

/// Features-only CSV (no label column). Zero data rows yield a 0 x expected_dim matrix.
Eigen::MatrixXd load_feature_csv(const std::filesystem::path& path,
                                 std::optional<Index> expected_dim = std::nullopt);

/// N x C one-hot matrix.
Eigen::MatrixXd one_hot(const Labels& labels, int num_classes);

enum class NormalizeMode { none, zscore };

NormalizeMode parse_normalize_mode(const std::string& text);
std::string to_string(NormalizeMode mode);

/// Per-column z-score statistics.
struct Normalizer {
    static constexpr double stddev_floor = 1e-12;

    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd stddev;

    /// Population statistics of `features`; `NormalizeMode::none` yields the identity transform.
    static Normalizer fit(const Eigen::MatrixXd& features, NormalizeMode mode = NormalizeMode::zscore);
    static Normalizer identity(Index dim);

    Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
    Index dim() const { return mean.size(); }
};

struct SplitIndices {
    std::vector<Index> labeled;
    std::vector<Index> unlabeled;
};

/// Per class with n_c members, max(1, round(fraction * n_c)) of them are labeled,
/// drawn by a seeded shuffle. Both index lists come back sorted.
SplitIndices stratified_split(const Labels& labels, int num_classes, double labeled_fraction,
                              std::uint64_t seed);

/// Source plus a labeled / unlabeled partition of the target domain.
struct DomainSplit {
    Dataset source;
    Dataset target_labeled;
    Eigen::MatrixXd target_unlabeled_features;
    std::optional<Labels> target_unlabeled_truth;
    double labeled_fraction = 0.0;
    std::uint64_t seed = 0;
};

DomainSplit make_domain_split(const Dataset& source, const Dataset& target, double labeled_fraction,
                              std::uint64_t seed);

/// {"name", "path", "num_classes"}; relative paths resolve against the manifest's directory.
struct DatasetManifest {
    std::string name;
    std::filesystem::path path;
    std::optional<int> num_classes;
};

Dataset load_manifest_dataset(const DatasetManifest& manifest);

}  // namespace dabls

#endif  // DABLS_DATAIO_HPP
