#include "dabls/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>

namespace dabls {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_cells(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::optional<double> parse_double(std::string_view cell) {
    if (cell.empty()) return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
    return value;
}

std::string where(const std::filesystem::path& path, std::size_t line_no) {
    return path.string() + ":" + std::to_string(line_no);
}

struct RawTable {
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> line_numbers;
};

// Reads a numeric CSV; skips blank lines and a header whose first cell is non-numeric.
RawTable read_numeric_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    RawTable table;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> width;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        const auto content = trim(line);
        if (content.empty()) continue;
        const auto cells = split_cells(content);
        if (first_content) {
            first_content = false;
            if (!parse_double(cells.front())) continue;
        }
        if (!width) width = cells.size();
        if (cells.size() != *width)
            throw DataError("ragged row at " + where(path, line_no) + ": expected " +
                            std::to_string(*width) + " columns, found " + std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto value = parse_double(cells[c]);
            if (!value)
                throw DataError("parse error at " + where(path, line_no) + ", column " +
                                std::to_string(c + 1) + ": '" + std::string(cells[c]) + "' is not a number");
            if (!std::isfinite(*value))
                throw DataError("non-finite value at " + where(path, line_no) + ", column " +
                                std::to_string(c + 1));
            row.push_back(*value);
        }
        table.rows.push_back(std::move(row));
        table.line_numbers.push_back(line_no);
    }
    return table;
}

}  // namespace

Dataset make_dataset(Eigen::MatrixXd features, Labels labels, int num_classes, std::string domain_name,
                     bool allow_empty) {
    if (features.rows() != labels.size())
        throw ShapeError("dataset '" + domain_name + "': " + std::to_string(features.rows()) +
                         " feature rows but " + std::to_string(labels.size()) + " labels");
    if (features.rows() == 0 && !allow_empty) throw DataError("dataset '" + domain_name + "' is empty");
    if (num_classes < 1) throw DataError("dataset '" + domain_name + "': num_classes must be >= 1");
    for (Index i = 0; i < labels.size(); ++i)
        if (labels(i) < 0 || labels(i) >= num_classes)
            throw DataError("dataset '" + domain_name + "': label " + std::to_string(labels(i)) +
                            " at row " + std::to_string(i) + " outside [0, " + std::to_string(num_classes) + ")");
    if (!all_finite(features)) throw DataError("dataset '" + domain_name + "' has non-finite features");
    return Dataset{std::move(features), std::move(labels), num_classes, std::move(domain_name)};
}

Dataset subset(const Dataset& ds, const std::vector<Index>& indices) {
    Dataset out;
    out.features.resize(static_cast<Index>(indices.size()), ds.dim());
    out.labels.resize(static_cast<Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const Index src = indices[i];
        if (src < 0 || src >= ds.size()) throw DataError("subset index out of range");
        out.features.row(static_cast<Index>(i)) = ds.features.row(src);
        out.labels(static_cast<Index>(i)) = ds.labels(src);
    }
    out.num_classes = ds.num_classes;
    out.domain_name = ds.domain_name;
    return out;
}

Dataset concat(const Dataset& top, const Dataset& bottom, std::string domain_name) {
    if (top.dim() != bottom.dim())
        throw ShapeError("cannot stack datasets with D=" + std::to_string(top.dim()) + " and D=" +
                         std::to_string(bottom.dim()));
    if (top.num_classes != bottom.num_classes)
        throw ShapeError("cannot stack datasets with C=" + std::to_string(top.num_classes) + " and C=" +
                         std::to_string(bottom.num_classes));
    Dataset out;
    out.features.resize(top.size() + bottom.size(), top.dim());
    out.features << top.features, bottom.features;
    out.labels.resize(top.size() + bottom.size());
    out.labels << top.labels, bottom.labels;
    out.num_classes = top.num_classes;
    out.domain_name = domain_name.empty() ? top.domain_name + "+" + bottom.domain_name : std::move(domain_name);
    return out;
}

Dataset load_domain_csv(const std::filesystem::path& path, const std::string& domain_name,
                        std::optional<int> num_classes) {
    const auto table = read_numeric_csv(path);
    if (table.rows.empty()) throw DataError("empty dataset: " + path.string() + " has no data rows");
    const auto width = table.rows.front().size();
    if (width < 2) throw DataError(path.string() + ": need a label column and at least one feature column");

    const auto n = static_cast<Index>(table.rows.size());
    const auto d = static_cast<Index>(width - 1);
    Eigen::MatrixXd features(n, d);
    Labels labels(n);
    int max_label = -1;
    for (Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        const double raw = row.front();
        if (raw != std::floor(raw) || raw < 0 || raw > 1e9)
            throw DataError("parse error at " + where(path, table.line_numbers[static_cast<std::size_t>(i)]) +
                            ": label must be a non-negative integer");
        labels(i) = static_cast<int>(raw);
        max_label = std::max(max_label, labels(i));
        for (Index j = 0; j < d; ++j) features(i, j) = row[static_cast<std::size_t>(j + 1)];
    }
    const int classes = num_classes.value_or(max_label + 1);
    return make_dataset(std::move(features), std::move(labels), classes, domain_name);
}

void write_domain_csv(const std::filesystem::path& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << std::setprecision(17);
    for (Index i = 0; i < ds.size(); ++i) {
        out << ds.labels(i);
        for (Index j = 0; j < ds.dim(); ++j) out << ',' << ds.features(i, j);
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

Eigen::MatrixXd load_feature_csv(const std::filesystem::path& path, std::optional<Index> expected_dim) {
    const auto table = read_numeric_csv(path);
    if (table.rows.empty()) return Eigen::MatrixXd(0, expected_dim.value_or(0));
    const auto d = static_cast<Index>(table.rows.front().size());
    if (expected_dim && *expected_dim != d)
        throw ShapeError(path.string() + ": expected " + std::to_string(*expected_dim) + " feature columns, found " +
                         std::to_string(d));
    Eigen::MatrixXd features(static_cast<Index>(table.rows.size()), d);
    for (Index i = 0; i < features.rows(); ++i)
        for (Index j = 0; j < d; ++j) features(i, j) = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return features;
}

Eigen::MatrixXd one_hot(const Labels& labels, int num_classes) {
    if (num_classes < 1) throw ParameterError("one_hot: num_classes must be >= 1");
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(labels.size(), num_classes);
    for (Index i = 0; i < labels.size(); ++i) {
        if (labels(i) < 0 || labels(i) >= num_classes)
            throw DataError("one_hot: label " + std::to_string(labels(i)) + " outside [0, " +
                            std::to_string(num_classes) + ")");
        y(i, labels(i)) = 1.0;
    }
    return y;
}

NormalizeMode parse_normalize_mode(const std::string& text) {
    if (text == "none") return NormalizeMode::none;
    if (text == "zscore") return NormalizeMode::zscore;
    throw ParameterError("unknown normalization '" + text + "' (expected none|zscore)");
}

std::string to_string(NormalizeMode mode) { return mode == NormalizeMode::none ? "none" : "zscore"; }

Normalizer Normalizer::fit(const Eigen::MatrixXd& features, NormalizeMode mode) {
    if (features.rows() < 1) throw DataError("normalize_fit: need at least one row");
    if (mode == NormalizeMode::none) return identity(features.cols());
    Normalizer norm;
    norm.mean = features.colwise().mean();
    const Eigen::MatrixXd centered = features.rowwise() - norm.mean;
    norm.stddev = (centered.colwise().squaredNorm() / static_cast<double>(features.rows())).cwiseSqrt();
    norm.stddev = norm.stddev.cwiseMax(stddev_floor);
    return norm;
}

Normalizer Normalizer::identity(Index dim) {
    return Normalizer{Eigen::RowVectorXd::Zero(dim), Eigen::RowVectorXd::Ones(dim)};
}

Eigen::MatrixXd Normalizer::apply(const Eigen::MatrixXd& features) const {
    if (features.cols() != dim())
        throw ShapeError("normalizer fitted on D=" + std::to_string(dim()) + " but input has D=" +
                         std::to_string(features.cols()));
    return ((features.rowwise() - mean).array().rowwise() / stddev.array()).matrix();
}

SplitIndices stratified_split(const Labels& labels, int num_classes, double labeled_fraction, std::uint64_t seed) {
    if (!(labeled_fraction > 0.0 && labeled_fraction < 1.0))
        throw ParameterError("labeled fraction must lie in (0, 1), got " + std::to_string(labeled_fraction));
    std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(num_classes));
    for (Index i = 0; i < labels.size(); ++i) {
        if (labels(i) < 0 || labels(i) >= num_classes) throw DataError("stratified_split: label out of range");
        by_class[static_cast<std::size_t>(labels(i))].push_back(i);
    }

    std::mt19937_64 rng(seed);
    SplitIndices split;
    for (auto& members : by_class) {
        if (members.empty()) continue;
        std::shuffle(members.begin(), members.end(), rng);
        const auto wanted = static_cast<std::size_t>(
            std::max(1.0, std::round(labeled_fraction * static_cast<double>(members.size()))));
        const auto take = std::min(wanted, members.size());
        split.labeled.insert(split.labeled.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
        split.unlabeled.insert(split.unlabeled.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
    }
    std::sort(split.labeled.begin(), split.labeled.end());
    std::sort(split.unlabeled.begin(), split.unlabeled.end());
    return split;
}

DomainSplit make_domain_split(const Dataset& source, const Dataset& target, double labeled_fraction,
                              std::uint64_t seed) {
    if (source.dim() != target.dim())
        throw ShapeError("source D=" + std::to_string(source.dim()) + " differs from target D=" +
                         std::to_string(target.dim()));
    if (source.num_classes != target.num_classes)
        throw ShapeError("source C=" + std::to_string(source.num_classes) + " differs from target C=" +
                         std::to_string(target.num_classes));
    const auto idx = stratified_split(target.labels, target.num_classes, labeled_fraction, seed);
    const Dataset unlabeled = subset(target, idx.unlabeled);

    DomainSplit split;
    split.source = source;
    split.target_labeled = subset(target, idx.labeled);
    split.target_unlabeled_features = unlabeled.features;
    split.target_unlabeled_truth = unlabeled.labels;
    split.labeled_fraction = labeled_fraction;
    split.seed = seed;
    return split;
}

Dataset load_manifest_dataset(const DatasetManifest& manifest) {
    if (!std::filesystem::exists(manifest.path))
        throw DataError("domain '" + manifest.name + "': file not found: " + manifest.path.string());
    return load_domain_csv(manifest.path, manifest.name, manifest.num_classes);
}

}  // namespace dabls
