#ifndef DABLS_HARNESS_HPP
#define DABLS_HARNESS_HPP

#include "dabls/da.hpp"
#include "dabls/dataio.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dabls {

enum class Method { dabls, bls_source_only };

Method parse_method(const std::string& text);
std::string to_string(Method method);

/// Fraction of positions where `predicted` equals `truth`.
double accuracy(const Labels& predicted, const Labels& truth);

/// Recall of one class; NaN when the class does not occur in `truth`.
double class_recall(const Labels& predicted, const Labels& truth, int cls);

struct TaskResult {
    std::string task;
    Method method = Method::dabls;
    double accuracy = 0.0;
    double fit_seconds = 0.0;
    double predict_seconds = 0.0;
    double labeled_fraction = 0.0;
    HyperParams hyperparams;
    std::uint64_t seed = 0;
};

std::string task_name(const std::string& source, const std::string& target);

/// Splits the target (stratified, seeded), fits the method, scores it on the
/// unlabeled target rows. The split and the model draw from separate child seeds,
/// so both methods see the same split for the same seed.
TaskResult run_task(const Dataset& source, const Dataset& target, const HyperParams& hp, double labeled_fraction,
                    std::uint64_t seed, Method method);

/// Seed-averaged outcome of one (task, method) cell.
struct TaskSummary {
    std::string task;
    Method method = Method::dabls;
    double accuracy_mean = 0.0;
    double accuracy_std = 0.0;
    double fit_seconds_mean = 0.0;
    double predict_seconds_mean = 0.0;
    int runs = 0;
};

struct MethodAverage {
    Method method = Method::dabls;
    double accuracy = 0.0;  ///< mean of the per-task means
    double fit_seconds = 0.0;
    double predict_seconds = 0.0;
};

struct ExperimentReport {
    std::vector<TaskResult> results;
    std::vector<TaskSummary> tasks;
    std::vector<MethodAverage> averages;
    nlohmann::json config;
    std::string build_id;
    std::string timestamp;
};

/// Groups results by (task, method) in first-appearance order and recomputes averages.
void summarize(ExperimentReport& report);

struct BenchmarkOptions {
    HyperParams hyperparams;
    double labeled_fraction = 0.1;
    std::vector<std::uint64_t> seeds{0};
    std::vector<Method> methods{Method::dabls, Method::bls_source_only};
    int jobs = 1;
};

/// Every ordered pair of distinct domains, for every seed and method.
ExperimentReport run_benchmark(const std::vector<Dataset>& domains, const BenchmarkOptions& options);

/// Loads every domain before any task runs, then benchmarks.
ExperimentReport run_benchmark(const std::vector<DatasetManifest>& manifests, const BenchmarkOptions& options);

nlohmann::json report_to_json(const ExperimentReport& report);
/// One row per task, accuracy (%) and time columns per method, plus an "Average" row.
std::string report_to_csv(const ExperimentReport& report);

enum class EvalMode { holdout, oracle };

EvalMode parse_eval_mode(const std::string& text);
std::string to_string(EvalMode mode);

/// Per-parameter value lists. Empty `k` / `tau0` lists leave the base values alone.
struct GridSpec {
    std::vector<int> n{20}, q{10}, r{400};
    std::vector<double> c_s{1e3}, c_t{10.0}, sigma{0.1};
    std::vector<int> k;
    std::vector<double> tau0;
    EvalMode mode = EvalMode::holdout;
    int repeats = 1;
    std::uint64_t seed = 0;

    /// The reference search scopes, m fixed to 1.
    static GridSpec search_scopes();

    std::size_t size() const;
    /// Lexicographic decoding with n varying slowest, then q, r, cs, ct, sigma, k, tau0.
    HyperParams point(std::size_t index, const HyperParams& base) const;
    void validate() const;
};

GridSpec grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GridSpec& grid);

struct GridPoint {
    std::size_t index = 0;
    HyperParams hyperparams;
    double score = 0.0;
};

struct GridResult {
    HyperParams best;
    std::size_t best_index = 0;
    double best_score = 0.0;
    std::vector<GridPoint> table;
};

/// Scores every grid point with DABLS. Holdout fits on source plus half the labeled
/// target and scores the other half; oracle scores on the unlabeled target truth.
/// Ties keep the earliest point.
GridResult grid_search(const Dataset& source, const Dataset& target, const GridSpec& grid, const HyperParams& base,
                       double labeled_fraction, int jobs = 1);

nlohmann::json grid_to_json(const GridResult& result);
std::string grid_to_csv(const GridResult& result);

struct SweepRow {
    double fraction = 0.0;
    Method method = Method::dabls;
    double accuracy_mean = 0.0;
    double accuracy_std = 0.0;
    std::vector<double> accuracies;
};

struct SweepTable {
    std::string task;
    std::vector<SweepRow> rows;
};

SweepTable sweep_labeled_fraction(const Dataset& source, const Dataset& target, const HyperParams& hp,
                                  const std::vector<double>& fractions, const std::vector<std::uint64_t>& seeds,
                                  const std::vector<Method>& methods = {Method::dabls}, int jobs = 1);

nlohmann::json sweep_to_json(const SweepTable& table);
/// One row per fraction, mean and stddev columns per method.
std::string sweep_to_csv(const SweepTable& table);

/// Runs body(0..count-1) on up to `jobs` threads; rethrows the first failure.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

std::string build_id();
std::string utc_timestamp();

}  // namespace dabls

#endif  // DABLS_HARNESS_HPP
