#include "dabls/harness.hpp"

#include "dabls/config.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#ifndef DABLS_BUILD_ID
#define DABLS_BUILD_ID "dev"
#endif

namespace dabls {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation; zero for fewer than two values.
double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double mu = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - mu) * (x - mu);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kModelStream = 2;
constexpr std::uint64_t kHoldoutStream = 3;

double score_dabls(const Dataset& source, const Dataset& fit_target, const Eigen::MatrixXd& eval_x,
                   const Labels& eval_y, const HyperParams& hp, std::uint64_t model_seed) {
    const auto model = dabls_fit(source, fit_target, hp, model_seed);
    return accuracy(dabls_predict(model, eval_x).labels, eval_y);
}

}  // namespace

Method parse_method(const std::string& text) {
    if (text == "dabls") return Method::dabls;
    if (text == "bls" || text == "bls_source_only") return Method::bls_source_only;
    throw ParameterError("unknown method '" + text + "' (expected dabls|bls)");
}

std::string to_string(Method method) { return method == Method::dabls ? "dabls" : "bls_source_only"; }

double accuracy(const Labels& predicted, const Labels& truth) {
    if (predicted.size() != truth.size())
        throw ShapeError("accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                         std::to_string(truth.size()) + " labels");
    if (truth.size() == 0) throw DataError("accuracy: no samples");
    return static_cast<double>((predicted.array() == truth.array()).count()) / static_cast<double>(truth.size());
}

double class_recall(const Labels& predicted, const Labels& truth, int cls) {
    if (predicted.size() != truth.size()) throw ShapeError("class_recall: length mismatch");
    Index total = 0, hit = 0;
    for (Index i = 0; i < truth.size(); ++i) {
        if (truth(i) != cls) continue;
        ++total;
        if (predicted(i) == cls) ++hit;
    }
    return total == 0 ? std::nan("") : static_cast<double>(hit) / static_cast<double>(total);
}

std::string task_name(const std::string& source, const std::string& target) { return source + "->" + target; }

TaskResult run_task(const Dataset& source, const Dataset& target, const HyperParams& hp, double labeled_fraction,
                    std::uint64_t seed, Method method) {
    hp.validate();
    const auto split = make_domain_split(source, target, labeled_fraction, derive_seed(seed, kSplitStream));
    if (split.target_unlabeled_features.rows() == 0)
        throw DataError("run_task: no unlabeled target samples left to score");
    const std::uint64_t model_seed = derive_seed(seed, kModelStream);

    TaskResult result;
    result.task = task_name(source.domain_name, target.domain_name);
    result.method = method;
    result.labeled_fraction = labeled_fraction;
    result.hyperparams = hp;
    result.hyperparams.bls.seed = model_seed;
    result.seed = seed;

    Prediction prediction;
    if (method == Method::dabls) {
        auto start = Clock::now();
        const auto model = dabls_fit(split.source, split.target_labeled, hp, model_seed);
        result.fit_seconds = seconds_since(start);
        start = Clock::now();
        prediction = dabls_predict(model, split.target_unlabeled_features);
        result.predict_seconds = seconds_since(start);
    } else {
        BlsConfig config = hp.bls;
        config.seed = model_seed;
        auto start = Clock::now();
        const auto model = bls_fit(split.source, config, hp.normalize);
        result.fit_seconds = seconds_since(start);
        start = Clock::now();
        prediction = bls_predict(model, split.target_unlabeled_features);
        result.predict_seconds = seconds_since(start);
    }
    result.accuracy = accuracy(prediction.labels, *split.target_unlabeled_truth);
    return result;
}

void summarize(ExperimentReport& report) {
    report.tasks.clear();
    report.averages.clear();
    std::vector<std::pair<std::string, Method>> order;
    std::map<std::pair<std::string, Method>, std::vector<const TaskResult*>> groups;
    for (const auto& r : report.results) {
        const auto key = std::make_pair(r.task, r.method);
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(&r);
    }
    for (const auto& key : order) {
        std::vector<double> acc, fit, pred;
        for (const auto* r : groups[key]) {
            acc.push_back(r->accuracy);
            fit.push_back(r->fit_seconds);
            pred.push_back(r->predict_seconds);
        }
        report.tasks.push_back(
            {key.first, key.second, mean(acc), stddev(acc), mean(fit), mean(pred), static_cast<int>(acc.size())});
    }
    std::vector<Method> methods;
    for (const auto& t : report.tasks)
        if (std::find(methods.begin(), methods.end(), t.method) == methods.end()) methods.push_back(t.method);
    for (Method m : methods) {
        std::vector<double> acc, fit, pred;
        for (const auto& t : report.tasks) {
            if (t.method != m) continue;
            acc.push_back(t.accuracy_mean);
            fit.push_back(t.fit_seconds_mean);
            pred.push_back(t.predict_seconds_mean);
        }
        report.averages.push_back({m, mean(acc), mean(fit), mean(pred)});
    }
}

ExperimentReport run_benchmark(const std::vector<Dataset>& domains, const BenchmarkOptions& options) {
    options.hyperparams.validate();
    if (domains.size() < 2) throw ParameterError("run_benchmark: need at least two domains");
    std::set<std::string> names;
    for (const auto& d : domains)
        if (!names.insert(d.domain_name).second)
            throw ParameterError("run_benchmark: duplicate domain '" + d.domain_name + "'");
    if (options.seeds.empty()) throw ParameterError("run_benchmark: no seeds given");
    if (options.methods.empty()) throw ParameterError("run_benchmark: no methods given");

    struct Job {
        std::size_t source, target, task_id;
        std::uint64_t seed;
        Method method;
    };
    std::vector<Job> jobs;
    for (std::uint64_t seed : options.seeds) {
        std::size_t task_id = 0;
        for (std::size_t s = 0; s < domains.size(); ++s)
            for (std::size_t t = 0; t < domains.size(); ++t) {
                if (s == t) continue;
                for (Method m : options.methods) jobs.push_back({s, t, task_id, derive_seed(seed, task_id), m});
                ++task_id;
            }
    }

    ExperimentReport report;
    report.results.resize(jobs.size());
    parallel_for(jobs.size(), options.jobs, [&](std::size_t i) {
        const auto& job = jobs[i];
        report.results[i] = run_task(domains[job.source], domains[job.target], options.hyperparams,
                                     options.labeled_fraction, job.seed, job.method);
    });
    summarize(report);

    std::vector<std::string> method_names, domain_names;
    for (Method m : options.methods) method_names.push_back(to_string(m));
    for (const auto& d : domains) domain_names.push_back(d.domain_name);
    report.config = {{"hyperparams", to_json(options.hyperparams)},
                     {"labeled_fraction", options.labeled_fraction},
                     {"seeds", options.seeds},
                     {"methods", method_names},
                     {"domains", domain_names}};
    report.build_id = build_id();
    report.timestamp = utc_timestamp();
    return report;
}

ExperimentReport run_benchmark(const std::vector<DatasetManifest>& manifests, const BenchmarkOptions& options) {
    options.hyperparams.validate();
    std::vector<Dataset> domains;
    domains.reserve(manifests.size());
    for (const auto& m : manifests) domains.push_back(load_manifest_dataset(m));
    for (const auto& d : domains)
        if (d.dim() != domains.front().dim() || d.num_classes != domains.front().num_classes)
            throw ShapeError("domain '" + d.domain_name + "' disagrees with '" + domains.front().domain_name +
                             "' on feature dimension or class count");
    return run_benchmark(domains, options);
}

nlohmann::json report_to_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["config"] = report.config;
    j["environment"] = {{"build_id", report.build_id}, {"timestamp", report.timestamp}};
    for (const auto& r : report.results)
        j["results"].push_back({{"task", r.task},
                                {"method", to_string(r.method)},
                                {"accuracy", r.accuracy},
                                {"fit_seconds", r.fit_seconds},
                                {"predict_seconds", r.predict_seconds},
                                {"labeled_fraction", r.labeled_fraction},
                                {"seed", r.seed},
                                {"hyperparams", to_json(r.hyperparams)}});
    for (const auto& t : report.tasks)
        j["tasks"].push_back({{"task", t.task},
                              {"method", to_string(t.method)},
                              {"accuracy_mean", t.accuracy_mean},
                              {"accuracy_std", t.accuracy_std},
                              {"fit_seconds_mean", t.fit_seconds_mean},
                              {"predict_seconds_mean", t.predict_seconds_mean},
                              {"runs", t.runs}});
    for (const auto& a : report.averages)
        j["averages"].push_back({{"method", to_string(a.method)},
                                 {"accuracy", a.accuracy},
                                 {"fit_seconds", a.fit_seconds},
                                 {"predict_seconds", a.predict_seconds}});
    return j;
}

std::string report_to_csv(const ExperimentReport& report) {
    std::vector<Method> methods;
    std::vector<std::string> tasks;
    for (const auto& t : report.tasks) {
        if (std::find(methods.begin(), methods.end(), t.method) == methods.end()) methods.push_back(t.method);
        if (std::find(tasks.begin(), tasks.end(), t.task) == tasks.end()) tasks.push_back(t.task);
    }
    std::ostringstream out;
    out << "task";
    for (Method m : methods) out << ',' << to_string(m) << "_accuracy_pct," << to_string(m) << "_std_pct";
    for (Method m : methods) out << ',' << to_string(m) << "_seconds";
    out << '\n';
    for (const auto& task : tasks) {
        out << task;
        std::vector<const TaskSummary*> cells;
        for (Method m : methods) {
            const auto it = std::find_if(report.tasks.begin(), report.tasks.end(),
                                         [&](const TaskSummary& t) { return t.task == task && t.method == m; });
            cells.push_back(it == report.tasks.end() ? nullptr : &*it);
        }
        for (const auto* c : cells)
            out << ',' << (c ? fixed(100.0 * c->accuracy_mean, 2) : "") << ','
                << (c ? fixed(100.0 * c->accuracy_std, 2) : "");
        for (const auto* c : cells) out << ',' << (c ? fixed(c->fit_seconds_mean + c->predict_seconds_mean, 4) : "");
        out << '\n';
    }
    out << "Average";
    for (Method m : methods) {
        const auto it = std::find_if(report.averages.begin(), report.averages.end(),
                                     [&](const MethodAverage& a) { return a.method == m; });
        out << ',' << fixed(100.0 * it->accuracy, 2) << ',';
    }
    for (Method m : methods) {
        const auto it = std::find_if(report.averages.begin(), report.averages.end(),
                                     [&](const MethodAverage& a) { return a.method == m; });
        out << ',' << fixed(it->fit_seconds + it->predict_seconds, 4);
    }
    out << '\n';
    return out.str();
}

EvalMode parse_eval_mode(const std::string& text) {
    if (text == "holdout") return EvalMode::holdout;
    if (text == "oracle") return EvalMode::oracle;
    throw ParameterError("unknown evaluation mode '" + text + "' (expected holdout|oracle)");
}

std::string to_string(EvalMode mode) { return mode == EvalMode::holdout ? "holdout" : "oracle"; }

GridSpec GridSpec::search_scopes() {
    GridSpec g;
    g.n.clear();
    for (int v = 10; v <= 100; v += 10) g.n.push_back(v);
    g.q = {10, 20, 30, 40, 50};
    g.r = {200, 400, 600, 800, 1000};
    g.c_s.clear();
    for (int e = -5; e <= 5; ++e) g.c_s.push_back(std::pow(10.0, e));
    g.c_t = g.c_s;
    g.sigma.clear();
    for (int e = -2; e <= 2; ++e) g.sigma.push_back(std::pow(10.0, e));
    return g;
}

std::size_t GridSpec::size() const {
    std::size_t total = n.size() * q.size() * r.size() * c_s.size() * c_t.size() * sigma.size();
    if (!k.empty()) total *= k.size();
    if (!tau0.empty()) total *= tau0.size();
    return total;
}

HyperParams GridSpec::point(std::size_t index, const HyperParams& base) const {
    if (index >= size()) throw ParameterError("grid point index out of range");
    HyperParams hp = base;
    hp.bls.m = 1;
    auto take = [&index](std::size_t radix) {
        const std::size_t digit = index % radix;
        index /= radix;
        return digit;
    };
    // Fastest-varying dimension first.
    if (!tau0.empty()) hp.tau0 = tau0[take(tau0.size())];
    if (!k.empty()) hp.k = k[take(k.size())];
    hp.sigma = sigma[take(sigma.size())];
    hp.c_t = c_t[take(c_t.size())];
    hp.c_s = c_s[take(c_s.size())];
    hp.bls.r = r[take(r.size())];
    hp.bls.q = q[take(q.size())];
    hp.bls.n = n[take(n.size())];
    return hp;
}

void GridSpec::validate() const {
    if (n.empty() || q.empty() || r.empty() || c_s.empty() || c_t.empty() || sigma.empty())
        throw ParameterError("grid: every hyper-parameter list must be non-empty");
    if (repeats < 1) throw ParameterError("grid: repeats must be >= 1");
}

GridSpec grid_from_json(const nlohmann::json& j) {
    GridSpec g;
    if (j.value("scopes", std::string()) == "search_scopes") g = GridSpec::search_scopes();
    try {
        if (j.contains("n")) g.n = j.at("n").get<std::vector<int>>();
        if (j.contains("q")) g.q = j.at("q").get<std::vector<int>>();
        if (j.contains("r")) g.r = j.at("r").get<std::vector<int>>();
        if (j.contains("cs")) g.c_s = j.at("cs").get<std::vector<double>>();
        if (j.contains("ct")) g.c_t = j.at("ct").get<std::vector<double>>();
        if (j.contains("sigma")) g.sigma = j.at("sigma").get<std::vector<double>>();
        if (j.contains("k")) g.k = j.at("k").get<std::vector<int>>();
        if (j.contains("tau0")) g.tau0 = j.at("tau0").get<std::vector<double>>();
        if (j.contains("mode")) g.mode = parse_eval_mode(j.at("mode").get<std::string>());
        if (j.contains("repeats")) g.repeats = j.at("repeats").get<int>();
        if (j.contains("seed")) g.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("malformed grid: ") + e.what());
    }
    g.validate();
    return g;
}

nlohmann::json to_json(const GridSpec& g) {
    return {{"n", g.n},         {"q", g.q},         {"r", g.r},
            {"cs", g.c_s},      {"ct", g.c_t},      {"sigma", g.sigma},
            {"k", g.k},         {"tau0", g.tau0},   {"mode", to_string(g.mode)},
            {"repeats", g.repeats}, {"seed", g.seed}, {"size", g.size()}};
}

GridResult grid_search(const Dataset& source, const Dataset& target, const GridSpec& grid, const HyperParams& base,
                       double labeled_fraction, int jobs) {
    grid.validate();
    base.validate();

    struct Fold {
        Dataset fit_target;
        Eigen::MatrixXd eval_x;
        Labels eval_y;
        std::uint64_t model_seed;
    };
    std::vector<Fold> folds;
    for (int rep = 0; rep < grid.repeats; ++rep) {
        const std::uint64_t rep_seed = derive_seed(grid.seed, static_cast<std::uint64_t>(rep));
        const auto split = make_domain_split(source, target, labeled_fraction, derive_seed(rep_seed, kSplitStream));
        const std::uint64_t model_seed = derive_seed(rep_seed, kModelStream);
        if (grid.mode == EvalMode::oracle) {
            folds.push_back({split.target_labeled, split.target_unlabeled_features, *split.target_unlabeled_truth,
                             model_seed});
            continue;
        }
        const auto& labeled = split.target_labeled;
        std::vector<Index> counts(static_cast<std::size_t>(labeled.num_classes), 0);
        for (Index i = 0; i < labeled.size(); ++i) ++counts[static_cast<std::size_t>(labeled.labels(i))];
        for (std::size_t c = 0; c < counts.size(); ++c)
            if (counts[c] == 1)
                throw ParameterError("holdout protocol needs >= 2 labeled target samples per class; class " +
                                     std::to_string(c) + " has 1 (raise the labeled fraction or use oracle mode)");
        const auto halves =
            stratified_split(labeled.labels, labeled.num_classes, 0.5, derive_seed(rep_seed, kHoldoutStream));
        const Dataset held = subset(labeled, halves.unlabeled);
        folds.push_back({subset(labeled, halves.labeled), held.features, held.labels, model_seed});
    }

    GridResult result;
    result.table.resize(grid.size());
    parallel_for(grid.size(), jobs, [&](std::size_t i) {
        const HyperParams hp = grid.point(i, base);
        double total = 0.0;
        for (const auto& fold : folds)
            total += score_dabls(source, fold.fit_target, fold.eval_x, fold.eval_y, hp, fold.model_seed);
        result.table[i] = {i, hp, total / static_cast<double>(folds.size())};
    });
    for (const auto& p : result.table)
        if (p.index == 0 || p.score > result.best_score) {
            result.best_score = p.score;
            result.best_index = p.index;
            result.best = p.hyperparams;
        }
    return result;
}

nlohmann::json grid_to_json(const GridResult& result) {
    nlohmann::json j;
    j["best"] = {{"index", result.best_index}, {"score", result.best_score}, {"hyperparams", to_json(result.best)}};
    for (const auto& p : result.table)
        j["table"].push_back({{"index", p.index}, {"score", p.score}, {"hyperparams", to_json(p.hyperparams)}});
    return j;
}

std::string grid_to_csv(const GridResult& result) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "index,n,q,m,r,cs,ct,sigma,k,tau0,score\n";
    for (const auto& p : result.table) {
        const auto& hp = p.hyperparams;
        out << p.index << ',' << hp.bls.n << ',' << hp.bls.q << ',' << hp.bls.m << ',' << hp.bls.r << ',' << hp.c_s << ','
            << hp.c_t << ',' << hp.sigma << ',' << hp.k << ',' << (hp.tau0 ? std::to_string(*hp.tau0) : "auto") << ','
            << p.score << '\n';
    }
    return out.str();
}

SweepTable sweep_labeled_fraction(const Dataset& source, const Dataset& target, const HyperParams& hp,
                                  const std::vector<double>& fractions, const std::vector<std::uint64_t>& seeds,
                                  const std::vector<Method>& methods, int jobs) {
    hp.validate();
    if (fractions.empty() || seeds.empty() || methods.empty())
        throw ParameterError("sweep: fractions, seeds and methods must be non-empty");
    for (double f : fractions)
        if (!(f > 0.0 && f < 1.0)) throw ParameterError("sweep: fraction " + std::to_string(f) + " outside (0, 1)");

    struct Cell {
        std::size_t fraction, method, seed;
    };
    std::vector<Cell> cells;
    for (std::size_t f = 0; f < fractions.size(); ++f)
        for (std::size_t m = 0; m < methods.size(); ++m)
            for (std::size_t s = 0; s < seeds.size(); ++s) cells.push_back({f, m, s});
    std::vector<double> acc(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        const auto& c = cells[i];
        acc[i] = run_task(source, target, hp, fractions[c.fraction], seeds[c.seed], methods[c.method]).accuracy;
    });

    SweepTable table;
    table.task = task_name(source.domain_name, target.domain_name);
    std::size_t at = 0;
    for (double f : fractions)
        for (Method m : methods) {
            SweepRow row;
            row.fraction = f;
            row.method = m;
            row.accuracies.assign(acc.begin() + static_cast<std::ptrdiff_t>(at),
                                  acc.begin() + static_cast<std::ptrdiff_t>(at + seeds.size()));
            at += seeds.size();
            row.accuracy_mean = mean(row.accuracies);
            row.accuracy_std = stddev(row.accuracies);
            table.rows.push_back(std::move(row));
        }
    return table;
}

nlohmann::json sweep_to_json(const SweepTable& table) {
    nlohmann::json j;
    j["task"] = table.task;
    for (const auto& r : table.rows)
        j["rows"].push_back({{"fraction", r.fraction},
                             {"method", to_string(r.method)},
                             {"accuracy_mean", r.accuracy_mean},
                             {"accuracy_std", r.accuracy_std},
                             {"accuracies", r.accuracies}});
    return j;
}

std::string sweep_to_csv(const SweepTable& table) {
    std::vector<Method> methods;
    std::vector<double> fractions;
    for (const auto& r : table.rows) {
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
        if (std::find(fractions.begin(), fractions.end(), r.fraction) == fractions.end()) fractions.push_back(r.fraction);
    }
    std::ostringstream out;
    out << "fraction";
    for (Method m : methods) out << ',' << table.task << ' ' << to_string(m) << "_pct," << to_string(m) << "_std_pct";
    out << '\n';
    for (double f : fractions) {
        out << fixed(100.0 * f, 0) << '%';
        for (Method m : methods) {
            const auto it = std::find_if(table.rows.begin(), table.rows.end(),
                                         [&](const SweepRow& r) { return r.fraction == f && r.method == m; });
            out << ',' << fixed(100.0 * it->accuracy_mean, 2) << ',' << fixed(100.0 * it->accuracy_std, 2);
        }
        out << '\n';
    }
    return out.str();
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(workers, count); ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        next = count;
                    }
                }
            });
    }
    if (failure) std::rethrow_exception(failure);
}

std::string build_id() { return DABLS_BUILD_ID; }

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace dabls
