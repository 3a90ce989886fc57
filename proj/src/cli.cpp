#include "dabls/cli.hpp"

#include "dabls/config.hpp"
#include "dabls/harness.hpp"
#include "dabls/lle.hpp"
#include "dabls/serialize.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

namespace dabls {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Common {
    std::string hp;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int jobs = 1;
    std::string format = "json";
    std::string out;
    bool verbose = false;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) items.push_back(item);
    return items;
}

std::vector<double> parse_reals(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size())
            throw ParameterError(what + ": '" + item + "' is not a number");
        out.push_back(v);
    }
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(text)) {
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size())
            throw ParameterError("seeds: '" + item + "' is not a non-negative integer");
        out.push_back(v);
    }
    return out;
}

std::vector<Method> parse_methods(const std::string& text) {
    std::vector<Method> out;
    for (const auto& item : split_list(text)) out.push_back(parse_method(item));
    if (out.empty()) throw ParameterError("no methods given");
    return out;
}

void check_format(const std::string& format) {
    if (format != "json" && format != "csv") throw ParameterError("--format must be json or csv");
}

void check_fraction(double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("--fraction must lie in (0, 1)");
}

/// Writes to --out when given, otherwise to `out`.
void emit(const Common& c, std::ostream& out, const std::string& text) {
    if (c.out.empty()) {
        out << text;
        return;
    }
    std::ofstream file(c.out, std::ios::binary);
    if (!file) throw DataError("cannot write " + c.out);
    file << text;
    if (!file) throw DataError("write failed: " + c.out);
}

std::string domain_name(const std::string& path) { return fs::path(path).stem().string(); }

Dataset load_domain(const std::string& path, std::optional<int> classes) {
    if (!fs::exists(path)) throw DataError("file not found: " + path);
    return load_domain_csv(path, domain_name(path), classes);
}

std::vector<DatasetManifest> manifests_from_json(const json& j, const fs::path& base) {
    std::vector<DatasetManifest> out;
    for (const auto& d : j) {
        DatasetManifest m;
        m.name = d.at("name").get<std::string>();
        m.path = d.at("path").get<std::string>();
        if (m.path.is_relative()) m.path = base / m.path;
        if (d.contains("num_classes") && !d.at("num_classes").is_null()) m.num_classes = d.at("num_classes").get<int>();
        out.push_back(std::move(m));
    }
    return out;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("cannot parse " + path + ": " + e.what());
    }
}

HyperParams checked_overrides(const std::string& overrides, HyperParams base = {}) {
    HyperParams hp = apply_overrides(std::move(base), overrides);
    hp.validate();
    return hp;
}

void add_common(CLI::App* cmd, Common& c, bool tabular) {
    cmd->add_option("--hp", c.hp, "hyper-parameter overrides, e.g. q=10,n=20,r=400,cs=1e3,ct=10,sigma=0.1");
    cmd->add_option("--seed", c.seed, "root seed for every random draw");
    cmd->add_option("--out", c.out, "output file (default: standard output)");
    cmd->add_flag("-v,--verbose", c.verbose, "progress on standard error");
    if (tabular) {
        cmd->add_option("--jobs", c.jobs, "parallel workers")->check(CLI::PositiveNumber);
        cmd->add_option("--format", c.format, "json or csv");
    }
}

int run_train(const Common& c, const std::string& method_text, const std::string& source_path,
              const std::string& target_path, double fraction, std::optional<int> classes, std::ostream& err) {
    const Method method = parse_method(method_text);
    const HyperParams hp = checked_overrides(c.hp);
    check_fraction(fraction);
    if (c.out.empty()) throw ParameterError("train: --out is required");
    if (method == Method::dabls && target_path.empty()) throw ParameterError("train: --target is required for dabls");

    const Dataset source = load_domain(source_path, classes);
    const std::uint64_t model_seed = derive_seed(c.seed, 2);
    if (method == Method::bls_source_only) {
        BlsConfig config = hp.bls;
        config.seed = model_seed;
        const auto model = bls_fit(source, config, hp.normalize);
        save_model(c.out, model);
        if (c.verbose) err << "trained BLS on " << source.size() << " source rows, F=" << config.hidden_width() << '\n';
        return kExitOk;
    }
    const Dataset target = load_domain(target_path, classes);
    const auto split = make_domain_split(source, target, fraction, derive_seed(c.seed, 1));
    const auto model = dabls_fit(split.source, split.target_labeled, hp, model_seed);
    save_model(c.out, model);
    if (c.verbose) {
        err << "trained DABLS on " << source.size() << " source + " << split.target_labeled.size()
            << " labeled target rows, F=" << hp.bls.hidden_width() << '\n';
        if (split.target_unlabeled_features.rows() > 0) {
            const auto pred = dabls_predict(model, split.target_unlabeled_features);
            err << "unlabeled target accuracy: " << accuracy(pred.labels, *split.target_unlabeled_truth) << '\n';
        }
    }
    return kExitOk;
}

int run_predict(const Common& c, const std::string& model_path, const std::string& input_path, std::ostream& out,
                std::ostream& err) {
    const AnyModel model = load_model(model_path);
    const Index d = input_dim(model);
    Eigen::MatrixXd raw = load_feature_csv(input_path);
    std::optional<Labels> truth;
    if (raw.rows() == 0) {
        raw.resize(0, d);
    } else if (raw.cols() == d + 1) {
        truth = raw.col(0).cast<int>();
        raw = raw.rightCols(d).eval();
    } else if (raw.cols() != d) {
        throw ShapeError("predict: model expects D=" + std::to_string(d) + " features (or a label column plus D), input has " +
                         std::to_string(raw.cols()) + " columns");
    }
    const auto pred = predict(model, raw);
    std::ostringstream text;
    for (Index i = 0; i < pred.labels.size(); ++i) text << pred.labels(i) << '\n';
    emit(c, out, text.str());
    if (truth && c.verbose) err << "accuracy against input labels: " << accuracy(pred.labels, *truth) << '\n';
    return kExitOk;
}

struct BenchArgs {
    std::string manifest;
    std::string seeds;
    std::string methods;
    std::optional<double> fraction;
};

int run_bench(const Common& c, const BenchArgs& a, std::ostream& out, std::ostream& err) {
    check_format(c.format);
    checked_overrides(c.hp);
    const auto seeds_override = parse_seeds(a.seeds);
    const auto methods_override = a.methods.empty() ? std::vector<Method>{} : parse_methods(a.methods);
    if (a.fraction) check_fraction(*a.fraction);

    const json manifest = read_json_file(a.manifest);
    BenchmarkOptions options;
    try {
        if (manifest.contains("hyperparams")) options.hyperparams = hyperparams_from_json(manifest.at("hyperparams"));
        options.hyperparams = checked_overrides(c.hp, options.hyperparams);
        if (manifest.contains("fraction")) options.labeled_fraction = manifest.at("fraction").get<double>();
        if (manifest.contains("seeds")) options.seeds = manifest.at("seeds").get<std::vector<std::uint64_t>>();
        if (manifest.contains("methods")) {
            options.methods.clear();
            for (const auto& m : manifest.at("methods")) options.methods.push_back(parse_method(m.get<std::string>()));
        }
    } catch (const json::exception& e) {
        throw ParameterError(std::string("malformed experiment manifest: ") + e.what());
    }
    if (a.fraction) options.labeled_fraction = *a.fraction;
    if (!seeds_override.empty()) options.seeds = seeds_override;
    else if (c.seed_given) options.seeds = {c.seed};
    if (!methods_override.empty()) options.methods = methods_override;
    options.jobs = c.jobs;
    check_fraction(options.labeled_fraction);

    const auto domains = manifests_from_json(manifest.at("domains"), fs::path(a.manifest).parent_path());
    if (c.verbose)
        err << "benchmark: " << domains.size() << " domains, " << options.seeds.size() << " seed(s), "
            << options.methods.size() << " method(s)\n";
    const auto report = run_benchmark(domains, options);
    emit(c, out, c.format == "csv" ? report_to_csv(report) : report_to_json(report).dump(2) + "\n");
    if (c.verbose)
        for (const auto& avg : report.averages)
            err << to_string(avg.method) << " average accuracy " << 100.0 * avg.accuracy << "%\n";
    return kExitOk;
}

struct GridArgs {
    std::string source, target, grid;
    bool scopes = false;
    std::string mode;
    int repeats = 0;
    double fraction = 0.1;
    std::optional<int> classes;
};

int run_grid(const Common& c, const GridArgs& a, std::ostream& out, std::ostream& err) {
    check_format(c.format);
    const HyperParams base = checked_overrides(c.hp);
    check_fraction(a.fraction);
    std::optional<EvalMode> mode;
    if (!a.mode.empty()) mode = parse_eval_mode(a.mode);

    GridSpec grid = a.scopes ? GridSpec::search_scopes() : GridSpec{};
    if (!a.grid.empty()) grid = grid_from_json(read_json_file(a.grid));
    if (mode) grid.mode = *mode;
    if (a.repeats > 0) grid.repeats = a.repeats;
    if (c.seed_given) grid.seed = c.seed;
    grid.validate();

    const Dataset source = load_domain(a.source, a.classes);
    const Dataset target = load_domain(a.target, a.classes);
    if (c.verbose) err << "grid: " << grid.size() << " points, mode " << to_string(grid.mode) << '\n';
    const auto result = grid_search(source, target, grid, base, a.fraction, c.jobs);
    emit(c, out, c.format == "csv" ? grid_to_csv(result) : grid_to_json(result).dump(2) + "\n");
    if (c.verbose) err << "best point " << result.best_index << " score " << result.best_score << '\n';
    return kExitOk;
}

struct SweepArgs {
    std::string source, target;
    std::string fractions = "0.1,0.2,0.3,0.4,0.5";
    std::string seeds;
    std::string methods = "dabls";
    std::optional<int> classes;
};

int run_sweep(const Common& c, const SweepArgs& a, std::ostream& out, std::ostream& err) {
    check_format(c.format);
    const HyperParams hp = checked_overrides(c.hp);
    const auto fractions = parse_reals(a.fractions, "fractions");
    for (double f : fractions) check_fraction(f);
    auto seeds = parse_seeds(a.seeds);
    if (seeds.empty()) seeds = {c.seed};
    const auto methods = parse_methods(a.methods);

    const Dataset source = load_domain(a.source, a.classes);
    const Dataset target = load_domain(a.target, a.classes);
    if (c.verbose) err << "sweep: " << fractions.size() << " fractions x " << seeds.size() << " seeds\n";
    const auto table = sweep_labeled_fraction(source, target, hp, fractions, seeds, methods, c.jobs);
    emit(c, out, c.format == "csv" ? sweep_to_csv(table) : sweep_to_json(table).dump(2) + "\n");
    return kExitOk;
}

struct InspectArgs {
    std::string model, data, dump_v, dump_m;
    int k = 5;
    double reg = 1e-3;
    bool normalize = true;
};

int run_inspect(const Common& c, const InspectArgs& a, std::ostream& out) {
    if (a.model.empty() == a.data.empty()) throw ParameterError("inspect: give exactly one of --model or --data");
    if (a.k < 1) throw ParameterError("inspect: k must be >= 1");
    if (!(a.reg >= 0.0)) throw ParameterError("inspect: reg must be >= 0");
    json summary;
    if (!a.model.empty()) {
        const AnyModel model = load_model(a.model);
        std::visit(
            [&summary](const auto& m) {
                summary["kind"] = std::is_same_v<std::decay_t<decltype(m)>, DablsModel> ? "dabls" : "bls";
                summary["input_dim"] = m.mapping.input_dim;
                summary["hidden_width"] = m.mapping.hidden_width();
                summary["num_classes"] = m.num_classes;
                summary["config"] = to_json(m.mapping.config);
                summary["output_weight_norm"] = m.W.norm();
                summary["output_weight_max_abs"] = m.W.cwiseAbs().maxCoeff();
                summary["sae_degenerate"] = m.mapping.sae_degenerate;
                if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DablsModel>)
                    summary["hyperparams"] = to_json(m.hyperparams);
            },
            model);
    } else {
        const Dataset ds = load_domain(a.data, std::nullopt);
        const Eigen::MatrixXd X = a.normalize ? Normalizer::fit(ds.features).apply(ds.features) : ds.features;
        const auto graph = build_lle_graph<double>(X, a.k, a.reg);
        const Eigen::MatrixXd dense_m(graph.M);
        const Eigen::VectorXd v_rows = Eigen::MatrixXd(graph.V).rowwise().sum();
        summary["samples"] = graph.size();
        summary["k"] = graph.k;
        summary["v_nonzeros"] = graph.V.nonZeros();
        summary["m_nonzeros"] = graph.M.nonZeros();
        summary["max_row_sum_error"] = (v_rows.array() - 1.0).abs().maxCoeff();
        summary["max_m_ones_residual"] = (dense_m * Eigen::VectorXd::Ones(X.rows())).cwiseAbs().maxCoeff();
        summary["max_m_asymmetry"] = (dense_m - dense_m.transpose()).cwiseAbs().maxCoeff();
        auto dump = [](const std::string& path, const auto& S) {
            std::ofstream f(path);
            if (!f) throw DataError("cannot write " + path);
            write_coordinate(f, S);
        };
        if (!a.dump_v.empty()) dump(a.dump_v, graph.V);
        if (!a.dump_m.empty()) dump(a.dump_m, graph.M);
    }
    emit(c, out, summary.dump(2) + "\n");
    return kExitOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Broad learning system domain adaptation toolkit", "dabls"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", build_id());

    Common c;
    std::string method = "dabls", source, target;
    double fraction = 0.1;
    std::optional<int> classes;

    auto* train = app.add_subcommand("train", "fit DABLS-LLE or source-only BLS and write a model file");
    add_common(train, c, false);
    train->add_option("--method", method, "dabls or bls");
    train->add_option("--source", source, "source domain CSV")->required();
    train->add_option("--target", target, "target domain CSV");
    train->add_option("--fraction", fraction, "labeled share of the target domain");
    train->add_option("--num-classes", classes, "class count override");

    std::string model_path, input_path;
    auto* pred = app.add_subcommand("predict", "write one predicted label per input row");
    add_common(pred, c, false);
    pred->add_option("--model", model_path, "model file")->required();
    pred->add_option("--input", input_path, "CSV of features, optionally label-first")->required();

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "all ordered domain pairs from an experiment manifest");
    add_common(bench, c, true);
    bench->add_option("--manifest", bench_args.manifest, "experiment manifest JSON")->required();
    bench->add_option("--seeds", bench_args.seeds, "comma-separated seeds");
    bench->add_option("--methods", bench_args.methods, "comma-separated methods (dabls,bls)");
    bench->add_option("--fraction", bench_args.fraction, "labeled share of each target domain");

    GridArgs grid_args;
    auto* grid = app.add_subcommand("grid", "hyper-parameter grid search on one task");
    add_common(grid, c, true);
    grid->add_option("--source", grid_args.source, "source domain CSV")->required();
    grid->add_option("--target", grid_args.target, "target domain CSV")->required();
    grid->add_option("--grid", grid_args.grid, "grid JSON");
    grid->add_flag("--scopes", grid_args.scopes, "use the reference search scopes");
    grid->add_option("--mode", grid_args.mode, "holdout or oracle");
    grid->add_option("--repeats", grid_args.repeats, "splits averaged per point");
    grid->add_option("--fraction", grid_args.fraction, "labeled share of the target domain");
    grid->add_option("--num-classes", grid_args.classes, "class count override");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "accuracy against the labeled target share");
    add_common(sweep, c, true);
    sweep->add_option("--source", sweep_args.source, "source domain CSV")->required();
    sweep->add_option("--target", sweep_args.target, "target domain CSV")->required();
    sweep->add_option("--fractions", sweep_args.fractions, "comma-separated fractions");
    sweep->add_option("--seeds", sweep_args.seeds, "comma-separated seeds");
    sweep->add_option("--methods", sweep_args.methods, "comma-separated methods (dabls,bls)");
    sweep->add_option("--num-classes", sweep_args.classes, "class count override");

    InspectArgs inspect_args;
    auto* inspect = app.add_subcommand("inspect", "summarise a model file or the LLE graph of a dataset");
    add_common(inspect, c, false);
    inspect->add_option("--model", inspect_args.model, "model file");
    inspect->add_option("--data", inspect_args.data, "domain CSV to build an LLE graph from");
    inspect->add_option("--k", inspect_args.k, "LLE neighbours");
    inspect->add_option("--reg", inspect_args.reg, "local Gram regularisation");
    inspect->add_option("--dump-v", inspect_args.dump_v, "write V as row col value lines");
    inspect->add_option("--dump-m", inspect_args.dump_m, "write M as row col value lines");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << build_id() << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return kExitUsage;
    }

    for (auto* cmd : {train, pred, bench, grid, sweep, inspect})
        if (cmd->parsed()) c.seed_given = cmd->count("--seed") > 0;

    try {
        if (train->parsed()) return run_train(c, method, source, target, fraction, classes, err);
        if (pred->parsed()) return run_predict(c, model_path, input_path, out, err);
        if (bench->parsed()) return run_bench(c, bench_args, out, err);
        if (grid->parsed()) return run_grid(c, grid_args, out, err);
        if (sweep->parsed()) return run_sweep(c, sweep_args, out, err);
        if (inspect->parsed()) return run_inspect(c, inspect_args, out);
    } catch (const ParameterError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

}  // namespace dabls
