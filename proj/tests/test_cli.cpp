#include "dabls/cli.hpp"
#include "dabls/serialize.hpp"

#include "synthetic.hpp"
#include "test_util.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <sstream>

using namespace dabls;
using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

std::string p(const std::string& name) { return testutil::tmp_path(name).string(); }

const std::string kSmall = "n=4,q=4,r=30,sae_iters=10";

/// Writes four rotated synthetic domains plus an experiment manifest; returns the manifest path.
std::string write_bench_fixture() {
    const std::vector<std::string> names{"A", "B", "C", "D"};
    json domains = json::array();
    for (int d = 0; d < 4; ++d) {
        auto pair = synthetic::rotated_transfer(static_cast<std::uint64_t>(d));
        auto ds = synthetic::rotate_shift(pair.source, 8.0 * d, Eigen::Vector2d(0.1 * d, 0.0), names[d]);
        write_domain_csv(testutil::tmp_path("cli_" + names[d] + ".csv"), ds);
        domains.push_back({{"name", names[d]}, {"path", "cli_" + names[d] + ".csv"}, {"num_classes", 3}});
    }
    json manifest{{"domains", domains}, {"fraction", 0.1}, {"seeds", {0}}, {"methods", {"dabls", "bls"}}};
    const auto path = testutil::write_text("cli_manifest.json", manifest.dump(2));
    return path.string();
}

void strip_timing(json& j) {
    if (j.is_object()) {
        for (const char* key : {"fit_seconds", "predict_seconds", "fit_seconds_mean", "predict_seconds_mean", "timestamp"})
            j.erase(key);
        for (auto& [k, v] : j.items()) strip_timing(v);
    } else if (j.is_array()) {
        for (auto& v : j) strip_timing(v);
    }
}

void write_pair() {
    const auto pair = synthetic::rotated_transfer(9);
    write_domain_csv(testutil::tmp_path("cli_src.csv"), pair.source);
    write_domain_csv(testutil::tmp_path("cli_tgt.csv"), pair.target);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("train then predict") {
    write_pair();
    for (std::string method : {"dabls", "bls"}) {
        const std::string model = p("cli_model_" + method + ".bin");
        const auto r = run({"train", "--method", method, "--source", p("cli_src.csv"), "--target", p("cli_tgt.csv"),
                            "--fraction", "0.1", "--seed", "7", "--hp", kSmall, "--out", model});
        CHECK(r.code == kExitOk);
        CHECK(std::holds_alternative<DablsModel>(load_model(model)) == (method == "dabls"));

        const auto labels = p("cli_labels_" + method + ".csv");
        CHECK(run({"predict", "--model", model, "--input", p("cli_tgt.csv"), "--out", labels}).code == kExitOk);
        const auto text = testutil::read_text(labels);
        CHECK(std::count(text.begin(), text.end(), '\n') == 300);

        const auto printed = run({"predict", "--model", model, "--input", p("cli_tgt.csv")});
        CHECK(printed.out == text);
    }
}

TEST_CASE("predict on an empty input writes an empty file") {
    write_pair();
    const std::string model = p("cli_empty_model.json");
    REQUIRE(run({"train", "--method", "bls", "--source", p("cli_src.csv"), "--hp", kSmall, "--out", model}).code == 0);
    testutil::write_text("cli_empty.csv", "");
    const auto labels = p("cli_empty_labels.csv");
    CHECK(run({"predict", "--model", model, "--input", p("cli_empty.csv"), "--out", labels}).code == kExitOk);
    CHECK(testutil::read_text(labels).empty());
    testutil::write_text("cli_wide.csv", "1,2,3,4\n");
    CHECK(run({"predict", "--model", model, "--input", p("cli_wide.csv")}).code == kExitData);
}

TEST_CASE("usage, data and ordering errors map to exit codes") {
    write_pair();
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"train", "--source", p("cli_src.csv"), "--bogus", "1"}).code == kExitUsage);
    CHECK(run({"train", "--source", p("cli_src.csv"), "--target", p("cli_tgt.csv"), "--out", p("x.bin"), "--fraction",
               "1.5"}).code == kExitUsage);

    const auto bad_hp = run({"train", "--source", p("no_such_file.csv"), "--target", p("no_such_file.csv"), "--out",
                             p("x.bin"), "--hp", "sigma=-1"});
    CHECK(bad_hp.code == kExitUsage);
    CHECK(bad_hp.err.find("sigma") != std::string::npos);
    CHECK(run({"grid", "--source", p("no_such_file.csv"), "--target", p("no_such_file.csv"), "--hp", "k=0"}).code ==
          kExitUsage);

    CHECK(run({"train", "--source", p("no_such_file.csv"), "--target", p("cli_tgt.csv"), "--out", p("x.bin")}).code ==
          kExitData);
    CHECK(run({"predict", "--model", p("no_such_model.bin"), "--input", p("cli_tgt.csv")}).code == kExitData);
    testutil::write_text("cli_ragged.csv", "0,1,2\n1,2\n");
    CHECK(run({"inspect", "--data", p("cli_ragged.csv")}).code == kExitData);
    CHECK(run({"--version"}).code == kExitOk);
}

TEST_CASE("bench prints a 12-task report") {
    const auto manifest = write_bench_fixture();
    const auto csv = run({"bench", "--manifest", manifest, "--hp", kSmall, "--format", "csv", "--jobs", "2"});
    REQUIRE(csv.code == kExitOk);
    CHECK(std::count(csv.out.begin(), csv.out.end(), '\n') == 1 + 12 + 1);

    const auto a = run({"bench", "--manifest", manifest, "--hp", kSmall, "--seed", "5"});
    const auto b = run({"bench", "--manifest", manifest, "--hp", kSmall, "--seed", "5", "--jobs", "3"});
    REQUIRE(a.code == kExitOk);
    json ja = json::parse(a.out), jb = json::parse(b.out);
    CHECK(ja["results"].size() == 24);
    strip_timing(ja);
    strip_timing(jb);
    CHECK(ja.dump() == jb.dump());

    auto broken = json::parse(testutil::read_text(manifest));
    broken["domains"][2]["path"] = "missing_domain.csv";
    const auto broken_path = testutil::write_text("cli_broken_manifest.json", broken.dump()).string();
    CHECK(run({"bench", "--manifest", broken_path, "--hp", kSmall}).code == kExitData);
}

TEST_CASE("grid, sweep and inspect") {
    write_pair();
    testutil::write_text("cli_grid.json", R"({"n":[3,4],"q":[4],"r":[20],"cs":[10,100],"ct":[10],"sigma":[0.1]})");
    const std::vector<std::string> grid_args{"grid", "--source", p("cli_src.csv"), "--target", p("cli_tgt.csv"),
                                             "--grid", p("cli_grid.json"), "--fraction", "0.2", "--seed", "3", "--hp",
                                             "sae_iters=5"};
    const auto g1 = run(grid_args);
    REQUIRE(g1.code == kExitOk);
    CHECK(json::parse(g1.out)["table"].size() == 4);
    CHECK(run(grid_args).out == g1.out);
    auto oracle_args = grid_args;
    oracle_args.insert(oracle_args.end(), {"--mode", "oracle", "--format", "csv"});
    CHECK(run(oracle_args).code == kExitOk);

    const std::vector<std::string> sweep_args{"sweep", "--source", p("cli_src.csv"), "--target", p("cli_tgt.csv"),
                                              "--fractions", "0.1,0.3", "--seeds", "1,2", "--hp", kSmall, "--format",
                                              "csv"};
    const auto s1 = run(sweep_args);
    REQUIRE(s1.code == kExitOk);
    CHECK(std::count(s1.out.begin(), s1.out.end(), '\n') == 3);
    CHECK(run(sweep_args).out == s1.out);

    const std::string model = p("cli_inspect_model.json");
    REQUIRE(run({"train", "--source", p("cli_src.csv"), "--target", p("cli_tgt.csv"), "--hp", kSmall, "--out", model})
                .code == 0);
    const auto info = run({"inspect", "--model", model});
    REQUIRE(info.code == kExitOk);
    const auto j = json::parse(info.out);
    CHECK(j["kind"] == "dabls");
    CHECK(j["hidden_width"] == 4 * 4 + 30);

    const auto graph = run({"inspect", "--data", p("cli_src.csv"), "--k", "4", "--dump-v", p("cli_v.txt")});
    REQUIRE(graph.code == kExitOk);
    const auto gj = json::parse(graph.out);
    CHECK(gj["samples"] == 300);
    CHECK(gj["v_nonzeros"] == 1200);
    CHECK(gj["max_row_sum_error"].get<double>() < 1e-8);
    const auto dump = testutil::read_text(p("cli_v.txt"));
    CHECK(std::count(dump.begin(), dump.end(), '\n') == 1200);
    CHECK(run({"inspect"}).code == kExitUsage);
}

TEST_CASE("training twice with one seed gives identical model files") {
    write_pair();
    const std::vector<std::string> base{"train", "--source", p("cli_src.csv"), "--target", p("cli_tgt.csv"),
                                        "--seed", "11", "--hp", kSmall, "--out"};
    auto a = base, b = base;
    a.push_back(p("cli_det_a.json"));
    b.push_back(p("cli_det_b.json"));
    REQUIRE(run(a).code == 0);
    REQUIRE(run(b).code == 0);
    CHECK(testutil::read_text(p("cli_det_a.json")) == testutil::read_text(p("cli_det_b.json")));
}

}
