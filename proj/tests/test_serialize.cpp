#include "dabls/config.hpp"
#include "dabls/serialize.hpp"

#include "synthetic.hpp"
#include "test_util.hpp"

#include <doctest.h>

using namespace dabls;

namespace {

HyperParams small_hp() {
    HyperParams hp;
    hp.bls.n = 3;
    hp.bls.q = 4;
    hp.bls.m = 2;
    hp.bls.r = 20;
    hp.bls.sae_iters = 10;
    hp.tau0 = 7.5;
    hp.bls.seed = 0xfedcba9876543210ULL;
    return hp;
}

}  // namespace

TEST_SUITE("serialize") {

TEST_CASE("models survive JSON and CBOR round trips bit for bit") {
    const auto pair = synthetic::rotated_transfer(1);
    const auto split = make_domain_split(pair.source, pair.target, 0.1, 2);
    const HyperParams hp = small_hp();
    const AnyModel da = dabls_fit(split.source, split.target_labeled, hp, 0xfedcba9876543210ULL);
    const AnyModel bls = bls_fit(split.source, hp.bls);
    const auto& X = split.target_unlabeled_features;

    for (const AnyModel* model : {&da, &bls})
        for (std::string name : {"model.json", "model.bin", "model.cbor"}) {
            const auto path = testutil::tmp_path(name);
            save_model(path, *model);
            const AnyModel back = load_model(path);
            CHECK(back.index() == model->index());
            CHECK(input_dim(back) == 2);
            const auto p0 = predict(*model, X);
            const auto p1 = predict(back, X);
            CHECK(p0.scores == p1.scores);
            CHECK(p0.labels == p1.labels);
            CHECK(model_to_json(back) == model_to_json(*model));
        }

    const auto text = testutil::read_text(testutil::tmp_path("model.bin"));
    CHECK(static_cast<unsigned char>(text.front()) != '{');
    const auto doc = model_to_json(da);
    CHECK(doc["kind"] == "dabls");
    CHECK(doc["hyperparams"]["tau0"] == 7.5);
    CHECK(std::get<DablsModel>(model_from_json(doc)).hyperparams.bls.seed == 0xfedcba9876543210ULL);
}

TEST_CASE("malformed model files are data errors") {
    CHECK_THROWS_AS(load_model(testutil::tmp_path("missing_model.json")), DataError);
    CHECK_THROWS_AS(load_model(testutil::write_text("empty_model.json", "")), DataError);
    CHECK_THROWS_AS(load_model(testutil::write_text("garbage_model.json", "{not json")), DataError);
    CHECK_THROWS_AS(load_model(testutil::write_text("other_model.json", R"({"format":"x","version":1})")), DataError);

    const auto ds = synthetic::blobs({Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 3)}, {10, 10}, 0.5, 3, "S");
    BlsConfig cfg;
    cfg.n = 2;
    cfg.q = 2;
    cfg.r = 5;
    cfg.sae_iters = 5;
    auto doc = model_to_json(AnyModel(bls_fit(ds, cfg)));
    auto broken = doc;
    broken["W"]["rows"] = 3;
    CHECK_THROWS_AS(model_from_json(broken), DataError);
    broken = doc;
    broken["kind"] = "svm";
    CHECK_THROWS_AS(model_from_json(broken), DataError);
    broken = doc;
    broken["version"] = 99;
    CHECK_THROWS_AS(model_from_json(broken), DataError);
    broken = doc;
    broken["config"]["n"] = 5;
    CHECK_THROWS_AS(model_from_json(broken), DataError);
}

TEST_CASE("prediction shape checks go through the variant") {
    const auto ds = synthetic::blobs({Eigen::Vector2d(0, 0), Eigen::Vector2d(3, 3)}, {10, 10}, 0.5, 4, "S");
    BlsConfig cfg;
    cfg.n = 2;
    cfg.q = 2;
    cfg.r = 5;
    cfg.sae_iters = 5;
    const AnyModel model = bls_fit(ds, cfg);
    CHECK_THROWS_AS(predict(model, Eigen::MatrixXd::Zero(2, 3)), ShapeError);
    CHECK(predict(model, Eigen::MatrixXd(0, 2)).labels.size() == 0);
}

TEST_CASE("hyper-parameter overrides and JSON") {
    HyperParams hp = apply_overrides(HyperParams{}, "q=10,n=20,r=400,cs=1e3,ct=10,sigma=0.1,seed=18446744073709551615");
    CHECK(hp.bls.q == 10);
    CHECK(hp.c_s == 1000.0);
    CHECK(hp.bls.seed == 18446744073709551615ULL);
    hp = apply_overrides(hp, "tau0=3,balance=false,normalize=none,feature_activation=tanh");
    CHECK(hp.tau0 == 3.0);
    CHECK_FALSE(hp.class_balance);
    CHECK(hp.normalize == NormalizeMode::none);
    CHECK(hp.bls.feature_activation == Activation::tanh);
    const auto back = hyperparams_from_json(to_json(hp));
    CHECK(to_json(back) == to_json(hp));

    CHECK_THROWS_AS(apply_overrides(hp, "sigma=-1"), ParameterError);
    CHECK_THROWS_AS(apply_overrides(hp, "bogus=1"), ParameterError);
    CHECK_THROWS_AS(apply_overrides(hp, "q=abc"), ParameterError);
    CHECK_THROWS_AS(apply_overrides(hp, "q"), ParameterError);
    CHECK_THROWS_AS(hyperparams_from_json(nlohmann::json{{"zeta", 1}}), ParameterError);
}

}
