#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "glad/errors.hpp"
#include "glad/modelstore.hpp"

using namespace glad;

namespace {

ModelBundle trained_bundle() {
    const auto cohort = fixtures::small_cohort(300, 21);
    const auto& d = builtin_dictionary(Edition::base34);
    ModelBundle b;
    b.dict_edition = Edition::base34;
    b.dict_hash = d.content_hash();
    b.variant = ModelVariant::concise();
    b.features = variant_features(b.variant, {}, d);
    Hyperparams h;
    h.n_trees = 12;
    h.max_depth = 6;
    b.forest = fit_forest(cohort, b.features, h);
    b.certainty = {{5, 0.2}, {10, 0.4}, {15, 0.58}, {20, 0.7}};
    b.certainty_average = {{5, 0.17}, {10, 0.33}, {15, 0.51}, {20, 0.62}};
    b.training_digest = cohort.digest();
    b.cv_rmse = 19.0;
    b.cv_r2 = 0.3;
    b.cv_folds = 10;
    return b;
}

std::string read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("bundles serialize canonically and round-trip") {
    const auto dir = fixtures::temp_dir("modelstore");
    const auto b = trained_bundle();
    save_bundle(b, dir / "a.glad-model.json");
    save_bundle(b, dir / "b.glad-model.json");
    const auto bytes = read_all(dir / "a.glad-model.json");
    CHECK(bytes == read_all(dir / "b.glad-model.json"));

    const auto loaded = load_bundle(dir / "a.glad-model.json");
    save_bundle(loaded, dir / "c.glad-model.json");
    CHECK(read_all(dir / "c.glad-model.json") == bytes);
    CHECK(loaded.certainty == b.certainty);
    CHECK(loaded.forest.layout == b.forest.layout);
    CHECK(loaded.forest.hyper == b.forest.hyper);
    CHECK(loaded.forest.importances == b.forest.importances);

    Rng rng(77);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> x(b.forest.layout.width());
        for (auto& v : x) v = rng.uniform() * 120.0 - 10.0;
        CHECK(predict(loaded.forest, x) == predict(b.forest, x));
    }
}

TEST_CASE("bundle errors") {
    const auto dir = fixtures::temp_dir("modelstore_errors");
    const auto b = trained_bundle();
    const auto text = serialize_bundle(b);

    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream(dir / name, std::ios::binary) << body;
        return dir / name;
    };
    SUBCASE("unknown format version") {
        auto j = nlohmann::json::parse(text);
        j["format_version"] = 999;
        CHECK_THROWS_AS(load_bundle(write("v999.json", j.dump())), FormatVersionMismatch);
    }
    SUBCASE("truncated file") {
        CHECK_THROWS_AS(load_bundle(write("trunc.json", text.substr(0, text.size() / 2))), IntegrityError);
    }
    SUBCASE("unknown dictionary hash") {
        auto j = nlohmann::json::parse(text);
        j["dict_hash"] = std::string(64, '0');
        CHECK_THROWS_AS(load_bundle(write("hash.json", j.dump())), IntegrityError);
    }
    SUBCASE("malformed tree") {
        auto j = nlohmann::json::parse(text);
        j["trees"][0]["left"][0] = 0;
        CHECK_THROWS_AS(load_bundle(write("tree.json", j.dump())), IntegrityError);
        auto k = nlohmann::json::parse(text);
        k["trees"][0]["value"].erase(0);
        CHECK_THROWS_AS(load_bundle(write("tree2.json", k.dump())), IntegrityError);
    }
    SUBCASE("missing headline certainty") {
        auto bad = b;
        bad.certainty.erase(15.0);
        CHECK_THROWS_AS(save_bundle(bad, dir / "x.json"), ValidationError);
        auto j = nlohmann::json::parse(text);
        j["certainty"].erase("15");
        CHECK_THROWS_AS(load_bundle(write("c15.json", j.dump())), ValidationError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_bundle(dir / "absent.json"), IoError); }
}

TEST_CASE("certainty lookup falls back to the nearest margin") {
    const auto b = fixtures::constant_bundle(20.0);
    const auto exact = b.certainty_at(15);
    CHECK(exact.exact);
    CHECK(exact.rho == 0.5795);
    const auto near = b.certainty_at(16);
    CHECK_FALSE(near.exact);
    CHECK(near.margin == 15);
    const auto tie = b.certainty_at(12.5);
    CHECK(tie.margin == 10);
    CHECK(b.certainty_at(100).margin == 20);
}
