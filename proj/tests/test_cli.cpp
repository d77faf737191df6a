#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "glad/cli.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "glad");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = glad::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const std::vector<std::string> kSmallForest = {"--trees", "6", "--depth", "4"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_CASE("synth writes deterministic CSVs and manifests") {
    const auto dir = fixtures::temp_dir("cli_synth");
    const auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
    REQUIRE(run({"synth", "--n", "120", "--seed", "42", "--r2", "0.32", "--out", a}).code == 0);
    REQUIRE(run({"synth", "--n", "120", "--seed", "42", "--r2", "0.32", "--out", b}).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(line_count(slurp(a)) == 121);
    const auto manifest = json::parse(slurp(a + ".manifest.json"));
    CHECK(manifest["command"] == "synth");
    CHECK(manifest["config"]["n"] == 120);
    CHECK(manifest["tool_version"] == "0.3.0");

    SUBCASE("manifest replays the run") {
        const auto replay = run({"synth", "--config", a + ".manifest.json", "--out", b});
        REQUIRE(replay.code == 0);
        CHECK(slurp(b) == slurp(a));
    }
    SUBCASE("flags override the config file") {
        const auto cfg = (dir / "cfg.json").string();
        std::ofstream(cfg) << json{{"n", 50}, {"seed", 3}, {"out", b}}.dump();
        REQUIRE(run({"synth", "--config", cfg, "--n", "60"}).code == 0);
        CHECK(line_count(slurp(b)) == 61);
    }
}

TEST_CASE("usage errors exit with status 2") {
    const auto dir = fixtures::temp_dir("cli_usage");
    const auto data = (dir / "d.csv").string();
    REQUIRE(run({"synth", "--n", "60", "--out", data}).code == 0);
    CHECK(run({"synth", "--n", "0", "--out", data}).code == 2);
    CHECK(run({"synth", "--out", data}).code == 2);
    CHECK(run({"train", "--data", data, "--variant", "bogus", "--out", (dir / "m.json").string()}).code == 2);
    CHECK(run({"evaluate", "--data", data, "--folds", "1", "--out", (dir / "e").string()}).code == 2);
    CHECK(run({"evaluate", "--data", data, "--margins", "10,5", "--out", (dir / "e").string()}).code == 2);
    CHECK(run({"serve", "--model", (dir / "absent.glad-model.json").string()}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"--version"}).code == 0);
    CHECK(run({"evaluate", "--help"}).code == 0);
}

TEST_CASE("evaluate, importance and train produce the documented artifacts") {
    const auto dir = fixtures::temp_dir("cli_pipeline");
    const auto data = (dir / "d.csv").string();
    REQUIRE(run({"synth", "--n", "240", "--seed", "5", "--out", data}).code == 0);

    const auto out1 = (dir / "eval1").string(), out2 = (dir / "eval2").string();
    const auto args = with({"evaluate", "--data", data, "--variants", "full,topk:3,concise", "--folds", "3"},
                           kSmallForest);
    const auto r1 = run(with(args, {"--out", out1, "--threads", "1"}));
    REQUIRE(r1.code == 0);
    const auto r2 = run(with(args, {"--out", out2, "--threads", "3"}));
    REQUIRE(r2.code == 0);
    for (auto name : {"report.json", "report.csv", "margin_sweep.csv", "margin_sweep_full.csv",
                      "margin_sweep_topk_3.csv", "margin_sweep_concise.csv", "importance.csv"}) {
        INFO(name);
        CHECK(fs::exists(fs::path(out1) / name));
        CHECK(slurp(fs::path(out1) / name) == slurp(fs::path(out2) / name));
    }
    const auto csv = slurp(fs::path(out1) / "report.csv");
    CHECK(line_count(csv) == 4);
    CHECK(csv.find("\nconcise,6,") != std::string::npos);
    CHECK(csv.find("\ntopk:3,3,") != std::string::npos);
    CHECK(slurp(fs::path(out1) / "margin_sweep.csv") == slurp(fs::path(out1) / "margin_sweep_concise.csv"));
    const auto report = json::parse(slurp(fs::path(out1) / "report.json"));
    CHECK(report["variants"].size() == 3);
    CHECK(report["exclusions"]["included"] == 240);

    const auto imp = (dir / "importance.csv").string();
    const auto ir = run(with({"importance", "--data", data, "--folds", "3", "--out", imp}, kSmallForest));
    REQUIRE(ir.code == 0);
    CHECK(json::parse(ir.out).contains("elbow_k"));
    CHECK(slurp(imp).rfind("rank,variable_id,importance\n1,baseline_pain,", 0) == 0);

    const auto model = (dir / "m.glad-model.json").string();
    const auto model2 = (dir / "m2.glad-model.json").string();
    const auto targs = with({"train", "--data", data, "--folds", "3"}, kSmallForest);
    REQUIRE(run(with(targs, {"--out", model, "--threads", "1"})).code == 0);
    REQUIRE(run(with(targs, {"--out", model2, "--threads", "2"})).code == 0);
    CHECK(slurp(model) == slurp(model2));
    const auto bundle = glad::load_bundle(model);
    CHECK(bundle.variant == glad::ModelVariant::concise());
    CHECK(bundle.forest.layout.variable_count() == 6);
    CHECK(bundle.forest.hyper.n_trees == 6);

    SUBCASE("default hyperparameters") {
        const auto tiny = (dir / "tiny.csv").string();
        REQUIRE(run({"synth", "--n", "40", "--out", tiny}).code == 0);
        const auto dm = (dir / "default.glad-model.json").string();
        REQUIRE(run({"train", "--data", tiny, "--folds", "2", "--out", dm}).code == 0);
        const auto b = glad::load_bundle(dm);
        CHECK(b.forest.hyper.n_trees == 100);
        CHECK(b.forest.hyper.max_depth == 10);
        CHECK(b.forest.hyper.seed == 42);
    }
}

TEST_CASE("predict") {
    const auto dir = fixtures::temp_dir("cli_predict");
    const auto model = (dir / "c.glad-model.json").string();
    glad::save_bundle(fixtures::constant_bundle(20.0), model);

    const json record = {{"age", 65},     {"bmi", 28},  {"baseline_pain", 45},
                         {"symptom_duration", 24}, {"walk40m", 30}, {"eq5d", 0.7}};
    const auto input = (dir / "r.json").string();
    std::ofstream(input) << record.dump();
    const auto r = run({"predict", "--model", model, "--input", input, "--margin", "15"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["interval"]["lower"] == 10.0);
    CHECK(j["interval"]["upper"] == 40.0);
    CHECK(j["certainty_pct"].get<double>() == doctest::Approx(57.95));
    CHECK(run({"predict", "--model", model, "--input", input}).out == r.out);

    const auto odd = json::parse(run({"predict", "--model", model, "--input", input, "--margin", "17"}).out);
    CHECK(odd.contains("warning"));
    CHECK(odd["certainty_margin"] == 15.0);

    const auto csv = (dir / "r.csv").string();
    std::ofstream(csv) << "age,bmi,baseline_pain,symptom_duration,walk40m,eq5d\n65,28,45,24,30,0.7\n70,31,60,12,35,0.5\n";
    const auto rows = json::parse(run({"predict", "--model", model, "--input", csv}).out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1]["predicted_post_pain"] == 40.0);

    auto missing = record;
    missing.erase("bmi");
    const auto bad_input = (dir / "bad.json").string();
    std::ofstream(bad_input) << missing.dump();
    const auto bad = run({"predict", "--model", model, "--input", bad_input});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("bmi") != std::string::npos);
}
