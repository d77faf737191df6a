// Acceptance suite: one PASS/FAIL line per primary criterion. The CLI-level
// criteria drive the installed binary as a subprocess; the rest run in process.
//
// usage: glad_acceptance <glad binary> <work dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fixtures.hpp"
#include "glad/cohort.hpp"
#include "glad/errors.hpp"
#include "glad/evaluation.hpp"
#include "glad/forest.hpp"
#include "glad/random.hpp"
#include "glad/schema.hpp"
#include "glad/selection.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace glad;

namespace {

fs::path g_binary;
fs::path g_work;

/// Collects failure reasons for one criterion.
struct Check {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    bool ok() const { return failures.empty(); }
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

/// Runs the binary with `args`; stdout goes to `stdout_file`. Returns the exit code.
int glad_cli(const std::string& args, const fs::path& stdout_file) {
    const std::string cmd = quote(g_binary.string()) + " " + args + " > " + quote(stdout_file.string()) +
                            " 2>> " + quote((g_work / "stderr.log").string());
    const int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

const json& variant_entry(const json& report, const std::string& name) {
    for (const auto& v : report.at("variants"))
        if (v.at("variant") == name) return v;
    throw ArgumentError("report has no variant " + name);
}

/// Runs synth + evaluate for the replication pipeline; returns the report.
json replication_run(const std::string& tag, std::size_t n, const std::string& edition, Check& c,
                     double& seconds) {
    const auto dir = g_work / tag;
    fs::create_directories(dir);
    const auto csv = dir / "cohort.csv";
    const auto t0 = std::chrono::steady_clock::now();
    int rc = glad_cli("synth --n " + std::to_string(n) + " --seed 42 --r2 0.32 --edition " + edition +
                          " --out " + quote(csv.string()),
                      dir / "synth.stdout");
    c.expect(rc == 0, "synth exited " + std::to_string(rc));
    rc = glad_cli("evaluate --data " + quote(csv.string()) +
                      " --variants full,topk:11,concise --folds 10 --margins 5,10,15,20 --out " +
                      quote((dir / "eval").string()),
                  dir / "evaluate.stdout");
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(rc == 0, "evaluate exited " + std::to_string(rc));
    if (!c.ok()) return json();
    return load_json(dir / "eval" / "report.json");
}

void report(int id, const std::string& title, const Check& c, const std::string& detail) {
    std::cout << (c.ok() ? "PASS" : "FAIL") << " criterion " << id << ": " << title;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    for (const auto& f : c.failures) std::cout << "; " << f;
    std::cout << std::endl;
}

// ---- 1 and 2: calibrated replication run ---------------------------------

json g_replication;

bool criterion_replication() {
    Check c;
    double seconds = 0;
    std::string detail;
    try {
        g_replication = replication_run("replication", 13931, "base34", c, seconds);
        if (c.ok()) {
            for (const auto& name : {"full", "topk:11", "concise"}) {
                const auto& v = variant_entry(g_replication, name);
                const double r2 = v.at("mean_r2"), e = v.at("mean_rmse");
                c.expect(within(r2, 0.27, 0.37), std::string(name) + " R2 " + fmt(r2) + " outside [0.27, 0.37]");
                c.expect(within(e, 17.8, 19.8), std::string(name) + " RMSE " + fmt(e) + " outside [17.8, 19.8]");
                detail += std::string(name) + " R2=" + fmt(r2) + " RMSE=" + fmt(e) + " rho_p15=" +
                          fmt(v.at("rho_personalized_15").get<double>()) + " rho_a15=" +
                          fmt(v.at("rho_average_15").get<double>()) + "; ";
            }
            for (const auto& v : g_replication.at("variants")) {
                const double pa = v.at("rho_average_15"), pp = v.at("rho_personalized_15");
                const std::string name = v.at("variant");
                c.expect(within(pa, 0.47, 0.55), name + " rho_average(15) " + fmt(pa) + " outside [0.47, 0.55]");
                c.expect(pp - pa >= 0.03, name + " rho gap " + fmt(pp - pa) + " below 0.03");
            }
            c.expect(seconds <= 600.0, "runtime " + fmt(seconds) + " s exceeds 600 s");
        }
    } catch (const std::exception& e) {
        c.expect(false, e.what());
    }
    detail += "runtime " + fmt(seconds) + " s";
    report(1, "calibrated replication run", c, detail);
    return c.ok();
}

bool criterion_margin_dominance() {
    Check c;
    try {
        c.expect(!g_replication.is_null(), "replication run unavailable");
        if (c.ok()) {
            for (const auto& v : g_replication.at("variants")) {
                const std::string name = v.at("variant");
                std::vector<double> margins;
                double prev_p = -1, prev_a = -1;
                for (const auto& row : v.at("pooled")) {
                    const double m = row.at("margin"), p = row.at("rho_personalized"), a = row.at("rho_average");
                    margins.push_back(m);
                    c.expect(p >= a, name + " personalized below average at margin " + fmt(m));
                    c.expect(p >= prev_p && a >= prev_a, name + " not monotone at margin " + fmt(m));
                    prev_p = p;
                    prev_a = a;
                }
                c.expect(margins == std::vector<double>{5, 10, 15, 20}, name + " margin grid differs");
            }
            // The per-variant CSVs carry the same sweep.
            for (const auto& stem : {"full", "topk_11", "concise"})
                c.expect(fs::exists(g_work / "replication" / "eval" / ("margin_sweep_" + std::string(stem) + ".csv")),
                         std::string("missing margin_sweep_") + stem + ".csv");
        }
    } catch (const std::exception& e) {
        c.expect(false, e.what());
    }
    report(2, "margin dominance and monotonicity", c, "");
    return c.ok();
}

// ---- 3: extended dictionary run ------------------------------------------

bool criterion_extended() {
    Check c;
    double seconds = 0;
    std::string detail;
    try {
        const auto rep = replication_run("extended", 4908, "extended46", c, seconds);
        if (c.ok()) {
            c.expect(rep.at("dict_edition") == "extended46", "edition is not extended46");
            const auto& rows = rep.at("comparison").at("rows");
            c.expect(rows.size() == 3, "comparison has " + std::to_string(rows.size()) + " rows");
            const std::map<std::string, std::size_t> widths = {{"full", 46}, {"topk:11", 11}, {"concise", 6}};
            for (const auto& row : rows) {
                const std::string name = row.at("variant");
                const auto it = widths.find(name);
                c.expect(it != widths.end(), "unexpected row " + name);
                if (it != widths.end())
                    c.expect(row.at("n_variables") == it->second, name + " has " + row.at("n_variables").dump() + " variables");
                detail += name + " R2=" + fmt(row.at("r2").get<double>()) + "; ";
            }
            const auto& concise = variant_entry(rep, "concise").at("features");
            std::vector<std::string> ids(std::begin(kConciseIds), std::end(kConciseIds));
            c.expect(concise.get<std::vector<std::string>>() == ids, "concise row does not hold the six ids");
            const auto csv = slurp(g_work / "extended" / "eval" / "report.csv");
            c.expect(std::count(csv.begin(), csv.end(), '\n') == 4, "report.csv is not header plus three rows");
        }
    } catch (const std::exception& e) {
        c.expect(false, e.what());
    }
    detail += "runtime " + fmt(seconds) + " s";
    report(3, "extended dictionary run", c, detail);
    return c.ok();
}

// ---- 4: oracle equivalence -----------------------------------------------

bool criterion_oracle() {
    Check c;
    Rng rng(derive_seed(2024, {stream_tag("acceptance-oracle")}));
    std::size_t splits = 0;
    for (int i = 0; i < 100; ++i) {
        const auto in = fixtures::random_instance(rng, 30, 5, 2);
        const auto tree = fit_tree(in.matrix(), in.y, fixtures::exact_hyper(in), 0);
        splits += tree.nodes.size() / 2;
        const auto diff = fixtures::compare(tree, fixtures::oracle_fit(in));
        c.expect(diff.empty(), "instance " + std::to_string(i) + ": " + diff);
    }
    report(4, "oracle equivalence", c, "100 instances, " + std::to_string(splits) + " splits");
    return c.ok();
}

// ---- 5: determinism --------------------------------------------------------

/// Files under `p` (or `p` itself) keyed by path relative to `root`.
std::map<std::string, std::string> snapshot(const std::vector<fs::path>& paths, const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            for (const auto& e : fs::recursive_directory_iterator(p))
                if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
        } else if (fs::exists(p)) {
            out[fs::relative(p, root).string()] = slurp(p);
        }
    }
    return out;
}

/// Runs `args`, snapshots `artifacts`, deletes them and reruns from a copy of
/// `manifest` (with `extra` flags), then compares bytes. An empty manifest
/// reruns `args` verbatim.
void replay_matches(Check& c, const std::string& name, const std::string& args, const fs::path& manifest,
                    const std::string& extra, const std::vector<fs::path>& artifacts, const fs::path& root) {
    const auto out1 = root / (name + ".1.stdout"), out2 = root / (name + ".2.stdout");
    int rc = glad_cli(args, out1);
    c.expect(rc == 0, name + " exited " + std::to_string(rc));
    const auto first = snapshot(artifacts, root);
    std::string replay = args;
    if (!manifest.empty()) {
        const auto copy = root / "replay" / (name + ".json");
        fs::create_directories(copy.parent_path());
        fs::copy_file(manifest, copy, fs::copy_options::overwrite_existing);
        const auto command = args.substr(0, args.find(' '));
        replay = command + " --config " + quote(copy.string()) + extra;
    }
    for (const auto& p : artifacts) fs::remove_all(p);
    rc = glad_cli(replay, out2);
    c.expect(rc == 0, name + " replay exited " + std::to_string(rc));
    const auto second = snapshot(artifacts, root);
    c.expect(artifacts.empty() || !first.empty(), name + " wrote no artifacts");
    c.expect(first == second, name + " artifacts differ between runs");
    c.expect(slurp(out1) == slurp(out2), name + " stdout differs between runs");
}

bool criterion_determinism() {
    Check c;
    const auto root = g_work / "determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const auto q = [&](const std::string& f) { return quote((root / f).string()); };
    std::size_t files = 0;
    try {
        const std::string fit = " --trees 12 --depth 6 --folds 3";
        replay_matches(c, "synth", "synth --n 600 --seed 9 --out " + q("cohort.csv"),
                       root / "cohort.csv.manifest.json", "",
                       {root / "cohort.csv", root / "cohort.csv.manifest.json"}, root);
        // Replays keep the data paths; only thread counts change.
        replay_matches(c, "importance",
                       "importance --data " + q("cohort.csv") + fit + " --threads 1 --out " + q("importance.csv"),
                       root / "importance.csv.manifest.json", " --threads 4",
                       {root / "importance.csv", root / "importance.csv.manifest.json"}, root);
        replay_matches(c, "evaluate",
                       "evaluate --data " + q("cohort.csv") + fit + " --threads 1 --out " + q("eval"),
                       root / "eval" / "manifest.json", " --threads 3", {root / "eval"}, root);
        replay_matches(c, "evaluate-holdout",
                       "evaluate --data " + q("cohort.csv") + fit +
                           " --mode holdout --importance-mode full --threads 2 --out " + q("holdout"),
                       root / "holdout" / "manifest.json", " --threads 1", {root / "holdout"}, root);
        replay_matches(c, "train",
                       "train --data " + q("cohort.csv") + fit + " --threads 1 --out " + q("model.glad-model.json"),
                       root / "model.glad-model.json.manifest.json", " --threads 4",
                       {root / "model.glad-model.json", root / "model.glad-model.json.manifest.json"}, root);
        replay_matches(c, "predict",
                       "predict --model " + q("model.glad-model.json") + " --input " + q("cohort.csv") +
                           " --margin 12",
                       {}, "", {}, root);
        files = snapshot({root}, root).size();
    } catch (const std::exception& e) {
        c.expect(false, e.what());
    }
    report(5, "determinism across reruns and thread counts", c,
           "six runs replayed from their manifests, " + std::to_string(files) + " files");
    return c.ok();
}

// ---- 6: metric identities --------------------------------------------------

bool criterion_identities() {
    Check c;
    const auto cohort = fixtures::small_cohort(3000, 17);
    const auto& y = cohort.outcomes;

    // Average-model certainty is the plain empirical fraction.
    const double mu = mean_model(y).mu;
    for (double margin : {0.5, 5.0, 10.0, 15.0, 20.0, 37.0}) {
        std::size_t hits = 0;
        for (double v : y) hits += std::abs(v - mu) <= margin ? 1 : 0;
        const double expected = static_cast<double>(hits) / static_cast<double>(y.size());
        c.expect(rho(y, mu, margin) == expected, "average-model rho differs at margin " + fmt(margin));
        const std::vector<double> flat(y.size(), mu);
        c.expect(rho(y, flat, margin) == expected, "vector rho differs at margin " + fmt(margin));
    }

    // A residual of exactly the margin is inside.
    c.expect(indicator_within(30.0, 15.0, 15.0) == 1, "boundary residual counted outside");
    c.expect(indicator_within(0.0, 15.0, 15.0) == 1, "negative boundary residual counted outside");
    c.expect(indicator_within(30.5, 15.0, 15.0) == 0, "residual beyond the margin counted inside");
    const std::vector<double> yt = {10, 20, 35}, yp = {25, 5, 35};
    c.expect(rho(yt, yp, 15.0) == 1.0, "boundary rows not all inside");

    // Importances and prediction bounds on forests of both editions.
    Rng rng(derive_seed(5, {stream_tag("acceptance-identities")}));
    for (Edition ed : {Edition::base34, Edition::extended46}) {
        const auto data = fixtures::small_cohort(800, 3, ed);
        const auto& dict = builtin_dictionary(ed);
        Hyperparams h;
        h.n_trees = 20;
        const auto model = fit_forest(data, dict.predictor_ids(), h, {});
        double total = 0;
        for (double v : model.importances) {
            c.expect(v >= 0, "negative importance");
            total += v;
        }
        c.expect(std::abs(total - 1.0) <= 1e-9, "importances sum to " + fmt(total));
        const auto lo = *std::min_element(data.outcomes.begin(), data.outcomes.end());
        const auto hi = *std::max_element(data.outcomes.begin(), data.outcomes.end());
        for (int i = 0; i < 500; ++i) {
            std::vector<double> x(model.layout.width());
            for (auto& v : x) v = (rng.uniform() - 0.5) * 1e4;
            const double p = predict(model, x);
            c.expect(p >= lo && p <= hi, "prediction " + fmt(p) + " outside the training range");
        }
    }

    // Strictly increasing transforms of the features keep every prediction.
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 40 + rng.uniform_index(60), p = 1 + rng.uniform_index(5);
        Matrix x(n, p), xt(n, p);
        std::vector<double> yy(n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t col = 0; col < p; ++col) {
                x(r, col) = std::round(rng.uniform() * 30.0) / 3.0;
                xt(r, col) = col % 2 ? std::exp(x(r, col) / 4.0) : std::pow(x(r, col) + 1.0, 3.0) - 7.0;
            }
            yy[r] = 2.0 * x(r, 0) - x(r, p - 1) + rng.normal();
        }
        FeatureLayout layout;
        for (std::size_t col = 0; col < p; ++col) layout.append("f" + std::to_string(col), 1);
        Hyperparams h;
        h.n_trees = 10;
        h.max_depth = 5;
        h.seed = static_cast<std::uint64_t>(trial);
        h.bootstrap = false;
        if (p > 1) h.mtry = p - 1;
        const auto a = fit_forest(x, yy, layout, h);
        const auto b = fit_forest(xt, yy, layout, h);
        bool same = true;
        for (std::size_t r = 0; r < n; ++r) same = same && predict(a, x.row(r)) == predict(b, xt.row(r));
        c.expect(same, "transform changed predictions on dataset " + std::to_string(trial));
    }
    report(6, "metric identities", c, "");
    return c.ok();
}

// ---- 7: selection ------------------------------------------------------------

Ranking ranking_of(const std::vector<double>& values) {
    Ranking r;
    for (std::size_t i = 0; i < values.size(); ++i) r.emplace_back("v" + std::to_string(i), values[i]);
    return r;
}

bool criterion_selection() {
    Check c;
    try {
        const auto k = elbow_suggest(ranking_of({0.4, 0.3, 0.2, 0.04, 0.03, 0.02, 0.01}));
        c.expect(k == 3, "elbow suggests " + std::to_string(k));

        const std::vector<std::string> six(std::begin(kConciseIds), std::end(kConciseIds));
        Rng rng(derive_seed(11, {stream_tag("acceptance-selection")}));
        for (Edition ed : {Edition::base34, Edition::extended46}) {
            const auto& dict = builtin_dictionary(ed);
            for (int trial = 0; trial < 5; ++trial) {
                std::map<std::string, double> imp;
                for (const auto& id : dict.predictor_ids())
                    imp[id] = trial == 0 ? 1.0 : static_cast<double>(rng.uniform_index(8));
                const auto ranking = rank(imp, dict);
                const std::size_t p = ranking.size();
                c.expect(p == dict.predictor_ids().size(), "ranking size differs from the dictionary");
                std::vector<std::string> prev;
                for (std::size_t kk = 1; kk <= p; ++kk) {
                    const auto ids = variant_features(ModelVariant::topk(kk), ranking, dict);
                    c.expect(ids.size() == kk && std::equal(prev.begin(), prev.end(), ids.begin()),
                             "topk prefix property fails at k=" + std::to_string(kk));
                    prev = ids;
                }
                c.expect(variant_features(ModelVariant::concise(), ranking, dict) == six,
                         "concise differs for a ranking");
            }
            c.expect(variant_features(ModelVariant::concise(), {}, dict) == six, "concise differs without a ranking");
        }
    } catch (const std::exception& e) {
        c.expect(false, e.what());
    }
    report(7, "selection", c, "");
    return c.ok();
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: glad_acceptance <glad binary> <work dir>\n";
        return 2;
    }
    g_binary = fs::absolute(argv[1]);
    g_work = fs::absolute(argv[2]);
    fs::remove_all(g_work);
    fs::create_directories(g_work);

    bool ok = true;
    ok &= criterion_replication();
    ok &= criterion_margin_dominance();
    ok &= criterion_extended();
    ok &= criterion_oracle();
    ok &= criterion_determinism();
    ok &= criterion_identities();
    ok &= criterion_selection();
    std::cout << (ok ? "acceptance: all criteria pass" : "acceptance: failures above") << std::endl;
    return ok ? 0 : 1;
}
