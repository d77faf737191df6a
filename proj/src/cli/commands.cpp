#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "glad/cli.hpp"
#include "glad/cohort.hpp"
#include "glad/errors.hpp"
#include "glad/evaluation.hpp"
#include "glad/manifest.hpp"
#include "glad/modelstore.hpp"
#include "glad/selection.hpp"
#include "glad/service.hpp"
#include "glad/text.hpp"
#include "json_config.hpp"

namespace glad::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = GLAD_VERSION;

void write_file(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << bytes;
    if (!out) throw IoError("write failed for " + path.string());
}

fs::path sidecar(const fs::path& artifact) { return fs::path(artifact.string() + ".manifest.json"); }

struct HyperFlags {
    std::size_t trees = 100;
    std::size_t depth = 10;
    std::uint64_t seed = 42;
    std::size_t min_leaf = 1;
    std::size_t mtry = 0;
    bool bootstrap = true;

    void add(CLI::App& app) {
        app.add_option("--trees", trees, "Trees per forest")->capture_default_str()->check(CLI::PositiveNumber);
        app.add_option("--depth", depth, "Maximum tree depth")->capture_default_str()->check(CLI::PositiveNumber);
        app.add_option("--seed", seed, "Seed for every random stream")->capture_default_str();
        app.add_option("--min-leaf", min_leaf, "Minimum samples per leaf")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        app.add_option("--mtry", mtry, "Features drawn per node (0: all)")->capture_default_str();
        app.add_option("--bootstrap", bootstrap, "Bootstrap rows per tree")->capture_default_str();
    }
    Hyperparams resolve() const {
        Hyperparams h;
        h.n_trees = trees;
        h.max_depth = depth;
        h.seed = seed;
        h.min_samples_leaf = min_leaf;
        if (mtry > 0) h.mtry = mtry;
        h.bootstrap = bootstrap;
        return h;
    }
    void record(json& config) const {
        config["trees"] = trees;
        config["depth"] = depth;
        config["seed"] = seed;
        config["min-leaf"] = min_leaf;
        config["mtry"] = mtry;
        config["bootstrap"] = bootstrap;
    }
};

struct DataFlags {
    std::string data;
    std::string edition = "auto";

    void add(CLI::App& app) {
        app.add_option("--data", data, "Cohort CSV")->required()->check(CLI::ExistingFile);
        app.add_option("--edition", edition, "Dictionary edition")
            ->capture_default_str()
            ->check(CLI::IsMember({"auto", "base34", "extended46"}));
    }
    void record(json& config) const {
        config["data"] = data;
        config["edition"] = edition;
    }
};

struct LoadedData {
    const DataDictionary* dict = nullptr;
    Cohort cohort;
    ExclusionReport exclusions;
};

LoadedData load_data(const DataFlags& flags, std::ostream& err) {
    Edition edition = Edition::base34;
    if (flags.edition == "auto") edition = detect_edition(flags.data).value_or(Edition::base34);
    else edition = parse_edition(flags.edition);
    LoadedData d;
    d.dict = &builtin_dictionary(edition);
    const auto records = load_csv(*d.dict, flags.data);
    auto [cohort, report] = apply_exclusions(*d.dict, records);
    d.cohort = std::move(cohort);
    d.exclusions = std::move(report);
    err << "loaded " << d.exclusions.total_in << " records (" << to_string(edition) << "), "
        << d.exclusions.included << " included\n";
    return d;
}

enum class ImportanceMode { folds, full };

ImportanceMode parse_importance_mode(const std::string& s) {
    if (s == "folds") return ImportanceMode::folds;
    if (s == "full") return ImportanceMode::full;
    throw ArgumentError("unknown importance mode '" + s + "'");
}

struct SplitPlan {
    EvalMode mode = EvalMode::cv;
    FoldPlan folds;
    HoldoutSplit holdout;
};

SplitPlan make_split(EvalMode mode, std::size_t n, std::size_t k, double test_fraction, std::uint64_t seed) {
    SplitPlan s;
    s.mode = mode;
    if (mode == EvalMode::cv) s.folds = kfold_plan(n, k, seed);
    else s.holdout = holdout_split(n, test_fraction, seed);
    return s;
}

EvalReport run_variant(const Cohort& cohort, const ModelVariant& v, const std::vector<std::string>& features,
                       const Hyperparams& hyper, const SplitPlan& split, const EvalOptions& opts) {
    if (split.mode == EvalMode::cv) return cross_validate(cohort, v, features, hyper, split.folds, opts);
    return holdout_evaluate(cohort, v, features, hyper, split.holdout, opts);
}

/// Ranking over all predictors. In folds mode it comes from the held-out
/// runs of the full variant (reusing `full_report` when given).
Ranking compute_ranking(const LoadedData& d, const Hyperparams& hyper, const SplitPlan& split,
                        ImportanceMode mode, const EvalOptions& opts, const EvalReport* full_report) {
    if (mode == ImportanceMode::full) {
        auto ids = d.dict->predictor_ids();
        return rank(importances(fit_forest(d.cohort, ids, hyper, opts.fit)), *d.dict);
    }
    if (full_report != nullptr) return rank(full_report->importances, *d.dict);
    const auto report = run_variant(d.cohort, ModelVariant::full(), d.dict->predictor_ids(), hyper, split, opts);
    return rank(report.importances, *d.dict);
}

std::string sanitize(std::string s) {
    for (auto& c : s)
        if (c == ':') c = '_';
    return s;
}

// ---- synth -------------------------------------------------------------

struct SynthCmd {
    std::size_t n = 0;
    std::uint64_t seed = 42;
    double r2 = 0.32;
    double outcome_mean = 14.06;
    double outcome_sd = 22.75;
    std::string edition = "base34";
    std::string out;

    void add(CLI::App& app) {
        app.add_option("--n", n, "Rows to generate")->required()->check(CLI::PositiveNumber);
        app.add_option("--seed", seed, "Seed")->capture_default_str();
        app.add_option("--r2", r2, "Target share of explained outcome variance")->capture_default_str();
        app.add_option("--outcome-mean", outcome_mean, "Target outcome mean")->capture_default_str();
        app.add_option("--outcome-sd", outcome_sd, "Target outcome SD")->capture_default_str();
        app.add_option("--edition", edition, "Dictionary edition")
            ->capture_default_str()
            ->check(CLI::IsMember({"base34", "extended46"}));
        app.add_option("--out", out, "Output CSV")->required();
    }

    int run(std::ostream& out_stream, std::ostream& err) const {
        const auto& dict = builtin_dictionary(parse_edition(edition));
        const auto config = calibrate_signal(dict, {r2, outcome_sd, outcome_mean});
        const auto records = synthetic_records(config, n, seed);
        std::ostringstream csv;
        write_csv(dict, records, csv);
        write_file(out, csv.str());

        RunManifest m;
        m.command = "synth";
        m.tool_version = kVersion;
        m.config = {{"n", n},
                    {"seed", seed},
                    {"r2", r2},
                    {"outcome-mean", outcome_mean},
                    {"outcome-sd", outcome_sd},
                    {"edition", edition},
                    {"out", out}};
        m.add_output(fs::path(out).filename().string(), csv.str());
        m.save(sidecar(out));
        err << "wrote " << n << " synthetic records to " << out << '\n';
        out_stream << json{{"rows", n}, {"out", out}, {"calibration", config.to_json()}}.dump() << '\n';
        return 0;
    }
};

// ---- evaluate -------------------------------------------------------------

struct EvaluateCmd {
    DataFlags data;
    HyperFlags hyper;
    std::vector<std::string> variants{"full", "topk:11", "concise"};
    std::size_t folds = 10;
    std::vector<double> margins = kDefaultMargins;
    std::string mode = "cv";
    double test_fraction = 0.2;
    std::string importance_mode = "folds";
    std::string out;
    unsigned threads = 0;

    void add(CLI::App& app) {
        data.add(app);
        hyper.add(app);
        app.add_option("--variants", variants, "Comma-separated: full, topk:K, concise")
            ->delimiter(',')
            ->capture_default_str();
        app.add_option("--folds", folds, "Cross-validation folds")->capture_default_str()->check(CLI::Range(2, 1000000));
        app.add_option("--margins", margins, "Comma-separated margin grid")->delimiter(',')->capture_default_str();
        app.add_option("--mode", mode, "cv or holdout")->capture_default_str()->check(CLI::IsMember({"cv", "holdout"}));
        app.add_option("--test-fraction", test_fraction, "Holdout share")->capture_default_str();
        app.add_option("--importance-mode", importance_mode, "folds or full")
            ->capture_default_str()
            ->check(CLI::IsMember({"folds", "full"}));
        app.add_option("--out", out, "Output directory")->required();
        app.add_option("--threads", threads, "Worker threads (0: all cores); never changes results")
            ->configurable(false);
    }

    int run(std::ostream& out_stream, std::ostream& err) const {
        std::vector<ModelVariant> parsed;
        for (const auto& v : variants) parsed.push_back(ModelVariant::parse(v));
        if (parsed.empty()) throw ArgumentError("no variants requested");
        check_margins(margins);
        const auto h = hyper.resolve();
        const auto d = load_data(data, err);
        const auto split = make_split(parse_eval_mode(mode), d.cohort.size(), folds, test_fraction, h.seed);
        EvalOptions opts;
        opts.margins = margins;
        opts.fit.threads = threads;

        // The full variant runs first so its importances can rank topk variants.
        std::vector<std::optional<EvalReport>> reports(parsed.size());
        std::optional<Ranking> ranking;
        const EvalReport* full_report = nullptr;
        for (std::size_t i = 0; i < parsed.size(); ++i) {
            if (parsed[i] != ModelVariant::full()) continue;
            err << "evaluating full\n";
            reports[i] = run_variant(d.cohort, parsed[i], d.dict->predictor_ids(), h, split, opts);
            full_report = &*reports[i];
            break;
        }
        const bool needs_ranking = std::any_of(parsed.begin(), parsed.end(), [](const ModelVariant& v) {
            return v.kind() == ModelVariant::Kind::topk;
        });
        if (needs_ranking || full_report != nullptr)
            ranking = compute_ranking(d, h, split, parse_importance_mode(importance_mode), opts, full_report);
        for (std::size_t i = 0; i < parsed.size(); ++i) {
            if (reports[i]) continue;
            err << "evaluating " << parsed[i].to_string() << '\n';
            const auto features = variant_features(parsed[i], ranking.value_or(Ranking{}), *d.dict);
            reports[i] = run_variant(d.cohort, parsed[i], features, h, split, opts);
        }
        std::vector<EvalReport> done;
        for (auto& r : reports) done.push_back(std::move(*r));
        const auto table = comparison_report(done);

        const fs::path dir(out);
        fs::create_directories(dir);
        RunManifest m;
        m.command = "evaluate";
        m.tool_version = kVersion;
        data.record(m.config);
        hyper.record(m.config);
        m.config["variants"] = variants;
        m.config["folds"] = folds;
        m.config["margins"] = margins;
        m.config["mode"] = mode;
        m.config["test-fraction"] = test_fraction;
        m.config["importance-mode"] = importance_mode;
        m.config["out"] = out;
        m.add_input("data", data.data);

        auto emit = [&](const std::string& name, const std::string& bytes) {
            write_file(dir / name, bytes);
            m.add_output(name, bytes);
        };
        json report = {{"comparison", table.to_json()},
                       {"exclusions", d.exclusions.to_json()},
                       {"dict_edition", std::string(to_string(d.dict->edition()))},
                       {"dict_hash", d.dict->content_hash()}};
        report["variants"] = json::array();
        for (const auto& r : done) report["variants"].push_back(r.to_json());
        if (ranking) {
            auto arr = json::array();
            for (const auto& [id, v] : *ranking) arr.push_back({{"variable_id", id}, {"importance", v}});
            report["ranking"] = arr;
            report["importance_mode"] = importance_mode;
        }
        emit("report.json", report.dump(2) + "\n");
        std::ostringstream csv;
        write_report_csv(table, csv);
        emit("report.csv", csv.str());

        // margin_sweep.csv holds the concise variant when present, else the first.
        std::size_t headline = 0;
        for (std::size_t i = 0; i < done.size(); ++i)
            if (done[i].variant == ModelVariant::concise()) headline = i;
        for (std::size_t i = 0; i < done.size(); ++i) {
            std::ostringstream sweep;
            write_margin_csv(done[i].pooled, sweep);
            emit("margin_sweep_" + sanitize(done[i].variant.to_string()) + ".csv", sweep.str());
            if (i == headline) emit("margin_sweep.csv", sweep.str());
        }
        if (ranking) {
            std::ostringstream imp;
            write_importance_csv(*ranking, imp);
            emit("importance.csv", imp.str());
        }
        m.save(dir / "manifest.json");
        out_stream << csv.str();
        return 0;
    }
};

// ---- importance -------------------------------------------------------------

struct ImportanceCmd {
    DataFlags data;
    HyperFlags hyper;
    std::size_t folds = 10;
    std::string importance_mode = "folds";
    std::string out;
    unsigned threads = 0;

    void add(CLI::App& app) {
        data.add(app);
        hyper.add(app);
        app.add_option("--folds", folds, "Folds for fold-averaged importance")
            ->capture_default_str()
            ->check(CLI::Range(2, 1000000));
        app.add_option("--importance-mode", importance_mode, "folds or full")
            ->capture_default_str()
            ->check(CLI::IsMember({"folds", "full"}));
        app.add_option("--out", out, "Output importance CSV")->required();
        app.add_option("--threads", threads, "Worker threads (0: all cores); never changes results")
            ->configurable(false);
    }

    int run(std::ostream& out_stream, std::ostream& err) const {
        const auto h = hyper.resolve();
        const auto d = load_data(data, err);
        const auto mode = parse_importance_mode(importance_mode);
        EvalOptions opts;
        opts.fit.threads = threads;
        SplitPlan split;
        if (mode == ImportanceMode::folds) split = make_split(EvalMode::cv, d.cohort.size(), folds, 0.2, h.seed);
        const auto ranking = compute_ranking(d, h, split, mode, opts, nullptr);
        std::ostringstream csv;
        write_importance_csv(ranking, csv);
        write_file(out, csv.str());

        RunManifest m;
        m.command = "importance";
        m.tool_version = kVersion;
        data.record(m.config);
        hyper.record(m.config);
        m.config["folds"] = folds;
        m.config["importance-mode"] = importance_mode;
        m.config["out"] = out;
        m.add_input("data", data.data);
        m.add_output(fs::path(out).filename().string(), csv.str());
        m.save(sidecar(out));

        const auto k = elbow_suggest(ranking);
        std::vector<std::string> keep;
        for (std::size_t i = 0; i < k; ++i) keep.push_back(ranking[i].first);
        out_stream << json{{"elbow_k", k}, {"suggested_variables", keep}, {"out", out}}.dump() << '\n';
        return 0;
    }
};

// ---- train -------------------------------------------------------------

struct TrainCmd {
    DataFlags data;
    HyperFlags hyper;
    std::string variant = "concise";
    std::size_t folds = 10;
    std::vector<double> margins = kDefaultMargins;
    std::string importance_mode = "folds";
    std::string out;
    unsigned threads = 0;

    void add(CLI::App& app) {
        data.add(app);
        hyper.add(app);
        app.add_option("--variant", variant, "full, topk:K or concise")->capture_default_str();
        app.add_option("--folds", folds, "Folds for the certainty table")
            ->capture_default_str()
            ->check(CLI::Range(2, 1000000));
        app.add_option("--margins", margins, "Comma-separated certainty margins")
            ->delimiter(',')
            ->capture_default_str();
        app.add_option("--importance-mode", importance_mode, "Ranking source for topk: folds or full")
            ->capture_default_str()
            ->check(CLI::IsMember({"folds", "full"}));
        app.add_option("--out", out, "Output bundle (*.glad-model.json)")->required();
        app.add_option("--threads", threads, "Worker threads (0: all cores); never changes results")
            ->configurable(false);
    }

    int run(std::ostream& out_stream, std::ostream& err) const {
        const auto v = ModelVariant::parse(variant);
        check_margins(margins);
        const auto h = hyper.resolve();
        const auto d = load_data(data, err);
        const auto split = make_split(EvalMode::cv, d.cohort.size(), folds, 0.2, h.seed);
        EvalOptions opts;
        opts.margins = margins;
        opts.fit.threads = threads;

        Ranking ranking;
        if (v.kind() == ModelVariant::Kind::topk)
            ranking = compute_ranking(d, h, split, parse_importance_mode(importance_mode), opts, nullptr);
        const auto features = variant_features(v, ranking, *d.dict);
        err << "cross-validating " << v.to_string() << " for the certainty table\n";
        const auto report = run_variant(d.cohort, v, features, h, split, opts);

        ModelBundle b;
        b.dict_edition = d.dict->edition();
        b.dict_hash = d.dict->content_hash();
        b.variant = v;
        b.features = features;
        for (const auto& row : report.pooled) {
            b.certainty[row.margin] = row.rho_personalized;
            b.certainty_average[row.margin] = row.rho_average;
        }
        b.certainty.emplace(kHeadlineMargin, report.rho_personalized_15);
        b.certainty_average.emplace(kHeadlineMargin, report.rho_average_15);
        b.cv_rmse = report.mean_rmse;
        b.cv_r2 = report.mean_r2;
        b.cv_folds = folds;
        b.training_digest = d.cohort.digest();
        err << "fitting " << v.to_string() << " on all " << d.cohort.size() << " rows\n";
        b.forest = fit_forest(d.cohort, features, h, opts.fit);
        const auto text = serialize_bundle(b);
        write_file(out, text);

        RunManifest m;
        m.command = "train";
        m.tool_version = kVersion;
        data.record(m.config);
        hyper.record(m.config);
        m.config["variant"] = variant;
        m.config["folds"] = folds;
        m.config["margins"] = margins;
        m.config["importance-mode"] = importance_mode;
        m.config["out"] = out;
        m.add_input("data", data.data);
        m.add_output(fs::path(out).filename().string(), text);
        m.save(sidecar(out));
        out_stream << json{{"out", out},
                           {"variant", v.to_string()},
                           {"features", features},
                           {"cv_rmse", report.mean_rmse},
                           {"cv_r2", report.mean_r2},
                           {"certainty_15", b.certainty.at(kHeadlineMargin)}}
                          .dump()
                   << '\n';
        return 0;
    }
};

// ---- predict -------------------------------------------------------------

PatientRecord record_from_json(const json& j, const DataDictionary& dict) {
    if (!j.is_object()) throw ValidationError("each input record must be a JSON object");
    PatientRecord rec;
    rec.record_id = "input";
    for (const auto& [key, v] : j.items()) {
        if (v.is_null()) continue;
        if (dict.find(key) == nullptr) continue;
        if (v.is_number()) rec.values.emplace(key, v.get<double>());
        else if (v.is_boolean()) rec.values.emplace(key, v.get<bool>());
        else if (v.is_string()) rec.values.emplace(key, parse_cell(*dict.find(key), v.get<std::string>()));
        else rec.values.emplace(key, v.dump());
    }
    return rec;
}

std::vector<PatientRecord> records_from_csv(std::istream& in, const DataDictionary& dict) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("input CSV is empty");
    const auto header = split_csv_line(line);
    std::vector<std::string> unknown;
    for (const auto& h : header)
        if (dict.find(h) == nullptr && h != dict.outcome().id && h != kColJoint && h != kColStartDate &&
            h != kColFollowup)
            unknown.push_back(h);
    if (!unknown.empty()) throw HeaderMismatch({}, unknown);
    std::vector<PatientRecord> out;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_csv_line(line);
        cells.resize(header.size());
        PatientRecord rec;
        rec.record_id = "row-" + std::to_string(out.size() + 1);
        for (std::size_t c = 0; c < header.size(); ++c) {
            const auto* spec = dict.find(header[c]);
            if (spec == nullptr || cells[c].find_first_not_of(" \t\r") == std::string::npos) continue;
            rec.values.emplace(header[c], parse_cell(*spec, cells[c]));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

struct PredictCmd {
    std::string model;
    std::string input;
    double margin = kHeadlineMargin;

    void add(CLI::App& app) {
        app.add_option("--model", model, "Model bundle")->required()->check(CLI::ExistingFile);
        app.add_option("--input", input, "Record as JSON (object or array) or CSV with a header")
            ->required()
            ->check(CLI::ExistingFile);
        app.add_option("--margin", margin, "Margin in VAS points")->capture_default_str();
    }

    int run(std::ostream& out_stream, std::ostream&) const {
        const auto bundle = load_bundle(model);
        const auto& dict = *dictionary_by_hash(bundle.dict_hash);
        std::ifstream in(input, std::ios::binary);
        if (!in) throw IoError("cannot open " + input);
        std::ostringstream buf;
        buf << in.rdbuf();
        const auto text = buf.str();
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
            json j = json::parse(text, nullptr, false);
            if (j.is_discarded()) throw ValidationError("input is not valid JSON");
            if (j.is_object()) {
                out_stream << predict_record(bundle, record_from_json(j, dict), margin).to_json().dump() << '\n';
                return 0;
            }
            json arr = json::array();
            for (const auto& item : j) arr.push_back(predict_record(bundle, record_from_json(item, dict), margin).to_json());
            out_stream << arr.dump() << '\n';
            return 0;
        }
        std::istringstream csv(text);
        json arr = json::array();
        for (const auto& rec : records_from_csv(csv, dict)) arr.push_back(predict_record(bundle, rec, margin).to_json());
        out_stream << arr.dump() << '\n';
        return 0;
    }
};

// ---- serve -------------------------------------------------------------

std::atomic<HttpServer*> g_server{nullptr};

extern "C" void on_signal(int) {
    if (auto* s = g_server.load()) s->stop();
}

struct ServeCmd {
    std::string model;
    std::string addr = "127.0.0.1:8080";
    std::string static_dir;
    std::string cors_origin = "*";

    void add(CLI::App& app) {
        app.add_option("--model", model, "Concise model bundle")->required()->check(CLI::ExistingFile);
        app.add_option("--addr", addr, "host:port (port 0 picks a free port)")->capture_default_str();
        app.add_option("--static", static_dir, "Directory served at /")->check(CLI::ExistingDirectory);
        app.add_option("--cors-origin", cors_origin, "Access-Control-Allow-Origin value")->capture_default_str();
    }

    int run(std::ostream& out_stream, std::ostream& err) const {
        const auto colon = addr.rfind(':');
        if (colon == std::string::npos) throw ArgumentError("--addr must be host:port");
        const auto port = parse_number(addr.substr(colon + 1));
        if (!port || *port < 0 || *port > 65535 || *port != static_cast<int>(*port))
            throw ArgumentError("--addr has an invalid port");
        auto bundle = std::make_shared<const ModelBundle>(load_bundle(model));
        PredictionService service(bundle);
        ServeOptions opts;
        opts.host = addr.substr(0, colon);
        opts.port = static_cast<int>(*port);
        opts.cors_origin = cors_origin;
        if (!static_dir.empty()) opts.static_dir = static_dir;
        opts.log = &err;
        HttpServer server(service, opts);
        const int bound = server.bind();
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        out_stream << "listening on " << opts.host << ':' << bound << std::endl;
        server.run();
        g_server = nullptr;
        return 0;
    }
};

int report_error(std::ostream& err, const std::exception& e, int code) {
    err << "error: " << e.what() << '\n';
    if (const auto* v = dynamic_cast<const ValidationError*>(&e); v && !v->fields().empty()) {
        err << "fields:";
        for (const auto& f : v->fields()) err << ' ' << f;
        err << '\n';
    }
    return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Personalized knee-pain change prediction with random forests", "glad"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    // --config lives on the root and may follow the subcommand name.
    app.fallthrough();
    app.set_config("--config", "", "JSON file with flag values (a run manifest works too)");
    app.config_formatter(std::make_shared<JsonConfig>(&app));

    SynthCmd synth;
    EvaluateCmd evaluate;
    ImportanceCmd importance;
    TrainCmd train;
    PredictCmd predict;
    ServeCmd serve;
    auto* s_synth = app.add_subcommand("synth", "Generate a calibrated synthetic cohort CSV");
    auto* s_train = app.add_subcommand("train", "Fit a model variant and write a bundle");
    auto* s_eval = app.add_subcommand("evaluate", "Cross-validate variants against the average model");
    auto* s_imp = app.add_subcommand("importance", "Rank variables and suggest an elbow cut");
    auto* s_pred = app.add_subcommand("predict", "Predict from a bundle for records in a file");
    auto* s_serve = app.add_subcommand("serve", "Run the HTTP prediction service");
    synth.add(*s_synth);
    train.add(*s_train);
    evaluate.add(*s_eval);
    importance.add(*s_imp);
    predict.add(*s_pred);
    serve.add(*s_serve);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version requests carry exit code 0.
        const bool ok = e.get_exit_code() == 0;
        app.exit(e, out, err);
        return ok ? 0 : 2;
    }

    try {
        if (s_synth->parsed()) return synth.run(out, err);
        if (s_train->parsed()) return train.run(out, err);
        if (s_eval->parsed()) return evaluate.run(out, err);
        if (s_imp->parsed()) return importance.run(out, err);
        if (s_pred->parsed()) return predict.run(out, err);
        if (s_serve->parsed()) return serve.run(out, err);
    } catch (const InputError& e) {
        return report_error(err, e, 2);
    } catch (const std::exception& e) {
        return report_error(err, e, 1);
    }
    return 2;
}

}  // namespace glad::cli
