#include "glad/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "glad/digest.hpp"
#include "glad/errors.hpp"
#include "glad/random.hpp"
#include "glad/text.hpp"

namespace glad {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.empty() || a.size() != b.size())
        throw LengthMismatch(std::string(what) + ": inputs must have equal nonzero length (got " +
                             std::to_string(a.size()) + " and " + std::to_string(b.size()) + ")");
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

AverageModel mean_model(std::span<const double> y_train) {
    if (y_train.empty()) throw EmptyTraining("average model needs at least one training outcome");
    return AverageModel{mean_of(y_train)};
}

double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
    check_lengths(y_true, y_pred, "rmse");
    double ss = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) ss += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    return std::sqrt(ss / static_cast<double>(y_true.size()));
}

double r_squared(std::span<const double> y_true, std::span<const double> y_pred) {
    check_lengths(y_true, y_pred, "r_squared");
    const double m = mean_of(y_true);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
        ss_tot += (y_true[i] - m) * (y_true[i] - m);
    }
    if (!(ss_tot > 0.0)) throw ZeroVariance("r_squared: evaluated outcomes have zero variance");
    return 1.0 - ss_res / ss_tot;
}

int indicator_within(double y_true, double pred, double margin) {
    if (!(margin > 0.0)) throw ArgumentError("margin must be > 0");
    return (y_true - margin <= pred && pred <= y_true + margin) ? 1 : 0;
}

double rho(std::span<const double> y_true, std::span<const double> y_pred, double margin) {
    check_lengths(y_true, y_pred, "rho");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) hits += indicator_within(y_true[i], y_pred[i], margin);
    return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

double rho(std::span<const double> y_true, double constant, double margin) {
    const std::vector<double> pred(y_true.size(), constant);
    return rho(y_true, pred, margin);
}

void check_margins(std::span<const double> margins) {
    if (margins.empty()) throw ArgumentError("margin grid is empty");
    for (std::size_t i = 0; i < margins.size(); ++i) {
        if (!(margins[i] > 0.0) || !std::isfinite(margins[i]))
            throw ArgumentError("margins must be finite and > 0");
        if (i > 0 && !(margins[i - 1] < margins[i]))
            throw ArgumentError("margins must be strictly ascending");
    }
}

MarginTable margin_sweep(std::span<const double> y_true, std::span<const double> personalized,
                         double mu, std::span<const double> margins) {
    const std::vector<double> average(y_true.size(), mu);
    return margin_sweep(y_true, personalized, average, margins);
}

MarginTable margin_sweep(std::span<const double> y_true, std::span<const double> personalized,
                         std::span<const double> mu, std::span<const double> margins) {
    check_margins(margins);
    check_lengths(y_true, mu, "margin_sweep");
    MarginTable table;
    for (double m : margins) table.push_back({m, rho(y_true, personalized, m), rho(y_true, mu, m)});
    return table;
}

std::string_view to_string(EvalMode m) noexcept { return m == EvalMode::cv ? "cv" : "holdout"; }

EvalMode parse_eval_mode(std::string_view text) {
    if (text == "cv") return EvalMode::cv;
    if (text == "holdout") return EvalMode::holdout;
    throw ArgumentError("unknown evaluation mode '" + std::string(text) + "' (expected cv or holdout)");
}

namespace {

nlohmann::json margin_json(const MarginTable& t) {
    auto arr = nlohmann::json::array();
    for (const auto& r : t)
        arr.push_back({{"margin", r.margin}, {"rho_personalized", r.rho_personalized}, {"rho_average", r.rho_average}});
    return arr;
}

struct Partition {
    std::vector<std::vector<std::size_t>> train;
    std::vector<std::vector<std::size_t>> test;
};

EvalReport run_partition(const Cohort& cohort, const ModelVariant& variant,
                         std::span<const std::string> features, const Hyperparams& hyper,
                         const Partition& parts, const EvalOptions& options) {
    check_margins(options.margins);
    if (cohort.size() == 0) throw EmptyTraining("cannot evaluate an empty cohort");
    const auto sel = select_columns(cohort.layout, features);
    const Matrix x = cohort.features.select_cols(sel.columns);
    const std::size_t n = cohort.size();
    const std::size_t k = parts.test.size();

    EvalReport report;
    report.variant = variant;
    report.features.assign(features.begin(), features.end());
    report.hyper = hyper;
    report.n = n;
    report.cohort_digest = cohort.digest();
    report.dict_hash = cohort.dict_hash;
    report.predictions.assign(n, std::numeric_limits<double>::quiet_NaN());
    report.average_predictions.assign(n, std::numeric_limits<double>::quiet_NaN());
    for (const auto& id : features) report.importances[id] = 0.0;

    for (std::size_t f = 0; f < k; ++f) {
        const auto& train = parts.train[f];
        const auto& test = parts.test[f];
        std::vector<double> y_train, y_test;
        for (auto i : train) y_train.push_back(cohort.outcomes[i]);
        for (auto i : test) y_test.push_back(cohort.outcomes[i]);

        const auto model = fit_forest(x.select_rows(train), y_train, sel.layout, hyper, options.fit);
        const auto avg = mean_model(y_train);
        const auto pred = predict_rows(model, x.select_rows(test));
        const std::vector<double> avg_pred(test.size(), avg.mu);
        for (std::size_t j = 0; j < test.size(); ++j) {
            report.predictions[test[j]] = pred[j];
            report.average_predictions[test[j]] = avg.mu;
        }
        FoldResult fr;
        fr.fold = f;
        fr.n_train = train.size();
        fr.n_test = test.size();
        fr.mu = avg.mu;
        fr.rmse = rmse(y_test, pred);
        fr.r2 = r_squared(y_test, pred);
        fr.rmse_average = rmse(y_test, avg_pred);
        report.per_fold.push_back(fr);
        for (const auto& [id, v] : importances(model)) report.importances[id] += v / static_cast<double>(k);
    }

    for (const auto& fr : report.per_fold) {
        report.mean_rmse += fr.rmse / static_cast<double>(k);
        report.mean_r2 += fr.r2 / static_cast<double>(k);
    }

    // Pooled over held-out rows in cohort order.
    std::vector<double> y, p, a;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(report.predictions[i])) continue;
        y.push_back(cohort.outcomes[i]);
        p.push_back(report.predictions[i]);
        a.push_back(report.average_predictions[i]);
    }
    report.pooled = margin_sweep(y, p, a, options.margins);
    report.rho_personalized_15 = rho(y, p, kHeadlineMargin);
    report.rho_average_15 = rho(y, a, kHeadlineMargin);
    return report;
}

}  // namespace

EvalReport cross_validate(const Cohort& cohort, const ModelVariant& variant,
                          std::span<const std::string> features, const Hyperparams& hyper,
                          const FoldPlan& plan, const EvalOptions& options) {
    if (plan.size() != cohort.size())
        throw ArgumentError("fold plan covers " + std::to_string(plan.size()) + " rows, cohort has " +
                            std::to_string(cohort.size()));
    Partition parts;
    for (std::size_t f = 0; f < plan.k; ++f) {
        parts.train.push_back(plan.train_indices(f));
        parts.test.push_back(plan.test_indices(f));
    }
    auto report = run_partition(cohort, variant, features, hyper, parts, options);
    report.mode = EvalMode::cv;
    report.split_seed = plan.seed;
    report.split_digest = plan.digest();
    return report;
}

std::string HoldoutSplit::digest() const {
    Sha256 h;
    h.update("train:");
    for (auto i : train) h.update(std::to_string(i)).update(",");
    h.update("test:");
    for (auto i : test) h.update(std::to_string(i)).update(",");
    return h.hex();
}

HoldoutSplit holdout_split(std::size_t n, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ArgumentError("test fraction must be in (0, 1)");
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    if (n_test < 2 || n_test + 2 > n) throw ArgumentError("holdout split needs at least 2 rows on each side");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {kStreamHoldout}));
    rng.shuffle(std::span<std::size_t>(perm));
    HoldoutSplit split;
    split.seed = seed;
    split.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
    std::sort(split.test.begin(), split.test.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

EvalReport holdout_evaluate(const Cohort& cohort, const ModelVariant& variant,
                            std::span<const std::string> features, const Hyperparams& hyper,
                            const HoldoutSplit& split, const EvalOptions& options) {
    if (split.train.size() + split.test.size() != cohort.size())
        throw ArgumentError("holdout split does not cover the cohort");
    Partition parts{{split.train}, {split.test}};
    auto report = run_partition(cohort, variant, features, hyper, parts, options);
    report.mode = EvalMode::holdout;
    report.split_seed = split.seed;
    report.split_digest = split.digest();
    return report;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["variant"] = variant.to_string();
    j["features"] = features;
    j["mode"] = std::string(to_string(mode));
    j["hyper"] = {{"n_trees", hyper.n_trees},
                  {"max_depth", hyper.max_depth},
                  {"seed", hyper.seed},
                  {"min_samples_leaf", hyper.min_samples_leaf},
                  {"mtry", hyper.mtry ? nlohmann::json(*hyper.mtry) : nlohmann::json(nullptr)},
                  {"bootstrap", hyper.bootstrap}};
    j["n"] = n;
    j["split_seed"] = split_seed;
    j["cohort_digest"] = cohort_digest;
    j["split_digest"] = split_digest;
    j["dict_hash"] = dict_hash;
    auto folds = nlohmann::json::array();
    for (const auto& f : per_fold)
        folds.push_back({{"fold", f.fold},
                         {"n_train", f.n_train},
                         {"n_test", f.n_test},
                         {"mu", f.mu},
                         {"rmse", f.rmse},
                         {"r2", f.r2},
                         {"rmse_average", f.rmse_average}});
    j["per_fold"] = folds;
    j["mean_rmse"] = mean_rmse;
    j["mean_r2"] = mean_r2;
    j["pooled"] = margin_json(pooled);
    j["rho_personalized_15"] = rho_personalized_15;
    j["rho_average_15"] = rho_average_15;
    j["importances"] = importances;
    return j;
}

ComparisonTable comparison_report(std::span<const EvalReport> reports) {
    if (reports.empty()) throw ArgumentError("comparison needs at least one report");
    const auto& first = reports.front();
    ComparisonTable table;
    for (const auto& r : reports) {
        if (r.cohort_digest != first.cohort_digest || r.split_digest != first.split_digest ||
            r.mode != first.mode || r.n != first.n)
            throw MismatchedRuns("report for " + r.variant.to_string() +
                                 " was produced on a different cohort or split");
        table.rows.push_back({r.variant.to_string(), r.features.size(), r.mean_rmse, r.mean_r2,
                              r.rho_personalized_15, r.rho_average_15});
    }
    return table;
}

nlohmann::json ComparisonTable::to_json() const {
    auto arr = nlohmann::json::array();
    for (const auto& r : rows)
        arr.push_back({{"variant", r.variant},
                       {"n_variables", r.n_variables},
                       {"rmse", r.rmse},
                       {"r2", r.r2},
                       {"rho_personalized", r.rho_personalized},
                       {"rho_average", r.rho_average}});
    return {{"margin", margin}, {"rows", arr}};
}

void write_report_csv(const ComparisonTable& table, std::ostream& out) {
    out << "variant,n_variables,rmse,r2,rho_personalized_15,rho_average_15\n";
    for (const auto& r : table.rows)
        out << csv_field(r.variant) << ',' << r.n_variables << ',' << format_double(r.rmse) << ','
            << format_double(r.r2) << ',' << format_double(r.rho_personalized) << ','
            << format_double(r.rho_average) << '\n';
}

void write_margin_csv(const MarginTable& table, std::ostream& out) {
    out << "margin,rho_personalized,rho_average\n";
    for (const auto& r : table)
        out << format_double(r.margin) << ',' << format_double(r.rho_personalized) << ','
            << format_double(r.rho_average) << '\n';
}

}  // namespace glad
