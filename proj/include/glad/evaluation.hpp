#pragma once

// Average-model baseline, error metrics, margin correctness (rho) and the
// cross-validation and holdout harnesses.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "glad/cohort.hpp"
#include "glad/forest.hpp"
#include "glad/selection.hpp"

namespace glad {

/// Predicts the training mean for every input.
struct AverageModel {
    double mu = 0.0;
    double predict() const noexcept { return mu; }
};

/// Throws EmptyTraining on empty input.
AverageModel mean_model(std::span<const double> y_train);

/// Throws LengthMismatch on unequal or empty inputs.
double rmse(std::span<const double> y_true, std::span<const double> y_pred);
/// Uses the mean of `y_true` itself. Throws LengthMismatch, or ZeroVariance
/// when y_true is constant.
double r_squared(std::span<const double> y_true, std::span<const double> y_pred);
/// 1 iff y - margin <= pred <= y + margin. Throws ArgumentError unless margin > 0.
int indicator_within(double y_true, double pred, double margin);
/// Fraction of predictions within the margin.
double rho(std::span<const double> y_true, std::span<const double> y_pred, double margin);
/// Same for a constant prediction.
double rho(std::span<const double> y_true, double constant, double margin);

inline const std::vector<double> kDefaultMargins{5.0, 10.0, 15.0, 20.0};
inline constexpr double kHeadlineMargin = 15.0;

struct MarginRow {
    double margin = 0.0;
    double rho_personalized = 0.0;
    double rho_average = 0.0;
    bool operator==(const MarginRow&) const = default;
};
using MarginTable = std::vector<MarginRow>;

/// Throws ArgumentError unless margins are non-empty, positive, strictly ascending.
void check_margins(std::span<const double> margins);
MarginTable margin_sweep(std::span<const double> y_true, std::span<const double> personalized,
                         double mu, std::span<const double> margins);
/// Average-model predictions may differ per record (one mu per training fold).
MarginTable margin_sweep(std::span<const double> y_true, std::span<const double> personalized,
                         std::span<const double> mu, std::span<const double> margins);

struct FoldResult {
    std::size_t fold = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    double mu = 0.0;
    double rmse = 0.0;
    double r2 = 0.0;
    double rmse_average = 0.0;
};

enum class EvalMode { cv, holdout };
std::string_view to_string(EvalMode m) noexcept;
EvalMode parse_eval_mode(std::string_view text);

struct EvalReport {
    ModelVariant variant = ModelVariant::full();
    std::vector<std::string> features;
    EvalMode mode = EvalMode::cv;
    Hyperparams hyper;
    std::size_t n = 0;
    std::uint64_t split_seed = 0;
    std::string cohort_digest;
    std::string split_digest;
    std::string dict_hash;
    std::vector<FoldResult> per_fold;
    double mean_rmse = 0.0;
    double mean_r2 = 0.0;
    /// Over the union of held-out predictions.
    MarginTable pooled;
    double rho_personalized_15 = 0.0;
    double rho_average_15 = 0.0;
    /// Per variable, averaged over folds.
    std::map<std::string, double> importances;
    /// Held-out prediction per cohort row (NaN where a row was never held out).
    std::vector<double> predictions;
    std::vector<double> average_predictions;

    /// Excludes the per-row prediction vectors.
    nlohmann::json to_json() const;
};

struct EvalOptions {
    std::vector<double> margins = kDefaultMargins;
    FitOptions fit;
};

/// Trains on the complement of each fold and predicts the fold. Folds are
/// processed in index order; the report depends only on the arguments.
EvalReport cross_validate(const Cohort& cohort, const ModelVariant& variant,
                          std::span<const std::string> features, const Hyperparams& hyper,
                          const FoldPlan& plan, const EvalOptions& options = {});

/// Single split with round(test_fraction * n) rows held out, drawn from
/// derive_seed(seed, {holdout}).
struct HoldoutSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
    std::string digest() const;
};
HoldoutSplit holdout_split(std::size_t n, double test_fraction, std::uint64_t seed);
EvalReport holdout_evaluate(const Cohort& cohort, const ModelVariant& variant,
                            std::span<const std::string> features, const Hyperparams& hyper,
                            const HoldoutSplit& split, const EvalOptions& options = {});

struct ComparisonRow {
    std::string variant;
    std::size_t n_variables = 0;
    double rmse = 0.0;
    double r2 = 0.0;
    double rho_personalized = 0.0;
    double rho_average = 0.0;
};

struct ComparisonTable {
    double margin = kHeadlineMargin;
    std::vector<ComparisonRow> rows;
    nlohmann::json to_json() const;
};

/// One row per report at the headline margin. Throws MismatchedRuns unless
/// all reports share cohort, split and mode.
ComparisonTable comparison_report(std::span<const EvalReport> reports);

void write_report_csv(const ComparisonTable& table, std::ostream& out);
void write_margin_csv(const MarginTable& table, std::ostream& out);

}  // namespace glad
