#pragma once

// CART regression trees and a bootstrap-aggregated forest with normalized
// impurity-decrease ("Gini") importance.
//
// Splits maximize the reduction in the sum of squared errors (SSE) of the
// outcome. Candidate thresholds are midpoints between consecutive distinct
// feature values; prediction routes x[feature] < threshold to the left child.
//
// Tie rule: let r* be the best reduction at a node. Every candidate within
// kSplitTieTolerance * SSE(parent) of r* counts as tied; among tied candidates
// the smallest threshold wins, then the smallest feature index. A node is a
// leaf when r* does not exceed that same tolerance.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glad/cohort.hpp"
#include "glad/matrix.hpp"
#include "glad/schema.hpp"

namespace glad {

inline constexpr double kSplitTieTolerance = 1e-9;

struct Hyperparams {
    std::size_t n_trees = 100;
    std::size_t max_depth = 10;
    std::uint64_t seed = 42;
    std::size_t min_samples_leaf = 1;
    /// Features drawn per node; nullopt means all features.
    std::optional<std::size_t> mtry;
    bool bootstrap = true;

    /// Throws ArgumentError if inconsistent with `n_features`.
    void check(std::size_t n_features) const;
    bool operator==(const Hyperparams&) const = default;
};

struct Split {
    std::size_t feature_index = 0;
    double threshold = 0.0;
    /// SSE(parent) - SSE(left) - SSE(right), in squared outcome units.
    double impurity_decrease = 0.0;
};

struct TreeNode {
    /// -1 for leaves.
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    /// Node mean (the prediction when the node is a leaf).
    double value = 0.0;
    /// Training samples reaching the node, counting bootstrap multiplicity.
    double samples = 0.0;
    double impurity_decrease = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
};

class DecisionTree {
public:
    std::vector<TreeNode> nodes;
    static constexpr std::size_t root = 0;

    double predict(std::span<const double> x) const;
    std::size_t depth() const;
    std::size_t leaf_count() const;
    bool has_split() const { return nodes.size() > 1; }
};

struct OutcomeStats {
    double mean = 0.0;
    double sd = 0.0;
    double min = 0.0;
    double max = 0.0;

    static OutcomeStats of(std::span<const double> y);
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    Hyperparams hyper;
    FeatureLayout layout;
    /// One entry per feature slot, non-negative, summing to 1.
    std::vector<double> importances;
    OutcomeStats train_outcome_stats;
};

/// 1 - sum p_i^2. Throws ArgumentError on negative or non-normalized input.
double gini_impurity(std::span<const double> class_probs);

/// Best SSE-reducing threshold on a single column, or nullopt.
std::optional<Split> best_split(std::span<const double> x, std::span<const double> y,
                                std::size_t min_samples_leaf = 1);

/// Greedy tree on all rows with unit weights (no bootstrap). `tree_seed`
/// drives the per-node feature draws when hyper.mtry is set.
DecisionTree fit_tree(const Matrix& x, std::span<const double> y, const Hyperparams& hyper,
                      std::uint64_t tree_seed);

struct FitOptions {
    /// Worker threads for tree fitting; 0 uses the hardware concurrency.
    unsigned threads = 1;
};

/// Column indices and sub-layout of `ids` inside `full`.
struct ColumnSelection {
    std::vector<std::size_t> columns;
    FeatureLayout layout;
};
ColumnSelection select_columns(const FeatureLayout& full, std::span<const std::string> ids);

/// Tree t uses bootstrap stream derive_seed(seed, {bootstrap, t}) and node
/// stream derive_seed(seed, {t}); output does not depend on `options.threads`.
/// Throws DegenerateTraining when no tree finds a split.
ForestModel fit_forest(const Matrix& x, std::span<const double> y, FeatureLayout layout,
                       const Hyperparams& hyper, const FitOptions& options = {});
ForestModel fit_forest(const Cohort& cohort, std::span<const std::string> feature_ids,
                       const Hyperparams& hyper, const FitOptions& options = {});

/// Mean of per-tree leaf values, within the training outcome range. Throws
/// LayoutMismatch when the vector does not fit the model.
double predict(const ForestModel& model, std::span<const double> x);
double predict(const ForestModel& model, const FeatureVector& x);
std::vector<double> predict_rows(const ForestModel& model, const Matrix& x);

/// Importances per variable id; one-hot slots are summed into their parent.
std::map<std::string, double> importances(const ForestModel& model);

}  // namespace glad
