#pragma once

// Shared builders for test data.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "glad/cohort.hpp"
#include "glad/forest.hpp"
#include "glad/modelstore.hpp"
#include "glad/random.hpp"
#include "oracle_tree.hpp"

namespace fixtures {

struct Instance {
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    std::size_t depth = 1;
    std::size_t min_leaf = 1;

    glad::Matrix matrix() const {
        glad::Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
        return m;
    }
};

/// Small instance; half of them use coarse integer grids so ties and
/// duplicate values are common.
inline Instance random_instance(glad::Rng& rng, std::size_t max_n = 30, std::size_t max_p = 5,
                                std::size_t max_depth = 2) {
    Instance in;
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_index(max_n - 1));
    const std::size_t p = 1 + static_cast<std::size_t>(rng.uniform_index(max_p));
    in.depth = 1 + static_cast<std::size_t>(rng.uniform_index(max_depth));
    in.min_leaf = 1 + static_cast<std::size_t>(rng.uniform_index(3));
    const bool grid = rng.bernoulli(0.5);
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> row(p);
        for (auto& v : row) v = grid ? static_cast<double>(rng.uniform_index(5)) : rng.uniform() * 10.0 - 5.0;
        in.rows.push_back(row);
        in.y.push_back(grid ? static_cast<double>(rng.uniform_index(11)) : rng.normal(3.0, 2.0));
    }
    return in;
}

inline std::vector<oracle::Node> oracle_fit(const Instance& in) {
    return oracle::Builder(in.rows, in.y, in.depth, in.min_leaf).build();
}

/// Empty string when equal, else a description of the first difference.
inline std::string compare(const glad::DecisionTree& t, const std::vector<oracle::Node>& ref, double tol = 1e-9) {
    if (t.nodes.size() != ref.size())
        return "node count " + std::to_string(t.nodes.size()) + " vs " + std::to_string(ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const auto& a = t.nodes[i];
        const auto& b = ref[i];
        if (a.feature != b.feature || a.left != b.left || a.right != b.right)
            return "structure differs at node " + std::to_string(i);
        if (!a.is_leaf() && std::abs(a.threshold - b.threshold) > tol)
            return "threshold differs at node " + std::to_string(i);
        if (std::abs(a.value - b.value) > tol) return "value differs at node " + std::to_string(i);
    }
    return {};
}

inline glad::Hyperparams exact_hyper(const Instance& in) {
    glad::Hyperparams h;
    h.n_trees = 1;
    h.max_depth = in.depth;
    h.min_samples_leaf = in.min_leaf;
    h.bootstrap = false;
    return h;
}

/// Concise bundle whose every prediction is `change`, with a fixed certainty table.
inline glad::ModelBundle constant_bundle(double change) {
    const auto& dict = glad::builtin_dictionary(glad::Edition::base34);
    glad::ModelBundle b;
    b.dict_edition = glad::Edition::base34;
    b.dict_hash = dict.content_hash();
    b.variant = glad::ModelVariant::concise();
    for (auto id : glad::kConciseIds) b.features.emplace_back(id);
    b.forest.layout = dict.layout_for(b.features);
    b.forest.hyper.n_trees = 1;
    glad::DecisionTree tree;
    glad::TreeNode leaf;
    leaf.value = change;
    tree.nodes.push_back(leaf);
    b.forest.trees.push_back(tree);
    b.forest.importances.assign(b.forest.layout.width(), 1.0 / static_cast<double>(b.forest.layout.width()));
    b.forest.train_outcome_stats = {14.06, 22.75, -100.0, 100.0};
    b.certainty = {{5.0, 0.2105}, {10.0, 0.4012}, {15.0, 0.5795}, {20.0, 0.7031}};
    b.certainty_average = {{5.0, 0.1720}, {10.0, 0.3390}, {15.0, 0.5143}, {20.0, 0.6302}};
    b.training_digest = "fixture";
    b.cv_folds = 10;
    return b;
}

/// Small concise cohort built from the calibrated generator.
inline glad::Cohort small_cohort(std::size_t n, std::uint64_t seed = 7,
                                 glad::Edition edition = glad::Edition::base34) {
    const auto& dict = glad::builtin_dictionary(edition);
    return glad::generate_synthetic(glad::calibrate_signal(dict, {}), n, seed);
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("glad_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace fixtures
