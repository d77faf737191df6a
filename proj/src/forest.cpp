#include "glad/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include "glad/errors.hpp"
#include "glad/random.hpp"

namespace glad {

void Hyperparams::check(std::size_t n_features) const {
    if (n_trees < 1) throw ArgumentError("n_trees must be >= 1");
    if (max_depth < 1) throw ArgumentError("max_depth must be >= 1");
    if (min_samples_leaf < 1) throw ArgumentError("min_samples_leaf must be >= 1");
    if (mtry && (*mtry < 1 || *mtry > n_features))
        throw ArgumentError("mtry must be in [1, " + std::to_string(n_features) + "]");
}

double DecisionTree::predict(std::span<const double> x) const {
    std::size_t i = root;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

std::size_t DecisionTree::depth() const {
    if (nodes.empty()) return 0;
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (!nodes[i].is_leaf()) {
            stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
        }
    }
    return deepest;
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

OutcomeStats OutcomeStats::of(std::span<const double> y) {
    if (y.empty()) throw EmptyTraining("no outcomes");
    OutcomeStats s;
    s.mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) ss += (v - s.mean) * (v - s.mean);
    s.sd = y.size() > 1 ? std::sqrt(ss / static_cast<double>(y.size() - 1)) : 0.0;
    auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    s.min = *lo;
    s.max = *hi;
    return s;
}

double gini_impurity(std::span<const double> class_probs) {
    if (class_probs.empty()) throw ArgumentError("gini_impurity: no classes");
    double total = 0.0, sq = 0.0;
    for (double p : class_probs) {
        if (!(p >= 0.0)) throw ArgumentError("gini_impurity: negative probability");
        total += p;
        sq += p * p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ArgumentError("gini_impurity: probabilities must sum to 1");
    return 1.0 - sq;
}

namespace {

double split_threshold(double below, double above) {
    const double t = 0.5 * (below + above);
    return t > below ? t : above;
}

// Walks the rows of one node in ascending feature order and reports every
// admissible cut (between distinct values, both sides >= min_leaf) with its
// SSE reduction. `pos` is the index of the last row on the left.
template <class OnCandidate>
void scan_cuts(const std::uint32_t* order, std::size_t len, const double* col, const double* y,
               const double* w, double w_total, double y_total, double min_leaf, OnCandidate&& on) {
    double wl = 0.0, sl = 0.0;
    for (std::size_t pos = 0; pos + 1 < len; ++pos) {
        const auto row = order[pos];
        wl += w[row];
        sl += w[row] * y[row];
        const double x_here = col[row];
        const double x_next = col[order[pos + 1]];
        if (!(x_here < x_next)) continue;
        const double wr = w_total - wl;
        if (wl < min_leaf || wr < min_leaf) continue;
        const double diff = sl / wl - (y_total - sl) / wr;
        on(pos, wl * wr / w_total * diff * diff);
    }
}

struct PresortedData {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<std::vector<double>> cols;
    std::vector<std::vector<std::uint32_t>> sorted;
    std::span<const double> y;

    PresortedData(const Matrix& x, std::span<const double> outcomes) : n(x.rows()), p(x.cols()), y(outcomes) {
        cols.assign(p, std::vector<double>(n));
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t f = 0; f < p; ++f) cols[f][r] = x(r, f);
        sorted.assign(p, std::vector<std::uint32_t>(n));
        for (std::size_t f = 0; f < p; ++f) {
            auto& s = sorted[f];
            std::iota(s.begin(), s.end(), 0U);
            const auto& c = cols[f];
            std::sort(s.begin(), s.end(), [&](std::uint32_t a, std::uint32_t b) {
                return c[a] < c[b] || (c[a] == c[b] && a < b);
            });
        }
    }
};

class TreeGrower {
public:
    TreeGrower(const PresortedData& data, const Hyperparams& hyper, std::span<const double> weights,
               std::uint64_t tree_seed)
        : data_(data),
          hyper_(hyper),
          w_(weights),
          rng_(derive_seed(tree_seed, {kStreamNodes})),
          left_flag_(data.n, 0),
          features_(data.p) {
        std::iota(features_.begin(), features_.end(), std::size_t{0});
        for (std::size_t r = 0; r < data.n; ++r)
            if (w_[r] > 0.0) ++m_;
        order_.resize(data.p * m_);
        scratch_.resize(m_);
        for (std::size_t f = 0; f < data.p; ++f) {
            auto* out = order_.data() + f * m_;
            for (auto row : data.sorted[f])
                if (w_[row] > 0.0) *out++ = row;
        }
    }

    DecisionTree grow() {
        if (m_ > 0) build(0, m_, 0);
        return std::move(tree_);
    }

private:
    std::int32_t build(std::size_t begin, std::size_t end, std::size_t depth);
    std::optional<Split> find_split(std::size_t begin, std::size_t end, double w_total, double y_total,
                                    double parent_sse);

    const PresortedData& data_;
    const Hyperparams& hyper_;
    std::span<const double> w_;
    Rng rng_;
    std::size_t m_ = 0;
    std::vector<std::uint32_t> order_;
    std::vector<std::uint32_t> scratch_;
    std::vector<char> left_flag_;
    std::vector<std::size_t> features_;
    DecisionTree tree_;
};

std::optional<Split> TreeGrower::find_split(std::size_t begin, std::size_t end, double w_total,
                                            double y_total, double parent_sse) {
    const std::size_t len = end - begin;
    const double min_leaf = static_cast<double>(hyper_.min_samples_leaf);
    const double* y = data_.y.data();
    const double* w = w_.data();

    std::span<const std::size_t> candidates = features_;
    std::vector<std::size_t> drawn;
    if (hyper_.mtry && *hyper_.mtry < data_.p) {
        // Partial Fisher-Yates over a copy, then ascending order so the
        // feature-index tie rule is independent of the draw order.
        drawn = features_;
        for (std::size_t i = 0; i < *hyper_.mtry; ++i) {
            auto j = i + static_cast<std::size_t>(rng_.uniform_index(drawn.size() - i));
            std::swap(drawn[i], drawn[j]);
        }
        drawn.resize(*hyper_.mtry);
        std::sort(drawn.begin(), drawn.end());
        candidates = drawn;
    }

    // Pass 1: best reduction per feature.
    std::vector<double> best_per_feature(candidates.size(), -1.0);
    double best = -1.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto f = candidates[c];
        const auto* ord = order_.data() + f * m_ + begin;
        double local = -1.0;
        scan_cuts(ord, len, data_.cols[f].data(), y, w, w_total, y_total, min_leaf,
                  [&](std::size_t, double r) { local = std::max(local, r); });
        best_per_feature[c] = local;
        best = std::max(best, local);
    }
    const double tol = kSplitTieTolerance * parent_sse;
    if (!(best > tol)) return std::nullopt;

    // Pass 2: smallest tied threshold, then smallest feature index.
    const double cutoff = best - tol;
    std::optional<Split> chosen;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (best_per_feature[c] < cutoff) continue;
        const auto f = candidates[c];
        const auto* ord = order_.data() + f * m_ + begin;
        const double* col = data_.cols[f].data();
        std::optional<Split> first;
        scan_cuts(ord, len, col, y, w, w_total, y_total, min_leaf, [&](std::size_t pos, double r) {
            if (!first && r >= cutoff)
                first = Split{f, split_threshold(col[ord[pos]], col[ord[pos + 1]]), r};
        });
        if (first && (!chosen || first->threshold < chosen->threshold)) chosen = first;
    }
    return chosen;
}

std::int32_t TreeGrower::build(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto index = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    const double* y = data_.y.data();
    const auto* rows = order_.data() + begin;  // feature 0 order; any order holds the node's rows
    const std::size_t len = end - begin;
    double w_total = 0.0, y_total = 0.0;
    double y_min = std::numeric_limits<double>::infinity();
    double y_max = -y_min;
    for (std::size_t i = 0; i < len; ++i) {
        const auto r = rows[i];
        w_total += w_[r];
        y_total += w_[r] * y[r];
        y_min = std::min(y_min, y[r]);
        y_max = std::max(y_max, y[r]);
    }
    const double mean = y_total / w_total;
    double parent_sse = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        const double d = y[rows[i]] - mean;
        parent_sse += w_[rows[i]] * d * d;
    }
    {
        auto& node = tree_.nodes[static_cast<std::size_t>(index)];
        node.value = std::clamp(mean, y_min, y_max);
        node.samples = w_total;
    }

    const bool can_split = depth < hyper_.max_depth && y_min < y_max &&
                           w_total >= 2.0 * static_cast<double>(hyper_.min_samples_leaf);
    if (!can_split) return index;
    const auto split = find_split(begin, end, w_total, y_total, parent_sse);
    if (!split) return index;

    const double* col = data_.cols[split->feature_index].data();
    std::size_t n_left = 0;
    for (std::size_t i = 0; i < len; ++i) {
        const bool left = col[rows[i]] < split->threshold;
        left_flag_[rows[i]] = left;
        n_left += left;
    }
    // Stable partition of every feature's slice keeps each side sorted.
    for (std::size_t f = 0; f < data_.p; ++f) {
        auto* ord = order_.data() + f * m_ + begin;
        std::size_t l = 0, r = 0;
        for (std::size_t i = 0; i < len; ++i) {
            if (left_flag_[ord[i]]) ord[l++] = ord[i];
            else scratch_[r++] = ord[i];
        }
        std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r), ord + l);
    }

    {
        auto& node = tree_.nodes[static_cast<std::size_t>(index)];
        node.feature = static_cast<std::int32_t>(split->feature_index);
        node.threshold = split->threshold;
        node.impurity_decrease = split->impurity_decrease;
    }
    const auto left = build(begin, begin + n_left, depth + 1);
    const auto right = build(begin + n_left, end, depth + 1);
    tree_.nodes[static_cast<std::size_t>(index)].left = left;
    tree_.nodes[static_cast<std::size_t>(index)].right = right;
    return index;
}

}  // namespace

std::optional<Split> best_split(std::span<const double> x, std::span<const double> y,
                                std::size_t min_samples_leaf) {
    if (x.size() != y.size() || x.size() < 2)
        throw ArgumentError("best_split needs equal-length inputs with at least 2 rows");
    if (min_samples_leaf < 1) throw ArgumentError("min_samples_leaf must be >= 1");
    Matrix column(x.size(), 1);
    for (std::size_t i = 0; i < x.size(); ++i) column(i, 0) = x[i];
    Hyperparams stump;
    stump.max_depth = 1;
    stump.min_samples_leaf = min_samples_leaf;
    stump.bootstrap = false;
    const auto tree = fit_tree(column, y, stump, 0);
    const auto& root = tree.nodes[DecisionTree::root];
    if (root.is_leaf()) return std::nullopt;
    return Split{0, root.threshold, root.impurity_decrease};
}

DecisionTree fit_tree(const Matrix& x, std::span<const double> y, const Hyperparams& hyper,
                      std::uint64_t tree_seed) {
    if (x.rows() != y.size()) throw LengthMismatch("fit_tree: feature rows and outcomes differ in length");
    if (x.rows() == 0) throw EmptyTraining("fit_tree: no rows");
    if (x.cols() == 0) throw ArgumentError("fit_tree: no features");
    hyper.check(x.cols());
    const PresortedData data(x, y);
    const std::vector<double> unit(x.rows(), 1.0);
    return TreeGrower(data, hyper, unit, tree_seed).grow();
}

ColumnSelection select_columns(const FeatureLayout& full, std::span<const std::string> ids) {
    ColumnSelection sel;
    for (const auto& id : ids) {
        const auto* e = full.find(id);
        if (e == nullptr) throw UnknownVariable("variable '" + id + "' is not in the feature layout");
        if (sel.layout.find(id) != nullptr) throw ArgumentError("variable '" + id + "' selected twice");
        for (std::size_t k = 0; k < e->width; ++k) sel.columns.push_back(e->offset + k);
        sel.layout.append(e->id, e->width);
    }
    return sel;
}

ForestModel fit_forest(const Matrix& x, std::span<const double> y, FeatureLayout layout,
                       const Hyperparams& hyper, const FitOptions& options) {
    if (x.rows() != y.size()) throw LengthMismatch("fit_forest: feature rows and outcomes differ in length");
    if (x.rows() == 0) throw EmptyTraining("fit_forest: empty training set");
    if (x.cols() == 0 || layout.width() != x.cols())
        throw LayoutMismatch("fit_forest: layout does not match feature columns");
    hyper.check(x.cols());

    const PresortedData data(x, y);
    const std::size_t n = x.rows();
    std::vector<DecisionTree> trees(hyper.n_trees);
    std::vector<std::exception_ptr> errors(hyper.n_trees);

    auto fit_one = [&](std::size_t t) {
        try {
            std::vector<double> weights(n, 1.0);
            if (hyper.bootstrap) {
                std::fill(weights.begin(), weights.end(), 0.0);
                Rng boot(derive_seed(hyper.seed, {kStreamBootstrap, t}));
                for (std::size_t i = 0; i < n; ++i) weights[boot.uniform_index(n)] += 1.0;
            }
            trees[t] = TreeGrower(data, hyper, weights, derive_seed(hyper.seed, {t})).grow();
        } catch (...) {
            errors[t] = std::current_exception();
        }
    };

    unsigned threads = options.threads == 0 ? std::max(1U, std::thread::hardware_concurrency())
                                            : options.threads;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, hyper.n_trees));
    if (threads <= 1) {
        for (std::size_t t = 0; t < hyper.n_trees; ++t) fit_one(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i)
            pool.emplace_back([&] {
                for (std::size_t t; (t = next.fetch_add(1)) < hyper.n_trees;) fit_one(t);
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    ForestModel model;
    model.hyper = hyper;
    model.layout = std::move(layout);
    model.train_outcome_stats = OutcomeStats::of(y);
    model.importances.assign(x.cols(), 0.0);
    // Accumulated in tree order so the sum is schedule independent.
    for (const auto& tree : trees)
        for (const auto& node : tree.nodes)
            if (!node.is_leaf())
                model.importances[static_cast<std::size_t>(node.feature)] +=
                    node.impurity_decrease / static_cast<double>(n);
    const double total = std::accumulate(model.importances.begin(), model.importances.end(), 0.0);
    if (!(total > 0.0))
        throw DegenerateTraining("no tree found an admissible split (constant outcome?)");
    for (auto& v : model.importances) v /= total;
    model.trees = std::move(trees);
    return model;
}

ForestModel fit_forest(const Cohort& cohort, std::span<const std::string> feature_ids,
                       const Hyperparams& hyper, const FitOptions& options) {
    if (cohort.size() == 0) throw EmptyTraining("fit_forest: empty cohort");
    if (feature_ids.empty()) throw ArgumentError("fit_forest: no features selected");
    auto sel = select_columns(cohort.layout, feature_ids);
    return fit_forest(cohort.features.select_cols(sel.columns), cohort.outcomes, std::move(sel.layout),
                      hyper, options);
}

double predict(const ForestModel& model, std::span<const double> x) {
    if (x.size() != model.layout.width())
        throw LayoutMismatch("feature vector has " + std::to_string(x.size()) + " slots, model expects " +
                             std::to_string(model.layout.width()));
    if (model.trees.empty()) throw ArgumentError("model has no trees");
    double sum = 0.0;
    for (const auto& tree : model.trees) sum += tree.predict(x);
    const double mean = sum / static_cast<double>(model.trees.size());
    return std::clamp(mean, model.train_outcome_stats.min, model.train_outcome_stats.max);
}

double predict(const ForestModel& model, const FeatureVector& x) {
    if (!(x.layout == model.layout)) throw LayoutMismatch("feature layout differs from the model layout");
    return predict(model, std::span<const double>(x.values));
}

std::vector<double> predict_rows(const ForestModel& model, const Matrix& x) {
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict(model, x.row(r));
    return out;
}

std::map<std::string, double> importances(const ForestModel& model) {
    std::map<std::string, double> out;
    for (const auto& e : model.layout.entries()) {
        double s = 0.0;
        for (std::size_t k = 0; k < e.width; ++k) s += model.importances.at(e.offset + k);
        out[e.id] = s;
    }
    return out;
}

}  // namespace glad
