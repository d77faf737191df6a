#include "glad/modelstore.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "glad/errors.hpp"
#include "glad/text.hpp"

namespace glad {

using nlohmann::json;

ModelBundle::Lookup ModelBundle::certainty_at(double margin) const {
    if (certainty.empty()) throw ValidationError("bundle has no certainty table", {"certainty"});
    if (auto it = certainty.find(margin); it != certainty.end()) return {margin, it->second, true};
    auto best = certainty.begin();
    for (auto it = certainty.begin(); it != certainty.end(); ++it)
        if (std::abs(it->first - margin) < std::abs(best->first - margin)) best = it;
    return {best->first, best->second, false};
}

namespace {

[[noreturn]] void corrupt(const std::string& what) { throw IntegrityError("model bundle: " + what); }

json margin_map(const std::map<double, double>& m) {
    json j = json::object();
    for (const auto& [margin, r] : m) j[format_double(margin)] = r;
    return j;
}

std::map<double, double> margin_map_from(const json& j, const char* field) {
    if (!j.is_object()) corrupt(std::string(field) + " must be an object");
    std::map<double, double> out;
    for (const auto& [key, v] : j.items()) {
        const auto margin = parse_number(key);
        if (!margin || !(*margin > 0.0)) corrupt(std::string(field) + " has a bad margin key '" + key + "'");
        const double r = v.get<double>();
        if (!(r >= 0.0 && r <= 1.0)) corrupt(std::string(field) + " value outside [0, 1]");
        out[*margin] = r;
    }
    return out;
}

json tree_json(const DecisionTree& t) {
    std::vector<std::int32_t> feature, left, right;
    std::vector<double> threshold, value;
    for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.is_leaf() ? 0.0 : n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

DecisionTree tree_from(const json& j, std::size_t width) {
    const auto feature = j.at("feature").get<std::vector<std::int32_t>>();
    const auto threshold = j.at("threshold").get<std::vector<double>>();
    const auto left = j.at("left").get<std::vector<std::int32_t>>();
    const auto right = j.at("right").get<std::vector<std::int32_t>>();
    const auto value = j.at("value").get<std::vector<double>>();
    const std::size_t n = feature.size();
    if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n)
        corrupt("tree arrays are empty or differ in length");
    DecisionTree t;
    t.nodes.resize(n);
    std::vector<int> parents(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& node = t.nodes[i];
        node.feature = feature[i];
        node.threshold = threshold[i];
        node.left = left[i];
        node.right = right[i];
        node.value = value[i];
        if (!std::isfinite(node.value) || !std::isfinite(node.threshold)) corrupt("non-finite tree value");
        if (node.is_leaf()) {
            if (node.feature != -1 || node.left != -1 || node.right != -1) corrupt("malformed leaf");
            continue;
        }
        const auto in_range = [&](std::int32_t c) {
            return c > static_cast<std::int32_t>(i) && static_cast<std::size_t>(c) < n;
        };
        if (static_cast<std::size_t>(node.feature) >= width) corrupt("split feature outside the layout");
        if (!in_range(node.left) || !in_range(node.right) || node.left == node.right)
            corrupt("child index out of range");
        ++parents[static_cast<std::size_t>(node.left)];
        ++parents[static_cast<std::size_t>(node.right)];
    }
    for (std::size_t i = 1; i < n; ++i)
        if (parents[i] != 1) corrupt("node " + std::to_string(i) + " is not reachable exactly once");
    return t;
}

}  // namespace

void check_bundle(const ModelBundle& b) {
    if (b.certainty.find(kHeadlineMargin) == b.certainty.end())
        throw ValidationError("bundle certainty table lacks the margin-15 entry", {"certainty"});
    const auto* dict = dictionary_by_hash(b.dict_hash);
    if (dict == nullptr) throw IntegrityError("model bundle: unknown dictionary hash " + b.dict_hash);
    if (dict->edition() != b.dict_edition) throw IntegrityError("model bundle: edition does not match hash");
    if (b.forest.trees.empty()) throw IntegrityError("model bundle: no trees");
    if (!(dict->layout_for(b.features) == b.forest.layout))
        throw IntegrityError("model bundle: layout does not match the dictionary");
    if (b.forest.importances.size() != b.forest.layout.width())
        throw IntegrityError("model bundle: importance vector has the wrong length");
    if (!(b.forest.train_outcome_stats.min <= b.forest.train_outcome_stats.max))
        throw IntegrityError("model bundle: outcome range is inverted");
}

json bundle_to_json(const ModelBundle& b) {
    const auto& f = b.forest;
    auto layout = json::array();
    for (const auto& e : f.layout.entries()) layout.push_back({{"id", e.id}, {"width", e.width}});
    auto trees = json::array();
    for (const auto& t : f.trees) trees.push_back(tree_json(t));
    const auto& s = f.train_outcome_stats;
    return {
        {"format_version", b.format_version},
        {"dict_edition", std::string(to_string(b.dict_edition))},
        {"dict_hash", b.dict_hash},
        {"variant", b.variant.to_string()},
        {"features", b.features},
        {"layout", layout},
        {"hyper",
         {{"n_trees", f.hyper.n_trees},
          {"max_depth", f.hyper.max_depth},
          {"seed", f.hyper.seed},
          {"min_samples_leaf", f.hyper.min_samples_leaf},
          {"mtry", f.hyper.mtry ? json(*f.hyper.mtry) : json(nullptr)},
          {"bootstrap", f.hyper.bootstrap}}},
        {"trees", trees},
        {"importances", f.importances},
        {"certainty", margin_map(b.certainty)},
        {"certainty_average", margin_map(b.certainty_average)},
        {"train_outcome_stats", {{"mean", s.mean}, {"sd", s.sd}, {"min", s.min}, {"max", s.max}}},
        {"training_digest", b.training_digest},
        {"evaluation", {{"rmse", b.cv_rmse}, {"r2", b.cv_r2}, {"folds", b.cv_folds}}},
    };
}

ModelBundle bundle_from_json(const json& j) {
    if (!j.is_object()) corrupt("top level is not an object");
    if (!j.contains("format_version") || !j["format_version"].is_number_integer())
        corrupt("format_version missing");
    const int version = j["format_version"].get<int>();
    if (version != kBundleFormatVersion)
        throw FormatVersionMismatch("model bundle has format_version " + std::to_string(version) +
                                    ", this build reads " + std::to_string(kBundleFormatVersion));
    ModelBundle b;
    try {
        b.dict_edition = parse_edition(j.at("dict_edition").get<std::string>());
        b.dict_hash = j.at("dict_hash").get<std::string>();
        b.variant = ModelVariant::parse(j.at("variant").get<std::string>());
        b.features = j.at("features").get<std::vector<std::string>>();
        for (const auto& e : j.at("layout")) b.forest.layout.append(e.at("id").get<std::string>(), e.at("width").get<std::size_t>());
        const auto& h = j.at("hyper");
        b.forest.hyper.n_trees = h.at("n_trees").get<std::size_t>();
        b.forest.hyper.max_depth = h.at("max_depth").get<std::size_t>();
        b.forest.hyper.seed = h.at("seed").get<std::uint64_t>();
        b.forest.hyper.min_samples_leaf = h.at("min_samples_leaf").get<std::size_t>();
        if (!h.at("mtry").is_null()) b.forest.hyper.mtry = h["mtry"].get<std::size_t>();
        b.forest.hyper.bootstrap = h.at("bootstrap").get<bool>();
        for (const auto& t : j.at("trees")) b.forest.trees.push_back(tree_from(t, b.forest.layout.width()));
        if (b.forest.trees.size() != b.forest.hyper.n_trees) corrupt("tree count differs from n_trees");
        b.forest.importances = j.at("importances").get<std::vector<double>>();
        b.certainty = margin_map_from(j.at("certainty"), "certainty");
        b.certainty_average = margin_map_from(j.at("certainty_average"), "certainty_average");
        const auto& s = j.at("train_outcome_stats");
        b.forest.train_outcome_stats = {s.at("mean").get<double>(), s.at("sd").get<double>(),
                                        s.at("min").get<double>(), s.at("max").get<double>()};
        b.training_digest = j.at("training_digest").get<std::string>();
        const auto& e = j.at("evaluation");
        b.cv_rmse = e.at("rmse").get<double>();
        b.cv_r2 = e.at("r2").get<double>();
        b.cv_folds = e.at("folds").get<std::size_t>();
    } catch (const json::exception& ex) {
        corrupt(ex.what());
    } catch (const ArgumentError& ex) {
        corrupt(ex.what());
    }
    check_bundle(b);
    return b;
}

std::string serialize_bundle(const ModelBundle& bundle) {
    check_bundle(bundle);
    return bundle_to_json(bundle).dump() + "\n";
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
    const auto text = serialize_bundle(bundle);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model bundle " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::parse_error& ex) {
        throw IntegrityError("model bundle " + path.string() + " is not valid JSON: " + ex.what());
    }
    return bundle_from_json(j);
}

}  // namespace glad
