#include "glad/selection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "glad/errors.hpp"
#include "glad/text.hpp"

namespace glad {

ModelVariant ModelVariant::topk(std::size_t k) {
    if (k == 0) throw ArgumentError("topk needs k >= 1");
    return ModelVariant(Kind::topk, k);
}

ModelVariant ModelVariant::parse(std::string_view text) {
    if (text == "full") return full();
    if (text == "concise") return concise();
    if (text.starts_with("topk:")) {
        const auto digits = text.substr(5);
        std::size_t k = 0;
        const auto* end = digits.data() + digits.size();
        auto [ptr, ec] = std::from_chars(digits.data(), end, k);
        if (ec == std::errc{} && ptr == end && !digits.empty() && k > 0) return topk(k);
    }
    throw ArgumentError("unknown model variant '" + std::string(text) +
                        "' (expected full, concise or topk:K)");
}

std::string ModelVariant::to_string() const {
    switch (kind_) {
        case Kind::full: return "full";
        case Kind::concise: return "concise";
        case Kind::topk: return "topk:" + std::to_string(k_);
    }
    return "full";
}

Ranking rank(const std::map<std::string, double>& importances, const DataDictionary& dict) {
    Ranking out(importances.begin(), importances.end());
    const auto npos = dict.predictors().size();
    auto position = [&](const std::string& id) { return dict.position(id).value_or(npos); };
    std::stable_sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        const auto pa = position(a.first), pb = position(b.first);
        if (pa != pb) return pa < pb;
        return a.first < b.first;
    });
    return out;
}

std::size_t elbow_suggest(const Ranking& ranking) {
    const std::size_t n = ranking.size();
    if (n < 3) throw ArgumentError("elbow_suggest needs at least 3 ranked variables");
    double lo = ranking.front().second, hi = lo;
    for (const auto& [id, v] : ranking) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    if (!(span > 0.0)) return 1;

    // Chord from (0, y0) to (1, y1) on the normalized axes.
    auto ny = [&](std::size_t i) { return (ranking[i].second - lo) / span; };
    const double x0 = 0.0, y0 = ny(0), x1 = 1.0, y1 = ny(n - 1);
    const double dx = x1 - x0, dy = y1 - y0;
    const double len = std::hypot(dx, dy);

    // Distances below this are rounding noise on a straight profile.
    constexpr double kFlat = 1e-12;
    std::size_t best_rank = 0;
    double best = kFlat;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n - 1);
        const double d = std::abs(dy * (x - x0) - dx * (ny(i) - y0)) / len;
        if (d > best) {
            best = d;
            best_rank = i + 1;
        }
    }
    return best_rank == 0 ? 1 : best_rank - 1;
}

std::vector<std::string> variant_features(const ModelVariant& variant, const Ranking& ranking,
                                          const DataDictionary& dict) {
    switch (variant.kind()) {
        case ModelVariant::Kind::full: return dict.predictor_ids();
        case ModelVariant::Kind::concise: {
            std::vector<std::string> ids;
            for (auto id : kConciseIds) {
                if (dict.find(id) == nullptr)
                    throw UnknownVariable("concise variable '" + std::string(id) + "' is not in the " +
                                          std::string(to_string(dict.edition())) + " dictionary");
                ids.emplace_back(id);
            }
            return ids;
        }
        case ModelVariant::Kind::topk: {
            if (variant.k() > ranking.size())
                throw ArgumentError("topk:" + std::to_string(variant.k()) + " exceeds the " +
                                    std::to_string(ranking.size()) + " ranked variables");
            std::vector<std::string> ids;
            for (std::size_t i = 0; i < variant.k(); ++i) {
                if (dict.find(ranking[i].first) == nullptr)
                    throw UnknownVariable("ranked variable '" + ranking[i].first + "' is not in the dictionary");
                ids.push_back(ranking[i].first);
            }
            return ids;
        }
    }
    return {};
}

void write_importance_csv(const Ranking& ranking, std::ostream& out) {
    out << "rank,variable_id,importance\n";
    for (std::size_t i = 0; i < ranking.size(); ++i)
        out << i + 1 << ',' << csv_field(ranking[i].first) << ',' << format_double(ranking[i].second) << '\n';
}

}  // namespace glad
