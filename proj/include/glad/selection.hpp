#pragma once

// Importance ranking, elbow cut-point suggestion and model variants.

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "glad/schema.hpp"

namespace glad {

/// (variable id, importance), importance non-increasing; equal importances
/// keep dictionary order.
using Ranking = std::vector<std::pair<std::string, double>>;

/// The six clinically convenient variables, in this order.
inline constexpr std::string_view kConciseIds[] = {"baseline_pain", "symptom_duration", "eq5d",
                                                   "walk40m",       "age",              "bmi"};

class ModelVariant {
public:
    enum class Kind { full, topk, concise };

    static ModelVariant full() { return ModelVariant(Kind::full, 0); }
    static ModelVariant concise() { return ModelVariant(Kind::concise, 0); }
    /// Throws ArgumentError when k == 0.
    static ModelVariant topk(std::size_t k);
    /// "full", "concise" or "topk:K". Throws ArgumentError otherwise.
    static ModelVariant parse(std::string_view text);

    Kind kind() const noexcept { return kind_; }
    std::size_t k() const noexcept { return k_; }
    std::string to_string() const;
    bool operator==(const ModelVariant&) const = default;

private:
    ModelVariant(Kind kind, std::size_t k) : kind_(kind), k_(k) {}
    Kind kind_;
    std::size_t k_;
};

/// Ids missing from `dict` are ranked after all dictionary variables, by id.
Ranking rank(const std::map<std::string, double>& importances, const DataDictionary& dict);

/// Number of variables to keep: the 1-based rank of the point farthest from
/// the chord between the first and last points, where both axes are scaled
/// to [0, 1], minus one. The farthest point is the first whose additional
/// importance is small, so the variables before it are kept. Ties take the
/// smallest rank; a straight line gives 1. Throws ArgumentError below three
/// variables.
std::size_t elbow_suggest(const Ranking& ranking);

/// Throws ArgumentError when TopK asks for more than the ranking holds and
/// UnknownVariable when the dictionary lacks a concise id.
std::vector<std::string> variant_features(const ModelVariant& variant, const Ranking& ranking,
                                          const DataDictionary& dict);

/// rank,variable_id,importance
void write_importance_csv(const Ranking& ranking, std::ostream& out);

}  // namespace glad
