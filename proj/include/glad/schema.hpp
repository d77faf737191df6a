#pragma once

// Registry data dictionary, patient records, validation and feature encoding.

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace glad {

enum class Edition { base34, extended46 };

std::string_view to_string(Edition e) noexcept;
Edition parse_edition(std::string_view text);  // throws ArgumentError

struct Continuous {
    double min;
    double max;
};
struct Binary {};
struct Categorical {
    std::vector<std::string> levels;
};
using VariableKind = std::variant<Continuous, Binary, Categorical>;

struct ContinuousMarginal {
    double mean;
    double sd;
};
struct BinaryMarginal {
    long positive;
    long total;
    double proportion() const { return static_cast<double>(positive) / static_cast<double>(total); }
};
struct CategoricalMarginal {
    std::vector<long> counts;
};
using Marginal = std::variant<ContinuousMarginal, BinaryMarginal, CategoricalMarginal>;

struct VariableSpec {
    std::string id;
    std::string prompt;
    VariableKind kind;
    Marginal marginal;
    std::string units;

    bool is_continuous() const { return std::holds_alternative<Continuous>(kind); }
    bool is_binary() const { return std::holds_alternative<Binary>(kind); }
    bool is_categorical() const { return std::holds_alternative<Categorical>(kind); }
    /// Number of feature slots: k for a k-level categorical, else 1.
    std::size_t width() const;
};

struct LayoutEntry {
    std::string id;
    std::size_t width;
    std::size_t offset;

    bool operator==(const LayoutEntry&) const = default;
};

/// Ordered (variable id, width) pairs describing a dense feature vector.
class FeatureLayout {
public:
    FeatureLayout() = default;
    void append(std::string id, std::size_t width);

    const std::vector<LayoutEntry>& entries() const noexcept { return entries_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t variable_count() const noexcept { return entries_.size(); }
    const LayoutEntry* find(std::string_view id) const;
    /// Variable id owning slot `column`.
    const std::string& owner(std::size_t column) const;

    bool operator==(const FeatureLayout&) const = default;

private:
    std::vector<LayoutEntry> entries_;
    std::size_t width_ = 0;
};

class DataDictionary {
public:
    /// Parses and checks every dictionary invariant; throws IntegrityError.
    static DataDictionary from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
    /// Canonical serialization: compact JSON with sorted keys.
    std::string canonical() const { return to_json().dump(); }

    Edition edition() const noexcept { return edition_; }
    const std::vector<VariableSpec>& predictors() const noexcept { return predictors_; }
    const VariableSpec& outcome() const noexcept { return outcome_; }
    /// SHA-256 (hex) of canonical().
    const std::string& content_hash() const noexcept { return hash_; }

    const VariableSpec* find(std::string_view id) const;
    std::optional<std::size_t> position(std::string_view id) const;
    const FeatureLayout& layout() const noexcept { return layout_; }
    /// Layout over a subset of predictors, in the order given.
    FeatureLayout layout_for(std::span<const std::string> ids) const;
    std::vector<std::string> predictor_ids() const;

private:
    Edition edition_ = Edition::base34;
    std::vector<VariableSpec> predictors_;
    VariableSpec outcome_;
    FeatureLayout layout_;
    std::string hash_;
};

/// The compiled-in dictionary for an edition. Parsed once per process.
const DataDictionary& builtin_dictionary(Edition edition);
/// Lookup by content hash among the built-in editions.
const DataDictionary* dictionary_by_hash(std::string_view hash);

struct Date {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;

    auto operator<=>(const Date&) const = default;
    std::string iso() const;
};
/// Strict YYYY-MM-DD; rejects impossible calendar dates.
std::optional<Date> parse_iso_date(std::string_view text);

enum class Joint { knee, hip, other };
Joint parse_joint(std::string_view text) noexcept;
std::string_view to_string(Joint j) noexcept;

struct AdminFields {
    Joint primary_joint = Joint::other;
    std::optional<Date> start_date;
    std::optional<bool> followup_complete;
};

/// A raw cell: parsed number/flag/level where possible, else the original text.
using Value = std::variant<double, bool, std::string>;

struct PatientRecord {
    std::string record_id;
    std::map<std::string, Value, std::less<>> values;
    AdminFields admin;
};

/// Binary cell synonyms (case-insensitive, trimmed):
/// true: 1, yes, y, true, t    false: 0, no, n, false, f
std::optional<bool> parse_binary(std::string_view text) noexcept;
std::optional<double> parse_number(std::string_view text) noexcept;

enum class ViolationReason { missing, out_of_range, unparseable };
std::string_view to_string(ViolationReason r) noexcept;

struct Violation {
    std::string id;
    ViolationReason reason;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool complete() const noexcept { return violations.empty(); }
    std::vector<std::string> field_ids() const;
};

struct ValidateOptions {
    /// Treat a missing outcome as a violation (training data).
    bool require_outcome = false;
    /// Restrict predictor checks to these ids (empty: all predictors).
    std::vector<std::string> only;
};

ValidationReport validate(const DataDictionary& dict, const PatientRecord& record,
                          const ValidateOptions& options = {});

/// Value of a single variable as its kind expects, or nullopt when it does not
/// parse or is out of range.
std::optional<double> continuous_value(const VariableSpec& spec, const Value& value);
std::optional<bool> binary_value(const Value& value);
std::optional<std::size_t> level_index(const Categorical& kind, const Value& value);

struct FeatureVector {
    std::vector<double> values;
    FeatureLayout layout;
};

struct EncodeOptions {
    /// z-score continuous slots with the dictionary marginal. Trees do not need
    /// it; it exists for comparisons against scaled pipelines.
    bool standardize = false;
};

/// Encodes every predictor in dictionary order. Throws EncodingError when the
/// record does not validate.
FeatureVector encode(const DataDictionary& dict, const PatientRecord& record,
                     const EncodeOptions& options = {});
/// Encodes only the variables in `layout` (a sub-layout of the dictionary).
FeatureVector encode(const DataDictionary& dict, const PatientRecord& record,
                     const FeatureLayout& layout, const EncodeOptions& options = {});
/// Bulk form writing into `out` (size = layout.width()).
void encode_into(const DataDictionary& dict, const PatientRecord& record,
                 const FeatureLayout& layout, std::span<double> out,
                 const EncodeOptions& options = {});

}  // namespace glad
