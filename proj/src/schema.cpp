#include "glad/schema.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <set>

#include "glad/digest.hpp"
#include "glad/errors.hpp"

namespace glad {

namespace detail {
extern const std::string_view kDictionaryBase34;
extern const std::string_view kDictionaryExtended46;
}  // namespace detail

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

bool iequals(std::string_view a, std::string_view b) noexcept {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

[[noreturn]] void bad_dictionary(const std::string& why) {
    throw IntegrityError("data dictionary: " + why);
}

VariableSpec spec_from_json(const json& j) {
    VariableSpec spec;
    try {
        spec.id = j.at("id").get<std::string>();
        spec.prompt = j.at("prompt").get<std::string>();
        spec.units = j.value("units", std::string{});
        const json& kind = j.at("kind");
        const json& marginal = j.at("marginal");
        const auto type = kind.at("type").get<std::string>();
        if (type == "continuous") {
            Continuous c{kind.at("min").get<double>(), kind.at("max").get<double>()};
            if (!std::isfinite(c.min) || !std::isfinite(c.max) || !(c.min < c.max))
                bad_dictionary(spec.id + ": continuous bounds must be finite with min < max");
            ContinuousMarginal m{marginal.at("mean").get<double>(), marginal.at("sd").get<double>()};
            if (!(m.mean >= c.min && m.mean <= c.max))
                bad_dictionary(spec.id + ": marginal mean outside [min, max]");
            if (!(m.sd > 0.0)) bad_dictionary(spec.id + ": marginal sd must be positive");
            spec.kind = c;
            spec.marginal = m;
        } else if (type == "binary") {
            BinaryMarginal m{marginal.at("positive").get<long>(), marginal.at("total").get<long>()};
            if (m.total <= 0 || m.positive < 0 || m.positive > m.total)
                bad_dictionary(spec.id + ": binary marginal must satisfy 0 <= positive <= total");
            spec.kind = Binary{};
            spec.marginal = m;
        } else if (type == "categorical") {
            Categorical c{kind.at("levels").get<std::vector<std::string>>()};
            std::set<std::string> distinct(c.levels.begin(), c.levels.end());
            if (c.levels.size() < 3 || distinct.size() != c.levels.size())
                bad_dictionary(spec.id + ": categorical needs >= 3 distinct levels");
            CategoricalMarginal m{marginal.at("counts").get<std::vector<long>>()};
            if (m.counts.size() != c.levels.size())
                bad_dictionary(spec.id + ": one count per level required");
            spec.kind = std::move(c);
            spec.marginal = std::move(m);
        } else {
            bad_dictionary(spec.id + ": unknown kind '" + type + "'");
        }
    } catch (const json::exception& e) {
        bad_dictionary(std::string("malformed variable: ") + e.what());
    }
    return spec;
}

json spec_to_json(const VariableSpec& spec) {
    json j;
    j["id"] = spec.id;
    j["prompt"] = spec.prompt;
    j["units"] = spec.units;
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Continuous>) {
                j["kind"] = {{"type", "continuous"}, {"min", k.min}, {"max", k.max}};
            } else if constexpr (std::is_same_v<K, Binary>) {
                j["kind"] = {{"type", "binary"}};
            } else {
                j["kind"] = {{"type", "categorical"}, {"levels", k.levels}};
            }
        },
        spec.kind);
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, ContinuousMarginal>) {
                j["marginal"] = {{"mean", m.mean}, {"sd", m.sd}};
            } else if constexpr (std::is_same_v<M, BinaryMarginal>) {
                j["marginal"] = {{"positive", m.positive}, {"total", m.total}};
            } else {
                j["marginal"] = {{"counts", m.counts}};
            }
        },
        spec.marginal);
    return j;
}

}  // namespace

std::string_view to_string(Edition e) noexcept {
    return e == Edition::base34 ? "base34" : "extended46";
}

Edition parse_edition(std::string_view text) {
    if (text == "base34") return Edition::base34;
    if (text == "extended46") return Edition::extended46;
    throw ArgumentError("unknown dictionary edition '" + std::string(text) +
                        "' (expected base34 or extended46)");
}

std::size_t VariableSpec::width() const {
    if (const auto* c = std::get_if<Categorical>(&kind)) return c->levels.size();
    return 1;
}

void FeatureLayout::append(std::string id, std::size_t width) {
    entries_.push_back({std::move(id), width, width_});
    width_ += width;
}

const LayoutEntry* FeatureLayout::find(std::string_view id) const {
    for (const auto& e : entries_)
        if (e.id == id) return &e;
    return nullptr;
}

const std::string& FeatureLayout::owner(std::size_t column) const {
    auto it = std::upper_bound(entries_.begin(), entries_.end(), column,
                               [](std::size_t c, const LayoutEntry& e) { return c < e.offset; });
    if (it == entries_.begin() || column >= width_)
        throw ArgumentError("feature column out of range");
    return std::prev(it)->id;
}

DataDictionary DataDictionary::from_json(const json& doc) {
    DataDictionary d;
    try {
        d.edition_ = parse_edition(doc.at("edition").get<std::string>());
        for (const auto& p : doc.at("predictors")) d.predictors_.push_back(spec_from_json(p));
        d.outcome_ = spec_from_json(doc.at("outcome"));
    } catch (const json::exception& e) {
        bad_dictionary(e.what());
    } catch (const ArgumentError& e) {
        bad_dictionary(e.what());
    }

    std::set<std::string> ids;
    std::size_t n_cont = 0, n_bin = 0, n_cat3 = 0, n_cat_other = 0;
    for (const auto& p : d.predictors_) {
        if (!ids.insert(p.id).second) bad_dictionary("duplicate id '" + p.id + "'");
        if (p.is_continuous()) ++n_cont;
        else if (p.is_binary()) ++n_bin;
        else if (p.width() == 3) ++n_cat3;
        else ++n_cat_other;
        d.layout_.append(p.id, p.width());
    }
    if (ids.count(d.outcome_.id)) bad_dictionary("outcome id collides with a predictor");
    const auto* outcome_range = std::get_if<Continuous>(&d.outcome_.kind);
    if (outcome_range == nullptr || outcome_range->min != -100.0 || outcome_range->max != 100.0)
        bad_dictionary("outcome must be continuous on [-100, 100]");

    if (d.edition_ == Edition::base34) {
        if (d.predictors_.size() != 34 || n_cont != 11 || n_bin != 22 || n_cat3 != 1 ||
            n_cat_other != 0)
            bad_dictionary("base34 must have 34 predictors: 11 continuous, 22 binary, 1 categorical(3)");
    } else if (d.predictors_.size() != 46) {
        bad_dictionary("extended46 must have 46 predictors");
    }
    d.hash_ = sha256_hex(d.canonical());
    return d;
}

json DataDictionary::to_json() const {
    json preds = json::array();
    for (const auto& p : predictors_) preds.push_back(spec_to_json(p));
    return {{"edition", std::string(to_string(edition_))},
            {"outcome", spec_to_json(outcome_)},
            {"predictors", std::move(preds)}};
}

const VariableSpec* DataDictionary::find(std::string_view id) const {
    for (const auto& p : predictors_)
        if (p.id == id) return &p;
    return nullptr;
}

std::optional<std::size_t> DataDictionary::position(std::string_view id) const {
    for (std::size_t i = 0; i < predictors_.size(); ++i)
        if (predictors_[i].id == id) return i;
    return std::nullopt;
}

FeatureLayout DataDictionary::layout_for(std::span<const std::string> ids) const {
    FeatureLayout layout;
    std::set<std::string_view> seen;
    for (const auto& id : ids) {
        const auto* spec = find(id);
        if (spec == nullptr) throw UnknownVariable("unknown variable '" + id + "'");
        if (!seen.insert(spec->id).second)
            throw ArgumentError("variable '" + id + "' listed twice");
        layout.append(spec->id, spec->width());
    }
    return layout;
}

std::vector<std::string> DataDictionary::predictor_ids() const {
    std::vector<std::string> out;
    out.reserve(predictors_.size());
    for (const auto& p : predictors_) out.push_back(p.id);
    return out;
}

const DataDictionary& builtin_dictionary(Edition edition) {
    static const DataDictionary base = DataDictionary::from_json(json::parse(detail::kDictionaryBase34));
    static const DataDictionary extended =
        DataDictionary::from_json(json::parse(detail::kDictionaryExtended46));
    return edition == Edition::base34 ? base : extended;
}

const DataDictionary* dictionary_by_hash(std::string_view hash) {
    for (Edition e : {Edition::base34, Edition::extended46}) {
        const auto& d = builtin_dictionary(e);
        if (d.content_hash() == hash) return &d;
    }
    return nullptr;
}

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
    return buf;
}

std::optional<Date> parse_iso_date(std::string_view text) {
    text = trim(text);
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    auto digits = [&](std::size_t pos, std::size_t len, unsigned& out) {
        auto r = std::from_chars(text.data() + pos, text.data() + pos + len, out);
        return r.ec == std::errc{} && r.ptr == text.data() + pos + len;
    };
    unsigned y = 0, m = 0, d = 0;
    if (!digits(0, 4, y) || !digits(5, 2, m) || !digits(8, 2, d)) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{static_cast<int>(y)},
                                          std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{static_cast<int>(y), m, d};
}

Joint parse_joint(std::string_view text) noexcept {
    text = trim(text);
    if (iequals(text, "knee")) return Joint::knee;
    if (iequals(text, "hip")) return Joint::hip;
    return Joint::other;
}

std::string_view to_string(Joint j) noexcept {
    switch (j) {
        case Joint::knee: return "knee";
        case Joint::hip: return "hip";
        default: return "other";
    }
}

std::optional<bool> parse_binary(std::string_view text) noexcept {
    text = trim(text);
    for (std::string_view t : {"1", "yes", "y", "true", "t"})
        if (iequals(text, t)) return true;
    for (std::string_view f : {"0", "no", "n", "false", "f"})
        if (iequals(text, f)) return false;
    return std::nullopt;
}

std::optional<double> parse_number(std::string_view text) noexcept {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc{} || r.ptr != text.data() + text.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

std::string_view to_string(ViolationReason r) noexcept {
    switch (r) {
        case ViolationReason::missing: return "missing";
        case ViolationReason::out_of_range: return "out-of-range";
        default: return "unparseable";
    }
}

std::vector<std::string> ValidationReport::field_ids() const {
    std::vector<std::string> ids;
    for (const auto& v : violations) ids.push_back(v.id);
    return ids;
}

namespace {

std::optional<double> as_number(const Value& value) {
    if (const auto* d = std::get_if<double>(&value)) {
        return std::isfinite(*d) ? std::optional<double>(*d) : std::nullopt;
    }
    if (const auto* s = std::get_if<std::string>(&value)) return parse_number(*s);
    return std::nullopt;
}

std::optional<Violation> check_value(const VariableSpec& spec, const Value* value) {
    if (value == nullptr) return Violation{spec.id, ViolationReason::missing, "no value"};
    if (const auto* s = std::get_if<std::string>(value); s && trim(*s).empty())
        return Violation{spec.id, ViolationReason::missing, "empty cell"};

    if (const auto* c = std::get_if<Continuous>(&spec.kind)) {
        auto v = as_number(*value);
        if (!v) return Violation{spec.id, ViolationReason::unparseable, "not a number"};
        if (*v < c->min || *v > c->max) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "%g outside [%g, %g]", *v, c->min, c->max);
            return Violation{spec.id, ViolationReason::out_of_range, buf};
        }
        return std::nullopt;
    }
    if (spec.is_binary()) {
        if (!binary_value(*value))
            return Violation{spec.id, ViolationReason::unparseable, "not a yes/no value"};
        return std::nullopt;
    }
    const auto& cat = std::get<Categorical>(spec.kind);
    if (!level_index(cat, *value))
        return Violation{spec.id, ViolationReason::unparseable, "not a known level"};
    return std::nullopt;
}

}  // namespace

std::optional<double> continuous_value(const VariableSpec& spec, const Value& value) {
    const auto* c = std::get_if<Continuous>(&spec.kind);
    if (c == nullptr) return std::nullopt;
    auto v = as_number(value);
    if (!v || *v < c->min || *v > c->max) return std::nullopt;
    return v;
}

std::optional<bool> binary_value(const Value& value) {
    if (const auto* b = std::get_if<bool>(&value)) return *b;
    if (const auto* d = std::get_if<double>(&value)) {
        if (*d == 1.0) return true;
        if (*d == 0.0) return false;
        return std::nullopt;
    }
    return parse_binary(std::get<std::string>(value));
}

std::optional<std::size_t> level_index(const Categorical& kind, const Value& value) {
    const auto* s = std::get_if<std::string>(&value);
    if (s == nullptr) return std::nullopt;
    const auto text = trim(*s);
    for (std::size_t i = 0; i < kind.levels.size(); ++i)
        if (iequals(text, kind.levels[i])) return i;
    return std::nullopt;
}

ValidationReport validate(const DataDictionary& dict, const PatientRecord& record,
                          const ValidateOptions& options) {
    ValidationReport report;
    auto lookup = [&](const std::string& id) -> const Value* {
        auto it = record.values.find(id);
        return it == record.values.end() ? nullptr : &it->second;
    };
    if (options.only.empty()) {
        for (const auto& spec : dict.predictors())
            if (auto v = check_value(spec, lookup(spec.id))) report.violations.push_back(*v);
    } else {
        for (const auto& id : options.only) {
            const auto* spec = dict.find(id);
            if (spec == nullptr) throw UnknownVariable("unknown variable '" + id + "'");
            if (auto v = check_value(*spec, lookup(spec->id))) report.violations.push_back(*v);
        }
    }
    const Value* outcome = lookup(dict.outcome().id);
    if (outcome != nullptr || options.require_outcome) {
        if (auto v = check_value(dict.outcome(), outcome)) {
            // An empty outcome cell at predict time is simply "absent".
            if (options.require_outcome || v->reason != ViolationReason::missing)
                report.violations.push_back(*v);
        }
    }
    return report;
}

void encode_into(const DataDictionary& dict, const PatientRecord& record,
                 const FeatureLayout& layout, std::span<double> out,
                 const EncodeOptions& options) {
    if (out.size() != layout.width()) throw LayoutMismatch("output span does not match layout width");
    for (const auto& entry : layout.entries()) {
        const auto* spec = dict.find(entry.id);
        if (spec == nullptr || spec->width() != entry.width)
            throw EncodingError("layout entry '" + entry.id + "' is not in the dictionary");
        auto it = record.values.find(entry.id);
        if (it == record.values.end()) throw EncodingError("missing value for '" + entry.id + "'");
        auto slot = out.subspan(entry.offset, entry.width);
        if (spec->is_continuous()) {
            auto v = continuous_value(*spec, it->second);
            if (!v) throw EncodingError("invalid value for '" + entry.id + "'");
            double x = *v;
            if (options.standardize) {
                const auto& m = std::get<ContinuousMarginal>(spec->marginal);
                x = (x - m.mean) / m.sd;
            }
            slot[0] = x;
        } else if (spec->is_binary()) {
            auto b = binary_value(it->second);
            if (!b) throw EncodingError("invalid value for '" + entry.id + "'");
            slot[0] = *b ? 1.0 : 0.0;
        } else {
            auto level = level_index(std::get<Categorical>(spec->kind), it->second);
            if (!level) throw EncodingError("invalid level for '" + entry.id + "'");
            std::fill(slot.begin(), slot.end(), 0.0);
            slot[*level] = 1.0;
        }
    }
}

FeatureVector encode(const DataDictionary& dict, const PatientRecord& record,
                     const FeatureLayout& layout, const EncodeOptions& options) {
    ValidateOptions vopt;
    for (const auto& e : layout.entries()) vopt.only.push_back(e.id);
    auto report = validate(dict, record, vopt);
    if (!report.complete()) {
        std::string msg = "record does not validate:";
        for (const auto& v : report.violations)
            msg += " " + v.id + " (" + std::string(to_string(v.reason)) + ")";
        throw EncodingError(msg);
    }
    FeatureVector fv{std::vector<double>(layout.width()), layout};
    encode_into(dict, record, layout, fv.values, options);
    return fv;
}

FeatureVector encode(const DataDictionary& dict, const PatientRecord& record,
                     const EncodeOptions& options) {
    return encode(dict, record, dict.layout(), options);
}

}  // namespace glad
