#include "glad/cohort.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>

#include "glad/digest.hpp"
#include "glad/errors.hpp"
#include "glad/random.hpp"

namespace glad {

using nlohmann::json;

std::string Cohort::digest() const {
    Sha256 h;
    h.update(dict_hash);
    for (const auto& e : layout.entries()) h.update(e.id).update(std::to_string(e.width));
    h.update(features.data());
    h.update(std::span<const double>(outcomes));
    return h.hex();
}

std::string_view to_string(ExclusionReason r) noexcept {
    switch (r) {
        case ExclusionReason::not_knee_primary: return "not-knee-primary";
        case ExclusionReason::incomplete_data: return "incomplete-data";
        case ExclusionReason::in_2016_window: return "in-2016-window";
        default: return "no-followup";
    }
}

json ExclusionReport::to_json() const {
    json ex = json::array();
    for (const auto& [reason, count] : excluded)
        ex.push_back({{"reason", std::string(to_string(reason))}, {"count", count}});
    return {{"total_in", total_in}, {"excluded", std::move(ex)}, {"included", included}};
}

Cohort make_cohort(const DataDictionary& dict, std::span<const PatientRecord> records) {
    Cohort c;
    c.dict_hash = dict.content_hash();
    c.edition = dict.edition();
    c.layout = dict.layout();
    c.features = Matrix(records.size(), c.layout.width());
    c.outcomes.reserve(records.size());
    c.record_ids.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        encode_into(dict, rec, c.layout, c.features.row(i));
        auto it = rec.values.find(dict.outcome().id);
        std::optional<double> y;
        if (it != rec.values.end()) y = continuous_value(dict.outcome(), it->second);
        if (!y) throw EncodingError("record " + rec.record_id + " has no valid outcome");
        c.outcomes.push_back(*y);
        c.record_ids.push_back(rec.record_id);
    }
    return c;
}

std::pair<Cohort, ExclusionReport> apply_exclusions(const DataDictionary& dict,
                                                    std::span<const PatientRecord> records) {
    ExclusionReport report;
    report.total_in = records.size();
    std::array<std::size_t, 4> counts{};
    std::vector<PatientRecord> kept;
    const ValidateOptions complete_case{.require_outcome = true, .only = {}};
    for (const auto& rec : records) {
        const auto& admin = rec.admin;
        std::optional<ExclusionReason> reason;
        if (admin.primary_joint != Joint::knee) {
            reason = ExclusionReason::not_knee_primary;
        } else if (!admin.start_date || !admin.followup_complete.has_value() ||
                   !validate(dict, rec, complete_case).complete()) {
            reason = ExclusionReason::incomplete_data;
        } else if (*admin.start_date >= kWindowStart && *admin.start_date <= kWindowEnd) {
            reason = ExclusionReason::in_2016_window;
        } else if (!*admin.followup_complete) {
            reason = ExclusionReason::no_followup;
        }
        if (reason) ++counts[static_cast<std::size_t>(*reason)];
        else kept.push_back(rec);
    }
    for (std::size_t r = 0; r < counts.size(); ++r)
        report.excluded.emplace_back(static_cast<ExclusionReason>(r), counts[r]);
    report.included = kept.size();
    if (kept.empty())
        throw EmptyCohort("no records survive exclusions: " + report.to_json().dump());
    return {make_cohort(dict, kept), report};
}

// ---------------------------------------------------------------------------
// Calibrated synthetic cohorts

namespace {

constexpr std::array<SignalShare, 6> kShares{{
    {"baseline_pain", 0.530013, +1.0},
    {"eq5d", 0.065382, -1.0},
    {"walk40m", 0.05466, -1.0},
    {"symptom_duration", 0.054654, -1.0},
    {"bmi", 0.043376, -1.0},
    {"age", 0.037102, +1.0},
}};

}  // namespace

std::span<const SignalShare> calibration_shares() noexcept { return kShares; }

TruncatedNormal predictor_sampler(const VariableSpec& spec) {
    const auto& range = std::get<Continuous>(spec.kind);
    const auto& m = std::get<ContinuousMarginal>(spec.marginal);
    return TruncatedNormal::matching_mean(m.mean, m.sd, range.min, range.max);
}

SyntheticConfig calibrate_signal(const DataDictionary& dict, const CalibrationTargets& t) {
    if (!std::isfinite(t.r2) || !std::isfinite(t.outcome_sd) || !std::isfinite(t.outcome_mean))
        throw CalibrationError("calibration targets must be finite");
    if (t.r2 >= 1.0) throw CalibrationError("r2 must be < 1 (noise-free outcomes are not supported)");
    if (t.r2 < 0.0) throw CalibrationError("r2 must be >= 0");
    if (!(t.outcome_sd > 0.0)) throw CalibrationError("outcome_sd must be > 0");

    SyntheticConfig cfg;
    cfg.dict = &dict;
    cfg.noise_sd = t.outcome_sd * std::sqrt(1.0 - t.r2);
    const double signal_var = t.r2 * t.outcome_sd * t.outcome_sd;
    const double total_weight =
        std::accumulate(kShares.begin(), kShares.end(), 0.0,
                        [](double acc, const SignalShare& s) { return acc + s.weight; });

    double mean_signal = 0.0;
    for (const auto& share : kShares) {
        const auto* spec = dict.find(share.id);
        if (spec == nullptr || !spec->is_continuous())
            throw CalibrationError("dictionary lacks continuous variable '" + std::string(share.id) + "'");
        const auto sampler = predictor_sampler(*spec);
        const double coef = signal_var == 0.0
                                ? 0.0
                                : share.direction *
                                      std::sqrt(share.weight / total_weight * signal_var / sampler.variance());
        cfg.signal[std::string(share.id)] = coef;
        mean_signal += coef * sampler.mean();
    }
    cfg.intercept = t.outcome_mean - mean_signal;
    return cfg;
}

json SyntheticConfig::to_json() const {
    return {{"dict_edition", dict ? std::string(glad::to_string(dict->edition())) : std::string{}},
            {"dict_hash", dict ? dict->content_hash() : std::string{}},
            {"signal", signal},
            {"intercept", intercept},
            {"noise_sd", noise_sd},
            {"truncate", truncate}};
}

SyntheticConfig SyntheticConfig::from_json(const json& j) {
    SyntheticConfig cfg;
    const auto hash = j.at("dict_hash").get<std::string>();
    cfg.dict = dictionary_by_hash(hash);
    if (cfg.dict == nullptr) throw IntegrityError("synthetic config references unknown dictionary " + hash);
    cfg.signal = j.at("signal").get<std::map<std::string, double>>();
    cfg.intercept = j.at("intercept").get<double>();
    cfg.noise_sd = j.at("noise_sd").get<double>();
    cfg.truncate = j.at("truncate").get<bool>();
    return cfg;
}

namespace {

using std::chrono::sys_days;

sys_days to_sys(const Date& d) {
    return sys_days{std::chrono::year{d.year} / std::chrono::month{d.month} / std::chrono::day{d.day}};
}

Date from_sys(sys_days s) {
    const std::chrono::year_month_day ymd{s};
    return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
            static_cast<unsigned>(ymd.day())};
}

// Registry inclusion period.
constexpr Date kPeriodStart{2014, 10, 9};
constexpr Date kPeriodEnd{2022, 11, 12};

Date draw_start_date(Rng& rng) {
    const auto first = to_sys(kPeriodStart);
    const auto total = (to_sys(kPeriodEnd) - first).count() + 1;
    const auto gap_begin = (to_sys(kWindowStart) - first).count();
    const auto gap_len = (to_sys(kWindowEnd) - to_sys(kWindowStart)).count() + 1;
    auto offset = static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(total - gap_len)));
    if (offset >= gap_begin) offset += gap_len;
    return from_sys(first + std::chrono::days{offset});
}

}  // namespace

std::vector<PatientRecord> synthetic_records(const SyntheticConfig& config, std::size_t n,
                                             std::uint64_t seed) {
    if (config.dict == nullptr) throw ArgumentError("synthetic config has no dictionary");
    if (n == 0) throw ArgumentError("synthetic cohort size must be >= 1");
    const auto& dict = *config.dict;
    for (const auto& [id, coef] : config.signal) {
        const auto* spec = dict.find(id);
        if (spec == nullptr || !spec->is_continuous())
            throw ArgumentError("signal variable '" + id + "' is not a continuous predictor");
    }
    if (!(config.noise_sd >= 0.0)) throw ArgumentError("noise_sd must be >= 0");

    // Per-predictor samplers, prepared once.
    struct Sampler {
        const VariableSpec* spec;
        std::optional<TruncatedNormal> normal;
        double p_true = 0.0;
        std::vector<double> cumulative;
        double coef = 0.0;
    };
    std::vector<Sampler> samplers;
    for (const auto& spec : dict.predictors()) {
        Sampler s{&spec, std::nullopt, 0.0, {}, 0.0};
        if (spec.is_continuous()) {
            s.normal = predictor_sampler(spec);
            if (auto it = config.signal.find(spec.id); it != config.signal.end()) s.coef = it->second;
        } else if (spec.is_binary()) {
            s.p_true = std::get<BinaryMarginal>(spec.marginal).proportion();
        } else {
            const auto& counts = std::get<CategoricalMarginal>(spec.marginal).counts;
            const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
            double acc = 0.0;
            for (long c : counts) s.cumulative.push_back(acc += static_cast<double>(c) / total);
        }
        samplers.push_back(std::move(s));
    }
    const auto& out_range = std::get<Continuous>(dict.outcome().kind);

    Rng rng(derive_seed(seed, {kStreamSynth}));
    std::vector<PatientRecord> records(n);
    const int id_width = static_cast<int>(std::to_string(n).size());
    for (std::size_t i = 0; i < n; ++i) {
        auto& rec = records[i];
        std::string num = std::to_string(i + 1);
        rec.record_id = "syn-" + std::string(static_cast<std::size_t>(id_width) - num.size(), '0') + num;
        double y = config.intercept;
        for (const auto& s : samplers) {
            if (s.normal) {
                const double x = s.normal->sample(rng);
                y += s.coef * x;
                rec.values.emplace(s.spec->id, x);
            } else if (s.spec->is_binary()) {
                rec.values.emplace(s.spec->id, rng.bernoulli(s.p_true));
            } else {
                const double u = rng.uniform();
                std::size_t level = 0;
                while (level + 1 < s.cumulative.size() && u >= s.cumulative[level]) ++level;
                rec.values.emplace(s.spec->id, std::get<Categorical>(s.spec->kind).levels[level]);
            }
        }
        y += config.noise_sd * rng.normal();
        if (config.truncate) y = std::clamp(y, out_range.min, out_range.max);
        rec.values.emplace(dict.outcome().id, y);
        rec.admin.primary_joint = Joint::knee;
        rec.admin.start_date = draw_start_date(rng);
        rec.admin.followup_complete = true;
    }
    return records;
}

Cohort generate_synthetic(const SyntheticConfig& config, std::size_t n, std::uint64_t seed) {
    const auto records = synthetic_records(config, n, seed);
    return make_cohort(*config.dict, records);
}

// ---------------------------------------------------------------------------
// Fold plans

FoldPlan kfold_plan(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ArgumentError("fold count must be >= 2");
    if (k > n) throw ArgumentError("fold count " + std::to_string(k) + " exceeds cohort size " + std::to_string(n));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {kStreamFolds}));
    rng.shuffle(std::span<std::size_t>(perm));
    FoldPlan plan{k, std::vector<std::size_t>(n), seed};
    for (std::size_t i = 0; i < n; ++i) plan.assignment[perm[i]] = i % k;
    return plan;
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] != fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto f : assignment) ++sizes[f];
    return sizes;
}

std::string FoldPlan::digest() const {
    Sha256 h;
    h.update(std::to_string(k)).update(":");
    for (auto f : assignment) h.update(std::to_string(f)).update(",");
    return h.hex();
}

}  // namespace glad
