#pragma once

// Cohort ingestion, exclusion flowchart, calibrated synthetic cohorts and
// cross-validation fold plans.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "glad/matrix.hpp"
#include "glad/schema.hpp"
#include "glad/truncated_normal.hpp"

namespace glad {

struct Cohort {
    std::string dict_hash;
    Edition edition = Edition::base34;
    FeatureLayout layout;
    Matrix features;
    std::vector<double> outcomes;
    std::vector<std::string> record_ids;

    std::size_t size() const noexcept { return outcomes.size(); }
    /// Digest over features and outcomes, used to tie reports to their data.
    std::string digest() const;
};

enum class ExclusionReason { not_knee_primary, incomplete_data, in_2016_window, no_followup };
std::string_view to_string(ExclusionReason r) noexcept;

/// Registry interruption during which one variable was not collected.
inline constexpr Date kWindowStart{2016, 5, 23};
inline constexpr Date kWindowEnd{2016, 11, 12};

struct ExclusionReport {
    std::size_t total_in = 0;
    /// Always all four reasons, in precedence order.
    std::vector<std::pair<ExclusionReason, std::size_t>> excluded;
    std::size_t included = 0;

    nlohmann::json to_json() const;
};

/// Column names for the admin and outcome fields of the CSV contract.
inline constexpr std::string_view kColJoint = "primary_joint";
inline constexpr std::string_view kColStartDate = "start_date";
inline constexpr std::string_view kColFollowup = "followup_complete";

struct CsvOptions {
    /// Whether the outcome column must be present (training) or may be absent.
    bool require_outcome = true;
};

/// Parses one cell under the kind of `spec`; unparseable text is kept as a
/// string so validation can report it.
Value parse_cell(const VariableSpec& spec, const std::string& cell);

std::vector<PatientRecord> read_csv(const DataDictionary& dict, std::istream& in,
                                    const CsvOptions& options = {});
/// Throws IoError or HeaderMismatch.
std::vector<PatientRecord> load_csv(const DataDictionary& dict, const std::filesystem::path& path,
                                    const CsvOptions& options = {});
void write_csv(const DataDictionary& dict, std::span<const PatientRecord> records, std::ostream& out);
void save_csv(const DataDictionary& dict, std::span<const PatientRecord> records,
              const std::filesystem::path& path);
/// Reads only the header line and returns the edition whose contract it
/// matches, if any.
std::optional<Edition> detect_edition(const std::filesystem::path& path);

/// Keeps knee-primary, complete, out-of-window, followed-up records. Each
/// excluded record is counted under the first failing reason (order of
/// ExclusionReason). Throws EmptyCohort if nothing survives.
std::pair<Cohort, ExclusionReport> apply_exclusions(const DataDictionary& dict,
                                                    std::span<const PatientRecord> records);

/// Encodes records that are already known to be complete.
Cohort make_cohort(const DataDictionary& dict, std::span<const PatientRecord> records);

struct CalibrationTargets {
    double r2 = 0.32;
    double outcome_sd = 22.75;
    double outcome_mean = 14.06;
};

struct SyntheticConfig {
    const DataDictionary* dict = nullptr;
    /// Linear outcome coefficients (VAS points per unit) on continuous predictors.
    std::map<std::string, double> signal;
    double intercept = 0.0;
    double noise_sd = 0.0;
    /// Clip generated outcomes to the outcome range.
    bool truncate = true;

    nlohmann::json to_json() const;
    static SyntheticConfig from_json(const nlohmann::json& j);
};

/// Variance shares of the calibrated signal across the six concise variables,
/// proportional to their published importances, with a direction per variable.
struct SignalShare {
    std::string_view id;
    double weight;
    double direction;
};
std::span<const SignalShare> calibration_shares() noexcept;

/// Sampling distribution used for a continuous predictor.
TruncatedNormal predictor_sampler(const VariableSpec& spec);

/// Throws CalibrationError unless 0 <= r2 < 1, outcome_sd > 0, all finite.
SyntheticConfig calibrate_signal(const DataDictionary& dict, const CalibrationTargets& targets);

/// Synthetic registry rows (knee, follow-up complete, start date outside the
/// 2016 window), deterministic in (config, n, seed).
std::vector<PatientRecord> synthetic_records(const SyntheticConfig& config, std::size_t n,
                                             std::uint64_t seed);
Cohort generate_synthetic(const SyntheticConfig& config, std::size_t n, std::uint64_t seed);

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> assignment;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return assignment.size(); }
    std::vector<std::size_t> test_indices(std::size_t fold) const;
    std::vector<std::size_t> train_indices(std::size_t fold) const;
    std::vector<std::size_t> fold_sizes() const;
    std::string digest() const;
};

/// Shuffled balanced partition: fold sizes differ by at most one. Throws
/// ArgumentError unless 2 <= k <= n.
FoldPlan kfold_plan(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace glad
