#pragma once

// Versioned JSON persistence of a trained forest with its dictionary
// identity and margin certainty table.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glad/evaluation.hpp"
#include "glad/forest.hpp"
#include "glad/schema.hpp"
#include "glad/selection.hpp"

namespace glad {

inline constexpr int kBundleFormatVersion = 1;
inline constexpr std::string_view kBundleSuffix = ".glad-model.json";

struct ModelBundle {
    int format_version = kBundleFormatVersion;
    Edition dict_edition = Edition::base34;
    std::string dict_hash;
    ModelVariant variant = ModelVariant::full();
    /// Variable ids in layout order.
    std::vector<std::string> features;
    ForestModel forest;
    /// margin -> held-out rho of this model; always holds the headline margin.
    std::map<double, double> certainty;
    /// margin -> held-out rho of the average model on the same split.
    std::map<double, double> certainty_average;
    std::string training_digest;
    /// Held-out summary of the run that produced the certainty table.
    double cv_rmse = 0.0;
    double cv_r2 = 0.0;
    std::size_t cv_folds = 0;

    /// Certainty at `margin`, or at the nearest tabulated margin (ties to the
    /// smaller) with `exact` set false.
    struct Lookup {
        double margin;
        double rho;
        bool exact;
    };
    Lookup certainty_at(double margin) const;
};

/// Throws ValidationError when the headline margin has no certainty entry,
/// IntegrityError on structural problems.
void check_bundle(const ModelBundle& bundle);

nlohmann::json bundle_to_json(const ModelBundle& bundle);
/// Throws FormatVersionMismatch, IntegrityError or ValidationError.
ModelBundle bundle_from_json(const nlohmann::json& j);

/// Compact JSON with sorted keys; equal bundles give equal bytes.
std::string serialize_bundle(const ModelBundle& bundle);
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
/// Throws IoError when the file cannot be read.
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace glad
