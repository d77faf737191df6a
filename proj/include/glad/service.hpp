#pragma once

// Concise-model prediction endpoints: POST /predict, GET /health, GET /model.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "glad/modelstore.hpp"

namespace glad {

struct PredictRequest {
    double age = 0.0;
    double bmi = 0.0;
    double baseline_pain = 0.0;
    double symptom_duration = 0.0;
    double walk40m = 0.0;
    double eq5d = 0.0;
    double margin = kHeadlineMargin;

    /// Throws ValidationError naming every missing, non-numeric or
    /// out-of-range field, checked against `dict`.
    static PredictRequest from_json(const nlohmann::json& j, const DataDictionary& dict);
    PatientRecord to_record() const;
};

struct PredictResponse {
    /// Positive means pain improved.
    double predicted_change = 0.0;
    /// baseline - change, within [0, 100].
    double predicted_post_pain = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double margin = 0.0;
    double certainty_pct = 0.0;
    /// Margin the certainty was read at; differs from `margin` when the
    /// bundle does not tabulate the requested one.
    double certainty_margin = 0.0;
    std::optional<std::string> warning;
    std::string dict_edition;
    std::string variant;
    std::string trained_at;

    nlohmann::json to_json() const;
};

/// Prediction for a record holding the bundle's variables and baseline_pain.
/// Throws ValidationError naming the offending fields.
PredictResponse predict_record(const ModelBundle& bundle, const PatientRecord& record, double margin);
/// Deterministic in (bundle, request).
PredictResponse handle_predict(const ModelBundle& bundle, const PredictRequest& request);
/// {status: ok|degraded, model_loaded, dict_hash}
nlohmann::json handle_health(const ModelBundle* bundle);
nlohmann::json handle_model_info(const ModelBundle& bundle);

struct HttpReply {
    int status = 200;
    nlohmann::json body;
};

/// Shares one immutable bundle across requests.
class PredictionService {
public:
    /// A null bundle serves in degraded mode. Throws ArgumentError for bundles
    /// that are not the concise variant.
    explicit PredictionService(std::shared_ptr<const ModelBundle> bundle);

    HttpReply predict(std::string_view body) const;
    HttpReply health() const;
    HttpReply model() const;
    const ModelBundle* bundle() const noexcept { return bundle_.get(); }

private:
    std::shared_ptr<const ModelBundle> bundle_;
};

struct ServeOptions {
    std::string host = "127.0.0.1";
    /// 0 picks a free port.
    int port = 8080;
    std::string cors_origin = "*";
    std::optional<std::filesystem::path> static_dir;
    /// One line per request; nullptr disables logging.
    std::ostream* log = nullptr;
};

class HttpServer {
public:
    HttpServer(const PredictionService& service, ServeOptions options);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds and returns the port. Throws IoError.
    int bind();
    /// Blocks until stop().
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace glad
