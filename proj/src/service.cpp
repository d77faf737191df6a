#include "glad/service.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>

#include <httplib.h>

#include "glad/errors.hpp"
#include "glad/text.hpp"

namespace glad {

using nlohmann::json;

PredictRequest PredictRequest::from_json(const json& j, const DataDictionary& dict) {
    if (!j.is_object()) throw ValidationError("request body must be a JSON object", {});
    PatientRecord rec;
    for (auto id : kConciseIds) {
        const auto it = j.find(std::string(id));
        if (it == j.end() || it->is_null()) continue;
        if (it->is_number()) rec.values.emplace(std::string(id), it->get<double>());
        else rec.values.emplace(std::string(id), it->is_string() ? it->get<std::string>() : it->dump());
    }
    ValidateOptions opts;
    opts.only.assign(std::begin(kConciseIds), std::end(kConciseIds));
    auto report = validate(dict, rec, opts);
    auto fields = report.field_ids();

    PredictRequest req;
    if (const auto it = j.find("margin"); it != j.end() && !it->is_null()) {
        if (it->is_number() && std::isfinite(it->get<double>()) && it->get<double>() > 0.0)
            req.margin = it->get<double>();
        else
            fields.emplace_back("margin");
    }
    if (!fields.empty()) {
        std::string detail;
        for (const auto& v : report.violations)
            detail += (detail.empty() ? "" : "; ") + v.id + ": " + std::string(to_string(v.reason));
        if (std::find(fields.begin(), fields.end(), "margin") != fields.end())
            detail += std::string(detail.empty() ? "" : "; ") + "margin: must be a number > 0";
        throw ValidationError("invalid prediction request (" + detail + ")", fields);
    }
    auto get = [&](std::string_view id) { return *continuous_value(*dict.find(id), rec.values.find(id)->second); };
    req.age = get("age");
    req.bmi = get("bmi");
    req.baseline_pain = get("baseline_pain");
    req.symptom_duration = get("symptom_duration");
    req.walk40m = get("walk40m");
    req.eq5d = get("eq5d");
    return req;
}

PatientRecord PredictRequest::to_record() const {
    PatientRecord rec;
    rec.record_id = "request";
    rec.values = {{"age", age},         {"bmi", bmi},         {"baseline_pain", baseline_pain},
                  {"symptom_duration", symptom_duration}, {"walk40m", walk40m}, {"eq5d", eq5d}};
    return rec;
}

json PredictResponse::to_json() const {
    json j = {{"predicted_change", predicted_change},
              {"predicted_post_pain", predicted_post_pain},
              {"interval", {{"lower", lower}, {"upper", upper}, {"margin", margin}}},
              {"certainty_pct", certainty_pct},
              {"certainty_margin", certainty_margin},
              {"model_info", {{"dict_edition", dict_edition}, {"variant", variant}, {"trained_at", trained_at}}}};
    if (warning) j["warning"] = *warning;
    return j;
}

PredictResponse predict_record(const ModelBundle& bundle, const PatientRecord& record, double margin) {
    const auto* dict = dictionary_by_hash(bundle.dict_hash);
    if (dict == nullptr) throw IntegrityError("bundle dictionary is not built in");
    if (!(margin > 0.0) || !std::isfinite(margin)) throw ValidationError("margin must be > 0", {"margin"});
    ValidateOptions opts;
    opts.only = bundle.features;
    if (std::find(opts.only.begin(), opts.only.end(), "baseline_pain") == opts.only.end())
        opts.only.emplace_back("baseline_pain");
    const auto report = validate(*dict, record, opts);
    if (!report.complete()) {
        std::string detail;
        for (const auto& v : report.violations)
            detail += (detail.empty() ? "" : "; ") + v.id + ": " + std::string(to_string(v.reason));
        throw ValidationError("invalid record (" + detail + ")", report.field_ids());
    }
    const auto x = encode(*dict, record, bundle.forest.layout);
    const double baseline =
        *continuous_value(*dict->find("baseline_pain"), record.values.find("baseline_pain")->second);

    PredictResponse r;
    r.predicted_change = predict(bundle.forest, x);
    r.predicted_post_pain = std::clamp(baseline - r.predicted_change, 0.0, 100.0);
    r.margin = margin;
    r.lower = std::clamp(r.predicted_post_pain - margin, 0.0, 100.0);
    r.upper = std::clamp(r.predicted_post_pain + margin, 0.0, 100.0);
    const auto c = bundle.certainty_at(margin);
    r.certainty_pct = 100.0 * c.rho;
    r.certainty_margin = c.margin;
    if (!c.exact)
        r.warning = "margin " + format_double(margin) + " is not tabulated; certainty taken at margin " +
                    format_double(c.margin);
    r.dict_edition = std::string(to_string(bundle.dict_edition));
    r.variant = bundle.variant.to_string();
    r.trained_at = bundle.training_digest;
    return r;
}

PredictResponse handle_predict(const ModelBundle& bundle, const PredictRequest& request) {
    return predict_record(bundle, request.to_record(), request.margin);
}

json handle_health(const ModelBundle* bundle) {
    return {{"status", bundle ? "ok" : "degraded"},
            {"model_loaded", bundle != nullptr},
            {"dict_hash", bundle ? json(bundle->dict_hash) : json(nullptr)}};
}

json handle_model_info(const ModelBundle& bundle) {
    const auto full = bundle_to_json(bundle);
    auto table = json::array();
    for (const auto& [margin, r] : bundle.certainty) {
        json row = {{"margin", margin}, {"certainty_pct", 100.0 * r}};
        if (auto it = bundle.certainty_average.find(margin); it != bundle.certainty_average.end())
            row["average_pct"] = 100.0 * it->second;
        table.push_back(row);
    }
    json inputs = json::array();
    const auto* dict = dictionary_by_hash(bundle.dict_hash);
    for (const auto& id : bundle.features) {
        const auto* spec = dict ? dict->find(id) : nullptr;
        json in = {{"id", id}};
        if (spec != nullptr) {
            in["prompt"] = spec->prompt;
            in["units"] = spec->units;
            if (const auto* c = std::get_if<Continuous>(&spec->kind)) {
                in["min"] = c->min;
                in["max"] = c->max;
            }
        }
        inputs.push_back(in);
    }
    return {{"dict_edition", full["dict_edition"]},
            {"dict_hash", bundle.dict_hash},
            {"variant", full["variant"]},
            {"features", bundle.features},
            {"inputs", inputs},
            {"hyper", full["hyper"]},
            {"trained_at", bundle.training_digest},
            {"certainty", full["certainty"]},
            {"certainty_average", full["certainty_average"]},
            {"certainty_table", table},
            {"evaluation", full["evaluation"]}};
}

PredictionService::PredictionService(std::shared_ptr<const ModelBundle> bundle) : bundle_(std::move(bundle)) {
    if (bundle_ && bundle_->variant != ModelVariant::concise())
        throw ArgumentError("the service only serves concise bundles (got " + bundle_->variant.to_string() + ")");
}

namespace {

HttpReply error_reply(int status, const std::string& message, const std::vector<std::string>& fields = {}) {
    return {status, {{"error", message}, {"fields", fields}}};
}

HttpReply no_model() { return error_reply(503, "no model loaded"); }

}  // namespace

HttpReply PredictionService::predict(std::string_view body) const {
    if (!bundle_) return no_model();
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) return error_reply(400, "request body is not valid JSON");
    try {
        const auto* dict = dictionary_by_hash(bundle_->dict_hash);
        if (dict == nullptr) return error_reply(500, "bundle dictionary is not built in");
        return {200, handle_predict(*bundle_, PredictRequest::from_json(j, *dict)).to_json()};
    } catch (const ValidationError& e) {
        return error_reply(422, e.what(), e.fields());
    } catch (const EncodingError& e) {
        return error_reply(422, e.what());
    } catch (const std::exception& e) {
        return error_reply(500, e.what());
    }
}

HttpReply PredictionService::health() const { return {200, handle_health(bundle_.get())}; }

HttpReply PredictionService::model() const {
    if (!bundle_) return no_model();
    return {200, handle_model_info(*bundle_)};
}

struct HttpServer::Impl {
    const PredictionService& service;
    ServeOptions options;
    httplib::Server server;
    std::atomic<std::uint64_t> next_id{1};
    std::mutex log_mutex;
    int port = -1;

    Impl(const PredictionService& s, ServeOptions o) : service(s), options(std::move(o)) {}

    void send(httplib::Response& res, const HttpReply& reply) {
        res.status = reply.status;
        res.set_content(reply.body.dump(), "application/json");
    }

    void configure() {
        server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                    {"Access-Control-Allow-Headers", "Content-Type, X-Request-Id"},
                                    {"Access-Control-Expose-Headers", "X-Request-Id"}});
        server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
            auto id = req.get_header_value("X-Request-Id");
            if (id.empty()) {
                char buf[24];
                std::snprintf(buf, sizeof buf, "req-%06llu",
                              static_cast<unsigned long long>(next_id.fetch_add(1)));
                id = buf;
            }
            res.set_header("X-Request-Id", id);
            return httplib::Server::HandlerResponse::Unhandled;
        });
        server.set_logger([this](const httplib::Request& req, const httplib::Response& res) {
            if (options.log == nullptr) return;
            std::lock_guard lock(log_mutex);
            *options.log << "request_id=" << res.get_header_value("X-Request-Id") << " method=" << req.method
                         << " path=" << req.path << " status=" << res.status << '\n'
                         << std::flush;
        });
        server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        server.Get("/health", [this](const httplib::Request&, httplib::Response& res) { send(res, service.health()); });
        server.Get("/model", [this](const httplib::Request&, httplib::Response& res) { send(res, service.model()); });
        server.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
            send(res, service.predict(req.body));
        });
        if (options.static_dir && !server.set_mount_point("/", options.static_dir->string()))
            throw IoError("static directory " + options.static_dir->string() + " does not exist");
    }
};

HttpServer::HttpServer(const PredictionService& service, ServeOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
    impl_->configure();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
    auto& s = impl_->server;
    const auto& o = impl_->options;
    if (o.port == 0) impl_->port = s.bind_to_any_port(o.host);
    else impl_->port = s.bind_to_port(o.host, o.port) ? o.port : -1;
    if (impl_->port < 0) throw IoError("cannot bind " + o.host + ":" + std::to_string(o.port));
    return impl_->port;
}

void HttpServer::run() {
    if (impl_->port < 0) bind();
    impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace glad
