#include "json_config.hpp"

#include <json.hpp>

namespace glad::cli {

using nlohmann::json;

namespace {

std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

}  // namespace

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool, std::string) const {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options()) {
        if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
        const auto& name = opt->get_lnames().front();
        if (opt->count() > 0) {
            const auto& res = opt->results();
            j[name] = res.size() == 1 ? json(res.front()) : json(res);
        } else if (default_also && !opt->get_default_str().empty()) {
            j[name] = opt->get_default_str();
        }
    }
    return j.dump(2) + "\n";
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
    json j;
    try {
        j = json::parse(input);
    } catch (const json::parse_error& e) {
        throw CLI::ConversionError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    const json& flags = (j.contains("config") && j["config"].is_object()) ? j["config"] : j;

    std::string section;
    if (const auto subs = root_->get_subcommands(); !subs.empty()) section = subs.front()->get_name();
    if (&flags != &j && j.contains("command") && j["command"].is_string() &&
        j["command"].get<std::string>() != section)
        throw CLI::ConversionError("config file is a manifest for '" + j["command"].get<std::string>() +
                                   "', not '" + section + "'");

    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : flags.items()) {
        if (value.is_null()) continue;
        CLI::ConfigItem item;
        item.name = key;
        if (!section.empty()) item.parents = {section};
        if (value.is_array()) {
            for (const auto& v : value) item.inputs.push_back(scalar(v));
        } else if (value.is_object()) {
            throw CLI::ConversionError("config key '" + key + "' must be a scalar or an array");
        } else {
            item.inputs.push_back(scalar(value));
        }
        items.push_back(std::move(item));
    }
    return items;
}

}  // namespace glad::cli
