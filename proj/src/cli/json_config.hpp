#pragma once

#include <CLI11.hpp>

namespace glad::cli {

/// Reads flag values from a JSON object. Accepts either flat
/// {"flag": value} objects or a run manifest, whose "config" member is used.
/// Arrays become repeated values; booleans become true/false. Values are
/// routed to the subcommand parsed on `root`; a manifest naming a different
/// command is rejected.
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(const CLI::App* root) : root_(root) {}

    std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                          std::string prefix) const override;
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;

private:
    const CLI::App* root_;
};

}  // namespace glad::cli
