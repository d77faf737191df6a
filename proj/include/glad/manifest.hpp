#pragma once

// Run manifests: everything needed to repeat a command, written next to its
// artifacts. A manifest can be passed back through --config.

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace glad {

struct FileDigest {
    std::string path;
    std::string sha256;
};

struct RunManifest {
    std::string command;
    /// Resolved flag values keyed by long flag name.
    nlohmann::json config = nlohmann::json::object();
    std::map<std::string, FileDigest> inputs;
    /// Artifact file name -> sha256 of its bytes.
    std::map<std::string, std::string> outputs;
    std::string tool_version;

    void add_input(const std::string& role, const std::filesystem::path& path);
    void add_output(const std::string& name, std::string_view bytes);
    nlohmann::json to_json() const;
    void save(const std::filesystem::path& path) const;
};

}  // namespace glad
