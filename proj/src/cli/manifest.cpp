#include "glad/manifest.hpp"

#include <fstream>

#include "glad/digest.hpp"
#include "glad/errors.hpp"

namespace glad {

void RunManifest::add_input(const std::string& role, const std::filesystem::path& path) {
    inputs[role] = {path.string(), sha256_file(path.string())};
}

void RunManifest::add_output(const std::string& name, std::string_view bytes) { outputs[name] = sha256_hex(bytes); }

nlohmann::json RunManifest::to_json() const {
    nlohmann::json in = nlohmann::json::object();
    for (const auto& [role, d] : inputs) in[role] = {{"path", d.path}, {"sha256", d.sha256}};
    return {{"command", command}, {"config", config}, {"inputs", in}, {"outputs", outputs},
            {"tool_version", tool_version}};
}

void RunManifest::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace glad
