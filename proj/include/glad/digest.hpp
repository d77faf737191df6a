#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace glad {

/// Incremental SHA-256 (OpenSSL EVP underneath).
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(Sha256&&) noexcept;
    Sha256& operator=(Sha256&&) noexcept;

    Sha256& update(std::string_view bytes);
    /// Hashes the IEEE-754 bit patterns in little-endian order.
    Sha256& update(std::span<const double> values);
    std::string hex();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(std::string_view bytes);
/// Hex digest of a file's bytes; throws IoError.
std::string sha256_file(const std::string& path);

}  // namespace glad
