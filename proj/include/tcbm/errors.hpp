#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace tcbm {

/// A diffusion coefficient broke its declared bounds, or a derived quantity
/// (time-change step, inverse interval) became inconsistent with them.
class ContractBreach : public std::runtime_error {
public:
    ContractBreach(std::string module, const std::string& what)
        : std::runtime_error(module + ": " + what), module_(std::move(module)) {}

    const std::string& module() const noexcept { return module_; }

    std::optional<std::uint64_t> sample_index() const noexcept { return sample_; }
    void set_sample_index(std::uint64_t s) { sample_ = s; }

private:
    std::string module_;
    std::optional<std::uint64_t> sample_;
};

/// The Brownian path ended before the time change reached the SDE horizon.
/// Recoverable: extend the path and rebuild.
class PathExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration; `field()` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace tcbm
