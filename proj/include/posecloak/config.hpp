#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vendor_json.hpp"

#include "posecloak/extractors.hpp"
#include "posecloak/metrics.hpp"
#include "posecloak/optimizer.hpp"
#include "posecloak/robustness.hpp"

namespace posecloak {

inline constexpr const char* kToolName = "posecloak";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kEnvPrefix = "POSECLOAK_";

/// Parses "16/255" style fractions or plain decimals into a real value.
double parse_budget(const std::string& text);

/// Stable FNV-1a 64-bit hash of a canonical JSON dump, in hex.
std::string config_hash(const nlohmann::json& resolved);

/// Full application configuration: the protect/schedule/eot sections
/// resolved into a ProtectionConfig, plus the extractor descriptor and
/// the evaluation/robustness settings.
struct AppConfig {
    ProtectionConfig protection;
    nlohmann::json extractors = nlohmann::json{{"preset", "toy-default"}};
    std::vector<std::string> eval_metrics = kAllMetrics;
    std::vector<SweepAxis> sweep_axes = default_sweep_axes();
    int animation_frames = 24;
    double animation_jitter = 0.25;
    std::uint64_t animation_seed = 99;

    /// Loads defaults, then the optional config file, then environment
    /// overrides (POSECLOAK_<SECTION>_<KEY>). Unknown keys anywhere are a
    /// hard error.
    static AppConfig load(const std::string& config_path = "",
                          const std::function<const char*(const char*)>& getenv_fn = nullptr);

    /// Re-materializes every setting, defaults included.
    nlohmann::json resolved() const;

    /// Rebuilds a config from a resolved dump (manifest replay).
    static AppConfig from_resolved(const nlohmann::json& resolved);

    std::string hash() const { return config_hash(resolved()); }
};

/// Reproducibility record written before any other run output.
struct RunManifest {
    std::string tool = kToolName;
    std::string version = kToolVersion;
    std::uint64_t seed = 0;
    std::string hash;
    nlohmann::json config;              // resolved AppConfig
    nlohmann::json extractors_resolved; // registry resolution record

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);

    static RunManifest for_run(const AppConfig& cfg, const BundleSpec& bundle_spec);
};

} // namespace posecloak
