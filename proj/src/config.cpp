#include "posecloak/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace posecloak {

namespace {

using nlohmann::json;

[[noreturn]] void bad_key(const std::string& section, const std::string& key) {
    throw std::invalid_argument("unknown config key '" + section + "." + key + "'");
}

void check_keys(const json& section, const std::string& name, const std::set<std::string>& allowed) {
    for (auto it = section.begin(); it != section.end(); ++it) {
        if (!allowed.contains(it.key())) {
            bad_key(name, it.key());
        }
    }
}

double number_or_fraction(const json& v, const std::string& what) {
    if (v.is_number()) {
        return v.get<double>();
    }
    if (v.is_string()) {
        return parse_budget(v.get<std::string>());
    }
    throw std::invalid_argument(what + " must be a number or a fraction string");
}

std::pair<double, double> range_pair(const json& v, const std::string& what) {
    if (!v.is_array() || v.size() != 2) {
        throw std::invalid_argument(what + " must be a two-element [min, max] array");
    }
    return {v[0].get<double>(), v[1].get<double>()};
}

WindowEnd window_end_from_string(const std::string& s) {
    if (s == "low_noise") return WindowEnd::kLowNoise;
    if (s == "high_noise") return WindowEnd::kHighNoise;
    throw std::invalid_argument("schedule.window_end must be 'low_noise' or 'high_noise'");
}

std::string window_end_to_string(WindowEnd e) {
    return e == WindowEnd::kLowNoise ? "low_noise" : "high_noise";
}

void apply_protect_section(AppConfig& cfg, const json& section) {
    check_keys(section, "protect",
               {"budget", "step_size", "iterations", "decay", "frames", "seed", "lambda_vae",
                "lambda_clip", "lambda_ref", "lambda_frame", "lambda_lpips", "lpips_budget"});
    auto& p = cfg.protection;
    if (section.contains("budget")) p.eta = number_or_fraction(section["budget"], "protect.budget");
    if (section.contains("step_size"))
        p.gamma = number_or_fraction(section["step_size"], "protect.step_size");
    if (section.contains("iterations")) p.iterations = section["iterations"].get<int>();
    if (section.contains("decay")) p.decay = section["decay"].get<double>();
    if (section.contains("frames")) p.frames = section["frames"].get<int>();
    if (section.contains("seed")) p.seed = section["seed"].get<std::uint64_t>();
    if (section.contains("lambda_vae")) p.weights.lambda_vae = section["lambda_vae"].get<double>();
    if (section.contains("lambda_clip"))
        p.weights.lambda_clip = section["lambda_clip"].get<double>();
    if (section.contains("lambda_ref")) p.weights.lambda_ref = section["lambda_ref"].get<double>();
    if (section.contains("lambda_frame"))
        p.weights.lambda_frame = section["lambda_frame"].get<double>();
    if (section.contains("lambda_lpips"))
        p.weights.lambda_lpips = section["lambda_lpips"].get<double>();
    if (section.contains("lpips_budget")) p.weights.zeta = section["lpips_budget"].get<double>();
}

void apply_schedule_section(AppConfig& cfg, const json& section) {
    check_keys(section, "schedule",
               {"kind", "train_steps", "inference_steps", "window", "window_end"});
    auto& s = cfg.protection.schedule;
    if (section.contains("kind")) s.kind = section["kind"].get<std::string>();
    if (section.contains("train_steps")) s.train_steps = section["train_steps"].get<int>();
    if (section.contains("inference_steps"))
        s.inference_steps = section["inference_steps"].get<int>();
    if (section.contains("window")) s.window = section["window"].get<int>();
    if (section.contains("window_end"))
        s.window_end = window_end_from_string(section["window_end"].get<std::string>());
}

void apply_eot_section(AppConfig& cfg, const json& section) {
    check_keys(section, "eot",
               {"enabled", "blur_sigma", "jpeg_quality", "noise_std", "resize_scale"});
    auto& e = cfg.protection.eot;
    if (section.contains("enabled")) e.enabled = section["enabled"].get<bool>();
    if (section.contains("blur_sigma")) {
        std::tie(e.blur_sigma_min, e.blur_sigma_max) =
            range_pair(section["blur_sigma"], "eot.blur_sigma");
    }
    if (section.contains("jpeg_quality")) {
        auto [lo, hi] = range_pair(section["jpeg_quality"], "eot.jpeg_quality");
        e.jpeg_quality_min = static_cast<int>(lo);
        e.jpeg_quality_max = static_cast<int>(hi);
    }
    if (section.contains("noise_std")) {
        std::tie(e.noise_std_min, e.noise_std_max) =
            range_pair(section["noise_std"], "eot.noise_std");
    }
    if (section.contains("resize_scale")) {
        std::tie(e.resize_scale_min, e.resize_scale_max) =
            range_pair(section["resize_scale"], "eot.resize_scale");
    }
}

void apply_evaluate_section(AppConfig& cfg, const json& section) {
    check_keys(section, "evaluate", {"metrics"});
    if (section.contains("metrics")) {
        cfg.eval_metrics = section["metrics"].get<std::vector<std::string>>();
    }
}

void apply_robustness_section(AppConfig& cfg, const json& section) {
    check_keys(section, "robustness",
               {"axes", "animation_frames", "animation_jitter", "animation_seed"});
    if (section.contains("axes")) {
        cfg.sweep_axes.clear();
        for (auto it = section["axes"].begin(); it != section["axes"].end(); ++it) {
            SweepAxis axis;
            axis.kind = countermeasure_from_string(it.key());
            axis.params = it.value().get<std::vector<double>>();
            cfg.sweep_axes.push_back(std::move(axis));
        }
    }
    if (section.contains("animation_frames"))
        cfg.animation_frames = section["animation_frames"].get<int>();
    if (section.contains("animation_jitter"))
        cfg.animation_jitter = section["animation_jitter"].get<double>();
    if (section.contains("animation_seed"))
        cfg.animation_seed = section["animation_seed"].get<std::uint64_t>();
}

void apply_document(AppConfig& cfg, const json& doc) {
    check_keys(doc, "<root>", {"protect", "schedule", "eot", "extractors", "evaluate",
                               "robustness"});
    if (doc.contains("protect")) apply_protect_section(cfg, doc["protect"]);
    if (doc.contains("schedule")) apply_schedule_section(cfg, doc["schedule"]);
    if (doc.contains("eot")) apply_eot_section(cfg, doc["eot"]);
    if (doc.contains("extractors")) {
        BundleSpec::from_json(doc["extractors"]); // validates keys
        cfg.extractors = doc["extractors"];
    }
    if (doc.contains("evaluate")) apply_evaluate_section(cfg, doc["evaluate"]);
    if (doc.contains("robustness")) apply_robustness_section(cfg, doc["robustness"]);
}

json parse_env_value(const std::string& text) {
    json parsed = json::parse(text, nullptr, false);
    if (!parsed.is_discarded()) {
        return parsed;
    }
    return json(text); // plain string (e.g. "16/255", "linear")
}

/// Environment overrides: POSECLOAK_<SECTION>_<KEY>=<value>. The value is
/// parsed as JSON when possible, otherwise taken as a string.
void apply_env(AppConfig& cfg, const std::function<const char*(const char*)>& getenv_fn) {
    static const std::map<std::string, std::vector<std::string>> kSections = {
        {"protect",
         {"budget", "step_size", "iterations", "decay", "frames", "seed", "lambda_vae",
          "lambda_clip", "lambda_ref", "lambda_frame", "lambda_lpips", "lpips_budget"}},
        {"schedule", {"kind", "train_steps", "inference_steps", "window", "window_end"}},
        {"eot", {"enabled", "blur_sigma", "jpeg_quality", "noise_std", "resize_scale"}},
        {"extractors", {"preset"}},
        {"evaluate", {"metrics"}},
        {"robustness", {"animation_frames", "animation_jitter", "animation_seed"}},
    };
    for (const auto& [section, keys] : kSections) {
        json patch = json::object();
        for (const auto& key : keys) {
            std::string var = kEnvPrefix;
            for (char c : section + "_" + key) {
                var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            }
            const char* value = getenv_fn(var.c_str());
            if (value != nullptr) {
                patch[key] = parse_env_value(value);
            }
        }
        if (!patch.empty()) {
            json doc = {{section, patch}};
            apply_document(cfg, doc);
        }
    }
}

} // namespace

double parse_budget(const std::string& text) {
    auto slash = text.find('/');
    try {
        if (slash == std::string::npos) {
            std::size_t used = 0;
            double v = std::stod(text, &used);
            if (used != text.size()) {
                throw std::invalid_argument("");
            }
            return v;
        }
        double num = std::stod(text.substr(0, slash));
        double den = std::stod(text.substr(slash + 1));
        if (den == 0.0) {
            throw std::invalid_argument("");
        }
        return num / den;
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse '" + text + "' as a number or fraction");
    }
}

std::string config_hash(const nlohmann::json& resolved) {
    std::string dump = resolved.dump();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    std::ostringstream out;
    out << std::hex;
    out.width(16);
    out.fill('0');
    out << h;
    return out.str();
}

AppConfig AppConfig::load(const std::string& config_path,
                          const std::function<const char*(const char*)>& getenv_fn) {
    AppConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            throw std::runtime_error("cannot open config file: " + config_path);
        }
        json doc = json::parse(in);
        apply_document(cfg, doc);
    }
    auto env = getenv_fn ? getenv_fn
                         : std::function<const char*(const char*)>(
                               [](const char* name) { return std::getenv(name); });
    apply_env(cfg, env);
    return cfg;
}

nlohmann::json AppConfig::resolved() const {
    const auto& p = protection;
    json axes = json::object();
    for (const auto& axis : sweep_axes) {
        axes[to_string(axis.kind)] = axis.params;
    }
    return json{
        {"protect",
         {{"budget", p.eta},
          {"step_size", p.gamma},
          {"iterations", p.iterations},
          {"decay", p.decay},
          {"frames", p.frames},
          {"seed", p.seed},
          {"lambda_vae", p.weights.lambda_vae},
          {"lambda_clip", p.weights.lambda_clip},
          {"lambda_ref", p.weights.lambda_ref},
          {"lambda_frame", p.weights.lambda_frame},
          {"lambda_lpips", p.weights.lambda_lpips},
          {"lpips_budget", p.weights.zeta}}},
        {"schedule",
         {{"kind", p.schedule.kind},
          {"train_steps", p.schedule.train_steps},
          {"inference_steps", p.schedule.inference_steps},
          {"window", p.schedule.window},
          {"window_end", window_end_to_string(p.schedule.window_end)}}},
        {"eot",
         {{"enabled", p.eot.enabled},
          {"blur_sigma", {p.eot.blur_sigma_min, p.eot.blur_sigma_max}},
          {"jpeg_quality", {p.eot.jpeg_quality_min, p.eot.jpeg_quality_max}},
          {"noise_std", {p.eot.noise_std_min, p.eot.noise_std_max}},
          {"resize_scale", {p.eot.resize_scale_min, p.eot.resize_scale_max}}}},
        {"extractors", extractors},
        {"evaluate", {{"metrics", eval_metrics}}},
        {"robustness",
         {{"axes", axes},
          {"animation_frames", animation_frames},
          {"animation_jitter", animation_jitter},
          {"animation_seed", animation_seed}}}};
}

AppConfig AppConfig::from_resolved(const nlohmann::json& resolved) {
    AppConfig cfg;
    apply_document(cfg, resolved);
    return cfg;
}

nlohmann::json RunManifest::to_json() const {
    return nlohmann::json{{"tool", tool},
                          {"version", version},
                          {"seed", seed},
                          {"config_hash", hash},
                          {"config", config},
                          {"extractors_resolved", extractors_resolved}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    RunManifest m;
    m.tool = j.at("tool").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.hash = j.at("config_hash").get<std::string>();
    m.config = j.at("config");
    m.extractors_resolved = j.at("extractors_resolved");
    return m;
}

RunManifest RunManifest::for_run(const AppConfig& cfg, const BundleSpec& bundle_spec) {
    RunManifest m;
    m.seed = cfg.protection.seed;
    m.config = cfg.resolved();
    m.hash = config_hash(m.config);
    m.extractors_resolved = bundle_spec.to_json();
    return m;
}

} // namespace posecloak
