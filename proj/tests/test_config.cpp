#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>

#include "posecloak/config.hpp"

using namespace posecloak;
namespace fs = std::filesystem;

namespace {

fs::path write_temp_config(const std::string& name, const nlohmann::json& doc) {
    fs::path dir = fs::temp_directory_path() / "posecloak_config_tests";
    fs::create_directories(dir);
    fs::path path = dir / name;
    std::ofstream out(path);
    out << doc.dump(2);
    return path;
}

/// getenv stand-in backed by a map.
struct FakeEnv {
    std::map<std::string, std::string> vars;
    std::function<const char*(const char*)> fn() {
        return [this](const char* name) -> const char* {
            auto it = vars.find(name);
            return it == vars.end() ? nullptr : it->second.c_str();
        };
    }
};

} // namespace

TEST_SUITE("config") {

TEST_CASE("parse_budget accepts fractions and decimals") {
    CHECK(parse_budget("16/255") == doctest::Approx(16.0 / 255.0).epsilon(1e-12));
    CHECK(parse_budget("0.05") == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(parse_budget("2/255") == doctest::Approx(2.0 / 255.0).epsilon(1e-12));
    CHECK_THROWS_AS(parse_budget("sixteen"), std::invalid_argument);
    CHECK_THROWS_AS(parse_budget("1/0"), std::invalid_argument);
}

TEST_CASE("defaults carry the published values") {
    AppConfig cfg = AppConfig::load("", [](const char*) -> const char* { return nullptr; });
    CHECK(cfg.protection.eta == doctest::Approx(16.0 / 255.0));
    CHECK(cfg.protection.gamma == doctest::Approx(2.0 / 255.0));
    CHECK(cfg.protection.iterations == 200);
    CHECK(cfg.protection.decay == 0.5);
    CHECK(cfg.protection.frames == 5);
    CHECK(cfg.protection.weights.lambda_vae == 10.0);
    CHECK(cfg.protection.weights.lambda_clip == 10.0);
    CHECK(cfg.protection.weights.lambda_ref == 100.0);
    CHECK(cfg.protection.weights.lambda_frame == 1.0);
    CHECK(cfg.protection.weights.lambda_lpips == 10.0);
    CHECK(cfg.protection.weights.zeta == 0.1);
    CHECK(cfg.protection.schedule.kind == "scaled_linear");
    CHECK(cfg.protection.schedule.train_steps == 1000);
    CHECK(cfg.protection.schedule.inference_steps == 25);
    CHECK(cfg.protection.schedule.window == 10);
    CHECK(cfg.protection.eot.enabled);
}

TEST_CASE("config files override defaults section by section") {
    nlohmann::json doc = {
        {"protect", {{"budget", "32/255"}, {"iterations", 50}, {"lambda_frame", 2.5}}},
        {"schedule", {{"kind", "linear"}, {"window", 4}, {"window_end", "high_noise"}}},
        {"eot", {{"enabled", false}, {"noise_std", {0.02, 0.04}}}},
        {"evaluate", {{"metrics", {"psnr", "fid"}}}},
        {"robustness", {{"axes", {{"jpeg", {50, 75}}}}}},
    };
    fs::path path = write_temp_config("override.json", doc);
    AppConfig cfg =
        AppConfig::load(path.string(), [](const char*) -> const char* { return nullptr; });
    CHECK(cfg.protection.eta == doctest::Approx(32.0 / 255.0));
    CHECK(cfg.protection.iterations == 50);
    CHECK(cfg.protection.weights.lambda_frame == 2.5);
    CHECK(cfg.protection.schedule.kind == "linear");
    CHECK(cfg.protection.schedule.window == 4);
    CHECK(cfg.protection.schedule.window_end == WindowEnd::kHighNoise);
    CHECK(cfg.resolved()["schedule"]["window_end"] == "high_noise");
    CHECK_FALSE(cfg.protection.eot.enabled);
    CHECK(cfg.protection.eot.noise_std_min == 0.02);
    CHECK(cfg.eval_metrics == std::vector<std::string>{"psnr", "fid"});
    REQUIRE(cfg.sweep_axes.size() == 1);
    CHECK(cfg.sweep_axes[0].kind == CountermeasureKind::kJpeg);
}

TEST_CASE("unknown keys are hard errors") {
    fs::path bad_root = write_temp_config("bad_root.json", {{"protections", {{"budget", 1}}}});
    CHECK_THROWS_AS(AppConfig::load(bad_root.string()), std::invalid_argument);

    fs::path bad_key = write_temp_config("bad_key.json", {{"protect", {{"bugdet", "16/255"}}}});
    CHECK_THROWS_AS(AppConfig::load(bad_key.string()), std::invalid_argument);

    fs::path bad_sched =
        write_temp_config("bad_sched.json", {{"schedule", {{"windows", 10}}}});
    CHECK_THROWS_AS(AppConfig::load(bad_sched.string()), std::invalid_argument);
}

TEST_CASE("environment variables override file values") {
    nlohmann::json doc = {{"protect", {{"iterations", 50}}}};
    fs::path path = write_temp_config("env.json", doc);
    FakeEnv env;
    env.vars["POSECLOAK_PROTECT_ITERATIONS"] = "75";
    env.vars["POSECLOAK_PROTECT_BUDGET"] = "8/255";
    env.vars["POSECLOAK_SCHEDULE_KIND"] = "linear";
    env.vars["POSECLOAK_EOT_ENABLED"] = "false";
    AppConfig cfg = AppConfig::load(path.string(), env.fn());
    CHECK(cfg.protection.iterations == 75);
    CHECK(cfg.protection.eta == doctest::Approx(8.0 / 255.0));
    CHECK(cfg.protection.schedule.kind == "linear");
    CHECK_FALSE(cfg.protection.eot.enabled);
}

TEST_CASE("resolved config round-trips through from_resolved") {
    FakeEnv env;
    env.vars["POSECLOAK_PROTECT_SEED"] = "1234";
    env.vars["POSECLOAK_PROTECT_DECAY"] = "0.25";
    AppConfig cfg = AppConfig::load("", env.fn());
    nlohmann::json resolved = cfg.resolved();
    AppConfig replay = AppConfig::from_resolved(resolved);
    CHECK(replay.resolved() == resolved);
    CHECK(replay.protection.seed == 1234);
    CHECK(replay.protection.decay == 0.25);
}

TEST_CASE("config hash is stable and sensitive") {
    AppConfig a = AppConfig::load("", [](const char*) -> const char* { return nullptr; });
    AppConfig b = a;
    CHECK(a.hash() == b.hash());
    b.protection.iterations = 13;
    CHECK(a.hash() != b.hash());
    CHECK(a.hash().size() == 16);
}

TEST_CASE("manifests serialize and replay") {
    AppConfig cfg = AppConfig::load("", [](const char*) -> const char* { return nullptr; });
    cfg.protection.seed = 7;
    BundleSpec spec = BundleSpec::preset("toy-default");
    RunManifest manifest = RunManifest::for_run(cfg, spec);
    CHECK(manifest.seed == 7);
    CHECK(manifest.hash == cfg.hash());

    nlohmann::json j = manifest.to_json();
    RunManifest back = RunManifest::from_json(j);
    CHECK(back.seed == manifest.seed);
    CHECK(back.hash == manifest.hash);
    AppConfig replay = AppConfig::from_resolved(back.config);
    CHECK(replay.hash() == manifest.hash);
}

TEST_CASE("extractors section rejects malformed role entries") {
    nlohmann::json doc = {{"extractors", {{"preset", "toy-default"}, {"encoder", {{"name", "toy"}}}}}};
    fs::path path = write_temp_config("extractors_mixed.json", doc);
    CHECK_THROWS(AppConfig::load(path.string()));
}

} // TEST_SUITE
