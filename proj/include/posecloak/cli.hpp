#pragma once

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace posecloak {

/// Command-line entry points. Each returns a process exit status and
/// reports problems on `err` instead of throwing across main().

struct ProtectArgs {
    std::string input;
    std::string output;
    std::string config_path;
    std::string replay_manifest; // resolved manifest to reproduce
    std::optional<std::string> budget;
    std::optional<std::string> step_size;
    std::optional<int> iterations;
    std::optional<double> decay;
    std::optional<int> frames;
    std::optional<double> lpips_budget;
    std::optional<std::uint64_t> seed;
};

int cmd_protect(const ProtectArgs& args, std::ostream& out = std::cout,
                std::ostream& err = std::cerr);

struct EvaluateArgs {
    std::string reference_dir;
    std::string generated_dir;
    std::string output_path; // empty: print to stdout
    std::string config_path;
    std::vector<std::string> metrics; // empty: config selection
};

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out = std::cout,
                 std::ostream& err = std::cerr);

struct RobustnessArgs {
    std::string input;  // protected image
    std::string clean;  // clean counterpart (sweep baseline)
    std::string output; // sweep table path, or purified image path
    std::string config_path;
    std::vector<std::string> sweep_specs;   // "jpeg:50,75,95"
    std::vector<std::string> purify_inputs; // exactly five images
    std::optional<std::uint64_t> seed;
};

int cmd_robustness(const RobustnessArgs& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr);

} // namespace posecloak
