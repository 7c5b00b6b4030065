#include <CLI11.hpp>

#include "posecloak/cli.hpp"
#include "posecloak/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Protective perturbations against pose-driven image animation"};
    app.set_version_flag("--version", posecloak::kToolVersion);
    app.require_subcommand(1);

    posecloak::ProtectArgs protect_args;
    auto* protect = app.add_subcommand("protect", "Optimize and write a protected image");
    protect->add_option("--input", protect_args.input, "Input image (PNG or JPEG)")->required();
    protect->add_option("--output", protect_args.output, "Protected PNG path")->required();
    protect->add_option("--config", protect_args.config_path, "Config file (JSON)");
    protect->add_option("--replay", protect_args.replay_manifest,
                        "Run manifest to reproduce (overrides --config)");
    protect->add_option("--seed", protect_args.seed, "Root seed");
    protect->add_option("--budget", protect_args.budget, "L-inf budget, e.g. 16/255");
    protect->add_option("--iterations", protect_args.iterations, "PGD iterations");
    protect->add_option("--step-size", protect_args.step_size, "Step size, e.g. 2/255");
    protect->add_option("--decay", protect_args.decay, "Momentum decay factor");
    protect->add_option("--frames", protect_args.frames, "Pose repeat count F");
    protect->add_option("--lpips-budget", protect_args.lpips_budget, "Perceptual budget zeta");

    posecloak::EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "Score generated frames against a reference");
    evaluate->add_option("--reference", eval_args.reference_dir, "Directory of reference frames")
        ->required();
    evaluate->add_option("--generated", eval_args.generated_dir,
                         "Directory of generated frames (or per-video subdirectories)")
        ->required();
    evaluate->add_option("--output", eval_args.output_path, "Report path (default: stdout)");
    evaluate->add_option("--config", eval_args.config_path, "Config file (JSON)");
    evaluate->add_option("--metrics", eval_args.metrics, "Metric subset")->delimiter(',');

    posecloak::RobustnessArgs robust_args;
    auto* robustness =
        app.add_subcommand("robustness", "Countermeasure sweeps and the interpolation purifier");
    robustness->add_option("--input", robust_args.input, "Protected image");
    robustness->add_option("--clean", robust_args.clean, "Clean counterpart image");
    robustness->add_option("--output", robust_args.output, "Output path")->required();
    robustness->add_option("--config", robust_args.config_path, "Config file (JSON)");
    robustness->add_option("--sweep", robust_args.sweep_specs,
                           "Axis spec kind:p1,p2,... (repeatable; default: all axes)");
    robustness->add_option("--purify", robust_args.purify_inputs,
                           "Five protected images; writes their purified combination");
    robustness->add_option("--seed", robust_args.seed, "Downstream simulation seed");

    CLI11_PARSE(app, argc, argv);

    if (protect->parsed()) {
        return posecloak::cmd_protect(protect_args);
    }
    if (evaluate->parsed()) {
        return posecloak::cmd_evaluate(eval_args);
    }
    if (robustness->parsed()) {
        if (robust_args.purify_inputs.empty() &&
            (robust_args.input.empty() || robust_args.clean.empty())) {
            std::cerr << "robustness: sweep mode requires --input and --clean\n";
            return 1;
        }
        return posecloak::cmd_robustness(robust_args);
    }
    return 1;
}
