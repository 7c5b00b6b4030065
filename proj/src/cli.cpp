#include "posecloak/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "posecloak/config.hpp"
#include "posecloak/downstream.hpp"
#include "posecloak/image_io.hpp"
#include "posecloak/metrics.hpp"

namespace posecloak {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

AppConfig load_config_for(const std::string& config_path, const std::string& replay_manifest) {
    if (!replay_manifest.empty()) {
        std::ifstream in(replay_manifest);
        if (!in) {
            throw std::runtime_error("cannot open manifest: " + replay_manifest);
        }
        RunManifest manifest = RunManifest::from_json(json::parse(in));
        return AppConfig::from_resolved(manifest.config);
    }
    return AppConfig::load(config_path);
}

void apply_flag_overrides(AppConfig& cfg, const ProtectArgs& args) {
    auto& p = cfg.protection;
    if (args.budget) p.eta = parse_budget(*args.budget);
    if (args.step_size) p.gamma = parse_budget(*args.step_size);
    if (args.iterations) p.iterations = *args.iterations;
    if (args.decay) p.decay = *args.decay;
    if (args.frames) p.frames = *args.frames;
    if (args.lpips_budget) p.weights.zeta = *args.lpips_budget;
    if (args.seed) p.seed = *args.seed;
}

json trace_record(int iteration, const IterationRecord& rec) {
    return json{{"iteration", iteration},
                {"vae", rec.loss.vae},
                {"clip", rec.loss.clip},
                {"reference", rec.loss.reference},
                {"frame", rec.loss.frame},
                {"lpips_penalty", rec.loss.lpips_penalty},
                {"total", rec.loss.total},
                {"delta_linf", rec.delta_linf},
                {"transform", to_string(rec.transform)},
                {"transform_value", rec.transform_value},
                {"timestep", rec.timestep}};
}

void write_trace(const std::string& path, const OptimizationTrace& trace,
                 const std::string& hash) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open trace file: " + path);
    }
    for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
        out << trace_record(static_cast<int>(i) + 1, trace.iterations[i]).dump() << '\n';
    }
    json meta = {{"meta",
                  {{"seed", trace.metadata.seed},
                   {"config_hash", hash},
                   {"budget", trace.metadata.eta},
                   {"step_size", trace.metadata.gamma},
                   {"iterations", trace.metadata.iterations},
                   {"decay", trace.metadata.decay},
                   {"frames", trace.metadata.frames}}}};
    out << meta.dump() << '\n';
}

std::vector<fs::path> list_frames(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

FrameSequence read_frames(const fs::path& dir, std::ostream& err) {
    FrameSequence frames;
    for (const auto& path : list_frames(dir)) {
        ImageReadInfo info;
        frames.push_back(read_image(path.string(), &info));
        if (info.lossy) {
            err << "warning: " << path.string()
                << " is lossy-compressed; any embedded protection was re-encoded\n";
        }
    }
    if (frames.empty()) {
        throw std::runtime_error("no frames found under " + dir.string());
    }
    return frames;
}

EvalEmbedders embedders_from_bundle(const ExtractorBundle& bundle) {
    EvalEmbedders e;
    if (bundle.semantic) {
        auto image = embedder_from_semantic(bundle.semantic, "semantic");
        e.image = image;
        e.clip_i = image;
        e.fid_vid = mean_clip_embedder(image, 16);
        // dino and fvd stay unset: they require dedicated plugin
        // embedders that this toolkit does not bundle.
    }
    e.lpips = bundle.perceptual;
    return e;
}

SweepAxis parse_sweep_spec(const std::string& spec) {
    auto colon = spec.find(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("sweep spec must look like kind:p1,p2,... , got '" + spec +
                                    "'");
    }
    SweepAxis axis;
    axis.kind = countermeasure_from_string(spec.substr(0, colon));
    std::stringstream rest(spec.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
        axis.params.push_back(parse_budget(item));
    }
    if (axis.params.empty()) {
        throw std::invalid_argument("sweep spec lists no parameters: '" + spec + "'");
    }
    return axis;
}

json sweep_table_json(const SweepTable& table) {
    json rows = json::array();
    for (const auto& row : table.rows) {
        rows.push_back({{"param", row.param},
                        {"protected", row.protected_metrics},
                        {"clean", row.clean_metrics}});
    }
    return json{{"transform", to_string(table.kind)},
                {"clean_baseline", table.clean_baseline},
                {"rows", rows}};
}

} // namespace

int cmd_protect(const ProtectArgs& args, std::ostream& out, std::ostream& err) {
    try {
        AppConfig cfg = load_config_for(args.config_path, args.replay_manifest);
        apply_flag_overrides(cfg, args);

        ImageReadInfo info;
        ImageTensor x = read_image(args.input, &info);
        if (info.lossy) {
            err << "warning: input " << args.input
                << " is lossy-compressed; protecting a re-encoded image\n";
        }

        // Resolve extractors before any file is written so a resolution
        // failure leaves no partial outputs.
        BundleSpec bundle_spec = BundleSpec::from_json(cfg.extractors);
        ExtractorBundle bundle = resolve_bundle(bundle_spec);

        RunManifest manifest = RunManifest::for_run(cfg, bundle_spec);
        std::string manifest_path = args.output + ".manifest.json";
        {
            std::ofstream mf(manifest_path);
            if (!mf) {
                throw std::runtime_error("cannot open manifest file: " + manifest_path);
            }
            mf << manifest.to_json().dump(2) << '\n';
        }

        ProtectResult result = protect(x, cfg.protection, bundle);
        write_png(args.output, result.protected_image);
        write_trace(args.output + ".trace.jsonl", result.trace, manifest.hash);

        out << "protected image written to " << args.output << " (seed " << cfg.protection.seed
            << ", config " << manifest.hash << ")\n";
        return 0;
    } catch (const std::exception& e) {
        err << "protect: " << e.what() << '\n';
        return 1;
    }
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
    try {
        AppConfig cfg = AppConfig::load(args.config_path);
        std::vector<std::string> metrics = args.metrics.empty() ? cfg.eval_metrics : args.metrics;

        ExtractorBundle bundle = resolve_bundle(BundleSpec::from_json(cfg.extractors));
        EvalEmbedders embedders = embedders_from_bundle(bundle);

        FrameSequence reference = read_frames(args.reference_dir, err);

        // The generated directory holds either numbered frames (one
        // video) or one subdirectory of frames per video.
        std::vector<fs::path> videos;
        for (const auto& entry : fs::directory_iterator(args.generated_dir)) {
            if (entry.is_directory()) {
                videos.push_back(entry.path());
            }
        }
        std::sort(videos.begin(), videos.end());

        json report;
        if (videos.empty()) {
            FrameSequence generated = read_frames(args.generated_dir, err);
            report = evaluate_metrics(reference, generated, embedders, metrics).to_json();
        } else {
            json per_video = json::object();
            std::map<std::string, std::pair<double, int>> sums;
            for (const auto& dir : videos) {
                FrameSequence generated = read_frames(dir, err);
                MetricReport r = evaluate_metrics(reference, generated, embedders, metrics);
                per_video[dir.filename().string()] = r.to_json();
                for (const auto& [name, v] : r.metrics) {
                    if (!v.skipped) {
                        sums[name].first += v.value;
                        sums[name].second += 1;
                    }
                }
            }
            json aggregate = json::object();
            for (const auto& [name, sum] : sums) {
                aggregate[name] = sum.first / sum.second;
            }
            report = json{{"videos", per_video}, {"aggregate", aggregate}};
        }

        if (args.output_path.empty()) {
            out << report.dump(2) << '\n';
        } else {
            std::ofstream f(args.output_path);
            if (!f) {
                throw std::runtime_error("cannot open report file: " + args.output_path);
            }
            f << report.dump(2) << '\n';
            out << "metric report written to " << args.output_path << '\n';
        }
        return 0;
    } catch (const std::exception& e) {
        err << "evaluate: " << e.what() << '\n';
        return 1;
    }
}

int cmd_robustness(const RobustnessArgs& args, std::ostream& out, std::ostream& err) {
    try {
        AppConfig cfg = AppConfig::load(args.config_path);
        if (args.seed) {
            cfg.animation_seed = *args.seed;
        }

        if (!args.purify_inputs.empty()) {
            if (args.purify_inputs.size() != 5) {
                throw std::invalid_argument("purify mode expects exactly five input images");
            }
            std::vector<ImageTensor> images;
            for (const auto& path : args.purify_inputs) {
                images.push_back(read_image(path));
            }
            write_png(args.output, interpolate_average_purify(images));
            out << "purified image written to " << args.output << '\n';
            return 0;
        }

        ImageTensor protected_img = read_image(args.input);
        ImageTensor clean_img = read_image(args.clean);

        ExtractorBundle bundle = resolve_bundle(BundleSpec::from_json(cfg.extractors));
        EvalEmbedders embedders = embedders_from_bundle(bundle);

        // Downstream stand-in: animate through the toy stack and compare
        // against the clean-reference animation.
        FrameSequence reference = simulate_animation(clean_img, bundle, cfg.animation_frames,
                                                     cfg.animation_jitter, cfg.animation_seed);
        DownstreamEval downstream = [&](const ImageTensor& img) {
            FrameSequence generated =
                simulate_animation(img, bundle, cfg.animation_frames, cfg.animation_jitter,
                                   cfg.animation_seed + 1);
            // ssim is omitted: the desk-scale frames are smaller than its
            // 11x11 window
            MetricReport r = evaluate_metrics(reference, generated, embedders,
                                              {"psnr", "lpips", "fid"});
            std::map<std::string, double> flat;
            for (const auto& [name, v] : r.metrics) {
                if (!v.skipped) {
                    flat[name] = v.value;
                }
            }
            return flat;
        };

        std::vector<SweepAxis> axes;
        if (args.sweep_specs.empty()) {
            axes = cfg.sweep_axes;
        } else {
            for (const auto& spec : args.sweep_specs) {
                axes.push_back(parse_sweep_spec(spec));
            }
        }

        std::string tsv;
        json tables = json::array();
        for (const auto& axis : axes) {
            SweepTable table = sweep(protected_img, clean_img, axis, downstream);
            tsv += sweep_table_tsv(table);
            tables.push_back(sweep_table_json(table));
        }

        std::ofstream f(args.output);
        if (!f) {
            throw std::runtime_error("cannot open output file: " + args.output);
        }
        f << tsv;
        std::ofstream jf(args.output + ".json");
        jf << tables.dump(2) << '\n';
        out << "sweep tables written to " << args.output << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "robustness: " << e.what() << '\n';
        return 1;
    }
}

} // namespace posecloak
