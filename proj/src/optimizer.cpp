#include "posecloak/optimizer.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace posecloak {

void ProtectionConfig::validate() const {
    if (!(eta > 0.0)) {
        throw std::invalid_argument("budget eta must be positive");
    }
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("step size gamma must be positive");
    }
    if (iterations < 1) {
        throw std::invalid_argument("iteration count must be at least 1");
    }
    if (decay < 0.0) {
        throw std::invalid_argument("decay factor must be nonnegative");
    }
    if (frames < 1) {
        throw std::invalid_argument("frame count must be at least 1");
    }
    if (weights.lambda_vae < 0.0 || weights.lambda_clip < 0.0 || weights.lambda_ref < 0.0 ||
        weights.lambda_frame < 0.0 || weights.lambda_lpips < 0.0 || weights.zeta < 0.0) {
        throw std::invalid_argument("loss weights must be nonnegative");
    }
    if (eot.enabled) {
        if (!(eot.blur_sigma_min > 0.0) || eot.blur_sigma_max < eot.blur_sigma_min) {
            throw std::invalid_argument("eot blur sigma range is invalid");
        }
        if (eot.jpeg_quality_min < 1 || eot.jpeg_quality_max > 100 ||
            eot.jpeg_quality_max < eot.jpeg_quality_min) {
            throw std::invalid_argument("eot jpeg quality range is invalid");
        }
        if (eot.noise_std_min < 0.0 || eot.noise_std_max < eot.noise_std_min) {
            throw std::invalid_argument("eot noise std range is invalid");
        }
        if (!(eot.resize_scale_min > 0.0) || eot.resize_scale_max < eot.resize_scale_min) {
            throw std::invalid_argument("eot resize scale range is invalid");
        }
    }
}

PerturbationField init_perturbation(double eta, int height, int width, SplitRng& rng) {
    if (eta < 0.0) {
        throw std::invalid_argument("budget eta must be nonnegative");
    }
    PerturbationField delta(height, width);
    for (double& v : delta.values()) {
        v = rng.uniform(-eta, eta);
    }
    return delta;
}

void momentum_step(std::span<const double> g_prev, std::span<const double> grad, double decay,
                   std::span<double> out) {
    if (g_prev.size() != grad.size() || out.size() != grad.size()) {
        throw std::invalid_argument("momentum operands must share a shape");
    }
    if (grad.empty()) {
        throw std::invalid_argument("momentum operands must be non-empty");
    }
    double mean_abs = 0.0;
    for (double v : grad) {
        mean_abs += std::abs(v);
    }
    mean_abs /= static_cast<double>(grad.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double normalized = mean_abs > 0.0 ? grad[i] / mean_abs : 0.0;
        out[i] = decay * g_prev[i] + normalized;
    }
}

PerturbationField momentum_step(const PerturbationField& g_prev, const PerturbationField& grad,
                                double decay) {
    if (!g_prev.same_shape(grad)) {
        throw std::invalid_argument("momentum operands must share a shape");
    }
    PerturbationField g(g_prev.height(), g_prev.width());
    momentum_step(g_prev.values(), grad.values(), decay, g.values());
    return g;
}

void pgd_update(std::span<const double> delta, std::span<const double> g, double gamma, double eta,
                std::span<double> out) {
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("step size gamma must be positive");
    }
    if (delta.size() != g.size() || out.size() != g.size()) {
        throw std::invalid_argument("update operands must share a shape");
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
        out[i] = std::min(std::max(delta[i] + gamma * s, -eta), eta);
    }
}

PerturbationField pgd_update(const PerturbationField& delta, const PerturbationField& g,
                             double gamma, double eta) {
    if (eta < 0.0) {
        throw std::invalid_argument("projection budget eta must be nonnegative");
    }
    PerturbationField next(delta.height(), delta.width());
    pgd_update(delta.values(), g.values(), gamma, eta, next.values());
    return next;
}

ProtectResult protect(const ImageTensor& x, const ProtectionConfig& cfg,
                      const ExtractorBundle& bundle,
                      const std::function<void(int, const PerturbationField&)>& observer) {
    cfg.validate();

    SplitRng root(cfg.seed);
    SplitRng rng_init = root.fork("init");
    SplitRng rng_eot = root.fork("eot");
    SplitRng rng_timestep = root.fork("timestep");
    SplitRng rng_latents = root.fork("latents");

    DiffusionSchedule sched =
        make_schedule(cfg.schedule.kind, cfg.schedule.train_steps, cfg.schedule.inference_steps);

    CleanFeatureCache cache = CleanFeatureCache::build(x, bundle, cfg.weights);
    LatentShape latent_shape =
        bundle.encoder ? bundle.encoder->latent_shape()
                       : (bundle.predictor ? bundle.predictor->latent_shape() : LatentShape{1, 1, 1});

    ProtectResult result;
    result.trace.metadata = {cfg.eta,   cfg.gamma,  cfg.iterations,
                             cfg.decay, cfg.frames, cfg.seed};
    result.trace.iterations.reserve(cfg.iterations);

    PerturbationField delta = init_perturbation(cfg.eta, x.height(), x.width(), rng_init);
    PerturbationField g(x.height(), x.width());

    for (int i = 1; i <= cfg.iterations; ++i) {
        TransformSpec transform =
            cfg.eot.enabled ? sample_transform(cfg.eot, rng_eot) : TransformSpec::identity();
        int t = sample_timestep(sched, cfg.schedule.window, rng_timestep,
                                cfg.schedule.window_end);
        std::vector<LatentTensor> noise_frames =
            sample_latent_frames(cfg.frames, latent_shape, rng_latents);

        ObjectiveEval eval;
        try {
            eval = evaluate_objective(x, delta, transform, bundle, cfg.weights, cfg.frames, t,
                                      noise_frames, sched, &cache);
        } catch (const std::exception& e) {
            throw std::runtime_error("extractor failure at iteration " + std::to_string(i) + ": " +
                                     e.what());
        }
        if (!std::isfinite(eval.total)) {
            std::ostringstream msg;
            msg << "non-finite objective at iteration " << i << " (vae=" << eval.breakdown.vae
                << " clip=" << eval.breakdown.clip << " reference=" << eval.breakdown.reference
                << " frame=" << eval.breakdown.frame
                << " lpips_penalty=" << eval.breakdown.lpips_penalty << ")";
            throw std::runtime_error(msg.str());
        }

        g = momentum_step(g, eval.grad, cfg.decay);
        delta = pgd_update(delta, g, cfg.gamma, cfg.eta);

        IterationRecord rec;
        rec.loss = eval.breakdown;
        rec.delta_linf = linf_norm(delta);
        rec.transform = transform.kind;
        rec.transform_value = transform.value;
        rec.timestep = t;
        result.trace.iterations.push_back(rec);

        if (observer) {
            observer(i, delta);
        }
    }

    result.protected_image = clamp_valid(add_perturbation(x, delta));
    result.delta = std::move(delta);
    return result;
}

} // namespace posecloak
