#include "posecloak/losses.hpp"

#include <cmath>

namespace posecloak {

namespace {

double mean_sq_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("distance operands must share a shape");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double mean_sq_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("embedding dimensions must match");
    }
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

// Mean squared deviation across the concatenation of all exposed maps.
double maps_mean_sq_diff(const std::vector<LatentTensor>& a, const std::vector<LatentTensor>& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("feature map counts must match");
    }
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t m = 0; m < a.size(); ++m) {
        auto av = a[m].values();
        auto bv = b[m].values();
        if (av.size() != bv.size()) {
            throw std::invalid_argument("feature map shapes must match");
        }
        for (std::size_t i = 0; i < av.size(); ++i) {
            double d = av[i] - bv[i];
            acc += d * d;
        }
        n += av.size();
    }
    return acc / static_cast<double>(n);
}

void accumulate(PerturbationField& acc, const ImageTensor& g, double scale) {
    auto av = acc.values();
    auto gv = g.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
        av[i] += scale * gv[i];
    }
}

void add_scaled(LatentTensor& acc, const LatentTensor& g, double scale) {
    auto av = acc.values();
    auto gv = g.values();
    for (std::size_t i = 0; i < av.size(); ++i) {
        av[i] += scale * gv[i];
    }
}

struct FrameTermEval {
    double value = 0.0;
    // d term / d conditioning, for the backward pass.
    std::optional<Conditioning> cond_grad;
};

FrameTermEval frame_term(const ImageTensor& effective, const LatentTensor& clean_latent,
                         const NoisePredictor& pred, const PoseConditioner& cond,
                         const DiffusionSchedule& sched, int frames, int timestep,
                         const std::vector<LatentTensor>& noise_frames, bool want_grad) {
    if (frames < 1) {
        throw std::invalid_argument("frame count must be at least 1");
    }
    if (static_cast<int>(noise_frames.size()) != frames) {
        throw std::invalid_argument("noise frame count must equal F");
    }
    if (timestep < 0 || timestep >= sched.train_steps) {
        throw std::invalid_argument("timestep outside the training schedule");
    }

    Conditioning conditioning = cond.condition_from(effective, frames);
    std::vector<LatentTensor> eps = pred.predict(noise_frames, conditioning, timestep);

    double abar = sched.alpha_bar[timestep];
    std::vector<LatentTensor> z0;
    z0.reserve(frames);
    for (int f = 0; f < frames; ++f) {
        z0.push_back(estimate_z0(noise_frames[f], eps[f], abar));
    }

    const double n_latent = static_cast<double>(clean_latent.size());
    double align = 0.0;
    for (int f = 0; f < frames; ++f) {
        align += mean_sq_diff(z0[f].values(), clean_latent.values());
    }
    align /= frames;

    double spread = 0.0;
    if (frames > 1) {
        for (int f = 0; f < frames; ++f) {
            for (int g = f + 1; g < frames; ++g) {
                spread += mean_sq_diff(z0[f].values(), z0[g].values());
            }
        }
        spread *= 2.0 / (static_cast<double>(frames) * (frames - 1));
    }

    FrameTermEval eval;
    eval.value = align + spread;
    if (!want_grad) {
        return eval;
    }

    // Cotangent on each z0 from both the alignment and the spread terms.
    std::vector<LatentTensor> z0_grad;
    z0_grad.reserve(frames);
    for (int f = 0; f < frames; ++f) {
        LatentTensor g(z0[f].shape());
        auto gv = g.values();
        auto zv = z0[f].values();
        auto cv = clean_latent.values();
        double align_scale = 2.0 / (frames * n_latent);
        for (std::size_t i = 0; i < gv.size(); ++i) {
            gv[i] = align_scale * (zv[i] - cv[i]);
        }
        z0_grad.push_back(std::move(g));
    }
    if (frames > 1) {
        double pair_scale = (2.0 / (static_cast<double>(frames) * (frames - 1))) * (2.0 / n_latent);
        for (int f = 0; f < frames; ++f) {
            for (int g = f + 1; g < frames; ++g) {
                auto fv = z0[f].values();
                auto gv = z0[g].values();
                auto fg = z0_grad[f].values();
                auto gg = z0_grad[g].values();
                for (std::size_t i = 0; i < fv.size(); ++i) {
                    double d = pair_scale * (fv[i] - gv[i]);
                    fg[i] += d;
                    gg[i] -= d;
                }
            }
        }
    }

    // z0 = (z_t - sqrt(1-abar) eps) / sqrt(abar)  =>  d z0/d eps is a
    // constant negative scale.
    double eps_scale = -std::sqrt(1.0 - abar) / std::sqrt(abar);
    std::vector<LatentTensor> eps_grad;
    eps_grad.reserve(frames);
    for (int f = 0; f < frames; ++f) {
        LatentTensor g(z0_grad[f].shape());
        add_scaled(g, z0_grad[f], eps_scale);
        eps_grad.push_back(std::move(g));
    }

    eval.cond_grad = pred.predict_grad_conditioning(noise_frames, conditioning, timestep, eps_grad);
    return eval;
}

} // namespace

CleanFeatureCache CleanFeatureCache::build(const ImageTensor& x, const ExtractorBundle& bundle,
                                           const LossWeights& w) {
    CleanFeatureCache cache;
    bool need_latent = w.lambda_vae != 0.0 || w.lambda_ref != 0.0 || w.lambda_frame != 0.0;
    if (need_latent) {
        if (!bundle.encoder) {
            throw ConfigurationError("objective requires a latent encoder");
        }
        cache.latent = bundle.encoder->encode(x);
    }
    if (w.lambda_clip != 0.0) {
        if (!bundle.semantic) {
            throw ConfigurationError("objective requires a semantic encoder");
        }
        cache.embedding = bundle.semantic->embed(x);
    }
    if (w.lambda_ref != 0.0) {
        if (bundle.references.empty()) {
            throw ConfigurationError("objective requires reference extractors");
        }
        for (const auto& ref : bundle.references) {
            cache.reference_maps.push_back(ref->extract(cache.latent));
        }
    }
    return cache;
}

double loss_vae(const ImageTensor& x, const PerturbationField& delta, const LatentEncoder& enc) {
    ImageTensor xp = add_perturbation(x, delta);
    LatentTensor zp = enc.encode(xp);
    LatentTensor z = enc.encode(x);
    return mean_sq_diff(zp.values(), z.values());
}

std::pair<double, double> loss_feature(
    const ImageTensor& x, const PerturbationField& delta, const SemanticEncoder& sem,
    const std::vector<std::shared_ptr<const ReferenceFeatureExtractor>>& refs,
    const LatentEncoder& enc) {
    if (refs.empty()) {
        throw std::invalid_argument("feature loss requires at least one reference extractor");
    }
    ImageTensor xp = add_perturbation(x, delta);
    double clip_term = mean_sq_diff(sem.embed(xp), sem.embed(x));
    LatentTensor zp = enc.encode(xp);
    LatentTensor z = enc.encode(x);
    double ref_term = 0.0;
    for (const auto& ref : refs) {
        ref_term += maps_mean_sq_diff(ref->extract(zp), ref->extract(z));
    }
    return {clip_term, ref_term};
}

double loss_frame(const ImageTensor& x, const PerturbationField& delta, const LatentEncoder& enc,
                  const NoisePredictor& pred, const PoseConditioner& cond,
                  const DiffusionSchedule& sched, int frames, int timestep,
                  const std::vector<LatentTensor>& noise_frames) {
    ImageTensor xp = add_perturbation(x, delta);
    LatentTensor clean = enc.encode(x);
    return frame_term(xp, clean, pred, cond, sched, frames, timestep, noise_frames, false).value;
}

double loss_lpips_penalty(const ImageTensor& x, const PerturbationField& delta,
                          const PerceptualDistance& pd, double zeta) {
    if (zeta < 0.0) {
        throw std::invalid_argument("perceptual budget zeta must be nonnegative");
    }
    ImageTensor xp = add_perturbation(x, delta);
    return std::max(pd.distance(xp, x) - zeta, 0.0);
}

std::pair<double, LossBreakdown> loss_total(const ImageTensor& x, const PerturbationField& delta,
                                            const ExtractorBundle& bundle, const LossWeights& w,
                                            int frames, int timestep,
                                            const std::vector<LatentTensor>& noise_frames,
                                            const DiffusionSchedule& sched) {
    ObjectiveEval eval = evaluate_objective(x, delta, TransformSpec::identity(), bundle, w, frames,
                                            timestep, noise_frames, sched);
    return {eval.total, eval.breakdown};
}

ObjectiveEval evaluate_objective(const ImageTensor& x, const PerturbationField& delta,
                                 const TransformSpec& transform, const ExtractorBundle& bundle,
                                 const LossWeights& w, int frames, int timestep,
                                 const std::vector<LatentTensor>& noise_frames,
                                 const DiffusionSchedule& sched, const CleanFeatureCache* cache) {
    if (w.zeta < 0.0) {
        throw std::invalid_argument("perceptual budget zeta must be nonnegative");
    }
    CleanFeatureCache local;
    if (cache == nullptr) {
        local = CleanFeatureCache::build(x, bundle, w);
        cache = &local;
    }

    ImageTensor xp = add_perturbation(x, delta);
    ImageTensor effective = apply_transform(transform, xp);

    ObjectiveEval eval;
    eval.grad = PerturbationField::zeros_like(x);

    // Cotangent accumulated on the transformed image; mapped back through
    // the transform at the end.
    PerturbationField effective_grad = PerturbationField::zeros_like(x);

    const bool need_latent = w.lambda_vae != 0.0 || w.lambda_ref != 0.0;
    LatentTensor zp;
    LatentTensor latent_cot; // accumulated cotangent on encode(effective)
    if (need_latent) {
        zp = bundle.encoder->encode(effective);
        latent_cot = LatentTensor(zp.shape());
    }

    if (w.lambda_vae != 0.0) {
        eval.breakdown.vae = mean_sq_diff(zp.values(), cache->latent.values());
        double scale = w.lambda_vae * 2.0 / static_cast<double>(zp.size());
        auto lc = latent_cot.values();
        auto zv = zp.values();
        auto cv = cache->latent.values();
        for (std::size_t i = 0; i < lc.size(); ++i) {
            lc[i] += scale * (zv[i] - cv[i]);
        }
    }

    if (w.lambda_clip != 0.0) {
        Eigen::VectorXd ep = bundle.semantic->embed(effective);
        eval.breakdown.clip = mean_sq_diff(ep, cache->embedding);
        Eigen::VectorXd cot =
            (w.lambda_clip * 2.0 / static_cast<double>(ep.size())) * (ep - cache->embedding);
        accumulate(effective_grad, bundle.semantic->embed_grad(effective, cot), 1.0);
    }

    if (w.lambda_ref != 0.0) {
        for (std::size_t k = 0; k < bundle.references.size(); ++k) {
            const auto& ref = bundle.references[k];
            std::vector<LatentTensor> maps = ref->extract(zp);
            const auto& clean_maps = cache->reference_maps[k];
            eval.breakdown.reference += maps_mean_sq_diff(maps, clean_maps);

            std::size_t n = 0;
            for (const auto& m : maps) {
                n += m.size();
            }
            double scale = w.lambda_ref * 2.0 / static_cast<double>(n);
            std::vector<LatentTensor> map_cots;
            map_cots.reserve(maps.size());
            for (std::size_t m = 0; m < maps.size(); ++m) {
                LatentTensor cot(maps[m].shape());
                auto cv = cot.values();
                auto av = maps[m].values();
                auto bv = clean_maps[m].values();
                for (std::size_t i = 0; i < cv.size(); ++i) {
                    cv[i] = scale * (av[i] - bv[i]);
                }
                map_cots.push_back(std::move(cot));
            }
            add_scaled(latent_cot, ref->extract_grad(zp, map_cots), 1.0);
        }
    }

    if (need_latent) {
        accumulate(effective_grad, bundle.encoder->encode_grad(effective, latent_cot), 1.0);
    }

    if (w.lambda_frame != 0.0) {
        if (!bundle.predictor || !bundle.conditioner || !bundle.encoder) {
            throw ConfigurationError("frame term requires encoder, predictor and conditioner");
        }
        if (cache->latent.size() == 0) {
            throw std::invalid_argument("feature cache was built without the clean latent");
        }
        FrameTermEval ft = frame_term(effective, cache->latent, *bundle.predictor,
                                      *bundle.conditioner, sched, frames, timestep, noise_frames,
                                      true);
        eval.breakdown.frame = ft.value;
        Conditioning scaled = *ft.cond_grad;
        for (auto& g : scaled.frames) {
            g *= w.lambda_frame;
        }
        accumulate(effective_grad,
                   bundle.conditioner->condition_grad(effective, frames, scaled), 1.0);
    }

    // Map the accumulated cotangent back through the sampled transform.
    PerturbationField through = transform_vjp(transform, xp, effective_grad);
    auto gv = eval.grad.values();
    auto tv = through.values();
    for (std::size_t i = 0; i < gv.size(); ++i) {
        gv[i] += tv[i];
    }

    // Perceptual penalty is measured on the untransformed protected image.
    if (w.lambda_lpips != 0.0) {
        if (!bundle.perceptual) {
            throw ConfigurationError("perceptual penalty requires a perceptual distance");
        }
        double d = bundle.perceptual->distance(xp, x);
        eval.breakdown.lpips_penalty = std::max(d - w.zeta, 0.0);
        if (d > w.zeta) {
            accumulate(eval.grad, bundle.perceptual->distance_grad_first(xp, x), -w.lambda_lpips);
        }
    }

    eval.breakdown.total = w.lambda_vae * eval.breakdown.vae + w.lambda_clip * eval.breakdown.clip +
                           w.lambda_ref * eval.breakdown.reference +
                           w.lambda_frame * eval.breakdown.frame -
                           w.lambda_lpips * eval.breakdown.lpips_penalty;
    eval.total = eval.breakdown.total;
    return eval;
}

} // namespace posecloak
