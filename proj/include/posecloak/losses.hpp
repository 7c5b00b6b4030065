#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "posecloak/eot.hpp"
#include "posecloak/extractors.hpp"
#include "posecloak/schedule.hpp"
#include "posecloak/tensor.hpp"

namespace posecloak {

/// Objective weights. lambda_clip / lambda_ref are the two halves of the
/// feature term; zeta is the perceptual budget of the penalty term.
struct LossWeights {
    double lambda_vae = 10.0;
    double lambda_clip = 10.0;
    double lambda_ref = 100.0;
    double lambda_frame = 1.0;
    double lambda_lpips = 10.0;
    double zeta = 0.1;
};

/// Unweighted term values; total carries the weighted composition
/// lambda_vae*vae + lambda_clip*clip + lambda_ref*reference
/// + lambda_frame*frame - lambda_lpips*lpips_penalty.
struct LossBreakdown {
    double vae = 0.0;
    double clip = 0.0;
    double reference = 0.0;
    double frame = 0.0;
    double lpips_penalty = 0.0;
    double total = 0.0;
};

/// Mean squared deviation of the encodings of x+delta and x.
double loss_vae(const ImageTensor& x, const PerturbationField& delta, const LatentEncoder& enc);

/// (clip_term, ref_term): mean squared embedding deviation, and the sum
/// over the ensemble of mean squared feature-map deviations (computed on
/// the encoded latents). refs must be non-empty.
std::pair<double, double> loss_feature(
    const ImageTensor& x, const PerturbationField& delta, const SemanticEncoder& sem,
    const std::vector<std::shared_ptr<const ReferenceFeatureExtractor>>& refs,
    const LatentEncoder& enc);

/// Frame incoherence: mean alignment distance of the per-frame one-shot
/// latent estimates from the clean encoding, plus the pairwise spread term
/// weighted 2/(F(F-1)). The pairwise term is defined as 0 for F == 1.
double loss_frame(const ImageTensor& x, const PerturbationField& delta, const LatentEncoder& enc,
                  const NoisePredictor& pred, const PoseConditioner& cond,
                  const DiffusionSchedule& sched, int frames, int timestep,
                  const std::vector<LatentTensor>& noise_frames);

/// Hinged perceptual budget: max(distance(x+delta, x) - zeta, 0).
double loss_lpips_penalty(const ImageTensor& x, const PerturbationField& delta,
                          const PerceptualDistance& pd, double zeta);

/// The full weighted objective and its per-term breakdown, evaluated at
/// x+delta (no transform).
std::pair<double, LossBreakdown> loss_total(const ImageTensor& x, const PerturbationField& delta,
                                            const ExtractorBundle& bundle, const LossWeights& w,
                                            int frames, int timestep,
                                            const std::vector<LatentTensor>& noise_frames,
                                            const DiffusionSchedule& sched);

/// Clean-image features reused across iterations (they do not depend on
/// delta).
struct CleanFeatureCache {
    LatentTensor latent;
    Eigen::VectorXd embedding;
    std::vector<std::vector<LatentTensor>> reference_maps;

    static CleanFeatureCache build(const ImageTensor& x, const ExtractorBundle& bundle,
                                   const LossWeights& w);
};

struct ObjectiveEval {
    double total = 0.0;
    LossBreakdown breakdown;
    PerturbationField grad; // d total / d delta
};

/// Evaluates the weighted objective on transform(x+delta) — the LPIPS
/// penalty stays on the untransformed x+delta — and returns its exact
/// gradient with respect to delta, chained through every extractor's
/// gradient contract and the transform's subgradient path.
///
/// Terms whose weight is exactly 0 are skipped and reported as 0, so a
/// bundle only needs the roles that the active weights touch.
ObjectiveEval evaluate_objective(const ImageTensor& x, const PerturbationField& delta,
                                 const TransformSpec& transform, const ExtractorBundle& bundle,
                                 const LossWeights& w, int frames, int timestep,
                                 const std::vector<LatentTensor>& noise_frames,
                                 const DiffusionSchedule& sched,
                                 const CleanFeatureCache* cache = nullptr);

} // namespace posecloak
