#pragma once

#include <string>
#include <vector>

#include "posecloak/rng.hpp"
#include "posecloak/tensor.hpp"

namespace posecloak {

/// Which end of the denoising trajectory sample_timestep draws from.
/// kLowNoise picks the final (least noisy) steps, where the one-shot
/// latent estimate stays well conditioned.
enum class WindowEnd { kLowNoise, kHighNoise };

/// Variance schedule over training timesteps plus the inference subset.
struct DiffusionSchedule {
    int train_steps = 0;
    std::vector<double> beta;       // beta[t] for t in [0, train_steps)
    std::vector<double> alpha_bar;  // cumulative product of (1 - beta)
    int inference_steps = 0;
    std::vector<int> inference_index_map; // inference step -> training timestep, ascending
};

struct ScheduleConfig {
    std::string kind = "scaled_linear";
    int train_steps = 1000;
    int inference_steps = 25;
    int window = 10;
    WindowEnd window_end = WindowEnd::kLowNoise;
};

/// Builds a schedule of the given kind ("linear" or "scaled_linear") with a
/// uniformly spaced inference map. Throws for unknown kinds.
DiffusionSchedule make_schedule(const std::string& kind, int train_steps, int inference_steps);

/// Builds a schedule from explicit betas (each in (0,1)).
DiffusionSchedule schedule_from_betas(const std::vector<double>& betas, int inference_steps);

/// Uniform draw over the `window` timesteps at the chosen end of the
/// denoising trajectory. Returns a training timestep for indexing
/// alpha_bar. Throws if window exceeds the inference step count.
int sample_timestep(const DiffusionSchedule& sched, int window, SplitRng& rng,
                    WindowEnd end = WindowEnd::kLowNoise);

/// F independent standard-normal latents of the given shape.
std::vector<LatentTensor> sample_latent_frames(int frames, const LatentShape& shape, SplitRng& rng);

/// One-shot estimate of the clean latent from a noisy latent and the
/// predicted noise: (z_t - sqrt(1 - abar) * eps) / sqrt(abar).
LatentTensor estimate_z0(const LatentTensor& z_t, const LatentTensor& eps, double alpha_bar);

/// Same, with alpha_bar looked up at training timestep t.
LatentTensor estimate_z0(const LatentTensor& z_t, const LatentTensor& eps, int t,
                         const DiffusionSchedule& sched);

/// Forward diffusion draw per the reparameterized form:
/// sqrt(abar) * z0 + sqrt(1 - abar) * eps.
LatentTensor diffuse_forward(const LatentTensor& z0, const LatentTensor& eps, double alpha_bar);

} // namespace posecloak
