#include "posecloak/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace posecloak {

namespace {

std::vector<int> uniform_index_map(int train_steps, int inference_steps) {
    // "leading" spacing: stride floor(T/S), timesteps 0, stride, 2*stride, ...
    std::vector<int> map(inference_steps);
    int stride = train_steps / inference_steps;
    for (int i = 0; i < inference_steps; ++i) {
        map[i] = i * stride;
    }
    return map;
}

DiffusionSchedule finish_schedule(std::vector<double> betas, int inference_steps) {
    DiffusionSchedule sched;
    sched.train_steps = static_cast<int>(betas.size());
    if (inference_steps < 1 || inference_steps > sched.train_steps) {
        throw std::invalid_argument("inference steps must lie in [1, train_steps]");
    }
    sched.beta = std::move(betas);
    sched.alpha_bar.resize(sched.train_steps);
    double prod = 1.0;
    for (int t = 0; t < sched.train_steps; ++t) {
        double b = sched.beta[t];
        if (!(b > 0.0 && b < 1.0)) {
            throw std::invalid_argument("betas must lie in (0,1)");
        }
        prod *= 1.0 - b;
        sched.alpha_bar[t] = prod;
    }
    sched.inference_steps = inference_steps;
    sched.inference_index_map = uniform_index_map(sched.train_steps, inference_steps);
    return sched;
}

} // namespace

DiffusionSchedule make_schedule(const std::string& kind, int train_steps, int inference_steps) {
    if (train_steps < 1) {
        throw std::invalid_argument("train_steps must be positive");
    }
    std::vector<double> betas(train_steps);
    if (kind == "linear") {
        const double b0 = 1e-4, b1 = 0.02;
        for (int t = 0; t < train_steps; ++t) {
            double f = train_steps == 1 ? 0.0 : static_cast<double>(t) / (train_steps - 1);
            betas[t] = b0 + f * (b1 - b0);
        }
    } else if (kind == "scaled_linear") {
        const double s0 = std::sqrt(0.00085), s1 = std::sqrt(0.012);
        for (int t = 0; t < train_steps; ++t) {
            double f = train_steps == 1 ? 0.0 : static_cast<double>(t) / (train_steps - 1);
            double s = s0 + f * (s1 - s0);
            betas[t] = s * s;
        }
    } else {
        throw std::invalid_argument("unknown schedule kind: " + kind);
    }
    return finish_schedule(std::move(betas), inference_steps);
}

DiffusionSchedule schedule_from_betas(const std::vector<double>& betas, int inference_steps) {
    if (betas.empty()) {
        throw std::invalid_argument("betas must be non-empty");
    }
    return finish_schedule(betas, inference_steps);
}

int sample_timestep(const DiffusionSchedule& sched, int window, SplitRng& rng, WindowEnd end) {
    if (window < 1 || window > sched.inference_steps) {
        throw std::invalid_argument("window must lie in [1, inference_steps]");
    }
    // inference_index_map is ascending in noise level; the reverse
    // trajectory ends at its low indices.
    std::uint64_t pick = rng.uniform_int(static_cast<std::uint64_t>(window));
    int idx = end == WindowEnd::kLowNoise
                  ? static_cast<int>(pick)
                  : sched.inference_steps - 1 - static_cast<int>(pick);
    return sched.inference_index_map[idx];
}

std::vector<LatentTensor> sample_latent_frames(int frames, const LatentShape& shape, SplitRng& rng) {
    if (frames < 1) {
        throw std::invalid_argument("frame count must be at least 1");
    }
    std::vector<LatentTensor> out;
    out.reserve(frames);
    for (int f = 0; f < frames; ++f) {
        LatentTensor z(shape);
        for (double& v : z.values()) {
            v = rng.normal();
        }
        out.push_back(std::move(z));
    }
    return out;
}

LatentTensor estimate_z0(const LatentTensor& z_t, const LatentTensor& eps, double alpha_bar) {
    if (!(alpha_bar > 0.0)) {
        throw std::domain_error("alpha_bar must be positive for the latent estimate");
    }
    if (z_t.shape() != eps.shape()) {
        throw std::invalid_argument("noisy latent and noise shapes must match");
    }
    double sa = std::sqrt(alpha_bar);
    double sn = std::sqrt(1.0 - alpha_bar);
    LatentTensor out(z_t.shape());
    auto zv = z_t.values();
    auto ev = eps.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) {
        ov[i] = (zv[i] - sn * ev[i]) / sa;
    }
    return out;
}

LatentTensor estimate_z0(const LatentTensor& z_t, const LatentTensor& eps, int t,
                         const DiffusionSchedule& sched) {
    if (t < 0 || t >= sched.train_steps) {
        throw std::invalid_argument("timestep outside the training schedule");
    }
    return estimate_z0(z_t, eps, sched.alpha_bar[t]);
}

LatentTensor diffuse_forward(const LatentTensor& z0, const LatentTensor& eps, double alpha_bar) {
    if (z0.shape() != eps.shape()) {
        throw std::invalid_argument("latent and noise shapes must match");
    }
    double sa = std::sqrt(alpha_bar);
    double sn = std::sqrt(1.0 - alpha_bar);
    LatentTensor out(z0.shape());
    auto zv = z0.values();
    auto ev = eps.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) {
        ov[i] = sa * zv[i] + sn * ev[i];
    }
    return out;
}

} // namespace posecloak
