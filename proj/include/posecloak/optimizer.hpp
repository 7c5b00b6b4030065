#pragma once

#include <functional>
#include <vector>

#include "posecloak/eot.hpp"
#include "posecloak/extractors.hpp"
#include "posecloak/losses.hpp"
#include "posecloak/schedule.hpp"
#include "posecloak/tensor.hpp"

namespace posecloak {

/// Full configuration of one protection run.
struct ProtectionConfig {
    double eta = 16.0 / 255.0;   // perturbation budget
    double gamma = 2.0 / 255.0;  // step size
    int iterations = 200;
    double decay = 0.5;          // momentum decay factor
    int frames = 5;
    std::uint64_t seed = 0;
    LossWeights weights;
    EotConfig eot;
    ScheduleConfig schedule;

    void validate() const;
};

struct IterationRecord {
    LossBreakdown loss;
    double delta_linf = 0.0;
    TransformKind transform = TransformKind::kIdentity;
    double transform_value = 0.0;
    int timestep = 0;
};

struct TraceMetadata {
    double eta = 0.0;
    double gamma = 0.0;
    int iterations = 0;
    double decay = 0.0;
    int frames = 0;
    std::uint64_t seed = 0;
};

struct OptimizationTrace {
    TraceMetadata metadata;
    std::vector<IterationRecord> iterations;
};

struct ProtectResult {
    ImageTensor protected_image; // clamped into [0,1]
    PerturbationField delta;     // final unclamped perturbation
    OptimizationTrace trace;
};

/// Elementwise uniform draw on [-eta, eta].
PerturbationField init_perturbation(double eta, int height, int width, SplitRng& rng);

/// Momentum accumulation: decay * g_prev + grad / mean(|grad|). When
/// mean(|grad|) is 0 the normalized term is the zero field. The span form
/// is the shape-free core; the field form wraps it.
void momentum_step(std::span<const double> g_prev, std::span<const double> grad, double decay,
                   std::span<double> out);
PerturbationField momentum_step(const PerturbationField& g_prev, const PerturbationField& grad,
                                double decay);

/// Sign ascent followed by projection: clip(delta + gamma * sign(g), eta).
/// sign(0) is 0.
void pgd_update(std::span<const double> delta, std::span<const double> g, double gamma, double eta,
                std::span<double> out);
PerturbationField pgd_update(const PerturbationField& delta, const PerturbationField& g,
                             double gamma, double eta);

/// Runs the full optimization loop: per iteration, sample a transform, a
/// timestep and F noise latents, evaluate the objective at the current
/// delta, take a momentum sign step and project. Deterministic given the
/// seed. The optional observer sees delta after every iteration.
ProtectResult protect(const ImageTensor& x, const ProtectionConfig& cfg,
                      const ExtractorBundle& bundle,
                      const std::function<void(int, const PerturbationField&)>& observer = {});

} // namespace posecloak
