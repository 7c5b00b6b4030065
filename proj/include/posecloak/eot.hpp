#pragma once

#include <string>

#include "posecloak/rng.hpp"
#include "posecloak/tensor.hpp"

namespace posecloak {

enum class TransformKind {
    kGaussianBlur,
    kJpegCompress,
    kGaussianNoise,
    kRandomResize,
    kIdentity,
};

std::string to_string(TransformKind kind);

/// One sampled in-loop transformation. `value` is the kind-specific
/// parameter (blur sigma, JPEG quality, noise std, resize scale); identity
/// carries none. `seed` drives the noise draw.
struct TransformSpec {
    TransformKind kind = TransformKind::kIdentity;
    double value = 0.0;
    std::uint64_t seed = 0;

    static TransformSpec identity() { return {}; }
};

/// Parameter ranges for the per-step draw.
struct EotConfig {
    bool enabled = true;
    double blur_sigma_min = 0.5;
    double blur_sigma_max = 2.0;
    int jpeg_quality_min = 50;
    int jpeg_quality_max = 95;
    double noise_std_min = 0.01;
    double noise_std_max = 0.05;
    double resize_scale_min = 0.5;
    double resize_scale_max = 1.5;
};

/// Uniform draw over the five kinds, with kind-specific parameters drawn
/// from the configured ranges.
TransformSpec sample_transform(const EotConfig& cfg, SplitRng& rng);

/// Applies the transform. Output shape always equals the input shape; for
/// a valid [0,1] input the output stays in [0,1]. Identity is bit-exact.
/// JPEG here is the in-loop differentiable surrogate (block DCT, quantize,
/// straight-through round, dequantize); evaluation-time robustness uses
/// the real codec instead.
ImageTensor apply_transform(const TransformSpec& spec, const ImageTensor& img);

/// Vector-Jacobian product of apply_transform at `input`: maps a cotangent
/// on the output back to the input. Rounding inside the JPEG surrogate is
/// handled straight-through.
PerturbationField transform_vjp(const TransformSpec& spec, const ImageTensor& input,
                                const PerturbationField& out_grad);

/// Gaussian blur with a normalized kernel and replicated borders; shared
/// by the in-loop transform and the evaluation-time countermeasure.
ImageTensor gaussian_blur(const ImageTensor& img, double sigma);

} // namespace posecloak
