"""Protective perturbations against pose-driven image animation.

The heavy lifting lives in the compiled ``_core`` extension; this package
re-exports its public surface.
"""

from posecloak._core import (
    EotConfig,
    ExtractorBundle,
    LossWeights,
    ProtectionConfig,
    ScheduleConfig,
    __version__,
    apply_countermeasure,
    build_toy_stack,
    clamp_valid,
    cosine_similarity_mean,
    fid_from_embeddings,
    frechet_distance,
    interpolate_average_purify,
    jpeg_roundtrip,
    linf_norm,
    linf_project,
    protect,
    psnr,
    read_image,
    resolve_preset,
    simulate_animation,
    ssim,
    write_png,
)

__all__ = [
    "EotConfig",
    "ExtractorBundle",
    "LossWeights",
    "ProtectionConfig",
    "ScheduleConfig",
    "__version__",
    "apply_countermeasure",
    "build_toy_stack",
    "clamp_valid",
    "cosine_similarity_mean",
    "fid_from_embeddings",
    "frechet_distance",
    "interpolate_average_purify",
    "jpeg_roundtrip",
    "linf_norm",
    "linf_project",
    "protect",
    "psnr",
    "read_image",
    "resolve_preset",
    "simulate_animation",
    "ssim",
    "write_png",
]
