#pragma once

#include "posecloak/extractors.hpp"
#include "posecloak/tensor.hpp"

namespace posecloak {

/// Desk-scale stand-in for an animation pipeline: encodes the reference
/// image, jitters the latent once per frame, and decodes each jittered
/// latent back to pixels. Deterministic in the seed. Requires a bundle
/// with both an encoder and a decoder.
FrameSequence simulate_animation(const ImageTensor& reference, const ExtractorBundle& bundle,
                                 int frames, double jitter, std::uint64_t seed);

} // namespace posecloak
