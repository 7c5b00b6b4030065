#include "posecloak/downstream.hpp"

#include <stdexcept>

#include "posecloak/rng.hpp"

namespace posecloak {

FrameSequence simulate_animation(const ImageTensor& reference, const ExtractorBundle& bundle,
                                 int frames, double jitter, std::uint64_t seed) {
    if (frames < 1) {
        throw std::invalid_argument("frame count must be at least 1");
    }
    if (!bundle.encoder || !bundle.decoder) {
        throw std::invalid_argument("animation simulation needs an encoder and a decoder");
    }
    LatentTensor z = bundle.encoder->encode(reference);
    SplitRng rng = SplitRng(seed).fork("animate");
    FrameSequence out;
    for (int f = 0; f < frames; ++f) {
        LatentTensor zf = z;
        for (double& v : zf.values()) {
            v += jitter * rng.normal();
        }
        out.push_back(bundle.decoder->decode(zf));
    }
    return out;
}

} // namespace posecloak
