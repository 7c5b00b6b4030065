#pragma once

#include "posecloak/extractors.hpp"

namespace posecloak::detail {

std::shared_ptr<const LatentEncoder> make_toy_encoder(std::uint64_t seed, int latent_channels);
std::shared_ptr<const SemanticEncoder> make_toy_semantic(std::uint64_t seed);
std::shared_ptr<const ReferenceFeatureExtractor> make_toy_reference(std::uint64_t seed,
                                                                    int latent_channels, int index);
std::shared_ptr<const NoisePredictor> make_toy_predictor(std::uint64_t seed, int latent_channels);
std::shared_ptr<const PoseConditioner> make_toy_conditioner(std::uint64_t seed);
std::shared_ptr<const PerceptualDistance> make_toy_perceptual(std::uint64_t seed);
std::shared_ptr<const LatentDecoder> make_toy_decoder(std::uint64_t seed, int latent_channels);

} // namespace posecloak::detail
