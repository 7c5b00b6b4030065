#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "vendor_json.hpp"

#include "posecloak/tensor.hpp"

namespace posecloak {

/// Per-frame conditioning vectors handed to the noise predictor.
struct Conditioning {
    std::vector<Eigen::VectorXd> frames;

    int frame_count() const { return static_cast<int>(frames.size()); }
};

/// Every extractor implementation honors two contracts:
///  - inference determinism: identical inputs yield identical outputs
///    (implementations that cannot guarantee it return false from
///    deterministic() and are excluded from gradient tests);
///  - gradient: given the gradient of a scalar with respect to the
///    extractor's output, the *_grad method returns the gradient of that
///    scalar with respect to the extractor's image/latent input.

/// Pixel range an implementation expects internally. The canonical
/// storage range is always [0,1]; an implementation declaring a different
/// range converts at its own boundary (inside encode and its gradient).
enum class InputNormalization { kUnitRange, kSymmetricRange };

/// Maps an image into the diffusion latent space.
class LatentEncoder {
public:
    virtual ~LatentEncoder() = default;
    virtual LatentTensor encode(const ImageTensor& x) const = 0;
    virtual ImageTensor encode_grad(const ImageTensor& x, const LatentTensor& out_grad) const = 0;
    virtual LatentShape latent_shape() const = 0;
    virtual InputNormalization input_normalization() const {
        return InputNormalization::kUnitRange;
    }
    virtual bool deterministic() const { return true; }
};

/// Embeds an image at a fixed working resolution. The internal
/// (differentiable bilinear) resize is part of the contract and of the
/// gradient path. Production CLIP-style towers work at
/// kDefaultSemanticResolution; the toy stack uses its own 8x8 size.
inline constexpr int kDefaultSemanticResolution = 224;

class SemanticEncoder {
public:
    virtual ~SemanticEncoder() = default;
    virtual Eigen::VectorXd embed(const ImageTensor& x) const = 0;
    virtual ImageTensor embed_grad(const ImageTensor& x, const Eigen::VectorXd& out_grad) const = 0;
    virtual int embedding_dim() const = 0;
    virtual int working_resolution() const = 0;
    virtual bool deterministic() const { return true; }
};

/// Extracts fine-grained appearance feature maps from a latent. A loss
/// over the features treats the concatenation of all exposed maps as the
/// extractor's output.
class ReferenceFeatureExtractor {
public:
    virtual ~ReferenceFeatureExtractor() = default;
    virtual std::vector<LatentTensor> extract(const LatentTensor& z) const = 0;
    virtual LatentTensor extract_grad(const LatentTensor& z,
                                      const std::vector<LatentTensor>& out_grads) const = 0;
    virtual LatentShape input_shape() const = 0;
    virtual bool deterministic() const { return true; }
};

/// Predicts the noise content of per-frame noisy latents given
/// conditioning derived from the reference image.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;
    virtual std::vector<LatentTensor> predict(const std::vector<LatentTensor>& noisy_frames,
                                              const Conditioning& cond, int timestep) const = 0;
    /// Gradient with respect to the conditioning (the only input that
    /// depends on the protected image).
    virtual Conditioning predict_grad_conditioning(const std::vector<LatentTensor>& noisy_frames,
                                                   const Conditioning& cond, int timestep,
                                                   const std::vector<LatentTensor>& out_grads) const = 0;
    virtual LatentShape latent_shape() const = 0;
    virtual int conditioning_dim() const = 0;
    virtual bool deterministic() const { return true; }
};

/// Derives pose-plus-appearance conditioning from the reference image,
/// repeated once per generated frame.
class PoseConditioner {
public:
    virtual ~PoseConditioner() = default;
    virtual Conditioning condition_from(const ImageTensor& x, int repeats) const = 0;
    virtual ImageTensor condition_grad(const ImageTensor& x, int repeats,
                                       const Conditioning& out_grad) const = 0;
    virtual int conditioning_dim() const = 0;
    virtual bool deterministic() const { return true; }
};

/// Perceptual distance; nonnegative, symmetric, zero at equal inputs.
class PerceptualDistance {
public:
    virtual ~PerceptualDistance() = default;
    virtual double distance(const ImageTensor& a, const ImageTensor& b) const = 0;
    /// Gradient of distance(a, b) with respect to a.
    virtual ImageTensor distance_grad_first(const ImageTensor& a, const ImageTensor& b) const = 0;
    virtual bool deterministic() const { return true; }
};

/// Decodes a latent back to pixel space. Not part of the optimization
/// objective; used by desk-scale downstream simulation and tooling.
class LatentDecoder {
public:
    virtual ~LatentDecoder() = default;
    virtual ImageTensor decode(const LatentTensor& z) const = 0;
    virtual LatentShape input_shape() const = 0;
};

/// The resolved surrogate set consumed by the optimizer. Immutable after
/// resolution; safe for concurrent read-only use.
struct ExtractorBundle {
    std::shared_ptr<const LatentEncoder> encoder;
    std::shared_ptr<const SemanticEncoder> semantic;
    std::vector<std::shared_ptr<const ReferenceFeatureExtractor>> references;
    std::shared_ptr<const NoisePredictor> predictor;
    std::shared_ptr<const PoseConditioner> conditioner;
    std::shared_ptr<const PerceptualDistance> perceptual;
    std::shared_ptr<const LatentDecoder> decoder; // optional
};

/// Raised when a registry name cannot be resolved.
class ResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when resolved roles disagree on shape contracts.
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One role entry of a registry descriptor.
struct RoleSpec {
    std::string name;
    nlohmann::json params = nlohmann::json::object();
    std::string weights; // path locator, implementation-defined
};

/// Registry descriptor: one implementation per role.
struct BundleSpec {
    RoleSpec encoder;
    RoleSpec semantic;
    std::vector<RoleSpec> references;
    RoleSpec predictor;
    RoleSpec conditioner;
    RoleSpec perceptual;
    RoleSpec decoder; // optional: empty name means none

    /// Built-in presets ("toy-default"). Throws ResolutionError for
    /// unknown preset names.
    static BundleSpec preset(const std::string& name);
    static BundleSpec from_json(const nlohmann::json& section);
    nlohmann::json to_json() const;
};

/// Resolves every role through the implementation registry. Fails
/// atomically: either all six roles resolve and their shape contracts
/// agree, or an exception is thrown and nothing is returned.
ExtractorBundle resolve_bundle(const BundleSpec& spec);

/// Names the registered implementations per role (for manifests).
nlohmann::json registry_catalog();

/// Deterministic desk-scale stack: seeded linear maps through tanh, with
/// analytic input gradients. Same seed, same parameters. Images are
/// resized to the 8x8 working size at each extractor boundary, so the
/// stack accepts any input resolution.
ExtractorBundle build_toy_stack(std::uint64_t seed, int latent_channels);

/// Encoder that forwards pixels unchanged as a (3, side, side) latent.
std::shared_ptr<const LatentEncoder> make_identity_encoder(int side);

} // namespace posecloak
