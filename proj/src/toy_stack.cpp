#include <cmath>

#include "posecloak/extractors.hpp"
#include "posecloak/resize.hpp"
#include "posecloak/rng.hpp"

namespace posecloak {

namespace {

constexpr int kWorkingSide = 8;
constexpr int kEmbedDim = 16;
constexpr int kCondDim = 16;
constexpr int kPerceptualDim = 32;

Eigen::MatrixXd seeded_matrix(SplitRng rng, int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = rng.normal() * scale;
        }
    }
    return m;
}

Eigen::VectorXd seeded_vector(SplitRng rng, int n, double scale) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
        v(i) = rng.normal() * scale;
    }
    return v;
}

Eigen::VectorXd flatten_working(const ImageTensor& x) {
    RawImage resized = resize_bilinear(RawImage::from(x), kWorkingSide, kWorkingSide);
    return Eigen::Map<const Eigen::VectorXd>(resized.data.data(),
                                             static_cast<Eigen::Index>(resized.data.size()));
}

ImageTensor working_grad_to_input(const Eigen::VectorXd& g, const ImageTensor& x) {
    RawImage wg;
    wg.height = kWorkingSide;
    wg.width = kWorkingSide;
    wg.data.assign(g.data(), g.data() + g.size());
    RawImage ig = resize_bilinear_adjoint(wg, x.height(), x.width());
    return ig.to_image();
}

constexpr int working_input_dim() {
    return kWorkingSide * kWorkingSide * ImageTensor::kChannels;
}

/// tanh(W u + b) with its exact input gradient.
struct TanhAffine {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;

    TanhAffine() = default;
    TanhAffine(SplitRng rng, int out_dim, int in_dim)
        : w(seeded_matrix(rng.fork("w"), out_dim, in_dim)),
          b(seeded_vector(rng.fork("b"), out_dim, 0.05)) {}

    Eigen::VectorXd forward(const Eigen::VectorXd& u) const {
        return (w * u + b).array().tanh();
    }

    Eigen::VectorXd input_grad(const Eigen::VectorXd& u, const Eigen::VectorXd& out_grad) const {
        Eigen::VectorXd y = forward(u);
        Eigen::VectorXd pre = out_grad.array() * (1.0 - y.array().square());
        return w.transpose() * pre;
    }
};

LatentTensor vector_to_latent(const Eigen::VectorXd& v, const LatentShape& shape) {
    LatentTensor z(shape);
    std::copy(v.data(), v.data() + v.size(), z.values().begin());
    return z;
}

Eigen::VectorXd latent_to_vector(const LatentTensor& z) {
    return Eigen::Map<const Eigen::VectorXd>(z.values().data(),
                                             static_cast<Eigen::Index>(z.size()));
}

class ToyLatentEncoder final : public LatentEncoder {
public:
    ToyLatentEncoder(std::uint64_t seed, int latent_channels)
        : shape_{latent_channels, 4, 4},
          map_(SplitRng(seed).fork("toy.encoder"),
               static_cast<int>(shape_.element_count()), working_input_dim()) {}

    LatentTensor encode(const ImageTensor& x) const override {
        return vector_to_latent(map_.forward(flatten_working(x)), shape_);
    }

    ImageTensor encode_grad(const ImageTensor& x, const LatentTensor& out_grad) const override {
        Eigen::VectorXd g = map_.input_grad(flatten_working(x), latent_to_vector(out_grad));
        return working_grad_to_input(g, x);
    }

    LatentShape latent_shape() const override { return shape_; }

private:
    LatentShape shape_;
    TanhAffine map_;
};

class ToySemanticEncoder final : public SemanticEncoder {
public:
    explicit ToySemanticEncoder(std::uint64_t seed)
        : map_(SplitRng(seed).fork("toy.semantic"), kEmbedDim, working_input_dim()) {}

    Eigen::VectorXd embed(const ImageTensor& x) const override {
        return map_.forward(flatten_working(x));
    }

    ImageTensor embed_grad(const ImageTensor& x, const Eigen::VectorXd& out_grad) const override {
        Eigen::VectorXd g = map_.input_grad(flatten_working(x), out_grad);
        return working_grad_to_input(g, x);
    }

    int embedding_dim() const override { return kEmbedDim; }
    int working_resolution() const override { return kWorkingSide; }

private:
    TanhAffine map_;
};

class ToyReferenceExtractor final : public ReferenceFeatureExtractor {
public:
    ToyReferenceExtractor(std::uint64_t seed, int latent_channels, int index)
        : input_{latent_channels, 4, 4} {
        SplitRng rng = SplitRng(seed).fork("toy.reference." + std::to_string(index));
        int in_dim = static_cast<int>(input_.element_count());
        coarse_ = TanhAffine(rng.fork("coarse"), 2 * 4 * 4, in_dim);
        fine_ = TanhAffine(rng.fork("fine"), 4 * 2 * 2, in_dim);
    }

    std::vector<LatentTensor> extract(const LatentTensor& z) const override {
        Eigen::VectorXd u = latent_to_vector(z);
        std::vector<LatentTensor> maps;
        maps.push_back(vector_to_latent(coarse_.forward(u), {2, 4, 4}));
        maps.push_back(vector_to_latent(fine_.forward(u), {4, 2, 2}));
        return maps;
    }

    LatentTensor extract_grad(const LatentTensor& z,
                              const std::vector<LatentTensor>& out_grads) const override {
        if (out_grads.size() != 2) {
            throw std::invalid_argument("expected one cotangent per feature map");
        }
        Eigen::VectorXd u = latent_to_vector(z);
        Eigen::VectorXd g = coarse_.input_grad(u, latent_to_vector(out_grads[0])) +
                            fine_.input_grad(u, latent_to_vector(out_grads[1]));
        return vector_to_latent(g, input_);
    }

    LatentShape input_shape() const override { return input_; }

private:
    LatentShape input_;
    TanhAffine coarse_;
    TanhAffine fine_;
};

class ToyNoisePredictor final : public NoisePredictor {
public:
    ToyNoisePredictor(std::uint64_t seed, int latent_channels)
        : shape_{latent_channels, 4, 4} {
        SplitRng rng = SplitRng(seed).fork("toy.predictor");
        int n = static_cast<int>(shape_.element_count());
        latent_w_ = seeded_matrix(rng.fork("latent"), n, n);
        cond_w_ = seeded_matrix(rng.fork("cond"), n, kCondDim);
        bias_ = seeded_vector(rng.fork("bias"), n, 0.05);
        time_dir_ = seeded_vector(rng.fork("time"), n, 1.0);
    }

    std::vector<LatentTensor> predict(const std::vector<LatentTensor>& noisy_frames,
                                      const Conditioning& cond, int timestep) const override {
        check_inputs(noisy_frames, cond);
        std::vector<LatentTensor> out;
        out.reserve(noisy_frames.size());
        for (std::size_t f = 0; f < noisy_frames.size(); ++f) {
            out.push_back(vector_to_latent(
                pre_activation(noisy_frames[f], cond.frames[f], timestep).array().tanh(), shape_));
        }
        return out;
    }

    Conditioning predict_grad_conditioning(const std::vector<LatentTensor>& noisy_frames,
                                           const Conditioning& cond, int timestep,
                                           const std::vector<LatentTensor>& out_grads) const override {
        check_inputs(noisy_frames, cond);
        if (out_grads.size() != noisy_frames.size()) {
            throw std::invalid_argument("expected one cotangent per frame");
        }
        Conditioning grad;
        grad.frames.reserve(noisy_frames.size());
        for (std::size_t f = 0; f < noisy_frames.size(); ++f) {
            Eigen::VectorXd y = pre_activation(noisy_frames[f], cond.frames[f], timestep).array().tanh();
            Eigen::VectorXd pre = latent_to_vector(out_grads[f]).array() * (1.0 - y.array().square());
            grad.frames.push_back(cond_w_.transpose() * pre);
        }
        return grad;
    }

    LatentShape latent_shape() const override { return shape_; }
    int conditioning_dim() const override { return kCondDim; }

private:
    Eigen::VectorXd pre_activation(const LatentTensor& z, const Eigen::VectorXd& c,
                                   int timestep) const {
        return latent_w_ * latent_to_vector(z) + cond_w_ * c + bias_ +
               (timestep / 1000.0) * time_dir_;
    }

    void check_inputs(const std::vector<LatentTensor>& noisy, const Conditioning& cond) const {
        if (noisy.size() != cond.frames.size()) {
            throw std::invalid_argument("conditioning length must equal the frame count");
        }
        for (const auto& z : noisy) {
            if (z.shape() != shape_) {
                throw std::invalid_argument("noisy latent shape violates the predictor contract");
            }
        }
    }

    LatentShape shape_;
    Eigen::MatrixXd latent_w_;
    Eigen::MatrixXd cond_w_;
    Eigen::VectorXd bias_;
    Eigen::VectorXd time_dir_;
};

class ToyPoseConditioner final : public PoseConditioner {
public:
    explicit ToyPoseConditioner(std::uint64_t seed)
        : map_(SplitRng(seed).fork("toy.conditioner"), kCondDim, working_input_dim()) {}

    Conditioning condition_from(const ImageTensor& x, int repeats) const override {
        if (repeats < 1) {
            throw std::invalid_argument("conditioning repeat count must be at least 1");
        }
        Eigen::VectorXd c = map_.forward(flatten_working(x));
        Conditioning cond;
        cond.frames.assign(static_cast<std::size_t>(repeats), c);
        return cond;
    }

    ImageTensor condition_grad(const ImageTensor& x, int repeats,
                               const Conditioning& out_grad) const override {
        if (out_grad.frame_count() != repeats) {
            throw std::invalid_argument("conditioning cotangent length mismatch");
        }
        Eigen::VectorXd total = Eigen::VectorXd::Zero(kCondDim);
        for (const auto& g : out_grad.frames) {
            total += g;
        }
        Eigen::VectorXd g = map_.input_grad(flatten_working(x), total);
        return working_grad_to_input(g, x);
    }

    int conditioning_dim() const override { return kCondDim; }

private:
    TanhAffine map_;
};

class ToyPerceptualDistance final : public PerceptualDistance {
public:
    explicit ToyPerceptualDistance(std::uint64_t seed)
        : map_(SplitRng(seed).fork("toy.perceptual"), kPerceptualDim, working_input_dim()) {}

    double distance(const ImageTensor& a, const ImageTensor& b) const override {
        Eigen::VectorXd diff = map_.forward(flatten_working(a)) - map_.forward(flatten_working(b));
        return diff.squaredNorm() / kPerceptualDim;
    }

    ImageTensor distance_grad_first(const ImageTensor& a, const ImageTensor& b) const override {
        Eigen::VectorXd fa = map_.forward(flatten_working(a));
        Eigen::VectorXd fb = map_.forward(flatten_working(b));
        Eigen::VectorXd out_grad = (2.0 / kPerceptualDim) * (fa - fb);
        Eigen::VectorXd g = map_.input_grad(flatten_working(a), out_grad);
        return working_grad_to_input(g, a);
    }

private:
    TanhAffine map_;
};

class ToyLatentDecoder final : public LatentDecoder {
public:
    ToyLatentDecoder(std::uint64_t seed, int latent_channels)
        : input_{latent_channels, 4, 4},
          map_(SplitRng(seed).fork("toy.decoder"), working_input_dim(),
               static_cast<int>(input_.element_count())) {}

    ImageTensor decode(const LatentTensor& z) const override {
        if (z.shape() != input_) {
            throw std::invalid_argument("latent shape violates the decoder contract");
        }
        Eigen::VectorXd y = map_.forward(latent_to_vector(z));
        ImageTensor img(kWorkingSide, kWorkingSide);
        auto v = img.values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = 0.5 + 0.5 * y(static_cast<Eigen::Index>(i));
        }
        return img;
    }

    LatentShape input_shape() const override { return input_; }

private:
    LatentShape input_;
    TanhAffine map_;
};

class IdentityLatentEncoder final : public LatentEncoder {
public:
    explicit IdentityLatentEncoder(int side) : side_(side) {}

    LatentTensor encode(const ImageTensor& x) const override {
        if (x.height() != side_ || x.width() != side_) {
            throw std::invalid_argument("identity encoder is fixed to its configured side");
        }
        LatentTensor z({ImageTensor::kChannels, side_, side_});
        for (int y = 0; y < side_; ++y) {
            for (int xx = 0; xx < side_; ++xx) {
                for (int c = 0; c < ImageTensor::kChannels; ++c) {
                    z.at(c, y, xx) = x.at(y, xx, c);
                }
            }
        }
        return z;
    }

    ImageTensor encode_grad(const ImageTensor& x, const LatentTensor& out_grad) const override {
        ImageTensor g(x.height(), x.width());
        for (int y = 0; y < side_; ++y) {
            for (int xx = 0; xx < side_; ++xx) {
                for (int c = 0; c < ImageTensor::kChannels; ++c) {
                    g.at(y, xx, c) = out_grad.at(c, y, xx);
                }
            }
        }
        return g;
    }

    LatentShape latent_shape() const override { return {ImageTensor::kChannels, side_, side_}; }

private:
    int side_;
};

} // namespace

std::shared_ptr<const LatentEncoder> make_identity_encoder(int side) {
    return std::make_shared<IdentityLatentEncoder>(side);
}

namespace detail {

std::shared_ptr<const LatentEncoder> make_toy_encoder(std::uint64_t seed, int latent_channels) {
    return std::make_shared<ToyLatentEncoder>(seed, latent_channels);
}
std::shared_ptr<const SemanticEncoder> make_toy_semantic(std::uint64_t seed) {
    return std::make_shared<ToySemanticEncoder>(seed);
}
std::shared_ptr<const ReferenceFeatureExtractor> make_toy_reference(std::uint64_t seed,
                                                                    int latent_channels,
                                                                    int index) {
    return std::make_shared<ToyReferenceExtractor>(seed, latent_channels, index);
}
std::shared_ptr<const NoisePredictor> make_toy_predictor(std::uint64_t seed, int latent_channels) {
    return std::make_shared<ToyNoisePredictor>(seed, latent_channels);
}
std::shared_ptr<const PoseConditioner> make_toy_conditioner(std::uint64_t seed) {
    return std::make_shared<ToyPoseConditioner>(seed);
}
std::shared_ptr<const PerceptualDistance> make_toy_perceptual(std::uint64_t seed) {
    return std::make_shared<ToyPerceptualDistance>(seed);
}
std::shared_ptr<const LatentDecoder> make_toy_decoder(std::uint64_t seed, int latent_channels) {
    return std::make_shared<ToyLatentDecoder>(seed, latent_channels);
}

} // namespace detail

ExtractorBundle build_toy_stack(std::uint64_t seed, int latent_channels) {
    if (latent_channels < 1) {
        throw std::invalid_argument("latent channel count must be at least 1");
    }
    ExtractorBundle bundle;
    bundle.encoder = detail::make_toy_encoder(seed, latent_channels);
    bundle.semantic = detail::make_toy_semantic(seed);
    for (int k = 0; k < 3; ++k) {
        bundle.references.push_back(detail::make_toy_reference(seed, latent_channels, k));
    }
    bundle.predictor = detail::make_toy_predictor(seed, latent_channels);
    bundle.conditioner = detail::make_toy_conditioner(seed);
    bundle.perceptual = detail::make_toy_perceptual(seed);
    bundle.decoder = detail::make_toy_decoder(seed, latent_channels);
    return bundle;
}

} // namespace posecloak
