#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace posecloak {

/// Interleaved H x W x 3 image, canonical value range [0,1].
///
/// Values may temporarily leave [0,1] during optimization; clamp_valid()
/// restores the canonical range. Quantization to 8 bits happens only at
/// file I/O time.
class ImageTensor {
public:
    static constexpr int kChannels = 3;
    static constexpr int kMinSide = 8;

    ImageTensor() = default;
    ImageTensor(int height, int width);
    static ImageTensor filled(int height, int width, double value);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double& at(int y, int x, int c) { return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c]; }
    double at(int y, int x, int c) const { return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    bool same_shape(const ImageTensor& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

/// Additive perturbation paired with an image of the same shape.
class PerturbationField {
public:
    PerturbationField() = default;
    PerturbationField(int height, int width);
    static PerturbationField zeros_like(const ImageTensor& img);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    double& at(int y, int x, int c) { return data_[(static_cast<std::size_t>(y) * width_ + x) * ImageTensor::kChannels + c]; }
    double at(int y, int x, int c) const { return data_[(static_cast<std::size_t>(y) * width_ + x) * ImageTensor::kChannels + c]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    bool same_shape(const ImageTensor& img) const {
        return height_ == img.height() && width_ == img.width();
    }
    bool same_shape(const PerturbationField& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<double> data_;
};

struct LatentShape {
    int channels = 0;
    int height = 0;
    int width = 0;

    std::size_t element_count() const {
        return static_cast<std::size_t>(channels) * height * width;
    }

    bool operator==(const LatentShape&) const = default;
};

/// Planar C x H x W latent; values are unbounded reals.
class LatentTensor {
public:
    LatentTensor() = default;
    explicit LatentTensor(LatentShape shape);

    const LatentShape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    double& at(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x]; }
    double at(int c, int y, int x) const { return data_[(static_cast<std::size_t>(c) * shape_.height + y) * shape_.width + x]; }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

private:
    LatentShape shape_;
    std::vector<double> data_;
};

/// Ordered list of uniformly shaped frames.
class FrameSequence {
public:
    FrameSequence() = default;
    explicit FrameSequence(std::vector<ImageTensor> frames);

    void push_back(ImageTensor frame);

    std::size_t size() const { return frames_.size(); }
    bool empty() const { return frames_.empty(); }
    const ImageTensor& operator[](std::size_t i) const { return frames_[i]; }

    auto begin() const { return frames_.begin(); }
    auto end() const { return frames_.end(); }

private:
    std::vector<ImageTensor> frames_;
};

/// Elementwise clamp into [0,1]. Idempotent.
ImageTensor clamp_valid(const ImageTensor& img);

/// Clamp every element of delta into [-eta, eta]. Elements already inside
/// are returned unchanged. Throws std::invalid_argument for eta < 0.
PerturbationField linf_project(const PerturbationField& delta, double eta);

/// Max absolute element; 0 for an empty or all-zero field.
double linf_norm(const PerturbationField& delta);

/// x + delta, without clamping. Shapes must match.
ImageTensor add_perturbation(const ImageTensor& x, const PerturbationField& delta);

} // namespace posecloak
