#include "posecloak/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace posecloak {

ImageTensor::ImageTensor(int height, int width)
    : height_(height), width_(width) {
    if (height < kMinSide || width < kMinSide) {
        throw std::invalid_argument("image sides must be at least 8 pixels");
    }
    data_.assign(static_cast<std::size_t>(height) * width * kChannels, 0.0);
}

ImageTensor ImageTensor::filled(int height, int width, double value) {
    ImageTensor img(height, width);
    std::fill(img.data_.begin(), img.data_.end(), value);
    return img;
}

PerturbationField::PerturbationField(int height, int width)
    : height_(height), width_(width) {
    if (height < ImageTensor::kMinSide || width < ImageTensor::kMinSide) {
        throw std::invalid_argument("perturbation sides must be at least 8 pixels");
    }
    data_.assign(static_cast<std::size_t>(height) * width * ImageTensor::kChannels, 0.0);
}

PerturbationField PerturbationField::zeros_like(const ImageTensor& img) {
    return PerturbationField(img.height(), img.width());
}

LatentTensor::LatentTensor(LatentShape shape) : shape_(shape) {
    if (shape.channels < 1 || shape.height < 1 || shape.width < 1) {
        throw std::invalid_argument("latent dimensions must be positive");
    }
    data_.assign(shape.element_count(), 0.0);
}

FrameSequence::FrameSequence(std::vector<ImageTensor> frames) : frames_(std::move(frames)) {
    if (frames_.empty()) {
        throw std::invalid_argument("frame sequence must hold at least one frame");
    }
    for (const auto& f : frames_) {
        if (!f.same_shape(frames_.front())) {
            throw std::invalid_argument("all frames in a sequence must share one shape");
        }
    }
}

void FrameSequence::push_back(ImageTensor frame) {
    if (!frames_.empty() && !frame.same_shape(frames_.front())) {
        throw std::invalid_argument("frame shape differs from the sequence shape");
    }
    frames_.push_back(std::move(frame));
}

ImageTensor clamp_valid(const ImageTensor& img) {
    ImageTensor out = img;
    for (double& v : out.values()) {
        v = std::min(std::max(v, 0.0), 1.0);
    }
    return out;
}

PerturbationField linf_project(const PerturbationField& delta, double eta) {
    if (eta < 0.0) {
        throw std::invalid_argument("projection budget eta must be nonnegative");
    }
    PerturbationField out = delta;
    for (double& v : out.values()) {
        v = std::min(std::max(v, -eta), eta);
    }
    return out;
}

double linf_norm(const PerturbationField& delta) {
    double m = 0.0;
    for (double v : delta.values()) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

ImageTensor add_perturbation(const ImageTensor& x, const PerturbationField& delta) {
    if (!delta.same_shape(x)) {
        throw std::invalid_argument("perturbation shape must equal the image shape");
    }
    ImageTensor out = x;
    auto dv = delta.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) {
        ov[i] += dv[i];
    }
    return out;
}

} // namespace posecloak
