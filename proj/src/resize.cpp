#include "posecloak/resize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace posecloak {

namespace {

constexpr int kC = ImageTensor::kChannels;

struct Taps {
    int lo;
    int hi;
    double w_hi; // weight on hi; lo gets 1 - w_hi
};

// Half-pixel center mapping, clamped at the borders.
Taps taps_for(int out_idx, int out_len, int in_len) {
    double pos = (out_idx + 0.5) * static_cast<double>(in_len) / out_len - 0.5;
    double lo_f = std::floor(pos);
    double w_hi = pos - lo_f;
    int lo = static_cast<int>(lo_f);
    int hi = lo + 1;
    lo = std::clamp(lo, 0, in_len - 1);
    hi = std::clamp(hi, 0, in_len - 1);
    return {lo, hi, w_hi};
}

} // namespace

RawImage RawImage::from(const ImageTensor& img) {
    RawImage raw;
    raw.height = img.height();
    raw.width = img.width();
    raw.data.assign(img.values().begin(), img.values().end());
    return raw;
}

ImageTensor RawImage::to_image() const {
    ImageTensor img(height, width);
    std::copy(data.begin(), data.end(), img.values().begin());
    return img;
}

RawImage resize_bilinear(const RawImage& src, int out_height, int out_width) {
    if (out_height < 1 || out_width < 1) {
        throw std::invalid_argument("resize target must be at least 1x1");
    }
    if (out_height == src.height && out_width == src.width) {
        return src;
    }
    RawImage dst;
    dst.height = out_height;
    dst.width = out_width;
    dst.data.assign(static_cast<std::size_t>(out_height) * out_width * kC, 0.0);

    for (int y = 0; y < out_height; ++y) {
        Taps ty = taps_for(y, out_height, src.height);
        for (int x = 0; x < out_width; ++x) {
            Taps tx = taps_for(x, out_width, src.width);
            for (int c = 0; c < kC; ++c) {
                auto at = [&](int yy, int xx) {
                    return src.data[(static_cast<std::size_t>(yy) * src.width + xx) * kC + c];
                };
                double top = (1.0 - tx.w_hi) * at(ty.lo, tx.lo) + tx.w_hi * at(ty.lo, tx.hi);
                double bot = (1.0 - tx.w_hi) * at(ty.hi, tx.lo) + tx.w_hi * at(ty.hi, tx.hi);
                dst.data[(static_cast<std::size_t>(y) * out_width + x) * kC + c] =
                    (1.0 - ty.w_hi) * top + ty.w_hi * bot;
            }
        }
    }
    return dst;
}

RawImage resize_bilinear_adjoint(const RawImage& out_grad, int in_height, int in_width) {
    if (out_grad.height == in_height && out_grad.width == in_width) {
        return out_grad;
    }
    RawImage in_grad;
    in_grad.height = in_height;
    in_grad.width = in_width;
    in_grad.data.assign(static_cast<std::size_t>(in_height) * in_width * kC, 0.0);

    for (int y = 0; y < out_grad.height; ++y) {
        Taps ty = taps_for(y, out_grad.height, in_height);
        for (int x = 0; x < out_grad.width; ++x) {
            Taps tx = taps_for(x, out_grad.width, in_width);
            for (int c = 0; c < kC; ++c) {
                double g = out_grad.data[(static_cast<std::size_t>(y) * out_grad.width + x) * kC + c];
                auto acc = [&](int yy, int xx, double w) {
                    in_grad.data[(static_cast<std::size_t>(yy) * in_width + xx) * kC + c] += w * g;
                };
                acc(ty.lo, tx.lo, (1.0 - ty.w_hi) * (1.0 - tx.w_hi));
                acc(ty.lo, tx.hi, (1.0 - ty.w_hi) * tx.w_hi);
                acc(ty.hi, tx.lo, ty.w_hi * (1.0 - tx.w_hi));
                acc(ty.hi, tx.hi, ty.w_hi * tx.w_hi);
            }
        }
    }
    return in_grad;
}

} // namespace posecloak
