#include "posecloak/eot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "posecloak/resize.hpp"

namespace posecloak {

namespace {

constexpr int kC = ImageTensor::kChannels;

std::vector<double> blur_kernel(double sigma) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("blur sigma must be positive");
    }
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[i + radius] = w;
        sum += w;
    }
    for (double& w : k) {
        w /= sum;
    }
    return k;
}

// Separable convolution with replicated borders along one axis.
void blur_axis(const std::vector<double>& kernel, const double* src, double* dst, int h, int w,
               bool vertical) {
    int radius = static_cast<int>(kernel.size()) / 2;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < kC; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    int yy = vertical ? std::clamp(y + i, 0, h - 1) : y;
                    int xx = vertical ? x : std::clamp(x + i, 0, w - 1);
                    acc += kernel[i + radius] * src[(static_cast<std::size_t>(yy) * w + xx) * kC + c];
                }
                dst[(static_cast<std::size_t>(y) * w + x) * kC + c] = acc;
            }
        }
    }
}

// Adjoint of blur_axis: scatter each cotangent through the same taps.
void blur_axis_adjoint(const std::vector<double>& kernel, const double* out_grad, double* in_grad,
                       int h, int w, bool vertical) {
    int radius = static_cast<int>(kernel.size()) / 2;
    std::fill(in_grad, in_grad + static_cast<std::size_t>(h) * w * kC, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < kC; ++c) {
                double g = out_grad[(static_cast<std::size_t>(y) * w + x) * kC + c];
                for (int i = -radius; i <= radius; ++i) {
                    int yy = vertical ? std::clamp(y + i, 0, h - 1) : y;
                    int xx = vertical ? x : std::clamp(x + i, 0, w - 1);
                    in_grad[(static_cast<std::size_t>(yy) * w + xx) * kC + c] += kernel[i + radius] * g;
                }
            }
        }
    }
}

std::vector<double> noise_field(std::size_t n, double stddev, std::uint64_t seed) {
    SplitRng rng(seed);
    std::vector<double> noise(n);
    for (double& v : noise) {
        v = stddev * rng.normal();
    }
    return noise;
}

// ---- JPEG surrogate -------------------------------------------------------

// Orthonormal 8x8 DCT-II basis.
std::array<std::array<double, 8>, 8> dct_basis() {
    std::array<std::array<double, 8>, 8> c{};
    for (int k = 0; k < 8; ++k) {
        double scale = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
        for (int n = 0; n < 8; ++n) {
            c[k][n] = scale * std::cos(std::numbers::pi * k * (2 * n + 1) / 16.0);
        }
    }
    return c;
}

constexpr std::array<int, 64> kLumaTable = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr std::array<int, 64> kChromaTable = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

std::array<double, 64> scaled_table(const std::array<int, 64>& base, int quality) {
    quality = std::clamp(quality, 1, 100);
    double scale = quality < 50 ? 5000.0 / quality : 200.0 - 2.0 * quality;
    std::array<double, 64> q{};
    for (int i = 0; i < 64; ++i) {
        double v = std::floor((base[i] * scale + 50.0) / 100.0);
        q[i] = std::clamp(v, 1.0, 255.0);
    }
    return q;
}

// Forward surrogate without the final clamp. Works on full-range YCbCr
// planes, one 8x8 block at a time.
ImageTensor jpeg_surrogate_preclamp(const ImageTensor& img, int quality) {
    static const auto basis = dct_basis();
    const int h = img.height(), w = img.width();
    const int ph = (h + 7) / 8 * 8, pw = (w + 7) / 8 * 8;
    const auto luma_q = scaled_table(kLumaTable, quality);
    const auto chroma_q = scaled_table(kChromaTable, quality);

    // RGB -> YCbCr on the 255 scale, edge-replicated to block multiples.
    std::vector<double> planes(static_cast<std::size_t>(3) * ph * pw);
    for (int y = 0; y < ph; ++y) {
        int sy = std::min(y, h - 1);
        for (int x = 0; x < pw; ++x) {
            int sx = std::min(x, w - 1);
            double r = img.at(sy, sx, 0) * 255.0;
            double g = img.at(sy, sx, 1) * 255.0;
            double b = img.at(sy, sx, 2) * 255.0;
            std::size_t i = static_cast<std::size_t>(y) * pw + x;
            planes[i] = 0.299 * r + 0.587 * g + 0.114 * b - 128.0;
            planes[static_cast<std::size_t>(ph) * pw + i] =
                -0.168736 * r - 0.331264 * g + 0.5 * b;
            planes[2 * static_cast<std::size_t>(ph) * pw + i] =
                0.5 * r - 0.418688 * g - 0.081312 * b;
        }
    }

    double block[8][8], tmp[8][8];
    for (int p = 0; p < 3; ++p) {
        const auto& qtab = p == 0 ? luma_q : chroma_q;
        double* plane = planes.data() + static_cast<std::size_t>(p) * ph * pw;
        for (int by = 0; by < ph; by += 8) {
            for (int bx = 0; bx < pw; bx += 8) {
                // DCT: C * B * C^T
                for (int i = 0; i < 8; ++i) {
                    for (int j = 0; j < 8; ++j) {
                        double acc = 0.0;
                        for (int n = 0; n < 8; ++n) {
                            acc += basis[j][n] * plane[(by + i) * static_cast<std::size_t>(pw) + bx + n];
                        }
                        tmp[i][j] = acc;
                    }
                }
                for (int i = 0; i < 8; ++i) {
                    for (int j = 0; j < 8; ++j) {
                        double acc = 0.0;
                        for (int n = 0; n < 8; ++n) {
                            acc += basis[i][n] * tmp[n][j];
                        }
                        // quantize / dequantize; round is straight-through
                        double q = qtab[i * 8 + j];
                        block[i][j] = std::round(acc / q) * q;
                    }
                }
                // IDCT: C^T * B * C
                for (int i = 0; i < 8; ++i) {
                    for (int j = 0; j < 8; ++j) {
                        double acc = 0.0;
                        for (int n = 0; n < 8; ++n) {
                            acc += basis[n][i] * block[n][j];
                        }
                        tmp[i][j] = acc;
                    }
                }
                for (int i = 0; i < 8; ++i) {
                    for (int j = 0; j < 8; ++j) {
                        double acc = 0.0;
                        for (int n = 0; n < 8; ++n) {
                            acc += tmp[i][n] * basis[n][j];
                        }
                        plane[(by + i) * static_cast<std::size_t>(pw) + bx + j] = acc;
                    }
                }
            }
        }
    }

    ImageTensor out(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::size_t i = static_cast<std::size_t>(y) * pw + x;
            double Y = planes[i] + 128.0;
            double cb = planes[static_cast<std::size_t>(ph) * pw + i];
            double cr = planes[2 * static_cast<std::size_t>(ph) * pw + i];
            out.at(y, x, 0) = (Y + 1.402 * cr) / 255.0;
            out.at(y, x, 1) = (Y - 0.344136 * cb - 0.714136 * cr) / 255.0;
            out.at(y, x, 2) = (Y + 1.772 * cb) / 255.0;
        }
    }
    return out;
}

ImageTensor clamp01(const ImageTensor& img) {
    return clamp_valid(img);
}

PerturbationField masked_passthrough(const ImageTensor& preclamp, const PerturbationField& g) {
    PerturbationField out = g;
    auto pv = preclamp.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i) {
        if (pv[i] < 0.0 || pv[i] > 1.0) {
            ov[i] = 0.0;
        }
    }
    return out;
}

int rounded_dim(int dim, double scale) {
    return std::max(1, static_cast<int>(std::lround(dim * scale)));
}

} // namespace

std::string to_string(TransformKind kind) {
    switch (kind) {
    case TransformKind::kGaussianBlur: return "gaussian_blur";
    case TransformKind::kJpegCompress: return "jpeg_compress";
    case TransformKind::kGaussianNoise: return "gaussian_noise";
    case TransformKind::kRandomResize: return "random_resize";
    case TransformKind::kIdentity: return "identity";
    }
    return "unknown";
}

TransformSpec sample_transform(const EotConfig& cfg, SplitRng& rng) {
    TransformSpec spec;
    switch (rng.uniform_int(5)) {
    case 0:
        spec.kind = TransformKind::kGaussianBlur;
        spec.value = rng.uniform(cfg.blur_sigma_min, cfg.blur_sigma_max);
        break;
    case 1:
        spec.kind = TransformKind::kJpegCompress;
        spec.value = static_cast<double>(
            cfg.jpeg_quality_min +
            static_cast<int>(rng.uniform_int(
                static_cast<std::uint64_t>(cfg.jpeg_quality_max - cfg.jpeg_quality_min + 1))));
        break;
    case 2:
        spec.kind = TransformKind::kGaussianNoise;
        spec.value = rng.uniform(cfg.noise_std_min, cfg.noise_std_max);
        spec.seed = rng.next_u64();
        break;
    case 3:
        spec.kind = TransformKind::kRandomResize;
        spec.value = rng.uniform(cfg.resize_scale_min, cfg.resize_scale_max);
        break;
    default:
        spec.kind = TransformKind::kIdentity;
        break;
    }
    return spec;
}

ImageTensor gaussian_blur(const ImageTensor& img, double sigma) {
    auto kernel = blur_kernel(sigma);
    ImageTensor tmp(img.height(), img.width());
    ImageTensor out(img.height(), img.width());
    blur_axis(kernel, img.values().data(), tmp.values().data(), img.height(), img.width(), false);
    blur_axis(kernel, tmp.values().data(), out.values().data(), img.height(), img.width(), true);
    return out;
}

ImageTensor apply_transform(const TransformSpec& spec, const ImageTensor& img) {
    switch (spec.kind) {
    case TransformKind::kIdentity:
        return img;
    case TransformKind::kGaussianBlur:
        return gaussian_blur(img, spec.value);
    case TransformKind::kJpegCompress:
        return clamp01(jpeg_surrogate_preclamp(img, static_cast<int>(spec.value)));
    case TransformKind::kGaussianNoise: {
        ImageTensor out = img;
        auto noise = noise_field(out.size(), spec.value, spec.seed);
        auto ov = out.values();
        for (std::size_t i = 0; i < ov.size(); ++i) {
            ov[i] = std::min(std::max(ov[i] + noise[i], 0.0), 1.0);
        }
        return out;
    }
    case TransformKind::kRandomResize: {
        RawImage raw = RawImage::from(img);
        RawImage small = resize_bilinear(raw, rounded_dim(img.height(), spec.value),
                                         rounded_dim(img.width(), spec.value));
        return resize_bilinear(small, img.height(), img.width()).to_image();
    }
    }
    throw std::invalid_argument("unsupported transform spec");
}

PerturbationField transform_vjp(const TransformSpec& spec, const ImageTensor& input,
                                const PerturbationField& out_grad) {
    switch (spec.kind) {
    case TransformKind::kIdentity:
        return out_grad;
    case TransformKind::kGaussianBlur: {
        auto kernel = blur_kernel(spec.value);
        PerturbationField tmp(input.height(), input.width());
        PerturbationField in_grad(input.height(), input.width());
        blur_axis_adjoint(kernel, out_grad.values().data(), tmp.values().data(), input.height(),
                          input.width(), true);
        blur_axis_adjoint(kernel, tmp.values().data(), in_grad.values().data(), input.height(),
                          input.width(), false);
        return in_grad;
    }
    case TransformKind::kJpegCompress: {
        // Straight-through: quantization backward is identity, the color
        // and DCT stages cancel exactly, so only the clamp masks.
        ImageTensor pre = jpeg_surrogate_preclamp(input, static_cast<int>(spec.value));
        return masked_passthrough(pre, out_grad);
    }
    case TransformKind::kGaussianNoise: {
        ImageTensor pre = input;
        auto noise = noise_field(pre.size(), spec.value, spec.seed);
        auto pv = pre.values();
        for (std::size_t i = 0; i < pv.size(); ++i) {
            pv[i] += noise[i];
        }
        return masked_passthrough(pre, out_grad);
    }
    case TransformKind::kRandomResize: {
        int sh = rounded_dim(input.height(), spec.value);
        int sw = rounded_dim(input.width(), spec.value);
        RawImage g;
        g.height = input.height();
        g.width = input.width();
        g.data.assign(out_grad.values().begin(), out_grad.values().end());
        RawImage small_grad = resize_bilinear_adjoint(g, sh, sw);
        RawImage in = resize_bilinear_adjoint(small_grad, input.height(), input.width());
        PerturbationField out(input.height(), input.width());
        std::copy(in.data.begin(), in.data.end(), out.values().begin());
        return out;
    }
    }
    throw std::invalid_argument("unsupported transform spec");
}

} // namespace posecloak
