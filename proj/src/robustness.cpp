#include "posecloak/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "posecloak/eot.hpp"
#include "posecloak/image_io.hpp"
#include "posecloak/rng.hpp"

namespace posecloak {

namespace {

constexpr int kC = ImageTensor::kChannels;

ImageTensor median_blur(const ImageTensor& img, int kernel) {
    if (kernel < 3 || kernel % 2 == 0) {
        throw std::invalid_argument("median kernel must be odd and at least 3");
    }
    const int h = img.height(), w = img.width(), r = kernel / 2;
    ImageTensor out(h, w);
    std::vector<double> window;
    window.reserve(static_cast<std::size_t>(kernel) * kernel);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < kC; ++c) {
                window.clear();
                for (int dy = -r; dy <= r; ++dy) {
                    for (int dx = -r; dx <= r; ++dx) {
                        int yy = std::clamp(y + dy, 0, h - 1);
                        int xx = std::clamp(x + dx, 0, w - 1);
                        window.push_back(img.at(yy, xx, c));
                    }
                }
                auto mid = window.begin() + window.size() / 2;
                std::nth_element(window.begin(), mid, window.end());
                out.at(y, x, c) = *mid;
            }
        }
    }
    return out;
}

ImageTensor bit_squeeze(const ImageTensor& img, int depth) {
    if (depth < 1 || depth > 8) {
        throw std::invalid_argument("bit depth must lie in [1,8]");
    }
    double levels = static_cast<double>((1 << depth) - 1);
    ImageTensor out = img;
    for (double& v : out.values()) {
        double c = std::min(std::max(v, 0.0), 1.0);
        v = std::round(c * levels) / levels;
    }
    return out;
}

} // namespace

std::string to_string(CountermeasureKind kind) {
    switch (kind) {
    case CountermeasureKind::kJpeg: return "jpeg";
    case CountermeasureKind::kGaussianBlur: return "blur";
    case CountermeasureKind::kGaussianNoise: return "noise";
    case CountermeasureKind::kMedianBlur: return "median";
    case CountermeasureKind::kBitSqueeze: return "bit";
    }
    return "unknown";
}

CountermeasureKind countermeasure_from_string(const std::string& name) {
    if (name == "jpeg") return CountermeasureKind::kJpeg;
    if (name == "blur") return CountermeasureKind::kGaussianBlur;
    if (name == "noise") return CountermeasureKind::kGaussianNoise;
    if (name == "median") return CountermeasureKind::kMedianBlur;
    if (name == "bit") return CountermeasureKind::kBitSqueeze;
    throw std::invalid_argument("unknown countermeasure '" + name + "'");
}

ImageTensor apply_countermeasure(CountermeasureKind kind, double param, const ImageTensor& img,
                                 std::uint64_t noise_seed) {
    switch (kind) {
    case CountermeasureKind::kJpeg: {
        double rounded = std::round(param);
        if (rounded < 1.0 || rounded > 100.0) {
            throw std::invalid_argument("JPEG quality must lie in [1,100]");
        }
        return jpeg_roundtrip(img, static_cast<int>(rounded));
    }
    case CountermeasureKind::kGaussianBlur:
        return clamp_valid(gaussian_blur(img, param));
    case CountermeasureKind::kGaussianNoise: {
        if (!(param >= 0.0)) {
            throw std::invalid_argument("noise scale must be nonnegative");
        }
        SplitRng rng(noise_seed);
        ImageTensor out = img;
        for (double& v : out.values()) {
            v = std::min(std::max(v + param * rng.normal(), 0.0), 1.0);
        }
        return out;
    }
    case CountermeasureKind::kMedianBlur: {
        double rounded = std::round(param);
        return median_blur(img, static_cast<int>(rounded));
    }
    case CountermeasureKind::kBitSqueeze: {
        double rounded = std::round(param);
        return bit_squeeze(img, static_cast<int>(rounded));
    }
    }
    throw std::invalid_argument("unsupported countermeasure");
}

std::vector<SweepAxis> default_sweep_axes() {
    return {
        {CountermeasureKind::kJpeg, {50, 60, 70, 75, 80, 90}},
        {CountermeasureKind::kGaussianBlur, {0.5, 1, 2, 3, 5}},
        {CountermeasureKind::kGaussianNoise, {0.01, 0.02, 0.05, 0.1}},
        {CountermeasureKind::kMedianBlur, {3, 5, 7, 9}},
        {CountermeasureKind::kBitSqueeze, {2, 3, 4, 5, 6}},
    };
}

SweepTable sweep(const ImageTensor& protected_img, const ImageTensor& clean_img,
                 const SweepAxis& axis, const DownstreamEval& downstream) {
    if (axis.params.empty()) {
        throw std::invalid_argument("sweep axis must hold at least one parameter");
    }
    if (!protected_img.same_shape(clean_img)) {
        throw std::invalid_argument("protected and clean images must share a shape");
    }
    SweepTable table;
    table.kind = axis.kind;
    table.clean_baseline = downstream(clean_img);
    for (double param : axis.params) {
        SweepRow row;
        row.param = param;
        row.protected_metrics = downstream(apply_countermeasure(axis.kind, param, protected_img));
        row.clean_metrics = downstream(apply_countermeasure(axis.kind, param, clean_img));
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string sweep_table_tsv(const SweepTable& table) {
    std::ostringstream out;
    std::vector<std::string> metric_names;
    for (const auto& [name, _] : table.clean_baseline) {
        metric_names.push_back(name);
    }
    out << "transform\tparam\tseries";
    for (const auto& name : metric_names) {
        out << '\t' << name;
    }
    out << '\n';
    auto emit = [&](double param, const std::string& series,
                    const std::map<std::string, double>& metrics) {
        out << to_string(table.kind) << '\t' << param << '\t' << series;
        for (const auto& name : metric_names) {
            auto it = metrics.find(name);
            out << '\t';
            if (it != metrics.end()) {
                out << it->second;
            }
        }
        out << '\n';
    };
    emit(0.0, "clean_baseline", table.clean_baseline);
    for (const auto& row : table.rows) {
        emit(row.param, "protected", row.protected_metrics);
        emit(row.param, "clean", row.clean_metrics);
    }
    return out.str();
}

ImageTensor interpolate_average_purify(const std::vector<ImageTensor>& images) {
    if (images.size() != 5) {
        throw std::invalid_argument("purifier expects exactly five images");
    }
    for (const auto& img : images) {
        if (!img.same_shape(images.front())) {
            throw std::invalid_argument("purifier inputs must share a shape");
        }
    }
    ImageTensor out(images[0].height(), images[0].width());
    auto ov = out.values();
    auto v0 = images[0].values();
    auto v1 = images[1].values();
    auto v2 = images[2].values();
    auto v3 = images[3].values();
    auto v4 = images[4].values();
    // Pairwise grouping keeps the identical-input case bit-exact: each
    // midpoint equals v, and (v+v)+(v+v) scaled by 1/4 is exactly v.
    for (std::size_t j = 0; j < ov.size(); ++j) {
        double m0 = 0.5 * (v0[j] + v1[j]);
        double m1 = 0.5 * (v1[j] + v2[j]);
        double m2 = 0.5 * (v2[j] + v3[j]);
        double m3 = 0.5 * (v3[j] + v4[j]);
        ov[j] = 0.25 * ((m0 + m1) + (m2 + m3));
    }
    return out;
}

} // namespace posecloak
