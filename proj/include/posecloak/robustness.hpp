#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "posecloak/tensor.hpp"

namespace posecloak {

enum class CountermeasureKind {
    kJpeg,        // real codec, quality in [1,100]
    kGaussianBlur,
    kGaussianNoise,
    kMedianBlur,  // odd kernel >= 3
    kBitSqueeze,  // bit depth in [1,8]
};

std::string to_string(CountermeasureKind kind);
CountermeasureKind countermeasure_from_string(const std::string& name);

/// Applies one evaluation-time transformation at full fidelity (bit-exact
/// JPEG, true spatial median, hard quantization). Output keeps the input
/// shape and the [0,1] range.
ImageTensor apply_countermeasure(CountermeasureKind kind, double param, const ImageTensor& img,
                                 std::uint64_t noise_seed = 0);

/// One transformation family with its ordered parameter list.
struct SweepAxis {
    CountermeasureKind kind;
    std::vector<double> params;
};

/// Fig-6-style default axes, one per transformation family.
std::vector<SweepAxis> default_sweep_axes();

using DownstreamEval = std::function<std::map<std::string, double>(const ImageTensor&)>;

struct SweepRow {
    double param = 0.0;
    std::map<std::string, double> protected_metrics;
    std::map<std::string, double> clean_metrics;
};

struct SweepTable {
    CountermeasureKind kind = CountermeasureKind::kJpeg;
    std::vector<SweepRow> rows;
    // Untransformed clean-image series: the constant baseline every sweep
    // is read against.
    std::map<std::string, double> clean_baseline;
};

/// Applies every parameter of the axis to both the protected and the
/// clean image, runs the downstream evaluation on each, and tabulates the
/// results together with the untransformed clean baseline.
SweepTable sweep(const ImageTensor& protected_img, const ImageTensor& clean_img,
                 const SweepAxis& axis, const DownstreamEval& downstream);

/// Serializes a sweep table as tab-separated text.
std::string sweep_table_tsv(const SweepTable& table);

/// Purification attack on a set of five protected images: midpoint
/// interpolation of the four adjacent pairs, then averaging the four
/// midpoints. Equals the fixed (1,2,2,2,1)/8 weighting of the inputs.
ImageTensor interpolate_average_purify(const std::vector<ImageTensor>& images);

} // namespace posecloak
