#pragma once

#include "posecloak/tensor.hpp"

namespace posecloak {

/// Raw interleaved plane used for resize intermediates, which may be
/// smaller than ImageTensor's minimum side.
struct RawImage {
    int height = 0;
    int width = 0;
    std::vector<double> data; // h * w * 3, interleaved

    static RawImage from(const ImageTensor& img);
    ImageTensor to_image() const;
};

/// Bilinear resize with half-pixel sample centers. Resizing to the source
/// size is an exact pass-through.
RawImage resize_bilinear(const RawImage& src, int out_height, int out_width);

/// Adjoint of resize_bilinear: scatters an output-shaped cotangent back to
/// an input-shaped gradient using the same interpolation weights.
RawImage resize_bilinear_adjoint(const RawImage& out_grad, int in_height, int in_width);

} // namespace posecloak
