#pragma once

#include <string>
#include <vector>

#include "posecloak/tensor.hpp"

namespace posecloak {

struct ImageReadInfo {
    bool lossy = false; // true when the source was JPEG-compressed
};

/// Reads a PNG or JPEG file into the canonical [0,1] tensor. Lossy
/// sources are permitted but reported through `info` so callers can flag
/// them: re-encoding would have perturbed any embedded protection.
ImageTensor read_image(const std::string& path, ImageReadInfo* info = nullptr);

/// Writes an 8-bit RGB PNG. This is the only place pixel values are
/// quantized.
void write_png(const std::string& path, const ImageTensor& img);

/// Writes a real JPEG file. Protected outputs should stay PNG; this
/// exists for producing lossy probes.
void write_jpeg(const std::string& path, const ImageTensor& img, int quality);

/// Real JPEG codec round trip at the given quality (1..100). Used by the
/// evaluation-time countermeasures, unlike the in-loop surrogate.
ImageTensor jpeg_roundtrip(const ImageTensor& img, int quality);

} // namespace posecloak
