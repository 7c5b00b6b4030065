#include "posecloak/image_io.hpp"

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

#include <jpeglib.h>
#include <png.h>

namespace posecloak {

namespace {

std::vector<unsigned char> quantize_rgb8(const ImageTensor& img) {
    std::vector<unsigned char> bytes(img.size());
    auto v = img.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        double c = std::min(std::max(v[i], 0.0), 1.0);
        bytes[i] = static_cast<unsigned char>(std::lround(c * 255.0));
    }
    return bytes;
}

ImageTensor from_rgb8(const unsigned char* bytes, int h, int w) {
    ImageTensor img(h, w);
    auto v = img.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = bytes[i] / 255.0;
    }
    return img;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

ImageTensor read_png_file(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) {
        throw std::runtime_error("cannot open image file: " + path);
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed to decode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_read_png(png, info,
                 PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_EXPAND |
                     PNG_TRANSFORM_GRAY_TO_RGB,
                 nullptr);
    int h = static_cast<int>(png_get_image_height(png, info));
    int w = static_cast<int>(png_get_image_width(png, info));
    png_bytepp rows = png_get_rows(png, info);
    if (png_get_channels(png, info) != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("unsupported PNG channel layout: " + path);
    }
    ImageTensor img(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                img.at(y, x, c) = rows[y][x * 3 + c] / 255.0;
            }
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

ImageTensor decode_jpeg_bytes(const unsigned char* data, unsigned long size) {
    jpeg_decompress_struct cinfo{};
    JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error("failed to decode JPEG data");
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, data, size);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    int h = static_cast<int>(cinfo.output_height);
    int w = static_cast<int>(cinfo.output_width);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(h) * w * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row = bytes.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return from_rgb8(bytes.data(), h, w);
}

ImageTensor read_jpeg_file(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) {
        throw std::runtime_error("cannot open image file: " + path);
    }
    std::fseek(fp.get(), 0, SEEK_END);
    long size = std::ftell(fp.get());
    std::fseek(fp.get(), 0, SEEK_SET);
    std::vector<unsigned char> data(static_cast<std::size_t>(size));
    if (std::fread(data.data(), 1, data.size(), fp.get()) != data.size()) {
        throw std::runtime_error("failed to read image file: " + path);
    }
    return decode_jpeg_bytes(data.data(), static_cast<unsigned long>(data.size()));
}

} // namespace

ImageTensor read_image(const std::string& path, ImageReadInfo* info) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) {
        throw std::runtime_error("cannot open image file: " + path);
    }
    unsigned char magic[4] = {0, 0, 0, 0};
    std::size_t got = std::fread(magic, 1, sizeof(magic), fp.get());
    fp.reset();
    if (got >= 4 && magic[0] == 0x89 && magic[1] == 'P' && magic[2] == 'N' && magic[3] == 'G') {
        if (info) info->lossy = false;
        return read_png_file(path);
    }
    if (got >= 3 && magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) {
        if (info) info->lossy = true;
        return read_jpeg_file(path);
    }
    throw std::runtime_error("unsupported image format (expected PNG or JPEG): " + path);
}

void write_png(const std::string& path, const ImageTensor& img) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) {
        throw std::runtime_error("cannot open output file: " + path);
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed to encode PNG: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    std::vector<unsigned char> bytes = quantize_rgb8(img);
    std::vector<png_bytep> rows(img.height());
    for (int y = 0; y < img.height(); ++y) {
        rows[y] = bytes.data() + static_cast<std::size_t>(y) * img.width() * 3;
    }
    png_set_rows(png, info, rows.data());
    png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
    png_destroy_write_struct(&png, &info);
}

namespace {

std::vector<unsigned char> encode_jpeg_bytes(const ImageTensor& img, int quality) {
    if (quality < 1 || quality > 100) {
        throw std::invalid_argument("JPEG quality must lie in [1,100]");
    }
    std::vector<unsigned char> rgb = quantize_rgb8(img);

    jpeg_compress_struct cinfo{};
    JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;
    unsigned char* buffer = nullptr;
    unsigned long buffer_size = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        if (buffer) free(buffer);
        throw std::runtime_error("failed to encode JPEG data");
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &buffer_size);
    cinfo.image_width = static_cast<JDIMENSION>(img.width());
    cinfo.image_height = static_cast<JDIMENSION>(img.height());
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        unsigned char* row =
            rgb.data() + static_cast<std::size_t>(cinfo.next_scanline) * img.width() * 3;
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);

    std::vector<unsigned char> bytes(buffer, buffer + buffer_size);
    free(buffer);
    return bytes;
}

} // namespace

void write_jpeg(const std::string& path, const ImageTensor& img, int quality) {
    std::vector<unsigned char> bytes = encode_jpeg_bytes(img, quality);
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) {
        throw std::runtime_error("cannot open output file: " + path);
    }
    if (std::fwrite(bytes.data(), 1, bytes.size(), fp.get()) != bytes.size()) {
        throw std::runtime_error("failed to write JPEG file: " + path);
    }
}

ImageTensor jpeg_roundtrip(const ImageTensor& img, int quality) {
    std::vector<unsigned char> bytes = encode_jpeg_bytes(img, quality);
    return decode_jpeg_bytes(bytes.data(), static_cast<unsigned long>(bytes.size()));
}

} // namespace posecloak
