#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace af::io {

// Lossless 8-bit RGB PNG. Reading accepts 8-bit gray/RGB/RGBA non-interlaced
// PNG and binary PPM (P6); alpha is dropped.
Image read_image(const std::string& path,
                 ValueRange range = ValueRange::Unit);
void write_png(const Image& img, const std::string& path);

std::vector<uint8_t> encode_png(const Image& img);
Image decode_png(const std::vector<uint8_t>& bytes,
                 ValueRange range = ValueRange::Unit);

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<uint8_t>& bytes);
void write_text(const std::string& path, const std::string& text);

}  // namespace af::io
