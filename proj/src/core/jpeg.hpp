#pragma once

#include <cstdint>
#include <vector>

#include "core/image.hpp"

namespace af::jpeg {

// Self-contained baseline JFIF codec: sequential DCT, 4:2:0 subsampling,
// standard quantization tables scaled by quality, standard Huffman tables.
// Being self-contained keeps the byte stream identical across machines.

std::vector<uint8_t> encode(const Image& img, int quality);

// Decodes baseline (SOF0) JFIF streams with 8-bit samples, 1 or 3
// components, sampling factors 1 or 2, optional restart intervals.
Image decode(const std::vector<uint8_t>& bytes,
             ValueRange range = ValueRange::Unit);

Image roundtrip(const Image& img, int quality);

// Identifier recorded in result metadata.
const char* codec_id();

}  // namespace af::jpeg
