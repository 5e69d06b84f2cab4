#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace af::dataset {

struct DatasetSpec {
  std::string source = "synthetic";  // "synthetic" or a directory path
  int count = 32;
  int height = 128;
  int width = 128;
};

// Seeded synthetic portrait-like image in [0,1]: smooth lightness structure
// with moderate chroma, built in Lab so every pixel stays comfortably inside
// the sRGB gamut even after bounded a/b perturbations.
Image synthetic_image(uint64_t master_seed, uint64_t index, int h, int w);

Image center_crop(const Image& img, int h, int w);

// Synthetic generation or a directory of PNG/PPM files (sorted by name,
// center-cropped to the requested size).
std::vector<Image> load_dataset(const DatasetSpec& spec, uint64_t master_seed,
                                ValueRange range = ValueRange::Unit);

}  // namespace af::dataset
