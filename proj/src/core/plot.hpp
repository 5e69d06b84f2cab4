#pragma once

#include <string>
#include <vector>

#include "core/image.hpp"

namespace af::plot {

// Small raster plotting helpers for the emitted figures.

// Line chart of (x, y) pairs with axes, ticks, and numeric labels.
Image line_chart(const std::vector<double>& xs, const std::vector<double>& ys,
                 int width = 640, int height = 480);

// Grayscale plane ([0,1]) as an RGB image.
Image plane_to_image(const Plane& p);

// Tile images left to right, top to bottom with a uniform gap.
Image compose_grid(const std::vector<Image>& tiles, int columns, int gap = 4);

}  // namespace af::plot
