#include "core/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "core/color.hpp"
#include "core/image_io.hpp"
#include "core/rng.hpp"

namespace af::dataset {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

struct Blob {
  double cy, cx, sy, sx, amp;
};

double blob_value(const Blob& b, double y, double x) {
  double dy = (y - b.cy) / b.sy, dx = (x - b.cx) / b.sx;
  return b.amp * std::exp(-0.5 * (dy * dy + dx * dx));
}

}  // namespace

Image synthetic_image(uint64_t master_seed, uint64_t index, int h, int w) {
  require(h >= 1 && w >= 1, "image dimensions must be at least 1x1");
  auto rng = substream_rng(master_seed, "dataset", index);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  // lightness: base + slow gradients + a face-like bump + fine texture
  double base_l = uni(45.0, 62.0);
  struct Wave {
    double fy, fx, phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 3; ++i)
    waves.push_back({uni(0.5, 2.5), uni(0.5, 2.5), uni(0.0, kTwoPi), uni(2.5, 6.0)});
  Wave texture{uni(8.0, 18.0), uni(8.0, 18.0), uni(0.0, kTwoPi), uni(1.0, 2.5)};
  Blob face{uni(0.35, 0.65), uni(0.35, 0.65), uni(0.18, 0.30), uni(0.15, 0.25),
            uni(-9.0, 9.0)};

  // chroma: gentle field plus a few soft blobs per channel
  double base_a = uni(-7.0, 7.0), base_b = uni(-7.0, 7.0);
  std::vector<Blob> blobs_a, blobs_b;
  for (int i = 0; i < 3; ++i) {
    blobs_a.push_back({uni(0.1, 0.9), uni(0.1, 0.9), uni(0.10, 0.30),
                       uni(0.10, 0.30), uni(-7.0, 7.0)});
    blobs_b.push_back({uni(0.1, 0.9), uni(0.1, 0.9), uni(0.10, 0.30),
                       uni(0.10, 0.30), uni(-7.0, 7.0)});
  }

  color::LabImage lab{Plane(h, w), Plane(h, w), Plane(h, w)};
  for (int y = 0; y < h; ++y) {
    double fy = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
    for (int x = 0; x < w; ++x) {
      double fx = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
      double L = base_l;
      for (const Wave& wv : waves)
        L += wv.amp * std::cos(kTwoPi * (wv.fy * fy + wv.fx * fx) + wv.phase);
      L += texture.amp * std::cos(kTwoPi * (texture.fy * fy + texture.fx * fx) +
                                  texture.phase);
      L += blob_value(face, fy, fx);
      double a = base_a, b = base_b;
      for (const Blob& bl : blobs_a) a += blob_value(bl, fy, fx);
      for (const Blob& bl : blobs_b) b += blob_value(bl, fy, fx);
      // keep headroom for bounded a/b perturbations
      lab.L.at(y, x) = std::clamp(L, 25.0, 85.0);
      lab.a.at(y, x) = std::clamp(a, -16.0, 16.0);
      lab.b.at(y, x) = std::clamp(b, -16.0, 16.0);
    }
  }
  return color::lab_to_rgb(lab, ValueRange::Unit);
}

Image center_crop(const Image& img, int h, int w) {
  require(img.height() >= h && img.width() >= w,
          "image smaller than crop size");
  int oy = (img.height() - h) / 2;
  int ox = (img.width() - w) / 2;
  std::vector<double> px(static_cast<size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        px[(static_cast<size_t>(y) * w + x) * 3 + c] = img.at(oy + y, ox + x, c);
  return Image(h, w, img.range(), std::move(px));
}

std::vector<Image> load_dataset(const DatasetSpec& spec, uint64_t master_seed,
                                ValueRange range) {
  require(spec.count >= 1, "dataset count must be positive");
  std::vector<Image> out;
  out.reserve(static_cast<size_t>(spec.count));
  if (spec.source == "synthetic") {
    for (int i = 0; i < spec.count; ++i) {
      Image img = synthetic_image(master_seed, static_cast<uint64_t>(i),
                                  spec.height, spec.width);
      out.push_back(img.to_range(range));
    }
    return out;
  }
  namespace fs = std::filesystem;
  if (!fs::is_directory(spec.source))
    throw std::invalid_argument("dataset directory does not exist: " + spec.source);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(spec.source)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".ppm") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  require(!files.empty(), "no PNG/PPM files in dataset directory");
  for (const std::string& path : files) {
    if (static_cast<int>(out.size()) >= spec.count) break;
    Image img = io::read_image(path, ValueRange::Unit);
    out.push_back(center_crop(img, spec.height, spec.width).to_range(range));
  }
  require(static_cast<int>(out.size()) == spec.count,
          "dataset directory holds fewer images than requested");
  return out;
}

}  // namespace af::dataset
