#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace af {

// Declared pixel range of an image: [0,1] or [-1,1].
enum class ValueRange { Unit, Symmetric };

double range_lo(ValueRange r);
double range_hi(ValueRange r);
double range_width(ValueRange r);

// Single H x W channel, row major.
struct Plane {
  int h = 0;
  int w = 0;
  std::vector<double> v;

  Plane() = default;
  Plane(int height, int width, double fill = 0.0)
      : h(height), w(width), v(static_cast<size_t>(height) * width, fill) {}

  double& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  size_t size() const { return v.size(); }
};

// Raw H x W x 3 buffer, interleaved row major, no range semantics. Used for
// gradients and other unclamped per-pixel quantities.
struct Field {
  int h = 0;
  int w = 0;
  std::vector<double> v;

  Field() = default;
  Field(int height, int width, double fill = 0.0)
      : h(height), w(width), v(static_cast<size_t>(height) * width * 3, fill) {}

  double& at(int y, int x, int c) {
    return v[(static_cast<size_t>(y) * w + x) * 3 + c];
  }
  double at(int y, int x, int c) const {
    return v[(static_cast<size_t>(y) * w + x) * 3 + c];
  }
  size_t size() const { return v.size(); }
};

// H x W x 3 image, interleaved row major. Pixel values are clamped into the
// declared range at construction; the number of clamped samples is kept so
// callers can observe gamut/range violations instead of silently losing them.
class Image {
 public:
  Image() = default;
  Image(int h, int w, ValueRange range, double fill = 0.0);
  Image(int h, int w, ValueRange range, std::vector<double> interleaved_rgb);

  int height() const { return h_; }
  int width() const { return w_; }
  ValueRange range() const { return range_; }
  size_t size() const { return data_.size(); }
  long clamp_events() const { return clamp_events_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& at(int y, int x, int c) {
    return data_[(static_cast<size_t>(y) * w_ + x) * 3 + c];
  }
  double at(int y, int x, int c) const {
    return data_[(static_cast<size_t>(y) * w_ + x) * 3 + c];
  }

  // Affine remap into another declared range.
  Image to_range(ValueRange target) const;

  Plane channel(int c) const;
  Field to_field() const;

 private:
  int h_ = 0;
  int w_ = 0;
  ValueRange range_ = ValueRange::Unit;
  std::vector<double> data_;
  long clamp_events_ = 0;
};

// Elementwise helpers used across attacks and metrics.
double max_abs_diff(const Image& a, const Image& b);
double max_abs(const std::vector<double>& v);

void require(bool cond, const std::string& msg);

}  // namespace af
