#include "core/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace af {

double range_lo(ValueRange r) { return r == ValueRange::Unit ? 0.0 : -1.0; }
double range_hi(ValueRange r) { return 1.0; }
double range_width(ValueRange r) { return r == ValueRange::Unit ? 1.0 : 2.0; }

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

Image::Image(int h, int w, ValueRange range, double fill)
    : h_(h), w_(w), range_(range) {
  require(h >= 1 && w >= 1, "image dimensions must be at least 1x1");
  double lo = range_lo(range), hi = range_hi(range);
  data_.assign(static_cast<size_t>(h) * w * 3, std::clamp(fill, lo, hi));
}

Image::Image(int h, int w, ValueRange range, std::vector<double> interleaved_rgb)
    : h_(h), w_(w), range_(range), data_(std::move(interleaved_rgb)) {
  require(h >= 1 && w >= 1, "image dimensions must be at least 1x1");
  require(data_.size() == static_cast<size_t>(h) * w * 3,
          "pixel buffer size does not match HxWx3");
  double lo = range_lo(range), hi = range_hi(range);
  for (double& v : data_) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite pixel value");
    if (v < lo) {
      v = lo;
      ++clamp_events_;
    } else if (v > hi) {
      v = hi;
      ++clamp_events_;
    }
  }
}

Image Image::to_range(ValueRange target) const {
  if (target == range_) return *this;
  std::vector<double> out(data_.size());
  if (target == ValueRange::Symmetric) {
    for (size_t i = 0; i < data_.size(); ++i) out[i] = data_[i] * 2.0 - 1.0;
  } else {
    for (size_t i = 0; i < data_.size(); ++i) out[i] = (data_[i] + 1.0) * 0.5;
  }
  return Image(h_, w_, target, std::move(out));
}

Plane Image::channel(int c) const {
  require(c >= 0 && c < 3, "channel index out of range");
  Plane p(h_, w_);
  for (int y = 0; y < h_; ++y)
    for (int x = 0; x < w_; ++x) p.at(y, x) = at(y, x, c);
  return p;
}

Field Image::to_field() const {
  Field f(h_, w_);
  f.v = data_;
  return f;
}

double max_abs_diff(const Image& a, const Image& b) {
  require(a.height() == b.height() && a.width() == b.width(),
          "image dimensions differ");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
  return m;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

}  // namespace af
