#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace af::metrics {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

Plane luma(const Image& img) {
  Plane p(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      p.at(y, x) = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) +
                   0.114 * img.at(y, x, 2);
  return p;
}

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::vector<double> ssim_window() {
  std::vector<double> w(kSsimWindow);
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    double d = i - (kSsimWindow - 1) / 2.0;
    w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

// Separable 'valid' correlation with the normalized window.
Plane filter_valid(const Plane& p, const std::vector<double>& w) {
  const int r = static_cast<int>(w.size());
  Plane rows(p.h, p.w - r + 1);
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x + r <= p.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < r; ++k) s += w[k] * p.at(y, x + k);
      rows.at(y, x) = s;
    }
  Plane out(p.h - r + 1, rows.w);
  for (int y = 0; y + r <= p.h; ++y)
    for (int x = 0; x < rows.w; ++x) {
      double s = 0.0;
      for (int k = 0; k < r; ++k) s += w[k] * rows.at(y + k, x);
      out.at(y, x) = s;
    }
  return out;
}

Plane hadamard(const Plane& a, const Plane& b) {
  Plane out(a.h, a.w);
  for (size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

void check_same_shape(const Image& a, const Image& b) {
  require(a.height() == b.height() && a.width() == b.width(),
          "image dimensions differ");
}

// Naive row-column DFT; image sides at desk scale keep this cheap.
std::vector<std::complex<double>> dft2(const Plane& p) {
  const int h = p.h, w = p.w;
  std::vector<std::complex<double>> rows(static_cast<size_t>(h) * w);
  std::vector<std::complex<double>> tw(w);
  for (int k = 0; k < w; ++k)
    tw[k] = std::polar(1.0, -2.0 * kPi * k / w);
  for (int y = 0; y < h; ++y) {
    for (int u = 0; u < w; ++u) {
      std::complex<double> s = 0.0;
      for (int x = 0; x < w; ++x) s += p.at(y, x) * tw[(u * x) % w];
      rows[static_cast<size_t>(y) * w + u] = s;
    }
  }
  std::vector<std::complex<double>> out(static_cast<size_t>(h) * w);
  std::vector<std::complex<double>> twh(h);
  for (int k = 0; k < h; ++k)
    twh[k] = std::polar(1.0, -2.0 * kPi * k / h);
  for (int u = 0; u < w; ++u) {
    for (int v = 0; v < h; ++v) {
      std::complex<double> s = 0.0;
      for (int y = 0; y < h; ++y) s += rows[static_cast<size_t>(y) * w + u] * twh[(v * y) % h];
      out[static_cast<size_t>(v) * w + u] = s;
    }
  }
  return out;
}

}  // namespace

const char* MetricsReport::csv_header() { return "l2,psnr,ssim,mse,asr"; }

std::string MetricsReport::csv_row() const {
  return fmt(l2) + "," + fmt(psnr) + "," + fmt(ssim) + "," + fmt(mse) + "," +
         fmt(asr);
}

std::string MetricsReport::json() const {
  auto num = [](double v) {
    return std::isinf(v) ? std::string("\"inf\"") : fmt(v);
  };
  return "{\"l2\":" + num(l2) + ",\"psnr\":" + num(psnr) +
         ",\"ssim\":" + num(ssim) + ",\"mse\":" + num(mse) +
         ",\"asr\":" + num(asr) + "}";
}

double mse(const Image& a, const Image& b) {
  check_same_shape(a, b);
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b, double peak) {
  if (peak <= 0.0) peak = range_width(a.range());
  double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

double ssim(const Image& a, const Image& b) {
  check_same_shape(a, b);
  require(a.height() >= kSsimWindow && a.width() >= kSsimWindow,
          "image smaller than SSIM window");
  const double range = range_width(a.range());
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  Plane x = luma(a), y = luma(b);
  auto w = ssim_window();
  Plane mu_x = filter_valid(x, w);
  Plane mu_y = filter_valid(y, w);
  Plane xx = filter_valid(hadamard(x, x), w);
  Plane yy = filter_valid(hadamard(y, y), w);
  Plane xy = filter_valid(hadamard(x, y), w);
  double acc = 0.0;
  for (size_t i = 0; i < mu_x.v.size(); ++i) {
    double mx = mu_x.v[i], my = mu_y.v[i];
    double vx = xx.v[i] - mx * mx;
    double vy = yy.v[i] - my * my;
    double cov = xy.v[i] - mx * my;
    acc += ((2 * mx * my + c1) * (2 * cov + c2)) /
           ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return acc / static_cast<double>(mu_x.v.size());
}

double l2_distortion(const Image& y_clean, const Image& y_adv) {
  return mse(y_clean.to_range(ValueRange::Symmetric),
             y_adv.to_range(ValueRange::Symmetric));
}

double asr(const std::vector<double>& distortions, double threshold) {
  require(!distortions.empty(), "empty distortion list");
  size_t hits = 0;
  for (double d : distortions)
    if (d >= threshold) ++hits;
  return 100.0 * static_cast<double>(hits) /
         static_cast<double>(distortions.size());
}

double mse_8bit(const Image& a, const Image& b) {
  check_same_shape(a, b);
  const double sa = 255.0 / range_width(a.range());
  const double sb = 255.0 / range_width(b.range());
  const double la = range_lo(a.range()), lb = range_lo(b.range());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = (a.data()[i] - la) * sa - (b.data()[i] - lb) * sb;
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

Plane spectrum(const Image& img) {
  const int h = img.height(), w = img.width();
  Plane mean(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      mean.at(y, x) =
          (img.at(y, x, 0) + img.at(y, x, 1) + img.at(y, x, 2)) / 3.0;
  auto f = dft2(mean);
  Plane out(h, w);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      // center DC
      int sy = (v + h / 2) % h, sx = (u + w / 2) % w;
      double mag = std::log1p(std::abs(f[static_cast<size_t>(v) * w + u]));
      out.at(sy, sx) = mag;
      lo = std::min(lo, mag);
      hi = std::max(hi, mag);
    }
  }
  double span = hi - lo;
  if (span <= 0.0) span = 1.0;
  for (double& v : out.v) v = (v - lo) / span;
  return out;
}

double high_freq_energy_ratio(const Image& img, double radius_frac) {
  const int h = img.height(), w = img.width();
  Plane mean(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      mean.at(y, x) =
          (img.at(y, x, 0) + img.at(y, x, 1) + img.at(y, x, 2)) / 3.0;
  auto f = dft2(mean);
  double cutoff = radius_frac * 0.5 * std::min(h, w);
  double total = 0.0, high = 0.0;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (u == 0 && v == 0) continue;  // skip DC
      double dy = v <= h / 2 ? v : v - h;
      double dx = u <= w / 2 ? u : u - w;
      double e = std::norm(f[static_cast<size_t>(v) * w + u]);
      total += e;
      if (std::hypot(dx, dy) > cutoff) high += e;
    }
  }
  return total > 0.0 ? high / total : 0.0;
}

double lid_estimate(const std::vector<double>& query,
                    const std::vector<std::vector<double>>& reference, int k) {
  require(k >= 2, "lid_estimate requires k >= 2");
  require(reference.size() > static_cast<size_t>(k),
          "reference set must be larger than k");
  std::vector<double> dist;
  dist.reserve(reference.size());
  for (const auto& r : reference) {
    require(r.size() == query.size(), "feature dimensions differ");
    double s = 0.0;
    for (size_t i = 0; i < r.size(); ++i) {
      double d = r[i] - query[i];
      s += d * d;
    }
    dist.push_back(std::sqrt(s));
  }
  std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
  if (dist[0] <= 0.0)
    throw std::invalid_argument("zero distance in LID neighborhood");
  double rk = dist[k - 1];
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += std::log(dist[i] / rk);
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / (s / k);
}

double auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  require(scores.size() == labels.size(), "scores/labels size mismatch");
  std::vector<double> pos, neg;
  for (size_t i = 0; i < scores.size(); ++i)
    (labels[i] ? pos : neg).push_back(scores[i]);
  require(!pos.empty() && !neg.empty(), "AUC needs both classes");
  double s = 0.0;
  for (double p : pos)
    for (double n : neg) s += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  return s / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

std::vector<double> lid_features(const Image& img, int side) {
  require(side >= 1, "feature side must be positive");
  const int h = img.height(), w = img.width();
  std::vector<double> out(static_cast<size_t>(side) * side * 3, 0.0);
  std::vector<int> counts(static_cast<size_t>(side) * side, 0);
  for (int y = 0; y < h; ++y) {
    int by = std::min(side - 1, y * side / h);
    for (int x = 0; x < w; ++x) {
      int bx = std::min(side - 1, x * side / w);
      size_t cell = static_cast<size_t>(by) * side + bx;
      ++counts[cell];
      for (int c = 0; c < 3; ++c) out[cell * 3 + c] += img.at(y, x, c);
    }
  }
  for (size_t cell = 0; cell < counts.size(); ++cell)
    if (counts[cell] > 0)
      for (int c = 0; c < 3; ++c) out[cell * 3 + c] /= counts[cell];
  return out;
}

}  // namespace af::metrics
