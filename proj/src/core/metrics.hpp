#pragma once

#include <string>
#include <vector>

#include "core/image.hpp"

namespace af::metrics {

// Aggregate similarity/disruption measurements for one experiment cell.
// l2 is the mean squared difference on the surrogate's [-1,1] scale, mse the
// same difference expressed in 8-bit pixel units, asr a percentage.
struct MetricsReport {
  double l2 = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double mse = 0.0;
  double asr = 0.0;

  static const char* csv_header();  // fixed field order
  std::string csv_row() const;
  std::string json() const;
};

double mse(const Image& a, const Image& b);

// peak <= 0 selects the declared range width of `a`. Returns +infinity when
// the images are identical.
double psnr(const Image& a, const Image& b, double peak = 0.0);

// Mean local SSIM of the Rec.601 luma, 11x11 Gaussian window sigma 1.5,
// K1=0.01 K2=0.03, dynamic range taken from the declared image range.
// Throws if either dimension is smaller than the window.
double ssim(const Image& a, const Image& b);

// Mean squared difference on the [-1,1] scale regardless of declared range.
double l2_distortion(const Image& y_clean, const Image& y_adv);

// Percentage of distortions meeting the threshold (inclusive).
double asr(const std::vector<double>& distortions, double threshold = 0.05);

// Mean squared difference in 8-bit pixel units (images scaled to [0,255]).
double mse_8bit(const Image& a, const Image& b);

// Centered log-magnitude spectrum of the channel mean, min-max normalized to
// [0,1].
Plane spectrum(const Image& img);

// Fraction of non-DC spectral energy outside `radius_frac` of the Nyquist
// radius (centered spectrum).
double high_freq_energy_ratio(const Image& img, double radius_frac = 0.25);

// Maximum-likelihood local intrinsic dimensionality from the k nearest
// Euclidean distances of `query` within `reference`. Throws when k < 2, the
// reference set is not larger than k, or a neighbor distance is zero.
double lid_estimate(const std::vector<double>& query,
                    const std::vector<std::vector<double>>& reference, int k);

// Pairwise-counting AUC with ties counted as 0.5.
double auc(const std::vector<double>& scores, const std::vector<bool>& labels);

// Flattened mean-pooled pixels used as default LID features.
std::vector<double> lid_features(const Image& img, int side = 32);

}  // namespace af::metrics
