#include <doctest.h>

#include <cmath>
#include <random>

#include "core/dataset.hpp"
#include "core/metrics.hpp"
#include "core/rng.hpp"

using namespace af;
using namespace af::metrics;

namespace {

// Independent SSIM reference: brute-force 11x11 Gaussian windows, one window
// at a time, no separable filtering. Kept deliberately apart from the
// library implementation.
double reference_ssim(const Image& a, const Image& b) {
  const int win = 11;
  const double sigma = 1.5;
  const double range = range_width(a.range());
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  const int h = a.height(), w = a.width();
  auto luma = [](const Image& img, int y, int x) {
    return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) +
           0.114 * img.at(y, x, 2);
  };
  double weights[11][11];
  double wsum = 0.0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      double dy = i - 5.0, dx = j - 5.0;
      weights[i][j] = std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
      wsum += weights[i][j];
    }
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) weights[i][j] /= wsum;

  double total = 0.0;
  int count = 0;
  for (int y = 0; y + win <= h; ++y) {
    for (int x = 0; x + win <= w; ++x) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          double va = luma(a, y + i, x + j), vb = luma(b, y + i, x + j);
          mx += weights[i][j] * va;
          my += weights[i][j] * vb;
          sxx += weights[i][j] * va * va;
          syy += weights[i][j] * vb * vb;
          sxy += weights[i][j] * va * vb;
        }
      double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
      total += ((2 * mx * my + c1) * (2 * cov + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / count;
}

Image noisy_copy(const Image& src, double amplitude, uint64_t seed) {
  auto rng = substream_rng(seed, "metrics-noise");
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  std::vector<double> px(src.data(), src.data() + src.size());
  for (double& v : px) v += u(rng);
  return Image(src.height(), src.width(), src.range(), std::move(px));
}

}  // namespace

TEST_CASE("mse and psnr basics") {
  Image a(4, 4, ValueRange::Unit, 0.5);
  Image b(4, 4, ValueRange::Unit, 0.5);
  CHECK(mse(a, b) == 0.0);
  CHECK(std::isinf(psnr(a, b)));

  // mse 0.01 at peak 1 -> exactly 20 dB
  Image c(4, 4, ValueRange::Unit, 0.6);
  CHECK(mse(a, c) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(psnr(a, c, 1.0) == doctest::Approx(20.0).epsilon(1e-9));

  // 2x2 hand case: diffs {0.1, -0.2, 0, 0} on one channel
  std::vector<double> pa = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
  std::vector<double> pb = pa;
  pb[0] += 0.1;
  pb[3] -= 0.2;
  Image ha(2, 2, ValueRange::Unit, std::move(pa));
  Image hb(2, 2, ValueRange::Unit, std::move(pb));
  // (0.01 + 0.04) / 12
  CHECK(mse(ha, hb) == doctest::Approx(0.05 / 12.0).epsilon(1e-12));

  Image wrong(3, 3, ValueRange::Unit, 0.5);
  CHECK_THROWS_AS(mse(a, wrong), std::invalid_argument);
}

TEST_CASE("psnr decreases as mse grows") {
  Image base(4, 4, ValueRange::Unit, 0.2);
  Image near(4, 4, ValueRange::Unit, 0.25);
  Image far(4, 4, ValueRange::Unit, 0.45);
  CHECK(psnr(base, near) > psnr(base, far));
}

TEST_CASE("ssim identical and constant-shift closed form") {
  Image a = dataset::synthetic_image(5, 0, 32, 32);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  // constants: variances vanish, SSIM has a closed form
  double va = 0.4, vb = 0.5;
  Image ca(16, 16, ValueRange::Unit, va);
  Image cb(16, 16, ValueRange::Unit, vb);
  double c1 = 0.01 * 0.01;
  double expected = (2 * va * vb + c1) / (va * va + vb * vb + c1);
  CHECK(ssim(ca, cb) == doctest::Approx(expected).epsilon(1e-9));

  Image tiny(8, 8, ValueRange::Unit, 0.5);
  CHECK_THROWS_AS(ssim(tiny, tiny), std::invalid_argument);
}

TEST_CASE("ssim matches the independent reference on natural pairs") {
  Image a = dataset::synthetic_image(7, 1, 48, 40);
  Image b = noisy_copy(a, 0.08, 99);
  CHECK(ssim(a, b) == doctest::Approx(reference_ssim(a, b)).epsilon(1e-4));

  Image c = dataset::synthetic_image(7, 2, 48, 40).to_range(ValueRange::Symmetric);
  Image d = noisy_copy(c, 0.15, 100);
  CHECK(ssim(c, d) == doctest::Approx(reference_ssim(c, d)).epsilon(1e-4));
  CHECK(ssim(c, d) == doctest::Approx(ssim(d, c)).epsilon(1e-12));
}

TEST_CASE("l2 distortion on the symmetric scale") {
  // y vs -y with mean square 0.3 -> 4 * 0.3
  std::vector<double> py(3 * 4 * 3);
  auto rng = substream_rng(21, "l2-scale");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double ms = 0.0;
  for (double& v : py) {
    v = u(rng);
    ms += v * v;
  }
  ms /= static_cast<double>(py.size());
  std::vector<double> pn(py.size());
  for (size_t i = 0; i < py.size(); ++i) pn[i] = -py[i];
  Image y(3, 4, ValueRange::Symmetric, std::move(py));
  Image n(3, 4, ValueRange::Symmetric, std::move(pn));
  CHECK(l2_distortion(y, n) == doctest::Approx(4.0 * ms).epsilon(1e-12));

  // unit-range inputs are rescaled before measuring
  Image a(4, 4, ValueRange::Unit, 0.25);
  Image b(4, 4, ValueRange::Unit, 0.75);
  CHECK(l2_distortion(a, b) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("asr counting") {
  CHECK(asr({0.06, 0.04, 0.05}, 0.05) == doctest::Approx(200.0 / 3.0).epsilon(1e-9));
  CHECK(asr({0.0, 0.0, 0.0}, 0.05) == 0.0);
  CHECK(asr({0.1}, 0.05) == 100.0);
  CHECK_THROWS_AS(asr({}, 0.05), std::invalid_argument);

  // monotone non-increasing in the threshold
  std::vector<double> d = {0.01, 0.03, 0.05, 0.07, 0.2};
  double prev = 101.0;
  for (double th : {0.0, 0.02, 0.05, 0.1, 0.5}) {
    double v = asr(d, th);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("spectrum of constant and sinusoid images") {
  Image flat(16, 16, ValueRange::Unit, 0.37);
  Plane sp = spectrum(flat);
  CHECK(sp.at(8, 8) == doctest::Approx(1.0));
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      if (y != 8 || x != 8) CHECK(sp.at(y, x) == doctest::Approx(0.0));

  // horizontal sinusoid at frequency 3 -> symmetric peak pair at +-3
  const int n = 32, k = 3;
  std::vector<double> px(static_cast<size_t>(n) * n * 3);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double v = 0.5 + 0.4 * std::cos(2.0 * 3.14159265358979323846 * k * x / n);
      for (int c = 0; c < 3; ++c) px[(static_cast<size_t>(y) * n + x) * 3 + c] = v;
    }
  Plane sp2 = spectrum(Image(n, n, ValueRange::Unit, std::move(px)));
  int cy = n / 2, cx = n / 2;
  CHECK(sp2.at(cy, cx + k) > 0.9);
  CHECK(sp2.at(cy, cx - k) > 0.9);
  CHECK(sp2.at(cy + k, cx) < 0.35);
}

TEST_CASE("high frequency ratio responds to added noise") {
  Image smooth = dataset::synthetic_image(9, 3, 32, 32);
  Image noisy = noisy_copy(smooth, 0.2, 123);
  CHECK(high_freq_energy_ratio(noisy) > high_freq_energy_ratio(smooth));
}

TEST_CASE("lid estimates for line and disc supports") {
  auto rng = substream_rng(31, "lid-sanity");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 2000, k = 50;

  std::vector<std::vector<double>> line;
  for (int i = 0; i < n; ++i) line.push_back({u(rng), 0.0, 0.0});
  double lid1 = lid_estimate(line[0], {line.begin() + 1, line.end()}, k);
  CHECK(lid1 == doctest::Approx(1.0).epsilon(0.2));

  std::vector<std::vector<double>> disc;
  while (static_cast<int>(disc.size()) < n) {
    double x = 2 * u(rng) - 1, y = 2 * u(rng) - 1;
    if (x * x + y * y <= 1.0) disc.push_back({x, y});
  }
  double lid2 = lid_estimate(disc[0], {disc.begin() + 1, disc.end()}, k);
  CHECK(lid2 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("lid input validation") {
  std::vector<std::vector<double>> refs = {{0.0}, {0.5}, {1.0}, {2.0}};
  CHECK_THROWS_AS(lid_estimate({3.0}, refs, 1), std::invalid_argument);
  CHECK_THROWS_AS(lid_estimate({3.0}, refs, 4), std::invalid_argument);
  // duplicate of a reference point -> zero distance -> error
  CHECK_THROWS_AS(lid_estimate({0.5}, refs, 2), std::invalid_argument);
}

TEST_CASE("auc pair counting and invariances") {
  CHECK(auc({0.9, 0.4, 0.5, 0.1}, {true, true, false, false}) ==
        doctest::Approx(0.75));
  CHECK(auc({0.5, 0.5}, {true, false}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(auc({0.5, 0.6}, {true, true}), std::invalid_argument);

  // invariant to strictly monotone rescaling
  auto rng = substream_rng(32, "auc-mono");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> scores;
  std::vector<bool> labels;
  for (int i = 0; i < 40; ++i) {
    scores.push_back(u(rng));
    labels.push_back(u(rng) > 0.4);
  }
  std::vector<double> warped;
  for (double s : scores) warped.push_back(std::exp(3.0 * s) - 7.0);
  CHECK(auc(scores, labels) == doctest::Approx(auc(warped, labels)).epsilon(1e-12));
}

TEST_CASE("metrics report serialization order") {
  MetricsReport r{0.5, 20.0, 0.9, 812.8125, 75.0};
  CHECK(std::string(MetricsReport::csv_header()) == "l2,psnr,ssim,mse,asr");
  CHECK(r.csv_row() == "0.500000,20.000000,0.900000,812.812500,75.000000");
  CHECK(r.json() ==
        "{\"l2\":0.500000,\"psnr\":20.000000,\"ssim\":0.900000,"
        "\"mse\":812.812500,\"asr\":75.000000}");
  MetricsReport inf_r{0.0, std::numeric_limits<double>::infinity(), 1.0, 0.0, 0.0};
  CHECK(inf_r.csv_row() == "0.000000,inf,1.000000,0.000000,0.000000");
}
