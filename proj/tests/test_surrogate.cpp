#include <doctest.h>

#include <cmath>
#include <random>

#include "core/dataset.hpp"
#include "core/rng.hpp"
#include "core/surrogate.hpp"
#include "core/transforms.hpp"

using namespace af;
using namespace af::surrogate;

namespace {

Image random_symmetric(uint64_t seed, int h, int w, double amp = 0.8) {
  auto rng = substream_rng(seed, "surrogate-test");
  std::uniform_real_distribution<double> u(-amp, amp);
  std::vector<double> px(static_cast<size_t>(h) * w * 3);
  for (double& v : px) v = u(rng);
  return Image(h, w, ValueRange::Symmetric, std::move(px));
}

ToyGeneratorParams identity_params(double sigma = 0.0) {
  ToyGeneratorParams p;
  p.blur_sigma = sigma;
  p.mix = {{1, 0, 0, 0, 1, 0, 0, 0, 1}, {1, 0, 0, 0, 1, 0, 0, 0, 1}};
  p.bias = {{0, 0, 0}, {0, 0, 0}};
  return p;
}

}  // namespace

TEST_CASE("toy generator zero fixed point") {
  ToyGenerator gen(identity_params());
  Image zero(4, 4, ValueRange::Symmetric, 0.0);
  Image y = gen.forward(zero, 0);
  for (size_t i = 0; i < y.size(); ++i) CHECK(y.data()[i] == 0.0);
}

TEST_CASE("toy generator maps constant images to constant images") {
  ToyGeneratorParams p = ToyGeneratorParams::make(3, 3, 1.5);
  ToyGenerator gen(p);
  Image c(8, 8, ValueRange::Symmetric, 0.0);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      c.at(y, x, 0) = 0.2;
      c.at(y, x, 1) = -0.1;
      c.at(y, x, 2) = 0.35;
    }
  Image out = gen.forward(c, 1);
  for (int ch = 0; ch < 3; ++ch) {
    double v0 = out.at(0, 0, ch);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        CHECK(out.at(y, x, ch) == doctest::Approx(v0).epsilon(1e-12));
  }
}

TEST_CASE("toy forward matches a scalar reference evaluation") {
  ToyGeneratorParams p = ToyGeneratorParams::make(17, 2, 0.9);
  ToyGenerator gen(p);
  Image x = random_symmetric(55, 6, 5);
  int label = 1;
  Image y = gen.forward(x, label);

  // independent per-pixel evaluation through the same public blur
  Image blurred = transforms::gaussian_blur(x, p.blur_sigma);
  for (int yy = 0; yy < 6; ++yy)
    for (int xx = 0; xx < 5; ++xx)
      for (int c = 0; c < 3; ++c) {
        double pre = p.bias[label][c];
        for (int j = 0; j < 3; ++j)
          pre += p.mix[label][c * 3 + j] * blurred.at(yy, xx, j);
        CHECK(y.at(yy, xx, c) == doctest::Approx(std::tanh(pre)).epsilon(1e-12));
      }
}

TEST_CASE("toy output strictly inside (-1,1)") {
  ToyGeneratorParams p = ToyGeneratorParams::make(5, 4, 1.0);
  ToyGenerator gen(p);
  Image x = random_symmetric(56, 16, 16, 1.0);
  for (int l = 0; l < 4; ++l) {
    Image y = gen.forward(x, l);
    for (size_t i = 0; i < y.size(); ++i) {
      CHECK(y.data()[i] > -1.0);
      CHECK(y.data()[i] < 1.0);
    }
  }
}

TEST_CASE("toy vjp zero upstream and diagonal shortcut") {
  ToyGeneratorParams p = ToyGeneratorParams::make(7, 2, 1.3);
  ToyGenerator gen(p);
  Image x = random_symmetric(57, 5, 5);
  Field zero(5, 5);
  Field g = gen.input_vjp(x, 0, zero);
  for (double v : g.v) CHECK(v == 0.0);

  // sigma 0 and diagonal mix: gradient is elementwise tanh' * diag * upstream
  ToyGeneratorParams diag = identity_params(0.0);
  diag.mix[0] = {2.0, 0, 0, 0, -1.5, 0, 0, 0, 0.7};
  ToyGenerator dg(diag);
  Field u(5, 5);
  auto rng = substream_rng(58, "diag-upstream");
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : u.v) v = dist(rng);
  Field gd = dg.input_vjp(x, 0, u);
  const double d[3] = {2.0, -1.5, 0.7};
  for (int y = 0; y < 5; ++y)
    for (int xx = 0; xx < 5; ++xx)
      for (int c = 0; c < 3; ++c) {
        double t = std::tanh(d[c] * x.at(y, xx, c));
        CHECK(gd.at(y, xx, c) ==
              doctest::Approx(u.at(y, xx, c) * (1.0 - t * t) * d[c]).epsilon(1e-12));
      }
}

TEST_CASE("toy vjp matches central finite differences") {
  ToyGeneratorParams p = ToyGeneratorParams::make(19, 3, 1.1);
  ToyGenerator gen(p);
  Image x = random_symmetric(59, 6, 6, 0.7);
  Field u(6, 6);
  auto rng = substream_rng(60, "toy-fd");
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : u.v) v = dist(rng);
  Field g = gen.input_vjp(x, 2, u);

  auto dot = [&](const Image& xi) {
    Image y = gen.forward(xi, 2);
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) s += y.data()[i] * u.v[i];
    return s;
  };
  const double step = 1e-6;
  std::uniform_int_distribution<int> coord(0, 5);
  std::uniform_int_distribution<int> chan(0, 2);
  for (int trial = 0; trial < 100; ++trial) {
    int yy = coord(rng), xx = coord(rng), c = chan(rng);
    Image xp = x, xm = x;
    xp.at(yy, xx, c) += step;
    xm.at(yy, xx, c) -= step;
    double fd = (dot(xp) - dot(xm)) / (2 * step);
    CHECK(g.at(yy, xx, c) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("generators are deterministic and validate labels") {
  ToyGeneratorParams p = ToyGeneratorParams::make(23, 5, 1.0);
  ToyGenerator gen(p);
  Image x = random_symmetric(61, 8, 8);
  Image y1 = gen.forward(x, 3);
  Image y2 = gen.forward(x, 3);
  CHECK(max_abs_diff(y1, y2) == 0.0);
  CHECK_THROWS_AS(gen.forward(x, 5), std::invalid_argument);
  CHECK_THROWS_AS(gen.forward(x, -1), std::invalid_argument);

  // same seed, same params
  ToyGeneratorParams p2 = ToyGeneratorParams::make(23, 5, 1.0);
  CHECK(p.mix[4] == p2.mix[4]);

  Image unit(4, 4, ValueRange::Unit, 0.5);
  CHECK_THROWS_AS(gen.forward(unit, 0), std::invalid_argument);
}

TEST_CASE("identity generator passes data and gradients through") {
  IdentityGenerator id(3);
  Image x = random_symmetric(62, 5, 4);
  CHECK(max_abs_diff(id.forward(x, 1), x) == 0.0);
  Field u(5, 4, 0.7);
  Field g = id.input_vjp(x, 1, u);
  for (double v : g.v) CHECK(v == 0.7);
}
