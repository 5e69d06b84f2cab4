#include <doctest.h>

#include <cmath>
#include <random>

#include "core/color.hpp"
#include "core/rng.hpp"

using namespace af;
using namespace af::color;

namespace {

Image uniform_rgb(double r, double g, double b, int h = 2, int w = 2) {
  std::vector<double> px;
  px.reserve(static_cast<size_t>(h) * w * 3);
  for (int i = 0; i < h * w; ++i) {
    px.push_back(r);
    px.push_back(g);
    px.push_back(b);
  }
  return Image(h, w, ValueRange::Unit, std::move(px));
}

Image random_in_gamut(std::mt19937_64& rng, int h, int w,
                      double margin = 0.02) {
  std::uniform_real_distribution<double> u(margin, 1.0 - margin);
  std::vector<double> px(static_cast<size_t>(h) * w * 3);
  for (double& v : px) v = u(rng);
  return Image(h, w, ValueRange::Unit, std::move(px));
}

}  // namespace

TEST_CASE("rgb_to_lab fixed points") {
  // reference values frozen from an independent colorimetry computation
  LabImage white = rgb_to_lab(uniform_rgb(1, 1, 1));
  CHECK(white.L.at(0, 0) == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(std::fabs(white.a.at(0, 0)) < 1e-6);
  CHECK(std::fabs(white.b.at(0, 0)) < 1e-6);

  LabImage black = rgb_to_lab(uniform_rgb(0, 0, 0));
  CHECK(std::fabs(black.L.at(0, 0)) < 1e-9);
  CHECK(std::fabs(black.a.at(0, 0)) < 1e-9);
  CHECK(std::fabs(black.b.at(0, 0)) < 1e-9);

  LabImage gray = rgb_to_lab(uniform_rgb(0.5, 0.5, 0.5));
  CHECK(gray.L.at(0, 0) == doctest::Approx(53.3889647411).epsilon(1e-8));
  CHECK(std::fabs(gray.a.at(0, 0)) < 1e-9);
  CHECK(std::fabs(gray.b.at(0, 0)) < 1e-9);

  LabImage red = rgb_to_lab(uniform_rgb(1, 0, 0));
  CHECK(red.L.at(0, 0) == doctest::Approx(53.2407918333).epsilon(1e-8));
  CHECK(red.a.at(0, 0) == doctest::Approx(80.0924695448).epsilon(1e-8));
  CHECK(red.b.at(0, 0) == doctest::Approx(67.2031925365).epsilon(1e-8));

  LabImage mix = rgb_to_lab(uniform_rgb(0.25, 0.5, 0.75));
  CHECK(mix.L.at(0, 0) == doctest::Approx(52.0181850106).epsilon(1e-8));
  CHECK(mix.a.at(0, 0) == doctest::Approx(0.0934080407).epsilon(1e-6));
  CHECK(mix.b.at(0, 0) == doctest::Approx(-39.3630704058).epsilon(1e-8));
}

TEST_CASE("rgb_to_lab rejects non-finite input") {
  std::vector<double> px = {0.5, 0.5, std::nan(""), 0.5, 0.5, 0.5,
                            0.5, 0.5, 0.5,          0.5, 0.5, 0.5};
  CHECK_THROWS_AS(Image(2, 2, ValueRange::Unit, std::move(px)),
                  std::invalid_argument);
}

TEST_CASE("lab_to_rgb fixed points and round trip") {
  LabImage white{Plane(1, 1, 100.0), Plane(1, 1, 0.0), Plane(1, 1, 0.0)};
  Image w = lab_to_rgb(white);
  for (int c = 0; c < 3; ++c)
    CHECK(w.at(0, 0, c) == doctest::Approx(1.0).epsilon(1e-4));

  LabImage gray{Plane(1, 1, 53.3889647411), Plane(1, 1, 0.0), Plane(1, 1, 0.0)};
  Image g = lab_to_rgb(gray);
  for (int c = 0; c < 3; ++c)
    CHECK(g.at(0, 0, c) == doctest::Approx(0.5).epsilon(1e-3));

  auto rng = substream_rng(11, "color-roundtrip");
  for (int trial = 0; trial < 20; ++trial) {
    Image x = random_in_gamut(rng, 5, 7);
    Image back = lab_to_rgb(rgb_to_lab(x));
    CHECK(max_abs_diff(x, back) < 1e-4);
  }
}

TEST_CASE("lab_to_rgb non-finite input errors") {
  LabImage lab{Plane(1, 1, 50.0), Plane(1, 1, 0.0), Plane(1, 1, 0.0)};
  lab.a.at(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(lab_to_rgb(lab), std::invalid_argument);
}

TEST_CASE("lab_to_rgb counts gamut clamps") {
  // maximally saturated green at high L is far outside sRGB
  LabImage lab{Plane(1, 1, 95.0), Plane(1, 1, -120.0), Plane(1, 1, 90.0)};
  long clamps = -1;
  Image out = lab_to_rgb(lab, ValueRange::Unit, &clamps);
  CHECK(clamps > 0);
  for (int c = 0; c < 3; ++c) {
    CHECK(out.at(0, 0, c) >= 0.0);
    CHECK(out.at(0, 0, c) <= 1.0);
  }
}

TEST_CASE("lab_to_rgb_vjp zero and linearity") {
  auto rng = substream_rng(12, "color-vjp");
  Image x = random_in_gamut(rng, 3, 4);
  LabImage lab = rgb_to_lab(x);

  Field zero(3, 4);
  LabVjp v0 = lab_to_rgb_vjp(lab, ValueRange::Unit, zero);
  for (double d : v0.dL.v) CHECK(d == 0.0);
  for (double d : v0.da.v) CHECK(d == 0.0);
  for (double d : v0.db.v) CHECK(d == 0.0);

  Field u(3, 4);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& d : u.v) d = dist(rng);
  Field u2 = u;
  for (double& d : u2.v) d *= 2.5;
  LabVjp v1 = lab_to_rgb_vjp(lab, ValueRange::Unit, u);
  LabVjp v2 = lab_to_rgb_vjp(lab, ValueRange::Unit, u2);
  for (size_t i = 0; i < v1.da.v.size(); ++i) {
    CHECK(v2.da.v[i] == doctest::Approx(2.5 * v1.da.v[i]).epsilon(1e-12));
    CHECK(v2.db.v[i] == doctest::Approx(2.5 * v1.db.v[i]).epsilon(1e-12));
    CHECK(v2.dL.v[i] == doctest::Approx(2.5 * v1.dL.v[i]).epsilon(1e-12));
  }
}

TEST_CASE("lab_to_rgb_vjp matches central finite differences") {
  auto rng = substream_rng(13, "color-fd");
  const double step = 1e-4;
  for (int trial = 0; trial < 8; ++trial) {
    Image x = random_in_gamut(rng, 2, 2, 0.05);
    LabImage lab = rgb_to_lab(x);
    Field u(2, 2);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& d : u.v) d = dist(rng);
    LabVjp v = lab_to_rgb_vjp(lab, ValueRange::Unit, u);

    auto dot_forward = [&](const LabImage& l) {
      Image out = lab_to_rgb(l, ValueRange::Unit);
      double s = 0.0;
      for (size_t i = 0; i < out.size(); ++i) s += out.data()[i] * u.v[i];
      return s;
    };
    for (int y = 0; y < 2; ++y)
      for (int xx = 0; xx < 2; ++xx) {
        LabImage lp = lab, lm = lab;
        lp.a.at(y, xx) += step;
        lm.a.at(y, xx) -= step;
        double fd = (dot_forward(lp) - dot_forward(lm)) / (2 * step);
        if (std::fabs(fd) > 1e-10)
          CHECK(v.da.at(y, xx) == doctest::Approx(fd).epsilon(1e-5));
        lp = lab;
        lm = lab;
        lp.b.at(y, xx) += step;
        lm.b.at(y, xx) -= step;
        fd = (dot_forward(lp) - dot_forward(lm)) / (2 * step);
        if (std::fabs(fd) > 1e-10)
          CHECK(v.db.at(y, xx) == doctest::Approx(fd).epsilon(1e-5));
        lp = lab;
        lm = lab;
        lp.L.at(y, xx) += step;
        lm.L.at(y, xx) -= step;
        fd = (dot_forward(lp) - dot_forward(lm)) / (2 * step);
        if (std::fabs(fd) > 1e-10)
          CHECK(v.dL.at(y, xx) == doctest::Approx(fd).epsilon(1e-5));
      }
  }
}

TEST_CASE("hsv and cmyk fixed points") {
  HsvImage red = rgb_to_hsv(uniform_rgb(1, 0, 0));
  CHECK(red.h.at(0, 0) == doctest::Approx(0.0));
  CHECK(red.s.at(0, 0) == doctest::Approx(1.0));
  CHECK(red.v.at(0, 0) == doctest::Approx(1.0));

  CmykImage black = rgb_to_cmyk(uniform_rgb(0, 0, 0));
  CHECK(black.c.at(0, 0) == doctest::Approx(0.0));
  CHECK(black.m.at(0, 0) == doctest::Approx(0.0));
  CHECK(black.y.at(0, 0) == doctest::Approx(0.0));
  CHECK(black.k.at(0, 0) == doctest::Approx(1.0));

  // achromatic hue pinned to 0
  HsvImage gray = rgb_to_hsv(uniform_rgb(0.4, 0.4, 0.4));
  CHECK(gray.h.at(0, 0) == 0.0);
  CHECK(gray.s.at(0, 0) == 0.0);
}

TEST_CASE("convert/inverse_convert round trip across all spaces") {
  auto rng = substream_rng(14, "convert-roundtrip");
  for (ColorSpace cs : {ColorSpace::RGB, ColorSpace::Lab, ColorSpace::HSV,
                        ColorSpace::CMYK}) {
    for (int trial = 0; trial < 10; ++trial) {
      Image x = random_in_gamut(rng, 4, 3);
      auto channels = convert(x, cs);
      Image back = inverse_convert(channels, cs, ValueRange::Unit);
      CHECK(max_abs_diff(x, back) < 1e-4);
    }
  }
}

TEST_CASE("hsv round trip keeps value/saturation on achromatic pixels") {
  // hue is undefined on grays; value and saturation must still survive
  Image gray = uniform_rgb(0.3, 0.3, 0.3);
  Image back = hsv_to_rgb(rgb_to_hsv(gray));
  CHECK(max_abs_diff(gray, back) < 1e-9);
}

TEST_CASE("normalize_ab endpoints and exact inverse") {
  LabImage lab{Plane(2, 2, 50.0), Plane(2, 2, -128.0), Plane(2, 2, 0.0)};
  lab.a.at(0, 1) = 127.0;
  lab.b.at(1, 0) = 64.0;
  LabImage n = normalize_ab(lab);
  CHECK(n.a.at(0, 0) == doctest::Approx(-1.0));
  CHECK(n.a.at(0, 1) == doctest::Approx(127.0 / 128.0));
  CHECK(n.b.at(0, 0) == doctest::Approx(0.0));
  CHECK(n.b.at(1, 0) == doctest::Approx(0.5));

  LabImage back = denormalize_ab(n);
  for (size_t i = 0; i < lab.a.v.size(); ++i) {
    CHECK(back.a.v[i] == lab.a.v[i]);
    CHECK(back.b.v[i] == lab.b.v[i]);
  }
}

TEST_CASE("hsv/cmyk partial vjps match finite differences") {
  auto rng = substream_rng(15, "sv-fd");
  const double step = 1e-6;
  Image x = random_in_gamut(rng, 2, 3, 0.1);
  Field u(2, 3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& d : u.v) d = dist(rng);

  HsvImage hsv = rgb_to_hsv(x);
  Plane ds, dv;
  hsv_to_rgb_vjp_sv(hsv, ValueRange::Unit, u, ds, dv);
  auto dot_hsv = [&](const HsvImage& h) {
    Image out = hsv_to_rgb(h, ValueRange::Unit);
    double s = 0.0;
    for (size_t i = 0; i < out.size(); ++i) s += out.data()[i] * u.v[i];
    return s;
  };
  for (int y = 0; y < 2; ++y)
    for (int xx = 0; xx < 3; ++xx) {
      HsvImage hp = hsv, hm = hsv;
      hp.s.at(y, xx) += step;
      hm.s.at(y, xx) -= step;
      double fd = (dot_hsv(hp) - dot_hsv(hm)) / (2 * step);
      CHECK(ds.at(y, xx) == doctest::Approx(fd).epsilon(1e-6));
      hp = hsv;
      hm = hsv;
      hp.v.at(y, xx) += step;
      hm.v.at(y, xx) -= step;
      fd = (dot_hsv(hp) - dot_hsv(hm)) / (2 * step);
      CHECK(dv.at(y, xx) == doctest::Approx(fd).epsilon(1e-6));
    }

  CmykImage cmyk = rgb_to_cmyk(x);
  Plane dc, dm, dy;
  cmyk_to_rgb_vjp_cmy(cmyk, ValueRange::Unit, u, dc, dm, dy);
  auto dot_cmyk = [&](const CmykImage& cm) {
    Image out = cmyk_to_rgb(cm, ValueRange::Unit);
    double s = 0.0;
    for (size_t i = 0; i < out.size(); ++i) s += out.data()[i] * u.v[i];
    return s;
  };
  for (int y = 0; y < 2; ++y)
    for (int xx = 0; xx < 3; ++xx) {
      CmykImage cp = cmyk, cm2 = cmyk;
      cp.c.at(y, xx) += step;
      cm2.c.at(y, xx) -= step;
      double fd = (dot_cmyk(cp) - dot_cmyk(cm2)) / (2 * step);
      CHECK(dc.at(y, xx) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("convert rejects channel count mismatch") {
  Image x = uniform_rgb(0.2, 0.4, 0.6);
  auto channels = convert(x, ColorSpace::Lab);
  CHECK_THROWS_AS(inverse_convert(channels, ColorSpace::CMYK, ValueRange::Unit),
                  std::invalid_argument);
}

TEST_CASE("symmetric-range images convert through the same colorimetry") {
  auto rng = substream_rng(16, "sym-range");
  Image x01 = random_in_gamut(rng, 3, 3);
  Image xs = x01.to_range(ValueRange::Symmetric);
  LabImage a = rgb_to_lab(x01);
  LabImage b = rgb_to_lab(xs);
  for (size_t i = 0; i < a.L.v.size(); ++i) {
    CHECK(a.L.v[i] == doctest::Approx(b.L.v[i]).epsilon(1e-12));
    CHECK(a.a.v[i] == doctest::Approx(b.a.v[i]).epsilon(1e-12));
  }
  Image back = lab_to_rgb(b, ValueRange::Symmetric);
  CHECK(max_abs_diff(xs, back) < 2e-4);
}
