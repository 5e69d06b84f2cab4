#include "core/color.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace af::color {

namespace {

// sRGB -> XYZ (D65). The inverse is computed from these exact values so that
// round trips cancel to machine precision.
constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

struct XyzInverse {
  double m[3][3];
  XyzInverse() {
    const auto& a = kRgbToXyz;
    double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                 a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                 a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    m[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
    m[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
    m[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
    m[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
    m[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
    m[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
    m[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
    m[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
    m[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
  }
};

const XyzInverse kXyzToRgb;

// White point = row sums, so grays sit exactly on the neutral axis.
constexpr double kWhiteX = 0.4124564 + 0.3575761 + 0.1804375;
constexpr double kWhiteY = 0.2126729 + 0.7151522 + 0.0721750;
constexpr double kWhiteZ = 0.0193339 + 0.1191920 + 0.9503041;

constexpr double kDelta = 6.0 / 29.0;
constexpr double kDelta3 = kDelta * kDelta * kDelta;
constexpr double kFLinearSlope = 1.0 / (3.0 * kDelta * kDelta);
constexpr double kFLinearOffset = 4.0 / 29.0;

double srgb_to_linear(double u) {
  return u <= 0.04045 ? u / 12.92 : std::pow((u + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double u) {
  // The linear branch extends below zero, keeping the map differentiable for
  // slightly out-of-gamut values before the final clamp.
  return u <= 0.0031308 ? 12.92 * u : 1.055 * std::pow(u, 1.0 / 2.4) - 0.055;
}

double linear_to_srgb_deriv(double u) {
  return u <= 0.0031308 ? 12.92
                        : (1.055 / 2.4) * std::pow(u, 1.0 / 2.4 - 1.0);
}

double lab_f(double t) {
  return t > kDelta3 ? std::cbrt(t) : kFLinearSlope * t + kFLinearOffset;
}

double lab_f_inv(double f) {
  return f > kDelta ? f * f * f : (f - kFLinearOffset) / kFLinearSlope;
}

// At the piecewise boundary the linear branch's slope is used.
double lab_f_inv_deriv(double f) {
  return f > kDelta ? 3.0 * f * f : 1.0 / kFLinearSlope;
}

void check_finite(const Plane& p, const char* what) {
  for (double v : p.v)
    if (!std::isfinite(v))
      throw std::invalid_argument(std::string("non-finite value in ") + what);
}

void check_lab_shape(const LabImage& lab) {
  require(lab.L.h == lab.a.h && lab.L.w == lab.a.w && lab.L.h == lab.b.h &&
              lab.L.w == lab.b.w,
          "Lab channel dimensions differ");
  require(lab.L.h >= 1 && lab.L.w >= 1, "empty Lab image");
}

}  // namespace

ColorSpace color_space_from_string(std::string_view s) {
  if (s == "rgb" || s == "RGB") return ColorSpace::RGB;
  if (s == "lab" || s == "Lab" || s == "LAB") return ColorSpace::Lab;
  if (s == "hsv" || s == "HSV") return ColorSpace::HSV;
  if (s == "cmyk" || s == "CMYK") return ColorSpace::CMYK;
  throw std::invalid_argument("unknown color space: " + std::string(s));
}

const char* to_string(ColorSpace cs) {
  switch (cs) {
    case ColorSpace::RGB: return "rgb";
    case ColorSpace::Lab: return "lab";
    case ColorSpace::HSV: return "hsv";
    case ColorSpace::CMYK: return "cmyk";
  }
  return "?";
}

LabImage rgb_to_lab(const Image& img) {
  const int h = img.height(), w = img.width();
  const double lo = range_lo(img.range());
  const double inv_width = 1.0 / range_width(img.range());
  LabImage out{Plane(h, w), Plane(h, w), Plane(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double r = (img.at(y, x, 0) - lo) * inv_width;
      double g = (img.at(y, x, 1) - lo) * inv_width;
      double b = (img.at(y, x, 2) - lo) * inv_width;
      double rl = srgb_to_linear(r);
      double gl = srgb_to_linear(g);
      double bl = srgb_to_linear(b);
      double X = kRgbToXyz[0][0] * rl + kRgbToXyz[0][1] * gl + kRgbToXyz[0][2] * bl;
      double Y = kRgbToXyz[1][0] * rl + kRgbToXyz[1][1] * gl + kRgbToXyz[1][2] * bl;
      double Z = kRgbToXyz[2][0] * rl + kRgbToXyz[2][1] * gl + kRgbToXyz[2][2] * bl;
      double fx = lab_f(X / kWhiteX);
      double fy = lab_f(Y / kWhiteY);
      double fz = lab_f(Z / kWhiteZ);
      out.L.at(y, x) = 116.0 * fy - 16.0;
      out.a.at(y, x) = 500.0 * (fx - fy);
      out.b.at(y, x) = 200.0 * (fy - fz);
    }
  }
  return out;
}

Image lab_to_rgb(const LabImage& lab, ValueRange range, long* clamp_count) {
  check_lab_shape(lab);
  check_finite(lab.L, "L");
  check_finite(lab.a, "a");
  check_finite(lab.b, "b");
  const int h = lab.L.h, w = lab.L.w;
  const double lo = range_lo(range);
  const double width = range_width(range);
  long clamps = 0;
  std::vector<double> out(static_cast<size_t>(h) * w * 3);
  size_t i = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double fy = (lab.L.at(y, x) + 16.0) / 116.0;
      double fx = fy + lab.a.at(y, x) / 500.0;
      double fz = fy - lab.b.at(y, x) / 200.0;
      double X = kWhiteX * lab_f_inv(fx);
      double Y = kWhiteY * lab_f_inv(fy);
      double Z = kWhiteZ * lab_f_inv(fz);
      for (int c = 0; c < 3; ++c) {
        double lin = kXyzToRgb.m[c][0] * X + kXyzToRgb.m[c][1] * Y +
                     kXyzToRgb.m[c][2] * Z;
        double srgb = linear_to_srgb(lin);
        if (srgb < 0.0) {
          srgb = 0.0;
          ++clamps;
        } else if (srgb > 1.0) {
          srgb = 1.0;
          ++clamps;
        }
        out[i++] = lo + srgb * width;
      }
    }
  }
  if (clamp_count) *clamp_count = clamps;
  return Image(h, w, range, std::move(out));
}

LabVjp lab_to_rgb_vjp(const LabImage& lab, ValueRange range,
                      const Field& upstream) {
  check_lab_shape(lab);
  const int h = lab.L.h, w = lab.L.w;
  require(upstream.h == h && upstream.w == w,
          "upstream dimensions differ from Lab image");
  const double width = range_width(range);
  LabVjp out{Plane(h, w), Plane(h, w), Plane(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double fy = (lab.L.at(y, x) + 16.0) / 116.0;
      double fx = fy + lab.a.at(y, x) / 500.0;
      double fz = fy - lab.b.at(y, x) / 200.0;
      double X = kWhiteX * lab_f_inv(fx);
      double Y = kWhiteY * lab_f_inv(fy);
      double Z = kWhiteZ * lab_f_inv(fz);
      double dX_dfx = kWhiteX * lab_f_inv_deriv(fx);
      double dY_dfy = kWhiteY * lab_f_inv_deriv(fy);
      double dZ_dfz = kWhiteZ * lab_f_inv_deriv(fz);
      double gx = 0.0, gy = 0.0, gz = 0.0;  // accumulated d/d(X,Y,Z)
      for (int c = 0; c < 3; ++c) {
        double lin = kXyzToRgb.m[c][0] * X + kXyzToRgb.m[c][1] * Y +
                     kXyzToRgb.m[c][2] * Z;
        double srgb = linear_to_srgb(lin);
        if (srgb < 0.0 || srgb > 1.0) continue;  // clamped: zero gradient
        double u = upstream.at(y, x, c) * width * linear_to_srgb_deriv(lin);
        gx += u * kXyzToRgb.m[c][0];
        gy += u * kXyzToRgb.m[c][1];
        gz += u * kXyzToRgb.m[c][2];
      }
      double dfx = gx * dX_dfx;
      double dfy = gy * dY_dfy;
      double dfz = gz * dZ_dfz;
      // fy feeds all three f-values; a only fx; b only fz.
      out.dL.at(y, x) = (dfx + dfy + dfz) / 116.0;
      out.da.at(y, x) = dfx / 500.0;
      out.db.at(y, x) = -dfz / 200.0;
    }
  }
  return out;
}

HsvImage rgb_to_hsv(const Image& img) {
  const int h = img.height(), w = img.width();
  const double lo = range_lo(img.range());
  const double inv_width = 1.0 / range_width(img.range());
  HsvImage out{Plane(h, w), Plane(h, w), Plane(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double r = (img.at(y, x, 0) - lo) * inv_width;
      double g = (img.at(y, x, 1) - lo) * inv_width;
      double b = (img.at(y, x, 2) - lo) * inv_width;
      double mx = std::max({r, g, b});
      double mn = std::min({r, g, b});
      double d = mx - mn;
      double hue = 0.0;  // achromatic pixels keep hue 0
      if (d > 0.0) {
        if (mx == r)
          hue = 60.0 * std::fmod((g - b) / d + 6.0, 6.0);
        else if (mx == g)
          hue = 60.0 * ((b - r) / d + 2.0);
        else
          hue = 60.0 * ((r - g) / d + 4.0);
      }
      out.h.at(y, x) = hue;
      out.s.at(y, x) = mx > 0.0 ? d / mx : 0.0;
      out.v.at(y, x) = mx;
    }
  }
  return out;
}

namespace {

// For a fixed hue, each RGB channel of hsv_to_rgb is one of three bilinear
// forms in (s, v): v itself, v*(1+s*(t-1)) with t the in-sector fraction, or
// v*(1-s). kind selects the form per channel.
struct HsvSector {
  int kind[3];  // 0 -> v, 1 -> v*(1+s*(t-1)), 2 -> v*(1-s)
  double t;
};

HsvSector hsv_sector(double hue) {
  double hh = hue / 60.0;
  int sector = static_cast<int>(std::floor(hh)) % 6;
  if (sector < 0) sector += 6;
  double frac = hh - std::floor(hh);
  double t = (sector % 2 == 0) ? frac : 1.0 - frac;
  HsvSector s{};
  s.t = t;
  static constexpr int kOrder[6][3] = {
      {0, 1, 2}, {1, 0, 2}, {2, 0, 1}, {2, 1, 0}, {1, 2, 0}, {0, 2, 1}};
  s.kind[0] = kOrder[sector][0];
  s.kind[1] = kOrder[sector][1];
  s.kind[2] = kOrder[sector][2];
  return s;
}

double hsv_channel(int kind, double t, double sv, double vv) {
  switch (kind) {
    case 0: return vv;
    case 1: return vv * (1.0 + sv * (t - 1.0));
    default: return vv * (1.0 - sv);
  }
}

}  // namespace

Image hsv_to_rgb(const HsvImage& hsv, ValueRange range) {
  const int h = hsv.h.h, w = hsv.h.w;
  require(hsv.s.h == h && hsv.s.w == w && hsv.v.h == h && hsv.v.w == w,
          "HSV channel dimensions differ");
  check_finite(hsv.h, "h");
  check_finite(hsv.s, "s");
  check_finite(hsv.v, "v");
  const double lo = range_lo(range);
  const double width = range_width(range);
  std::vector<double> out(static_cast<size_t>(h) * w * 3);
  size_t i = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      HsvSector sec = hsv_sector(hsv.h.at(y, x));
      double sv = std::clamp(hsv.s.at(y, x), 0.0, 1.0);
      double vv = std::clamp(hsv.v.at(y, x), 0.0, 1.0);
      for (int c = 0; c < 3; ++c)
        out[i++] = lo + hsv_channel(sec.kind[c], sec.t, sv, vv) * width;
    }
  }
  return Image(h, w, range, std::move(out));
}

void hsv_to_rgb_vjp_sv(const HsvImage& hsv, ValueRange range,
                       const Field& upstream, Plane& ds, Plane& dv) {
  const int h = hsv.h.h, w = hsv.h.w;
  ds = Plane(h, w);
  dv = Plane(h, w);
  const double width = range_width(range);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      HsvSector sec = hsv_sector(hsv.h.at(y, x));
      double sv = hsv.s.at(y, x);
      double vv = hsv.v.at(y, x);
      bool s_in = sv >= 0.0 && sv <= 1.0;
      bool v_in = vv >= 0.0 && vv <= 1.0;
      double gs = 0.0, gv = 0.0;
      for (int c = 0; c < 3; ++c) {
        double u = upstream.at(y, x, c) * width;
        switch (sec.kind[c]) {
          case 0:
            gv += u;
            break;
          case 1:
            gs += u * vv * (sec.t - 1.0);
            gv += u * (1.0 + sv * (sec.t - 1.0));
            break;
          default:
            gs += u * -vv;
            gv += u * (1.0 - sv);
        }
      }
      ds.at(y, x) = s_in ? gs : 0.0;
      dv.at(y, x) = v_in ? gv : 0.0;
    }
  }
}

CmykImage rgb_to_cmyk(const Image& img) {
  const int h = img.height(), w = img.width();
  const double lo = range_lo(img.range());
  const double inv_width = 1.0 / range_width(img.range());
  CmykImage out{Plane(h, w), Plane(h, w), Plane(h, w), Plane(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double r = (img.at(y, x, 0) - lo) * inv_width;
      double g = (img.at(y, x, 1) - lo) * inv_width;
      double b = (img.at(y, x, 2) - lo) * inv_width;
      double k = 1.0 - std::max({r, g, b});
      if (k >= 1.0) {
        out.c.at(y, x) = out.m.at(y, x) = out.y.at(y, x) = 0.0;
      } else {
        out.c.at(y, x) = (1.0 - r - k) / (1.0 - k);
        out.m.at(y, x) = (1.0 - g - k) / (1.0 - k);
        out.y.at(y, x) = (1.0 - b - k) / (1.0 - k);
      }
      out.k.at(y, x) = k;
    }
  }
  return out;
}

Image cmyk_to_rgb(const CmykImage& cmyk, ValueRange range) {
  const int h = cmyk.c.h, w = cmyk.c.w;
  require(cmyk.m.h == h && cmyk.m.w == w && cmyk.y.h == h && cmyk.y.w == w &&
              cmyk.k.h == h && cmyk.k.w == w,
          "CMYK channel dimensions differ");
  check_finite(cmyk.c, "c");
  check_finite(cmyk.m, "m");
  check_finite(cmyk.y, "y");
  check_finite(cmyk.k, "k");
  const double lo = range_lo(range);
  const double width = range_width(range);
  std::vector<double> out(static_cast<size_t>(h) * w * 3);
  size_t i = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double k = std::clamp(cmyk.k.at(y, x), 0.0, 1.0);
      const Plane* chans[3] = {&cmyk.c, &cmyk.m, &cmyk.y};
      for (int c = 0; c < 3; ++c) {
        double u = std::clamp(chans[c]->at(y, x), 0.0, 1.0);
        out[i++] = lo + (1.0 - u) * (1.0 - k) * width;
      }
    }
  }
  return Image(h, w, range, std::move(out));
}

void cmyk_to_rgb_vjp_cmy(const CmykImage& cmyk, ValueRange range,
                         const Field& upstream, Plane& dc, Plane& dm,
                         Plane& dy) {
  const int h = cmyk.c.h, w = cmyk.c.w;
  dc = Plane(h, w);
  dm = Plane(h, w);
  dy = Plane(h, w);
  const double width = range_width(range);
  Plane* grads[3] = {&dc, &dm, &dy};
  const Plane* chans[3] = {&cmyk.c, &cmyk.m, &cmyk.y};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double k = std::clamp(cmyk.k.at(y, x), 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        double u = chans[c]->at(y, x);
        bool in = u >= 0.0 && u <= 1.0;
        grads[c]->at(y, x) =
            in ? upstream.at(y, x, c) * width * -(1.0 - k) : 0.0;
      }
    }
  }
}

LabImage normalize_ab(const LabImage& lab) {
  LabImage out = lab;
  for (double& v : out.a.v) v /= 128.0;
  for (double& v : out.b.v) v /= 128.0;
  return out;
}

LabImage denormalize_ab(const LabImage& lab) {
  LabImage out = lab;
  for (double& v : out.a.v) v *= 128.0;
  for (double& v : out.b.v) v *= 128.0;
  return out;
}

std::vector<Plane> convert(const Image& img, ColorSpace target) {
  switch (target) {
    case ColorSpace::RGB: {
      Image unit = img.to_range(ValueRange::Unit);
      return {unit.channel(0), unit.channel(1), unit.channel(2)};
    }
    case ColorSpace::Lab: {
      LabImage lab = rgb_to_lab(img);
      return {lab.L, lab.a, lab.b};
    }
    case ColorSpace::HSV: {
      HsvImage hsv = rgb_to_hsv(img);
      return {hsv.h, hsv.s, hsv.v};
    }
    case ColorSpace::CMYK: {
      CmykImage c = rgb_to_cmyk(img);
      return {c.c, c.m, c.y, c.k};
    }
  }
  throw std::invalid_argument("unknown color space tag");
}

Image inverse_convert(const std::vector<Plane>& channels, ColorSpace source,
                      ValueRange range) {
  switch (source) {
    case ColorSpace::RGB: {
      require(channels.size() == 3, "RGB expects 3 channel planes");
      const int h = channels[0].h, w = channels[0].w;
      std::vector<double> out(static_cast<size_t>(h) * w * 3);
      size_t i = 0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int c = 0; c < 3; ++c) out[i++] = channels[c].at(y, x);
      Image unit(h, w, ValueRange::Unit, std::move(out));
      return unit.to_range(range);
    }
    case ColorSpace::Lab:
      require(channels.size() == 3, "Lab expects 3 channel planes");
      return lab_to_rgb(LabImage{channels[0], channels[1], channels[2]}, range);
    case ColorSpace::HSV:
      require(channels.size() == 3, "HSV expects 3 channel planes");
      return hsv_to_rgb(HsvImage{channels[0], channels[1], channels[2]}, range);
    case ColorSpace::CMYK:
      require(channels.size() == 4, "CMYK expects 4 channel planes");
      return cmyk_to_rgb(
          CmykImage{channels[0], channels[1], channels[2], channels[3]}, range);
  }
  throw std::invalid_argument("unknown color space tag");
}

}  // namespace af::color
