#pragma once

#include <string_view>
#include <vector>

#include "core/image.hpp"

namespace af::color {

// L in [0,100], a and b in [-128,127], all planes same H x W.
struct LabImage {
  Plane L, a, b;
};

// h in [0,360) degrees, s and v in [0,1]. Hue of achromatic pixels is 0.
struct HsvImage {
  Plane h, s, v;
};

struct CmykImage {
  Plane c, m, y, k;
};

enum class ColorSpace { RGB, Lab, HSV, CMYK };

ColorSpace color_space_from_string(std::string_view s);
const char* to_string(ColorSpace cs);

// sRGB (IEC 61966-2-1 piecewise gamma, D65) <-> CIELAB (CIE 1976). The white
// point is the exact row sum of the forward matrix so neutral pixels map to
// a = b = 0. Images in Symmetric range are remapped to [0,1] before the
// colorimetric transform and back after it.
LabImage rgb_to_lab(const Image& img);

// Out-of-gamut results are clamped into the target range; when clamp_count is
// non-null it receives the number of clamped samples.
Image lab_to_rgb(const LabImage& lab, ValueRange range = ValueRange::Unit,
                 long* clamp_count = nullptr);

struct LabVjp {
  Plane dL, da, db;
};

// upstream^T . J for the analytic Jacobian of lab_to_rgb. Gradients pass
// through the final range clamp unchanged inside the range and are zeroed
// outside of it.
LabVjp lab_to_rgb_vjp(const LabImage& lab, ValueRange range,
                      const Field& upstream);

HsvImage rgb_to_hsv(const Image& img);
Image hsv_to_rgb(const HsvImage& hsv, ValueRange range = ValueRange::Unit);

// Partials of hsv_to_rgb with respect to s and v only (hue held fixed).
void hsv_to_rgb_vjp_sv(const HsvImage& hsv, ValueRange range,
                       const Field& upstream, Plane& ds, Plane& dv);

CmykImage rgb_to_cmyk(const Image& img);
Image cmyk_to_rgb(const CmykImage& cmyk, ValueRange range = ValueRange::Unit);

// Partials of cmyk_to_rgb with respect to c, m, y only (key held fixed).
void cmyk_to_rgb_vjp_cmy(const CmykImage& cmyk, ValueRange range,
                         const Field& upstream, Plane& dc, Plane& dm,
                         Plane& dy);

// a,b -> [-1, 127/128] with the symmetric divisor 128 on both halves, so the
// map has an exact inverse.
LabImage normalize_ab(const LabImage& lab);
LabImage denormalize_ab(const LabImage& lab);

// Channel-plane view of an image in a named space (RGB is the identity
// triple). inverse_convert rebuilds an image from such planes.
std::vector<Plane> convert(const Image& img, ColorSpace target);
Image inverse_convert(const std::vector<Plane>& channels, ColorSpace source,
                      ValueRange range = ValueRange::Unit);

}  // namespace af::color
