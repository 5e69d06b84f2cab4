#include "core/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/jpeg.hpp"

namespace af::transforms {

namespace {

// reflect-101 index (mirror without repeating the border sample)
int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t end = s.find(sep, start);
    if (end == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

}  // namespace

TransformSpec TransformSpec::parse(const std::string& text) {
  std::string t = trim(text);
  if (t.find('|') != std::string::npos) {
    TransformSpec chain;
    chain.kind = Kind::Chain;
    for (const auto& part : split(t, '|')) {
      std::string p = trim(part);
      if (!p.empty()) chain.children.push_back(parse(p));
    }
    return chain;
  }
  TransformSpec spec;
  std::string name = t, arg;
  if (size_t colon = t.find(':'); colon != std::string::npos) {
    name = trim(t.substr(0, colon));
    arg = trim(t.substr(colon + 1));
  }
  if (name.empty() || name == "identity" || name == "none") {
    spec.kind = Kind::Identity;
  } else if (name == "jpeg") {
    spec.kind = Kind::Jpeg;
    if (!arg.empty()) spec.quality = std::stoi(arg);
    require(spec.quality >= 1 && spec.quality <= 100,
            "jpeg quality must be in [1,100]");
  } else if (name == "blur") {
    spec.kind = Kind::GaussianBlur;
    if (!arg.empty()) spec.sigma = std::stod(arg);
    require(spec.sigma > 0.0, "blur sigma must be positive");
  } else if (name == "quantize") {
    spec.kind = Kind::BitQuantize;
    if (!arg.empty()) spec.bits = std::stoi(arg);
    require(spec.bits >= 1 && spec.bits <= 8, "quantize bits must be in [1,8]");
  } else if (name == "median") {
    spec.kind = Kind::MedianFilter;
    if (!arg.empty()) spec.window = std::stoi(arg);
    require(spec.window >= 1 && spec.window % 2 == 1,
            "median window must be odd");
  } else if (name == "reconstruct") {
    spec.kind = Kind::Chain;
    spec.children = {parse("median:3"), parse("quantize:5"), parse("jpeg:75")};
  } else {
    throw std::invalid_argument("unknown transform: " + name);
  }
  return spec;
}

std::string TransformSpec::str() const {
  switch (kind) {
    case Kind::Identity: return "identity";
    case Kind::Jpeg: return "jpeg:" + std::to_string(quality);
    case Kind::GaussianBlur: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "blur:%g", sigma);
      return buf;
    }
    case Kind::BitQuantize: return "quantize:" + std::to_string(bits);
    case Kind::MedianFilter: return "median:" + std::to_string(window);
    case Kind::Chain: {
      std::string s;
      for (size_t i = 0; i < children.size(); ++i) {
        if (i) s += "|";
        s += children[i].str();
      }
      return s.empty() ? "identity" : s;
    }
  }
  return "?";
}

bool TransformSpec::differentiable() const {
  switch (kind) {
    case Kind::Identity:
    case Kind::GaussianBlur:
      return true;
    case Kind::Chain:
      return std::all_of(children.begin(), children.end(),
                         [](const TransformSpec& c) { return c.differentiable(); });
    default:
      return false;
  }
}

std::vector<double> gaussian_kernel(double sigma) {
  int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) return img;
  auto k = gaussian_kernel(sigma);
  const int r = (static_cast<int>(k.size()) - 1) / 2;
  const int h = img.height(), w = img.width();
  std::vector<double> rows(static_cast<size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i)
          s += k[i + r] * img.at(y, reflect(x + i, w), c);
        rows[(static_cast<size_t>(y) * w + x) * 3 + c] = s;
      }
  std::vector<double> out(rows.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int i = -r; i <= r; ++i)
          s += k[i + r] * rows[(static_cast<size_t>(reflect(y + i, h)) * w + x) * 3 + c];
        out[(static_cast<size_t>(y) * w + x) * 3 + c] = s;
      }
  return Image(h, w, img.range(), std::move(out));
}

Field gaussian_blur_adjoint(const Field& upstream, double sigma) {
  if (sigma <= 0.0) return upstream;
  auto k = gaussian_kernel(sigma);
  const int r = (static_cast<int>(k.size()) - 1) / 2;
  const int h = upstream.h, w = upstream.w;
  // transpose of (rows pass then cols pass) applied in reverse order,
  // scattering through the same reflected indices
  Field cols(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double u = upstream.at(y, x, c);
        for (int i = -r; i <= r; ++i)
          cols.at(reflect(y + i, h), x, c) += k[i + r] * u;
      }
  Field out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double u = cols.at(y, x, c);
        for (int i = -r; i <= r; ++i)
          out.at(y, reflect(x + i, w), c) += k[i + r] * u;
      }
  return out;
}

Image bit_quantize(const Image& img, int bits) {
  require(bits >= 1 && bits <= 8, "quantize bits must be in [1,8]");
  const double levels = static_cast<double>((1 << bits) - 1);
  Image unit = img.to_range(ValueRange::Unit);
  std::vector<double> out(unit.size());
  for (size_t i = 0; i < unit.size(); ++i)
    out[i] = std::round(unit.data()[i] * levels) / levels;
  Image q(unit.height(), unit.width(), ValueRange::Unit, std::move(out));
  return q.to_range(img.range());
}

Image median_filter(const Image& img, int window) {
  require(window >= 1 && window % 2 == 1, "median window must be odd");
  if (window == 1) return img;
  const int r = window / 2;
  const int h = img.height(), w = img.width();
  std::vector<double> out(static_cast<size_t>(h) * w * 3);
  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(window) * window);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        vals.clear();
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx)
            vals.push_back(img.at(reflect(y + dy, h), reflect(x + dx, w), c));
        auto mid = vals.begin() + vals.size() / 2;
        std::nth_element(vals.begin(), mid, vals.end());
        out[(static_cast<size_t>(y) * w + x) * 3 + c] = *mid;
      }
  return Image(h, w, img.range(), std::move(out));
}

Image reconstruct(const Image& img) {
  return jpeg::roundtrip(bit_quantize(median_filter(img, 3), 5), 75);
}

Image apply(const Image& img, const TransformSpec& spec) {
  switch (spec.kind) {
    case TransformSpec::Kind::Identity: return img;
    case TransformSpec::Kind::Jpeg: return jpeg::roundtrip(img, spec.quality);
    case TransformSpec::Kind::GaussianBlur: return gaussian_blur(img, spec.sigma);
    case TransformSpec::Kind::BitQuantize: return bit_quantize(img, spec.bits);
    case TransformSpec::Kind::MedianFilter: return median_filter(img, spec.window);
    case TransformSpec::Kind::Chain: return apply_chain(img, spec);
  }
  throw std::invalid_argument("unknown transform kind");
}

Image apply_chain(const Image& img, const TransformSpec& chain) {
  require(chain.kind == TransformSpec::Kind::Chain || chain.children.empty(),
          "not a chain spec");
  if (chain.kind != TransformSpec::Kind::Chain) return apply(img, chain);
  Image out = img;
  for (const auto& child : chain.children) out = apply(out, child);
  return out;
}

}  // namespace af::transforms
