#include "core/convnet.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "core/image_io.hpp"
#include "core/rng.hpp"

namespace af::convnet {

namespace {

constexpr double kNormEps = 1e-5;

[[noreturn]] void layer_error(size_t index, const Layer& layer,
                              const std::string& msg) {
  const char* kind = "?";
  switch (layer.kind) {
    case LayerKind::Conv3x3: kind = "conv3x3"; break;
    case LayerKind::InstanceNorm: kind = "instance_norm"; break;
    case LayerKind::ReLU: kind = "relu"; break;
    case LayerKind::TanhOutput: kind = "tanh_output"; break;
  }
  throw std::invalid_argument("layer " + std::to_string(index) + " (" + kind +
                              "): " + msg);
}

Tensor conv_forward(const Layer& l, const Tensor& x) {
  Tensor y(l.out_ch, x.h, x.w);
  for (int co = 0; co < l.out_ch; ++co) {
    for (int oy = 0; oy < x.h; ++oy) {
      for (int ox = 0; ox < x.w; ++ox) {
        double s = l.bias[co];
        for (int ci = 0; ci < l.in_ch; ++ci) {
          const double* wk = &l.weights[(static_cast<size_t>(co) * l.in_ch + ci) * 9];
          for (int ky = 0; ky < 3; ++ky) {
            int iy = oy + ky - 1;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              int ix = ox + kx - 1;
              if (ix < 0 || ix >= x.w) continue;
              s += wk[ky * 3 + kx] * x.at(ci, iy, ix);
            }
          }
        }
        y.at(co, oy, ox) = s;
      }
    }
  }
  return y;
}

Tensor conv_backward_input(const Layer& l, const Tensor& x, const Tensor& u) {
  Tensor g(l.in_ch, x.h, x.w);
  for (int co = 0; co < l.out_ch; ++co) {
    for (int oy = 0; oy < x.h; ++oy) {
      for (int ox = 0; ox < x.w; ++ox) {
        double uv = u.at(co, oy, ox);
        if (uv == 0.0) continue;
        for (int ci = 0; ci < l.in_ch; ++ci) {
          const double* wk = &l.weights[(static_cast<size_t>(co) * l.in_ch + ci) * 9];
          for (int ky = 0; ky < 3; ++ky) {
            int iy = oy + ky - 1;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              int ix = ox + kx - 1;
              if (ix < 0 || ix >= x.w) continue;
              g.at(ci, iy, ix) += wk[ky * 3 + kx] * uv;
            }
          }
        }
      }
    }
  }
  return g;
}

struct NormStats {
  std::vector<double> mean, inv_std;
};

NormStats norm_stats(const Tensor& x) {
  NormStats s;
  s.mean.resize(x.ch);
  s.inv_std.resize(x.ch);
  const double n = static_cast<double>(x.h) * x.w;
  for (int c = 0; c < x.ch; ++c) {
    double m = 0.0;
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) m += x.at(c, y, xx);
    m /= n;
    double var = 0.0;
    for (int y = 0; y < x.h; ++y)
      for (int xx = 0; xx < x.w; ++xx) {
        double d = x.at(c, y, xx) - m;
        var += d * d;
      }
    var /= n;
    s.mean[c] = m;
    s.inv_std[c] = 1.0 / std::sqrt(var + kNormEps);
  }
  return s;
}

Tensor inorm_forward(const Layer& l, const Tensor& x) {
  NormStats st = norm_stats(x);
  Tensor y(x.ch, x.h, x.w);
  for (int c = 0; c < x.ch; ++c) {
    double gamma = l.weights[c], beta = l.weights[x.ch + c];
    for (int yy = 0; yy < x.h; ++yy)
      for (int xx = 0; xx < x.w; ++xx)
        y.at(c, yy, xx) =
            gamma * (x.at(c, yy, xx) - st.mean[c]) * st.inv_std[c] + beta;
  }
  return y;
}

// Full quotient-rule backward: the spatial mean and variance both depend on
// the input.
Tensor inorm_backward(const Layer& l, const Tensor& x, const Tensor& u) {
  NormStats st = norm_stats(x);
  Tensor g(x.ch, x.h, x.w);
  const double n = static_cast<double>(x.h) * x.w;
  for (int c = 0; c < x.ch; ++c) {
    double gamma = l.weights[c];
    double mean_u = 0.0, mean_ux = 0.0;
    for (int yy = 0; yy < x.h; ++yy)
      for (int xx = 0; xx < x.w; ++xx) {
        double xhat = (x.at(c, yy, xx) - st.mean[c]) * st.inv_std[c];
        mean_u += u.at(c, yy, xx);
        mean_ux += u.at(c, yy, xx) * xhat;
      }
    mean_u /= n;
    mean_ux /= n;
    for (int yy = 0; yy < x.h; ++yy)
      for (int xx = 0; xx < x.w; ++xx) {
        double xhat = (x.at(c, yy, xx) - st.mean[c]) * st.inv_std[c];
        g.at(c, yy, xx) = gamma * st.inv_std[c] *
                          (u.at(c, yy, xx) - mean_u - xhat * mean_ux);
      }
  }
  return g;
}

}  // namespace

int ConvNetSpec::input_channels() const {
  for (const auto& l : layers)
    if (l.kind == LayerKind::Conv3x3) return l.in_ch;
  return 0;
}

int ConvNetSpec::output_channels() const {
  int ch = input_channels();
  for (const auto& l : layers)
    if (l.kind == LayerKind::Conv3x3) ch = l.out_ch;
  return ch;
}

void ConvNetSpec::validate() const {
  require(!layers.empty(), "network has no layers");
  int ch = input_channels();
  require(ch > 0, "network has no convolution layer");
  for (size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    switch (l.kind) {
      case LayerKind::Conv3x3:
        if (l.in_ch != ch)
          layer_error(i, l,
                      "expects " + std::to_string(l.in_ch) +
                          " input channels but receives " + std::to_string(ch));
        if (l.weights.size() != static_cast<size_t>(l.out_ch) * l.in_ch * 9)
          layer_error(i, l, "weight buffer size mismatch");
        if (l.bias.size() != static_cast<size_t>(l.out_ch))
          layer_error(i, l, "bias buffer size mismatch");
        ch = l.out_ch;
        break;
      case LayerKind::InstanceNorm:
        if (l.ch != ch)
          layer_error(i, l,
                      "normalizes " + std::to_string(l.ch) +
                          " channels but receives " + std::to_string(ch));
        if (l.weights.size() != static_cast<size_t>(l.ch) * 2)
          layer_error(i, l, "gamma/beta buffer size mismatch");
        break;
      case LayerKind::ReLU:
      case LayerKind::TanhOutput:
        break;
    }
  }
}

Tensor forward(const ConvNetSpec& spec, const Tensor& input) {
  spec.validate();
  require(input.ch == spec.input_channels(),
          "input channel count does not match network");
  Tensor x = input;
  for (size_t i = 0; i < spec.layers.size(); ++i) {
    const Layer& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::Conv3x3: x = conv_forward(l, x); break;
      case LayerKind::InstanceNorm: x = inorm_forward(l, x); break;
      case LayerKind::ReLU:
        for (double& v : x.v) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::TanhOutput:
        for (double& v : x.v) v = std::tanh(v);
        break;
    }
  }
  return x;
}

Tensor input_vjp(const ConvNetSpec& spec, const Tensor& input,
                 const Tensor& upstream) {
  spec.validate();
  // forward pass caching each layer input
  std::vector<Tensor> cache;
  cache.reserve(spec.layers.size());
  Tensor x = input;
  for (const Layer& l : spec.layers) {
    cache.push_back(x);
    switch (l.kind) {
      case LayerKind::Conv3x3: x = conv_forward(l, x); break;
      case LayerKind::InstanceNorm: x = inorm_forward(l, x); break;
      case LayerKind::ReLU:
        for (double& v : x.v) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::TanhOutput:
        for (double& v : x.v) v = std::tanh(v);
        break;
    }
  }
  require(upstream.ch == x.ch && upstream.h == x.h && upstream.w == x.w,
          "upstream shape does not match network output");
  Tensor u = upstream;
  for (size_t i = spec.layers.size(); i-- > 0;) {
    const Layer& l = spec.layers[i];
    const Tensor& xin = cache[i];
    switch (l.kind) {
      case LayerKind::Conv3x3:
        u = conv_backward_input(l, xin, u);
        break;
      case LayerKind::InstanceNorm:
        u = inorm_backward(l, xin, u);
        break;
      case LayerKind::ReLU:
        // zero subgradient at 0
        for (size_t j = 0; j < u.v.size(); ++j)
          if (xin.v[j] <= 0.0) u.v[j] = 0.0;
        break;
      case LayerKind::TanhOutput:
        for (size_t j = 0; j < u.v.size(); ++j) {
          double t = std::tanh(xin.v[j]);
          u.v[j] *= 1.0 - t * t;
        }
        break;
    }
  }
  return u;
}

namespace {

void put_u32le(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 24));
}

uint32_t get_u32le(const std::vector<uint8_t>& d, size_t& p) {
  if (p + 4 > d.size()) throw std::runtime_error("weights: truncated file");
  uint32_t v = d[p] | (d[p + 1] << 8) | (d[p + 2] << 16) |
               (static_cast<uint32_t>(d[p + 3]) << 24);
  p += 4;
  return v;
}

void put_f32le(std::vector<uint8_t>& out, double v) {
  float f = static_cast<float>(v);
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32le(out, bits);
}

double get_f32le(const std::vector<uint8_t>& d, size_t& p) {
  uint32_t bits = get_u32le(d, p);
  float f;
  std::memcpy(&f, &bits, 4);
  return static_cast<double>(f);
}

}  // namespace

std::vector<uint8_t> serialize_weights(const ConvNetSpec& spec) {
  spec.validate();
  std::vector<uint8_t> out = {'A', 'F', 'W', '1'};
  put_u32le(out, static_cast<uint32_t>(spec.layers.size()));
  for (const Layer& l : spec.layers) {
    put_u32le(out, static_cast<uint32_t>(l.kind));
    switch (l.kind) {
      case LayerKind::Conv3x3:
        put_u32le(out, 2);
        put_u32le(out, static_cast<uint32_t>(l.out_ch));
        put_u32le(out, static_cast<uint32_t>(l.in_ch));
        break;
      case LayerKind::InstanceNorm:
        put_u32le(out, 1);
        put_u32le(out, static_cast<uint32_t>(l.ch));
        break;
      default:
        put_u32le(out, 0);
    }
  }
  for (const Layer& l : spec.layers) {
    for (double v : l.weights) put_f32le(out, v);
    for (double v : l.bias) put_f32le(out, v);
  }
  return out;
}

ConvNetSpec parse_weights(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "AFW1", 4) != 0)
    throw std::runtime_error("weights: bad magic");
  size_t p = 4;
  uint32_t count = get_u32le(bytes, p);
  if (count == 0 || count > 1024) throw std::runtime_error("weights: bad layer count");
  ConvNetSpec spec;
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t kind = get_u32le(bytes, p);
    uint32_t nshape = get_u32le(bytes, p);
    Layer l;
    switch (kind) {
      case 1:
        if (nshape != 2) throw std::runtime_error("weights: conv expects 2 shape ints");
        l.kind = LayerKind::Conv3x3;
        l.out_ch = static_cast<int>(get_u32le(bytes, p));
        l.in_ch = static_cast<int>(get_u32le(bytes, p));
        break;
      case 2:
        if (nshape != 1)
          throw std::runtime_error("weights: instance_norm expects 1 shape int");
        l.kind = LayerKind::InstanceNorm;
        l.ch = static_cast<int>(get_u32le(bytes, p));
        break;
      case 3:
        l.kind = LayerKind::ReLU;
        for (uint32_t s = 0; s < nshape; ++s) get_u32le(bytes, p);
        break;
      case 4:
        l.kind = LayerKind::TanhOutput;
        for (uint32_t s = 0; s < nshape; ++s) get_u32le(bytes, p);
        break;
      default:
        throw std::runtime_error("weights: unknown layer kind " + std::to_string(kind));
    }
    spec.layers.push_back(std::move(l));
  }
  for (Layer& l : spec.layers) {
    if (l.kind == LayerKind::Conv3x3) {
      l.weights.resize(static_cast<size_t>(l.out_ch) * l.in_ch * 9);
      for (double& v : l.weights) v = get_f32le(bytes, p);
      l.bias.resize(static_cast<size_t>(l.out_ch));
      for (double& v : l.bias) v = get_f32le(bytes, p);
    } else if (l.kind == LayerKind::InstanceNorm) {
      l.weights.resize(static_cast<size_t>(l.ch) * 2);
      for (double& v : l.weights) v = get_f32le(bytes, p);
    }
  }
  spec.validate();
  return spec;
}

void save_weights(const ConvNetSpec& spec, const std::string& path) {
  io::write_file(path, serialize_weights(spec));
}

ConvNetSpec load_weights(const std::string& path) {
  return parse_weights(io::read_file(path));
}

ConvNetSpec random_spec(uint64_t seed, int label_count, int hidden_channels,
                        int blocks) {
  require(label_count >= 2, "label set must have at least 2 entries");
  require(hidden_channels >= 1 && blocks >= 1, "invalid network size");
  auto rng = substream_rng(seed, "convnet-init");
  std::normal_distribution<double> normal(0.0, 1.0);
  ConvNetSpec spec;
  auto add_conv = [&](int in_ch, int out_ch, double gain) {
    Layer l;
    l.kind = LayerKind::Conv3x3;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    double scale = gain / std::sqrt(static_cast<double>(in_ch) * 9.0);
    l.weights.resize(static_cast<size_t>(out_ch) * in_ch * 9);
    for (double& v : l.weights) v = scale * normal(rng);
    l.bias.assign(static_cast<size_t>(out_ch), 0.0);
    for (double& v : l.bias) v = 0.05 * normal(rng);
    spec.layers.push_back(std::move(l));
  };
  auto add_inorm = [&](int ch) {
    Layer l;
    l.kind = LayerKind::InstanceNorm;
    l.ch = ch;
    l.weights.assign(static_cast<size_t>(ch) * 2, 0.0);
    for (int c = 0; c < ch; ++c) {
      l.weights[c] = 1.0 + 0.1 * normal(rng);          // gamma
      l.weights[ch + c] = 0.1 * normal(rng);           // beta
    }
    spec.layers.push_back(std::move(l));
  };
  int in_ch = 3 + label_count;
  add_conv(in_ch, hidden_channels, 1.4);
  add_inorm(hidden_channels);
  spec.layers.push_back(Layer{LayerKind::ReLU});
  for (int b = 1; b < blocks; ++b) {
    add_conv(hidden_channels, hidden_channels, 1.4);
    add_inorm(hidden_channels);
    spec.layers.push_back(Layer{LayerKind::ReLU});
  }
  add_conv(hidden_channels, 3, 2.0);
  spec.layers.push_back(Layer{LayerKind::TanhOutput});
  spec.validate();
  return spec;
}

ConvNetGenerator::ConvNetGenerator(ConvNetSpec spec, std::string name)
    : spec_(std::move(spec)), name_(std::move(name)) {
  spec_.validate();
  require(spec_.input_channels() >= 5,
          "conditional network needs 3 image channels plus at least 2 label planes");
  require(spec_.output_channels() == 3, "network output must be 3 channels");
  require(spec_.layers.back().kind == LayerKind::TanhOutput,
          "generator network must end in a tanh output layer");
}

int ConvNetGenerator::label_count() const { return spec_.input_channels() - 3; }

std::string ConvNetGenerator::name() const { return name_; }

Tensor ConvNetGenerator::conditioned_input(const Image& x, int label) const {
  const int h = x.height(), w = x.width();
  Tensor t(spec_.input_channels(), h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) t.at(c, y, xx) = x.at(y, xx, c);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) t.at(3 + label, y, xx) = 1.0;
  return t;
}

Image ConvNetGenerator::forward(const Image& x, int label) const {
  check_input(x);
  check_label(label);
  Tensor out = convnet::forward(spec_, conditioned_input(x, label));
  const int h = x.height(), w = x.width();
  std::vector<double> px(static_cast<size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      for (int c = 0; c < 3; ++c)
        px[(static_cast<size_t>(y) * w + xx) * 3 + c] = out.at(c, y, xx);
  return Image(h, w, ValueRange::Symmetric, std::move(px));
}

Field ConvNetGenerator::input_vjp(const Image& x, int label,
                                  const Field& upstream) const {
  check_input(x);
  check_label(label);
  const int h = x.height(), w = x.width();
  Tensor up(3, h, w);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      for (int c = 0; c < 3; ++c) up.at(c, y, xx) = upstream.at(y, xx, c);
  Tensor g = convnet::input_vjp(spec_, conditioned_input(x, label), up);
  Field out(h, w);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx)
      for (int c = 0; c < 3; ++c) out.at(y, xx, c) = g.at(c, y, xx);
  return out;
}

}  // namespace af::convnet
