#include "core/surrogate.hpp"

#include <cmath>
#include <stdexcept>

#include "core/rng.hpp"
#include "core/transforms.hpp"

namespace af::surrogate {

void ConditionalGenerator::check_label(int label) const {
  if (label < 0 || label >= label_count())
    throw std::invalid_argument("label index out of range");
}

void ConditionalGenerator::check_input(const Image& x) {
  require(x.range() == ValueRange::Symmetric,
          "generator inputs must be in [-1,1]");
}

ToyGeneratorParams ToyGeneratorParams::make(uint64_t seed, int label_count,
                                            double blur_sigma) {
  require(label_count >= 2, "label set must have at least 2 entries");
  require(blur_sigma >= 0.0, "blur sigma must be non-negative");
  ToyGeneratorParams p;
  p.seed = seed;
  p.blur_sigma = blur_sigma;
  auto rng = substream_rng(seed, "toy-params");
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  // Luma / opponent-chroma basis (rows orthonormal).
  const double s3 = 1.0 / std::sqrt(3.0);
  const double s2 = 1.0 / std::sqrt(2.0);
  const double s6 = 1.0 / std::sqrt(6.0);
  const double basis[3][3] = {
      {s3, s3, s3}, {s2, -s2, 0.0}, {s6, s6, -2.0 * s6}};

  for (int c = 0; c < label_count; ++c) {
    // Gains: mild on luma, strong on the two chroma directions, with a
    // random rotation inside the chroma plane per label.
    double g_luma = 0.9 + 0.3 * unit(rng);
    double g1 = 4.5 + 1.0 * unit(rng);
    double g2 = 4.5 + 1.0 * unit(rng);
    double ang = unit(rng) * 3.14159265358979323846;
    double ca = std::cos(ang), sa = std::sin(ang);
    // A = B^T diag-rotated gains B  (+ small random jitter)
    double core[3][3] = {
        {g_luma, 0.0, 0.0},
        {0.0, g1 * ca, -g1 * sa},
        {0.0, g2 * sa, g2 * ca},
    };
    std::array<double, 9> a{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l)
            s += basis[k][i] * core[k][l] * basis[l][j];
        a[i * 3 + j] = s + 0.05 * unit(rng);
      }
    std::array<double, 3> b{};
    for (double& v : b) v = 0.12 * unit(rng);
    p.mix.push_back(a);
    p.bias.push_back(b);
  }
  return p;
}

ToyGenerator::ToyGenerator(ToyGeneratorParams params)
    : params_(std::move(params)) {
  require(!params_.mix.empty() && params_.mix.size() == params_.bias.size(),
          "toy generator needs one matrix and bias per label");
  for (const auto& m : params_.mix)
    for (double v : m)
      if (!std::isfinite(v))
        throw std::invalid_argument("non-finite toy generator weight");
}

int ToyGenerator::label_count() const {
  return static_cast<int>(params_.mix.size());
}

std::string ToyGenerator::name() const {
  return "toy-" + std::to_string(params_.seed);
}

Image ToyGenerator::forward(const Image& x, int label) const {
  check_input(x);
  check_label(label);
  Image blurred = transforms::gaussian_blur(x, params_.blur_sigma);
  const auto& A = params_.mix[label];
  const auto& b = params_.bias[label];
  const int h = x.height(), w = x.width();
  std::vector<double> out(static_cast<size_t>(h) * w * 3);
  size_t i = 0;
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      double r = blurred.at(y, xx, 0), g = blurred.at(y, xx, 1),
             bl = blurred.at(y, xx, 2);
      for (int c = 0; c < 3; ++c)
        out[i++] = std::tanh(A[c * 3 + 0] * r + A[c * 3 + 1] * g +
                             A[c * 3 + 2] * bl + b[c]);
    }
  return Image(h, w, ValueRange::Symmetric, std::move(out));
}

Field ToyGenerator::input_vjp(const Image& x, int label,
                              const Field& upstream) const {
  check_input(x);
  check_label(label);
  require(upstream.h == x.height() && upstream.w == x.width(),
          "upstream dimensions differ from input");
  Image blurred = transforms::gaussian_blur(x, params_.blur_sigma);
  const auto& A = params_.mix[label];
  const auto& b = params_.bias[label];
  const int h = x.height(), w = x.width();
  // backward through tanh then the color mix; blur transpose last
  Field g(h, w);
  for (int y = 0; y < h; ++y)
    for (int xx = 0; xx < w; ++xx) {
      double r = blurred.at(y, xx, 0), gg = blurred.at(y, xx, 1),
             bl = blurred.at(y, xx, 2);
      double u[3];
      for (int c = 0; c < 3; ++c) {
        double pre = A[c * 3 + 0] * r + A[c * 3 + 1] * gg + A[c * 3 + 2] * bl + b[c];
        double t = std::tanh(pre);
        u[c] = upstream.at(y, xx, c) * (1.0 - t * t);
      }
      for (int c = 0; c < 3; ++c)
        g.at(y, xx, c) =
            A[0 * 3 + c] * u[0] + A[1 * 3 + c] * u[1] + A[2 * 3 + c] * u[2];
    }
  return transforms::gaussian_blur_adjoint(g, params_.blur_sigma);
}

Image IdentityGenerator::forward(const Image& x, int label) const {
  check_input(x);
  check_label(label);
  return x;
}

Field IdentityGenerator::input_vjp(const Image& x, int label,
                                   const Field& upstream) const {
  check_input(x);
  check_label(label);
  return upstream;
}

}  // namespace af::surrogate
