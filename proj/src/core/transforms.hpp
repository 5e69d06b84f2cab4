#pragma once

#include <string>
#include <vector>

#include "core/image.hpp"

namespace af::transforms {

// Adversary-side input transformation. Parsed from strings such as
// "jpeg:75", "blur:3", "quantize:5", "median:3", "identity", or a
// pipe-separated chain "jpeg:75|blur:1".
struct TransformSpec {
  enum class Kind { Identity, Jpeg, GaussianBlur, BitQuantize, MedianFilter, Chain };
  Kind kind = Kind::Identity;
  int quality = 75;
  double sigma = 1.0;
  int bits = 5;
  int window = 3;
  std::vector<TransformSpec> children;

  static TransformSpec parse(const std::string& text);
  std::string str() const;
  bool differentiable() const;  // only identity and Gaussian blur qualify
};

// Separable Gaussian convolution, kernel radius ceil(3*sigma), kernel
// normalized to sum 1, mirrored (reflect-101) padding. sigma <= 0 is the
// identity.
Image gaussian_blur(const Image& img, double sigma);

// Exact transpose of gaussian_blur as a linear operator, used to carry
// gradients through the blur.
Field gaussian_blur_adjoint(const Field& upstream, double sigma);

// The normalized 1-D kernel used by gaussian_blur.
std::vector<double> gaussian_kernel(double sigma);

Image bit_quantize(const Image& img, int bits);
Image median_filter(const Image& img, int window);

// Fixed classical restoration chain standing in for learned reconstruction:
// median(3) -> quantize(5 bits) -> jpeg(quality 75).
Image reconstruct(const Image& img);

Image apply(const Image& img, const TransformSpec& spec);
Image apply_chain(const Image& img, const TransformSpec& chain);

}  // namespace af::transforms
