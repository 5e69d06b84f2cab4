#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace af::surrogate {

// Differentiable conditional generator standing in for an attribute-editing
// GAN: a deterministic forward map plus the input-gradient map the attack
// loops need. Inputs and outputs live in [-1,1].
class ConditionalGenerator {
 public:
  virtual ~ConditionalGenerator() = default;

  virtual int label_count() const = 0;
  virtual std::string name() const = 0;
  virtual Image forward(const Image& x, int label) const = 0;
  virtual Field input_vjp(const Image& x, int label,
                          const Field& upstream) const = 0;

 protected:
  void check_label(int label) const;
  static void check_input(const Image& x);
};

// Per-label 3x3 color mix and bias behind a shared pre-mix blur:
// y = tanh(A_c . blur(x) + b_c). The matrices amplify the opponent-color
// directions, so chromatic edits to the input swing the output the way
// attribute-editing GANs react to color changes.
struct ToyGeneratorParams {
  std::vector<std::array<double, 9>> mix;   // per label, row major
  std::vector<std::array<double, 3>> bias;  // per label
  double blur_sigma = 1.0;
  uint64_t seed = 0;

  static ToyGeneratorParams make(uint64_t seed, int label_count,
                                 double blur_sigma = 1.0);
};

class ToyGenerator : public ConditionalGenerator {
 public:
  explicit ToyGenerator(ToyGeneratorParams params);

  int label_count() const override;
  std::string name() const override;
  Image forward(const Image& x, int label) const override;
  Field input_vjp(const Image& x, int label,
                  const Field& upstream) const override;

  const ToyGeneratorParams& params() const { return params_; }

 private:
  ToyGeneratorParams params_;
};

// Passes the input through unchanged; useful for calibration experiments
// where the output distortion must equal the input perturbation energy.
class IdentityGenerator : public ConditionalGenerator {
 public:
  explicit IdentityGenerator(int label_count = 2) : labels_(label_count) {}
  int label_count() const override { return labels_; }
  std::string name() const override { return "identity"; }
  Image forward(const Image& x, int label) const override;
  Field input_vjp(const Image& x, int label,
                  const Field& upstream) const override;

 private:
  int labels_;
};

}  // namespace af::surrogate
