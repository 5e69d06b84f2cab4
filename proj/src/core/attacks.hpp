#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/color.hpp"
#include "core/image.hpp"
#include "core/surrogate.hpp"
#include "core/transforms.hpp"

namespace af::attacks {

enum class ObjectiveMode { TowardZero, TowardOne, TowardNoise, AwayFromTranslation };
enum class LossNorm { L1, L2 };

ObjectiveMode objective_from_string(const std::string& s);
LossNorm norm_from_string(const std::string& s);
const char* to_string(ObjectiveMode m);
const char* to_string(LossNorm n);

// Per-iteration expectation-over-transformation sampler. Only differentiable
// transforms (identity, Gaussian blur) are accepted; anything else throws at
// construction. Draws come from their own named substream, so wrapping an
// attack with an all-identity sampler reproduces the unwrapped run exactly.
class EotSampler {
 public:
  explicit EotSampler(const std::vector<transforms::TransformSpec>& pool);

  double sigma_at(uint64_t attack_seed, int iteration) const;
  const std::vector<double>& sigmas() const { return sigmas_; }

 private:
  std::vector<double> sigmas_;  // 0 denotes identity
};

struct AttackConfig {
  double epsilon = 0.05;
  double learning_rate = 1e-4;
  int iterations = 500;
  ObjectiveMode objective = ObjectiveMode::AwayFromTranslation;
  LossNorm loss_norm = LossNorm::L2;
  std::vector<int> labels;  // cycled round robin; empty selects all model labels
  uint64_t seed = 0;
  // Exogenous reference for the away-from-translation objective. When absent
  // the attack uses the model's own clean translation per cycled label.
  std::optional<Image> reference;
  std::shared_ptr<const EotSampler> eot;

  void validate() const;
};

// Returns a config whose attacks take every per-iteration gradient through a
// freshly sampled transform.
AttackConfig eot_wrap(AttackConfig cfg,
                      const std::vector<transforms::TransformSpec>& pool);

// theta lives in normalized a/b units, bounded by epsilon in L-inf.
struct Perturbation {
  Plane theta_a, theta_b;
};

struct AttackTrace {
  std::vector<double> loss;         // one entry per iteration
  std::vector<long> clamp_counts;   // range/gamut clamps per iteration
  std::vector<double> theta_linf;   // max |theta| after each update+clip
  double final_output_distortion = 0.0;
};

struct ObjectiveEval {
  double loss = 0.0;
  Field grad;  // d loss / d y
};

// Shared objective layer. Toward-* modes return a loss to be minimized
// against an all-zero, all-one, or seeded Gaussian target; the
// away-from-translation mode returns the negated distance to `reference`
// (still minimized). A missing reference for the away mode is an error.
ObjectiveEval objective_loss(const Image& y, ObjectiveMode mode, LossNorm norm,
                             const Image* reference, uint64_t seed);

struct AntiforgeResult {
  Image x_adv;
  Perturbation theta;
  AttackTrace trace;
};

struct RgbAttackResult {
  Image x_adv;
  AttackTrace trace;
};

struct ChannelAttackResult {
  Image x_adv;
  std::vector<Plane> theta;
  AttackTrace trace;
};

// The anti-forgery attack: per iteration the original image is converted to
// Lab, theta is added to the normalized a/b channels, the result converted
// back to RGB and scored against the cycled label; theta follows Adam steps
// and is clipped to [-epsilon, epsilon] after every update. The luminance
// channel is never touched.
AntiforgeResult antiforge_attack(const Image& x,
                                 const surrogate::ConditionalGenerator& model,
                                 const AttackConfig& cfg);

// Sign-gradient baseline on RGB pixels, step epsilon/iterations.
RgbAttackResult pgd_attack(const Image& x,
                           const surrogate::ConditionalGenerator& model,
                           const AttackConfig& cfg);

// Optimization baseline: Adam on an RGB perturbation, clipped to the epsilon
// box after every step.
RgbAttackResult cw_attack(const Image& x,
                          const surrogate::ConditionalGenerator& model,
                          const AttackConfig& cfg);

// The same bounded attack parameterized over the perturbable channels of a
// color space: RGB perturbs all three pixel channels on the declared range
// scale, Lab the normalized a/b pair, HSV the S/V pair and CMYK the C/M/Y
// triple (each rescaled so epsilon is commensurate across spaces).
ChannelAttackResult channel_attack(const Image& x,
                                   const surrogate::ConditionalGenerator& model,
                                   const AttackConfig& cfg,
                                   color::ColorSpace space);

}  // namespace af::attacks
