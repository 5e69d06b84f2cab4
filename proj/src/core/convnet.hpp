#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/surrogate.hpp"

namespace af::convnet {

// Planar (channel, row, column) tensor used inside the network runtime.
struct Tensor {
  int ch = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int channels, int height, int width, double fill = 0.0)
      : ch(channels), h(height), w(width),
        v(static_cast<size_t>(channels) * height * width, fill) {}

  double& at(int c, int y, int x) {
    return v[(static_cast<size_t>(c) * h + y) * w + x];
  }
  double at(int c, int y, int x) const {
    return v[(static_cast<size_t>(c) * h + y) * w + x];
  }
};

enum class LayerKind : uint32_t {
  Conv3x3 = 1,       // stride 1, zero pad 1
  InstanceNorm = 2,  // per-channel spatial normalization, eps 1e-5
  ReLU = 3,
  TanhOutput = 4,
};

struct Layer {
  LayerKind kind = LayerKind::ReLU;
  int in_ch = 0, out_ch = 0;     // Conv3x3
  int ch = 0;                    // InstanceNorm
  std::vector<double> weights;   // conv: out*in*9; inorm: gamma then beta
  std::vector<double> bias;      // conv: out
};

struct ConvNetSpec {
  std::vector<Layer> layers;

  int input_channels() const;
  int output_channels() const;
  // Throws a descriptive error naming the offending layer when channel
  // counts do not chain or parameter buffers have the wrong size.
  void validate() const;
};

Tensor forward(const ConvNetSpec& spec, const Tensor& input);
Tensor input_vjp(const ConvNetSpec& spec, const Tensor& input,
                 const Tensor& upstream);

// "AFW1" container: magic, u32-LE layer count, per layer a kind code and its
// shape integers, then every parameter as f32 LE row-major in layer order.
std::vector<uint8_t> serialize_weights(const ConvNetSpec& spec);
ConvNetSpec parse_weights(const std::vector<uint8_t>& bytes);
void save_weights(const ConvNetSpec& spec, const std::string& path);
ConvNetSpec load_weights(const std::string& path);

// Seeded random conv-inorm-relu stack ending in a 3-channel tanh output.
ConvNetSpec random_spec(uint64_t seed, int label_count, int hidden_channels = 8,
                        int blocks = 2);

// Conditional generator over the runtime: the label is injected as one
// constant-valued input plane per label bit, so the first conv layer sees
// 3 + label_count channels.
class ConvNetGenerator : public surrogate::ConditionalGenerator {
 public:
  explicit ConvNetGenerator(ConvNetSpec spec, std::string name = "convnet");

  int label_count() const override;
  std::string name() const override;
  Image forward(const Image& x, int label) const override;
  Field input_vjp(const Image& x, int label,
                  const Field& upstream) const override;

  const ConvNetSpec& spec() const { return spec_; }

 private:
  Tensor conditioned_input(const Image& x, int label) const;

  ConvNetSpec spec_;
  std::string name_;
};

}  // namespace af::convnet
