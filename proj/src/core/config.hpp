#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/dataset.hpp"
#include "core/transforms.hpp"

namespace af::config {

// Minimal key/value text format with [section] and [section.sub] headers,
// '#' comments. Unknown keys are rejected at load so typos do not silently
// fall back to defaults.
struct IniData {
  std::map<std::string, std::map<std::string, std::string>> sections;

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
};

IniData parse_ini(const std::string& text);

struct SurrogateSpec {
  std::string kind = "toy";  // toy | convnet | identity
  int labels = 5;
  double blur_sigma = 1.0;
  uint64_t seed = 7;
  std::string weights;  // convnet weight file, empty -> seeded random net
  int hidden = 8;
  int blocks = 2;
};

struct AttackSettings {
  double epsilon = 0.05;
  double learning_rate = 1e-4;
  int iterations = 500;
  std::string objective = "away_from_translation";
  std::string loss_norm = "l2";
};

struct ExperimentConfig {
  uint64_t seed = 42;
  std::string out_dir = "results";
  dataset::DatasetSpec data;
  SurrogateSpec surrogate;
  std::map<std::string, AttackSettings> attacks;  // antiforge, pgd, cw

  int jpeg_quality = 75;
  double blur_sigma = 3.0;
  double high_epsilon = 0.1;  // robustness row with a larger budget
  std::vector<transforms::TransformSpec> eot_pool;
  std::vector<double> ablate_epsilons = {0.01, 0.03, 0.05, 0.07, 0.1};
  double asr_threshold = 0.05;
  int lid_neighbors = 20;
  int lid_feature_side = 32;

  static ExperimentConfig defaults();
  static ExperimentConfig from_text(const std::string& text);
  static ExperimentConfig load(const std::string& path);

  // Checks value ranges and that referenced paths exist.
  void validate() const;

  // Deterministic serialization; the FNV-1a hash of it stamps every emitted
  // result row.
  std::string canonical() const;
  std::string hash_hex() const;
};

}  // namespace af::config
