#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "core/attacks.hpp"
#include "core/config.hpp"
#include "core/metrics.hpp"
#include "core/surrogate.hpp"

namespace af::harness {

const char* version();

struct RunOptions {
  std::string out_dir;  // empty keeps the config's output directory
  bool has_seed_override = false;
  uint64_t seed_override = 0;
  bool write_outputs = true;  // tests can run in-memory only
};

struct PerImageRow {
  std::string cell;  // defense / experiment cell name
  std::string method;
  int image = 0;
  int label = 0;
  double l2 = 0.0, psnr = 0.0, ssim = 0.0;
};

struct EffectivenessResult {
  std::vector<std::string> methods;
  std::map<std::string, metrics::MetricsReport> by_method;
  std::vector<PerImageRow> rows;
};

struct RobustnessResult {
  std::vector<std::string> defenses;  // row order
  std::vector<std::string> methods;
  // defense -> method -> aggregated report
  std::map<std::string, std::map<std::string, metrics::MetricsReport>> table;
  std::vector<PerImageRow> rows;
};

struct ReconstructionResult {
  std::vector<std::string> metric_rows;   // ssim_i, psnr_i, mse_i, ssim_o, ...
  std::vector<std::string> columns;       // pgd, antiforge, *_reconstructed
  std::map<std::string, std::map<std::string, double>> table;
  std::vector<PerImageRow> rows;  // output-side distortions per column
};

struct TransferResult {
  std::vector<std::string> surrogates;
  // Full ASR matrix including the diagonal; the CSV leaves the diagonal out.
  std::vector<std::vector<double>> asr;
};

struct ColorspaceResult {
  std::vector<std::string> defenses;
  std::vector<std::string> spaces;
  std::map<std::string, std::map<std::string, double>> l2;  // defense -> space
  std::map<std::string, double> auc;                        // space -> AUC %
};

struct AblateResult {
  std::vector<double> epsilons;
  std::vector<double> mean_l2;
};

struct SpectraResult {
  double hf_ratio_fake_clean = 0.0;
  double hf_ratio_fake_protected = 0.0;
};

struct ProtectOutcome {
  std::string input;
  std::string output_png;
  std::string sidecar_json;
  bool ok = false;
  std::string error;
};

std::unique_ptr<surrogate::ConditionalGenerator> make_generator(
    const config::SurrogateSpec& spec, uint64_t seed_offset = 0);

attacks::AttackConfig attack_config_for(const config::ExperimentConfig& cfg,
                                        const std::string& method,
                                        uint64_t master_seed, int image_index);

EffectivenessResult run_effectiveness(const config::ExperimentConfig& cfg,
                                      const RunOptions& opt = {});
RobustnessResult run_robustness(const config::ExperimentConfig& cfg,
                                const RunOptions& opt = {});
ReconstructionResult run_reconstruction(const config::ExperimentConfig& cfg,
                                        const RunOptions& opt = {});
TransferResult run_transfer(const config::ExperimentConfig& cfg,
                            const RunOptions& opt = {});
ColorspaceResult run_colorspace(const config::ExperimentConfig& cfg,
                                const RunOptions& opt = {});
AblateResult run_ablate(const config::ExperimentConfig& cfg,
                        const RunOptions& opt = {});
SpectraResult run_spectra(const config::ExperimentConfig& cfg,
                          const RunOptions& opt = {});

std::vector<ProtectOutcome> protect_files(const config::ExperimentConfig& cfg,
                                          const std::vector<std::string>& inputs,
                                          const RunOptions& opt = {});

// Dispatch by experiment name (effectiveness, robustness, reconstruction,
// transfer, colorspace, ablate, spectra).
void run_experiment(const std::string& kind, const config::ExperimentConfig& cfg,
                    const RunOptions& opt = {});

}  // namespace af::harness
