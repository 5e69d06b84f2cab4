#include "antiforgery.h"

#include <cstring>
#include <stdexcept>
#include <string>

#include "core/attacks.hpp"
#include "core/color.hpp"
#include "core/config.hpp"
#include "core/convnet.hpp"
#include "core/harness.hpp"
#include "core/image.hpp"
#include "core/image_io.hpp"
#include "core/metrics.hpp"
#include "core/surrogate.hpp"

namespace {

thread_local std::string g_last_error;

af_status fail(af_status code, const char* what) {
  g_last_error = what ? what : "";
  return code;
}

template <typename Fn>
af_status guarded(Fn&& fn) {
  try {
    fn();
    return AF_OK;
  } catch (const std::invalid_argument& e) {
    return fail(AF_ERR_INVALID_ARG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(AF_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(AF_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(AF_ERR_RUNTIME, "unknown error");
  }
}

af::ValueRange to_range(af_value_range r) {
  return r == AF_RANGE_UNIT ? af::ValueRange::Unit : af::ValueRange::Symmetric;
}

}  // namespace

struct af_image {
  af::Image img;
};

struct af_generator {
  std::unique_ptr<af::surrogate::ConditionalGenerator> gen;
};

struct af_attack_config {
  af::attacks::AttackConfig cfg;
};

extern "C" {

const char* af_version(void) { return af::harness::version(); }

const char* af_status_name(af_status status) {
  switch (status) {
    case AF_OK: return "ok";
    case AF_ERR_INVALID_ARG: return "invalid argument";
    case AF_ERR_BAD_HANDLE: return "bad handle";
    case AF_ERR_IO: return "i/o error";
    case AF_ERR_CONFIG: return "config error";
    case AF_ERR_RUNTIME: return "runtime error";
    case AF_ERR_BUFFER_TOO_SMALL: return "buffer too small";
  }
  return "unknown";
}

const char* af_last_error(void) { return g_last_error.c_str(); }

af_status af_image_create(int32_t height, int32_t width, af_value_range range,
                          af_image** out) {
  if (!out) return fail(AF_ERR_INVALID_ARG, "out is null");
  return guarded([&]() {
    *out = new af_image{af::Image(height, width, to_range(range))};
  });
}

af_status af_image_from_pixels(int32_t height, int32_t width,
                               af_value_range range, const double* pixels,
                               af_image** out) {
  if (!out || !pixels) return fail(AF_ERR_INVALID_ARG, "null argument");
  return guarded([&]() {
    std::vector<double> px(pixels,
                           pixels + static_cast<size_t>(height) * width * 3);
    *out = new af_image{af::Image(height, width, to_range(range), std::move(px))};
  });
}

af_status af_image_clone(const af_image* img, af_image** out) {
  if (!img || !out) return fail(AF_ERR_BAD_HANDLE, "null image handle");
  return guarded([&]() { *out = new af_image{img->img}; });
}

void af_image_free(af_image* img) { delete img; }

int32_t af_image_height(const af_image* img) {
  return img ? img->img.height() : 0;
}

int32_t af_image_width(const af_image* img) { return img ? img->img.width() : 0; }

af_value_range af_image_range(const af_image* img) {
  return img && img->img.range() == af::ValueRange::Symmetric
             ? AF_RANGE_SYMMETRIC
             : AF_RANGE_UNIT;
}

af_status af_image_copy_pixels(const af_image* img, double* out,
                               size_t capacity) {
  if (!img) return fail(AF_ERR_BAD_HANDLE, "null image handle");
  if (!out) return fail(AF_ERR_INVALID_ARG, "out is null");
  if (capacity < img->img.size())
    return fail(AF_ERR_BUFFER_TOO_SMALL, "pixel buffer too small");
  std::memcpy(out, img->img.data(), img->img.size() * sizeof(double));
  return AF_OK;
}

af_status af_image_read(const char* path, af_value_range range,
                        af_image** out) {
  if (!path || !out) return fail(AF_ERR_INVALID_ARG, "null argument");
  af_status rc = guarded(
      [&]() { *out = new af_image{af::io::read_image(path, to_range(range))}; });
  return rc == AF_ERR_RUNTIME ? fail(AF_ERR_IO, g_last_error.c_str()) : rc;
}

af_status af_image_write_png(const af_image* img, const char* path) {
  if (!img) return fail(AF_ERR_BAD_HANDLE, "null image handle");
  if (!path) return fail(AF_ERR_INVALID_ARG, "path is null");
  af_status rc = guarded([&]() { af::io::write_png(img->img, path); });
  return rc == AF_ERR_RUNTIME ? fail(AF_ERR_IO, g_last_error.c_str()) : rc;
}

af_status af_rgb_to_lab(const af_image* img, double* L, double* a, double* b,
                        size_t capacity) {
  if (!img) return fail(AF_ERR_BAD_HANDLE, "null image handle");
  if (!L || !a || !b) return fail(AF_ERR_INVALID_ARG, "null channel buffer");
  size_t need = static_cast<size_t>(img->img.height()) * img->img.width();
  if (capacity < need)
    return fail(AF_ERR_BUFFER_TOO_SMALL, "channel buffer too small");
  return guarded([&]() {
    af::color::LabImage lab = af::color::rgb_to_lab(img->img);
    std::memcpy(L, lab.L.v.data(), need * sizeof(double));
    std::memcpy(a, lab.a.v.data(), need * sizeof(double));
    std::memcpy(b, lab.b.v.data(), need * sizeof(double));
  });
}

af_status af_lab_to_rgb(int32_t height, int32_t width, const double* L,
                        const double* a, const double* b, af_value_range range,
                        int64_t* clamp_count, af_image** out) {
  if (!L || !a || !b || !out) return fail(AF_ERR_INVALID_ARG, "null argument");
  return guarded([&]() {
    size_t n = static_cast<size_t>(height) * width;
    af::color::LabImage lab{af::Plane(height, width), af::Plane(height, width),
                            af::Plane(height, width)};
    std::memcpy(lab.L.v.data(), L, n * sizeof(double));
    std::memcpy(lab.a.v.data(), a, n * sizeof(double));
    std::memcpy(lab.b.v.data(), b, n * sizeof(double));
    long clamps = 0;
    af::Image img = af::color::lab_to_rgb(lab, to_range(range), &clamps);
    if (clamp_count) *clamp_count = clamps;
    *out = new af_image{std::move(img)};
  });
}

af_status af_generator_toy(uint64_t seed, int32_t label_count,
                           double blur_sigma, af_generator** out) {
  if (!out) return fail(AF_ERR_INVALID_ARG, "out is null");
  return guarded([&]() {
    *out = new af_generator{std::make_unique<af::surrogate::ToyGenerator>(
        af::surrogate::ToyGeneratorParams::make(seed, label_count, blur_sigma))};
  });
}

af_status af_generator_convnet(const char* weight_path, af_generator** out) {
  if (!weight_path || !out) return fail(AF_ERR_INVALID_ARG, "null argument");
  return guarded([&]() {
    *out = new af_generator{std::make_unique<af::convnet::ConvNetGenerator>(
        af::convnet::load_weights(weight_path))};
  });
}

af_status af_generator_convnet_random(uint64_t seed, int32_t label_count,
                                      int32_t hidden_channels, int32_t blocks,
                                      af_generator** out) {
  if (!out) return fail(AF_ERR_INVALID_ARG, "out is null");
  return guarded([&]() {
    *out = new af_generator{std::make_unique<af::convnet::ConvNetGenerator>(
        af::convnet::random_spec(seed, label_count, hidden_channels, blocks))};
  });
}

af_status af_generator_identity(int32_t label_count, af_generator** out) {
  if (!out) return fail(AF_ERR_INVALID_ARG, "out is null");
  return guarded([&]() {
    *out = new af_generator{
        std::make_unique<af::surrogate::IdentityGenerator>(label_count)};
  });
}

void af_generator_free(af_generator* gen) { delete gen; }

int32_t af_generator_label_count(const af_generator* gen) {
  return gen && gen->gen ? gen->gen->label_count() : 0;
}

af_status af_generator_forward(const af_generator* gen, const af_image* x,
                               int32_t label, af_image** out) {
  if (!gen || !gen->gen || !x) return fail(AF_ERR_BAD_HANDLE, "null handle");
  if (!out) return fail(AF_ERR_INVALID_ARG, "out is null");
  return guarded([&]() {
    *out = new af_image{gen->gen->forward(x->img, label)};
  });
}

af_status af_attack_config_create(af_attack_config** out) {
  if (!out) return fail(AF_ERR_INVALID_ARG, "out is null");
  return guarded([&]() { *out = new af_attack_config{}; });
}

void af_attack_config_free(af_attack_config* cfg) { delete cfg; }

af_status af_attack_config_set(af_attack_config* cfg, const char* key,
                               const char* value) {
  if (!cfg) return fail(AF_ERR_BAD_HANDLE, "null config handle");
  if (!key || !value) return fail(AF_ERR_INVALID_ARG, "null key or value");
  return guarded([&]() {
    std::string k = key, v = value;
    if (k == "epsilon") cfg->cfg.epsilon = std::stod(v);
    else if (k == "learning_rate") cfg->cfg.learning_rate = std::stod(v);
    else if (k == "iterations") cfg->cfg.iterations = std::stoi(v);
    else if (k == "objective") cfg->cfg.objective = af::attacks::objective_from_string(v);
    else if (k == "loss_norm") cfg->cfg.loss_norm = af::attacks::norm_from_string(v);
    else if (k == "seed") cfg->cfg.seed = std::stoull(v);
    else throw std::invalid_argument("unknown attack config key: " + k);
  });
}

af_status af_attack_run(const char* kind, const af_image* x,
                        const af_generator* gen, const af_attack_config* cfg,
                        af_image** x_adv, double* theta_linf) {
  if (!x || !gen || !gen->gen || !cfg)
    return fail(AF_ERR_BAD_HANDLE, "null handle");
  if (!kind || !x_adv) return fail(AF_ERR_INVALID_ARG, "null argument");
  return guarded([&]() {
    std::string k = kind;
    if (k == "antiforge") {
      auto r = af::attacks::antiforge_attack(x->img, *gen->gen, cfg->cfg);
      if (theta_linf)
        *theta_linf =
            std::max(af::max_abs(r.theta.theta_a.v), af::max_abs(r.theta.theta_b.v));
      *x_adv = new af_image{std::move(r.x_adv)};
    } else if (k == "pgd" || k == "cw") {
      auto r = k == "pgd" ? af::attacks::pgd_attack(x->img, *gen->gen, cfg->cfg)
                          : af::attacks::cw_attack(x->img, *gen->gen, cfg->cfg);
      if (theta_linf)
        *theta_linf = r.trace.theta_linf.empty() ? 0.0 : r.trace.theta_linf.back();
      *x_adv = new af_image{std::move(r.x_adv)};
    } else {
      throw std::invalid_argument("unknown attack kind: " + k);
    }
  });
}

af_status af_mse(const af_image* a, const af_image* b, double* out) {
  if (!a || !b) return fail(AF_ERR_BAD_HANDLE, "null image handle");
  if (!out) return fail(AF_ERR_INVALID_ARG, "out is null");
  return guarded([&]() { *out = af::metrics::mse(a->img, b->img); });
}

af_status af_psnr(const af_image* a, const af_image* b, double* out) {
  if (!a || !b) return fail(AF_ERR_BAD_HANDLE, "null image handle");
  if (!out) return fail(AF_ERR_INVALID_ARG, "out is null");
  return guarded([&]() { *out = af::metrics::psnr(a->img, b->img); });
}

af_status af_ssim(const af_image* a, const af_image* b, double* out) {
  if (!a || !b) return fail(AF_ERR_BAD_HANDLE, "null image handle");
  if (!out) return fail(AF_ERR_INVALID_ARG, "out is null");
  return guarded([&]() { *out = af::metrics::ssim(a->img, b->img); });
}

af_status af_l2_distortion(const af_image* a, const af_image* b, double* out) {
  if (!a || !b) return fail(AF_ERR_BAD_HANDLE, "null image handle");
  if (!out) return fail(AF_ERR_INVALID_ARG, "out is null");
  return guarded([&]() { *out = af::metrics::l2_distortion(a->img, b->img); });
}

af_status af_experiment_run(const char* kind, const char* config_path,
                            const char* out_dir, const uint64_t* seed_override) {
  if (!kind || !config_path) return fail(AF_ERR_INVALID_ARG, "null argument");
  af::config::ExperimentConfig cfg;
  try {
    cfg = af::config::ExperimentConfig::load(config_path);
  } catch (const std::exception& e) {
    return fail(AF_ERR_CONFIG, e.what());
  }
  return guarded([&]() {
    af::harness::RunOptions opt;
    if (out_dir) opt.out_dir = out_dir;
    if (seed_override) {
      opt.has_seed_override = true;
      opt.seed_override = *seed_override;
    }
    af::harness::run_experiment(kind, cfg, opt);
  });
}

af_status af_protect_files(const char* config_path, const char* const* inputs,
                           size_t input_count, const char* out_dir,
                           const uint64_t* seed_override, size_t* failed_count) {
  if (!config_path || !inputs) return fail(AF_ERR_INVALID_ARG, "null argument");
  af::config::ExperimentConfig cfg;
  try {
    cfg = af::config::ExperimentConfig::load(config_path);
  } catch (const std::exception& e) {
    return fail(AF_ERR_CONFIG, e.what());
  }
  return guarded([&]() {
    std::vector<std::string> paths(inputs, inputs + input_count);
    af::harness::RunOptions opt;
    if (out_dir) opt.out_dir = out_dir;
    if (seed_override) {
      opt.has_seed_override = true;
      opt.seed_override = *seed_override;
    }
    auto outcomes = af::harness::protect_files(cfg, paths, opt);
    size_t failed = 0;
    for (const auto& o : outcomes)
      if (!o.ok) ++failed;
    if (failed_count) *failed_count = failed;
  });
}

}  // extern "C"
