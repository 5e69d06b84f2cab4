#include "core/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "core/rng.hpp"

namespace af::attacks {

namespace {

double output_distortion(const Image& a, const Image& b) {
  Image as = a.to_range(ValueRange::Symmetric);
  Image bs = b.to_range(ValueRange::Symmetric);
  double s = 0.0;
  for (size_t i = 0; i < as.size(); ++i) {
    double d = as.data()[i] - bs.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(as.size());
}

class Adam {
 public:
  Adam(size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& param, const std::vector<double>& grad) {
    ++t_;
    double c1 = 1.0 - std::pow(kBeta1, t_);
    double c2 = 1.0 - std::pow(kBeta2, t_);
    for (size_t i = 0; i < param.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      param[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  int t_ = 0;
  std::vector<double> m_, v_;
};

Image noise_target(int h, int w, ValueRange range, uint64_t seed) {
  auto rng = substream_rng(seed, "noise-objective");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> px(static_cast<size_t>(h) * w * 3);
  double mid = (range_lo(range) + range_hi(range)) * 0.5;
  double scale = range_width(range) * 0.25;
  for (double& v : px) v = mid + scale * normal(rng);
  return Image(h, w, range, std::move(px));  // clamped into range
}

struct Objective {
  Image target;
  LossNorm norm;
  bool negate;

  ObjectiveEval eval(const Image& y) const {
    require(y.height() == target.height() && y.width() == target.width(),
            "objective target dimensions differ");
    const double n = static_cast<double>(y.size());
    ObjectiveEval out;
    out.grad = Field(y.height(), y.width());
    double acc = 0.0;
    double s = negate ? -1.0 : 1.0;
    for (size_t i = 0; i < y.size(); ++i) {
      double d = y.data()[i] - target.data()[i];
      if (norm == LossNorm::L2) {
        acc += d * d;
        out.grad.v[i] = s * 2.0 * d / n;
      } else {
        acc += std::fabs(d);
        out.grad.v[i] = s * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / n;
      }
    }
    out.loss = s * acc / n;
    return out;
  }
};

Objective make_objective(ObjectiveMode mode, LossNorm norm, int h, int w,
                         ValueRange range, const Image* reference,
                         uint64_t seed) {
  switch (mode) {
    case ObjectiveMode::TowardZero:
      return Objective{Image(h, w, range, 0.0), norm, false};
    case ObjectiveMode::TowardOne:
      return Objective{Image(h, w, range, 1.0), norm, false};
    case ObjectiveMode::TowardNoise:
      return Objective{noise_target(h, w, range, seed), norm, false};
    case ObjectiveMode::AwayFromTranslation:
      if (!reference)
        throw std::invalid_argument(
            "away_from_translation objective requires a reference image");
      return Objective{*reference, norm, true};
  }
  throw std::invalid_argument("unknown objective mode");
}

std::vector<int> resolve_labels(const AttackConfig& cfg,
                                const surrogate::ConditionalGenerator& model) {
  std::vector<int> labels = cfg.labels;
  if (labels.empty()) {
    labels.resize(static_cast<size_t>(model.label_count()));
    for (int i = 0; i < model.label_count(); ++i) labels[static_cast<size_t>(i)] = i;
  }
  for (int l : labels)
    require(l >= 0 && l < model.label_count(), "label index out of range");
  return labels;
}

void check_finite_or_halt(double loss, const std::vector<double>& grad,
                          int iteration) {
  bool ok = std::isfinite(loss);
  if (ok) {
    double s = 0.0;
    for (double g : grad) s += g;
    ok = std::isfinite(s);
  }
  if (!ok)
    throw std::runtime_error("attack diverged: non-finite loss or gradient at iteration " +
                             std::to_string(iteration));
}

// Decomposition of the original image into fixed carrier channels plus the
// perturbable planes of one color space.
struct ParamState {
  color::ColorSpace space;
  ValueRange range;
  int h = 0, w = 0;
  Image x;              // original (RGB case applies theta directly to it)
  color::LabImage lab;  // raw Lab units
  color::HsvImage hsv;
  color::CmykImage cmyk;

  static ParamState make(const Image& img, color::ColorSpace cs) {
    ParamState st{cs, img.range(), img.height(), img.width(), img};
    switch (cs) {
      case color::ColorSpace::RGB: break;
      case color::ColorSpace::Lab: st.lab = color::rgb_to_lab(img); break;
      case color::ColorSpace::HSV: st.hsv = color::rgb_to_hsv(img); break;
      case color::ColorSpace::CMYK: st.cmyk = color::rgb_to_cmyk(img); break;
    }
    return st;
  }

  int plane_count() const {
    switch (space) {
      case color::ColorSpace::RGB: return 3;
      case color::ColorSpace::Lab: return 2;
      case color::ColorSpace::HSV: return 2;
      case color::ColorSpace::CMYK: return 3;
    }
    return 0;
  }

  Image compose(const std::vector<Plane>& theta, long* clamps) const {
    switch (space) {
      case color::ColorSpace::RGB: {
        std::vector<double> px(x.size());
        long n = 0;
        const double lo = range_lo(range), hi = range_hi(range);
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx)
            for (int c = 0; c < 3; ++c) {
              double v = x.at(y, xx, c) + theta[static_cast<size_t>(c)].at(y, xx);
              if (v < lo || v > hi) ++n;
              px[(static_cast<size_t>(y) * w + xx) * 3 + c] = std::clamp(v, lo, hi);
            }
        if (clamps) *clamps = n;
        return Image(h, w, range, std::move(px));
      }
      case color::ColorSpace::Lab: {
        color::LabImage shifted = lab;
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) {
            shifted.a.at(y, xx) += 128.0 * theta[0].at(y, xx);
            shifted.b.at(y, xx) += 128.0 * theta[1].at(y, xx);
          }
        return color::lab_to_rgb(shifted, range, clamps);
      }
      case color::ColorSpace::HSV: {
        color::HsvImage shifted = hsv;
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) {
            shifted.s.at(y, xx) += 0.5 * theta[0].at(y, xx);
            shifted.v.at(y, xx) += 0.5 * theta[1].at(y, xx);
          }
        if (clamps) *clamps = 0;
        return color::hsv_to_rgb(shifted, range);
      }
      case color::ColorSpace::CMYK: {
        color::CmykImage shifted = cmyk;
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) {
            shifted.c.at(y, xx) += 0.5 * theta[0].at(y, xx);
            shifted.m.at(y, xx) += 0.5 * theta[1].at(y, xx);
            shifted.y.at(y, xx) += 0.5 * theta[2].at(y, xx);
          }
        if (clamps) *clamps = 0;
        return color::cmyk_to_rgb(shifted, range);
      }
    }
    throw std::invalid_argument("unknown color space");
  }

  std::vector<Plane> vjp(const std::vector<Plane>& theta,
                         const Field& upstream) const {
    switch (space) {
      case color::ColorSpace::RGB: {
        std::vector<Plane> g(3, Plane(h, w));
        const double lo = range_lo(range), hi = range_hi(range);
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx)
            for (int c = 0; c < 3; ++c) {
              double v = x.at(y, xx, c) + theta[static_cast<size_t>(c)].at(y, xx);
              g[static_cast<size_t>(c)].at(y, xx) =
                  (v >= lo && v <= hi) ? upstream.at(y, xx, c) : 0.0;
            }
        return g;
      }
      case color::ColorSpace::Lab: {
        color::LabImage shifted = lab;
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) {
            shifted.a.at(y, xx) += 128.0 * theta[0].at(y, xx);
            shifted.b.at(y, xx) += 128.0 * theta[1].at(y, xx);
          }
        color::LabVjp v = color::lab_to_rgb_vjp(shifted, range, upstream);
        for (double& d : v.da.v) d *= 128.0;
        for (double& d : v.db.v) d *= 128.0;
        return {v.da, v.db};
      }
      case color::ColorSpace::HSV: {
        color::HsvImage shifted = hsv;
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) {
            shifted.s.at(y, xx) += 0.5 * theta[0].at(y, xx);
            shifted.v.at(y, xx) += 0.5 * theta[1].at(y, xx);
          }
        Plane ds, dv;
        color::hsv_to_rgb_vjp_sv(shifted, range, upstream, ds, dv);
        for (double& d : ds.v) d *= 0.5;
        for (double& d : dv.v) d *= 0.5;
        return {ds, dv};
      }
      case color::ColorSpace::CMYK: {
        color::CmykImage shifted = cmyk;
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) {
            shifted.c.at(y, xx) += 0.5 * theta[0].at(y, xx);
            shifted.m.at(y, xx) += 0.5 * theta[1].at(y, xx);
            shifted.y.at(y, xx) += 0.5 * theta[2].at(y, xx);
          }
        Plane dc, dm, dy;
        color::cmyk_to_rgb_vjp_cmy(shifted, range, upstream, dc, dm, dy);
        for (double& d : dc.v) d *= 0.5;
        for (double& d : dm.v) d *= 0.5;
        for (double& d : dy.v) d *= 0.5;
        return {dc, dm, dy};
      }
    }
    throw std::invalid_argument("unknown color space");
  }
};

}  // namespace

ObjectiveMode objective_from_string(const std::string& s) {
  if (s == "toward_zero") return ObjectiveMode::TowardZero;
  if (s == "toward_one") return ObjectiveMode::TowardOne;
  if (s == "toward_noise") return ObjectiveMode::TowardNoise;
  if (s == "away_from_translation") return ObjectiveMode::AwayFromTranslation;
  throw std::invalid_argument("unknown objective mode: " + s);
}

LossNorm norm_from_string(const std::string& s) {
  if (s == "l1" || s == "L1") return LossNorm::L1;
  if (s == "l2" || s == "L2") return LossNorm::L2;
  throw std::invalid_argument("unknown loss norm: " + s);
}

const char* to_string(ObjectiveMode m) {
  switch (m) {
    case ObjectiveMode::TowardZero: return "toward_zero";
    case ObjectiveMode::TowardOne: return "toward_one";
    case ObjectiveMode::TowardNoise: return "toward_noise";
    case ObjectiveMode::AwayFromTranslation: return "away_from_translation";
  }
  return "?";
}

const char* to_string(LossNorm n) { return n == LossNorm::L1 ? "l1" : "l2"; }

EotSampler::EotSampler(const std::vector<transforms::TransformSpec>& pool) {
  require(!pool.empty(), "EOT sampler needs at least one transform");
  for (const auto& spec : pool) {
    if (!spec.differentiable())
      throw std::invalid_argument("non-differentiable transform in EOT sampler: " +
                                  spec.str());
    switch (spec.kind) {
      case transforms::TransformSpec::Kind::Identity:
        sigmas_.push_back(0.0);
        break;
      case transforms::TransformSpec::Kind::GaussianBlur:
        sigmas_.push_back(spec.sigma);
        break;
      default:
        throw std::invalid_argument(
            "EOT sampler supports identity and Gaussian blur entries only");
    }
  }
}

double EotSampler::sigma_at(uint64_t attack_seed, int iteration) const {
  if (sigmas_.size() == 1) return sigmas_[0];
  auto rng = substream_rng(attack_seed, "eot-sampler",
                           static_cast<uint64_t>(iteration));
  std::uniform_int_distribution<size_t> pick(0, sigmas_.size() - 1);
  return sigmas_[pick(rng)];
}

void AttackConfig::validate() const {
  // epsilon 0 is allowed and yields the identity perturbation
  require(epsilon >= 0.0, "epsilon must be non-negative");
  require(learning_rate > 0.0, "learning rate must be positive");
  require(iterations >= 0, "iterations must be non-negative");
}

AttackConfig eot_wrap(AttackConfig cfg,
                      const std::vector<transforms::TransformSpec>& pool) {
  cfg.eot = std::make_shared<EotSampler>(pool);
  return cfg;
}

ObjectiveEval objective_loss(const Image& y, ObjectiveMode mode, LossNorm norm,
                             const Image* reference, uint64_t seed) {
  Objective obj = make_objective(mode, norm, y.height(), y.width(), y.range(),
                                 reference, seed);
  return obj.eval(y);
}

namespace {

// Shared optimization loop over a channel parameterization.
ChannelAttackResult run_channel_attack(
    const Image& x, const surrogate::ConditionalGenerator& model,
    const AttackConfig& cfg, color::ColorSpace space) {
  cfg.validate();
  ParamState st = ParamState::make(x, space);
  const int planes = st.plane_count();
  const size_t plane_size = static_cast<size_t>(st.h) * st.w;
  std::vector<double> theta(planes * plane_size, 0.0);
  std::vector<double> grad(theta.size(), 0.0);
  Adam adam(theta.size(), cfg.learning_rate);
  std::vector<int> labels = resolve_labels(cfg, model);

  auto theta_planes = [&](const std::vector<double>& flat) {
    std::vector<Plane> out;
    out.reserve(static_cast<size_t>(planes));
    for (int p = 0; p < planes; ++p) {
      Plane pl(st.h, st.w);
      std::copy(flat.begin() + p * plane_size, flat.begin() + (p + 1) * plane_size,
                pl.v.begin());
      out.push_back(std::move(pl));
    }
    return out;
  };

  // Clean translations per label for the away objective, computed lazily.
  std::map<int, Image> references;
  auto reference_for = [&](int label) -> const Image* {
    if (cfg.objective != ObjectiveMode::AwayFromTranslation) return nullptr;
    if (cfg.reference) return &*cfg.reference;
    auto it = references.find(label);
    if (it == references.end())
      it = references.emplace(label, model.forward(x, label)).first;
    return &it->second;
  };

  AttackTrace trace;
  trace.loss.reserve(static_cast<size_t>(cfg.iterations));
  Image noise = cfg.objective == ObjectiveMode::TowardNoise
                    ? noise_target(st.h, st.w, ValueRange::Symmetric, cfg.seed)
                    : Image();

  for (int it = 0; it < cfg.iterations; ++it) {
    int label = labels[static_cast<size_t>(it) % labels.size()];
    auto planes_now = theta_planes(theta);
    long clamps = 0;
    Image x_adv = st.compose(planes_now, &clamps);

    double sigma = cfg.eot ? cfg.eot->sigma_at(cfg.seed, it) : 0.0;
    Image x_in = sigma > 0.0 ? transforms::gaussian_blur(x_adv, sigma) : x_adv;

    Image y = model.forward(x_in, label);
    Objective obj =
        cfg.objective == ObjectiveMode::TowardNoise
            ? Objective{noise, cfg.loss_norm, false}
            : make_objective(cfg.objective, cfg.loss_norm, y.height(), y.width(),
                             y.range(), reference_for(label), cfg.seed);
    ObjectiveEval ev = obj.eval(y);

    Field g_model = model.input_vjp(x_in, label, ev.grad);
    if (sigma > 0.0) g_model = transforms::gaussian_blur_adjoint(g_model, sigma);
    auto g_planes = st.vjp(planes_now, g_model);
    for (int p = 0; p < planes; ++p)
      std::copy(g_planes[static_cast<size_t>(p)].v.begin(),
                g_planes[static_cast<size_t>(p)].v.end(),
                grad.begin() + p * plane_size);

    check_finite_or_halt(ev.loss, grad, it);
    adam.step(theta, grad);
    for (double& v : theta) v = std::clamp(v, -cfg.epsilon, cfg.epsilon);

    trace.loss.push_back(ev.loss);
    trace.clamp_counts.push_back(clamps);
    trace.theta_linf.push_back(max_abs(theta));
  }

  ChannelAttackResult result;
  result.theta = theta_planes(theta);
  long final_clamps = 0;
  result.x_adv = st.compose(result.theta, &final_clamps);
  int label0 = labels[0];
  trace.final_output_distortion = output_distortion(
      model.forward(x, label0), model.forward(result.x_adv, label0));
  result.trace = std::move(trace);
  return result;
}

}  // namespace

AntiforgeResult antiforge_attack(const Image& x,
                                 const surrogate::ConditionalGenerator& model,
                                 const AttackConfig& cfg) {
  ChannelAttackResult r = run_channel_attack(x, model, cfg, color::ColorSpace::Lab);
  AntiforgeResult out;
  out.x_adv = std::move(r.x_adv);
  out.theta = Perturbation{std::move(r.theta[0]), std::move(r.theta[1])};
  out.trace = std::move(r.trace);
  return out;
}

ChannelAttackResult channel_attack(const Image& x,
                                   const surrogate::ConditionalGenerator& model,
                                   const AttackConfig& cfg,
                                   color::ColorSpace space) {
  return run_channel_attack(x, model, cfg, space);
}

namespace {

// PGD and C&W share the RGB perturbation loop; `sign_step` selects PGD.
RgbAttackResult run_rgb_attack(const Image& x,
                               const surrogate::ConditionalGenerator& model,
                               const AttackConfig& cfg, bool sign_step) {
  cfg.validate();
  const int h = x.height(), w = x.width();
  const double lo = range_lo(x.range()), hi = range_hi(x.range());
  std::vector<double> delta(x.size(), 0.0);
  std::vector<double> grad(x.size(), 0.0);
  Adam adam(delta.size(), cfg.learning_rate);
  std::vector<int> labels = resolve_labels(cfg, model);
  const double alpha =
      cfg.iterations > 0 ? cfg.epsilon / static_cast<double>(cfg.iterations) : 0.0;

  std::map<int, Image> references;
  auto reference_for = [&](int label) -> const Image* {
    if (cfg.objective != ObjectiveMode::AwayFromTranslation) return nullptr;
    if (cfg.reference) return &*cfg.reference;
    auto it = references.find(label);
    if (it == references.end())
      it = references.emplace(label, model.forward(x, label)).first;
    return &it->second;
  };

  auto compose = [&](long* clamps) {
    std::vector<double> px(x.size());
    long n = 0;
    for (size_t i = 0; i < x.size(); ++i) {
      double v = x.data()[i] + delta[i];
      if (v < lo || v > hi) ++n;
      px[i] = std::clamp(v, lo, hi);
    }
    if (clamps) *clamps = n;
    return Image(h, w, x.range(), std::move(px));
  };

  Image noise = cfg.objective == ObjectiveMode::TowardNoise
                    ? noise_target(h, w, ValueRange::Symmetric, cfg.seed)
                    : Image();
  AttackTrace trace;
  for (int it = 0; it < cfg.iterations; ++it) {
    int label = labels[static_cast<size_t>(it) % labels.size()];
    long clamps = 0;
    Image x_t = compose(&clamps);
    double sigma = cfg.eot ? cfg.eot->sigma_at(cfg.seed, it) : 0.0;
    Image x_in = sigma > 0.0 ? transforms::gaussian_blur(x_t, sigma) : x_t;

    Image y = model.forward(x_in, label);
    Objective obj =
        cfg.objective == ObjectiveMode::TowardNoise
            ? Objective{noise, cfg.loss_norm, false}
            : make_objective(cfg.objective, cfg.loss_norm, y.height(), y.width(),
                             y.range(), reference_for(label), cfg.seed);
    ObjectiveEval ev = obj.eval(y);

    Field g_model = model.input_vjp(x_in, label, ev.grad);
    if (sigma > 0.0) g_model = transforms::gaussian_blur_adjoint(g_model, sigma);
    // gradient passes through the range clamp only inside the range
    for (size_t i = 0; i < grad.size(); ++i) {
      double v = x.data()[i] + delta[i];
      grad[i] = (v >= lo && v <= hi) ? g_model.v[i] : 0.0;
    }
    check_finite_or_halt(ev.loss, grad, it);

    if (sign_step) {
      for (size_t i = 0; i < delta.size(); ++i) {
        double s = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
        delta[i] -= alpha * s;  // descend the shared objective
      }
    } else {
      adam.step(delta, grad);
    }
    for (double& v : delta) v = std::clamp(v, -cfg.epsilon, cfg.epsilon);

    trace.loss.push_back(ev.loss);
    trace.clamp_counts.push_back(clamps);
    trace.theta_linf.push_back(max_abs(delta));
  }

  RgbAttackResult result;
  long final_clamps = 0;
  result.x_adv = compose(&final_clamps);
  int label0 = labels[0];
  trace.final_output_distortion = output_distortion(
      model.forward(x, label0), model.forward(result.x_adv, label0));
  result.trace = std::move(trace);
  return result;
}

}  // namespace

RgbAttackResult pgd_attack(const Image& x,
                           const surrogate::ConditionalGenerator& model,
                           const AttackConfig& cfg) {
  return run_rgb_attack(x, model, cfg, true);
}

RgbAttackResult cw_attack(const Image& x,
                          const surrogate::ConditionalGenerator& model,
                          const AttackConfig& cfg) {
  return run_rgb_attack(x, model, cfg, false);
}

}  // namespace af::attacks
