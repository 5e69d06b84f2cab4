#include "core/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "core/convnet.hpp"
#include "core/dataset.hpp"
#include "core/image_io.hpp"
#include "core/jpeg.hpp"
#include "core/plot.hpp"
#include "core/rng.hpp"
#include "core/transforms.hpp"

namespace af::harness {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Deterministic fan-out: worker i handles indices i, i+T, i+2T ... and
// results land in index order, so thread scheduling never changes output.
void parallel_for(int n, const std::function<void(int)>& fn) {
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (int i = t; i < n; i += threads) fn(i);
      } catch (...) {
        errors[static_cast<size_t>(t)] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

uint64_t effective_seed(const config::ExperimentConfig& cfg,
                        const RunOptions& opt) {
  return opt.has_seed_override ? opt.seed_override : cfg.seed;
}

std::string out_dir_for(const config::ExperimentConfig& cfg,
                        const RunOptions& opt) {
  return opt.out_dir.empty() ? cfg.out_dir : opt.out_dir;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory: " + dir);
}

void write_manifest(const std::string& dir, const std::string& experiment,
                    const config::ExperimentConfig& cfg, uint64_t seed) {
  json m;
  m["experiment"] = experiment;
  m["tool_version"] = version();
  m["jpeg_codec"] = jpeg::codec_id();
  m["config_hash"] = cfg.hash_hex();
  m["seed"] = seed;
  m["created_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count();
  io::write_text(dir + "/manifest.json", m.dump(2) + "\n");
}

struct PairMetrics {
  double l2, psnr, ssim;
};

PairMetrics eval_pair(const Image& y_clean, const Image& y_adv) {
  return {metrics::l2_distortion(y_clean, y_adv), metrics::psnr(y_clean, y_adv),
          metrics::ssim(y_clean, y_adv)};
}

metrics::MetricsReport aggregate(const std::vector<PairMetrics>& cells,
                                 double asr_threshold) {
  metrics::MetricsReport r;
  std::vector<double> dist;
  dist.reserve(cells.size());
  for (const auto& c : cells) {
    r.l2 += c.l2;
    r.psnr += c.psnr;
    r.ssim += c.ssim;
    dist.push_back(c.l2);
  }
  double n = static_cast<double>(cells.size());
  r.l2 /= n;
  r.psnr /= n;
  r.ssim /= n;
  r.mse = r.l2 * 127.5 * 127.5;  // same difference in 8-bit units
  r.asr = metrics::asr(dist, asr_threshold);
  return r;
}

Image run_method(const std::string& method, const Image& x,
                 const surrogate::ConditionalGenerator& model,
                 const attacks::AttackConfig& acfg) {
  if (method == "antiforge") return attacks::antiforge_attack(x, model, acfg).x_adv;
  if (method == "pgd") return attacks::pgd_attack(x, model, acfg).x_adv;
  if (method == "cw") return attacks::cw_attack(x, model, acfg).x_adv;
  throw std::invalid_argument("unknown attack method: " + method);
}

const std::vector<std::string> kMethods = {"pgd", "cw", "antiforge"};

std::string csv_escape(const std::string& s) { return s; }  // no commas emitted

void write_wide_csv(const std::string& path, const std::string& row_label,
                    const std::vector<std::string>& row_names,
                    const std::vector<std::string>& methods,
                    const std::map<std::string,
                                   std::map<std::string, metrics::MetricsReport>>& table) {
  std::stringstream ss;
  ss << row_label;
  for (const auto& m : methods)
    ss << "," << m << "_l2," << m << "_psnr," << m << "_ssim," << m << "_asr";
  ss << "\n";
  for (const auto& row : row_names) {
    ss << csv_escape(row);
    for (const auto& m : methods) {
      const auto& r = table.at(row).at(m);
      ss << "," << fmt(r.l2) << "," << fmt(r.psnr) << "," << fmt(r.ssim) << ","
         << fmt(r.asr);
    }
    ss << "\n";
  }
  io::write_text(path, ss.str());
}

void write_per_image_csv(const std::string& path,
                         const std::vector<PerImageRow>& rows,
                         const std::string& config_hash) {
  std::stringstream ss;
  ss << "cell,method,image,label,l2,psnr,ssim,config_hash\n";
  for (const auto& r : rows)
    ss << r.cell << "," << r.method << "," << r.image << "," << r.label << ","
       << fmt(r.l2) << "," << fmt(r.psnr) << "," << fmt(r.ssim) << ","
       << config_hash << "\n";
  io::write_text(path, ss.str());
}

// Attack every image with every method, then score each (image, label) pair
// through an evaluation transform. The evaluation reference is the clean
// image passed through the same transform, so a cell isolates how much of
// the perturbation survives.
struct CellSpec {
  std::string name;
  std::string method;
  attacks::AttackConfig (*unused)() = nullptr;
};

std::vector<PairMetrics> score_images(
    const surrogate::ConditionalGenerator& model,
    const std::vector<Image>& clean, const std::vector<Image>& adv,
    const transforms::TransformSpec& eval_transform,
    std::vector<PerImageRow>* rows, const std::string& cell,
    const std::string& method) {
  const int n = static_cast<int>(clean.size());
  const int labels = model.label_count();
  std::vector<std::vector<PairMetrics>> per_image(static_cast<size_t>(n));
  parallel_for(n, [&](int i) {
    Image tx = transforms::apply(clean[static_cast<size_t>(i)], eval_transform);
    Image ta = transforms::apply(adv[static_cast<size_t>(i)], eval_transform);
    std::vector<PairMetrics> out;
    out.reserve(static_cast<size_t>(labels));
    for (int l = 0; l < labels; ++l) {
      Image y_clean = model.forward(tx, l);
      Image y_adv = model.forward(ta, l);
      out.push_back(eval_pair(y_clean, y_adv));
    }
    per_image[static_cast<size_t>(i)] = std::move(out);
  });
  std::vector<PairMetrics> flat;
  flat.reserve(static_cast<size_t>(n) * labels);
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < labels; ++l) {
      const auto& m = per_image[static_cast<size_t>(i)][static_cast<size_t>(l)];
      flat.push_back(m);
      if (rows) rows->push_back({cell, method, i, l, m.l2, m.psnr, m.ssim});
    }
  return flat;
}

std::vector<Image> attack_all(const std::string& method,
                              const std::vector<Image>& images,
                              const surrogate::ConditionalGenerator& model,
                              const config::ExperimentConfig& cfg,
                              uint64_t master_seed,
                              const std::function<void(attacks::AttackConfig&)>&
                                  tweak = nullptr) {
  std::vector<Image> adv(images.size());
  parallel_for(static_cast<int>(images.size()), [&](int i) {
    attacks::AttackConfig acfg = attack_config_for(cfg, method, master_seed, i);
    if (tweak) tweak(acfg);
    adv[static_cast<size_t>(i)] = run_method(method, images[static_cast<size_t>(i)], model, acfg);
  });
  return adv;
}

}  // namespace

const char* version() { return "0.1.0"; }

std::unique_ptr<surrogate::ConditionalGenerator> make_generator(
    const config::SurrogateSpec& spec, uint64_t seed_offset) {
  uint64_t seed = spec.seed + seed_offset;
  if (spec.kind == "toy") {
    return std::make_unique<surrogate::ToyGenerator>(
        surrogate::ToyGeneratorParams::make(seed, spec.labels, spec.blur_sigma));
  }
  if (spec.kind == "identity") {
    return std::make_unique<surrogate::IdentityGenerator>(spec.labels);
  }
  if (spec.kind == "convnet") {
    convnet::ConvNetSpec net =
        spec.weights.empty()
            ? convnet::random_spec(seed, spec.labels, spec.hidden, spec.blocks)
            : convnet::load_weights(spec.weights);
    return std::make_unique<convnet::ConvNetGenerator>(
        std::move(net), "convnet-" + std::to_string(seed));
  }
  throw std::invalid_argument("unknown surrogate kind: " + spec.kind);
}

attacks::AttackConfig attack_config_for(const config::ExperimentConfig& cfg,
                                        const std::string& method,
                                        uint64_t master_seed, int image_index) {
  auto it = cfg.attacks.find(method);
  require(it != cfg.attacks.end(), "no attack settings for method: " + method);
  const config::AttackSettings& s = it->second;
  attacks::AttackConfig a;
  a.epsilon = s.epsilon;
  a.learning_rate = s.learning_rate;
  a.iterations = s.iterations;
  a.objective = attacks::objective_from_string(s.objective);
  a.loss_norm = attacks::norm_from_string(s.loss_norm);
  a.seed = substream_seed(master_seed, "attack." + method,
                          static_cast<uint64_t>(image_index));
  return a;
}

EffectivenessResult run_effectiveness(const config::ExperimentConfig& cfg,
                                      const RunOptions& opt) {
  cfg.validate();
  uint64_t seed = effective_seed(cfg, opt);
  auto model = make_generator(cfg.surrogate);
  auto images = dataset::load_dataset(cfg.data, seed, ValueRange::Symmetric);

  EffectivenessResult res;
  res.methods = kMethods;
  transforms::TransformSpec identity;
  for (const auto& method : kMethods) {
    auto adv = attack_all(method, images, *model, cfg, seed);
    auto cells = score_images(*model, images, adv, identity, &res.rows,
                              "no_defense", method);
    res.by_method[method] = aggregate(cells, cfg.asr_threshold);
  }

  if (opt.write_outputs) {
    std::string dir = out_dir_for(cfg, opt);
    ensure_dir(dir);
    std::map<std::string, std::map<std::string, metrics::MetricsReport>> table;
    table[model->name()] = res.by_method;
    write_wide_csv(dir + "/effectiveness.csv", "surrogate", {model->name()},
                   res.methods, table);
    write_per_image_csv(dir + "/effectiveness_per_image.csv", res.rows,
                        cfg.hash_hex());
    write_manifest(dir, "effectiveness", cfg, seed);
  }
  return res;
}

RobustnessResult run_robustness(const config::ExperimentConfig& cfg,
                                const RunOptions& opt) {
  cfg.validate();
  uint64_t seed = effective_seed(cfg, opt);
  auto model = make_generator(cfg.surrogate);
  auto images = dataset::load_dataset(cfg.data, seed, ValueRange::Symmetric);

  transforms::TransformSpec identity;
  transforms::TransformSpec jpeg_t = transforms::TransformSpec::parse(
      "jpeg:" + std::to_string(cfg.jpeg_quality));
  char blur_buf[32];
  std::snprintf(blur_buf, sizeof(blur_buf), "blur:%g", cfg.blur_sigma);
  transforms::TransformSpec blur_t = transforms::TransformSpec::parse(blur_buf);

  RobustnessResult res;
  res.methods = kMethods;
  res.defenses = {"no_defense", "jpeg", "jpeg_eps_high", "blur", "blur_eot"};

  // adversarial images per method for the three attack variants
  std::map<std::string, std::vector<Image>> base_adv, high_adv, eot_adv;
  for (const auto& method : kMethods) {
    base_adv[method] = attack_all(method, images, *model, cfg, seed);
    high_adv[method] = attack_all(method, images, *model, cfg, seed,
                                  [&](attacks::AttackConfig& a) {
                                    a.epsilon = cfg.high_epsilon;
                                  });
    eot_adv[method] = attack_all(method, images, *model, cfg, seed,
                                 [&](attacks::AttackConfig& a) {
                                   a = attacks::eot_wrap(std::move(a), cfg.eot_pool);
                                 });
  }

  auto fill_row = [&](const std::string& defense,
                      const std::map<std::string, std::vector<Image>>& adv,
                      const transforms::TransformSpec& t) {
    for (const auto& method : kMethods) {
      auto cells = score_images(*model, images, adv.at(method), t, &res.rows,
                                defense, method);
      res.table[defense][method] = aggregate(cells, cfg.asr_threshold);
    }
  };
  fill_row("no_defense", base_adv, identity);
  fill_row("jpeg", base_adv, jpeg_t);
  fill_row("jpeg_eps_high", high_adv, jpeg_t);
  fill_row("blur", base_adv, blur_t);
  fill_row("blur_eot", eot_adv, blur_t);

  if (opt.write_outputs) {
    std::string dir = out_dir_for(cfg, opt);
    ensure_dir(dir);
    write_wide_csv(dir + "/robustness.csv", "defense", res.defenses, res.methods,
                   res.table);
    write_per_image_csv(dir + "/robustness_per_image.csv", res.rows,
                        cfg.hash_hex());
    write_manifest(dir, "robustness", cfg, seed);
  }
  return res;
}

ReconstructionResult run_reconstruction(const config::ExperimentConfig& cfg,
                                        const RunOptions& opt) {
  cfg.validate();
  uint64_t seed = effective_seed(cfg, opt);
  auto model = make_generator(cfg.surrogate);
  auto images = dataset::load_dataset(cfg.data, seed, ValueRange::Symmetric);
  const int n = static_cast<int>(images.size());
  const int labels = model->label_count();

  ReconstructionResult res;
  res.metric_rows = {"ssim_i", "psnr_i", "mse_i", "ssim_o", "psnr_o", "mse_o"};
  res.columns = {"pgd", "antiforge", "pgd_reconstructed",
                 "antiforge_reconstructed"};

  auto psnr8 = [](double mse8) {
    return mse8 == 0.0 ? std::numeric_limits<double>::infinity()
                       : 10.0 * std::log10(255.0 * 255.0 / mse8);
  };

  for (const std::string method : {std::string("pgd"), std::string("antiforge")}) {
    auto adv = attack_all(method, images, *model, cfg, seed);
    for (bool reconstructed : {false, true}) {
      std::string column = reconstructed ? method + "_reconstructed" : method;
      std::vector<Image> inputs(adv.size());
      parallel_for(n, [&](int i) {
        inputs[static_cast<size_t>(i)] =
            reconstructed ? transforms::reconstruct(adv[static_cast<size_t>(i)])
                          : adv[static_cast<size_t>(i)];
      });
      // input side: deviation of the (possibly reconstructed) protected image
      // from the original upload
      double ssim_i = 0.0, mse_i = 0.0, psnr_i = 0.0;
      for (int i = 0; i < n; ++i) {
        const Image& x = images[static_cast<size_t>(i)];
        const Image& xa = inputs[static_cast<size_t>(i)];
        double m8 = metrics::mse_8bit(x, xa);
        ssim_i += metrics::ssim(x, xa);
        mse_i += m8;
        psnr_i += psnr8(m8);
      }
      // output side: deviation of the manipulated result from the clean fake
      std::vector<std::vector<PairMetrics>> outs(static_cast<size_t>(n));
      parallel_for(n, [&](int i) {
        std::vector<PairMetrics> per;
        for (int l = 0; l < labels; ++l) {
          Image y_clean = model->forward(images[static_cast<size_t>(i)], l);
          Image y_adv = model->forward(inputs[static_cast<size_t>(i)], l);
          double m8 = metrics::mse_8bit(y_clean, y_adv);
          per.push_back({m8, psnr8(m8), metrics::ssim(y_clean, y_adv)});
        }
        outs[static_cast<size_t>(i)] = std::move(per);
      });
      double ssim_o = 0.0, mse_o = 0.0, psnr_o = 0.0;
      for (int i = 0; i < n; ++i)
        for (int l = 0; l < labels; ++l) {
          const auto& m = outs[static_cast<size_t>(i)][static_cast<size_t>(l)];
          mse_o += m.l2;   // 8-bit mse stored in l2 slot
          psnr_o += m.psnr;
          ssim_o += m.ssim;
          res.rows.push_back({column, method, i, l, m.l2 / (127.5 * 127.5),
                              m.psnr, m.ssim});
        }
      double ni = static_cast<double>(n), no = static_cast<double>(n) * labels;
      res.table["ssim_i"][column] = ssim_i / ni;
      res.table["psnr_i"][column] = psnr_i / ni;
      res.table["mse_i"][column] = mse_i / ni;
      res.table["ssim_o"][column] = ssim_o / no;
      res.table["psnr_o"][column] = psnr_o / no;
      res.table["mse_o"][column] = mse_o / no;
    }
  }

  if (opt.write_outputs) {
    std::string dir = out_dir_for(cfg, opt);
    ensure_dir(dir);
    std::stringstream ss;
    ss << "metric";
    for (const auto& c : res.columns) ss << "," << c;
    ss << "\n";
    for (const auto& row : res.metric_rows) {
      ss << row;
      for (const auto& c : res.columns) ss << "," << fmt(res.table.at(row).at(c));
      ss << "\n";
    }
    io::write_text(dir + "/reconstruction.csv", ss.str());
    write_per_image_csv(dir + "/reconstruction_per_image.csv", res.rows,
                        cfg.hash_hex());
    write_manifest(dir, "reconstruction", cfg, seed);
  }
  return res;
}

TransferResult run_transfer(const config::ExperimentConfig& cfg,
                            const RunOptions& opt) {
  cfg.validate();
  uint64_t seed = effective_seed(cfg, opt);
  auto images = dataset::load_dataset(cfg.data, seed, ValueRange::Symmetric);
  const int n = static_cast<int>(images.size());

  // three surrogates with distinct weight seeds
  std::vector<std::unique_ptr<surrogate::ConditionalGenerator>> models;
  for (uint64_t k = 0; k < 3; ++k)
    models.push_back(make_generator(cfg.surrogate, k));

  TransferResult res;
  for (auto& m : models) res.surrogates.push_back(m->name());
  res.asr.assign(models.size(), std::vector<double>(models.size(), 0.0));

  for (size_t src = 0; src < models.size(); ++src) {
    auto adv = attack_all("antiforge", images, *models[src], cfg, seed);
    for (size_t dst = 0; dst < models.size(); ++dst) {
      const auto& target = *models[dst];
      const int labels = target.label_count();
      std::vector<std::vector<double>> dist(static_cast<size_t>(n));
      parallel_for(n, [&](int i) {
        std::vector<double> per;
        for (int l = 0; l < labels; ++l)
          per.push_back(metrics::l2_distortion(
              target.forward(images[static_cast<size_t>(i)], l),
              target.forward(adv[static_cast<size_t>(i)], l)));
        dist[static_cast<size_t>(i)] = std::move(per);
      });
      std::vector<double> flat;
      for (const auto& d : dist) flat.insert(flat.end(), d.begin(), d.end());
      res.asr[src][dst] = metrics::asr(flat, cfg.asr_threshold);
    }
  }

  if (opt.write_outputs) {
    std::string dir = out_dir_for(cfg, opt);
    ensure_dir(dir);
    std::stringstream ss;
    ss << "source";
    for (const auto& name : res.surrogates) ss << "," << name;
    ss << "\n";
    for (size_t i = 0; i < res.surrogates.size(); ++i) {
      ss << res.surrogates[i];
      for (size_t j = 0; j < res.surrogates.size(); ++j)
        ss << "," << (i == j ? std::string("-") : fmt(res.asr[i][j]));
      ss << "\n";
    }
    io::write_text(dir + "/transfer.csv", ss.str());
    write_manifest(dir, "transfer", cfg, seed);
  }
  return res;
}

ColorspaceResult run_colorspace(const config::ExperimentConfig& cfg,
                                const RunOptions& opt) {
  cfg.validate();
  uint64_t seed = effective_seed(cfg, opt);
  auto model = make_generator(cfg.surrogate);
  auto images = dataset::load_dataset(cfg.data, seed, ValueRange::Symmetric);
  const int n = static_cast<int>(images.size());
  const int labels = model->label_count();

  ColorspaceResult res;
  res.spaces = {"rgb", "lab", "hsv", "cmyk"};
  res.defenses = {"jpeg", "blur_1", "blur_2", "blur_3"};
  std::vector<transforms::TransformSpec> defense_t = {
      transforms::TransformSpec::parse("jpeg:" + std::to_string(cfg.jpeg_quality)),
      transforms::TransformSpec::parse("blur:1"),
      transforms::TransformSpec::parse("blur:2"),
      transforms::TransformSpec::parse("blur:3"),
  };

  for (const auto& space_name : res.spaces) {
    color::ColorSpace space = color::color_space_from_string(space_name);
    std::vector<Image> adv(images.size());
    parallel_for(n, [&](int i) {
      attacks::AttackConfig acfg = attack_config_for(cfg, "antiforge", seed, i);
      adv[static_cast<size_t>(i)] =
          attacks::channel_attack(images[static_cast<size_t>(i)], *model, acfg, space)
              .x_adv;
    });
    // Table-5 style: post-transform residual distortion
    for (size_t d = 0; d < res.defenses.size(); ++d) {
      std::vector<std::vector<double>> dist(static_cast<size_t>(n));
      parallel_for(n, [&](int i) {
        Image tx = transforms::apply(images[static_cast<size_t>(i)], defense_t[d]);
        Image ta = transforms::apply(adv[static_cast<size_t>(i)], defense_t[d]);
        std::vector<double> per;
        for (int l = 0; l < labels; ++l)
          per.push_back(metrics::l2_distortion(model->forward(tx, l),
                                               model->forward(ta, l)));
        dist[static_cast<size_t>(i)] = std::move(per);
      });
      double mean = 0.0;
      int total = 0;
      for (const auto& d2 : dist)
        for (double v : d2) {
          mean += v;
          ++total;
        }
      res.l2[res.defenses[d]][space_name] = mean / total;
    }
    // Table-6 style: AUC of LID scores separating clean from protected
    std::vector<std::vector<double>> clean_features, adv_features;
    for (int i = 0; i < n; ++i) {
      clean_features.push_back(metrics::lid_features(
          images[static_cast<size_t>(i)], cfg.lid_feature_side));
      adv_features.push_back(
          metrics::lid_features(adv[static_cast<size_t>(i)], cfg.lid_feature_side));
    }
    int k = std::min(cfg.lid_neighbors, n - 2);
    require(k >= 2, "dataset too small for LID scoring");
    std::vector<double> scores;
    std::vector<bool> is_adv;
    for (int i = 0; i < n; ++i) {
      // leave-one-out reference for clean queries
      std::vector<std::vector<double>> ref;
      for (int j = 0; j < n; ++j)
        if (j != i) ref.push_back(clean_features[static_cast<size_t>(j)]);
      scores.push_back(metrics::lid_estimate(clean_features[static_cast<size_t>(i)], ref, k));
      is_adv.push_back(false);
      scores.push_back(metrics::lid_estimate(adv_features[static_cast<size_t>(i)], ref, k));
      is_adv.push_back(true);
    }
    res.auc[space_name] = 100.0 * metrics::auc(scores, is_adv);
  }

  if (opt.write_outputs) {
    std::string dir = out_dir_for(cfg, opt);
    ensure_dir(dir);
    std::stringstream ss;
    ss << "defense";
    for (const auto& s : res.spaces) ss << "," << s;
    ss << "\n";
    for (const auto& d : res.defenses) {
      ss << d;
      for (const auto& s : res.spaces) ss << "," << fmt(res.l2.at(d).at(s));
      ss << "\n";
    }
    io::write_text(dir + "/colorspace_l2.csv", ss.str());
    std::stringstream sa;
    sa << "surrogate";
    for (const auto& s : res.spaces) sa << "," << s;
    sa << "\n" << model->name();
    for (const auto& s : res.spaces) sa << "," << fmt(res.auc.at(s));
    sa << "\n";
    io::write_text(dir + "/colorspace_auc.csv", sa.str());
    write_manifest(dir, "colorspace", cfg, seed);
  }
  return res;
}

AblateResult run_ablate(const config::ExperimentConfig& cfg,
                        const RunOptions& opt) {
  cfg.validate();
  uint64_t seed = effective_seed(cfg, opt);
  auto model = make_generator(cfg.surrogate);
  auto images = dataset::load_dataset(cfg.data, seed, ValueRange::Symmetric);
  const int n = static_cast<int>(images.size());
  const int labels = model->label_count();

  AblateResult res;
  res.epsilons = cfg.ablate_epsilons;
  for (double eps : res.epsilons) {
    auto adv = attack_all("antiforge", images, *model, cfg, seed,
                          [&](attacks::AttackConfig& a) { a.epsilon = eps; });
    std::vector<std::vector<double>> dist(static_cast<size_t>(n));
    parallel_for(n, [&](int i) {
      std::vector<double> per;
      for (int l = 0; l < labels; ++l)
        per.push_back(metrics::l2_distortion(
            model->forward(images[static_cast<size_t>(i)], l),
            model->forward(adv[static_cast<size_t>(i)], l)));
      dist[static_cast<size_t>(i)] = std::move(per);
    });
    double mean = 0.0;
    int total = 0;
    for (const auto& d : dist)
      for (double v : d) {
        mean += v;
        ++total;
      }
    res.mean_l2.push_back(mean / total);
  }

  if (opt.write_outputs) {
    std::string dir = out_dir_for(cfg, opt);
    ensure_dir(dir);
    std::stringstream ss;
    ss << "epsilon,mean_l2\n";
    for (size_t i = 0; i < res.epsilons.size(); ++i)
      ss << fmt(res.epsilons[i]) << "," << fmt(res.mean_l2[i]) << "\n";
    io::write_text(dir + "/ablate.csv", ss.str());
    io::write_png(plot::line_chart(res.epsilons, res.mean_l2),
                  dir + "/ablate.png");
    write_manifest(dir, "ablate", cfg, seed);
  }
  return res;
}

SpectraResult run_spectra(const config::ExperimentConfig& cfg,
                          const RunOptions& opt) {
  cfg.validate();
  uint64_t seed = effective_seed(cfg, opt);
  auto model = make_generator(cfg.surrogate);
  auto images = dataset::load_dataset(cfg.data, seed, ValueRange::Symmetric);
  const Image& x = images.front();

  attacks::AttackConfig acfg = attack_config_for(cfg, "antiforge", seed, 0);
  Image x_adv = attacks::antiforge_attack(x, *model, acfg).x_adv;
  Image fake_clean = model->forward(x, 0);
  Image fake_protected = model->forward(x_adv, 0);

  SpectraResult res;
  res.hf_ratio_fake_clean = metrics::high_freq_energy_ratio(fake_clean);
  res.hf_ratio_fake_protected = metrics::high_freq_energy_ratio(fake_protected);

  if (opt.write_outputs) {
    std::string dir = out_dir_for(cfg, opt);
    ensure_dir(dir);
    std::vector<Image> tiles = {
        x.to_range(ValueRange::Unit),
        fake_clean.to_range(ValueRange::Unit),
        fake_protected.to_range(ValueRange::Unit),
        plot::plane_to_image(metrics::spectrum(x)),
        plot::plane_to_image(metrics::spectrum(fake_clean)),
        plot::plane_to_image(metrics::spectrum(fake_protected)),
    };
    io::write_png(plot::compose_grid(tiles, 3), dir + "/spectra.png");
    std::stringstream ss;
    ss << "image,hf_ratio_fake_clean,hf_ratio_fake_protected\n";
    ss << "0," << fmt(res.hf_ratio_fake_clean) << ","
       << fmt(res.hf_ratio_fake_protected) << "\n";
    io::write_text(dir + "/spectra_stats.csv", ss.str());
    write_manifest(dir, "spectra", cfg, seed);
  }
  return res;
}

std::vector<ProtectOutcome> protect_files(const config::ExperimentConfig& cfg,
                                          const std::vector<std::string>& inputs,
                                          const RunOptions& opt) {
  cfg.validate();
  require(!inputs.empty(), "protect needs at least one input image");
  uint64_t seed = effective_seed(cfg, opt);
  std::string dir = out_dir_for(cfg, opt);
  ensure_dir(dir);
  auto model = make_generator(cfg.surrogate);

  std::vector<ProtectOutcome> outcomes(inputs.size());
  for (size_t i = 0; i < inputs.size(); ++i) {
    ProtectOutcome& out = outcomes[i];
    out.input = inputs[i];
    try {
      Image x01 = io::read_image(inputs[i], ValueRange::Unit);
      Image x = x01.to_range(ValueRange::Symmetric);
      attacks::AttackConfig acfg =
          attack_config_for(cfg, "antiforge", seed, static_cast<int>(i));
      attacks::AntiforgeResult r = attacks::antiforge_attack(x, *model, acfg);

      std::string stem = fs::path(inputs[i]).stem().string();
      out.output_png = dir + "/" + stem + "_protected.png";
      out.sidecar_json = dir + "/" + stem + "_protected.json";
      io::write_png(r.x_adv.to_range(ValueRange::Unit), out.output_png);

      double linf_a = max_abs(r.theta.theta_a.v);
      double linf_b = max_abs(r.theta.theta_b.v);
      double mean_abs = 0.0;
      for (double v : r.theta.theta_a.v) mean_abs += std::fabs(v);
      for (double v : r.theta.theta_b.v) mean_abs += std::fabs(v);
      mean_abs /= static_cast<double>(r.theta.theta_a.v.size() +
                                      r.theta.theta_b.v.size());
      long clamp_total = 0;
      for (long c : r.trace.clamp_counts) clamp_total += c;

      json side;
      side["input"] = inputs[i];
      side["output"] = out.output_png;
      side["epsilon"] = acfg.epsilon;
      side["iterations"] = acfg.iterations;
      side["theta_linf_a"] = linf_a;
      side["theta_linf_b"] = linf_b;
      side["theta_mean_abs"] = mean_abs;
      // realized deviation in the [0,1] pixel scale of the stored PNG
      side["realized_rgb_linf"] =
          max_abs_diff(x01, r.x_adv.to_range(ValueRange::Unit));
      side["gamut_clamp_events"] = clamp_total;
      side["final_output_distortion"] = r.trace.final_output_distortion;
      side["loss_trace"] = r.trace.loss;
      side["config_hash"] = cfg.hash_hex();
      side["seed"] = seed;
      io::write_text(out.sidecar_json, side.dump(2) + "\n");
      out.ok = true;
    } catch (const std::exception& e) {
      out.ok = false;
      out.error = e.what();
      std::fprintf(stderr, "protect: %s: %s\n", inputs[i].c_str(), e.what());
    }
  }
  write_manifest(dir, "protect", cfg, seed);
  return outcomes;
}

void run_experiment(const std::string& kind, const config::ExperimentConfig& cfg,
                    const RunOptions& opt) {
  if (kind == "effectiveness") {
    run_effectiveness(cfg, opt);
  } else if (kind == "robustness") {
    run_robustness(cfg, opt);
  } else if (kind == "reconstruction") {
    run_reconstruction(cfg, opt);
  } else if (kind == "transfer") {
    run_transfer(cfg, opt);
  } else if (kind == "colorspace") {
    run_colorspace(cfg, opt);
  } else if (kind == "ablate") {
    run_ablate(cfg, opt);
  } else if (kind == "spectra") {
    run_spectra(cfg, opt);
  } else {
    throw std::invalid_argument("unknown experiment kind: " + kind);
  }
}

}  // namespace af::harness
