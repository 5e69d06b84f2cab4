#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/attacks.hpp"
#include "core/color.hpp"
#include "core/dataset.hpp"
#include "core/harness.hpp"
#include "core/image_io.hpp"
#include "core/metrics.hpp"

using namespace af;
using namespace af::harness;
namespace fs = std::filesystem;

namespace {

// Small desk configuration so the harness paths stay fast in unit tests.
config::ExperimentConfig small_config() {
  return config::ExperimentConfig::from_text(R"(
seed = 21
[dataset]
count = 4
width = 48
height = 48
[surrogate]
kind = toy
labels = 3
seed = 5
[attack.antiforge]
iterations = 120
learning_rate = 5e-4
[attack.pgd]
iterations = 10
[attack.cw]
iterations = 120
learning_rate = 5e-4
[transforms]
blur_sigma = 2
eot_pool = blur:1, blur:2
ablate_epsilons = 0.01, 0.05
)");
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

RunOptions quiet() {
  RunOptions opt;
  opt.write_outputs = false;
  return opt;
}

}  // namespace

TEST_CASE("synthetic dataset is deterministic and in gamut") {
  auto a = dataset::load_dataset({"synthetic", 3, 32, 32}, 9);
  auto b = dataset::load_dataset({"synthetic", 3, 32, 32}, 9);
  auto c = dataset::load_dataset({"synthetic", 3, 32, 32}, 10);
  REQUIRE(a.size() == 3);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(max_abs_diff(a[i], b[i]) == 0.0);
    CHECK(a[i].clamp_events() == 0);
  }
  CHECK(max_abs_diff(a[0], c[0]) > 0.0);
}

TEST_CASE("generator factory covers all kinds") {
  config::SurrogateSpec toy{"toy", 4, 1.0, 3, "", 8, 2};
  CHECK(make_generator(toy)->label_count() == 4);
  config::SurrogateSpec id{"identity", 3, 1.0, 3, "", 8, 2};
  CHECK(make_generator(id)->name() == "identity");
  config::SurrogateSpec net{"convnet", 2, 1.0, 3, "", 4, 1};
  CHECK(make_generator(net)->label_count() == 2);
  // seed offset produces distinct weights
  auto g1 = make_generator(toy, 0);
  auto g2 = make_generator(toy, 1);
  CHECK(g1->name() != g2->name());
}

TEST_CASE("effectiveness run produces full reports and identity calibration") {
  config::ExperimentConfig cfg = small_config();
  EffectivenessResult res = run_effectiveness(cfg, quiet());
  REQUIRE(res.methods.size() == 3);
  for (const auto& m : res.methods) {
    const auto& r = res.by_method.at(m);
    CHECK(r.l2 > 0.0);
    CHECK(r.ssim < 1.0);
    CHECK(r.asr >= 0.0);
  }
  // rows: methods x images x labels
  CHECK(res.rows.size() == 3u * 4u * 3u);

  // identity surrogate: output distortion equals input perturbation energy
  config::ExperimentConfig idcfg = small_config();
  idcfg.surrogate.kind = "identity";
  EffectivenessResult idres = run_effectiveness(idcfg, quiet());
  auto images = dataset::load_dataset(idcfg.data, idcfg.seed, ValueRange::Symmetric);
  auto gen = make_generator(idcfg.surrogate);
  for (const auto& method : idres.methods) {
    double expected = 0.0;
    int count = 0;
    for (int i = 0; i < idcfg.data.count; ++i) {
      attacks::AttackConfig acfg = attack_config_for(idcfg, method, idcfg.seed, i);
      Image adv = method == "antiforge"
                      ? attacks::antiforge_attack(images[static_cast<size_t>(i)], *gen, acfg).x_adv
                      : (method == "pgd"
                             ? attacks::pgd_attack(images[static_cast<size_t>(i)], *gen, acfg).x_adv
                             : attacks::cw_attack(images[static_cast<size_t>(i)], *gen, acfg).x_adv);
      expected += metrics::l2_distortion(images[static_cast<size_t>(i)], adv);
      ++count;
    }
    expected /= count;
    CHECK(idres.by_method.at(method).l2 == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("robustness table directions at desk scale") {
  config::ExperimentConfig cfg = small_config();
  RobustnessResult res = run_robustness(cfg, quiet());
  REQUIRE(res.defenses.size() == 5);

  EffectivenessResult eff = run_effectiveness(cfg, quiet());
  for (const auto& m : res.methods) {
    // no-defense row equals the effectiveness values under the same seed
    CHECK(res.table.at("no_defense").at(m).l2 ==
          doctest::Approx(eff.by_method.at(m).l2).epsilon(1e-12));
    // blur collapses the distortion
    CHECK(res.table.at("blur").at(m).l2 < res.table.at("no_defense").at(m).l2);
  }
  // EOT-augmented antiforge survives blur better than the plain attack
  CHECK(res.table.at("blur_eot").at("antiforge").l2 >
        res.table.at("blur").at("antiforge").l2);
}

TEST_CASE("reconstruction table shape and consistency with effectiveness") {
  config::ExperimentConfig cfg = small_config();
  ReconstructionResult res = run_reconstruction(cfg, quiet());
  REQUIRE(res.metric_rows.size() == 6);
  REQUIRE(res.columns.size() == 4);
  for (const auto& row : res.metric_rows)
    for (const auto& col : res.columns) CHECK(res.table.at(row).count(col) == 1);

  EffectivenessResult eff = run_effectiveness(cfg, quiet());
  for (const std::string m : {std::string("pgd"), std::string("antiforge")}) {
    // same attacks, so the non-reconstructed output rows match effectiveness
    CHECK(res.table.at("ssim_o").at(m) ==
          doctest::Approx(eff.by_method.at(m).ssim).epsilon(1e-9));
    CHECK(res.table.at("psnr_o").at(m) ==
          doctest::Approx(eff.by_method.at(m).psnr).epsilon(1e-9));
    CHECK(res.table.at("mse_o").at(m) ==
          doctest::Approx(eff.by_method.at(m).l2 * 127.5 * 127.5).epsilon(1e-6));
    // reconstruction adds input-side distortion
    CHECK(res.table.at("mse_i").at(m + "_reconstructed") >
          res.table.at("mse_i").at(m));
  }
}

TEST_CASE("transfer matrix has dominant diagonal and identical-model row") {
  config::ExperimentConfig cfg = small_config();
  TransferResult res = run_transfer(cfg, quiet());
  REQUIRE(res.surrogates.size() == 3);
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = 0; j < 3; ++j) {
      CHECK(res.asr[i][j] >= 0.0);
      CHECK(res.asr[i][j] <= 100.0);
      if (i != j) CHECK(res.asr[i][j] <= res.asr[i][i] + 1e-12);
    }
}

TEST_CASE("colorspace tables cover all spaces and defenses") {
  config::ExperimentConfig cfg = small_config();
  cfg.data.count = 6;  // LID scoring needs a few more reference points
  cfg.lid_neighbors = 3;
  cfg.attacks.at("antiforge").iterations = 60;
  ColorspaceResult res = run_colorspace(cfg, quiet());
  REQUIRE(res.spaces.size() == 4);
  REQUIRE(res.defenses.size() == 4);
  for (const auto& d : res.defenses)
    for (const auto& s : res.spaces) {
      CHECK(res.l2.at(d).at(s) >= 0.0);
    }
  for (const auto& s : res.spaces) {
    CHECK(res.auc.at(s) >= 0.0);
    CHECK(res.auc.at(s) <= 100.0);
  }
  // more blur, less surviving distortion
  for (const auto& s : res.spaces)
    CHECK(res.l2.at("blur_3").at(s) <= res.l2.at("blur_1").at(s) + 1e-9);
}

TEST_CASE("ablation sweep is monotone at desk scale") {
  config::ExperimentConfig cfg = small_config();
  AblateResult res = run_ablate(cfg, quiet());
  REQUIRE(res.epsilons.size() == 2);
  CHECK(res.mean_l2[1] >= res.mean_l2[0] * 0.95);
  CHECK(res.mean_l2[0] > 0.0);
}

TEST_CASE("spectra statistics flag the disrupted output") {
  config::ExperimentConfig cfg = small_config();
  SpectraResult res = run_spectra(cfg, quiet());
  CHECK(res.hf_ratio_fake_protected > res.hf_ratio_fake_clean);
}

TEST_CASE("experiment outputs are byte-identical across reruns") {
  config::ExperimentConfig cfg = small_config();
  cfg.data.count = 2;
  cfg.attacks.at("antiforge").iterations = 40;
  cfg.attacks.at("cw").iterations = 40;

  TempDir d1("af_rerun_1"), d2("af_rerun_2");
  RunOptions o1;
  o1.out_dir = d1.str();
  RunOptions o2;
  o2.out_dir = d2.str();
  run_effectiveness(cfg, o1);
  run_effectiveness(cfg, o2);
  CHECK(slurp(d1.str() + "/effectiveness.csv") ==
        slurp(d2.str() + "/effectiveness.csv"));
  CHECK(slurp(d1.str() + "/effectiveness_per_image.csv") ==
        slurp(d2.str() + "/effectiveness_per_image.csv"));

  // fixed header schema
  std::string head = slurp(d1.str() + "/effectiveness.csv");
  CHECK(head.rfind("surrogate,pgd_l2,pgd_psnr,pgd_ssim,pgd_asr,cw_l2,", 0) == 0);
  CHECK(fs::exists(d1.path / "manifest.json"));
}

TEST_CASE("protect writes deterministic PNGs and sidecars") {
  config::ExperimentConfig cfg = small_config();
  cfg.attacks.at("antiforge").iterations = 50;
  TempDir in("af_protect_in"), out1("af_protect_out1"), out2("af_protect_out2");

  // two readable inputs and one corrupt file
  Image img0 = dataset::synthetic_image(3, 0, 48, 48);
  Image img1 = dataset::synthetic_image(3, 1, 48, 48);
  io::write_png(img0, in.str() + "/a.png");
  io::write_png(img1, in.str() + "/b.png");
  io::write_text(in.str() + "/broken.png", "not a png");

  RunOptions o1;
  o1.out_dir = out1.str();
  auto outcomes = protect_files(
      cfg, {in.str() + "/a.png", in.str() + "/broken.png", in.str() + "/b.png"},
      o1);
  REQUIRE(outcomes.size() == 3);
  CHECK(outcomes[0].ok);
  CHECK_FALSE(outcomes[1].ok);  // bad file reported, batch continued
  CHECK(outcomes[2].ok);
  CHECK(fs::exists(outcomes[0].output_png));
  CHECK(fs::exists(outcomes[0].sidecar_json));

  std::string sidecar = slurp(outcomes[0].sidecar_json);
  CHECK(sidecar.find("theta_linf_a") != std::string::npos);
  CHECK(sidecar.find("realized_rgb_linf") != std::string::npos);

  RunOptions o2;
  o2.out_dir = out2.str();
  auto rerun = protect_files(cfg, {in.str() + "/a.png"}, o2);
  REQUIRE(rerun[0].ok);
  CHECK(io::read_file(outcomes[0].output_png) ==
        io::read_file(rerun[0].output_png));
}

TEST_CASE("protect with epsilon zero reproduces the color round trip") {
  config::ExperimentConfig cfg = small_config();
  cfg.attacks.at("antiforge").epsilon = 0.0;
  cfg.attacks.at("antiforge").iterations = 5;
  TempDir in("af_eps0_in"), out("af_eps0_out");
  Image img = dataset::synthetic_image(4, 0, 32, 32);
  io::write_png(img, in.str() + "/x.png");

  RunOptions o;
  o.out_dir = out.str();
  auto outcomes = protect_files(cfg, {in.str() + "/x.png"}, o);
  REQUIRE(outcomes[0].ok);
  Image produced = io::read_image(outcomes[0].output_png);
  Image loaded = io::read_image(in.str() + "/x.png");
  Image roundtrip =
      color::lab_to_rgb(color::rgb_to_lab(loaded.to_range(ValueRange::Symmetric)),
                        ValueRange::Symmetric)
          .to_range(ValueRange::Unit);
  CHECK(max_abs_diff(produced, roundtrip) <= 0.5 / 255.0 + 1e-9);
}

TEST_CASE("png io round trip") {
  Image img = dataset::synthetic_image(8, 0, 24, 36);
  auto bytes = io::encode_png(img);
  Image back = io::decode_png(bytes);
  // 8-bit quantization only
  CHECK(max_abs_diff(img, back) <= 0.5 / 255.0 + 1e-9);
  CHECK(back.height() == 24);
  CHECK(back.width() == 36);
}
