// Exercises the shared-library surface through the public C header only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "antiforgery.h"

namespace fs = std::filesystem;

namespace {

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

void write_config(const std::string& path) {
  std::ofstream f(path);
  f << "seed = 11\n"
       "[dataset]\n"
       "count = 2\nwidth = 32\nheight = 32\n"
       "[surrogate]\nkind = toy\nlabels = 2\nseed = 4\n"
       "[attack.antiforge]\niterations = 30\nlearning_rate = 1e-3\n"
       "[attack.pgd]\niterations = 5\n"
       "[attack.cw]\niterations = 30\nlearning_rate = 1e-3\n"
       "[transforms]\nablate_epsilons = 0.01, 0.05\n";
}

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::strlen(af_version()) > 0);
  CHECK(std::string(af_status_name(AF_OK)) == "ok");
  CHECK(std::string(af_status_name(AF_ERR_CONFIG)) == "config error");
}

TEST_CASE("image lifecycle through opaque handles") {
  af_image* img = nullptr;
  REQUIRE(af_image_create(4, 5, AF_RANGE_UNIT, &img) == AF_OK);
  CHECK(af_image_height(img) == 4);
  CHECK(af_image_width(img) == 5);
  CHECK(af_image_range(img) == AF_RANGE_UNIT);

  std::vector<double> px(4 * 5 * 3, 0.25);
  af_image* img2 = nullptr;
  REQUIRE(af_image_from_pixels(4, 5, AF_RANGE_UNIT, px.data(), &img2) == AF_OK);
  std::vector<double> out(4 * 5 * 3, 0.0);
  REQUIRE(af_image_copy_pixels(img2, out.data(), out.size()) == AF_OK);
  CHECK(out[0] == 0.25);
  CHECK(af_image_copy_pixels(img2, out.data(), 3) == AF_ERR_BUFFER_TOO_SMALL);

  af_image* clone = nullptr;
  REQUIRE(af_image_clone(img2, &clone) == AF_OK);
  double m = -1.0;
  REQUIRE(af_mse(img2, clone, &m) == AF_OK);
  CHECK(m == 0.0);

  af_image_free(img);
  af_image_free(img2);
  af_image_free(clone);
}

TEST_CASE("error reporting carries a message") {
  af_image* img = nullptr;
  CHECK(af_image_create(0, 5, AF_RANGE_UNIT, &img) == AF_ERR_INVALID_ARG);
  CHECK(std::strlen(af_last_error()) > 0);
  CHECK(af_image_read("/no/such/file.png", AF_RANGE_UNIT, &img) == AF_ERR_IO);
}

TEST_CASE("lab conversion round trip over the C boundary") {
  const int h = 3, w = 4, n = h * w;
  std::vector<double> px(static_cast<size_t>(n) * 3);
  for (size_t i = 0; i < px.size(); ++i) px[i] = 0.1 + 0.05 * (i % 13);
  af_image* img = nullptr;
  REQUIRE(af_image_from_pixels(h, w, AF_RANGE_UNIT, px.data(), &img) == AF_OK);

  std::vector<double> L(n), a(n), b(n);
  REQUIRE(af_rgb_to_lab(img, L.data(), a.data(), b.data(), L.size()) == AF_OK);
  CHECK(L[0] > 0.0);

  af_image* back = nullptr;
  int64_t clamps = -1;
  REQUIRE(af_lab_to_rgb(h, w, L.data(), a.data(), b.data(), AF_RANGE_UNIT,
                        &clamps, &back) == AF_OK);
  CHECK(clamps == 0);
  std::vector<double> out(px.size());
  REQUIRE(af_image_copy_pixels(back, out.data(), out.size()) == AF_OK);
  for (size_t i = 0; i < px.size(); ++i)
    CHECK(out[i] == doctest::Approx(px[i]).epsilon(1e-4));
  af_image_free(img);
  af_image_free(back);
}

TEST_CASE("generator and attack through the C API") {
  af_generator* gen = nullptr;
  REQUIRE(af_generator_toy(7, 3, 1.0, &gen) == AF_OK);
  CHECK(af_generator_label_count(gen) == 3);

  const int side = 24;
  std::vector<double> px(static_cast<size_t>(side) * side * 3);
  for (size_t i = 0; i < px.size(); ++i)
    px[i] = 0.6 * std::sin(static_cast<double>(i) * 0.37);
  af_image* x = nullptr;
  REQUIRE(af_image_from_pixels(side, side, AF_RANGE_SYMMETRIC, px.data(), &x) ==
          AF_OK);

  af_image* y = nullptr;
  REQUIRE(af_generator_forward(gen, x, 1, &y) == AF_OK);
  CHECK(af_generator_forward(gen, x, 9, &y) == AF_ERR_INVALID_ARG);

  af_attack_config* cfg = nullptr;
  REQUIRE(af_attack_config_create(&cfg) == AF_OK);
  REQUIRE(af_attack_config_set(cfg, "iterations", "25") == AF_OK);
  REQUIRE(af_attack_config_set(cfg, "learning_rate", "1e-3") == AF_OK);
  REQUIRE(af_attack_config_set(cfg, "epsilon", "0.05") == AF_OK);
  CHECK(af_attack_config_set(cfg, "bogus", "1") == AF_ERR_INVALID_ARG);

  af_image* adv = nullptr;
  double linf = -1.0;
  REQUIRE(af_attack_run("antiforge", x, gen, cfg, &adv, &linf) == AF_OK);
  CHECK(linf <= 0.05 + 1e-12);
  CHECK(linf > 0.0);

  double dist = 0.0;
  af_image* y_adv = nullptr;
  REQUIRE(af_generator_forward(gen, adv, 1, &y_adv) == AF_OK);
  REQUIRE(af_l2_distortion(y, y_adv, &dist) == AF_OK);
  CHECK(dist > 0.0);

  double s = 0.0;
  REQUIRE(af_ssim(x, adv, &s) == AF_OK);
  CHECK(s < 1.0);
  CHECK(s > 0.0);

  CHECK(af_attack_run("unknown", x, gen, cfg, &adv, nullptr) ==
        AF_ERR_INVALID_ARG);

  af_image_free(x);
  af_image_free(y);
  af_image_free(y_adv);
  af_image_free(adv);
  af_attack_config_free(cfg);
  af_generator_free(gen);
}

TEST_CASE("convnet generators over the C boundary") {
  af_generator* gen = nullptr;
  REQUIRE(af_generator_convnet_random(5, 2, 4, 1, &gen) == AF_OK);
  CHECK(af_generator_label_count(gen) == 2);
  af_generator_free(gen);
  CHECK(af_generator_convnet("/no/such/weights.afw", &gen) != AF_OK);
}

TEST_CASE("experiment runner and protect over the C API") {
  TempDir dir("af_capi_run");
  std::string cfg_path = dir.str() + "/config.ini";
  write_config(cfg_path);

  CHECK(af_experiment_run("ablate", cfg_path.c_str(), dir.str().c_str(),
                          nullptr) == AF_OK);
  CHECK(fs::exists(dir.path / "ablate.csv"));
  CHECK(fs::exists(dir.path / "ablate.png"));
  CHECK(fs::exists(dir.path / "manifest.json"));

  CHECK(af_experiment_run("nope", cfg_path.c_str(), dir.str().c_str(),
                          nullptr) == AF_ERR_INVALID_ARG);
  CHECK(af_experiment_run("ablate", "/no/such/config.ini", nullptr, nullptr) ==
        AF_ERR_CONFIG);

  // protect: one good input, one broken input; batch continues
  af_image* img = nullptr;
  REQUIRE(af_image_create(32, 32, AF_RANGE_UNIT, &img) == AF_OK);
  std::string png_path = dir.str() + "/input.png";
  REQUIRE(af_image_write_png(img, png_path.c_str()) == AF_OK);
  af_image_free(img);
  std::string broken = dir.str() + "/broken.png";
  std::ofstream(broken) << "junk";

  const char* inputs[2] = {png_path.c_str(), broken.c_str()};
  size_t failed = 99;
  uint64_t seed = 3;
  CHECK(af_protect_files(cfg_path.c_str(), inputs, 2, dir.str().c_str(), &seed,
                         &failed) == AF_OK);
  CHECK(failed == 1);
  CHECK(fs::exists(dir.path / "input_protected.png"));
  CHECK(fs::exists(dir.path / "input_protected.json"));
}
