#include <doctest.h>

#include "core/config.hpp"

using namespace af::config;

namespace {

const char* kSample = R"(
# sample experiment configuration
seed = 99
out = /tmp/af_out

[dataset]
source = synthetic
count = 8
width = 64
height = 48

[surrogate]
kind = toy
labels = 4
blur_sigma = 1.25
seed = 3

[attack.antiforge]
epsilon = 0.04
iterations = 120
learning_rate = 4e-4

[attack.pgd]
iterations = 12

[transforms]
jpeg_quality = 60
blur_sigma = 2
eot_pool = identity, blur:1, blur:2
ablate_epsilons = 0.01, 0.02
)";

}  // namespace

TEST_CASE("ini parsing with sections and comments") {
  IniData ini = parse_ini("a = 1\n[s]\nb = two # trailing\n\n[s.t]\nc=3\n");
  CHECK(ini.get("", "a", "") == "1");
  CHECK(ini.get("s", "b", "") == "two");
  CHECK(ini.get("s.t", "c", "") == "3");
  CHECK(ini.get("s", "missing", "dflt") == "dflt");
  CHECK_THROWS_AS(parse_ini("[open\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ini("novalue\n"), std::invalid_argument);
}

TEST_CASE("experiment config carries defaults and overrides") {
  ExperimentConfig cfg = ExperimentConfig::from_text(kSample);
  CHECK(cfg.seed == 99);
  CHECK(cfg.out_dir == "/tmp/af_out");
  CHECK(cfg.data.count == 8);
  CHECK(cfg.data.width == 64);
  CHECK(cfg.data.height == 48);
  CHECK(cfg.surrogate.labels == 4);
  CHECK(cfg.surrogate.blur_sigma == doctest::Approx(1.25));
  CHECK(cfg.attacks.at("antiforge").epsilon == doctest::Approx(0.04));
  CHECK(cfg.attacks.at("antiforge").iterations == 120);
  CHECK(cfg.attacks.at("pgd").iterations == 12);
  // untouched defaults
  CHECK(cfg.attacks.at("pgd").epsilon == doctest::Approx(0.05));
  CHECK(cfg.attacks.at("cw").iterations == 500);
  CHECK(cfg.attacks.at("cw").learning_rate == doctest::Approx(1e-4));
  CHECK(cfg.jpeg_quality == 60);
  CHECK(cfg.blur_sigma == doctest::Approx(2.0));
  REQUIRE(cfg.eot_pool.size() == 3);
  CHECK(cfg.eot_pool[0].kind == af::transforms::TransformSpec::Kind::Identity);
  REQUIRE(cfg.ablate_epsilons.size() == 2);
}

TEST_CASE("unknown keys and sections are rejected") {
  CHECK_THROWS_AS(ExperimentConfig::from_text("[dataset]\nwat = 1\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_text("[nope]\na = 1\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(ExperimentConfig::from_text("[surrogate]\nkind = quantum\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      ExperimentConfig::from_text("[dataset]\nsource = /no/such/dir\n"),
      std::invalid_argument);
}

TEST_CASE("config hash is stable and sensitive") {
  ExperimentConfig a = ExperimentConfig::from_text(kSample);
  ExperimentConfig b = ExperimentConfig::from_text(kSample);
  CHECK(a.hash_hex() == b.hash_hex());
  CHECK(a.hash_hex().size() == 16);

  std::string changed = kSample;
  size_t pos = changed.find("seed = 99");
  changed.replace(pos, 9, "seed = 98");
  ExperimentConfig c = ExperimentConfig::from_text(changed);
  CHECK(a.hash_hex() != c.hash_hex());
}
