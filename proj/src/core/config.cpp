#include "core/config.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace af::config {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

uint64_t parse_u64(const std::string& s) { return std::stoull(s); }
int parse_int(const std::string& s) { return std::stoi(s); }
double parse_double(const std::string& s) { return std::stod(s); }

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

const std::set<std::string> kKnownSections = {
    "",          "dataset",    "surrogate",  "transforms",
    "attack.antiforge", "attack.pgd", "attack.cw"};

const std::set<std::string> kTopKeys = {"seed", "out"};
const std::set<std::string> kDatasetKeys = {"source", "count", "width", "height"};
const std::set<std::string> kSurrogateKeys = {"kind",    "labels", "blur_sigma",
                                              "seed",    "weights", "hidden",
                                              "blocks"};
const std::set<std::string> kTransformKeys = {
    "jpeg_quality", "blur_sigma",      "high_epsilon", "eot_pool",
    "ablate_epsilons", "asr_threshold", "lid_neighbors", "lid_feature_side"};
const std::set<std::string> kAttackKeys = {"epsilon", "learning_rate",
                                           "iterations", "objective",
                                           "loss_norm"};

void apply_attack(AttackSettings& a,
                  const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "epsilon") a.epsilon = parse_double(value);
    else if (key == "learning_rate") a.learning_rate = parse_double(value);
    else if (key == "iterations") a.iterations = parse_int(value);
    else if (key == "objective") a.objective = value;
    else if (key == "loss_norm") a.loss_norm = value;
  }
}

}  // namespace

bool IniData::has(const std::string& section, const std::string& key) const {
  auto it = sections.find(section);
  return it != sections.end() && it->second.count(key) > 0;
}

std::string IniData::get(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
  auto it = sections.find(section);
  if (it == sections.end()) return fallback;
  auto kv = it->second.find(key);
  return kv == it->second.end() ? fallback : kv->second;
}

IniData parse_ini(const std::string& text) {
  IniData data;
  std::string section;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (size_t hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      data.sections[section];
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key");
    data.sections[section][key] = value;
  }
  return data;
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  AttackSettings antiforge;  // paper hyperparameters
  AttackSettings pgd;
  pgd.iterations = 10;
  AttackSettings cw;
  cfg.attacks = {{"antiforge", antiforge}, {"pgd", pgd}, {"cw", cw}};
  cfg.eot_pool = {transforms::TransformSpec::parse("blur:1"),
                  transforms::TransformSpec::parse("blur:2"),
                  transforms::TransformSpec::parse("blur:3")};
  return cfg;
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
  IniData ini = parse_ini(text);
  for (const auto& [section, kv] : ini.sections) {
    if (!kKnownSections.count(section))
      throw std::invalid_argument("config: unknown section [" + section + "]");
    const std::set<std::string>* allowed = nullptr;
    if (section.empty()) allowed = &kTopKeys;
    else if (section == "dataset") allowed = &kDatasetKeys;
    else if (section == "surrogate") allowed = &kSurrogateKeys;
    else if (section == "transforms") allowed = &kTransformKeys;
    else allowed = &kAttackKeys;
    for (const auto& [key, value] : kv)
      if (!allowed->count(key))
        throw std::invalid_argument("config: unknown key '" + key +
                                    "' in section [" + section + "]");
  }

  ExperimentConfig cfg = defaults();
  if (ini.has("", "seed")) cfg.seed = parse_u64(ini.get("", "seed", ""));
  if (ini.has("", "out")) cfg.out_dir = ini.get("", "out", "");

  if (ini.has("dataset", "source")) cfg.data.source = ini.get("dataset", "source", "");
  if (ini.has("dataset", "count")) cfg.data.count = parse_int(ini.get("dataset", "count", ""));
  if (ini.has("dataset", "width")) cfg.data.width = parse_int(ini.get("dataset", "width", ""));
  if (ini.has("dataset", "height")) cfg.data.height = parse_int(ini.get("dataset", "height", ""));

  if (ini.has("surrogate", "kind")) cfg.surrogate.kind = ini.get("surrogate", "kind", "");
  if (ini.has("surrogate", "labels")) cfg.surrogate.labels = parse_int(ini.get("surrogate", "labels", ""));
  if (ini.has("surrogate", "blur_sigma")) cfg.surrogate.blur_sigma = parse_double(ini.get("surrogate", "blur_sigma", ""));
  if (ini.has("surrogate", "seed")) cfg.surrogate.seed = parse_u64(ini.get("surrogate", "seed", ""));
  if (ini.has("surrogate", "weights")) cfg.surrogate.weights = ini.get("surrogate", "weights", "");
  if (ini.has("surrogate", "hidden")) cfg.surrogate.hidden = parse_int(ini.get("surrogate", "hidden", ""));
  if (ini.has("surrogate", "blocks")) cfg.surrogate.blocks = parse_int(ini.get("surrogate", "blocks", ""));

  if (ini.has("transforms", "jpeg_quality"))
    cfg.jpeg_quality = parse_int(ini.get("transforms", "jpeg_quality", ""));
  if (ini.has("transforms", "blur_sigma"))
    cfg.blur_sigma = parse_double(ini.get("transforms", "blur_sigma", ""));
  if (ini.has("transforms", "high_epsilon"))
    cfg.high_epsilon = parse_double(ini.get("transforms", "high_epsilon", ""));
  if (ini.has("transforms", "asr_threshold"))
    cfg.asr_threshold = parse_double(ini.get("transforms", "asr_threshold", ""));
  if (ini.has("transforms", "lid_neighbors"))
    cfg.lid_neighbors = parse_int(ini.get("transforms", "lid_neighbors", ""));
  if (ini.has("transforms", "lid_feature_side"))
    cfg.lid_feature_side = parse_int(ini.get("transforms", "lid_feature_side", ""));
  if (ini.has("transforms", "eot_pool")) {
    cfg.eot_pool.clear();
    for (const auto& item : split_list(ini.get("transforms", "eot_pool", "")))
      cfg.eot_pool.push_back(transforms::TransformSpec::parse(item));
  }
  if (ini.has("transforms", "ablate_epsilons")) {
    cfg.ablate_epsilons.clear();
    for (const auto& item : split_list(ini.get("transforms", "ablate_epsilons", "")))
      cfg.ablate_epsilons.push_back(parse_double(item));
  }

  for (auto& [name, settings] : cfg.attacks) {
    auto it = ini.sections.find("attack." + name);
    if (it != ini.sections.end()) apply_attack(settings, it->second);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_text(ss.str());
}

void ExperimentConfig::validate() const {
  require(data.count >= 1, "dataset count must be positive");
  require(data.width >= 16 && data.height >= 16,
          "image size must be at least 16x16");
  require(surrogate.kind == "toy" || surrogate.kind == "convnet" ||
              surrogate.kind == "identity",
          "surrogate kind must be toy, convnet, or identity");
  require(surrogate.labels >= 2, "label set must have at least 2 entries");
  require(jpeg_quality >= 1 && jpeg_quality <= 100,
          "jpeg quality must be in [1,100]");
  require(blur_sigma > 0.0, "blur sigma must be positive");
  require(asr_threshold >= 0.0, "asr threshold must be non-negative");
  require(!ablate_epsilons.empty(), "ablation needs at least one epsilon");
  for (const auto& [name, a] : attacks) {
    require(a.epsilon >= 0.0, name + ": epsilon must be non-negative");
    require(a.learning_rate > 0.0, name + ": learning rate must be positive");
    require(a.iterations >= 0, name + ": iterations must be non-negative");
  }
  namespace fs = std::filesystem;
  if (data.source != "synthetic")
    require(fs::is_directory(data.source),
            "dataset directory does not exist: " + data.source);
  if (!surrogate.weights.empty())
    require(fs::is_regular_file(surrogate.weights),
            "weight file does not exist: " + surrogate.weights);
}

std::string ExperimentConfig::canonical() const {
  std::stringstream ss;
  ss << "seed=" << seed << "\n";
  ss << "dataset=" << data.source << "," << data.count << "," << data.width
     << "x" << data.height << "\n";
  ss << "surrogate=" << surrogate.kind << ",labels=" << surrogate.labels
     << ",blur=" << fmt_double(surrogate.blur_sigma) << ",seed=" << surrogate.seed
     << ",weights=" << surrogate.weights << ",hidden=" << surrogate.hidden
     << ",blocks=" << surrogate.blocks << "\n";
  for (const auto& [name, a] : attacks)
    ss << "attack." << name << "=eps:" << fmt_double(a.epsilon)
       << ",lr:" << fmt_double(a.learning_rate) << ",k:" << a.iterations << ","
       << a.objective << "," << a.loss_norm << "\n";
  ss << "transforms=jpeg:" << jpeg_quality << ",blur:" << fmt_double(blur_sigma)
     << ",high_eps:" << fmt_double(high_epsilon)
     << ",asr:" << fmt_double(asr_threshold)
     << ",lid:" << lid_neighbors << "/" << lid_feature_side << "\n";
  ss << "eot=";
  for (size_t i = 0; i < eot_pool.size(); ++i)
    ss << (i ? "," : "") << eot_pool[i].str();
  ss << "\nablate=";
  for (size_t i = 0; i < ablate_epsilons.size(); ++i)
    ss << (i ? "," : "") << fmt_double(ablate_epsilons[i]);
  ss << "\n";
  return ss.str();
}

std::string ExperimentConfig::hash_hex() const {
  std::string s = canonical();
  uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace af::config
