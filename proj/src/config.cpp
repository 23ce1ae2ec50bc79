#include "sdmvae/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "sdmvae/errors.hpp"

namespace sdmvae {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    const std::uint64_t x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(field + ": expected a non-negative integer, got '" + v + "'");
  }
}

double parse_f64(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(field + ": expected a number, got '" + v + "'");
  }
}

bool power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::standard: return "standard";
    case Variant::sdm_dct: return "sdm_dct";
    default: return "sdm_identity";
  }
}

Variant variant_from_name(const std::string& name) {
  if (name == "standard") return Variant::standard;
  if (name == "sdm_dct") return Variant::sdm_dct;
  if (name == "sdm_identity") return Variant::sdm_identity;
  throw ConfigError("variant: unknown value '" + name +
                    "' (expected standard | sdm_dct | sdm_identity)");
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

ExperimentConfig ExperimentConfig::parse_string(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad section");
      section = t.substr(1, t.size() - 2);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    const std::string field = section.empty() ? key : section + "." + key;

    if (field == "experiment.variant") cfg.variant = variant_from_name(value);
    else if (field == "experiment.m") cfg.m = parse_u64(field, value);
    else if (field == "experiment.k") cfg.k = parse_u64(field, value);
    else if (field == "experiment.seed") cfg.seed = parse_u64(field, value);
    else if (field == "experiment.output_dir") cfg.output_dir = value;
    else if (field == "stft.window") cfg.window = parse_u64(field, value);
    else if (field == "stft.hop") cfg.hop = parse_u64(field, value);
    else if (field == "train.batch_size") cfg.batch_size = parse_u64(field, value);
    else if (field == "train.patience") cfg.patience = parse_u64(field, value);
    else if (field == "train.max_epochs") cfg.max_epochs = parse_u64(field, value);
    else if (field == "train.learning_rate") cfg.learning_rate = parse_f64(field, value);
    else if (field == "data.source") {
      if (value == "synthetic") cfg.source = DataSource::synthetic;
      else if (value == "wav_dir") cfg.source = DataSource::wav_dir;
      else throw ConfigError("data.source: expected synthetic | wav_dir, got '" + value + "'");
    } else if (field == "data.wav_dir") cfg.wav_dir = value;
    else if (field == "data.clips") cfg.clips = parse_u64(field, value);
    else if (field == "data.clip_seconds") cfg.clip_seconds = parse_f64(field, value);
    else if (field == "data.speakers") cfg.speakers = parse_u64(field, value);
    else if (field == "data.split") {
      std::vector<double> parts;
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) parts.push_back(parse_f64(field, trim(item)));
      if (parts.size() != 3) throw ConfigError("data.split: expected three ratios");
      cfg.split_train = parts[0];
      cfg.split_val = parts[1];
      cfg.split_test = parts[2];
    } else {
      throw ConfigError("unknown config field '" + field + "'");
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_string(buf.str());
}

void ExperimentConfig::validate() const {
  if (m < 2) throw ConfigError("experiment.m: must be >= 2");
  if (k < 1) throw ConfigError("experiment.k: must be >= 1");
  if (variant == Variant::sdm_identity && k != m) {
    throw ConfigError("experiment.k: identity dictionary requires k = m (got k=" +
                      std::to_string(k) + ", m=" + std::to_string(m) + ")");
  }
  if (!power_of_two(window) || window < 8) {
    throw ConfigError("stft.window: must be a power of two >= 8");
  }
  if (hop != window / 4) throw ConfigError("stft.hop: must be window/4 (75% overlap)");
  if (batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
  if (patience < 1) throw ConfigError("train.patience: must be >= 1");
  if (learning_rate < 0.0) throw ConfigError("train.learning_rate: must be >= 0");
  if (split_train <= 0.0 || split_val <= 0.0 || split_test <= 0.0) {
    throw ConfigError("data.split: ratios must be positive");
  }
  if (source == DataSource::wav_dir && wav_dir.empty()) {
    throw ConfigError("data.wav_dir: required when data.source = wav_dir");
  }
  if (source == DataSource::synthetic) {
    if (clips < 3) throw ConfigError("data.clips: need at least 3 synthetic clips");
    if (speakers < 3) throw ConfigError("data.speakers: need at least 3 for disjoint splits");
    if (clip_seconds < 0.5) throw ConfigError("data.clip_seconds: must be >= 0.5");
  }
}

std::string ExperimentConfig::echo() const {
  std::ostringstream os;
  os.precision(17);
  os << "[experiment]\n";
  os << "variant = " << variant_name(variant) << "\n";
  os << "m = " << m << "\n";
  os << "k = " << k << "\n";
  os << "seed = " << seed << "\n";
  os << "output_dir = " << output_dir << "\n";
  os << "\n[stft]\n";
  os << "window = " << window << "\n";
  os << "hop = " << hop << "\n";
  os << "\n[train]\n";
  os << "batch_size = " << batch_size << "\n";
  os << "patience = " << patience << "\n";
  os << "max_epochs = " << max_epochs << "\n";
  os << "learning_rate = " << learning_rate << "\n";
  os << "\n[data]\n";
  os << "source = " << (source == DataSource::synthetic ? "synthetic" : "wav_dir") << "\n";
  if (!wav_dir.empty()) os << "wav_dir = " << wav_dir << "\n";
  os << "clips = " << clips << "\n";
  os << "clip_seconds = " << clip_seconds << "\n";
  os << "speakers = " << speakers << "\n";
  os << "split = " << split_train << "," << split_val << "," << split_test << "\n";
  return os.str();
}

std::string ExperimentConfig::data_fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  if (source == DataSource::synthetic) {
    os << "synthetic;seed=" << seed << ";clips=" << clips << ";dur=" << clip_seconds
       << ";speakers=" << speakers;
  } else {
    os << "wav_dir;";
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(wav_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      os << f.filename().string() << ":" << std::filesystem::file_size(f) << ";";
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(os.str())));
  return buf;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig tc;
  tc.batch_size = batch_size;
  tc.patience = patience;
  tc.max_epochs = max_epochs;
  tc.rng_seed = seed;
  tc.variant = variant;
  tc.m = m;
  tc.k = variant == Variant::sdm_identity ? m : k;
  tc.adam.lr = learning_rate;
  return tc;
}

SplitSpec ExperimentConfig::split_spec() const {
  return SplitSpec{split_train, split_val, split_test, seed};
}

}  // namespace sdmvae
