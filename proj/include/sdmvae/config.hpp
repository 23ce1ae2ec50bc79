#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sdmvae/trainer.hpp"

namespace sdmvae {

enum class DataSource { synthetic, wav_dir };

// One experiment, parsed from a sectioned key = value file. Unknown keys
// and malformed values raise ConfigError naming the field.
struct ExperimentConfig {
  // [experiment]
  Variant variant = Variant::standard;
  std::size_t m = 32;
  std::size_t k = 32;
  std::uint64_t seed = 0;
  std::string output_dir;

  // [stft]
  std::size_t window = 1024;
  std::size_t hop = 256;

  // [train]
  std::size_t batch_size = 128;
  std::size_t patience = 20;
  std::size_t max_epochs = 500;
  double learning_rate = 1e-4;

  // [data]
  DataSource source = DataSource::synthetic;
  std::string wav_dir;
  std::size_t clips = 56;
  double clip_seconds = 2.0;
  std::size_t speakers = 8;
  double split_train = 0.7;
  double split_val = 0.15;
  double split_test = 0.15;

  static ExperimentConfig parse_file(const std::filesystem::path& path);
  static ExperimentConfig parse_string(const std::string& text);

  // Throws ConfigError naming the offending field.
  void validate() const;

  // Normalized rendering; parsing it back reproduces this config.
  std::string echo() const;

  // Stable hash of the data the experiment sees: generator parameters for
  // synthetic data, sorted file names and sizes for a WAV directory.
  std::string data_fingerprint() const;

  TrainConfig train_config() const;
  SplitSpec split_spec() const;
  std::size_t code_dim() const { return variant == Variant::sdm_dct ? k : m; }
};

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

// FNV-1a over a byte string; used for data fingerprints.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace sdmvae
