#pragma once

#include <filesystem>
#include <string>

#include "sdmvae/model.hpp"

namespace sdmvae {

// Binary checkpoint: "SDMVAE01" magic, the config echo, then the named
// parameter tensors as row-major little-endian 64-bit floats, and a
// trailing FNV-1a checksum of everything before it. Layout:
//
//   magic            8 bytes, "SDMVAE01"
//   config_len       u32
//   config_echo      config_len bytes (the normalized experiment config)
//   tensor_count     u32
//   per tensor:
//     name_len u32, name bytes, rows u32, cols u32, rows*cols f64
//   checksum         u64, FNV-1a over all preceding bytes
//
// The tensor order and names follow ModelParams::named(), so another
// implementation can exchange checkpoints by matching names.
struct Checkpoint {
  ModelParams params;
  std::string config_echo;
};

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const std::string& config_echo);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sdmvae
