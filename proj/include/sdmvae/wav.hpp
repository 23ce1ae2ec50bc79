#pragma once

#include <filesystem>

#include "sdmvae/signal.hpp"

namespace sdmvae {

// 16-bit PCM mono RIFF/WAVE only; no resampling. Samples map to [-1, 1)
// via division by 32768. expected_rate > 0 enforces the corpus rate;
// pass 0 to accept any rate.
AudioClip read_wav(const std::filesystem::path& path, int expected_rate = 16000);

// Writes 16-bit PCM mono; samples are clamped to [-1, 1] before quantizing.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

}  // namespace sdmvae
