#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace sdmvae {

struct AudioClip {
  std::vector<double> samples;  // finite, in [-1, 1]
  int sample_rate = 16000;      // Hz, > 0
};

// One-sided STFT of a clip: power (|X|^2) and phase per frame. bins =
// window_len / 2 + 1; hop is window_len / 4 (75% overlap).
struct StftFrames {
  std::vector<double> power;  // frames x bins, row-major, >= 0
  std::vector<double> phase;  // frames x bins, in (-pi, pi]
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::size_t window_len = 0;
  std::size_t hop = 0;
  int sample_rate = 16000;
};

// w[l] = sin(pi * (l + 0.5) / len), l = 0..len-1. Sample-centered so the
// window is symmetric and strictly positive; its squared overlap-add at
// hop = len/4 is exactly constant. len must be even and >= 2.
std::vector<double> sine_window(std::size_t len);

// In-place radix-2 complex FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& x, bool inverse);

// Analysis STFT. window_len must be a power of two >= 8; the trailing
// samples that do not fill a whole frame are dropped. Throws IoError-family
// errors per the preconditions (clip shorter than one window, bad hop).
StftFrames stft(const AudioClip& clip, std::size_t window_len, std::size_t hop);

// Weighted overlap-add inverse with the same sine window, normalized by the
// accumulated squared window. Output length is (frames-1)*hop + window_len.
AudioClip istft(const StftFrames& frames);

// Builds a complex STFT from sqrt(power_est) and the reference phase, then
// inverts. power_est must match the reference grid and be >= 0.
AudioClip resynthesize(const std::vector<double>& power_est, const StftFrames& reference);

// Trims an overlap-add reconstruction to the interior of the analyzed
// signal: drops edge samples so the result is exactly input_len - window_len
// samples, centered. offset is the position of the first kept sample in the
// original signal.
struct Trimmed {
  AudioClip clip;
  std::size_t offset = 0;
};
Trimmed trim_interior(const AudioClip& full, std::size_t input_len, std::size_t window_len);

}  // namespace sdmvae
