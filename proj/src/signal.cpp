#include "sdmvae/signal.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sdmvae/errors.hpp"

namespace sdmvae {

namespace {

constexpr double kPi = std::numbers::pi;

bool power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

std::vector<double> sine_window(std::size_t len) {
  if (len < 2 || len % 2 != 0) {
    throw ContractError("sine_window: length must be even and >= 2, got " + std::to_string(len));
  }
  std::vector<double> w(len);
  for (std::size_t l = 0; l < len; ++l) {
    w[l] = std::sin(kPi * (static_cast<double>(l) + 0.5) / static_cast<double>(len));
  }
  return w;
}

void fft_inplace(std::vector<std::complex<double>>& x, bool inverse) {
  const std::size_t n = x.size();
  if (!power_of_two(n)) {
    throw ContractError("fft: size must be a power of two, got " + std::to_string(n));
  }
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
    const std::complex<double> wstep(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wstep;
      }
    }
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& c : x) c *= scale;
  }
}

StftFrames stft(const AudioClip& clip, std::size_t window_len, std::size_t hop) {
  if (!power_of_two(window_len) || window_len < 8) {
    throw ContractError("stft: window length must be a power of two >= 8, got " +
                        std::to_string(window_len));
  }
  if (hop == 0 || hop != window_len / 4) {
    throw ContractError("stft: hop must be window/4 (75% overlap), got hop " +
                        std::to_string(hop) + " for window " + std::to_string(window_len));
  }
  if (clip.samples.size() < window_len) {
    throw IoError("stft: clip of " + std::to_string(clip.samples.size()) +
                  " samples is shorter than one window (" + std::to_string(window_len) + ")");
  }

  const std::size_t n_frames = (clip.samples.size() - window_len) / hop + 1;
  const std::size_t bins = window_len / 2 + 1;
  const std::vector<double> w = sine_window(window_len);

  StftFrames out;
  out.frames = n_frames;
  out.bins = bins;
  out.window_len = window_len;
  out.hop = hop;
  out.sample_rate = clip.sample_rate;
  out.power.resize(n_frames * bins);
  out.phase.resize(n_frames * bins);

  std::vector<std::complex<double>> buf(window_len);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const double* src = clip.samples.data() + t * hop;
    for (std::size_t l = 0; l < window_len; ++l) buf[l] = {src[l] * w[l], 0.0};
    fft_inplace(buf, false);
    double* pw = out.power.data() + t * bins;
    double* ph = out.phase.data() + t * bins;
    for (std::size_t b = 0; b < bins; ++b) {
      const double re = buf[b].real(), im = buf[b].imag();
      pw[b] = re * re + im * im;
      double p = std::atan2(im, re);
      if (p == -kPi) p = kPi;  // keep phase in (-pi, pi]
      ph[b] = p;
    }
  }
  return out;
}

AudioClip istft(const StftFrames& frames) {
  const std::size_t win = frames.window_len, hop = frames.hop, bins = frames.bins;
  if (bins != win / 2 + 1 || frames.power.size() != frames.frames * bins ||
      frames.phase.size() != frames.frames * bins || hop != win / 4) {
    throw ContractError("istft: inconsistent frame geometry");
  }
  const std::vector<double> w = sine_window(win);
  const std::size_t out_len = (frames.frames - 1) * hop + win;

  std::vector<double> acc(out_len, 0.0);
  std::vector<double> wsum(out_len, 0.0);
  std::vector<std::complex<double>> buf(win);

  for (std::size_t t = 0; t < frames.frames; ++t) {
    const double* pw = frames.power.data() + t * bins;
    const double* ph = frames.phase.data() + t * bins;
    // hermitian extension of the one-sided spectrum
    for (std::size_t b = 0; b < bins; ++b) {
      const double mag = std::sqrt(pw[b]);
      buf[b] = std::polar(mag, ph[b]);
    }
    for (std::size_t b = bins; b < win; ++b) buf[b] = std::conj(buf[win - b]);
    fft_inplace(buf, true);
    double* dst = acc.data() + t * hop;
    double* ws = wsum.data() + t * hop;
    for (std::size_t l = 0; l < win; ++l) {
      dst[l] += w[l] * buf[l].real();
      ws[l] += w[l] * w[l];
    }
  }
  for (std::size_t i = 0; i < out_len; ++i) acc[i] /= wsum[i];  // sine window: wsum > 0

  AudioClip clip;
  clip.sample_rate = frames.sample_rate;
  clip.samples = std::move(acc);
  return clip;
}

AudioClip resynthesize(const std::vector<double>& power_est, const StftFrames& reference) {
  if (power_est.size() != reference.frames * reference.bins) {
    throw ShapeError("resynthesize: power estimate has " + std::to_string(power_est.size()) +
                     " entries, expected " + std::to_string(reference.frames * reference.bins));
  }
  for (std::size_t i = 0; i < power_est.size(); ++i) {
    if (power_est[i] < 0.0) {
      throw DomainError("resynthesize: negative power at index " + std::to_string(i));
    }
  }
  StftFrames combined = reference;
  combined.power = power_est;
  return istft(combined);
}

Trimmed trim_interior(const AudioClip& full, std::size_t input_len, std::size_t window_len) {
  if (input_len < window_len + 1 || full.samples.size() > input_len) {
    throw ContractError("trim_interior: reconstruction longer than the input or input too short");
  }
  const std::size_t keep = input_len - window_len;
  const std::size_t slack = full.samples.size() - keep;  // window_len - dropped remainder
  const std::size_t head = slack / 2;
  Trimmed out;
  out.offset = head;
  out.clip.sample_rate = full.sample_rate;
  out.clip.samples.assign(full.samples.begin() + static_cast<std::ptrdiff_t>(head),
                          full.samples.begin() + static_cast<std::ptrdiff_t>(head + keep));
  return out;
}

}  // namespace sdmvae
