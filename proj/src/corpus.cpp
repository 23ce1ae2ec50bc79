#include "sdmvae/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>

#include "sdmvae/errors.hpp"
#include "sdmvae/rng.hpp"
#include "sdmvae/wav.hpp"

namespace sdmvae {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kRate = 16000;

std::string speaker_of(const std::string& stem) {
  const auto pos = stem.find('_');
  return pos == std::string::npos ? stem : stem.substr(0, pos);
}

}  // namespace

DatasetSplit split_by_speaker(std::vector<NamedClip> clips, const SplitSpec& spec) {
  if (spec.train <= 0.0 || spec.validation <= 0.0 || spec.test <= 0.0) {
    throw ConfigError("split: all three ratios must be positive");
  }
  std::set<std::string> speaker_set;
  for (const auto& c : clips) speaker_set.insert(c.speaker);
  std::vector<std::string> speakers(speaker_set.begin(), speaker_set.end());  // sorted

  Rng rng(spec.seed);
  rng.shuffle(speakers);

  const std::size_t total = speakers.size();
  const std::size_t n_train = static_cast<std::size_t>(std::floor(spec.train * total));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(spec.validation * total));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= total) {
    throw ConfigError("split: " + std::to_string(total) +
                      " speakers cannot fill three non-empty splits at the given ratios");
  }

  std::map<std::string, int> bucket;  // 0 train, 1 val, 2 test
  for (std::size_t i = 0; i < total; ++i) {
    bucket[speakers[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
  }

  DatasetSplit out;
  for (auto& c : clips) {
    switch (bucket[c.speaker]) {
      case 0: out.train.push_back(std::move(c)); break;
      case 1: out.validation.push_back(std::move(c)); break;
      default: out.test.push_back(std::move(c)); break;
    }
  }
  if (out.train.empty() || out.validation.empty() || out.test.empty()) {
    throw ConfigError("split: a split received no clips");
  }
  return out;
}

DatasetSplit load_wav_dir(const std::filesystem::path& dir, const SplitSpec& spec) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no .wav files in " + dir.string());

  std::vector<NamedClip> clips;
  clips.reserve(files.size());
  for (const auto& f : files) {
    NamedClip c;
    c.id = f.stem().string();
    c.speaker = speaker_of(c.id);
    c.clip = read_wav(f, kRate);
    clips.push_back(std::move(c));
  }
  return split_by_speaker(std::move(clips), spec);
}

std::vector<NamedClip> synth_speech_like(std::uint64_t seed, std::size_t n_clips,
                                         double duration_s, std::size_t n_speakers) {
  if (duration_s < 0.5) throw ContractError("synth_speech_like: duration must be >= 0.5 s");
  if (n_speakers < 1) throw ContractError("synth_speech_like: need at least one speaker");

  Rng rng(seed);

  // Per-speaker voice: 2-4 formant resonances with fixed centers/bandwidths.
  struct Voice {
    std::vector<double> formant_hz, bandwidth_hz;
    double f0_base;
  };
  std::vector<Voice> voices(n_speakers);
  const double lo[4] = {300.0, 900.0, 2000.0, 2900.0};
  const double hi[4] = {850.0, 1900.0, 2800.0, 3600.0};
  for (auto& v : voices) {
    const std::size_t n_formants = 2 + rng.below(3);
    for (std::size_t f = 0; f < n_formants; ++f) {
      v.formant_hz.push_back(rng.uniform(lo[f], hi[f]));
      v.bandwidth_hz.push_back(rng.uniform(80.0, 220.0));
    }
    v.f0_base = rng.uniform(95.0, 280.0);
  }

  const std::size_t n_samples = static_cast<std::size_t>(duration_s * kRate);
  const std::size_t fade = static_cast<std::size_t>(0.12 * kRate);  // 120 ms edge fades

  std::vector<NamedClip> clips;
  clips.reserve(n_clips);
  for (std::size_t c = 0; c < n_clips; ++c) {
    const std::size_t spk = c % n_speakers;
    const Voice& v = voices[spk];

    // Per-utterance variation around the speaker's voice.
    const double f0 = v.f0_base * rng.uniform(0.92, 1.08);
    const double drift_hz = rng.uniform(0.15, 0.5);
    const double drift_depth = rng.uniform(0.03, 0.1);
    const double syllable_hz = rng.uniform(1.5, 4.0);
    const double syllable_phase = rng.uniform(0.0, 2.0 * kPi);

    // Harmonic source with 1/h amplitudes, F0 wandering inside 80-300 Hz.
    std::vector<double> x(n_samples, 0.0);
    double phase = rng.uniform(0.0, 2.0 * kPi);
    const std::size_t n_harm = static_cast<std::size_t>(4000.0 / f0);
    std::vector<double> harm_phase(n_harm, 0.0);
    for (std::size_t h = 0; h < n_harm; ++h) harm_phase[h] = rng.uniform(0.0, 2.0 * kPi);
    for (std::size_t t = 0; t < n_samples; ++t) {
      const double ts = static_cast<double>(t) / kRate;
      const double inst_f0 = f0 * (1.0 + drift_depth * std::sin(2.0 * kPi * drift_hz * ts));
      phase += 2.0 * kPi * inst_f0 / kRate;
      double s = 0.0;
      for (std::size_t h = 0; h < n_harm; ++h) {
        s += std::sin(static_cast<double>(h + 1) * phase + harm_phase[h]) /
             static_cast<double>(h + 1);
      }
      x[t] = s;
    }

    // Cascade of two-pole resonators at the speaker's formants.
    for (std::size_t f = 0; f < v.formant_hz.size(); ++f) {
      const double r = std::exp(-kPi * v.bandwidth_hz[f] / kRate);
      const double theta = 2.0 * kPi * v.formant_hz[f] / kRate;
      const double a1 = 2.0 * r * std::cos(theta);
      const double a2 = -r * r;
      const double gain = 1.0 - r;
      double y1 = 0.0, y2 = 0.0;
      for (std::size_t t = 0; t < n_samples; ++t) {
        const double y = gain * x[t] + a1 * y1 + a2 * y2;
        y2 = y1;
        y1 = y;
        x[t] = y;
      }
    }

    // Syllable-rate envelope plus raised-cosine fades at the edges.
    for (std::size_t t = 0; t < n_samples; ++t) {
      const double ts = static_cast<double>(t) / kRate;
      double env = 0.4 + 0.6 * (0.5 + 0.5 * std::sin(2.0 * kPi * syllable_hz * ts + syllable_phase));
      if (t < fade) {
        const double u = static_cast<double>(t) / fade;
        env *= 0.5 - 0.5 * std::cos(kPi * u);
      }
      if (t + fade >= n_samples) {
        const double u = static_cast<double>(n_samples - 1 - t) / fade;
        env *= 0.5 - 0.5 * std::cos(kPi * u);
      }
      x[t] *= env;
    }

    double peak = 0.0;
    for (double s : x) peak = std::max(peak, std::abs(s));
    if (peak > 0.0) {
      for (double& s : x) s *= 0.95 / peak;
    }

    NamedClip clip;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "s%02u_u%03u", static_cast<unsigned>(spk),
                  static_cast<unsigned>(c));
    clip.id = buf;
    clip.speaker = clip.id.substr(0, clip.id.find('_'));
    clip.clip.sample_rate = kRate;
    clip.clip.samples = std::move(x);
    clips.push_back(std::move(clip));
  }
  return clips;
}

SpectrogramBatch frames_of(const std::vector<NamedClip>& clips, std::size_t window_len,
                           std::size_t hop) {
  if (clips.empty()) throw ConfigError("frames_of: empty clip list");
  SpectrogramBatch out;
  out.bins = window_len / 2 + 1;
  for (const auto& c : clips) {
    const StftFrames f = stft(c.clip, window_len, hop);
    out.spans.push_back(ClipSpan{c.id, out.frames, f.frames});
    out.power.insert(out.power.end(), f.power.begin(), f.power.end());
    out.phase.insert(out.phase.end(), f.phase.begin(), f.phase.end());
    out.frames += f.frames;
  }
  return out;
}

}  // namespace sdmvae
