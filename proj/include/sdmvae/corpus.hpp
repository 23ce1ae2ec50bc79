#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdmvae/signal.hpp"

namespace sdmvae {

struct NamedClip {
  std::string id;       // "<speaker>_<utterance>"
  std::string speaker;
  AudioClip clip;
};

struct SplitSpec {
  double train = 0.7;
  double validation = 0.15;
  double test = 0.15;
  std::uint64_t seed = 0;
};

// Splits are disjoint by speaker.
struct DatasetSplit {
  std::vector<NamedClip> train;
  std::vector<NamedClip> validation;
  std::vector<NamedClip> test;
};

// Concatenated power frames of one split plus the frame range each clip
// occupies.
struct ClipSpan {
  std::string id;
  std::size_t begin = 0;
  std::size_t count = 0;
};

struct SpectrogramBatch {
  std::vector<double> power;  // frames x bins
  std::vector<double> phase;  // frames x bins
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<ClipSpan> spans;
};

// Speaker-disjoint split of the given clips: speakers are sorted by id,
// shuffled with the seed, then sliced as floor(ratio * S) for train and
// validation with the remainder going to test. Throws ConfigError when any
// split ends up empty.
DatasetSplit split_by_speaker(std::vector<NamedClip> clips, const SplitSpec& spec);

// Loads every *.wav in a directory (16 kHz mono PCM16; anything else is a
// per-file error). The speaker id is the filename up to the first '_'.
DatasetSplit load_wav_dir(const std::filesystem::path& dir, const SplitSpec& spec);

// Synthetic speech-like clips: a harmonic source with a wandering F0 in
// 80-300 Hz, shaped by 2-4 fixed formant resonances per speaker, a slow
// syllable-rate amplitude envelope and raised-cosine edge fades, peak
// normalized. Deterministic in the seed. Clips cycle over n_speakers
// synthetic speakers so that speaker-disjoint splits are possible.
std::vector<NamedClip> synth_speech_like(std::uint64_t seed, std::size_t n_clips,
                                         double duration_s, std::size_t n_speakers = 8);

// STFT power frames of all clips, concatenated in clip order.
SpectrogramBatch frames_of(const std::vector<NamedClip>& clips, std::size_t window_len,
                           std::size_t hop);

}  // namespace sdmvae
