#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdmvae/corpus.hpp"
#include "sdmvae/dictionary.hpp"
#include "sdmvae/model.hpp"

namespace sdmvae {

// Normalized l1/l2 sparsity in [0, 1]: (sqrt(d) - |v|_1 / |v|_2) / (sqrt(d) - 1).
// One-hot -> 1, constant -> 0. Undefined (nullopt) for the all-zero vector;
// d must be >= 2.
std::optional<double> hoyer(std::span<const double> v);

// Mean over frames of the RMS (over bins) of 10*log10(s / s_hat), both
// floored at 1e-10. Zero iff the spectra match.
double log_spectral_distance(std::span<const double> s, std::span<const double> s_hat,
                             std::size_t frames, std::size_t bins);

// Scale-invariant SDR in dB: the estimate is projected onto the reference,
// 10*log10(|target|^2 / |residual|^2), capped at +100 dB. Undefined for a
// zero-energy reference.
std::optional<double> si_sdr(std::span<const double> reference, std::span<const double> estimate);

inline constexpr double kSiSdrCapDb = 100.0;

struct EvalRow {
  std::string id;
  std::size_t frames = 0;
  std::optional<double> hoyer;  // mean over frames of the posterior-mean code
  double lsd_db = 0.0;
  std::optional<double> sisdr_db;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double hoyer_mean = 0.0;
  double hoyer_std = 0.0;
  double lsd_mean = 0.0;
  double sisdr_mean = 0.0;
};

// Analysis-resynthesis evaluation: per clip, STFT -> encode -> posterior
// mean -> (dictionary map for SDM) -> decode -> resynthesize with the
// original phase. Sparsity is measured on the posterior-mean code (a for
// SDM, z for the standard model). No sampling anywhere, so repeated runs
// are identical. dict is null for the standard model.
EvalReport evaluate(const ModelParams& params, const Dictionary* dict,
                    const std::vector<NamedClip>& clips, std::size_t window_len, std::size_t hop);

}  // namespace sdmvae
