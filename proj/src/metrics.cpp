#include "sdmvae/metrics.hpp"

#include <cmath>

#include "sdmvae/errors.hpp"
#include "sdmvae/signal.hpp"

namespace sdmvae {

namespace {

constexpr double kPowerFloor = 1e-10;

}  // namespace

std::optional<double> hoyer(std::span<const double> v) {
  const std::size_t d = v.size();
  if (d < 2) throw ContractError("hoyer: vector must have at least 2 entries");
  double l1 = 0.0, l2sq = 0.0;
  for (double x : v) {
    l1 += std::abs(x);
    l2sq += x * x;
  }
  if (l2sq == 0.0) return std::nullopt;
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  return (sqrt_d - l1 / std::sqrt(l2sq)) / (sqrt_d - 1.0);
}

double log_spectral_distance(std::span<const double> s, std::span<const double> s_hat,
                             std::size_t frames, std::size_t bins) {
  if (s.size() != frames * bins || s_hat.size() != frames * bins) {
    throw ShapeError("log_spectral_distance: inputs do not match frames x bins");
  }
  double acc = 0.0;
  for (std::size_t t = 0; t < frames; ++t) {
    double frame_acc = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      const double num = std::max(s[t * bins + b], kPowerFloor);
      const double den = std::max(s_hat[t * bins + b], kPowerFloor);
      const double diff = 10.0 * std::log10(num / den);
      frame_acc += diff * diff;
    }
    acc += std::sqrt(frame_acc / static_cast<double>(bins));
  }
  return acc / static_cast<double>(frames);
}

std::optional<double> si_sdr(std::span<const double> reference, std::span<const double> estimate) {
  if (reference.size() != estimate.size()) {
    throw ShapeError("si_sdr: reference and estimate lengths differ");
  }
  double dot = 0.0, ref_energy = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    dot += estimate[i] * reference[i];
    ref_energy += reference[i] * reference[i];
  }
  if (ref_energy == 0.0) return std::nullopt;

  const double alpha = dot / ref_energy;
  double target_energy = 0.0, residual_energy = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double target = alpha * reference[i];
    const double residual = estimate[i] - target;
    target_energy += target * target;
    residual_energy += residual * residual;
  }
  if (residual_energy <= 0.0) return kSiSdrCapDb;
  const double db = 10.0 * std::log10(target_energy / residual_energy);
  return std::min(db, kSiSdrCapDb);
}

EvalReport evaluate(const ModelParams& params, const Dictionary* dict,
                    const std::vector<NamedClip>& clips, std::size_t window_len,
                    std::size_t hop) {
  EvalReport report;
  double hoyer_sum = 0.0, hoyer_sq = 0.0, lsd_sum = 0.0, sisdr_sum = 0.0;
  std::size_t hoyer_n = 0, sisdr_n = 0;

  for (const NamedClip& nc : clips) {
    const StftFrames f = stft(nc.clip, window_len, hop);
    const Tensor s = Tensor::from_values(f.frames, f.bins, std::vector<double>(f.power));
    const GaussianPosterior post = encode(params, s);
    const Tensor code = post.mu;  // posterior mean; no sampling at eval
    const Tensor z = dict != nullptr ? apply(*dict, code) : code;
    const Tensor s_hat = decode(params, z);

    EvalRow row;
    row.id = nc.id;
    row.frames = f.frames;
    row.lsd_db = log_spectral_distance(s.values(), s_hat.values(), f.frames, f.bins);

    // Per-frame sparsity of the code, averaged over the frames where it is
    // defined.
    double clip_hoyer = 0.0;
    std::size_t defined = 0;
    for (std::size_t t = 0; t < f.frames; ++t) {
      const std::span<const double> frame_code(code.data() + t * code.cols(), code.cols());
      if (const auto h = hoyer(frame_code)) {
        clip_hoyer += *h;
        ++defined;
      }
    }
    if (defined > 0) row.hoyer = clip_hoyer / static_cast<double>(defined);

    const AudioClip resynth = resynthesize(std::vector<double>(s_hat.values().begin(),
                                                               s_hat.values().end()),
                                           f);
    const Trimmed trimmed = trim_interior(resynth, nc.clip.samples.size(), window_len);
    const std::span<const double> ref(nc.clip.samples.data() + trimmed.offset,
                                      trimmed.clip.samples.size());
    row.sisdr_db = si_sdr(ref, trimmed.clip.samples);

    if (row.hoyer) {
      hoyer_sum += *row.hoyer;
      hoyer_sq += *row.hoyer * *row.hoyer;
      ++hoyer_n;
    }
    if (row.sisdr_db) {
      sisdr_sum += *row.sisdr_db;
      ++sisdr_n;
    }
    lsd_sum += row.lsd_db;
    report.rows.push_back(std::move(row));
  }

  const double n_rows = static_cast<double>(report.rows.size());
  report.lsd_mean = report.rows.empty() ? 0.0 : lsd_sum / n_rows;
  if (hoyer_n > 0) {
    report.hoyer_mean = hoyer_sum / static_cast<double>(hoyer_n);
    if (hoyer_n > 1) {
      const double var = (hoyer_sq - hoyer_sum * hoyer_sum / static_cast<double>(hoyer_n)) /
                         static_cast<double>(hoyer_n - 1);
      report.hoyer_std = std::sqrt(std::max(var, 0.0));
    }
  }
  if (sisdr_n > 0) report.sisdr_mean = sisdr_sum / static_cast<double>(sisdr_n);
  return report;
}

}  // namespace sdmvae
