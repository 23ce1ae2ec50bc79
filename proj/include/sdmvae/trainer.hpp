#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sdmvae/corpus.hpp"
#include "sdmvae/model.hpp"
#include "sdmvae/rng.hpp"

namespace sdmvae {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over the model parameters, with bias correction. step() consumes the
// gradients accumulated by backward and zeroes them afterwards.
class Adam {
 public:
  explicit Adam(ModelParams& params, AdamConfig cfg = {});
  void step();
  std::size_t steps() const { return t_; }
  std::size_t tracked_params() const { return slots_.size(); }

 private:
  struct Slot {
    Tensor* param;
    std::vector<double> m, v;
  };
  std::vector<Slot> slots_;
  AdamConfig cfg_;
  std::size_t t_ = 0;
};

enum class Variant { standard, sdm_dct, sdm_identity };

struct TrainConfig {
  std::size_t batch_size = 128;
  std::size_t patience = 20;
  std::size_t max_epochs = 500;
  std::uint64_t rng_seed = 0;
  Variant variant = Variant::standard;
  std::size_t m = 32;  // latent dimension
  std::size_t k = 32;  // dictionary atoms (ignored for the standard model)
  AdamConfig adam;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;  // wall time; excluded from determinism comparisons
};

struct FitResult {
  ModelParams best;  // parameters from the best validation epoch
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
};

// Stops after `patience` consecutive epochs without a strictly lower
// validation loss (min_delta = 0).
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience);
  // Returns true when training should stop after this observation.
  bool observe(double val_loss);
  bool improved_last() const { return improved_last_; }
  std::size_t best_index() const { return best_index_; }  // 1-based
  double best() const { return best_; }

 private:
  std::size_t patience_;
  double best_;
  std::size_t best_index_ = 0;
  std::size_t since_best_ = 0;
  std::size_t seen_ = 0;
  bool improved_last_ = false;
};

// One pass over the training frames: shuffle, then per batch run the
// variant's loss (gamma update, fresh eps draw, reparametrization,
// dictionary map), backward, and one Adam step. Returns the mean batch
// loss. dict must be non-null for the SDM variants. A non-finite loss
// aborts with batch diagnostics.
double train_epoch(ModelParams& params, Adam& opt, const Dictionary* dict,
                   const SpectrogramBatch& data, const TrainConfig& cfg, Rng& rng);

// Per-frame average loss over a dataset, forward-only. The eps draws come
// from a fixed seed derived from cfg.rng_seed so every call sees the same
// noise (common random numbers across epochs).
double eval_loss(const ModelParams& params, const Dictionary* dict, const SpectrogramBatch& data,
                 const TrainConfig& cfg);

// Trains until the validation loss stops improving for cfg.patience epochs
// or cfg.max_epochs is reached; returns the best-validation parameters and
// the per-epoch history. Deterministic in (seed, config, data).
FitResult fit(ModelParams params, const Dictionary* dict, const SpectrogramBatch& train,
              const SpectrogramBatch& val, const TrainConfig& cfg);

}  // namespace sdmvae
