#include "sdmvae/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sdmvae/errors.hpp"
#include "sdmvae/kernels.hpp"

namespace sdmvae {

namespace {

// Seed offset for validation eps draws; any fixed constant works, it only
// decorrelates them from the training stream.
constexpr std::uint64_t kValSeedSalt = 0x9e3779b97f4a7c15ull;

Tensor gather_rows(const SpectrogramBatch& data, const std::vector<std::size_t>& idx,
                   std::size_t begin, std::size_t count) {
  std::vector<double> rows(count * data.bins);
  for (std::size_t r = 0; r < count; ++r) {
    const double* src = data.power.data() + idx[begin + r] * data.bins;
    std::copy(src, src + data.bins, rows.data() + r * data.bins);
  }
  return Tensor::from_values(count, data.bins, std::move(rows));
}

Tensor draw_eps(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> e(rows * cols);
  for (double& v : e) v = rng.normal();
  return Tensor::from_values(rows, cols, std::move(e));
}

Tensor batch_loss(const ModelParams& params, const Dictionary* dict, const TrainConfig& cfg,
                  const Tensor& s, const Tensor& eps, LossParts* parts) {
  if (cfg.variant == Variant::standard) return loss_standard_vae(params, s, eps, parts);
  if (dict == nullptr) throw ContractError("train: SDM variant needs a dictionary");
  return loss_sdm(params, *dict, s, eps, parts);
}

}  // namespace

Adam::Adam(ModelParams& params, AdamConfig cfg) : cfg_(cfg) {
  for (auto& [name, t] : params.named()) {
    if (!t->requires_grad()) {
      throw ContractError("Adam: parameter " + name + " does not track gradients");
    }
    slots_.push_back(Slot{t, std::vector<double>(t->size(), 0.0),
                          std::vector<double>(t->size(), 0.0)});
  }
}

void Adam::step() {
  for (const Slot& s : slots_) {
    if (!s.param->has_grad()) {
      throw ContractError("Adam: step() called before gradients were populated");
    }
  }
  ++t_;
  const double bc1 = 1.0 / (1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
  const double bc2 = 1.0 / (1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
  const auto& K = kernels::active();
  for (Slot& s : slots_) {
    K.adam(s.param->mutable_data(), s.m.data(), s.v.data(), s.param->grad().data(), cfg_.lr,
           cfg_.beta1, cfg_.beta2, cfg_.eps, bc1, bc2, s.param->size());
    s.param->zero_grad();
  }
}

EarlyStopper::EarlyStopper(std::size_t patience)
    : patience_(patience), best_(std::numeric_limits<double>::infinity()) {
  if (patience == 0) throw ContractError("EarlyStopper: patience must be >= 1");
}

bool EarlyStopper::observe(double val_loss) {
  ++seen_;
  if (val_loss < best_) {
    best_ = val_loss;
    best_index_ = seen_;
    since_best_ = 0;
    improved_last_ = true;
    return false;
  }
  improved_last_ = false;
  ++since_best_;
  return since_best_ >= patience_;
}

double train_epoch(ModelParams& params, Adam& opt, const Dictionary* dict,
                   const SpectrogramBatch& data, const TrainConfig& cfg, Rng& rng) {
  if (data.frames == 0) throw ContractError("train_epoch: empty dataset");
  const std::size_t code_dim = params.code_dim;

  std::vector<std::size_t> idx(data.frames);
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);

  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t begin = 0; begin < data.frames; begin += cfg.batch_size) {
    const std::size_t count = std::min(cfg.batch_size, data.frames - begin);
    const Tensor s = gather_rows(data, idx, begin, count);
    const Tensor eps = draw_eps(count, code_dim, rng);

    Tape tape;
    LossParts parts;
    const Tensor loss = batch_loss(params, dict, cfg, s, eps, &parts);
    const double value = loss.value();
    if (!std::isfinite(value)) {
      throw NumericError("train_epoch: non-finite loss at batch " + std::to_string(batches) +
                         " (recon " + std::to_string(parts.recon) + ", kl " +
                         std::to_string(parts.kl) + ")");
    }
    tape.backward(loss);
    opt.step();
    loss_sum += value;
    ++batches;
  }
  return loss_sum / static_cast<double>(batches);
}

double eval_loss(const ModelParams& params, const Dictionary* dict, const SpectrogramBatch& data,
                 const TrainConfig& cfg) {
  if (data.frames == 0) throw ContractError("eval_loss: empty dataset");
  Rng rng(cfg.rng_seed ^ kValSeedSalt);
  std::vector<std::size_t> idx(data.frames);
  std::iota(idx.begin(), idx.end(), 0);

  double total = 0.0;
  for (std::size_t begin = 0; begin < data.frames; begin += cfg.batch_size) {
    const std::size_t count = std::min(cfg.batch_size, data.frames - begin);
    const Tensor s = gather_rows(data, idx, begin, count);
    const Tensor eps = draw_eps(count, params.code_dim, rng);
    const Tensor loss = batch_loss(params, dict, cfg, s, eps, nullptr);
    total += loss.value() * static_cast<double>(count);
  }
  return total / static_cast<double>(data.frames);
}

FitResult fit(ModelParams params, const Dictionary* dict, const SpectrogramBatch& train,
              const SpectrogramBatch& val, const TrainConfig& cfg) {
  if (train.frames == 0 || val.frames == 0) {
    throw ContractError("fit: train and validation sets must be non-empty");
  }
  Adam opt(params, cfg.adam);
  Rng rng(cfg.rng_seed);
  EarlyStopper stopper(cfg.patience);

  FitResult result;
  result.best = params.clone();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double train_loss = train_epoch(params, opt, dict, train, cfg, rng);
    const double val_loss = eval_loss(params, dict, val, cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(EpochStats{epoch, train_loss, val_loss, secs});

    const bool stop = stopper.observe(val_loss);
    if (stopper.improved_last()) {
      result.best = params.clone();
      result.best_epoch = epoch;
    }
    if (stop) break;
  }
  return result;
}

}  // namespace sdmvae
