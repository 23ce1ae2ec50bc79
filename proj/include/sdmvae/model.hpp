#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "sdmvae/dictionary.hpp"
#include "sdmvae/rng.hpp"
#include "sdmvae/tensor.hpp"

namespace sdmvae {

// Encoder/decoder weights: one tanh hidden layer of 128 units on each side,
// two linear heads on the encoder (mean, log-variance) and a log-variance
// head on the decoder. code_dim is the encoder output width (the number of
// dictionary atoms k, or m for the plain model); latent_dim is the decoder
// input width m.
struct ModelParams {
  Tensor W1, b1, W_mu, b_mu, W_logvar, b_logvar;  // encoder
  Tensor V1, c1, V_logvar, c_logvar;              // decoder

  std::size_t n = 0;           // spectrum bins
  std::size_t hidden = 0;
  std::size_t code_dim = 0;
  std::size_t latent_dim = 0;

  static constexpr std::size_t kHidden = 128;

  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases. The draw
  // order (W1, W_mu, W_logvar, V1, V_logvar) is fixed for reproducibility.
  static ModelParams init(std::size_t n, std::size_t latent_dim, std::size_t code_dim, Rng& rng,
                          std::size_t hidden = kHidden);

  // Stable name -> tensor listing used by the optimizer and the checkpoint.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;

  ModelParams clone() const;
  void zero_grads();
};

// Diagonal Gaussian over code vectors; both fields are batch x code_dim and
// sigma is strictly positive by construction (exp of half the log-variance
// head).
struct GaussianPosterior {
  Tensor mu;
  Tensor sigma;
};

// Per-frame prior variances (batch x code_dim, > 0). Recomputed from the
// posterior every mini-batch and held constant through the gradient step.
struct PriorVariances {
  Tensor gamma;
};

// h = tanh(W1 log(s + 1e-8)^T + b1); mu = W_mu h + b_mu;
// sigma = exp((W_logvar h + b_logvar) / 2). s is batch x n, >= 0.
GaussianPosterior encode(const ModelParams& p, const Tensor& s);

// a = mu + sigma .* eps; eps carries no gradient.
Tensor reparameterize(const GaussianPosterior& post, const Tensor& eps);

// var = exp(V_logvar tanh(V1 z^T + c1) + c_logvar)^T: the model's
// power-spectrogram estimate, batch x n, > 0.
Tensor decode(const ModelParams& p, const Tensor& z);

// -sum_{i,f} [log var + s / var], additive constants dropped (the
// Itakura-Saito-form log-likelihood of the zero-mean complex Gaussian).
Tensor recon_loglik(const Tensor& s, const Tensor& var);

// 0.5 sum [ log(gamma/sigma^2) + (sigma^2 + mu^2)/gamma - 1 ]
Tensor kl_diag_gauss(const GaussianPosterior& post, const PriorVariances& prior);

// 0.5 sum [ sigma^2 + mu^2 - 1 - log sigma^2 ]
Tensor kl_standard_normal(const GaussianPosterior& post);

// gamma = mu^2 + sigma^2, detached from the gradient path: the closed-form
// minimizer of kl_diag_gauss over gamma for a fixed posterior.
PriorVariances update_gamma(const GaussianPosterior& post);

// Loss term values for diagnostics.
struct LossParts {
  double recon = 0.0;  // recon_loglik value
  double kl = 0.0;
};

// (-recon_loglik + KL) / batch, KL against the freshly updated gamma prior.
Tensor loss_sdm(const ModelParams& p, const Dictionary& dict, const Tensor& s, const Tensor& eps,
                LossParts* parts = nullptr);

// (-recon_loglik + KL) / batch with the unit-variance prior; code_dim must
// equal latent_dim.
Tensor loss_standard_vae(const ModelParams& p, const Tensor& s, const Tensor& eps,
                         LossParts* parts = nullptr);

}  // namespace sdmvae
