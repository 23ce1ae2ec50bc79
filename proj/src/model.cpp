#include "sdmvae/model.hpp"

#include <cmath>
#include <string>

#include "sdmvae/errors.hpp"

namespace sdmvae {

namespace {

constexpr double kLogEps = 1e-8;  // encoder input floor: log(s + kLogEps)

Tensor init_weight(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor::param(rows, cols, std::move(v));
}

Tensor init_bias(std::size_t rows) {
  return Tensor::param(rows, 1, std::vector<double>(rows, 0.0));
}

void check_finite(const Tensor& t, const char* layer) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(layer) + " produced a non-finite value");
    }
  }
}

void check_nonnegative(const Tensor& s, const char* what) {
  const double* d = s.data();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (d[i] < 0.0) {
      throw DomainError(std::string(what) + ": negative entry at index " + std::to_string(i));
    }
  }
}

}  // namespace

ModelParams ModelParams::init(std::size_t n, std::size_t latent_dim, std::size_t code_dim,
                              Rng& rng, std::size_t hidden) {
  ModelParams p;
  p.n = n;
  p.hidden = hidden;
  p.code_dim = code_dim;
  p.latent_dim = latent_dim;
  p.W1 = init_weight(hidden, n, rng);
  p.b1 = init_bias(hidden);
  p.W_mu = init_weight(code_dim, hidden, rng);
  p.b_mu = init_bias(code_dim);
  p.W_logvar = init_weight(code_dim, hidden, rng);
  p.b_logvar = init_bias(code_dim);
  p.V1 = init_weight(hidden, latent_dim, rng);
  p.c1 = init_bias(hidden);
  p.V_logvar = init_weight(n, hidden, rng);
  p.c_logvar = init_bias(n);
  return p;
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  return {
      {"enc.W1", &W1},           {"enc.b1", &b1},
      {"enc.W_mu", &W_mu},       {"enc.b_mu", &b_mu},
      {"enc.W_logvar", &W_logvar}, {"enc.b_logvar", &b_logvar},
      {"dec.V1", &V1},           {"dec.c1", &c1},
      {"dec.V_logvar", &V_logvar}, {"dec.c_logvar", &c_logvar},
  };
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
  auto mut = const_cast<ModelParams*>(this)->named();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mut.size());
  for (auto& [name, t] : mut) out.emplace_back(name, t);
  return out;
}

ModelParams ModelParams::clone() const {
  ModelParams copy = *this;
  for (auto& [name, t] : copy.named()) *t = t->clone();
  return copy;
}

void ModelParams::zero_grads() {
  for (auto& [name, t] : named()) t->zero_grad();
}

GaussianPosterior encode(const ModelParams& p, const Tensor& s) {
  if (s.cols() != p.n) {
    throw ShapeError("encode: input width " + std::to_string(s.cols()) + ", expected " +
                     std::to_string(p.n));
  }
  check_nonnegative(s, "encode");

  const Tensor x = transpose(log(add_scalar(s, kLogEps)));  // n x batch
  const Tensor h = tanh(add_bias(matmul(p.W1, x), p.b1));   // hidden x batch
  check_finite(h, "encoder.hidden");
  const Tensor mu_t = add_bias(matmul(p.W_mu, h), p.b_mu);
  check_finite(mu_t, "encoder.mu");
  const Tensor logvar_t = add_bias(matmul(p.W_logvar, h), p.b_logvar);
  check_finite(logvar_t, "encoder.logvar");
  const Tensor sigma_t = exp(mul_scalar(logvar_t, 0.5));
  check_finite(sigma_t, "encoder.sigma");

  return GaussianPosterior{transpose(mu_t), transpose(sigma_t)};
}

Tensor reparameterize(const GaussianPosterior& post, const Tensor& eps) {
  if (eps.rows() != post.mu.rows() || eps.cols() != post.mu.cols()) {
    throw ShapeError("reparameterize: eps " + std::to_string(eps.rows()) + "x" +
                     std::to_string(eps.cols()) + " does not match the posterior");
  }
  return add(post.mu, mul(post.sigma, eps));
}

Tensor decode(const ModelParams& p, const Tensor& z) {
  if (z.cols() != p.latent_dim) {
    throw ShapeError("decode: latent width " + std::to_string(z.cols()) + ", expected " +
                     std::to_string(p.latent_dim));
  }
  const Tensor g = tanh(add_bias(matmul(p.V1, transpose(z)), p.c1));
  check_finite(g, "decoder.hidden");
  const Tensor logvar_t = add_bias(matmul(p.V_logvar, g), p.c_logvar);
  check_finite(logvar_t, "decoder.logvar");
  return transpose(exp(logvar_t));
}

Tensor recon_loglik(const Tensor& s, const Tensor& var) {
  if (s.rows() != var.rows() || s.cols() != var.cols()) {
    throw ShapeError("recon_loglik: s and var shapes differ");
  }
  check_nonnegative(s, "recon_loglik");
  const double* v = var.data();
  for (std::size_t i = 0; i < var.size(); ++i) {
    if (v[i] <= 0.0) {
      throw DomainError("recon_loglik: non-positive variance at index " + std::to_string(i));
    }
  }
  const Tensor neg = reduce_sum(add(log(var), div(s, var)), Axis::all);
  return mul_scalar(neg, -1.0);
}

Tensor kl_diag_gauss(const GaussianPosterior& post, const PriorVariances& prior) {
  const Tensor& gamma = prior.gamma;
  if (gamma.rows() != post.mu.rows() || gamma.cols() != post.mu.cols()) {
    throw ShapeError("kl_diag_gauss: gamma shape does not match the posterior");
  }
  const Tensor s2 = square(post.sigma);
  const Tensor ratio = div(add(s2, square(post.mu)), gamma);
  const Tensor terms = add_scalar(add(sub(log(gamma), log(s2)), ratio), -1.0);
  return mul_scalar(reduce_sum(terms, Axis::all), 0.5);
}

Tensor kl_standard_normal(const GaussianPosterior& post) {
  const Tensor s2 = square(post.sigma);
  const Tensor terms = add_scalar(sub(add(s2, square(post.mu)), log(s2)), -1.0);
  return mul_scalar(reduce_sum(terms, Axis::all), 0.5);
}

PriorVariances update_gamma(const GaussianPosterior& post) {
  const std::size_t n = post.mu.size();
  std::vector<double> g(n);
  const double* mu = post.mu.data();
  const double* sg = post.sigma.data();
  for (std::size_t i = 0; i < n; ++i) g[i] = mu[i] * mu[i] + sg[i] * sg[i];
  return PriorVariances{Tensor::from_values(post.mu.rows(), post.mu.cols(), std::move(g))};
}

Tensor loss_sdm(const ModelParams& p, const Dictionary& dict, const Tensor& s, const Tensor& eps,
                LossParts* parts) {
  const GaussianPosterior post = encode(p, s);
  const PriorVariances gamma = update_gamma(post);
  const Tensor a = reparameterize(post, eps);
  const Tensor z = apply(dict, a);
  const Tensor var = decode(p, z);
  const Tensor recon = recon_loglik(s, var);
  const Tensor kl = kl_diag_gauss(post, gamma);
  if (parts != nullptr) {
    parts->recon = recon.value();
    parts->kl = kl.value();
  }
  const double inv_batch = 1.0 / static_cast<double>(s.rows());
  return mul_scalar(add(mul_scalar(recon, -1.0), kl), inv_batch);
}

Tensor loss_standard_vae(const ModelParams& p, const Tensor& s, const Tensor& eps,
                         LossParts* parts) {
  if (p.code_dim != p.latent_dim) {
    throw ContractError("loss_standard_vae: code_dim must equal latent_dim");
  }
  const GaussianPosterior post = encode(p, s);
  const Tensor z = reparameterize(post, eps);
  const Tensor var = decode(p, z);
  const Tensor recon = recon_loglik(s, var);
  const Tensor kl = kl_standard_normal(post);
  if (parts != nullptr) {
    parts->recon = recon.value();
    parts->kl = kl.value();
  }
  const double inv_batch = 1.0 / static_cast<double>(s.rows());
  return mul_scalar(add(mul_scalar(recon, -1.0), kl), inv_batch);
}

}  // namespace sdmvae
