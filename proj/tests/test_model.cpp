#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "sdmvae/errors.hpp"
#include "sdmvae/model.hpp"
#include "sdmvae/rng.hpp"

using namespace sdmvae;

namespace {

double rel_err(double got, double want) {
  const double denom = std::max({std::abs(got), std::abs(want), 1e-8});
  return std::abs(got - want) / denom;
}

Tensor random_power(std::size_t batch, std::size_t n, Rng& rng) {
  std::vector<double> v(batch * n);
  for (double& x : v) x = rng.uniform(0.0, 3.0);
  return Tensor::from_values(batch, n, std::move(v));
}

Tensor random_eps(std::size_t batch, std::size_t d, Rng& rng) {
  std::vector<double> v(batch * d);
  for (double& x : v) x = rng.normal();
  return Tensor::from_values(batch, d, std::move(v));
}

GaussianPosterior make_posterior(std::size_t batch, std::size_t d, Rng& rng) {
  std::vector<double> mu(batch * d), sigma(batch * d);
  for (double& x : mu) x = rng.uniform(-2.0, 2.0);
  for (double& x : sigma) x = rng.uniform(0.3, 1.8);
  return GaussianPosterior{Tensor::from_values(batch, d, std::move(mu)),
                           Tensor::from_values(batch, d, std::move(sigma))};
}

// Exact diagonal-Gaussian KL, scalar loops (oracle, independent of the
// tensor engine).
double kl_oracle(const GaussianPosterior& p, const std::vector<double>& gamma) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.mu.size(); ++i) {
    const double mu = p.mu.values()[i];
    const double s2 = p.sigma.values()[i] * p.sigma.values()[i];
    acc += std::log(gamma[i] / s2) + (s2 + mu * mu) / gamma[i] - 1.0;
  }
  return 0.5 * acc;
}

// Monte Carlo estimate of E_q[log q(a) - log p(a)].
double kl_monte_carlo(double mu, double sigma, double gamma, std::size_t samples, Rng& rng) {
  double acc = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double a = mu + sigma * rng.normal();
    const double log_q =
        -0.5 * std::log(2.0 * 3.14159265358979323846 * sigma * sigma) -
        (a - mu) * (a - mu) / (2.0 * sigma * sigma);
    const double log_p = -0.5 * std::log(2.0 * 3.14159265358979323846 * gamma) -
                         a * a / (2.0 * gamma);
    acc += log_q - log_p;
  }
  return acc / static_cast<double>(samples);
}

ModelParams zero_params(std::size_t n, std::size_t m, std::size_t code_dim) {
  Rng rng(1);
  ModelParams p = ModelParams::init(n, m, code_dim, rng, /*hidden=*/8);
  for (auto& [name, t] : p.named()) {
    double* d = t->mutable_data();
    for (std::size_t i = 0; i < t->size(); ++i) d[i] = 0.0;
  }
  return p;
}

}  // namespace

TEST_CASE("encode with zero weights gives mu=0 sigma=1") {
  const ModelParams p = zero_params(6, 3, 3);
  Rng rng(2);
  const Tensor s = random_power(4, 6, rng);
  const GaussianPosterior post = encode(p, s);
  CHECK(post.mu.rows() == 4);
  CHECK(post.mu.cols() == 3);
  CHECK(post.sigma.rows() == 4);
  CHECK(post.sigma.cols() == 3);
  for (double v : post.mu.values()) CHECK(v == 0.0);
  for (double v : post.sigma.values()) CHECK(v == 1.0);
}

TEST_CASE("encode is deterministic and rejects negative power") {
  Rng rng(3);
  ModelParams p = ModelParams::init(6, 3, 3, rng, 8);
  const Tensor s = random_power(5, 6, rng);
  const GaussianPosterior a = encode(p, s);
  const GaussianPosterior b = encode(p, s);
  for (std::size_t i = 0; i < a.mu.size(); ++i) {
    CHECK(a.mu.values()[i] == b.mu.values()[i]);
    CHECK(a.sigma.values()[i] == b.sigma.values()[i]);
  }

  const Tensor bad = Tensor::from_values(1, 6, {0.1, -0.2, 0.3, 0.4, 0.5, 0.6});
  CHECK_THROWS_AS(encode(p, bad), DomainError);
}

TEST_CASE("encode reports non-finite activations with the layer name") {
  Rng rng(4);
  ModelParams p = ModelParams::init(6, 3, 3, rng, 8);
  p.W1.mutable_data()[0] = std::numeric_limits<double>::quiet_NaN();
  const Tensor s = random_power(2, 6, rng);
  try {
    encode(p, s);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("encoder.hidden") != std::string::npos);
  }
}

TEST_CASE("reparameterize") {
  Rng rng(5);
  const GaussianPosterior post = make_posterior(3, 4, rng);

  const Tensor zero_eps = Tensor::zeros(3, 4);
  const Tensor a = reparameterize(post, zero_eps);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values()[i] == post.mu.values()[i]);

  // mu = 0, sigma = 1 passes eps through
  const GaussianPosterior unit{Tensor::zeros(3, 4), Tensor::constant(3, 4, 1.0)};
  const Tensor eps = random_eps(3, 4, rng);
  const Tensor b = reparameterize(unit, eps);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.values()[i] == eps.values()[i]);

  CHECK_THROWS_AS(reparameterize(post, Tensor::zeros(3, 5)), ShapeError);
}

TEST_CASE("reparameterize sample mean approaches mu") {
  // one element, 10^6 draws: sample mean within 4*sigma/1000 of mu
  Rng rng(6);
  const double mu = 0.7, sigma = 1.3;
  double acc = 0.0;
  const std::size_t n = 1000000;
  for (std::size_t i = 0; i < n; ++i) acc += mu + sigma * rng.normal();
  CHECK(std::abs(acc / n - mu) < 4.0 * sigma / 1000.0);
}

TEST_CASE("decode with zero weights gives unit variance") {
  const ModelParams p = zero_params(6, 3, 3);
  const Tensor z = Tensor::constant(4, 3, 0.7);
  const Tensor var = decode(p, z);
  CHECK(var.rows() == 4);
  CHECK(var.cols() == 6);
  for (double v : var.values()) CHECK(v == 1.0);

  CHECK_THROWS_AS(decode(p, Tensor::zeros(4, 5)), ShapeError);
}

TEST_CASE("decode jacobian is non-degenerate at random init") {
  Rng rng(7);
  ModelParams p = ModelParams::init(6, 3, 3, rng, 8);
  const Tensor z0 = Tensor::constant(1, 3, 0.2);
  const Tensor base = decode(p, z0);
  for (std::size_t dim = 0; dim < 3; ++dim) {
    std::vector<double> zp(z0.values().begin(), z0.values().end());
    zp[dim] += 1e-5;
    const Tensor shifted = decode(p, Tensor::from_values(1, 3, zp));
    double col_norm = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
      const double d = (shifted.values()[i] - base.values()[i]) / 1e-5;
      col_norm += d * d;
    }
    CHECK(col_norm > 0.0);
  }
}

TEST_CASE("recon_loglik values") {
  // var = s (perfect fit): -sum(log s + 1)
  const Tensor s = Tensor::from_values(2, 2, {0.5, 1.0, 2.0, 4.0});
  double want = 0.0;
  for (double v : s.values()) want -= std::log(v) + 1.0;
  CHECK(recon_loglik(s, s).value() == doctest::Approx(want).epsilon(1e-12));

  // s = 0: -sum(log var)
  const Tensor zero = Tensor::zeros(2, 2);
  const Tensor var = Tensor::from_values(2, 2, {0.5, 1.5, 2.5, 3.5});
  double want0 = 0.0;
  for (double v : var.values()) want0 -= std::log(v);
  CHECK(recon_loglik(zero, var).value() == doctest::Approx(want0).epsilon(1e-12));

  // random 3x4 against a scalar double loop
  Rng rng(8);
  const Tensor rs = random_power(3, 4, rng);
  std::vector<double> rv(12);
  for (double& v : rv) v = rng.uniform(0.2, 2.0);
  const Tensor rvar = Tensor::from_values(3, 4, rv);
  double oracle = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      oracle -= std::log(rvar.at(i, j)) + rs.at(i, j) / rvar.at(i, j);
    }
  }
  CHECK(rel_err(recon_loglik(rs, rvar).value(), oracle) < 1e-12);

  const Tensor nonpos = Tensor::from_values(2, 2, {1.0, 0.0, 1.0, 1.0});
  CHECK_THROWS_AS(recon_loglik(s, nonpos), DomainError);
}

TEST_CASE("kl closed forms") {
  // mu=0 sigma=1 gamma=1 -> 0
  const GaussianPosterior std_post{Tensor::zeros(2, 3), Tensor::constant(2, 3, 1.0)};
  const PriorVariances unit{Tensor::constant(2, 3, 1.0)};
  CHECK(std::abs(kl_diag_gauss(std_post, unit).value()) < 1e-15);
  CHECK(std::abs(kl_standard_normal(std_post).value()) < 1e-15);

  // mu=1 sigma=1 gamma=1 -> 1/2 per element
  const GaussianPosterior ones{Tensor::constant(2, 3, 1.0), Tensor::constant(2, 3, 1.0)};
  CHECK(kl_diag_gauss(ones, unit).value() == doctest::Approx(3.0).epsilon(1e-12));

  // kl_standard_normal equals kl_diag_gauss with gamma = 1
  Rng rng(9);
  const GaussianPosterior post = make_posterior(4, 5, rng);
  CHECK(rel_err(kl_standard_normal(post).value(),
                kl_diag_gauss(post, PriorVariances{Tensor::constant(4, 5, 1.0)}).value()) <
        1e-12);
}

TEST_CASE("kl matches Monte Carlo within 1%") {
  Rng rng(10);
  for (int trial = 0; trial < 3; ++trial) {
    const double mu = rng.uniform(0.8, 2.0);
    const double sigma = rng.uniform(0.4, 1.5);
    const double gamma = rng.uniform(0.3, 2.0);
    const GaussianPosterior post{Tensor::from_values(1, 1, {mu}),
                                 Tensor::from_values(1, 1, {sigma})};
    const double exact = kl_diag_gauss(post, PriorVariances{Tensor::from_values(1, 1, {gamma})})
                             .value();
    const double mc = kl_monte_carlo(mu, sigma, gamma, 1000000, rng);
    CHECK(rel_err(exact, mc) < 0.01);
  }
}

TEST_CASE("kl_diag_gauss is nonnegative under random search") {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const GaussianPosterior post = make_posterior(1, 3, rng);
    std::vector<double> gamma(3);
    for (double& g : gamma) g = rng.uniform(0.1, 3.0);
    const double kl =
        kl_diag_gauss(post, PriorVariances{Tensor::from_values(1, 3, gamma)}).value();
    CHECK(kl >= -1e-12);
  }
  // zero iff mu = 0 and sigma^2 = gamma
  const GaussianPosterior post{Tensor::zeros(1, 2), Tensor::from_values(1, 2, {0.7, 1.4})};
  const PriorVariances match{Tensor::from_values(1, 2, {0.49, 1.96})};
  CHECK(std::abs(kl_diag_gauss(post, match).value()) < 1e-12);
}

TEST_CASE("update_gamma values and optimality") {
  const GaussianPosterior p1{Tensor::from_values(1, 1, {0.3}), Tensor::from_values(1, 1, {0.4})};
  CHECK(update_gamma(p1).gamma.value() == doctest::Approx(0.25).epsilon(1e-15));

  const GaussianPosterior p2{Tensor::zeros(1, 1), Tensor::constant(1, 1, 1.0)};
  CHECK(update_gamma(p2).gamma.value() == doctest::Approx(1.0));

  // any +-10% perturbation strictly increases the KL
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const GaussianPosterior post = make_posterior(1, 4, rng);
    const PriorVariances best = update_gamma(post);
    const double kl_best = kl_diag_gauss(post, best).value();
    for (const double factor : {0.9, 1.1}) {
      for (std::size_t j = 0; j < 4; ++j) {
        std::vector<double> g(best.gamma.values().begin(), best.gamma.values().end());
        g[j] *= factor;
        const double kl =
            kl_diag_gauss(post, PriorVariances{Tensor::from_values(1, 4, g)}).value();
        CHECK(kl > kl_best);
      }
    }
  }
}

TEST_CASE("gamma from the closed form reduces the KL to its simplified form") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const GaussianPosterior post = make_posterior(3, 4, rng);
    const double generic = kl_diag_gauss(post, update_gamma(post)).value();
    double simplified = 0.0;
    for (std::size_t i = 0; i < post.mu.size(); ++i) {
      const double mu = post.mu.values()[i];
      const double sg = post.sigma.values()[i];
      simplified += 0.5 * std::log(1.0 + mu * mu / (sg * sg));
    }
    CHECK(std::abs(generic - simplified) < 1e-10);
  }

  // mu = 0 posterior: KL term vanishes for any sigma
  const GaussianPosterior zero_mu{Tensor::zeros(2, 3),
                                  Tensor::from_values(2, 3, {0.3, 0.7, 1.1, 1.9, 0.5, 2.4})};
  CHECK(std::abs(kl_diag_gauss(zero_mu, update_gamma(zero_mu)).value()) < 1e-12);
}

TEST_CASE("loss gradients match finite differences for both variants") {
  const std::size_t n = 10, m = 4, k = 6, batch = 3;
  Rng rng(14);
  const Tensor s = random_power(batch, n, rng);
  const Dictionary dict = build_dct(m, k);

  // SDM variant
  {
    ModelParams p = ModelParams::init(n, m, k, rng, 8);
    const Tensor eps = random_eps(batch, k, rng);
    p.zero_grads();
    {
      Tape tape;
      tape.backward(loss_sdm(p, dict, s, eps));
    }
    for (auto& [name, t] : p.named()) {
      double* data = t->mutable_data();
      // spot-check up to 6 entries per tensor
      const std::size_t stride = std::max<std::size_t>(1, t->size() / 6);
      for (std::size_t i = 0; i < t->size(); i += stride) {
        const double saved = data[i];
        data[i] = saved + 1e-5;
        const double up = loss_sdm(p, dict, s, eps).value();
        data[i] = saved - 1e-5;
        const double down = loss_sdm(p, dict, s, eps).value();
        data[i] = saved;
        const double fd = (up - down) / 2e-5;
        CHECK(rel_err(t->grad()[i], fd) < 1e-4);
      }
    }
  }

  // standard variant
  {
    ModelParams p = ModelParams::init(n, m, m, rng, 8);
    const Tensor eps = random_eps(batch, m, rng);
    p.zero_grads();
    {
      Tape tape;
      tape.backward(loss_standard_vae(p, s, eps));
    }
    for (auto& [name, t] : p.named()) {
      double* data = t->mutable_data();
      const std::size_t stride = std::max<std::size_t>(1, t->size() / 6);
      for (std::size_t i = 0; i < t->size(); i += stride) {
        const double saved = data[i];
        data[i] = saved + 1e-5;
        const double up = loss_standard_vae(p, s, eps).value();
        data[i] = saved - 1e-5;
        const double down = loss_standard_vae(p, s, eps).value();
        data[i] = saved;
        const double fd = (up - down) / 2e-5;
        CHECK(rel_err(t->grad()[i], fd) < 1e-4);
      }
    }
  }
}

TEST_CASE("identity-dictionary loss shares the reconstruction term with the standard loss") {
  const std::size_t n = 8, m = 4, batch = 3;
  Rng rng(15);
  ModelParams p = ModelParams::init(n, m, m, rng, 8);
  const Tensor s = random_power(batch, n, rng);
  const Tensor eps = random_eps(batch, m, rng);
  const Dictionary identity = build_identity(m);

  LossParts sdm_parts, std_parts;
  const double sdm_value = loss_sdm(p, identity, s, eps, &sdm_parts).value();
  const double std_value = loss_standard_vae(p, s, eps, &std_parts).value();

  // same eps, same architecture: identical reconstruction, different KL
  CHECK(rel_err(sdm_parts.recon, std_parts.recon) < 1e-12);
  CHECK(sdm_parts.kl != std_parts.kl);
  CHECK(rel_err(sdm_value - std_value,
                (sdm_parts.kl - std_parts.kl) / static_cast<double>(batch)) < 1e-9);

  CHECK(std::isfinite(sdm_value));
  CHECK(std::isfinite(std_value));
}
