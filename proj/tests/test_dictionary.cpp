#include <cmath>
#include <vector>

#include "doctest.h"
#include "sdmvae/dictionary.hpp"
#include "sdmvae/errors.hpp"
#include "sdmvae/rng.hpp"

using namespace sdmvae;

namespace {

std::vector<double> column(const Dictionary& d, std::size_t r) {
  std::vector<double> c(d.m());
  for (std::size_t l = 0; l < d.m(); ++l) c[l] = d.atoms.at(l, r);
  return c;
}

double col_norm(const Dictionary& d, std::size_t r) {
  double acc = 0.0;
  for (double v : column(d, r)) acc += v * v;
  return std::sqrt(acc);
}

// Largest eigenvalue of D^T D by power iteration (test-only oracle).
double gram_lambda_max(const Dictionary& d) {
  const std::size_t k = d.k(), m = d.m();
  std::vector<double> v(k, 1.0 / std::sqrt(static_cast<double>(k)));
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    std::vector<double> dv(m, 0.0);
    for (std::size_t l = 0; l < m; ++l)
      for (std::size_t r = 0; r < k; ++r) dv[l] += d.atoms.at(l, r) * v[r];
    std::vector<double> next(k, 0.0);
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t l = 0; l < m; ++l) next[r] += d.atoms.at(l, r) * dv[l];
    double norm = 0.0;
    for (double x : next) norm += x * x;
    norm = std::sqrt(norm);
    lambda = norm;
    for (double& x : next) x /= norm;
    v = std::move(next);
  }
  return lambda;
}

}  // namespace

TEST_CASE("dct dictionary columns are unit norm with a constant DC atom") {
  for (auto [m, k] : std::vector<std::pair<std::size_t, std::size_t>>{
           {2, 2}, {8, 8}, {32, 32}, {32, 64}, {16, 5}}) {
    const Dictionary d = build_dct(m, k);
    CHECK(d.m() == m);
    CHECK(d.k() == k);
    for (std::size_t r = 0; r < k; ++r) {
      CHECK(std::abs(col_norm(d, r) - 1.0) <= 1e-12);
    }
    // DC atom: every entry 1/sqrt(m)
    const double want = 1.0 / std::sqrt(static_cast<double>(m));
    for (double v : column(d, 0)) CHECK(v == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("complete dct dictionary is orthogonal") {
  for (std::size_t m : {2u, 8u, 32u, 64u}) {
    const Dictionary d = build_dct(m, m);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) {
        double dot = 0.0;
        for (std::size_t l = 0; l < m; ++l) dot += d.atoms.at(l, a) * d.atoms.at(l, b);
        if (a == b) CHECK(std::abs(dot - 1.0) < 1e-10);
        else CHECK(std::abs(dot) < 1e-10);
      }
    }
  }
}

TEST_CASE("m=2 k=2 second atom") {
  const Dictionary d = build_dct(2, 2);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(d.atoms.at(0, 1) == doctest::Approx(inv_sqrt2).epsilon(1e-14));
  CHECK(d.atoms.at(1, 1) == doctest::Approx(-inv_sqrt2).epsilon(1e-14));
}

TEST_CASE("non-DC atoms are zero-mean") {
  const Dictionary d = build_dct(12, 20);
  for (std::size_t r = 1; r < d.k(); ++r) {
    double mean = 0.0;
    for (double v : column(d, r)) mean += v;
    CHECK(std::abs(mean / 12.0) < 1e-12);
  }
}

TEST_CASE("dct contract errors") {
  CHECK_THROWS_AS(build_dct(1, 4), ContractError);
  CHECK_THROWS_AS(build_dct(4, 0), ContractError);
}

TEST_CASE("identity dictionary") {
  const Dictionary d = build_identity(3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(d.atoms.at(i, j) == (i == j ? 1.0 : 0.0));
    }
    CHECK(col_norm(d, i) == 1.0);
  }

  // apply is the identity map bit-exactly
  Rng rng(3);
  std::vector<double> codes(4 * 3);
  for (double& v : codes) v = rng.uniform(-2.0, 2.0);
  const Tensor a = Tensor::from_values(4, 3, codes);
  const Tensor z = apply(d, a);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(z.values()[i] == a.values()[i]);
}

TEST_CASE("apply basics") {
  const Dictionary d = build_dct(4, 6);

  const Tensor zeros = Tensor::zeros(2, 6);
  const Tensor mapped = apply(d, zeros);
  for (double v : mapped.values()) CHECK(v == 0.0);

  // one-hot code selects a column
  for (std::size_t r = 0; r < d.k(); ++r) {
    std::vector<double> onehot(6, 0.0);
    onehot[r] = 1.0;
    const Tensor z = apply(d, Tensor::from_values(1, 6, onehot));
    for (std::size_t l = 0; l < d.m(); ++l) {
      CHECK(z.at(0, l) == doctest::Approx(d.atoms.at(l, r)).epsilon(1e-15));
    }
  }

  CHECK_THROWS_AS(apply(d, Tensor::zeros(2, 5)), ShapeError);
}

TEST_CASE("apply is linear and bounded by the gram spectrum") {
  const Dictionary d = build_dct(5, 9);
  Rng rng(17);
  std::vector<double> av(9), bv(9);
  for (double& v : av) v = rng.uniform(-1.0, 1.0);
  for (double& v : bv) v = rng.uniform(-1.0, 1.0);
  const Tensor a = Tensor::from_values(1, 9, av);
  const Tensor b = Tensor::from_values(1, 9, bv);

  const double alpha = 0.6, beta = -1.3;
  const Tensor lhs = apply(d, add(mul_scalar(a, alpha), mul_scalar(b, beta)));
  const Tensor rhs = add(mul_scalar(apply(d, a), alpha), mul_scalar(apply(d, b), beta));
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    CHECK(std::abs(lhs.values()[i] - rhs.values()[i]) <= 1e-12);
  }

  const double lambda_max = gram_lambda_max(d);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> cv(9);
    for (double& v : cv) v = rng.uniform(-2.0, 2.0);
    double cnorm = 0.0;
    for (double v : cv) cnorm += v * v;
    const Tensor z = apply(d, Tensor::from_values(1, 9, cv));
    double znorm = 0.0;
    for (double v : z.values()) znorm += v * v;
    CHECK(std::sqrt(znorm) <= std::sqrt(cnorm * lambda_max) + 1e-9);
  }
}

TEST_CASE("gradients flow to codes, not atoms") {
  const Dictionary d = build_dct(3, 5);
  Tensor a = Tensor::param(2, 5, std::vector<double>(10, 0.5));
  {
    Tape tape;
    tape.backward(reduce_sum(square(apply(d, a)), Axis::all));
    CHECK(tape.size() > 0);
  }
  bool any_nonzero = false;
  for (double g : a.grad()) any_nonzero |= g != 0.0;
  CHECK(any_nonzero);
  CHECK_FALSE(d.atoms.requires_grad());
  CHECK_FALSE(d.atoms_t.has_grad());
}
