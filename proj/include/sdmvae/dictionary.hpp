#pragma once

#include <cstddef>

#include "sdmvae/tensor.hpp"

namespace sdmvae {

enum class DictKind { dct, identity };

// Fixed m x k dictionary with unit-norm columns mapping code vectors to
// latent vectors. Immutable after construction; excluded from gradients.
struct Dictionary {
  Tensor atoms;    // m x k
  Tensor atoms_t;  // k x m, cached for apply()
  DictKind kind = DictKind::identity;

  std::size_t m() const { return atoms.rows(); }
  std::size_t k() const { return atoms.cols(); }
};

// Cosine dictionary: column r samples cos((l + 1/2) * pi * r / k) over
// l = 0..m-1. Columns r >= 1 are mean-subtracted; every column is scaled to
// unit norm. The constant r = 0 column is kept (normalizing its mean-
// subtracted form would be 0/0) and normalizes to 1/sqrt(m). Half-sample
// phasing makes the complete (k = m) dictionary exactly orthogonal.
Dictionary build_dct(std::size_t m, std::size_t k);

Dictionary build_identity(std::size_t m);

// Each row of codes (batch x k) maps to a latent row z = D a (batch x m).
// Gradients flow to the codes only; D stays fixed.
Tensor apply(const Dictionary& d, const Tensor& codes);

}  // namespace sdmvae
