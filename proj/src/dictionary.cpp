#include "sdmvae/dictionary.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "sdmvae/errors.hpp"

namespace sdmvae {

Dictionary build_dct(std::size_t m, std::size_t k) {
  if (m < 2) throw ContractError("build_dct: m must be >= 2, got " + std::to_string(m));
  if (k < 1) throw ContractError("build_dct: k must be >= 1, got " + std::to_string(k));

  std::vector<double> atoms(m * k);
  std::vector<double> col(m);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t l = 0; l < m; ++l) {
      col[l] = std::cos((static_cast<double>(l) + 0.5) * std::numbers::pi *
                        static_cast<double>(r) / static_cast<double>(k));
    }
    if (r >= 1) {
      double mean = 0.0;
      for (double v : col) mean += v;
      mean /= static_cast<double>(m);
      for (double& v : col) v -= mean;
    }
    double norm = 0.0;
    for (double v : col) norm += v * v;
    norm = std::sqrt(norm);
    for (std::size_t l = 0; l < m; ++l) atoms[l * k + r] = col[l] / norm;
  }

  Dictionary d;
  d.kind = DictKind::dct;
  d.atoms = Tensor::from_values(m, k, std::move(atoms));
  d.atoms_t = transpose(d.atoms);
  return d;
}

Dictionary build_identity(std::size_t m) {
  if (m < 1) throw ContractError("build_identity: m must be >= 1");
  std::vector<double> atoms(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) atoms[i * m + i] = 1.0;
  Dictionary d;
  d.kind = DictKind::identity;
  d.atoms = Tensor::from_values(m, m, std::move(atoms));
  d.atoms_t = d.atoms;  // symmetric
  return d;
}

Tensor apply(const Dictionary& d, const Tensor& codes) {
  if (codes.cols() != d.k()) {
    throw ShapeError("dictionary apply: codes have width " + std::to_string(codes.cols()) +
                     ", dictionary has " + std::to_string(d.k()) + " atoms");
  }
  return matmul(codes, d.atoms_t);
}

}  // namespace sdmvae
