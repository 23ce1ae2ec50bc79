#include "sdmvae/kernels.hpp"

#include <cstdlib>
#include <string>

namespace sdmvae::kernels {
namespace {

const KernelTable* pick() {
  if (const char* req = std::getenv("SDMVAE_ISA")) {
    const std::string want(req);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && avx2_table()) return avx2_table();
    if (want == "neon" && neon_table()) return neon_table();
    return &scalar_table();
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable* chosen = pick();
  return *chosen;
}

}  // namespace sdmvae::kernels
