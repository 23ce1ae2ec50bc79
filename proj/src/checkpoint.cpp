#include "sdmvae/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "sdmvae/config.hpp"
#include "sdmvae/errors.hpp"

namespace sdmvae {

namespace {

constexpr char kMagic[8] = {'S', 'D', 'M', 'V', 'A', 'E', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t take_u32(const std::string& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw IoError("checkpoint: truncated");
  std::uint32_t v;
  std::memcpy(&v, in.data() + pos, 4);
  pos += 4;
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const std::string& config_echo) {
  std::string body;
  body.append(kMagic, 8);
  put_u32(body, static_cast<std::uint32_t>(config_echo.size()));
  body.append(config_echo);

  const auto named = params.named();
  put_u32(body, static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, t] : named) {
    put_u32(body, static_cast<std::uint32_t>(name.size()));
    body.append(name);
    put_u32(body, static_cast<std::uint32_t>(t->rows()));
    put_u32(body, static_cast<std::uint32_t>(t->cols()));
    body.append(reinterpret_cast<const char*>(t->data()), t->size() * sizeof(double));
  }
  const std::uint64_t checksum = fnv1a(body);
  char cs[8];
  std::memcpy(cs, &checksum, 8);
  body.append(cs, 8);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write checkpoint " + path.string());
  os.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!os) throw IoError("failed while writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

  if (bytes.size() < 8 + 4 + 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw IoError(path.string() + ": not a checkpoint file");
  }
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  const std::string body = bytes.substr(0, bytes.size() - 8);
  if (fnv1a(body) != stored) throw IoError(path.string() + ": checksum mismatch");

  std::size_t pos = 8;
  const std::uint32_t cfg_len = take_u32(body, pos);
  if (pos + cfg_len > body.size()) throw IoError("checkpoint: truncated config");
  Checkpoint ck;
  ck.config_echo = body.substr(pos, cfg_len);
  pos += cfg_len;

  const std::uint32_t n_tensors = take_u32(body, pos);
  std::map<std::string, Tensor> tensors;
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const std::uint32_t name_len = take_u32(body, pos);
    if (pos + name_len > body.size()) throw IoError("checkpoint: truncated name");
    const std::string name = body.substr(pos, name_len);
    pos += name_len;
    const std::uint32_t rows = take_u32(body, pos);
    const std::uint32_t cols = take_u32(body, pos);
    const std::size_t count = static_cast<std::size_t>(rows) * cols;
    if (pos + count * sizeof(double) > body.size()) throw IoError("checkpoint: truncated data");
    std::vector<double> values(count);
    std::memcpy(values.data(), body.data() + pos, count * sizeof(double));
    pos += count * sizeof(double);
    tensors.emplace(name, Tensor::param(rows, cols, std::move(values)));
  }

  ModelParams& p = ck.params;
  for (auto& [name, dst] : p.named()) {
    const auto it = tensors.find(name);
    if (it == tensors.end()) throw IoError("checkpoint: missing tensor " + name);
    *dst = it->second;
  }
  p.hidden = p.W1.rows();
  p.n = p.W1.cols();
  p.code_dim = p.W_mu.rows();
  p.latent_dim = p.V1.cols();

  if (p.W_logvar.rows() != p.code_dim || p.V_logvar.rows() != p.n ||
      p.W_mu.cols() != p.hidden || p.V1.rows() != p.hidden) {
    throw ShapeError("checkpoint: inconsistent tensor shapes");
  }
  return ck;
}

}  // namespace sdmvae
