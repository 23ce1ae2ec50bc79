// End-to-end checks of the sdmvae binary. The test runner passes its path
// via SDMVAE_BIN (set by ctest); without it these cases are skipped.

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sdmvae/checkpoint.hpp"
#include "sdmvae/config.hpp"
#include "sdmvae/corpus.hpp"
#include "sdmvae/errors.hpp"
#include "sdmvae/wav.hpp"

using namespace sdmvae;
namespace fs = std::filesystem;

namespace {

const char* binary() { return std::getenv("SDMVAE_BIN"); }

int run(const std::string& args) {
  const std::string cmd = std::string(binary()) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string tiny_config(const fs::path& out_dir, const std::string& variant, std::size_t m,
                        std::size_t k, std::size_t max_epochs, std::uint64_t seed = 321) {
  std::ostringstream os;
  os << "[experiment]\n"
     << "variant = " << variant << "\nm = " << m << "\nk = " << k << "\nseed = " << seed
     << "\noutput_dir = " << out_dir.string() << "\n"
     << "[stft]\nwindow = 256\nhop = 64\n"
     << "[train]\nbatch_size = 64\npatience = 5\nmax_epochs = " << max_epochs
     << "\nlearning_rate = 0.005\n"
     << "[data]\nsource = synthetic\nclips = 12\nclip_seconds = 0.7\nspeakers = 4\n"
     << "split = 0.5,0.25,0.25\n";
  return os.str();
}

// strips the wall-time column so deterministic runs can be compared
std::string drop_wall_time(const std::string& csv) {
  std::istringstream is(csv);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line)) {
    const auto last_comma = line.rfind(',');
    os << line.substr(0, last_comma) << "\n";
  }
  return os.str();
}

}  // namespace

TEST_CASE("config parsing and validation") {
  ExperimentConfig cfg = ExperimentConfig::parse_string(
      "[experiment]\nvariant = sdm_dct\nm = 16\nk = 32\nseed = 5\noutput_dir = /tmp/x\n"
      "[stft]\nwindow = 512\nhop = 128\n");
  CHECK(cfg.variant == Variant::sdm_dct);
  CHECK(cfg.m == 16);
  CHECK(cfg.k == 32);
  CHECK(cfg.window == 512);
  cfg.validate();

  // echo round-trips
  const ExperimentConfig back = ExperimentConfig::parse_string(cfg.echo());
  CHECK(back.echo() == cfg.echo());

  // identity requires k = m
  CHECK_THROWS_AS(ExperimentConfig::parse_string(
                      "[experiment]\nvariant = sdm_identity\nm = 8\nk = 16\n")
                      .validate(),
                  ConfigError);
  // hop must be window/4
  CHECK_THROWS_AS(ExperimentConfig::parse_string("[stft]\nwindow = 512\nhop = 256\n").validate(),
                  ConfigError);
  // unknown keys are named
  try {
    ExperimentConfig::parse_string("[experiment]\nvariance = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("experiment.variance") != std::string::npos);
  }
}

TEST_CASE("checkpoint round trip") {
  Rng rng(99);
  ModelParams p = ModelParams::init(129, 4, 6, rng, 16);
  const fs::path dir = temp_dir("sdmvae_ckpt_test");
  const std::string echo = "[experiment]\nvariant = sdm_dct\nm = 4\nk = 6\n";
  save_checkpoint(dir / "c.bin", p, echo);
  const Checkpoint ck = load_checkpoint(dir / "c.bin");
  CHECK(ck.config_echo == echo);
  CHECK(ck.params.n == 129);
  CHECK(ck.params.code_dim == 6);
  CHECK(ck.params.latent_dim == 4);
  for (std::size_t i = 0; i < p.named().size(); ++i) {
    const Tensor* a = p.named()[i].second;
    const Tensor* b = ck.params.named()[i].second;
    REQUIRE(a->size() == b->size());
    CHECK(std::memcmp(a->data(), b->data(), a->size() * sizeof(double)) == 0);
  }

  // corruption is detected
  auto bytes = read_file(dir / "c.bin");
  bytes[bytes.size() / 2] ^= 0x41;
  write_file(dir / "bad.bin", bytes);
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.bin"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("cli train: artifacts, log size, determinism") {
  if (binary() == nullptr) {
    MESSAGE("SDMVAE_BIN not set; skipping CLI cases");
    return;
  }
  const fs::path root = temp_dir("sdmvae_cli_train");
  const fs::path out1 = root / "run1";
  const fs::path cfg1 = root / "exp1.ini";
  write_file(cfg1, tiny_config(out1, "sdm_identity", 8, 8, 30));

  CHECK(run("train " + cfg1.string()) == 0);
  CHECK(fs::exists(out1 / "checkpoint.bin"));
  CHECK(fs::exists(out1 / "config_echo.ini"));
  CHECK(fs::exists(out1 / "data.fingerprint"));

  const std::string log1 = read_file(out1 / "train_log.csv");
  const std::string ckpt1 = read_file(out1 / "checkpoint.bin");
  std::size_t rows = 0;
  for (char c : log1) rows += c == '\n' ? 1 : 0;
  CHECK(rows >= 2);        // header + at least one epoch
  CHECK(rows <= 30 + 1);   // at most max_epochs rows

  // the same config run again: identical logs (minus wall time) and a
  // bit-identical checkpoint
  CHECK(run("train " + cfg1.string()) == 0);
  const std::string log2 = read_file(out1 / "train_log.csv");
  CHECK(drop_wall_time(log1) == drop_wall_time(log2));
  CHECK(read_file(out1 / "checkpoint.bin") == ckpt1);

  // identity with k != m is rejected before training (usage error)
  const fs::path bad = root / "bad.ini";
  write_file(bad, tiny_config(root / "badrun", "sdm_identity", 8, 16, 5));
  CHECK(run("train " + bad.string()) == 1);
  CHECK_FALSE(fs::exists(root / "badrun"));

  fs::remove_all(root);
}

TEST_CASE("cli eval and resynth") {
  if (binary() == nullptr) {
    MESSAGE("SDMVAE_BIN not set; skipping CLI cases");
    return;
  }
  const fs::path root = temp_dir("sdmvae_cli_eval");
  const fs::path out = root / "run";
  const fs::path cfg = root / "exp.ini";
  write_file(cfg, tiny_config(out, "sdm_dct", 8, 12, 25));
  REQUIRE(run("train " + cfg.string()) == 0);

  // eval against the config's regenerated test split
  CHECK(run("eval " + (out / "checkpoint.bin").string() + " " + cfg.string()) == 0);
  const std::string report = read_file(out / "eval_report.csv");
  std::vector<std::string> lines;
  {
    std::istringstream is(report);
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
  }
  REQUIRE(lines.size() >= 4);
  CHECK(lines[0].rfind("# data_fingerprint=", 0) == 0);
  CHECK(lines[1] == "id,frames,hoyer,lsd_db,sisdr_db");
  CHECK(lines.back().rfind("aggregate,", 0) == 0);
  // rows = clips + aggregate; the test split has 9 * 0.3 ~ 3 clips of 3 speakers
  const std::size_t data_rows = lines.size() - 2;
  CHECK(data_rows >= 2);

  // hoyer column within [0, 1]
  for (std::size_t i = 2; i + 1 < lines.size(); ++i) {
    std::istringstream ls(lines[i]);
    std::string cell;
    std::getline(ls, cell, ',');  // id
    std::getline(ls, cell, ',');  // frames
    std::getline(ls, cell, ',');  // hoyer
    const double h = std::stod(cell);
    CHECK(h >= 0.0);
    CHECK(h <= 1.0);
  }

  // resynth: duration = input duration minus exactly one window
  const auto clips = synth_speech_like(55, 1, 0.7, 1);
  write_wav(root / "in.wav", clips[0].clip);
  CHECK(run("resynth " + (out / "checkpoint.bin").string() + " " + (root / "in.wav").string() +
            " " + (root / "out.wav").string()) == 0);
  const AudioClip resynth = read_wav(root / "out.wav");
  CHECK(resynth.samples.size() == clips[0].clip.samples.size() - 256);

  // resynth output is byte-deterministic
  CHECK(run("resynth " + (out / "checkpoint.bin").string() + " " + (root / "in.wav").string() +
            " " + (root / "out2.wav").string()) == 0);
  CHECK(read_file(root / "out.wav") == read_file(root / "out2.wav"));

  // digital silence resynthesizes far below the speech level: the decoder
  // maps the all-floor frame to its quietest variance estimate
  AudioClip silence;
  silence.samples.assign(11200, 0.0);
  write_wav(root / "silence.wav", silence);
  CHECK(run("resynth " + (out / "checkpoint.bin").string() + " " +
            (root / "silence.wav").string() + " " + (root / "silence_out.wav").string()) == 0);
  const auto rms_dbfs = [](const fs::path& p) {
    const AudioClip clip = read_wav(p);
    double acc = 0.0;
    for (double s : clip.samples) acc += s * s;
    return 10.0 * std::log10(std::max(acc / clip.samples.size(), 1e-24));
  };
  const double speech_db = rms_dbfs(root / "out.wav");
  const double silence_db = rms_dbfs(root / "silence_out.wav");
  CHECK(silence_db < -15.0);
  CHECK(silence_db < speech_db - 10.0);

  fs::remove_all(root);
}

TEST_CASE("cli compare") {
  if (binary() == nullptr) {
    MESSAGE("SDMVAE_BIN not set; skipping CLI cases");
    return;
  }
  const fs::path root = temp_dir("sdmvae_cli_compare");
  const fs::path cfg_a = root / "a.ini";
  const fs::path cfg_b = root / "b.ini";
  write_file(cfg_a, tiny_config(root / "exp_a", "sdm_identity", 8, 8, 15));
  write_file(cfg_b, tiny_config(root / "exp_b", "standard", 8, 8, 15));
  REQUIRE(run("train " + cfg_a.string()) == 0);
  REQUIRE(run("train " + cfg_b.string()) == 0);

  // compare before eval: both incomplete -> nonzero
  CHECK(run("compare " + root.string()) != 0);

  REQUIRE(run("eval " + (root / "exp_a" / "checkpoint.bin").string() + " " + cfg_a.string()) ==
          0);
  REQUIRE(run("eval " + (root / "exp_b" / "checkpoint.bin").string() + " " + cfg_b.string()) ==
          0);
  CHECK(run("compare " + root.string()) == 0);
  const std::string table = read_file(root / "compare.csv");
  CHECK(table.find("exp_a") != std::string::npos);
  CHECK(table.find("exp_b") != std::string::npos);
  CHECK(table.find("sdm_identity") != std::string::npos);
  CHECK(table.find("standard") != std::string::npos);
  std::size_t rows = 0;
  for (char c : table) rows += c == '\n' ? 1 : 0;
  CHECK(rows == 3);  // header + 2 experiments

  // re-evaluating one experiment on different data changes its fingerprint,
  // and compare refuses the pair
  const fs::path cfg_other = root / "other.ini";
  write_file(cfg_other, tiny_config(root / "exp_b", "standard", 8, 8, 15, /*seed=*/777));
  REQUIRE(run("eval " + (root / "exp_b" / "checkpoint.bin").string() + " " +
              cfg_other.string()) == 0);
  CHECK(run("compare " + root.string()) == 2);

  fs::remove_all(root);
}

TEST_CASE("cli usage errors exit with 1") {
  if (binary() == nullptr) {
    MESSAGE("SDMVAE_BIN not set; skipping CLI cases");
    return;
  }
  CHECK(run("") == 1);
  CHECK(run("train /nonexistent/config.ini") == 1);
  CHECK(run("frobnicate") == 1);
}
