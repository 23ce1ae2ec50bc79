// Command-line front end: train, eval, resynth, compare.
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdmvae/checkpoint.hpp"
#include "sdmvae/config.hpp"
#include "sdmvae/corpus.hpp"
#include "sdmvae/errors.hpp"
#include "sdmvae/metrics.hpp"
#include "sdmvae/trainer.hpp"
#include "sdmvae/wav.hpp"

namespace fs = std::filesystem;
using namespace sdmvae;

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_g(*v) : "nan"; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
}

fs::path output_dir_for(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("SDMVAE_OUT")) return fs::path(env);
  if (cfg.output_dir.empty()) {
    throw ConfigError("experiment.output_dir: required (or set SDMVAE_OUT)");
  }
  return fs::path(cfg.output_dir);
}

DatasetSplit build_corpus(const ExperimentConfig& cfg) {
  if (cfg.source == DataSource::synthetic) {
    auto clips = synth_speech_like(cfg.seed, cfg.clips, cfg.clip_seconds, cfg.speakers);
    return split_by_speaker(std::move(clips), cfg.split_spec());
  }
  return load_wav_dir(cfg.wav_dir, cfg.split_spec());
}

std::optional<Dictionary> dictionary_for(const ExperimentConfig& cfg) {
  switch (cfg.variant) {
    case Variant::sdm_dct: return build_dct(cfg.m, cfg.k);
    case Variant::sdm_identity: return build_identity(cfg.m);
    default: return std::nullopt;
  }
}

int cmd_train(const std::string& config_path) {
  ExperimentConfig cfg = ExperimentConfig::parse_file(config_path);
  cfg.validate();
  const fs::path out_dir = output_dir_for(cfg);
  fs::create_directories(out_dir);

  const DatasetSplit corpus = build_corpus(cfg);
  const SpectrogramBatch train_frames = frames_of(corpus.train, cfg.window, cfg.hop);
  const SpectrogramBatch val_frames = frames_of(corpus.validation, cfg.window, cfg.hop);

  Rng init_rng(cfg.seed);
  ModelParams params =
      ModelParams::init(train_frames.bins, cfg.m, cfg.code_dim(), init_rng);
  const std::optional<Dictionary> dict = dictionary_for(cfg);

  const FitResult result =
      fit(std::move(params), dict ? &*dict : nullptr, train_frames, val_frames,
          cfg.train_config());

  std::ostringstream log;
  log << "epoch,train_loss,val_loss,wall_time_s\n";
  for (const EpochStats& e : result.history) {
    char secs[32];
    std::snprintf(secs, sizeof(secs), "%.3f", e.seconds);
    log << e.epoch << "," << fmt_g(e.train_loss) << "," << fmt_g(e.val_loss) << "," << secs
        << "\n";
  }
  write_text(out_dir / "train_log.csv", log.str());
  write_text(out_dir / "config_echo.ini", cfg.echo());
  write_text(out_dir / "data.fingerprint", cfg.data_fingerprint() + "\n");
  save_checkpoint(out_dir / "checkpoint.bin", result.best, cfg.echo());

  std::cout << "trained " << variant_name(cfg.variant) << " for " << result.history.size()
            << " epoch(s); best epoch " << result.best_epoch << "\n";
  if (!result.history.empty()) {
    double best_val = result.history.front().val_loss;
    for (const auto& e : result.history) best_val = std::min(best_val, e.val_loss);
    std::cout << "best validation loss " << fmt_g(best_val) << "\n";
  }
  std::cout << "artifacts in " << out_dir.string() << "\n";
  return 0;
}

// The data argument is either a directory of 16 kHz WAVs (all of them are
// evaluated) or an experiment config whose test split is regenerated.
std::pair<std::vector<NamedClip>, std::string> eval_clips(const std::string& data_arg) {
  const fs::path p(data_arg);
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(p)) {
      if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ConfigError("no .wav files in " + p.string());
    std::vector<NamedClip> clips;
    for (const auto& f : files) {
      NamedClip c;
      c.id = f.stem().string();
      c.speaker = c.id.substr(0, c.id.find('_'));
      c.clip = read_wav(f, 16000);
      clips.push_back(std::move(c));
    }
    ExperimentConfig fp;
    fp.source = DataSource::wav_dir;
    fp.wav_dir = p.string();
    return {std::move(clips), fp.data_fingerprint()};
  }
  ExperimentConfig cfg = ExperimentConfig::parse_file(p);
  cfg.validate();
  DatasetSplit corpus = build_corpus(cfg);
  return {std::move(corpus.test), cfg.data_fingerprint()};
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_arg) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  ExperimentConfig cfg = ExperimentConfig::parse_string(ck.config_echo);
  cfg.validate();
  if (ck.params.latent_dim != cfg.m || ck.params.code_dim != cfg.code_dim() ||
      ck.params.n != cfg.window / 2 + 1) {
    throw ShapeError("checkpoint/config mismatch: tensors are n=" +
                     std::to_string(ck.params.n) + ", m=" + std::to_string(ck.params.latent_dim) +
                     ", code=" + std::to_string(ck.params.code_dim) + " but the config says n=" +
                     std::to_string(cfg.window / 2 + 1) + ", m=" + std::to_string(cfg.m) +
                     ", code=" + std::to_string(cfg.code_dim()));
  }
  const std::optional<Dictionary> dict = dictionary_for(cfg);

  auto [clips, fingerprint] = eval_clips(data_arg);
  const EvalReport report =
      evaluate(ck.params, dict ? &*dict : nullptr, clips, cfg.window, cfg.hop);

  std::ostringstream csv;
  csv << "# data_fingerprint=" << fingerprint << "\n";
  csv << "id,frames,hoyer,lsd_db,sisdr_db\n";
  std::size_t total_frames = 0;
  for (const EvalRow& r : report.rows) {
    csv << r.id << "," << r.frames << "," << fmt_opt(r.hoyer) << "," << fmt_g(r.lsd_db) << ","
        << fmt_opt(r.sisdr_db) << "\n";
    total_frames += r.frames;
  }
  csv << "aggregate," << total_frames << "," << fmt_g(report.hoyer_mean) << ","
      << fmt_g(report.lsd_mean) << "," << fmt_g(report.sisdr_mean) << "\n";

  fs::path report_dir = fs::path(ckpt_path).parent_path();
  if (const char* env = std::getenv("SDMVAE_OUT")) report_dir = fs::path(env);
  if (report_dir.empty()) report_dir = ".";
  fs::create_directories(report_dir);
  write_text(report_dir / "eval_report.csv", csv.str());

  std::printf("clips: %zu\n", report.rows.size());
  std::printf("hoyer: %.4f (std %.4f)\n", report.hoyer_mean, report.hoyer_std);
  std::printf("lsd:   %.4f dB\n", report.lsd_mean);
  std::printf("sisdr: %.4f dB\n", report.sisdr_mean);
  return 0;
}

int cmd_resynth(const std::string& ckpt_path, const std::string& in_path,
                const std::string& out_path) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  ExperimentConfig cfg = ExperimentConfig::parse_string(ck.config_echo);
  cfg.validate();
  const std::optional<Dictionary> dict = dictionary_for(cfg);

  const AudioClip in = read_wav(in_path, 16000);
  const StftFrames frames = stft(in, cfg.window, cfg.hop);
  const Tensor s = Tensor::from_values(frames.frames, frames.bins,
                                       std::vector<double>(frames.power));
  const GaussianPosterior post = encode(ck.params, s);
  const Tensor z = dict ? apply(*dict, post.mu) : post.mu;
  const Tensor s_hat = decode(ck.params, z);

  const AudioClip full = resynthesize(
      std::vector<double>(s_hat.values().begin(), s_hat.values().end()), frames);
  const Trimmed trimmed = trim_interior(full, in.samples.size(), cfg.window);
  write_wav(out_path, trimmed.clip);
  std::cout << "wrote " << out_path << " (" << trimmed.clip.samples.size() << " samples)\n";
  return 0;
}

struct CompareEntry {
  std::string name;
  std::string variant;
  std::string fingerprint;
  double hoyer = 0.0, lsd = 0.0, sisdr = 0.0;
  bool complete = false;
};

int cmd_compare(const std::string& dir_arg) {
  const fs::path dir(dir_arg);
  if (!fs::is_directory(dir)) throw ConfigError("compare: not a directory: " + dir.string());

  std::vector<fs::path> exp_dirs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "config_echo.ini")) {
      exp_dirs.push_back(e.path());
    }
  }
  std::sort(exp_dirs.begin(), exp_dirs.end());
  if (exp_dirs.size() < 2) {
    throw ConfigError("compare: need at least 2 completed experiments in " + dir.string());
  }

  std::vector<CompareEntry> entries;
  bool incomplete = false;
  for (const auto& d : exp_dirs) {
    CompareEntry ent;
    ent.name = d.filename().string();
    const ExperimentConfig cfg = ExperimentConfig::parse_file(d / "config_echo.ini");
    ent.variant = variant_name(cfg.variant);
    if (cfg.variant == Variant::sdm_dct) ent.variant += " k=" + std::to_string(cfg.k);

    const fs::path report = d / "eval_report.csv";
    if (fs::exists(report)) {
      std::ifstream is(report);
      std::string line;
      std::string agg;
      while (std::getline(is, line)) {
        if (line.rfind("# data_fingerprint=", 0) == 0) {
          ent.fingerprint = line.substr(std::string("# data_fingerprint=").size());
        }
        if (line.rfind("aggregate,", 0) == 0) agg = line;
      }
      if (!agg.empty()) {
        std::stringstream ss(agg);
        std::string item;
        std::vector<std::string> cells;
        while (std::getline(ss, item, ',')) cells.push_back(item);
        if (cells.size() == 5) {
          ent.hoyer = std::stod(cells[2]);
          ent.lsd = std::stod(cells[3]);
          ent.sisdr = std::stod(cells[4]);
          ent.complete = true;
        }
      }
    }
    if (!ent.complete) incomplete = true;
    entries.push_back(std::move(ent));
  }

  if (incomplete) {
    std::cerr << "incomplete experiments (no eval report):\n";
    for (const auto& e : entries) {
      if (!e.complete) std::cerr << "  " << e.name << "\n";
    }
    return 2;
  }
  for (const auto& e : entries) {
    if (e.fingerprint != entries.front().fingerprint) {
      std::cerr << "refusing to compare: data fingerprints differ (" << entries.front().name
                << "=" << entries.front().fingerprint << ", " << e.name << "=" << e.fingerprint
                << ")\n";
      return 2;
    }
  }

  std::ostringstream csv;
  csv << "experiment,variant,hoyer,lsd_db,sisdr_db\n";
  for (const auto& e : entries) {
    csv << e.name << "," << e.variant << "," << fmt_g(e.hoyer) << "," << fmt_g(e.lsd) << ","
        << fmt_g(e.sisdr) << "\n";
  }
  write_text(dir / "compare.csv", csv.str());

  std::ostringstream txt;
  char row[256];
  std::snprintf(row, sizeof(row), "%-24s %-16s %8s %10s %10s\n", "experiment", "variant", "hoyer",
                "lsd_db", "sisdr_db");
  txt << row;
  for (const auto& e : entries) {
    std::snprintf(row, sizeof(row), "%-24s %-16s %8.4f %10.4f %10.4f\n", e.name.c_str(),
                  e.variant.c_str(), e.hoyer, e.lsd, e.sisdr);
    txt << row;
  }
  write_text(dir / "compare.txt", txt.str());
  std::cout << txt.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse-dictionary VAE for power spectrograms"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, data_arg, in_path, out_path, dir_arg;

  CLI::App* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("config", config_path, "experiment config (.ini)")->required();

  CLI::App* eval = app.add_subcommand("eval", "analysis-resynthesis evaluation");
  eval->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  eval->add_option("data", data_arg, "WAV directory or experiment config")->required();

  CLI::App* resynth = app.add_subcommand("resynth", "resynthesize one WAV through the model");
  resynth->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  resynth->add_option("input", in_path, "input WAV (16 kHz mono)")->required();
  resynth->add_option("output", out_path, "output WAV")->required();

  CLI::App* compare = app.add_subcommand("compare", "tabulate completed experiments");
  compare->add_option("dir", dir_arg, "directory of experiment output dirs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (app.got_subcommand(train)) return cmd_train(config_path);
    if (app.got_subcommand(eval)) return cmd_eval(ckpt_path, data_arg);
    if (app.got_subcommand(resynth)) return cmd_resynth(ckpt_path, in_path, out_path);
    if (app.got_subcommand(compare)) return cmd_compare(dir_arg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
