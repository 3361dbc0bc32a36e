#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "specfno/analysis.hpp"
#include "specfno/fno.hpp"
#include "specfno/train.hpp"

// Run configuration: one TOML file with [run], [model], [grf], [experiment],
// [train], [scheduler] and [gradcheck] tables. Every key has a default equal
// to the desk-scale protocol; unknown tables or keys are rejected.
namespace specfno::config {

inline constexpr const char* kOutputDirEnv = "SPECFNO_OUTPUT_DIR";

struct RunSection {
  std::uint64_t seed = 0;
  std::string output_dir;  ///< empty: $SPECFNO_OUTPUT_DIR, else "specfno_out"
  int threads = 1;
};

struct ModelSection {
  int dim = 2;
  int width = 16;
  int layers = 5;
  int modes = 12;
  std::string activation = "gelu";
  std::string encoding = "periodic";
  bool proj_activation = false;
  std::string init = "default";  ///< default | scaled | all_ones
  double init_scale = 10.0;      ///< factor for init = scaled
};

struct GrfSection {
  double s = 2.0;
  double tau = 3.0;
  int n_ref = 512;
  int count = 5;
  double min_wavenumber = 12.0;  ///< lower cutoff of the spectral-slope fit
};

struct ExperimentSection {
  std::vector<double> s_list{0.5, 1.0, 1.5, 2.0};
  std::vector<int> n_list{32, 64, 128, 256};
  int n_ref = 512;
  int n_samples = 5;
  std::string lifting = "layer";
  int fit_min_n = 0;
  int fit_max_n = 0;  ///< 0: no upper bound
  double s = 2.0;     ///< decompose, state-norms
  int n = 64;         ///< decompose coarse grid, state-norms grid
  int n_seeds = 5;    ///< state-norms
  std::vector<std::string> inits{"default", "scaled(10)", "all_ones"};
};

struct TrainSection {
  std::string dataset = "inverse_helmholtz";
  double s = 2.0;
  int n_ref = 128;
  int n_train = 1000;
  int n_val = 200;
  int n_test = 200;
  int epochs = 200;
  int batch_size = 20;
  double step = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::string loss = "relative_l2";
  int grid = 64;
};

struct SchedulerSection {
  std::vector<int> ladder{16, 32, 64};
  int patience = 40;
  double delta = 0.0;
};

struct GradCheckSection {
  int width = 8;
  int modes = 4;
  int layers = 3;
  int n = 32;
  int samples = 2;
  int coordinates = 200;
  double h = 1e-5;
  double tolerance = 1e-5;
  std::vector<std::string> datasets{"gradient_map", "inverse_helmholtz"};
  std::vector<std::string> losses{"relative_l2", "mse"};
};

struct RunConfig {
  RunSection run;
  ModelSection model;
  GrfSection grf;
  ExperimentSection experiment;
  TrainSection train;
  SchedulerSection scheduler;
  GradCheckSection gradcheck;

  /// Throws ConfigError on any out-of-range value.
  void validate() const;

  /// Full effective configuration as TOML; parsing it back reproduces this
  /// config exactly.
  std::string echo() const;

  fno::FnoConfig model_config(int in_channels, int out_channels) const;
  fno::InitScheme init_scheme() const;
  analysis::FitWindow fit_window() const;
  train::TrainConfig train_config() const;
  train::SchedulerConfig scheduler_config() const;
  std::filesystem::path output_dir() const;
};

/// Parses TOML text, then applies "table.key=value" overrides (value in
/// TOML syntax; bare words are taken as strings). Throws ConfigError.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});

/// Reads a file (missing or unreadable file is a ConfigError); an empty path
/// starts from the defaults.
RunConfig load_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides = {});

/// "default" | "scaled(c)" | "all_ones".
fno::InitScheme parse_init(const std::string& s);

}  // namespace specfno::config
