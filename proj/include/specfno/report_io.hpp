#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "specfno/analysis.hpp"
#include "specfno/train.hpp"

// Report files. Every report is written as <name>.json plus a flat
// <name>.csv; names and CSV column orders are fixed:
//   error_report.csv  s,seed,N,layer,rel_err
//   decomp_report.csv layer,e0,e1,e2_modes,e2_full,e3,e0_next,item2_rhs,item3_rhs,item4_rhs,
//                     item4_identity,e3_consistency,item2_holds,item3_holds,item4_holds
//   state_norms.csv   init,seed,layer,l2
//   interp_report.csv s,seed,N,l2_err,tail,alias
//   history.csv       epoch,grid,train_loss,val_err,test_err,wall_ms,cum_gridpoint_epochs
//   grf_report.csv    index,seed,s,n_ref,l2,linf,spectral_slope,expected_slope
//   grad_check.csv    dataset,loss,index,adjoint,finite_difference,rel_err
// CSV reals use 17 significant digits; JSON reals use the shortest text that
// reads back to the same double. Every JSON report carries "schema" and
// "schema_version".
namespace specfno::io {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kVersion = "1.0.0";

/// %.17g, with nan / inf / -inf spelled out.
std::string format_real(double v);

struct GrfSampleRecord {
  int index = 0;
  std::uint64_t seed = 0;
  double s = 0.0;
  int n_ref = 0;
  double l2 = 0.0;
  double linf = 0.0;
  double spectral_slope = 0.0;
  double expected_slope = 0.0;  ///< -(2 s + d)
};

struct GrfReport {
  double tau = 0.0;
  double min_wavenumber = 0.0;
  std::vector<GrfSampleRecord> samples;
};

struct GradCheckRun {
  std::string dataset;
  std::string loss;
  train::GradCheckResult result;
};

struct GradCheckReport {
  double tolerance = 0.0;
  double h = 0.0;
  std::vector<GradCheckRun> runs;
  double max_rel_err() const;
};

struct TrainReport {
  std::string mode;  ///< "fixed" or "scheduled"
  std::string dataset;
  std::string loss;
  int n_ref = 0;
  std::vector<int> ladder;  ///< grids visited or available; {grid} when fixed
  train::History history;
};

nlohmann::json to_json(const analysis::ErrorReport& r);
nlohmann::json to_json(const analysis::DecompReport& r, const std::vector<analysis::LemmaRow>& lemma);
nlohmann::json to_json(const analysis::StateNormReport& r);
nlohmann::json to_json(const analysis::InterpReport& r);
nlohmann::json to_json(const TrainReport& r);
nlohmann::json to_json(const GrfReport& r);
nlohmann::json to_json(const GradCheckReport& r);

std::string to_csv(const analysis::ErrorReport& r);
std::string to_csv(const analysis::DecompReport& r);
std::string to_csv(const analysis::StateNormReport& r);
std::string to_csv(const analysis::InterpReport& r);
std::string to_csv(const TrainReport& r);
std::string to_csv(const GrfReport& r);
std::string to_csv(const GradCheckReport& r);

/// Writes the file in full or throws IoError naming the path.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Each writes <dir>/<name>.json and <dir>/<name>.csv and returns the file
/// names written.
std::vector<std::string> emit_report(const analysis::ErrorReport& r, const std::filesystem::path& dir);
std::vector<std::string> emit_report(const analysis::DecompReport& r, const std::vector<analysis::LemmaRow>& lemma,
                                     const std::filesystem::path& dir);
std::vector<std::string> emit_report(const analysis::StateNormReport& r, const std::filesystem::path& dir);
std::vector<std::string> emit_report(const analysis::InterpReport& r, const std::filesystem::path& dir);
std::vector<std::string> emit_report(const TrainReport& r, const std::filesystem::path& dir);
std::vector<std::string> emit_report(const GrfReport& r, const std::filesystem::path& dir);
std::vector<std::string> emit_report(const GradCheckReport& r, const std::filesystem::path& dir);

struct Manifest {
  std::string command;
  std::string config_echo;  ///< TOML text accepted by the config loader
  std::uint64_t seed = 0;
  int threads = 1;
  double wall_ms = 0.0;
  std::vector<std::string> files;
};

/// manifest.json: command, config echo, seed, threads, library versions,
/// files and wall time. The only run output that is not a pure function of
/// the configuration, through wall_ms.
void write_manifest(const Manifest& m, const std::filesystem::path& dir);

}  // namespace specfno::io
