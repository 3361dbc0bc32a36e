#include "specfno/report_io.hpp"

#include <Eigen/Core>
#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "specfno/errors.hpp"

namespace specfno::io {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json header(const char* schema) {
  json j = json::object();
  j["schema"] = schema;
  j["schema_version"] = kReportSchemaVersion;
  return j;
}

json optional_real(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json fit_json(const analysis::SeriesFit& f) {
  json j = json::object();
  j["points"] = f.points;
  if (f.fit) {
    j["slope"] = f.fit->slope;
    j["intercept"] = f.fit->intercept;
    j["rms_residual"] = f.fit->rms_residual;
  } else {
    j["slope"] = nullptr;
    j["intercept"] = nullptr;
    j["rms_residual"] = nullptr;
  }
  return j;
}

json series_json(const std::vector<analysis::SeriesSummary>& series) {
  json out = json::array();
  for (const auto& s : series) {
    json j = json::object();
    j["s"] = s.s;
    j["layer"] = s.layer;
    j["mean"] = s.mean;
    j["stddev"] = s.stddev;
    j["lower"] = s.lower;
    j["upper"] = s.upper;
    j["fit"] = fit_json(s.fit);
    json seeds = json::array();
    for (const auto& v : s.seed_slopes) seeds.push_back(optional_real(v));
    j["seed_slopes"] = seeds;
    j["seed_slope_mean"] = optional_real(s.seed_slope_mean);
    j["seed_slope_std"] = optional_real(s.seed_slope_std);
    j["monotone"] = s.monotone;
    out.push_back(j);
  }
  return out;
}

// Comma-joined row builder.
class Row {
 public:
  Row& operator<<(double v) { return add(format_real(v)); }
  Row& operator<<(int v) { return add(std::to_string(v)); }
  Row& operator<<(std::uint64_t v) { return add(std::to_string(v)); }
  Row& operator<<(bool v) { return add(v ? "1" : "0"); }
  Row& operator<<(const std::string& v) { return add(v); }
  std::string str() const { return text_ + "\n"; }

 private:
  Row& add(const std::string& field) {
    if (!first_) text_ += ',';
    text_ += field;
    first_ = false;
    return *this;
  }
  std::string text_;
  bool first_ = true;
};

std::vector<std::string> emit_pair(const json& j, const std::string& csv, const fs::path& dir, const std::string& name) {
  write_text(dir / (name + ".json"), j.dump(2) + "\n");
  write_text(dir / (name + ".csv"), csv);
  return {name + ".json", name + ".csv"};
}

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double GradCheckReport::max_rel_err() const {
  double m = 0.0;
  for (const auto& r : runs) m = std::max(m, r.result.max_rel_err);
  return m;
}

json to_json(const analysis::ErrorReport& r) {
  json j = header("error_report");
  j["fingerprint"] = r.fingerprint;
  j["init"] = r.init;
  j["activation"] = r.activation;
  j["encoding"] = r.encoding;
  j["lifting"] = r.lifting;
  j["s_list"] = r.s_list;
  j["ns"] = r.ns;
  j["n_ref"] = r.n_ref;
  j["n_samples"] = r.n_samples;
  j["layers"] = r.layers;
  j["seed"] = r.seed;
  j["series"] = series_json(r.series);
  return j;
}

std::string to_csv(const analysis::ErrorReport& r) {
  std::string out = "s,seed,N,layer,rel_err\n";
  for (const auto& e : r.records) out += (Row() << e.s << e.seed << e.n << e.layer << e.rel_err).str();
  return out;
}

json to_json(const analysis::DecompReport& r, const std::vector<analysis::LemmaRow>& lemma) {
  json j = header("decomp_report");
  j["fingerprint"] = r.fingerprint;
  j["init"] = r.init;
  j["s"] = r.s;
  j["N"] = r.n;
  j["n_ref"] = r.n_ref;
  j["seed"] = r.seed;
  j["e1_oracle"] = r.e1_oracle;
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"layer", row.layer},
                    {"e0", row.e0},
                    {"e1", row.e1},
                    {"e2_modes", row.e2_modes},
                    {"e2_full", row.e2_full},
                    {"e3", row.e3},
                    {"e0_next", row.e0_next},
                    {"item2_rhs", row.item2_rhs},
                    {"item3_rhs", row.item3_rhs},
                    {"item4_rhs", row.item4_rhs},
                    {"item4_identity", row.item4_identity},
                    {"e3_consistency", row.e3_consistency},
                    {"item2_holds", row.item2_holds()},
                    {"item3_holds", row.item3_holds()},
                    {"item4_holds", row.item4_holds()}});
  }
  j["rows"] = rows;
  json lj = json::array();
  for (const auto& l : lemma) {
    lj.push_back({{"layer", l.layer}, {"linf_next", l.linf_next}, {"bound", l.bound}, {"hs_next", l.hs_next},
                  {"holds", l.holds()}});
  }
  j["lemma"] = lj;
  return j;
}

std::string to_csv(const analysis::DecompReport& r) {
  std::string out =
      "layer,e0,e1,e2_modes,e2_full,e3,e0_next,item2_rhs,item3_rhs,item4_rhs,item4_identity,e3_consistency,"
      "item2_holds,item3_holds,item4_holds\n";
  for (const auto& x : r.rows) {
    out += (Row() << x.layer << x.e0 << x.e1 << x.e2_modes << x.e2_full << x.e3 << x.e0_next << x.item2_rhs
                  << x.item3_rhs << x.item4_rhs << x.item4_identity << x.e3_consistency << x.item2_holds()
                  << x.item3_holds() << x.item4_holds())
               .str();
  }
  return out;
}

json to_json(const analysis::StateNormReport& r) {
  json j = header("state_norms");
  j["fingerprint"] = r.fingerprint;
  j["N"] = r.n;
  j["s"] = r.s;
  json growth = json::array();
  for (const auto& [init, g] : r.growth) growth.push_back({{"init", init}, {"growth", g}});
  j["growth"] = growth;
  json profiles = json::array();
  for (const auto& rec : r.records) {
    if (profiles.empty() || profiles.back()["init"] != rec.init || profiles.back()["seed"] != rec.seed) {
      profiles.push_back({{"init", rec.init}, {"seed", rec.seed}, {"l2", json::array()}});
    }
    profiles.back()["l2"].push_back(rec.l2);
  }
  j["profiles"] = profiles;
  return j;
}

std::string to_csv(const analysis::StateNormReport& r) {
  std::string out = "init,seed,layer,l2\n";
  for (const auto& e : r.records) out += (Row() << e.init << e.seed << e.layer << e.l2).str();
  return out;
}

json to_json(const analysis::InterpReport& r) {
  json j = header("interp_report");
  j["s_list"] = r.s_list;
  j["ns"] = r.ns;
  j["n_ref"] = r.n_ref;
  j["n_samples"] = r.n_samples;
  j["seed"] = r.seed;
  j["series"] = series_json(r.series);
  return j;
}

std::string to_csv(const analysis::InterpReport& r) {
  std::string out = "s,seed,N,l2_err,tail,alias\n";
  for (const auto& e : r.records) out += (Row() << e.s << e.seed << e.n << e.l2_err << e.tail << e.alias).str();
  return out;
}

json to_json(const TrainReport& r) {
  json j = header("history");
  j["mode"] = r.mode;
  j["dataset"] = r.dataset;
  j["loss"] = r.loss;
  j["n_ref"] = r.n_ref;
  j["ladder"] = r.ladder;
  j["switch_epochs"] = r.history.switch_epochs;
  json epochs = json::array();
  for (const auto& e : r.history.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"grid", e.grid},
                      {"train_loss", e.train_loss},
                      {"val_err", e.val_err},
                      {"test_err", e.test_err},
                      {"wall_ms", e.wall_ms},
                      {"cum_gridpoint_epochs", e.cum_gridpoint_epochs}});
  }
  j["epochs"] = epochs;
  if (!r.history.epochs.empty()) {
    j["final_test_err"] = r.history.epochs.back().test_err;
    j["total_gridpoint_epochs"] = r.history.epochs.back().cum_gridpoint_epochs;
  }
  return j;
}

std::string to_csv(const TrainReport& r) {
  std::string out = "epoch,grid,train_loss,val_err,test_err,wall_ms,cum_gridpoint_epochs\n";
  for (const auto& e : r.history.epochs) {
    out += (Row() << e.epoch << e.grid << e.train_loss << e.val_err << e.test_err << e.wall_ms
                  << e.cum_gridpoint_epochs)
               .str();
  }
  return out;
}

json to_json(const GrfReport& r) {
  json j = header("grf_report");
  j["tau"] = r.tau;
  j["min_wavenumber"] = r.min_wavenumber;
  json samples = json::array();
  for (const auto& x : r.samples) {
    samples.push_back({{"index", x.index},
                       {"seed", x.seed},
                       {"s", x.s},
                       {"n_ref", x.n_ref},
                       {"l2", x.l2},
                       {"linf", x.linf},
                       {"spectral_slope", x.spectral_slope},
                       {"expected_slope", x.expected_slope},
                       {"field", "field_" + std::to_string(x.index) + ".json"}});
  }
  j["samples"] = samples;
  return j;
}

std::string to_csv(const GrfReport& r) {
  std::string out = "index,seed,s,n_ref,l2,linf,spectral_slope,expected_slope\n";
  for (const auto& x : r.samples) {
    out += (Row() << x.index << x.seed << x.s << x.n_ref << x.l2 << x.linf << x.spectral_slope << x.expected_slope)
               .str();
  }
  return out;
}

json to_json(const GradCheckReport& r) {
  json j = header("grad_check");
  j["tolerance"] = r.tolerance;
  j["h"] = r.h;
  j["max_rel_err"] = r.max_rel_err();
  j["passed"] = r.max_rel_err() < r.tolerance;
  json runs = json::array();
  for (const auto& run : r.runs) {
    runs.push_back({{"dataset", run.dataset},
                    {"loss", run.loss},
                    {"max_rel_err", run.result.max_rel_err},
                    {"grad_scale", run.result.grad_scale},
                    {"coordinates", run.result.entries.size()}});
  }
  j["runs"] = runs;
  return j;
}

std::string to_csv(const GradCheckReport& r) {
  std::string out = "dataset,loss,index,adjoint,finite_difference,rel_err\n";
  for (const auto& run : r.runs) {
    for (const auto& e : run.result.entries) {
      out += (Row() << run.dataset << run.loss << e.index << e.adjoint << e.finite_difference << e.rel_err).str();
    }
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(text.data(), std::streamsize(text.size()));
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> emit_report(const analysis::ErrorReport& r, const fs::path& dir) {
  return emit_pair(to_json(r), to_csv(r), dir, "error_report");
}

std::vector<std::string> emit_report(const analysis::DecompReport& r, const std::vector<analysis::LemmaRow>& lemma,
                                     const fs::path& dir) {
  return emit_pair(to_json(r, lemma), to_csv(r), dir, "decomp_report");
}

std::vector<std::string> emit_report(const analysis::StateNormReport& r, const fs::path& dir) {
  return emit_pair(to_json(r), to_csv(r), dir, "state_norms");
}

std::vector<std::string> emit_report(const analysis::InterpReport& r, const fs::path& dir) {
  return emit_pair(to_json(r), to_csv(r), dir, "interp_report");
}

std::vector<std::string> emit_report(const TrainReport& r, const fs::path& dir) {
  return emit_pair(to_json(r), to_csv(r), dir, "history");
}

std::vector<std::string> emit_report(const GrfReport& r, const fs::path& dir) {
  return emit_pair(to_json(r), to_csv(r), dir, "grf_report");
}

std::vector<std::string> emit_report(const GradCheckReport& r, const fs::path& dir) {
  return emit_pair(to_json(r), to_csv(r), dir, "grad_check");
}

void write_manifest(const Manifest& m, const fs::path& dir) {
  json j = header("manifest");
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["threads"] = m.threads;
  j["config"] = m.config_echo;
  j["files"] = m.files;
  json versions = json::object();
  versions["specfno"] = kVersion;
  versions["fftw"] = std::string(fftw_version);
  versions["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION);
  versions["compiler"] = std::string(__VERSION__);
  j["versions"] = versions;
  j["wall_ms"] = m.wall_ms;
  write_text(dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace specfno::io
