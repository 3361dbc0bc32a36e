#include "specfno/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "specfno/container.hpp"
#include "specfno/errors.hpp"
#include "specfno/grf.hpp"
#include "specfno/report_io.hpp"
#include "specfno/spectral.hpp"

namespace specfno::cli {
namespace fs = std::filesystem;
using config::RunConfig;

namespace {

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

struct Context {
  const RunConfig& cfg;
  const CommandOptions& opt;
  fs::path target;
  CommandOutcome out;
  bool created = false;

  // Created on first use, after the computation, so failed runs leave nothing.
  const fs::path& dir() {
    if (!created) {
      prepare_dir(target);
      created = true;
    }
    return target;
  }

  void log(const char* fmt, ...) const __attribute__((format(printf, 2, 3))) {
    if (!opt.log) return;
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    *opt.log << buf << '\n';
    opt.log->flush();
  }

  void add(const std::vector<std::string>& files) { out.files.insert(out.files.end(), files.begin(), files.end()); }

  void fail(const std::string& message) {
    out.status = kExitNumerical;
    out.message = message;
  }
};

std::vector<fno::InitScheme> init_list(const RunConfig& cfg) {
  std::vector<fno::InitScheme> out;
  for (const auto& s : cfg.experiment.inits) out.push_back(config::parse_init(s));
  return out;
}

void log_series(const Context& ctx, const std::vector<analysis::SeriesSummary>& series, const char* what) {
  for (const auto& s : series) {
    if (s.fit.fit) {
      ctx.log("s=%-4g %s %d  slope %+.3f (%d points)%s", s.s, what, s.layer, s.fit.fit->slope, s.fit.points,
              s.monotone ? "" : "  not monotone");
    } else {
      ctx.log("s=%-4g %s %d  no fit (%d points)", s.s, what, s.layer, s.fit.points);
    }
  }
}

void sample_grf_cmd(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  io::GrfReport report;
  report.tau = c.grf.tau;
  report.min_wavenumber = c.grf.min_wavenumber;
  std::vector<GridField> fields;
  for (int j = 0; j < c.grf.count; ++j) {
    grf::GrfSpec spec;
    spec.s = c.grf.s;
    spec.dim = c.model.dim;
    spec.n_ref = c.grf.n_ref;
    spec.tau = c.grf.tau;
    spec.seed = c.run.seed + 1 + std::uint64_t(j);
    GridField f = grf::sample_grf(spec);
    io::GrfSampleRecord r;
    r.index = j;
    r.seed = spec.seed;
    r.s = spec.s;
    r.n_ref = spec.n_ref;
    r.l2 = spectral::norm(f, spectral::NormKind::l2);
    r.linf = spectral::norm(f, spectral::NormKind::linf);
    r.spectral_slope = grf::empirical_spectral_slope(f, c.grf.min_wavenumber);
    r.expected_slope = -(2.0 * spec.s + spec.dim);
    ctx.log("field %d  seed %llu  l2 %.4f  spectral slope %+.3f (law %+.1f)", j, (unsigned long long)r.seed, r.l2,
            r.spectral_slope, r.expected_slope);
    report.samples.push_back(r);
    fields.push_back(std::move(f));
  }
  for (std::size_t j = 0; j < fields.size(); ++j) {
    const std::string stem = "field_" + std::to_string(j);
    io::save_field(fields[j], ctx.dir() / (stem + ".json"));
    ctx.add({stem + ".json", stem + ".bin"});
  }
  ctx.add(io::emit_report(report, ctx.dir()));
}

void converge_cmd(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  analysis::ConvergenceOptions o;
  o.lifting = analysis::parse_lifting(c.experiment.lifting);
  o.tau = c.grf.tau;
  o.window = c.fit_window();
  o.threads = c.run.threads;
  const auto report = analysis::convergence_experiment(c.model_config(1, 1), c.init_scheme(), c.experiment.s_list,
                                                       c.experiment.n_list, c.experiment.n_ref,
                                                       c.experiment.n_samples, c.run.seed, o);
  log_series(ctx, report.series, "layer");
  ctx.add(io::emit_report(report, ctx.dir()));
}

void interp_cmd(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const auto report = analysis::interpolation_study(c.experiment.s_list, c.experiment.n_list, c.experiment.n_ref,
                                                    c.experiment.n_samples, c.run.seed, c.model.dim, c.grf.tau);
  log_series(ctx, report.series, "interp");
  ctx.add(io::emit_report(report, ctx.dir()));
}

void decompose_cmd(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const fno::FnoConfig mc = c.model_config(1, 1);
  const double s = c.experiment.s;
  const auto report = analysis::decompose_experiment(mc, c.init_scheme(), s, c.experiment.n, c.experiment.n_ref,
                                                     c.run.seed, c.grf.tau);
  // Sup-norm growth audit on the reference trace of the same run, in H^{s'}
  // for some s' < s.
  const auto params = fno::init_params(mc, c.init_scheme(), c.run.seed);
  grf::GrfSpec spec;
  spec.s = s;
  spec.dim = mc.dim;
  spec.n_ref = c.experiment.n_ref;
  spec.tau = c.grf.tau;
  spec.seed = c.run.seed + 1;
  const auto ref = fno::forward(params, grf::sample_grf(spec), true);
  const auto lemma = analysis::lemma_diagnostic(params, *ref.trace, s > 1.0 ? s - 0.5 : 0.5 * s);

  bool ok = true;
  for (const auto& r : report.rows) {
    ctx.log("layer %d  e0 %.3e  e1 %.3e  e2 %.3e  e3 %.3e  items 2/3/4 %s/%s/%s", r.layer, r.e0, r.e1, r.e2_full, r.e3,
            r.item2_holds() ? "ok" : "FAIL", r.item3_holds() ? "ok" : "FAIL", r.item4_holds() ? "ok" : "FAIL");
    ok = ok && r.item2_holds() && r.item3_holds() && r.item4_holds();
  }
  for (const auto& l : lemma) ok = ok && l.holds();
  ctx.add(io::emit_report(report, lemma, ctx.dir()));
  if (!ok) ctx.fail("error-component identities or bounds violated");
}

void state_norms_cmd(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const auto report = analysis::state_norm_experiment(c.model_config(1, 1), init_list(c), c.experiment.n,
                                                      c.experiment.s, c.experiment.n_seeds, c.run.seed);
  for (const auto& [init, g] : report.growth) ctx.log("%-12s growth %.4g", init.c_str(), g);
  ctx.add(io::emit_report(report, ctx.dir()));
}

void train_cmd(Context& ctx, bool scheduled) {
  const RunConfig& c = ctx.cfg;
  const auto kind = train::parse_dataset(c.train.dataset);
  const auto tc = c.train_config();
  std::optional<train::SchedulerConfig> sched;
  if (scheduled) {
    sched = c.scheduler_config();
    sched->validate(c.train.n_ref);
  } else if (c.train.n_ref % tc.grid != 0) {
    throw PreconditionError("train.grid " + std::to_string(tc.grid) + " does not divide n_ref");
  }
  const fno::FnoConfig mc = c.model_config(1, train::target_channels(kind, c.model.dim));
  const auto data = train::make_dataset(kind, {c.train.n_train, c.train.n_val, c.train.n_test}, c.train.s,
                                        c.train.n_ref, c.run.seed, c.model.dim, c.grf.tau);
  const auto params = fno::init_params(mc, c.init_scheme(), c.run.seed);
  const auto result = train::train_loop(params, data, tc, sched, ctx.opt.record_wall_time);

  io::TrainReport report;
  report.mode = scheduled ? "scheduled" : "fixed";
  report.dataset = c.train.dataset;
  report.loss = c.train.loss;
  report.n_ref = c.train.n_ref;
  report.ladder = scheduled ? c.scheduler.ladder : std::vector<int>{tc.grid};
  report.history = result.history;
  if (!result.history.epochs.empty()) {
    const auto& last = result.history.epochs.back();
    ctx.log("%zu epochs  final grid %d  train loss %.4e  test err %.4e  grid-point epochs %.0f",
            result.history.epochs.size(),
            last.grid, last.train_loss, last.test_err, last.cum_gridpoint_epochs);
  }
  for (int e : result.history.switch_epochs) ctx.log("grid doubled after epoch %d", e);
  io::save_params(result.params, ctx.dir() / "checkpoint.json");
  ctx.add({"checkpoint.json", "checkpoint.bin"});
  ctx.add(io::emit_report(report, ctx.dir()));
}

void grad_check_cmd(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const auto& g = c.gradcheck;
  io::GradCheckReport report;
  report.tolerance = g.tolerance;
  report.h = g.h;
  for (const auto& ds : g.datasets) {
    const auto kind = train::parse_dataset(ds);
    fno::FnoConfig mc = c.model_config(1, train::target_channels(kind, c.model.dim));
    mc.width = g.width;
    mc.modes = g.modes;
    mc.layers = g.layers;
    const auto params = fno::init_params(mc, c.init_scheme(), c.run.seed);
    const auto data =
        train::make_dataset(kind, {g.samples, 0, 0}, c.train.s, g.n, c.run.seed, c.model.dim, c.grf.tau);
    for (const auto& loss : g.losses) {
      io::GradCheckRun run{ds, loss, train::gradient_check(params, data.train, train::parse_loss(loss),
                                                           {g.coordinates, g.h, c.run.seed})};
      ctx.log("%-18s %-12s max relative error %.3e", ds.c_str(), loss.c_str(), run.result.max_rel_err);
      report.runs.push_back(std::move(run));
    }
  }
  const double worst = report.max_rel_err();
  ctx.log("max relative error %.3e (tolerance %.0e)", worst, g.tolerance);
  ctx.add(io::emit_report(report, ctx.dir()));
  if (!(worst < g.tolerance)) ctx.fail("gradient check failed: max relative error " + io::format_real(worst));
}

using Runner = std::function<void(Context&)>;

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table{
      {"sample-grf", sample_grf_cmd},
      {"converge", converge_cmd},
      {"decompose", decompose_cmd},
      {"state-norms", state_norms_cmd},
      {"train", [](Context& c) { train_cmd(c, false); }},
      {"train-scheduled", [](Context& c) { train_cmd(c, true); }},
      {"interp-check", interp_cmd},
      {"grad-check", grad_check_cmd},
  };
  return table;
}

}  // namespace

void tune_allocator() {
#if defined(__GLIBC__)
  // Field buffers are a few MB each; keep them on the heap and never trim, so
  // repeated allocation does not turn into mmap/munmap page-fault traffic.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, -1);
#endif
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"sample-grf", "converge",        "decompose",    "state-norms",
                                              "train",      "train-scheduled", "interp-check", "grad-check"};
  return names;
}

CommandOutcome run_command(const std::string& name, const RunConfig& cfg, const CommandOptions& options) {
  const auto it = runners().find(name);
  if (it == runners().end()) throw ConfigError("unknown command '" + name + "'");
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  Context ctx{cfg, options, cfg.output_dir(), {}};
  it->second(ctx);
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  io::write_manifest({name, cfg.echo(), cfg.run.seed, cfg.run.threads, wall_ms, ctx.out.files}, ctx.dir());
  ctx.out.files.push_back("manifest.json");
  return ctx.out;
}

int exit_code_for(const std::exception_ptr& e, std::ostream& err) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError& x) {
    err << "config error: " << x.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionError& x) {
    err << "precondition violated: " << x.what() << '\n';
    return kExitPrecondition;
  } catch (const NumericalError& x) {
    err << "numerical check failed: " << x.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& x) {
    err << "io error: " << x.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& x) {
    err << "io error: " << x.what() << '\n';
    return kExitIo;
  } catch (const std::exception& x) {
    err << "internal error: " << x.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace specfno::cli
