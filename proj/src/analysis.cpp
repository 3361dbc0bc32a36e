#include "specfno/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "specfno/errors.hpp"
#include "specfno/grf.hpp"
#include "specfno/parallel.hpp"
#include "specfno/spectral.hpp"

namespace specfno::analysis {
namespace {

using fno::FnoConfig;
using fno::FnoParams;
using fno::LayerTrace;
using spectral::NormKind;

double discrete_l2(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

double spectral_l2(const SpectralField& c, const fno::ModeSet* modes) {
  double sum = 0.0;
  for (int ch = 0; ch < c.channels(); ++ch) {
    if (modes == nullptr) {
      for (const auto& z : c.channel(ch)) sum += std::norm(z);
    } else {
      for (const auto& mode : modes->all()) sum += std::norm(c.at(mode.freq, ch));
    }
  }
  return std::sqrt(sum);
}

GridField difference(const GridField& a, const GridField& b) {
  GridField out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] -= b.values()[i];
  return out;
}

double max_abs(const GridField& f) {
  double m = 0.0;
  for (double x : f.values()) m = std::max(m, std::abs(x));
  return m;
}

// sum_{k in modes} P(k) c(k) e^{2 pi i <k, x>} sampled on the grid of c.
GridField apply_weights(const FnoParams& params, int t, const SpectralField& c) {
  const int w = params.config.width;
  SpectralField y(c.dim(), c.n(), w);
  for (const auto& mode : params.modes.all()) {
    for (int o = 0; o < w; ++o) {
      Complex acc(0.0, 0.0);
      for (int i = 0; i < w; ++i) acc += params.spectral_weight(t, mode, o, i) * c.at(mode.freq, i);
      y.at(mode.freq, o) = acc;
    }
  }
  return spectral::idft_on_grid(y, c.n());
}

std::string describe(const FnoConfig& c) {
  std::ostringstream os;
  os << "dim=" << c.dim << ";in=" << c.in_channels << ";out=" << c.out_channels << ";width=" << c.width
     << ";layers=" << c.layers << ";modes=" << c.modes << ";activation=" << fno::to_string(c.activation)
     << ";lift_activation=" << fno::to_string(c.lift_activation) << ";proj_activation=" << c.proj_activation
     << ";encoding=" << fno::to_string(c.encoding);
  return os.str();
}

void check_ladder(const std::vector<int>& ns, int n_ref) {
  if (ns.empty()) throw PreconditionError("resolution list is empty");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 2 || ns[i] >= n_ref || n_ref % ns[i] != 0) {
      throw PreconditionError("resolution " + std::to_string(ns[i]) + " must divide and be below n_ref = " +
                              std::to_string(n_ref));
    }
    if (i > 0 && ns[i] <= ns[i - 1]) throw PreconditionError("resolutions must be strictly increasing");
  }
}

grf::GrfSpec input_spec(double s, int dim, int n_ref, double tau, std::uint64_t seed) {
  grf::GrfSpec g;
  g.s = s;
  g.dim = dim;
  g.n_ref = n_ref;
  g.tau = tau;
  g.seed = seed;
  return g;
}

// Shared aggregation for (s, layer) series indexed [sample][N].
SeriesSummary summarize_series(double s, int layer, const std::vector<int>& ns,
                               const std::vector<std::vector<double>>& per_sample, double floor, FitWindow window) {
  SeriesSummary out;
  out.s = s;
  out.layer = layer;
  for (std::size_t j = 0; j < ns.size(); ++j) {
    std::vector<double> column;
    for (const auto& sample : per_sample) column.push_back(sample[j]);
    const double m = mean(column);
    const double sd = stddev(column);
    out.mean.push_back(m);
    out.stddev.push_back(sd);
    out.lower.push_back(m - 2.0 * sd);
    out.upper.push_back(m + 2.0 * sd);
  }
  out.fit = fit_series(ns, out.mean, floor, window);
  std::vector<double> slopes;
  for (const auto& sample : per_sample) {
    const SeriesFit f = fit_series(ns, sample, floor, window);
    out.seed_slopes.push_back(f.fit ? std::optional<double>(f.fit->slope) : std::nullopt);
    if (f.fit) slopes.push_back(f.fit->slope);
  }
  if (!slopes.empty()) {
    out.seed_slope_mean = mean(slopes);
    out.seed_slope_std = stddev(slopes);
  }
  out.monotone = true;
  for (std::size_t j = 1; j < out.mean.size(); ++j) {
    if (!(out.mean[j] < out.mean[j - 1])) out.monotone = false;
  }
  return out;
}

}  // namespace

std::string to_string(Lifting l) { return l == Lifting::layer ? "layer" : "state"; }

Lifting parse_lifting(const std::string& s) {
  if (s == "layer") return Lifting::layer;
  if (s == "state") return Lifting::state;
  throw ConfigError("unknown lifting '" + s + "' (expected layer or state)");
}

std::vector<double> relative_layer_error(const LayerTrace& coarse, const LayerTrace& ref, const FnoConfig& config,
                                         Lifting lifting) {
  if (coarse.states.size() != ref.states.size() || coarse.states.empty()) {
    throw PreconditionError("relative_layer_error: traces have different layer counts");
  }
  if (lifting == Lifting::layer && coarse.pre_activations.size() != coarse.states.size()) {
    throw PreconditionError("relative_layer_error: layer lifting needs the coarse pre-activations");
  }
  const int n = coarse.states[0].n();
  const int n_ref = ref.states[0].n();
  if (n_ref % n != 0 || coarse.states[0].dim() != ref.states[0].dim()) {
    throw PreconditionError("relative_layer_error: grid " + std::to_string(n) + " does not nest in " +
                            std::to_string(n_ref));
  }
  std::vector<double> errs;
  for (std::size_t l = 0; l < ref.states.size(); ++l) {
    const GridField& truth = ref.states[l];
    GridField lifted = lifting == Lifting::layer
                           ? fno::activation_apply(spectral::trig_interpolate(coarse.pre_activations[l], n_ref),
                                                   fno::state_activation(config, int(l)))
                           : spectral::trig_interpolate(coarse.states[l], n_ref);
    if (!lifted.same_shape(truth)) throw PreconditionError("relative_layer_error: state shapes differ");
    const double denom = discrete_l2(truth.values());
    if (denom == 0.0) throw PreconditionError("relative_layer_error: reference state is zero");
    errs.push_back(discrete_l2(difference(lifted, truth).values()) / denom);
  }
  return errs;
}

LineFit fit_loglog_slope(const std::vector<int>& ns, const std::vector<double>& errs) {
  if (ns.size() != errs.size()) throw PreconditionError("fit_loglog_slope: size mismatch");
  if (ns.size() < 3) throw PreconditionError("fit_loglog_slope: needs at least 3 points");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(errs[i] > 0.0) || ns[i] <= 0) {
      throw PreconditionError("fit_loglog_slope: errors and resolutions must be positive");
    }
    x.push_back(std::log(double(ns[i])));
    y.push_back(std::log(errs[i]));
  }
  return fit_line(x, y);
}

double rounding_floor(int n_ref, int dim) {
  return 10.0 * std::numeric_limits<double>::epsilon() * dim * std::log2(double(n_ref));
}

SeriesFit fit_series(const std::vector<int>& ns, const std::vector<double>& errs, double floor, FitWindow window) {
  std::vector<int> keep_n;
  std::vector<double> keep_e;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < window.min_n || ns[i] > window.max_n) continue;
    if (!(errs[i] > floor) || !std::isfinite(errs[i])) continue;
    keep_n.push_back(ns[i]);
    keep_e.push_back(errs[i]);
  }
  SeriesFit out;
  out.points = int(keep_n.size());
  if (keep_n.size() >= 3) out.fit = fit_loglog_slope(keep_n, keep_e);
  return out;
}

const SeriesSummary& ErrorReport::summary(double s, int layer) const {
  for (const auto& series_entry : series) {
    if (series_entry.s == s && series_entry.layer == layer) return series_entry;
  }
  throw PreconditionError("ErrorReport: no series for s = " + std::to_string(s) + ", layer " +
                          std::to_string(layer));
}

void summarize(ErrorReport& report, double floor, FitWindow window) {
  report.series.clear();
  for (double s : report.s_list) {
    for (int layer = 0; layer < report.layers; ++layer) {
      // [sample][N], samples in first-seen seed order.
      std::vector<std::uint64_t> seeds;
      std::vector<std::vector<double>> per_sample;
      for (const auto& r : report.records) {
        if (r.s != s || r.layer != layer) continue;
        auto it = std::find(seeds.begin(), seeds.end(), r.seed);
        if (it == seeds.end()) {
          seeds.push_back(r.seed);
          per_sample.emplace_back(report.ns.size(), std::numeric_limits<double>::quiet_NaN());
          it = seeds.end() - 1;
        }
        const auto jn = std::find(report.ns.begin(), report.ns.end(), r.n);
        if (jn == report.ns.end()) throw PreconditionError("summarize: record at unlisted N");
        per_sample[it - seeds.begin()][jn - report.ns.begin()] = r.rel_err;
      }
      if (per_sample.empty()) continue;
      report.series.push_back(summarize_series(s, layer, report.ns, per_sample, floor, window));
    }
  }
}

ErrorReport convergence_experiment(const FnoConfig& config, fno::InitScheme scheme, const std::vector<double>& s_list,
                                   const std::vector<int>& ns, int n_ref, int n_samples, std::uint64_t seed,
                                   const ConvergenceOptions& options) {
  config.validate();
  if (config.in_channels != 1) throw PreconditionError("convergence_experiment: GRF inputs have one channel");
  if (s_list.empty()) throw PreconditionError("convergence_experiment: s list is empty");
  if (n_samples < 2) throw PreconditionError("convergence_experiment: spread needs at least 2 samples");
  check_ladder(ns, n_ref);
  fno::check_modes(config.modes, ns.front());

  const FnoParams params = fno::init_params(config, scheme, seed);
  const std::size_t tasks = s_list.size() * std::size_t(n_samples);
  std::vector<std::vector<ErrorRecord>> slots(tasks);
  parallel_for(tasks, options.threads, [&](std::size_t task) {
    const double s = s_list[task / n_samples];
    const std::uint64_t input_seed = seed + 1 + task % n_samples;
    const GridField a = grf::sample_grf(input_spec(s, config.dim, n_ref, options.tau, input_seed));
    if (spectral::norm(a, NormKind::l2) < 1e-14) {
      throw PreconditionError("convergence_experiment: degenerate (zero) input field");
    }
    const auto ref = fno::forward(params, a, true);
    for (int n : ns) {
      const auto coarse = fno::forward(params, grf::subsample(a, n), true, options.lifting == Lifting::layer);
      const auto errs = relative_layer_error(*coarse.trace, *ref.trace, config, options.lifting);
      for (std::size_t l = 0; l < errs.size(); ++l) slots[task].push_back({s, input_seed, n, int(l), errs[l]});
    }
  });

  ErrorReport report;
  report.fingerprint = fingerprint(describe(config));
  report.init = scheme.name();
  report.activation = fno::to_string(config.activation);
  report.encoding = fno::to_string(config.encoding);
  report.lifting = to_string(options.lifting);
  report.s_list = s_list;
  report.ns = ns;
  report.n_ref = n_ref;
  report.n_samples = n_samples;
  report.layers = config.layers + 1;
  report.seed = seed;
  for (auto& slot : slots) report.records.insert(report.records.end(), slot.begin(), slot.end());
  summarize(report, rounding_floor(n_ref, config.dim), options.window);
  return report;
}

std::vector<double> state_norm_profile(const LayerTrace& trace) {
  std::vector<double> out;
  for (const auto& v : trace.states) out.push_back(spectral::norm(v, NormKind::l2));
  return out;
}

StateNormReport state_norm_experiment(const FnoConfig& config, const std::vector<fno::InitScheme>& inits, int n,
                                      double s, int n_seeds, std::uint64_t seed_base) {
  config.validate();
  if (config.in_channels != 1) throw PreconditionError("state_norm_experiment: GRF inputs have one channel");
  if (n_seeds < 1) throw PreconditionError("state_norm_experiment: needs at least one seed");
  if (config.layers < 1) throw PreconditionError("state_norm_experiment: needs at least one layer");
  StateNormReport report;
  report.fingerprint = fingerprint(describe(config));
  report.n = n;
  report.s = s;
  for (const auto& init : inits) {
    for (int j = 0; j < n_seeds; ++j) {
      const std::uint64_t seed = seed_base + j;
      const FnoParams params = fno::init_params(config, init, seed);
      const GridField a = grf::sample_grf(input_spec(s, config.dim, n, 3.0, seed + 1));
      const auto result = fno::forward(params, a, true);
      const auto profile = state_norm_profile(*result.trace);
      for (std::size_t l = 0; l < profile.size(); ++l) {
        report.records.push_back({init.name(), seed, int(l), profile[l]});
      }
      report.growth.emplace_back(init.name(), profile.back() / profile[1]);
    }
  }
  return report;
}

double activation_lipschitz(fno::Activation a) {
  switch (a) {
    case fno::Activation::gelu: return 1.13;
    case fno::Activation::relu:
    case fno::Activation::identity: return 1.0;
  }
  return 1.0;
}

bool DecompRow::item2_holds(double tol) const {
  return std::abs(e2_full - item2_rhs) <= tol * std::max(e2_full, item2_rhs);
}

bool DecompRow::item3_holds() const { return e3 <= item3_rhs * (1.0 + 1e-12); }

bool DecompRow::item4_holds() const { return e0_next <= item4_rhs * (1.0 + 1e-12); }

DecompRow error_components(const FnoParams& params, const LayerTrace& coarse, const LayerTrace& ref, int t) {
  const int layers = int(params.layers.size());
  if (t < 0 || t >= layers) {
    throw PreconditionError("error_components: layer " + std::to_string(t) + " outside [0, " +
                            std::to_string(layers) + ")");
  }
  if (coarse.states.size() != std::size_t(layers + 1) || ref.states.size() != coarse.states.size()) {
    throw PreconditionError("error_components: traces do not match the model depth");
  }
  const int n = coarse.states[t].n();
  const int n_ref = ref.states[t].n();
  if (n_ref % n != 0 || n_ref / n < 4) {
    throw PreconditionError("error_components: reference grid must be a multiple >= 4 of N");
  }
  const FnoConfig& cfg = params.config;
  const int d = cfg.dim;
  const fno::ModeSet& modes = params.modes;

  const GridField v_at_grid = grf::subsample(ref.states[t], n);
  const GridField e0 = difference(coarse.states[t], v_at_grid);
  const SpectralField oracle = spectral::dft(ref.states[t]);
  const SpectralField sampled = spectral::dft(v_at_grid);
  const SpectralField e2 = spectral::dft(e0);

  SpectralField e1(d, n, cfg.width), e12(d, n, cfg.width), truth_modes(d, n, cfg.width);
  for (const auto& mode : modes.all()) {
    for (int ch = 0; ch < cfg.width; ++ch) {
      const Complex f = oracle.at(mode.freq, ch);
      e1.at(mode.freq, ch) = sampled.at(mode.freq, ch) - f;
      e12.at(mode.freq, ch) = e1.at(mode.freq, ch) + e2.at(mode.freq, ch);
      truth_modes.at(mode.freq, ch) = f;
    }
  }
  const GridField e3 = apply_weights(params, t, e12);
  const GridField kv = apply_weights(params, t, truth_modes);  // (K v_t)(x_n)
  const GridField kn = fno::spectral_conv(coarse.states[t], params.layers[t].p, modes, cfg.width);

  DecompRow row;
  row.layer = t;
  row.e0 = discrete_l2(e0.values());
  row.e1 = spectral_l2(e1, &modes);
  row.e2_modes = spectral_l2(e2, &modes);
  row.e2_full = spectral_l2(e2, nullptr);
  row.e3 = discrete_l2(e3.values());
  row.e3_consistency = max_abs(difference(difference(kn, kv), e3));

  const GridField e0_next = difference(coarse.states[t + 1], grf::subsample(ref.states[t + 1], n));
  row.e0_next = discrete_l2(e0_next.values());

  // sigma(z + W E0 + E3) - sigma(z), z the reference pre-activation on X^(N).
  const auto& layer = params.layers[t];
  GridField z = fno::pointwise_affine(v_at_grid, layer.w, layer.b);
  const std::vector<double> no_bias(cfg.width, 0.0);
  const GridField we0 = fno::pointwise_affine(e0, layer.w, no_bias);
  double identity = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zi = z.values()[i] + kv.values()[i];
    const double predicted =
        fno::activate(zi + we0.values()[i] + e3.values()[i], cfg.activation) - fno::activate(zi, cfg.activation);
    identity = std::max(identity, std::abs(predicted - e0_next.values()[i]));
  }
  row.item4_identity = identity;

  const fno::ParamNorms norms = fno::parameter_norms(params);
  row.item2_rhs = std::pow(double(n), -0.5 * d) * row.e0;
  row.item3_rhs = std::pow(double(n), 0.5 * d) * norms.p_frobenius[t] * (row.e1 + row.e2_modes);
  row.item4_rhs = activation_lipschitz(cfg.activation) * (norms.w_spectral[t] * row.e0 + row.e3);
  return row;
}

DecompReport decompose_experiment(const FnoConfig& config, fno::InitScheme scheme, double s, int n, int n_ref,
                                  std::uint64_t seed, double tau) {
  config.validate();
  if (config.in_channels != 1) throw PreconditionError("decompose_experiment: GRF inputs have one channel");
  if (n < 2 || n_ref % n != 0 || n_ref / n < 4) {
    throw PreconditionError("decompose_experiment: n_ref must be a multiple >= 4 of N");
  }
  const FnoParams params = fno::init_params(config, scheme, seed);
  const GridField a = grf::sample_grf(input_spec(s, config.dim, n_ref, tau, seed + 1));
  const auto ref = fno::forward(params, a, true);
  const auto coarse = fno::forward(params, grf::subsample(a, n), true);
  DecompReport report;
  report.fingerprint = fingerprint(describe(config));
  report.init = scheme.name();
  report.s = s;
  report.n = n;
  report.n_ref = n_ref;
  report.seed = seed;
  report.e1_oracle = "dft at n_ref of the reference state";
  for (int t = 0; t < config.layers; ++t) report.rows.push_back(error_components(params, *coarse.trace, *ref.trace, t));
  return report;
}

std::vector<LemmaRow> lemma_diagnostic(const FnoParams& params, const LayerTrace& trace, double s) {
  const FnoConfig& cfg = params.config;
  const double m = fno::parameter_norms(params).bound();
  const double b = std::max(1.0, activation_lipschitz(cfg.activation));
  const double sigma_star = std::max(1.0, fno::activate(0.0, cfg.activation));
  const double k_factor = std::pow(double(cfg.modes), 0.5 * cfg.dim);
  std::vector<LemmaRow> rows;
  for (std::size_t t = 0; t + 1 < trace.states.size(); ++t) {
    const GridField& v = trace.states[t];
    LemmaRow row;
    row.layer = int(t);
    row.linf_next = spectral::norm(trace.states[t + 1], NormKind::linf);
    row.bound = sigma_star +
                b * m * (1.0 + spectral::norm(v, NormKind::linf) + k_factor * spectral::norm(v, NormKind::l2));
    row.hs_next = spectral::norm(trace.states[t + 1], NormKind::hs, s);
    rows.push_back(row);
  }
  return rows;
}

InterpReport interpolation_study(const std::vector<double>& s_list, const std::vector<int>& ns, int n_ref,
                                 int n_samples, std::uint64_t seed, int dim, double tau) {
  if (s_list.empty()) throw PreconditionError("interpolation_study: s list is empty");
  if (n_samples < 1) throw PreconditionError("interpolation_study: needs at least one sample");
  check_ladder(ns, n_ref);
  InterpReport report;
  report.s_list = s_list;
  report.ns = ns;
  report.n_ref = n_ref;
  report.n_samples = n_samples;
  report.seed = seed;
  for (double s : s_list) {
    std::vector<std::vector<double>> per_sample;
    for (int j = 0; j < n_samples; ++j) {
      const std::uint64_t input_seed = seed + 1 + j;
      const GridField v = grf::sample_grf(input_spec(s, dim, n_ref, tau, input_seed));
      const SpectralField truth = spectral::dft(v);
      per_sample.emplace_back();
      for (int n : ns) {
        const GridField p = spectral::trig_interpolate(grf::subsample(v, n), n_ref);
        const double err = spectral::norm(difference(v, p), NormKind::l2);
        const auto split = spectral::aliasing_decomposition(truth, n);
        report.records.push_back({s, input_seed, n, err, split.tail, split.alias});
        per_sample.back().push_back(err);
      }
    }
    report.series.push_back(summarize_series(s, 0, ns, per_sample, rounding_floor(n_ref, dim), {}));
  }
  return report;
}

std::string fingerprint(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
  return out;
}

}  // namespace specfno::analysis
