#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "specfno/fno.hpp"
#include "specfno/stats.hpp"

// Measurement engine: multi-resolution forward passes, per-layer relative
// errors against a fine-grid reference, log-log rate fits, state-norm
// profiles and the per-layer error-component decomposition.
namespace specfno::analysis {

/// How a coarse-grid state is carried to the reference grid before it is
/// compared with the reference state.
///   layer  the inverse transform of each layer is evaluated on the fine grid:
///          the pre-activation is trig-interpolated, then the activation is
///          applied pointwise on the fine grid.
///   state  the post-activation state itself is trig-interpolated.
enum class Lifting { layer, state };
std::string to_string(Lifting l);
Lifting parse_lifting(const std::string& s);

/// Relative discrete l2 error per layer of a coarse trace against a
/// reference trace on a grid nested over it. The coarse trace must carry
/// pre-activations when lifting = layer.
std::vector<double> relative_layer_error(const fno::LayerTrace& coarse, const fno::LayerTrace& ref,
                                         const fno::FnoConfig& config, Lifting lifting = Lifting::layer);

/// Least squares on (log N, log err): slope, intercept, RMS residual in log
/// space. Needs >= 3 points, all positive.
LineFit fit_loglog_slope(const std::vector<int>& ns, const std::vector<double>& errs);

/// Errors at or below this are treated as rounding noise and left out of
/// slope fits: 10 * eps * log2(n_ref^d).
double rounding_floor(int n_ref, int dim);

/// Optional restriction of the N values used in a fit.
struct FitWindow {
  int min_n = 0;
  int max_n = std::numeric_limits<int>::max();
};

struct SeriesFit {
  std::optional<LineFit> fit;  ///< nullopt when fewer than 3 points survive
  int points = 0;
};

/// Fit on the points inside the window and above the rounding floor.
SeriesFit fit_series(const std::vector<int>& ns, const std::vector<double>& errs, double floor, FitWindow window = {});

/// One measured error value.
struct ErrorRecord {
  double s = 0.0;
  std::uint64_t seed = 0;
  int n = 0;
  int layer = 0;
  double rel_err = 0.0;
};

/// Aggregate over input seeds for one (s, layer) series.
struct SeriesSummary {
  double s = 0.0;
  int layer = 0;
  std::vector<double> mean;    ///< per N
  std::vector<double> stddev;  ///< per N, sample standard deviation
  std::vector<double> lower;   ///< mean - 2 stddev
  std::vector<double> upper;   ///< mean + 2 stddev
  SeriesFit fit;               ///< fit of the mean curve
  std::vector<std::optional<double>> seed_slopes;
  std::optional<double> seed_slope_mean;
  std::optional<double> seed_slope_std;
  bool monotone = false;  ///< mean strictly decreasing in N
};

struct ErrorReport {
  std::string fingerprint;  ///< hash of the configuration echo
  std::string init;
  std::string activation;
  std::string encoding;
  std::string lifting;
  std::vector<double> s_list;
  std::vector<int> ns;
  int n_ref = 0;
  int n_samples = 0;
  int layers = 0;  ///< states per trace (T + 1)
  std::uint64_t seed = 0;
  std::vector<ErrorRecord> records;  ///< ordered by (s, sample, N, layer)
  std::vector<SeriesSummary> series; ///< ordered by (s, layer)

  const SeriesSummary& summary(double s, int layer) const;
};

/// Builds the per-series summaries from records (the aggregation half of
/// convergence_experiment, exposed for injected data).
void summarize(ErrorReport& report, double floor, FitWindow window = {});

struct ConvergenceOptions {
  Lifting lifting = Lifting::layer;
  double tau = 3.0;
  FitWindow window;
  int threads = 1;
};

/// Seeds: parameters use `seed`; sample j of every s uses GRF seed
/// seed + 1 + j, so series for different s share input phases.
ErrorReport convergence_experiment(const fno::FnoConfig& config, fno::InitScheme scheme,
                                   const std::vector<double>& s_list, const std::vector<int>& ns, int n_ref,
                                   int n_samples, std::uint64_t seed, const ConvergenceOptions& options = {});

/// Continuum L2 norm of every state, t = 0 .. T.
std::vector<double> state_norm_profile(const fno::LayerTrace& trace);

struct StateNormRecord {
  std::string init;
  std::uint64_t seed = 0;
  int layer = 0;
  double l2 = 0.0;
};

struct StateNormReport {
  std::string fingerprint;
  int n = 0;
  double s = 0.0;
  std::vector<StateNormRecord> records;  ///< ordered by (init, seed, layer)
  /// norm(v_T) / norm(v_1) per (init, seed), same order.
  std::vector<std::pair<std::string, double>> growth;
};

/// Profiles for each init over seeds 0 .. n_seeds-1 (parameters and the GRF
/// input both keyed by the seed).
StateNormReport state_norm_experiment(const fno::FnoConfig& config, const std::vector<fno::InitScheme>& inits,
                                      int n, double s, int n_seeds, std::uint64_t seed_base = 0);

/// Per-layer error components. Norms are discrete l2 sums as in the
/// per-layer error bounds; E1 uses the reference-grid DFT as a stand-in for
/// the continuum Fourier transform.
struct DecompRow {
  int layer = 0;
  double e0 = 0.0;        ///< ||E0_t||, n in [N]^d
  double e1 = 0.0;        ///< ||E1_t||, k in kernel modes
  double e2_modes = 0.0;  ///< ||E2_t||, k in kernel modes
  double e2_full = 0.0;   ///< ||E2_t||, k in [[N]]^d
  double e3 = 0.0;        ///< ||E3_t||, n in [N]^d
  double e0_next = 0.0;   ///< ||E0_{t+1}||
  double item2_rhs = 0.0;  ///< N^{-d/2} ||E0_t||, equals e2_full
  double item3_rhs = 0.0;  ///< N^{d/2} ||P_t||_F (e1 + e2_modes)
  double item4_rhs = 0.0;  ///< B (||W_t||_2 e0 + e3)
  /// max |E0_{t+1} - (sigma(z + W E0 + E3) - sigma(z))| over the grid.
  double item4_identity = 0.0;
  /// max |E3 - (K^N v^N - K v)| over the grid.
  double e3_consistency = 0.0;

  bool item2_holds(double tol = 1e-10) const;
  bool item3_holds() const;
  bool item4_holds() const;
};

/// Lipschitz constant of an activation (GeLU: 1.13 bounds sup |GeLU'|).
double activation_lipschitz(fno::Activation a);

/// Components for layer t < T. Requires n_ref / N >= 4 so the oracle error
/// is of higher order.
DecompRow error_components(const fno::FnoParams& params, const fno::LayerTrace& coarse,
                           const fno::LayerTrace& ref, int t);

struct DecompReport {
  std::string fingerprint;
  std::string init;
  double s = 0.0;
  int n = 0;
  int n_ref = 0;
  std::uint64_t seed = 0;
  std::string e1_oracle;
  std::vector<DecompRow> rows;
};

DecompReport decompose_experiment(const fno::FnoConfig& config, fno::InitScheme scheme, double s, int n, int n_ref,
                                  std::uint64_t seed, double tau = 3.0);

/// Per-layer check of the sup-norm growth bound
///   ||v_{t+1}||_inf <= sigma* + B M (1 + ||v_t||_inf + K^{d/2} ||v_t||_L2)
/// with M the measured parameter bound, plus finiteness of H^s sums.
struct LemmaRow {
  int layer = 0;
  double linf_next = 0.0;
  double bound = 0.0;
  double hs_next = 0.0;
  bool holds() const { return linf_next <= bound && std::isfinite(hs_next); }
};
std::vector<LemmaRow> lemma_diagnostic(const fno::FnoParams& params, const fno::LayerTrace& trace, double s);

/// Interpolation rate study: for GRF v at n_ref, error of the trig
/// interpolant of its restriction to N.
struct InterpRecord {
  double s = 0.0;
  std::uint64_t seed = 0;
  int n = 0;
  double l2_err = 0.0;  ///< ||v - p^N||_{L2} with p^N the real interpolant
  double tail = 0.0;
  double alias = 0.0;
};

struct InterpReport {
  std::vector<double> s_list;
  std::vector<int> ns;
  int n_ref = 0;
  int n_samples = 0;
  std::uint64_t seed = 0;
  std::vector<InterpRecord> records;
  std::vector<SeriesSummary> series;  ///< layer = 0
};

InterpReport interpolation_study(const std::vector<double>& s_list, const std::vector<int>& ns, int n_ref,
                                 int n_samples, std::uint64_t seed, int dim = 2, double tau = 3.0);

/// Stable hex fingerprint of a text blob (FNV-1a 64).
std::string fingerprint(const std::string& text);

}  // namespace specfno::analysis
