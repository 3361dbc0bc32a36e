#pragma once

#include <cstdint>
#include <optional>

#include "specfno/grid.hpp"

// Gaussian random fields with prescribed Sobolev smoothness, and restriction
// onto nested coarse grids.
namespace specfno::grf {

struct GrfSpec {
  double s = 2.0;     ///< target regularity: samples lie in H^{s'} for s' < s
  int dim = 2;
  int n_ref = 512;    ///< master resolution, a power of two
  double tau = 3.0;   ///< inverse length-scale
  /// Overall amplitude; nullopt selects unit_amplitude(), i.e. E||v||_{L2}^2 = 1.
  std::optional<double> amp;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Amplitude for which the expected squared L2 norm of a sample is 1.
double unit_amplitude(const GrfSpec& spec);

/// Spectral law: c_k = amp (tau^2 + |k|^2)^{-(s + d/2)/2} xi_k with xi_k
/// standard complex Gaussian, Hermitian (c_{-k} = conj c_k), xi_0 = 0.
/// Each xi_k is keyed by (seed, k), independent of n_ref and evaluation order.
SpectralField sample_grf_spectrum(const GrfSpec& spec);
GridField sample_grf(const GrfSpec& spec);

/// Pointwise restriction onto X^(N): out(n) = f(n * n_ref / N).
GridField subsample(const GridField& f, int n_coarse);

/// Least-squares slope of log(shell-mean |c_k|^2) against log(shell-mean |k|)
/// over dyadic shells [2^j, 2^{j+1}), excluding k = 0 and the top octave
/// [N/4, N/2). Shells below `min_wavenumber` are skipped as well, which keeps
/// the low-frequency plateau of the tau term out of the fit.
double empirical_spectral_slope(const GridField& f, double min_wavenumber = 1.0);

}  // namespace specfno::grf
