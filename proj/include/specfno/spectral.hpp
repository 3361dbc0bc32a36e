#pragma once

#include "specfno/grid.hpp"

// Discrete Fourier analysis on the d-torus.
//
// Convention: DFT(v)(k) = N^{-d} sum_n v(x_n) e^{-2 pi i <k, x_n>} for
// k in the symmetric set [[N]]^d ({-N/2, ..., N/2 - 1} per axis for even N).
// The trigonometric interpolant of grid data is p(x) = sum_k DFT(v)(k)
// e^{2 pi i <k, x>}. For even N the edge frequency -N/2 has no partner in
// [[N]]; off-grid evaluation uses the real part of p, which splits that
// coefficient evenly between -N/2 and +N/2.
namespace specfno::spectral {

/// Largest tolerated imaginary residue of an inverse transform, relative to
/// max(1, max |real part|).
inline constexpr double kImagResidueTolerance = 1e-9;

/// Coefficients DFT(f)(k) on [[N]]^d.
SpectralField dft(const GridField& f);

/// Evaluates the trigonometric polynomial with coefficients `c` on X^(M),
/// M >= N. Throws PreconditionError for M < N and NumericalError when the
/// result is not real to kImagResidueTolerance.
GridField idft_on_grid(const SpectralField& c, int m_target);

/// Trigonometric interpolation of grid data from N onto the nested grid M,
/// M a multiple of N.
GridField trig_interpolate(const GridField& f, int n_fine);

enum class NormKind { discrete_l2, l2, hs, hs_seminorm, linf };

/// Norms of grid data (pointwise values are Euclidean over channels).
///   discrete_l2  (sum_n |f(x_n)|^2)^{1/2}
///   l2           N^{-d/2} * discrete_l2
///   hs           (sum_k (1 + |k|^{2s}) |c_k|^2)^{1/2}, k in [[N]]^d
///   hs_seminorm  ((2 pi)^{-2s} |f|_s^2 + ||f||^2)^{1/2} with
///                |f|_s^2 = sum_k |2 pi k|^{2s} |c_k|^2
///   linf         max_n |f(x_n)|
double norm(const GridField& f, NormKind kind, double s = 0.0);
double norm(const SpectralField& c, NormKind kind, double s = 0.0);

/// Sobolev seminorm |f|_s = (integral f (-Laplace)^s f)^{1/2} of the
/// trigonometric polynomial with coefficients `c`.
double sobolev_seminorm(const SpectralField& c, double s);

/// Interpolation error split for a fine-grid "truth" spectrum sampled on N.
struct AliasSplit {
  double tail = 0.0;   ///< ||projection of v onto modes outside [[N]]^d||
  double alias = 0.0;  ///< ||sum_{l != 0} v(k + lN)|| over k in [[N]]^d
  /// ||v - p||_{L2} for the interpolant p of v's samples on X^(N).
  double total() const;
};
AliasSplit aliasing_decomposition(const SpectralField& truth, int n_coarse);

/// Folded spectrum sum_l v(k + lN), k in [[N]]^d, with v(k) taken from the
/// fine spectrum and zero outside [[N_ref]]^d. Equals dft(samples of v on N).
SpectralField fold_spectrum(const SpectralField& truth, int n_coarse);

/// Zero-pads the coefficients of an N-grid spectrum into the half-spectrum
/// (r2c) layout of grid M, splitting unpaired edge modes. Used by the fast
/// paths in fno/analysis; `out` is resized to channels * M^{d-1} * (M/2+1).
void pad_to_half_spectrum(const SpectralField& c, int m_target, std::vector<Complex>& out);

}  // namespace specfno::spectral
