#pragma once

#include <cstddef>

#include "specfno/grid.hpp"

// Thin layer over FFTW. All transforms are unnormalized; forward uses the
// e^{-2 pi i k x} kernel. Plans are created once per shape (FFTW_ESTIMATE,
// alignment-independent) and cached, so results never depend on buffer
// addresses or on which thread runs them.
namespace specfno::fft {

enum class Direction { forward, backward };

/// Length of the last dimension in r2c/c2r half-spectrum layout.
constexpr int half_length(int n) { return n / 2 + 1; }

/// In-place complex transform of `howmany` contiguous d-dimensional blocks.
void c2c(int dim, int n, int howmany, Complex* data, Direction dir);

/// Real-to-half-complex transform of `howmany` contiguous blocks. Output
/// block layout is [N]^(d-1) x (N/2 + 1).
void r2c(int dim, int n, int howmany, const double* in, Complex* out);

/// Inverse of r2c (unnormalized). Overwrites `in`.
void c2r(int dim, int n, int howmany, Complex* in, double* out);

/// Batched 1-D complex transforms of length n over arbitrary stride/dist.
void c2c_strided(int n, int howmany, int stride, int dist, Complex* data, Direction dir);

/// `rows` contiguous 1-D r2c transforms of length n; output row stride is
/// half_length(n).
void r2c_rows(int n, int rows, const double* in, Complex* out);

/// `rows` contiguous 1-D c2r transforms of length n. Overwrites `in`.
void c2r_rows(int n, int rows, Complex* in, double* out);

}  // namespace specfno::fft
