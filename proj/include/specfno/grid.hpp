#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace specfno {

using Complex = std::complex<double>;

/// Frequency vector; unused trailing entries are zero when d == 1.
using Freq = std::array<int, 2>;

/// Smallest frequency of the symmetric index set [[N]]: -N/2 for even N,
/// -(N-1)/2 for odd N.
constexpr int freq_min(int n) { return -(n / 2); }
/// Largest frequency of [[N]]: N/2 - 1 for even N, (N-1)/2 for odd N.
constexpr int freq_max(int n) { return (n - 1) / 2; }

/// FFT bin -> frequency in [[N]].
constexpr int bin_to_freq(int bin, int n) { return bin <= freq_max(n) ? bin : bin - n; }
/// Frequency (any integer) -> FFT bin, i.e. k mod N.
constexpr int freq_to_bin(int k, int n) {
  const int r = k % n;
  return r < 0 ? r + n : r;
}
constexpr bool in_symmetric_set(int k, int n) { return k >= freq_min(n) && k <= freq_max(n); }

/// Real vector-valued function sampled on the uniform torus grid X^(N),
/// x_n = n / N. Storage is channel-major: channel c occupies a contiguous
/// block of N^d values, points flattened row-major (first coordinate slowest).
class GridField {
 public:
  GridField() = default;
  GridField(int dim, int n, int channels);
  GridField(int dim, int n, int channels, std::vector<double> values);

  int dim() const { return dim_; }
  int n() const { return n_; }
  int channels() const { return channels_; }
  std::size_t points() const { return points_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> channel(int c) { return {values_.data() + c * points_, points_}; }
  std::span<const double> channel(int c) const { return {values_.data() + c * points_, points_}; }
  double& at(std::size_t point, int c) { return values_[c * points_ + point]; }
  double at(std::size_t point, int c) const { return values_[c * points_ + point]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::vector<double>& storage() { return values_; }
  const std::vector<double>& storage() const { return values_; }

  /// Grid index vector of a flattened point.
  std::array<int, 2> index_of(std::size_t point) const;
  std::size_t point_of(std::array<int, 2> index) const;

  bool same_shape(const GridField& other) const {
    return dim_ == other.dim_ && n_ == other.n_ && channels_ == other.channels_;
  }

 private:
  int dim_ = 1;
  int n_ = 0;
  int channels_ = 0;
  std::size_t points_ = 0;
  std::vector<double> values_;
};

/// Fourier coefficients on [[N]]^d per channel, c_k = DFT(v)(k).
/// Stored in FFT bin order, channel-major; use at(freq, c) for
/// frequency-indexed access.
class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(int dim, int n, int channels);

  int dim() const { return dim_; }
  int n() const { return n_; }
  int channels() const { return channels_; }
  std::size_t modes() const { return modes_; }

  Complex& at(Freq k, int c) { return coeffs_[c * modes_ + bin_of(k)]; }
  Complex at(Freq k, int c) const { return coeffs_[c * modes_ + bin_of(k)]; }
  std::span<Complex> channel(int c) { return {coeffs_.data() + c * modes_, modes_}; }
  std::span<const Complex> channel(int c) const { return {coeffs_.data() + c * modes_, modes_}; }
  std::vector<Complex>& storage() { return coeffs_; }
  const std::vector<Complex>& storage() const { return coeffs_; }

  /// Frequency of the flattened bin position.
  Freq freq_of(std::size_t bin) const;
  std::size_t bin_of(Freq k) const;

  /// max |c(k) - conj(c(-k mod N))| over all modes and channels. Zero for the
  /// DFT of real grid data up to rounding.
  double hermitian_defect() const;

 private:
  int dim_ = 1;
  int n_ = 0;
  int channels_ = 0;
  std::size_t modes_ = 0;
  std::vector<Complex> coeffs_;
};

/// N^d for the given dimension.
std::size_t grid_points(int dim, int n);

}  // namespace specfno
