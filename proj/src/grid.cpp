#include "specfno/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "specfno/errors.hpp"

namespace specfno {

std::size_t grid_points(int dim, int n) {
  std::size_t p = 1;
  for (int i = 0; i < dim; ++i) p *= static_cast<std::size_t>(n);
  return p;
}

namespace {
void check_shape(int dim, int n, int channels) {
  if (dim != 1 && dim != 2) throw PreconditionError("grid dimension must be 1 or 2, got " + std::to_string(dim));
  if (n < 2) throw PreconditionError("grid size must be > 1, got " + std::to_string(n));
  if (channels < 1) throw PreconditionError("channel count must be >= 1");
}
}  // namespace

GridField::GridField(int dim, int n, int channels)
    : dim_(dim), n_(n), channels_(channels) {
  check_shape(dim, n, channels);
  points_ = grid_points(dim, n);
  values_.assign(points_ * channels, 0.0);
}

GridField::GridField(int dim, int n, int channels, std::vector<double> values)
    : dim_(dim), n_(n), channels_(channels), values_(std::move(values)) {
  check_shape(dim, n, channels);
  points_ = grid_points(dim, n);
  if (values_.size() != points_ * channels) {
    throw PreconditionError("grid field value count does not match shape");
  }
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
    throw PreconditionError("grid field values must be finite");
  }
}

std::array<int, 2> GridField::index_of(std::size_t point) const {
  if (dim_ == 1) return {static_cast<int>(point), 0};
  return {static_cast<int>(point / n_), static_cast<int>(point % n_)};
}

std::size_t GridField::point_of(std::array<int, 2> index) const {
  if (dim_ == 1) return static_cast<std::size_t>(index[0]);
  return static_cast<std::size_t>(index[0]) * n_ + index[1];
}

SpectralField::SpectralField(int dim, int n, int channels)
    : dim_(dim), n_(n), channels_(channels) {
  check_shape(dim, n, channels);
  modes_ = grid_points(dim, n);
  coeffs_.assign(modes_ * channels, Complex{});
}

Freq SpectralField::freq_of(std::size_t bin) const {
  if (dim_ == 1) return {bin_to_freq(static_cast<int>(bin), n_), 0};
  return {bin_to_freq(static_cast<int>(bin / n_), n_), bin_to_freq(static_cast<int>(bin % n_), n_)};
}

std::size_t SpectralField::bin_of(Freq k) const {
  if (dim_ == 1) return static_cast<std::size_t>(freq_to_bin(k[0], n_));
  return static_cast<std::size_t>(freq_to_bin(k[0], n_)) * n_ + freq_to_bin(k[1], n_);
}

double SpectralField::hermitian_defect() const {
  double defect = 0.0;
  for (int c = 0; c < channels_; ++c) {
    for (std::size_t b = 0; b < modes_; ++b) {
      const Freq k = freq_of(b);
      const Freq mk{-k[0], -k[1]};
      defect = std::max(defect, std::abs(coeffs_[c * modes_ + b] - std::conj(at(mk, c))));
    }
  }
  return defect;
}

}  // namespace specfno
