#include "specfno/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "specfno/errors.hpp"
#include "specfno/fft.hpp"

namespace specfno::spectral {
namespace {

double freq_norm_sq(const Freq& k) { return double(k[0]) * k[0] + double(k[1]) * k[1]; }

struct Target {
  int freq;
  double weight;
};

// Where a source frequency of [[N]] lands in [[M]], M >= N. Unpaired even-N
// edge modes are split evenly onto -N/2 and +N/2 (real part of p).
int padded_targets(int k, int n, int m, Target out[2]) {
  if (m > n && n % 2 == 0 && k == -n / 2) {
    out[0] = {k, 0.5};
    out[1] = {-k, 0.5};
    return 2;
  }
  out[0] = {k, 1.0};
  return 1;
}

void check_s(double s) {
  if (!(s > 0.0)) throw PreconditionError("Sobolev exponent must be > 0, got " + std::to_string(s));
}

}  // namespace

SpectralField dft(const GridField& f) {
  SpectralField out(f.dim(), f.n(), f.channels());
  auto& coeffs = out.storage();
  const auto& values = f.storage();
  for (std::size_t i = 0; i < values.size(); ++i) coeffs[i] = values[i];
  fft::c2c(f.dim(), f.n(), f.channels(), coeffs.data(), fft::Direction::forward);
  const double scale = 1.0 / double(f.points());
  for (auto& c : coeffs) c *= scale;
  return out;
}

GridField idft_on_grid(const SpectralField& c, int m_target) {
  const int n = c.n();
  const int dim = c.dim();
  if (m_target < n) {
    throw PreconditionError("idft_on_grid: target grid " + std::to_string(m_target) +
                            " is smaller than the spectrum grid " + std::to_string(n));
  }
  SpectralField padded(dim, m_target, c.channels());
  Target t0[2], t1[2];
  for (int ch = 0; ch < c.channels(); ++ch) {
    const auto src = c.channel(ch);
    for (std::size_t b = 0; b < c.modes(); ++b) {
      const Freq k = c.freq_of(b);
      const int n0 = padded_targets(k[0], n, m_target, t0);
      const int n1 = dim == 2 ? padded_targets(k[1], n, m_target, t1) : 1;
      if (dim == 1) t1[0] = {0, 1.0};
      for (int i = 0; i < n0; ++i) {
        for (int j = 0; j < n1; ++j) {
          padded.at({t0[i].freq, t1[j].freq}, ch) += src[b] * (t0[i].weight * t1[j].weight);
        }
      }
    }
  }
  auto& data = padded.storage();
  fft::c2c(dim, m_target, c.channels(), data.data(), fft::Direction::backward);

  double max_re = 1.0, max_im = 0.0;
  for (const auto& z : data) {
    max_re = std::max(max_re, std::abs(z.real()));
    max_im = std::max(max_im, std::abs(z.imag()));
  }
  if (!(max_im <= kImagResidueTolerance * max_re)) {
    throw NumericalError("inverse transform left an imaginary residue of " + std::to_string(max_im) +
                         " (spectrum is not Hermitian)");
  }
  GridField out(dim, m_target, c.channels());
  auto& values = out.storage();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = data[i].real();
  return out;
}

GridField trig_interpolate(const GridField& f, int n_fine) {
  if (n_fine < f.n() || n_fine % f.n() != 0) {
    throw PreconditionError("trig_interpolate: grid " + std::to_string(n_fine) + " does not nest grid " +
                            std::to_string(f.n()));
  }
  if (n_fine == f.n()) return f;
  // Same values as idft_on_grid(dft(f), M), through a real-output transform.
  const SpectralField c = dft(f);
  double peak = 1.0;
  for (double v : f.values()) peak = std::max(peak, std::abs(v));
  if (!(c.hermitian_defect() <= kImagResidueTolerance * peak)) {
    throw NumericalError("trig_interpolate: spectrum of grid data is not Hermitian");
  }
  std::vector<Complex> half;
  pad_to_half_spectrum(c, n_fine, half);
  GridField out(f.dim(), n_fine, f.channels());
  fft::c2r(f.dim(), n_fine, f.channels(), half.data(), out.values().data());
  return out;
}

double norm(const GridField& f, NormKind kind, double s) {
  switch (kind) {
    case NormKind::discrete_l2:
    case NormKind::l2: {
      double sum = 0.0;
      for (double v : f.values()) sum += v * v;
      const double d = std::sqrt(sum);
      return kind == NormKind::l2 ? d / std::sqrt(double(f.points())) : d;
    }
    case NormKind::linf: {
      double best = 0.0;
      for (std::size_t p = 0; p < f.points(); ++p) {
        double sq = 0.0;
        for (int c = 0; c < f.channels(); ++c) sq += f.at(p, c) * f.at(p, c);
        best = std::max(best, sq);
      }
      return std::sqrt(best);
    }
    case NormKind::hs:
    case NormKind::hs_seminorm:
      check_s(s);
      return norm(dft(f), kind, s);
  }
  return 0.0;
}

double sobolev_seminorm(const SpectralField& c, double s) {
  check_s(s);
  const double two_pi = 2.0 * std::numbers::pi;
  double sum = 0.0;
  for (int ch = 0; ch < c.channels(); ++ch) {
    const auto coeffs = c.channel(ch);
    for (std::size_t b = 0; b < c.modes(); ++b) {
      const double k2 = freq_norm_sq(c.freq_of(b)) * two_pi * two_pi;
      if (k2 == 0.0) continue;
      sum += std::pow(k2, s) * std::norm(coeffs[b]);
    }
  }
  return std::sqrt(sum);
}

double norm(const SpectralField& c, NormKind kind, double s) {
  double l2sq = 0.0;
  for (const auto& z : c.storage()) l2sq += std::norm(z);
  switch (kind) {
    case NormKind::l2:
      return std::sqrt(l2sq);
    case NormKind::discrete_l2:
      return std::sqrt(l2sq * double(c.modes()));
    case NormKind::linf:
      return norm(idft_on_grid(c, c.n()), NormKind::linf);
    case NormKind::hs: {
      check_s(s);
      double sum = 0.0;
      for (int ch = 0; ch < c.channels(); ++ch) {
        const auto coeffs = c.channel(ch);
        for (std::size_t b = 0; b < c.modes(); ++b) {
          sum += (1.0 + std::pow(freq_norm_sq(c.freq_of(b)), s)) * std::norm(coeffs[b]);
        }
      }
      return std::sqrt(sum);
    }
    case NormKind::hs_seminorm: {
      const double semi = sobolev_seminorm(c, s);
      const double scale = std::pow(2.0 * std::numbers::pi, -s);
      return std::sqrt(scale * scale * semi * semi + l2sq);
    }
  }
  return 0.0;
}

double AliasSplit::total() const { return std::hypot(tail, alias); }

AliasSplit aliasing_decomposition(const SpectralField& truth, int n_coarse) {
  if (n_coarse < 2 || n_coarse >= truth.n()) {
    throw PreconditionError("aliasing_decomposition: coarse grid " + std::to_string(n_coarse) +
                            " must satisfy 1 < N < N_ref = " + std::to_string(truth.n()));
  }
  SpectralField folded(truth.dim(), n_coarse, truth.channels());
  double tail_sq = 0.0;
  for (int ch = 0; ch < truth.channels(); ++ch) {
    const auto coeffs = truth.channel(ch);
    for (std::size_t b = 0; b < truth.modes(); ++b) {
      const Freq k = truth.freq_of(b);
      const bool in_band =
          in_symmetric_set(k[0], n_coarse) && (truth.dim() == 1 || in_symmetric_set(k[1], n_coarse));
      if (in_band) continue;
      tail_sq += std::norm(coeffs[b]);
      folded.at(k, ch) += coeffs[b];
    }
  }
  double alias_sq = 0.0;
  for (const auto& z : folded.storage()) alias_sq += std::norm(z);
  return {std::sqrt(tail_sq), std::sqrt(alias_sq)};
}

SpectralField fold_spectrum(const SpectralField& truth, int n_coarse) {
  if (n_coarse < 2 || n_coarse > truth.n()) {
    throw PreconditionError("fold_spectrum: coarse grid must satisfy 1 < N <= N_ref");
  }
  SpectralField folded(truth.dim(), n_coarse, truth.channels());
  for (int ch = 0; ch < truth.channels(); ++ch) {
    const auto coeffs = truth.channel(ch);
    for (std::size_t b = 0; b < truth.modes(); ++b) folded.at(truth.freq_of(b), ch) += coeffs[b];
  }
  return folded;
}

void pad_to_half_spectrum(const SpectralField& c, int m_target, std::vector<Complex>& out) {
  const int n = c.n();
  const int dim = c.dim();
  if (m_target < n) throw PreconditionError("pad_to_half_spectrum: target grid smaller than source");
  const int half = fft::half_length(m_target);
  const std::size_t block = dim == 1 ? std::size_t(half) : std::size_t(m_target) * half;
  out.assign(block * c.channels(), Complex{});
  Target t0[2], t1[2];
  for (int ch = 0; ch < c.channels(); ++ch) {
    const auto src = c.channel(ch);
    Complex* dst = out.data() + ch * block;
    for (std::size_t b = 0; b < c.modes(); ++b) {
      const Freq k = c.freq_of(b);
      const int n0 = padded_targets(k[0], n, m_target, t0);
      if (dim == 1) {
        for (int i = 0; i < n0; ++i) {
          const int bin = freq_to_bin(t0[i].freq, m_target);
          if (bin < half) dst[bin] += src[b] * t0[i].weight;
        }
        continue;
      }
      const int n1 = padded_targets(k[1], n, m_target, t1);
      for (int j = 0; j < n1; ++j) {
        const int bin1 = freq_to_bin(t1[j].freq, m_target);
        if (bin1 >= half) continue;
        for (int i = 0; i < n0; ++i) {
          const int bin0 = freq_to_bin(t0[i].freq, m_target);
          dst[std::size_t(bin0) * half + bin1] += src[b] * (t0[i].weight * t1[j].weight);
        }
      }
    }
  }
}

}  // namespace specfno::spectral
