#include "specfno/grf.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "specfno/errors.hpp"
#include "specfno/rng.hpp"
#include "specfno/spectral.hpp"
#include "specfno/stats.hpp"

namespace specfno::grf {
namespace {

bool is_power_of_two(int n) { return n > 1 && (n & (n - 1)) == 0; }

double multiplier(const GrfSpec& spec, const Freq& k) {
  const double k2 = double(k[0]) * k[0] + double(k[1]) * k[1];
  return std::pow(spec.tau * spec.tau + k2, -(spec.s + 0.5 * spec.dim) / 2.0);
}

std::uint64_t mode_counter(const Freq& k) {
  // Frequencies are bounded by 2^31 in magnitude; pack both into one word.
  return (std::uint64_t(std::uint32_t(k[0])) << 32) | std::uint32_t(k[1]);
}

}  // namespace

void GrfSpec::validate() const {
  if (!(s > 0.0)) throw PreconditionError("GRF regularity s must be > 0");
  if (dim != 1 && dim != 2) throw PreconditionError("GRF dimension must be 1 or 2");
  if (!is_power_of_two(n_ref)) throw PreconditionError("GRF n_ref must be a power of two, got " + std::to_string(n_ref));
  if (!(tau > 0.0)) throw PreconditionError("GRF tau must be > 0");
  if (amp && !std::isfinite(*amp)) throw PreconditionError("GRF amplitude must be finite");
}

double unit_amplitude(const GrfSpec& spec) {
  spec.validate();
  SpectralField probe(spec.dim, spec.n_ref, 1);
  double sum = 0.0;
  for (std::size_t b = 1; b < probe.modes(); ++b) {
    const double m = multiplier(spec, probe.freq_of(b));
    sum += m * m;
  }
  return 1.0 / std::sqrt(sum);
}

SpectralField sample_grf_spectrum(const GrfSpec& spec) {
  spec.validate();
  const double amp = spec.amp ? *spec.amp : unit_amplitude(spec);
  const CounterRng rng(spec.seed);
  SpectralField c(spec.dim, spec.n_ref, 1);
  for (std::size_t b = 0; b < c.modes(); ++b) {
    const Freq k = c.freq_of(b);
    if (k[0] == 0 && k[1] == 0) continue;
    // Hermitian partner under the grid identification -k mod N.
    const Freq partner = c.freq_of(c.bin_of({-k[0], -k[1]}));
    const double m = amp * multiplier(spec, k);
    if (partner == k) {
      c.channel(0)[b] = m * rng.normal_pair(mode_counter(k)).first;
      continue;
    }
    const Freq rep = std::max(k, partner);
    const auto [re, im] = rng.normal_pair(mode_counter(rep));
    const Complex xi = Complex(re, im) * std::sqrt(0.5);
    c.channel(0)[b] = m * (k == rep ? xi : std::conj(xi));
  }
  return c;
}

GridField sample_grf(const GrfSpec& spec) {
  return spectral::idft_on_grid(sample_grf_spectrum(spec), spec.n_ref);
}

GridField subsample(const GridField& f, int n_coarse) {
  if (n_coarse < 2 || n_coarse > f.n() || f.n() % n_coarse != 0) {
    throw PreconditionError("subsample: grid " + std::to_string(n_coarse) + " does not divide " +
                            std::to_string(f.n()));
  }
  const int stride = f.n() / n_coarse;
  GridField out(f.dim(), n_coarse, f.channels());
  for (int c = 0; c < f.channels(); ++c) {
    const auto src = f.channel(c);
    auto dst = out.channel(c);
    if (f.dim() == 1) {
      for (int i = 0; i < n_coarse; ++i) dst[i] = src[std::size_t(i) * stride];
    } else {
      for (int i = 0; i < n_coarse; ++i) {
        for (int j = 0; j < n_coarse; ++j) {
          dst[std::size_t(i) * n_coarse + j] = src[std::size_t(i) * stride * f.n() + std::size_t(j) * stride];
        }
      }
    }
  }
  return out;
}

double empirical_spectral_slope(const GridField& f, double min_wavenumber) {
  if (spectral::norm(f, spectral::NormKind::discrete_l2) == 0.0) {
    throw PreconditionError("empirical_spectral_slope: zero field has no spectrum");
  }
  const SpectralField c = spectral::dft(f);
  const int n = f.n();
  int shells = 0;
  while ((2 << shells) <= n / 4) ++shells;  // shell j covers [2^j, 2^{j+1}), 2^{j+1} <= N/4

  std::vector<double> power(shells, 0.0), radius(shells, 0.0);
  std::vector<int> count(shells, 0);
  for (std::size_t b = 0; b < c.modes(); ++b) {
    const Freq k = c.freq_of(b);
    const double r = std::sqrt(double(k[0]) * k[0] + double(k[1]) * k[1]);
    if (r < 1.0) continue;
    const int j = int(std::floor(std::log2(r)));
    if (j >= shells) continue;
    double p = 0.0;
    for (int ch = 0; ch < c.channels(); ++ch) p += std::norm(c.channel(ch)[b]);
    power[j] += p;
    radius[j] += r;
    ++count[j];
  }
  std::vector<double> xs, ys;
  for (int j = 0; j < shells; ++j) {
    if (count[j] == 0 || power[j] <= 0.0 || double(1 << j) < min_wavenumber) continue;
    xs.push_back(std::log(radius[j] / count[j]));
    ys.push_back(std::log(power[j] / count[j]));
  }
  if (xs.size() < 2) {
    throw PreconditionError("empirical_spectral_slope: fewer than two usable dyadic shells");
  }
  return fit_line(xs, ys).slope;
}

}  // namespace specfno::grf
