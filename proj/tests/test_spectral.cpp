#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "specfno/errors.hpp"
#include "specfno/spectral.hpp"

using namespace specfno;
using spectral::NormKind;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

GridField random_field(int dim, int n, int channels, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  GridField f(dim, n, channels);
  for (double& v : f.values()) v = normal(gen);
  return f;
}

GridField sample_1d(int n, double (*fn)(double)) {
  GridField f(1, n, 1);
  for (int i = 0; i < n; ++i) f.at(i, 0) = fn(double(i) / n);
  return f;
}

double max_abs_diff(const GridField& a, const GridField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

// Direct evaluation of sum_k c(k) e^{2 pi i k x} on X^(M), complex-valued.
std::vector<Complex> evaluate_direct(const SpectralField& c, int m) {
  std::vector<Complex> out(grid_points(c.dim(), m));
  for (std::size_t p = 0; p < out.size(); ++p) {
    const int i0 = c.dim() == 1 ? int(p) : int(p / m);
    const int i1 = c.dim() == 1 ? 0 : int(p % m);
    Complex acc(0.0, 0.0);
    for (std::size_t b = 0; b < c.modes(); ++b) {
      const Freq k = c.freq_of(b);
      acc += c.channel(0)[b] * std::polar(1.0, kTwoPi * (double(k[0]) * i0 + double(k[1]) * i1) / m);
    }
    out[p] = acc;
  }
  return out;
}

}  // namespace

TEST(Dft, ConstantField) {
  for (int n : {2, 5, 8}) {
    GridField f(2, n, 1);
    for (double& v : f.values()) v = 3.5;
    const SpectralField c = spectral::dft(f);
    for (std::size_t b = 0; b < c.modes(); ++b) {
      const Freq k = c.freq_of(b);
      const double expected = (k[0] == 0 && k[1] == 0) ? 3.5 : 0.0;
      EXPECT_NEAR(std::abs(c.channel(0)[b] - expected), 0.0, 1e-14);
    }
  }
}

TEST(Dft, AliasedCosineLandsOnMinusThree) {
  const SpectralField c = spectral::dft(sample_1d(8, [](double x) { return std::cos(kTwoPi * 5 * x); }));
  for (int k = -4; k <= 3; ++k) {
    const double expected = (k == -3 || k == 3) ? 0.5 : 0.0;
    EXPECT_NEAR(std::abs(c.at({k, 0}, 0) - expected), 0.0, 1e-15) << "k = " << k;
  }
}

TEST(Dft, InBandCosine) {
  const SpectralField c = spectral::dft(sample_1d(8, [](double x) { return std::cos(kTwoPi * x); }));
  EXPECT_NEAR(c.at({1, 0}, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(c.at({-1, 0}, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(std::abs(c.at({2, 0}, 0)), 0.0, 1e-15);
}

TEST(Dft, SymmetricSetIndexing) {
  EXPECT_EQ(freq_min(8), -4);
  EXPECT_EQ(freq_max(8), 3);
  EXPECT_EQ(freq_min(7), -3);
  EXPECT_EQ(freq_max(7), 3);
  EXPECT_EQ(bin_to_freq(4, 8), -4);
  EXPECT_EQ(freq_to_bin(-1, 8), 7);
  EXPECT_EQ(freq_to_bin(11, 8), 3);
}

TEST(Dft, ParsevalAndInversion) {
  for (int dim : {1, 2}) {
    for (int n : {7, 16, 30}) {
      const GridField f = random_field(dim, n, 3, 17 + n);
      const SpectralField c = spectral::dft(f);
      double coeff_sq = 0.0;
      for (const auto& z : c.storage()) coeff_sq += std::norm(z);
      const double l2 = spectral::norm(f, NormKind::l2);
      EXPECT_NEAR(coeff_sq / (l2 * l2), 1.0, 1e-12);
      const GridField back = spectral::idft_on_grid(c, n);
      EXPECT_LE(max_abs_diff(back, f), 1e-12 * spectral::norm(f, NormKind::linf));
      EXPECT_LE(c.hermitian_defect(), 1e-14);
    }
  }
}

TEST(Idft, SingleModeCosine) {
  SpectralField c(1, 4, 1);
  c.at({1, 0}, 0) = 0.5;
  c.at({-1, 0}, 0) = 0.5;
  const GridField f = spectral::idft_on_grid(c, 16);
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(f.at(i, 0), std::cos(kTwoPi * i / 16.0), 1e-15);
}

TEST(Idft, ZeroSpectrum) {
  const GridField f = spectral::idft_on_grid(SpectralField(2, 8, 2), 32);
  for (double v : f.values()) EXPECT_EQ(v, 0.0);
}

TEST(Idft, RejectsDownsampling) {
  EXPECT_THROW(spectral::idft_on_grid(SpectralField(1, 16, 1), 8), PreconditionError);
}

TEST(Idft, NonHermitianSpectrumIsANumericalError) {
  SpectralField c(1, 8, 1);
  c.at({1, 0}, 0) = 1.0;
  EXPECT_THROW(spectral::idft_on_grid(c, 8), NumericalError);
}

TEST(TrigInterpolate, FixesCoarsePoints) {
  for (int dim : {1, 2}) {
    const int n = 16;
    const GridField f = random_field(dim, n, 2, 5);
    const GridField g = spectral::trig_interpolate(f, 4 * n);
    double worst = 0.0;
    for (std::size_t p = 0; p < f.points(); ++p) {
      auto idx = f.index_of(p);
      for (auto& i : idx) i *= 4;
      if (dim == 1) idx[1] = 0;
      for (int c = 0; c < 2; ++c) worst = std::max(worst, std::abs(g.at(g.point_of(idx), c) - f.at(p, c)));
    }
    EXPECT_LE(worst, 1e-12 * spectral::norm(f, NormKind::linf));
  }
}

TEST(TrigInterpolate, BandlimitedIsExact) {
  const auto fn = [](double x, double y) {
    return 0.3 + std::sin(kTwoPi * (2 * x - y)) + 0.25 * std::cos(kTwoPi * 3 * y) - 0.7 * std::sin(kTwoPi * x);
  };
  GridField coarse(2, 8, 1), fine(2, 40, 1);
  for (std::size_t p = 0; p < coarse.points(); ++p) {
    const auto idx = coarse.index_of(p);
    coarse.at(p, 0) = fn(idx[0] / 8.0, idx[1] / 8.0);
  }
  for (std::size_t p = 0; p < fine.points(); ++p) {
    const auto idx = fine.index_of(p);
    fine.at(p, 0) = fn(idx[0] / 40.0, idx[1] / 40.0);
  }
  EXPECT_LE(max_abs_diff(spectral::trig_interpolate(coarse, 40), fine), 1e-12);
}

TEST(TrigInterpolate, RejectsNonNesting) {
  EXPECT_THROW(spectral::trig_interpolate(GridField(1, 8, 1), 12), PreconditionError);
}

TEST(TrigInterpolate, EvenEdgeModeSplitsIntoRealCosine) {
  // v = cos(pi N x) on N = 4 samples to (+1, -1, +1, -1); the real
  // interpolant is cos(2 pi 2 x).
  GridField f(1, 4, 1, {1.0, -1.0, 1.0, -1.0});
  const GridField g = spectral::trig_interpolate(f, 16);
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(g.at(i, 0), std::cos(kTwoPi * 2 * i / 16.0), 1e-15);
}

TEST(Norm, ConstantField) {
  for (int dim : {1, 2}) {
    GridField f(dim, 8, 1);
    for (double& v : f.values()) v = 1.0;
    EXPECT_NEAR(spectral::norm(f, NormKind::l2), 1.0, 1e-15);
    EXPECT_NEAR(spectral::norm(f, NormKind::discrete_l2), std::pow(8.0, dim / 2.0), 1e-13);
    EXPECT_NEAR(spectral::norm(f, NormKind::linf), 1.0, 1e-15);
  }
}

TEST(Norm, SobolevOfSine) {
  const GridField f = sample_1d(16, [](double x) { return std::sin(kTwoPi * x); });
  EXPECT_NEAR(spectral::norm(f, NormKind::hs, 1.0), 1.0, 1e-14);
  // ((2 pi)^{-2} |f|_1^2 + ||f||^2)^{1/2} with |f|_1^2 = 2 pi^2: sqrt(1/2 + 1/2).
  EXPECT_NEAR(spectral::norm(f, NormKind::hs_seminorm, 1.0), 1.0, 1e-14);
  EXPECT_NEAR(spectral::sobolev_seminorm(spectral::dft(f), 1.0), std::numbers::pi * std::sqrt(2.0), 1e-13);
}

TEST(Norm, L2IsContinuumNormForTrigPolynomials) {
  // f = 1 + 2 sin(2 pi x) cos(2 pi 3 y): ||f||^2 = 1 + 4 / 4 = 2.
  GridField f(2, 16, 1);
  for (std::size_t p = 0; p < f.points(); ++p) {
    const auto idx = f.index_of(p);
    f.at(p, 0) = 1.0 + 2.0 * std::sin(kTwoPi * idx[0] / 16.0) * std::cos(kTwoPi * 3 * idx[1] / 16.0);
  }
  EXPECT_NEAR(spectral::norm(f, NormKind::l2), std::sqrt(2.0), 1e-14);
}

TEST(Norm, RejectsNonpositiveSobolevExponent) {
  EXPECT_THROW(spectral::norm(GridField(1, 8, 1), NormKind::hs, 0.0), PreconditionError);
  EXPECT_THROW(spectral::norm(GridField(1, 8, 1), NormKind::hs_seminorm, -1.0), PreconditionError);
}

TEST(Aliasing, BandlimitedTruthHasNoError) {
  SpectralField truth(2, 32, 1);
  truth.at({3, -2}, 0) = Complex(0.5, 0.25);
  truth.at({-3, 2}, 0) = Complex(0.5, -0.25);
  const auto split = spectral::aliasing_decomposition(truth, 8);
  EXPECT_EQ(split.tail, 0.0);
  EXPECT_EQ(split.alias, 0.0);
}

TEST(Aliasing, ModeElevenFoldsOntoThree) {
  SpectralField truth(1, 32, 1);
  truth.at({11, 0}, 0) = 1.0;
  const auto split = spectral::aliasing_decomposition(truth, 8);
  EXPECT_NEAR(split.tail, 1.0, 1e-15);
  EXPECT_NEAR(split.alias, 1.0, 1e-15);
  const SpectralField folded = spectral::fold_spectrum(truth, 8);
  EXPECT_NEAR(std::abs(folded.at({3, 0}, 0) - 1.0), 0.0, 1e-15);
}

TEST(Aliasing, MatchesBruteForceInterpolationError) {
  for (int dim : {1, 2}) {
    const int n_ref = dim == 1 ? 32 : 16;
    const int n = dim == 1 ? 8 : 4;
    std::mt19937_64 gen(99 + dim);
    std::normal_distribution<double> normal;
    SpectralField truth(dim, n_ref, 1);
    for (auto& z : truth.storage()) z = Complex(normal(gen), normal(gen));

    // Samples of v on X^(N), their DFT by direct summation, and the complex
    // interpolant p evaluated on the fine grid.
    const std::vector<Complex> fine = evaluate_direct(truth, n_ref);
    const int stride = n_ref / n;
    SpectralField p(dim, n, 1);
    for (std::size_t b = 0; b < p.modes(); ++b) {
      const Freq k = p.freq_of(b);
      Complex acc(0.0, 0.0);
      for (std::size_t q = 0; q < grid_points(dim, n); ++q) {
        const int i0 = dim == 1 ? int(q) : int(q / n);
        const int i1 = dim == 1 ? 0 : int(q % n);
        const std::size_t fine_pt = dim == 1 ? std::size_t(i0) * stride : std::size_t(i0) * stride * n_ref + i1 * stride;
        acc += fine[fine_pt] * std::polar(1.0, -kTwoPi * (double(k[0]) * i0 + double(k[1]) * i1) / n);
      }
      p.channel(0)[b] = acc / double(grid_points(dim, n));
    }
    SpectralField p_fine(dim, n_ref, 1);
    for (std::size_t b = 0; b < p.modes(); ++b) p_fine.at(p.freq_of(b), 0) = p.channel(0)[b];
    const std::vector<Complex> interp = evaluate_direct(p_fine, n_ref);
    double err_sq = 0.0;
    for (std::size_t q = 0; q < fine.size(); ++q) err_sq += std::norm(fine[q] - interp[q]);
    err_sq /= double(fine.size());

    const auto split = spectral::aliasing_decomposition(truth, n);
    EXPECT_NEAR(split.total() * split.total() / err_sq, 1.0, 1e-10);

    const SpectralField folded = spectral::fold_spectrum(truth, n);
    for (std::size_t b = 0; b < p.modes(); ++b) {
      EXPECT_LE(std::abs(folded.channel(0)[b] - p.channel(0)[b]), 1e-12 * std::abs(p.channel(0)[b]) + 1e-13);
    }
  }
}

TEST(Aliasing, FoldEqualsDftOfSamples) {
  // A real fine-grid field: the DFT of its restriction to N equals the fold.
  const GridField f = random_field(2, 64, 1, 3);
  const SpectralField truth = spectral::dft(f);
  GridField coarse(2, 16, 1);
  for (std::size_t p = 0; p < coarse.points(); ++p) {
    auto idx = coarse.index_of(p);
    coarse.at(p, 0) = f.at(f.point_of({idx[0] * 4, idx[1] * 4}), 0);
  }
  const SpectralField direct = spectral::dft(coarse);
  const SpectralField folded = spectral::fold_spectrum(truth, 16);
  double worst = 0.0, scale = 0.0;
  for (std::size_t b = 0; b < direct.modes(); ++b) {
    worst = std::max(worst, std::abs(direct.channel(0)[b] - folded.channel(0)[b]));
    scale = std::max(scale, std::abs(direct.channel(0)[b]));
  }
  EXPECT_LE(worst, 1e-12 * scale);
}

TEST(Aliasing, RejectsCoarseNotBelowReference) {
  EXPECT_THROW(spectral::aliasing_decomposition(SpectralField(1, 16, 1), 16), PreconditionError);
}
