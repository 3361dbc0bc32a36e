#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "specfno/errors.hpp"
#include "specfno/fno.hpp"
#include "specfno/spectral.hpp"

using namespace specfno;
using namespace specfno::fno;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

GridField random_field(int dim, int n, int channels, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  GridField f(dim, n, channels);
  for (double& v : f.values()) v = normal(gen);
  return f;
}

std::vector<Complex> random_weights(const ModeSet& modes, int out, int in, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::vector<Complex> p(modes.canonical().size() * out * in);
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = Complex(normal(gen), j < std::size_t(out * in) ? 0.0 : normal(gen));
  return p;
}

// Reference kernel through the generic dft / idft path.
GridField conv_reference(const GridField& v, const std::vector<Complex>& p, const ModeSet& modes, int out) {
  const SpectralField x = spectral::dft(v);
  SpectralField y(v.dim(), v.n(), out);
  const int in = v.channels();
  for (const auto& mode : modes.all()) {
    for (int o = 0; o < out; ++o) {
      Complex acc(0.0, 0.0);
      for (int i = 0; i < in; ++i) {
        Complex w = p[(std::size_t(mode.canonical) * out + o) * in + i];
        if (mode.mirrored) w = std::conj(w);
        acc += w * x.at(mode.freq, i);
      }
      y.at(mode.freq, o) = acc;
    }
  }
  return spectral::idft_on_grid(y, v.n());
}

double inner(const GridField& a, const GridField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

double max_abs_diff(const GridField& a, const GridField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

FnoConfig small_config(int dim = 2) {
  FnoConfig cfg;
  cfg.dim = dim;
  cfg.width = 4;
  cfg.layers = 2;
  cfg.modes = 4;
  return cfg;
}

}  // namespace

TEST(ModeSet, HermitianClosure) {
  const ModeSet m(2, 12);
  EXPECT_EQ(m.max_freq(), 6);
  EXPECT_EQ(m.all().size(), 169u);
  EXPECT_EQ(m.canonical().size(), 85u);
  EXPECT_EQ(m.canonical()[0], (Freq{0, 0}));
  for (const auto& mode : m.all()) {
    const Freq& c = m.canonical()[mode.canonical];
    if (mode.mirrored) {
      EXPECT_EQ(c, (Freq{-mode.freq[0], -mode.freq[1]}));
    } else {
      EXPECT_EQ(c, mode.freq);
    }
  }
  const ModeSet m1(1, 4);
  EXPECT_EQ(m1.all().size(), 5u);
  EXPECT_EQ(m1.canonical().size(), 3u);
  EXPECT_EQ(ModeSet(1, 5).max_freq(), 2);
}

TEST(Init, AllOnes) {
  FnoConfig cfg = small_config();
  cfg.width = 2;
  const FnoParams p = init_params(cfg, InitScheme::all_ones(), 0);
  for (const auto& layer : p.layers) {
    for (double w : layer.w.data) EXPECT_EQ(w, 1.0);
    for (double b : layer.b) EXPECT_EQ(b, 1.0);
    for (const Complex& z : layer.p) EXPECT_EQ(z, Complex(1.0, 0.0));
  }
  for (double w : p.lift_w.data) EXPECT_EQ(w, 1.0);
  for (double w : p.proj_w.data) EXPECT_EQ(w, 1.0);
}

TEST(Init, ScaledIsTenTimesDefault) {
  const FnoConfig cfg = small_config();
  const auto base = init_params(cfg, InitScheme::standard(), 42).pack();
  const auto big = init_params(cfg, InitScheme::scaled(10.0), 42).pack();
  ASSERT_EQ(base.size(), big.size());
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_EQ(big[i], 10.0 * base[i]);
}

TEST(Init, DefaultSupportAndNormAudit) {
  FnoConfig cfg = small_config();
  cfg.width = 16;
  cfg.modes = 12;
  cfg.layers = 5;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const FnoParams p = init_params(cfg, InitScheme::standard(), seed);
    for (const auto& layer : p.layers) {
      for (double w : layer.w.data) EXPECT_LE(std::abs(w), 1.0 / 4.0);
      for (const Complex& z : layer.p) {
        EXPECT_LE(std::abs(z), std::sqrt(2.0) / 256.0);
        EXPECT_GE(z.real(), 0.0);
        EXPECT_GE(z.imag(), 0.0);
      }
      for (std::size_t j = 0; j < 256; ++j) EXPECT_EQ(layer.p[j].imag(), 0.0);
    }
    const ParamNorms norms = parameter_norms(p);
    ASSERT_EQ(norms.p_frobenius.size(), 5u);
    EXPECT_LE(norms.bound(), standard_init_bound(cfg));
    for (double x : norms.w_spectral) EXPECT_TRUE(std::isfinite(x));
  }
  EXPECT_NE(init_params(cfg, InitScheme::standard(), 1).pack(), init_params(cfg, InitScheme::standard(), 2).pack());
}

TEST(Init, PackRoundTrip) {
  const FnoConfig cfg = small_config();
  const FnoParams p = init_params(cfg, InitScheme::standard(), 3);
  const auto flat = p.pack();
  EXPECT_EQ(flat.size(), p.scalar_count());
  FnoParams q = FnoParams::zeros(cfg);
  q.unpack(flat);
  EXPECT_EQ(q.pack(), flat);
  EXPECT_THROW(q.unpack(std::vector<double>(3)), PreconditionError);
}

TEST(Encoding, Periodic) {
  const GridField a(2, 4, 1);
  const GridField e = append_encoding(a, Encoding::periodic);
  ASSERT_EQ(e.channels(), 5);
  const double expected_sin[4] = {0.0, 1.0, 0.0, -1.0};
  const double expected_cos[4] = {1.0, 0.0, -1.0, 0.0};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const std::size_t pt = e.point_of({i, j});
      EXPECT_NEAR(e.at(pt, 1), expected_sin[i], 1e-15);
      EXPECT_NEAR(e.at(pt, 2), expected_cos[i], 1e-15);
      EXPECT_NEAR(e.at(pt, 3), expected_sin[j], 1e-15);
      EXPECT_NEAR(e.at(pt, 4), expected_cos[j], 1e-15);
    }
  }
}

TEST(Encoding, NonperiodicAndNone) {
  GridField a(2, 4, 1);
  a.at(5, 0) = 7.0;
  const GridField e = append_encoding(a, Encoding::nonperiodic);
  ASSERT_EQ(e.channels(), 3);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(e.at(e.point_of({i, 2}), 1), i / 4.0);
  for (int j = 0; j < 4; ++j) EXPECT_EQ(e.at(e.point_of({1, j}), 2), j / 4.0);
  EXPECT_EQ(append_encoding(a, Encoding::none).storage(), a.storage());
}

TEST(Activation, Values) {
  EXPECT_EQ(activate(0.0, Activation::gelu), 0.0);
  EXPECT_EQ(activate(0.0, Activation::relu), 0.0);
  const double g10 = activate(10.0, Activation::gelu);
  EXPECT_GE(g10, 9.999);
  EXPECT_LE(g10, 10.0);
  // x Phi(x) at x = 1: Phi(1) = 0.8413447460685429.
  EXPECT_NEAR(activate(1.0, Activation::gelu), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(activate(-1.0, Activation::gelu), -0.15865525393145707, 1e-15);
  EXPECT_EQ(activate_derivative(0.0, Activation::relu), 0.0);
  EXPECT_EQ(activate_derivative(2.0, Activation::relu), 1.0);
  EXPECT_EQ(activate(-3.0, Activation::relu), 0.0);
}

TEST(Activation, GeluDerivativeMatchesFiniteDifferences) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> uni(-6.0, 6.0);
  const double h = 1e-5;
  for (int i = 0; i < 100; ++i) {
    const double x = uni(gen);
    const double fd = (activate(x + h, Activation::gelu) - activate(x - h, Activation::gelu)) / (2 * h);
    EXPECT_NEAR(activate_derivative(x, Activation::gelu), fd, 1e-7) << "x = " << x;
  }
  GridField f(1, 4, 1, {-1.0, 0.0, 0.5, 2.0});
  const GridField d = activation_apply(f, Activation::gelu, true);
  EXPECT_NEAR(d.at(1, 0), 0.5, 1e-15);
}

TEST(SpectralConv, ZeroWeightsGiveZero) {
  const ModeSet modes(2, 6);
  const GridField v = random_field(2, 16, 3, 1);
  const GridField y = spectral_conv(v, std::vector<Complex>(modes.canonical().size() * 9), modes, 3);
  for (double x : y.values()) EXPECT_EQ(x, 0.0);
}

TEST(SpectralConv, IdentityOnBand) {
  const ModeSet modes(2, 6);  // frequencies |k_i| <= 3
  std::vector<Complex> p(modes.canonical().size() * 4);
  for (std::size_t m = 0; m < modes.canonical().size(); ++m) {
    p[m * 4 + 0] = 1.0;
    p[m * 4 + 3] = 1.0;
  }
  GridField v(2, 16, 2);
  for (std::size_t pt = 0; pt < v.points(); ++pt) {
    const auto idx = v.index_of(pt);
    const double x = idx[0] / 16.0, y = idx[1] / 16.0;
    v.at(pt, 0) = 0.5 + std::cos(kTwoPi * (3 * x - 2 * y)) + std::sin(kTwoPi * 3 * y);
    v.at(pt, 1) = std::sin(kTwoPi * (x + 3 * y)) - 0.25 * std::cos(kTwoPi * 3 * x);
  }
  EXPECT_LE(max_abs_diff(spectral_conv(v, p, modes, 2), v), 1e-12);
}

TEST(SpectralConv, OutOfBandModeIsKilled) {
  const ModeSet modes(2, 4);  // |k_i| <= 2
  std::vector<Complex> p(modes.canonical().size(), Complex(1.0, 0.0));
  GridField v(2, 32, 1);
  for (std::size_t pt = 0; pt < v.points(); ++pt) {
    const auto idx = v.index_of(pt);
    v.at(pt, 0) = std::cos(kTwoPi * (5.0 * idx[0] + 1.0 * idx[1]) / 32.0);
  }
  const GridField y = spectral_conv(v, p, modes, 1);
  for (double x : y.values()) EXPECT_NEAR(x, 0.0, 1e-15);
}

TEST(SpectralConv, ModeOverflow) {
  const ModeSet modes(2, 8);
  const GridField v(2, 16, 1);
  const std::vector<Complex> p(modes.canonical().size());
  EXPECT_THROW(spectral_conv(v, p, modes, 1), ModeOverflowError);
  EXPECT_NO_THROW(spectral_conv(GridField(2, 17, 1), p, modes, 1));
  EXPECT_THROW(check_modes(12, 24), ModeOverflowError);
  EXPECT_NO_THROW(check_modes(12, 32));
}

TEST(SpectralConv, MatchesGenericTransformPath) {
  for (int dim : {1, 2}) {
    for (int n : {16, 21, 32}) {
      const ModeSet modes(dim, 6);
      const GridField v = random_field(dim, n, 3, n);
      const auto p = random_weights(modes, 2, 3, 11 + n);
      const GridField fast = spectral_conv(v, p, modes, 2);
      const GridField slow = conv_reference(v, p, modes, 2);
      EXPECT_LE(max_abs_diff(fast, slow), 1e-12 * std::max(1.0, spectral::norm(slow, spectral::NormKind::linf)))
          << "dim " << dim << " n " << n;
    }
  }
}

TEST(SpectralConv, AdjointIdentity) {
  for (int dim : {1, 2}) {
    const ModeSet modes(dim, 5);
    const GridField v = random_field(dim, 24, 3, 2);
    const GridField g = random_field(dim, 24, 2, 3);
    const auto p = random_weights(modes, 2, 3, 4);
    const double lhs = inner(g, spectral_conv(v, p, modes, 2));
    const double rhs = inner(spectral_conv_adjoint(g, p, modes, 3), v);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(lhs));
  }
}

TEST(SpectralConv, WeightGradientIsExact) {
  // <g, S_P v> is linear in P, so differences are exact up to rounding.
  for (int dim : {1, 2}) {
    const ModeSet modes(dim, 4);
    const GridField v = random_field(dim, 16, 2, 5);
    const GridField g = random_field(dim, 16, 2, 6);
    auto p = random_weights(modes, 2, 2, 7);
    const auto grad = spectral_conv_weight_grad(v, g, modes);
    for (std::size_t j = 0; j < p.size(); ++j) {
      for (int part = 0; part < (j < 4 ? 1 : 2); ++part) {
        const Complex unit = part == 0 ? Complex(1.0, 0.0) : Complex(0.0, 1.0);
        auto plus = p;
        plus[j] += unit;
        const double diff = inner(g, spectral_conv(v, plus, modes, 2)) - inner(g, spectral_conv(v, p, modes, 2));
        const double expected = part == 0 ? grad[j].real() : grad[j].imag();
        EXPECT_NEAR(diff, expected, 1e-10 * std::max(1.0, std::abs(expected)));
      }
      if (j < 4) {
        EXPECT_EQ(grad[j].imag(), 0.0);
      }
    }
  }
}

TEST(SpectralConv, FullGradientIsHermitian) {
  const ModeSet modes(2, 6);
  const GridField v = random_field(2, 16, 2, 8);
  const GridField g = random_field(2, 16, 3, 9);
  const auto full = spectral_conv_weight_grad_full(v, g, modes);
  const auto canon = spectral_conv_weight_grad(v, g, modes);
  const std::size_t block = 6;
  for (std::size_t a = 0; a < modes.all().size(); ++a) {
    const Freq k = modes.all()[a].freq;
    std::size_t b = 0;
    while (modes.all()[b].freq != Freq{-k[0], -k[1]}) ++b;
    for (std::size_t e = 0; e < block; ++e) {
      EXPECT_NEAR(std::abs(full[b * block + e] - std::conj(full[a * block + e])), 0.0, 1e-13);
    }
    if (!modes.all()[a].mirrored && modes.all()[a].canonical != 0) {
      for (std::size_t e = 0; e < block; ++e) {
        EXPECT_NEAR(std::abs(canon[modes.all()[a].canonical * block + e] - 2.0 * full[a * block + e]), 0.0, 1e-13);
      }
    }
  }
}

TEST(Forward, ZeroParametersGiveProjectionBias) {
  FnoConfig cfg = small_config();
  cfg.out_channels = 2;
  FnoParams p = FnoParams::zeros(cfg);
  p.proj_b = {0.25, -1.5};
  const auto result = forward(p, random_field(2, 16, 1, 1), true);
  for (std::size_t pt = 0; pt < result.output.points(); ++pt) {
    EXPECT_EQ(result.output.at(pt, 0), 0.25);
    EXPECT_EQ(result.output.at(pt, 1), -1.5);
  }
  ASSERT_TRUE(result.trace);
  EXPECT_EQ(result.trace->states.size(), 3u);
  EXPECT_TRUE(result.trace->pre_activations.empty());
}

TEST(Forward, IdentityActivationIsGridConsistentOnBand) {
  FnoConfig cfg;
  cfg.width = 6;
  cfg.layers = 3;
  cfg.modes = 6;  // |k_i| <= 3
  cfg.activation = Activation::identity;
  cfg.lift_activation = Activation::identity;
  const FnoParams p = init_params(cfg, InitScheme::standard(), 5);
  const auto input = [](int n) {
    GridField a(2, n, 1);
    for (std::size_t pt = 0; pt < a.points(); ++pt) {
      const auto idx = a.index_of(pt);
      a.at(pt, 0) = std::sin(kTwoPi * (2.0 * idx[0] - 3.0 * idx[1]) / n) + 0.3 * std::cos(kTwoPi * idx[1] / n);
    }
    return a;
  };
  const auto coarse = forward(p, input(16), true);
  const auto fine = forward(p, input(32), true);
  for (std::size_t l = 0; l < coarse.trace->states.size(); ++l) {
    const GridField& c = coarse.trace->states[l];
    const GridField& f = fine.trace->states[l];
    double worst = 0.0;
    for (std::size_t pt = 0; pt < c.points(); ++pt) {
      auto idx = c.index_of(pt);
      for (int ch = 0; ch < c.channels(); ++ch) {
        worst = std::max(worst, std::abs(c.at(pt, ch) - f.at(f.point_of({2 * idx[0], 2 * idx[1]}), ch)));
      }
    }
    EXPECT_LE(worst, 1e-12) << "layer " << l;
  }
}

TEST(Forward, PreActivationsReproduceStates) {
  const FnoConfig cfg = small_config();
  const FnoParams p = init_params(cfg, InitScheme::standard(), 1);
  const auto r = forward(p, random_field(2, 16, 1, 2), true, true);
  ASSERT_EQ(r.trace->pre_activations.size(), r.trace->states.size());
  for (std::size_t l = 0; l < r.trace->states.size(); ++l) {
    const GridField act = activation_apply(r.trace->pre_activations[l], state_activation(cfg, int(l)));
    EXPECT_EQ(act.storage(), r.trace->states[l].storage());
  }
}

TEST(Forward, RejectsChannelMismatchAndOverflow) {
  const FnoConfig cfg = small_config();
  const FnoParams p = init_params(cfg, InitScheme::standard(), 1);
  EXPECT_THROW(forward(p, GridField(2, 16, 2), false), PreconditionError);
  EXPECT_THROW(forward(p, GridField(1, 16, 1), false), PreconditionError);
  EXPECT_THROW(forward(p, GridField(2, 4, 1), false), ModeOverflowError);
}

TEST(Forward, LiftIsResolutionExact) {
  // Layer-0 states at N are bitwise the restriction of those at 2N.
  const FnoConfig cfg = small_config();
  const FnoParams p = init_params(cfg, InitScheme::standard(), 3);
  const GridField fine_in = random_field(2, 32, 1, 4);
  GridField coarse_in(2, 16, 1);
  for (std::size_t pt = 0; pt < coarse_in.points(); ++pt) {
    const auto idx = coarse_in.index_of(pt);
    coarse_in.at(pt, 0) = fine_in.at(fine_in.point_of({2 * idx[0], 2 * idx[1]}), 0);
  }
  const auto c = forward(p, coarse_in, true);
  const auto f = forward(p, fine_in, true);
  const GridField& v0c = c.trace->states[0];
  const GridField& v0f = f.trace->states[0];
  for (std::size_t pt = 0; pt < v0c.points(); ++pt) {
    const auto idx = v0c.index_of(pt);
    for (int ch = 0; ch < v0c.channels(); ++ch) {
      EXPECT_EQ(v0c.at(pt, ch), v0f.at(v0f.point_of({2 * idx[0], 2 * idx[1]}), ch));
    }
  }
}
