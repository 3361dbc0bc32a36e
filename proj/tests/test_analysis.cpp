#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "specfno/analysis.hpp"
#include "specfno/errors.hpp"
#include "specfno/grf.hpp"
#include "specfno/spectral.hpp"

using namespace specfno;
using namespace specfno::analysis;
using fno::Activation;
using fno::FnoConfig;
using fno::InitScheme;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

FnoConfig small_config(Activation act = Activation::gelu) {
  FnoConfig cfg;
  cfg.width = 4;
  cfg.layers = 3;
  cfg.modes = 6;
  cfg.activation = act;
  cfg.lift_activation = act;
  return cfg;
}

GridField band_input(int n) {
  GridField a(2, n, 1);
  for (std::size_t pt = 0; pt < a.points(); ++pt) {
    const auto idx = a.index_of(pt);
    a.at(pt, 0) = std::sin(kTwoPi * (2.0 * idx[0] - 1.0 * idx[1]) / n) + 0.3 * std::cos(kTwoPi * idx[1] / n);
  }
  return a;
}

grf::GrfSpec input(double s, int n_ref, std::uint64_t seed) {
  grf::GrfSpec g;
  g.s = s;
  g.n_ref = n_ref;
  g.seed = seed;
  return g;
}

}  // namespace

TEST(Fit, ExactPowerLaws) {
  const std::vector<int> ns{32, 64, 128, 256};
  std::vector<double> errs, flat;
  for (int n : ns) {
    errs.push_back(std::pow(double(n), -2.0));
    flat.push_back(0.7);
  }
  EXPECT_NEAR(fit_loglog_slope(ns, errs).slope, -2.0, 1e-12);
  EXPECT_NEAR(fit_loglog_slope(ns, flat).slope, 0.0, 1e-12);
  EXPECT_THROW(fit_loglog_slope({32, 64}, {1.0, 0.5}), PreconditionError);
  EXPECT_THROW(fit_loglog_slope({32, 64, 128}, {1.0, 0.0, 0.5}), PreconditionError);
}

TEST(Fit, NoisyPowerLaw) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal(0.0, 0.02);
  std::vector<int> ns;
  std::vector<double> errs;
  for (int n = 16; n <= 4096; n *= 2) {
    ns.push_back(n);
    errs.push_back(3.0 * std::pow(double(n), -1.5) * std::exp(normal(gen)));
  }
  EXPECT_NEAR(fit_loglog_slope(ns, errs).slope, -1.5, 0.05);
}

TEST(Fit, SeriesDropsFloorAndWindow) {
  const std::vector<int> ns{16, 32, 64, 128, 256};
  const std::vector<double> errs{1e-2, 2.5e-3, 6.25e-4, 1e-17, 1e-17};
  const SeriesFit f = fit_series(ns, errs, rounding_floor(512, 2));
  ASSERT_TRUE(f.fit);
  EXPECT_EQ(f.points, 3);
  EXPECT_NEAR(f.fit->slope, -2.0, 1e-12);
  EXPECT_FALSE(fit_series(ns, errs, rounding_floor(512, 2), {32, 256}).fit);
}

TEST(Summarize, InjectedRecordsRecoverSlope) {
  // err = C_j N^{-s} for every seed and layer.
  ErrorReport report;
  report.s_list = {1.0, 2.5};
  report.ns = {32, 64, 128, 256};
  report.layers = 2;
  for (double s : report.s_list) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      for (int n : report.ns) {
        for (int l = 0; l < report.layers; ++l) {
          report.records.push_back({s, seed, n, l, (0.5 + seed + l) * std::pow(double(n), -s)});
        }
      }
    }
  }
  summarize(report, 0.0);
  ASSERT_EQ(report.series.size(), 4u);
  for (double s : report.s_list) {
    for (int l = 0; l < 2; ++l) {
      const SeriesSummary& sum = report.summary(s, l);
      ASSERT_TRUE(sum.fit.fit);
      EXPECT_NEAR(sum.fit.fit->slope, -s, 1e-10);
      ASSERT_TRUE(sum.seed_slope_mean);
      EXPECT_NEAR(*sum.seed_slope_mean, -s, 1e-10);
      EXPECT_NEAR(*sum.seed_slope_std, 0.0, 1e-10);
      EXPECT_TRUE(sum.monotone);
      for (std::size_t j = 0; j < report.ns.size(); ++j) {
        EXPECT_NEAR(sum.upper[j] - sum.mean[j], 2.0 * sum.stddev[j], 1e-15);
      }
    }
  }
  EXPECT_THROW(report.summary(3.0, 0), PreconditionError);
}

TEST(RelativeError, ZeroAtReferenceResolution) {
  const FnoConfig cfg = small_config();
  const auto p = fno::init_params(cfg, InitScheme::standard(), 2);
  const GridField a = grf::sample_grf(input(2.0, 32, 3));
  const auto r = fno::forward(p, a, true, true);
  for (Lifting lifting : {Lifting::layer, Lifting::state}) {
    for (double e : relative_layer_error(*r.trace, *r.trace, cfg, lifting)) EXPECT_LE(e, 1e-14);
  }
}

TEST(RelativeError, BandlimitedIdentityNetworkIsExact) {
  const FnoConfig cfg = small_config(Activation::identity);
  const auto p = fno::init_params(cfg, InitScheme::standard(), 4);
  const auto coarse = fno::forward(p, band_input(16), true, true);
  const auto ref = fno::forward(p, band_input(64), true);
  for (Lifting lifting : {Lifting::layer, Lifting::state}) {
    for (double e : relative_layer_error(*coarse.trace, *ref.trace, cfg, lifting)) EXPECT_LE(e, 1e-12);
  }
}

TEST(RelativeError, LayerLiftingNeedsPreActivations) {
  const FnoConfig cfg = small_config();
  const auto p = fno::init_params(cfg, InitScheme::standard(), 4);
  const auto coarse = fno::forward(p, band_input(16), true);
  const auto ref = fno::forward(p, band_input(64), true);
  EXPECT_THROW(relative_layer_error(*coarse.trace, *ref.trace, cfg, Lifting::layer), PreconditionError);
  EXPECT_NO_THROW(relative_layer_error(*coarse.trace, *ref.trace, cfg, Lifting::state));
}

TEST(Components, VanishForBandlimitedIdentityNetwork) {
  const FnoConfig cfg = small_config(Activation::identity);
  const auto p = fno::init_params(cfg, InitScheme::standard(), 6);
  const auto coarse = fno::forward(p, band_input(16), true);
  const auto ref = fno::forward(p, band_input(64), true);
  for (int t = 0; t < cfg.layers; ++t) {
    const DecompRow row = error_components(p, *coarse.trace, *ref.trace, t);
    for (double v : {row.e0, row.e1, row.e2_full, row.e3, row.e0_next, row.item4_identity, row.e3_consistency}) {
      EXPECT_LE(v, 1e-12) << "layer " << t;
    }
  }
}

TEST(Components, PropositionItemsHoldOnRoughInputs) {
  const FnoConfig cfg = small_config();
  const auto p = fno::init_params(cfg, InitScheme::standard(), 8);
  const GridField a = grf::sample_grf(input(1.0, 128, 9));
  const auto ref = fno::forward(p, a, true);
  const auto coarse = fno::forward(p, grf::subsample(a, 16), true);
  for (int t = 0; t < cfg.layers; ++t) {
    const DecompRow row = error_components(p, *coarse.trace, *ref.trace, t);
    EXPECT_GT(row.e1, 0.0);
    EXPECT_TRUE(row.item2_holds()) << row.e2_full << " vs " << row.item2_rhs;
    EXPECT_TRUE(row.item3_holds()) << row.e3 << " vs " << row.item3_rhs;
    EXPECT_TRUE(row.item4_holds()) << row.e0_next << " vs " << row.item4_rhs;
    EXPECT_LE(row.item4_identity, 1e-12 * std::max(1.0, row.e0_next));
    EXPECT_LE(row.e3_consistency, 1e-11);
  }
  EXPECT_GT(error_components(p, *coarse.trace, *ref.trace, 1).e0, 0.0);
  EXPECT_THROW(error_components(p, *coarse.trace, *ref.trace, cfg.layers), PreconditionError);
  const auto close = fno::forward(p, grf::subsample(a, 64), true);
  EXPECT_THROW(error_components(p, *close.trace, *ref.trace, 0), PreconditionError);
}

TEST(Lemma, SupNormBoundHolds) {
  const FnoConfig cfg = small_config();
  for (const InitScheme& init : {InitScheme::standard(), InitScheme::scaled(10.0), InitScheme::all_ones()}) {
    const auto p = fno::init_params(cfg, init, 1);
    const auto r = fno::forward(p, grf::sample_grf(input(2.0, 32, 2)), true);
    const auto rows = lemma_diagnostic(p, *r.trace, 1.5);
    ASSERT_EQ(rows.size(), std::size_t(cfg.layers));
    for (const auto& row : rows) EXPECT_TRUE(row.holds()) << init.name() << " layer " << row.layer;
  }
}

TEST(StateNorms, ScaledInitGrows) {
  FnoConfig cfg = small_config();
  cfg.width = 16;
  cfg.layers = 5;
  const auto report = state_norm_experiment(cfg, {InitScheme::standard(), InitScheme::scaled(10.0)}, 32, 2.0, 2);
  EXPECT_EQ(report.records.size(), 2u * 2u * (cfg.layers + 1));
  ASSERT_EQ(report.growth.size(), 4u);
  EXPECT_EQ(report.growth[2].first, "scaled(10)");
  EXPECT_GT(report.growth[2].second, 10.0);
}

TEST(Convergence, ValidatesInputs) {
  const FnoConfig cfg = small_config();
  const auto sch = InitScheme::standard();
  EXPECT_THROW(convergence_experiment(cfg, sch, {2.0}, {16, 32}, 64, 1, 0), PreconditionError);
  EXPECT_THROW(convergence_experiment(cfg, sch, {2.0}, {32, 16}, 64, 2, 0), PreconditionError);
  EXPECT_THROW(convergence_experiment(cfg, sch, {2.0}, {16, 24}, 64, 2, 0), PreconditionError);
  EXPECT_THROW(convergence_experiment(cfg, sch, {2.0}, {8, 16}, 64, 2, 0), ModeOverflowError);
  EXPECT_THROW(convergence_experiment(cfg, sch, {}, {16, 32}, 64, 2, 0), PreconditionError);
}

TEST(Convergence, ReportShapeAndThreadInvariance) {
  const FnoConfig cfg = small_config();
  ConvergenceOptions serial;
  ConvergenceOptions threaded;
  threaded.threads = 3;
  const auto a = convergence_experiment(cfg, InitScheme::standard(), {1.0, 2.0}, {16, 32, 64}, 128, 2, 5, serial);
  const auto b = convergence_experiment(cfg, InitScheme::standard(), {1.0, 2.0}, {16, 32, 64}, 128, 2, 5, threaded);
  ASSERT_EQ(a.records.size(), 2u * 2u * 3u * (cfg.layers + 1));
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].rel_err, b.records[i].rel_err);
  EXPECT_EQ(a.records[0].seed, 6u);
  EXPECT_EQ(a.series.size(), 2u * (cfg.layers + 1));
  EXPECT_EQ(a.fingerprint, b.fingerprint);
  EXPECT_EQ(a.fingerprint.size(), 16u);
  for (const auto& r : a.records) {
    EXPECT_TRUE(std::isfinite(r.rel_err));
    EXPECT_GT(r.rel_err, 0.0);
  }
}

TEST(Interpolation, RateFollowsRegularity) {
  const auto report = interpolation_study({1.0, 2.0}, {16, 32, 64}, 256, 3, 11);
  ASSERT_EQ(report.series.size(), 2u);
  for (const auto& series : report.series) {
    ASSERT_TRUE(series.fit.fit);
    EXPECT_NEAR(series.fit.fit->slope, -series.s, 0.35) << "s = " << series.s;
  }
  for (const auto& r : report.records) EXPECT_GT(r.tail, 0.0);
}

TEST(Fingerprint, StableAndSensitive) {
  EXPECT_EQ(fingerprint(""), "cbf29ce484222325");
  EXPECT_EQ(fingerprint("a"), "af63dc4c8601ec8c");
  EXPECT_NE(fingerprint("width=16"), fingerprint("width=17"));
}
