#include <gtest/gtest.h>

#include <random>

#include "implreg/errors.hpp"
#include "implreg/ou_stats.hpp"
#include "implreg/regularizer.hpp"
#include "../support/test_util.hpp"

using namespace implreg;

TEST(OuStats, ReferenceProcessMatchesStationaryVariance) {
  const double gamma = 0.8, eta = 0.01, eps = 1.0;
  const double expect = ou_reference_variance(gamma, eta, eps);
  EXPECT_NEAR(expect, eta / (gamma * (1 - eta * gamma)), 1e-15);
  const std::int64_t steps = 200000;
  const std::size_t burn = 2000;
  std::vector<std::vector<double>> pooled;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::vector<double> xs = simulate_ou_reference(gamma, eta, eps, steps, seed);
    std::vector<double> sq;
    for (std::size_t t = burn; t < xs.size(); ++t) sq.push_back(xs[t] * xs[t]);
    double mean = 0.0;
    for (double v : sq) mean += v;
    mean /= static_cast<double>(sq.size());
    std::vector<std::vector<double>> one{sq};
    const double se = block_bootstrap_se(one, 100, 200, seed);
    EXPECT_LE(std::abs(mean - expect), 3.0 * se) << seed;
    pooled.push_back(std::move(sq));
  }
  double mean = 0.0;
  std::size_t count = 0;
  for (const auto& v : pooled)
    for (double x : v) {
      mean += x;
      ++count;
    }
  mean /= static_cast<double>(count);
  EXPECT_LE(std::abs(mean - expect), 3.0 * block_bootstrap_se(pooled, 100, 200, 99));
}

TEST(OuStats, BootstrapNeedsBlocks) {
  std::vector<std::vector<double>> one{{1.0, 2.0, 3.0}};
  EXPECT_THROW(block_bootstrap_se(one, 5, 100, 0), Error);
}

namespace {

struct Toy {
  Architecture arch{1, 1, Activation::Identity, false};
  Vector theta{1.0, 0.0, 1.0};  // f = c (w x + b)
  Dataset data{{{Vector{1.0}, 1.0}}};
};

}  // namespace

TEST(OuStats, FixedPointHasZeroMoments) {
  Toy t;
  TrainConfig cfg;
  cfg.eta = 0.01;
  cfg.steps = 2000;
  cfg.noise = {NoiseKind::None, 0.0};
  std::vector<Trajectory> runs{sgd_label_noise(t.arch, t.theta, t.data, cfg)};
  const SpectrumReport r = spectrum(t.arch, t.theta, t.data);
  const MomentReport m = ou_moments(runs, t.theta, r, cfg.eta, 0.0);
  ASSERT_EQ(m.variances.size(), 1u);
  EXPECT_EQ(m.variances[0].time_avg, 0.0);
  EXPECT_EQ(m.variances[0].std_err, 0.0);
}

TEST(OuStats, ShortRunIsInsufficient) {
  Toy t;
  TrainConfig cfg;
  cfg.eta = 0.01;
  cfg.steps = 999;
  std::vector<Trajectory> runs{sgd_label_noise(t.arch, t.theta, t.data, cfg)};
  try {
    ou_moments(runs, t.theta, spectrum(t.arch, t.theta, t.data), cfg.eta, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
}

TEST(OuStats, LinearModelVarianceMatchesPrediction) {
  // Linear model: the OU picture is exact up to O(eta).
  const Architecture lin{2, 0, Activation::Identity, true};
  Dataset data{{{Vector{1.0, 0.0}, 0.0}, {Vector{0.0, 1.0}, 0.0}, {Vector{-1.0, -1.0}, 0.0}}};
  const Vector star{0, 0, 0};
  TrainConfig cfg;
  cfg.eta = 0.005;
  cfg.steps = 100000;
  cfg.snapshot_stride = 5;
  std::vector<Trajectory> runs;
  for (std::uint64_t s = 0; s < 4; ++s) {
    cfg.seed = s;
    runs.push_back(sgd_label_noise(lin, star, data, cfg));
  }
  const SpectrumReport r = spectrum(lin, star, data);
  const MomentReport m = ou_moments(runs, star, r, cfg.eta, 1.0);
  ASSERT_EQ(m.variances.size(), 3u);
  EXPECT_EQ(m.cross.size(), 3u);
  for (const MomentEstimate& e : m.variances) {
    EXPECT_NEAR(e.ratio, 1.0, 0.1) << e.j;
    EXPECT_GT(e.std_err, 0.0);
  }
  EXPECT_LE(m.max_abs_cross(), 0.3 * cfg.eta);
  EXPECT_GT(m.burn_in, 0);
  EXPECT_EQ(m.block_length, 200);
}

TEST(OuStats, CrossMomentsSymmetric) {
  const Architecture lin{2, 0, Activation::Identity, true};
  Dataset data{{{Vector{1.0, 0.0}, 0.0}, {Vector{0.0, 1.0}, 0.0}, {Vector{1.0, 1.0}, 0.0}}};
  const Vector star{0, 0, 0};
  TrainConfig cfg;
  cfg.eta = 0.01;
  cfg.steps = 5000;
  std::vector<Trajectory> runs{sgd_label_noise(lin, star, data, cfg)};
  const SpectrumReport r = spectrum(lin, star, data);
  const MomentReport m = ou_moments(runs, star, r, cfg.eta, 1.0);
  // products are computed from the same coordinate series either way
  for (const MomentEstimate& e : m.cross) {
    double s = 0.0;
    std::size_t n = 0;
    const Vector bj = r.basis.column(e.j), bk = r.basis.column(e.k);
    for (const Snapshot& sn : runs[0].snapshots) {
      if (sn.step < m.burn_in) continue;
      s += dot(bk, sn.params) * dot(bj, sn.params);
      ++n;
    }
    EXPECT_NEAR(e.time_avg, s / static_cast<double>(n), 1e-15);
  }
}

TEST(OuStats, PredictedDriftByHand) {
  // f = c (w x + b) at (w, b, c) = (1, 0, 1), x = 1: g = (1, 1, 1), H g = (1, 1, 2).
  Toy t;
  const SpectrumReport r = spectrum(t.arch, t.theta, t.data);
  ASSERT_EQ(r.zero_gamma.dim(), 2u);
  const double s6 = std::sqrt(6.0), s2 = std::sqrt(2.0);
  Subspace basis{3, {Vector{1 / s6, 1 / s6, -2 / s6}, Vector{1 / s2, -1 / s2, 0}}};
  const double eta = 0.01, var = 1.0;
  const std::int64_t T = 1000;
  const std::vector<double> pred = predicted_drift(t.arch, t.theta, t.data, r, basis, eta, var, T);
  EXPECT_NEAR(pred[0], -2.0 * T * eta * eta * var * (-2.0 / s6), 1e-14);
  EXPECT_NEAR(pred[1], 0.0, 1e-15);
  // equals -T eta^2 Var / n * b . grad r_sum
  const Vector gr = reg_gradient(t.arch, t.theta, t.data).gradient;
  EXPECT_NEAR(pred[0], -T * eta * eta * var * dot(basis.basis[0], gr), 1e-14);
}

TEST(OuStats, DriftPredictionIndependentOfStride) {
  Toy t;
  const SpectrumReport r = spectrum(t.arch, t.theta, t.data);
  const auto a = predicted_drift(t.arch, t.theta, t.data, r, r.zero_gamma, 0.01, 1.0, 500);
  const auto b = predicted_drift(t.arch, t.theta, t.data, r, r.zero_gamma, 0.01, 1.0, 500);
  EXPECT_EQ(a, b);
}

TEST(OuStats, DriftMeasuredOnToy) {
  Toy t;
  const double s6 = std::sqrt(6.0), s2 = std::sqrt(2.0);
  DriftOptions opt;
  opt.zero_basis = Subspace{3, {Vector{1 / s6, 1 / s6, -2 / s6}, Vector{1 / s2, -1 / s2, 0}}};
  opt.n_seeds = 64;
  opt.horizon = 4000;
  TrainConfig cfg;
  cfg.eta = 0.005;
  const std::vector<DriftEstimate> d = drift_check(t.arch, t.theta, t.data, cfg, opt);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_TRUE(d[0].signal_ok);
  EXPECT_GE(d[0].ratio(), 0.65);
  EXPECT_LE(d[0].ratio(), 1.35);
  // flat direction: no drift
  EXPECT_LE(std::abs(d[1].measured), 3.0 * d[1].std_err);
}

TEST(OuStats, LyapunovRankOne) {
  Toy t;
  const double eta = 0.01, eps = 0.7;
  const LyapunovReport r = lyapunov_equivalence(t.arch, t.theta, t.data, eta, eps);
  const Vector g = param_gradient(t.arch, t.theta, t.data[0].x);
  const double alpha = eta * eps * eps / (2 * dot(g, g));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(r.sigma(i, j), alpha * g[i] * g[j], 1e-15);
  EXPECT_LE(r.trace_rel_err, 1e-12);
  EXPECT_LE(r.coefficient_rel_err, 1e-12);
}

TEST(OuStats, LyapunovRandomTanh) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Architecture a{2, 5, Activation::Tanh, false};
    const Vector th = testutil::random_vector(gen, a.param_count());
    Dataset data;
    for (int i = 0; i < 4; ++i) {
      Vector x = testutil::random_vector(gen, 2);
      data.points.push_back({x, forward(a, th, x)});
    }
    const LyapunovReport r = lyapunov_equivalence(a, th, data, 1e-3, 1.0);
    EXPECT_LE(r.trace_rel_err, 1e-8);
    EXPECT_LE(r.coefficient_rel_err, 1e-8);
    EXPECT_LE(r.lyapunov_residual, 1e-8 * 1e-3 * std::max(1.0, r.reg_sum));
  }
}

TEST(OuStats, LyapunovNeedsZeroError) {
  Toy t;
  t.data.points[0].y = 5.0;
  EXPECT_THROW(lyapunov_equivalence(t.arch, t.theta, t.data, 0.01, 1.0), Error);
}

TEST(OuStats, EquivalenceWithoutNoiseIsExact) {
  const Architecture a{1, 3, Activation::Tanh, false};
  std::mt19937_64 gen(23);
  const Vector th = testutil::random_vector(gen, a.param_count());
  Dataset data;
  for (double x : {-0.5, 0.3, 1.1}) data.points.push_back({Vector{x}, forward(a, th, Vector{x})});
  const EquivalenceReport r =
      equivalence_trajectory_check(a, th, data, 0.01, NoiseModel{NoiseKind::None, 0.0}, 500, 4);
  EXPECT_EQ(r.difference_norm, 0.0);
  EXPECT_EQ(r.gd_displacement, 0.0);
}

TEST(OuStats, EquivalenceLinearHasNoSignal) {
  const Architecture lin{1, 0, Activation::Identity, true};
  Dataset data{{{Vector{1.0}, 0.0}, {Vector{-1.0}, 0.0}}};
  try {
    equivalence_trajectory_check(lin, Vector{0, 0}, data, 0.01, NoiseModel{}, 500, 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
  }
}
