#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "implreg/linalg.hpp"
#include "implreg/model.hpp"
#include "implreg/spectrum.hpp"
#include "implreg/trainer.hpp"

namespace implreg {

/// Time-averaged product of the offset coordinates j and k (j == k for a
/// variance), with a block-bootstrap standard error.
struct MomentEstimate {
  std::size_t j = 0;
  std::size_t k = 0;
  double time_avg = 0.0;
  double std_err = 0.0;
  double prediction = 0.0;
  double ratio = 0.0;  // time_avg / prediction, 0 when prediction is 0
};

struct MomentOptions {
  /// Only directions with gamma >= min_gamma_rel * gamma_max are analyzed;
  /// 0 keeps every positive-gamma direction.
  double min_gamma_rel = 0.0;
  /// Steps discarded before averaging. Defaults to ceil(5 / (eta * gamma_min))
  /// over the analyzed directions, capped at half the run.
  std::optional<std::int64_t> burn_in;
  int bootstrap_reps = 200;
  std::uint64_t bootstrap_seed = 0;
};

struct MomentReport {
  std::vector<std::size_t> directions;  // eigen-indices analyzed
  std::vector<MomentEstimate> variances;
  std::vector<MomentEstimate> cross;  // j < k, both analyzed
  std::int64_t burn_in = 0;
  std::int64_t block_length = 0;  // in steps
  double eta = 0.0;
  double noise_variance = 0.0;
  std::size_t samples_per_run = 0;

  double max_abs_cross() const;
};

/// Second moments of theta(t) - theta_star in the spectrum eigenbasis,
/// pooled over runs. Variances are predicted to be eta * Var[e]; cross terms
/// 0. Runs shorter than 10/eta steps raise InsufficientData.
MomentReport ou_moments(std::span<const Trajectory> runs, std::span<const double> theta_star,
                        const SpectrumReport& report, double eta, double noise_variance,
                        const MomentOptions& options = {});

/// Standard error of the pooled mean of several series by resampling
/// contiguous blocks of `block_length` samples.
double block_bootstrap_se(std::span<const std::vector<double>> series, std::size_t block_length,
                          int reps, std::uint64_t seed);

/// 1-d reference process x <- (1 - 2 eta gamma) x + 2 eta eps N(0,1), x(0) = 0.
std::vector<double> simulate_ou_reference(double gamma, double eta, double eps,
                                          std::int64_t steps, std::uint64_t seed);

/// Its exact stationary variance, eta eps^2 / (gamma (1 - eta gamma)).
double ou_reference_variance(double gamma, double eta, double eps);

struct DriftOptions {
  std::optional<std::int64_t> horizon;  // default ceil(eta^-1.6)
  int n_seeds = 64;
  std::uint64_t seed_base = 0;
  double gamma_threshold_rel = kDefaultGammaThresholdRel;
  /// Basis for the zero-gamma subspace; when absent the spectrum eigenvectors
  /// are used.
  std::optional<Subspace> zero_basis;
};

struct DriftEstimate {
  std::size_t direction = 0;  // index into the zero-gamma basis
  double measured = 0.0;
  double predicted = 0.0;
  double std_err = 0.0;
  bool signal_ok = false;  // |predicted| >= 5 std_err
  double ratio() const { return predicted != 0.0 ? measured / predicted : 0.0; }
};

/// Predicted drift -2 T eta^2 Var sum_{k: gamma_k > 0} E_i[h^{j,k} h^k] at
/// theta_star, for every vector of the zero-gamma basis.
std::vector<double> predicted_drift(const Architecture& arch, std::span<const double> theta_star,
                                    const Dataset& data, const SpectrumReport& report,
                                    const Subspace& zero_basis, double eta,
                                    double noise_variance, std::int64_t horizon);

/// Runs n_seeds label-noise SGD runs from theta_star for `horizon` steps and
/// compares the mean displacement along each zero-gamma basis vector with
/// the prediction. Directions with |predicted| < 5 std_err are flagged via
/// signal_ok rather than raised.
std::vector<DriftEstimate> drift_check(const Architecture& arch,
                                       std::span<const double> theta_star, const Dataset& data,
                                       const TrainConfig& cfg, const DriftOptions& options = {});

struct LyapunovReport {
  double trace_sigma_a = 0.0;
  double half_eta_eps2_trace_sst = 0.0;  // (1/2) eta eps^2 tr(S S^T)
  double reg_sum = 0.0;                  // sum_i ||grad f(x_i)||^2
  double coefficient = 0.0;              // 2 tr(Sigma A) / (eta eps^2)
  double trace_rel_err = 0.0;
  double coefficient_rel_err = 0.0;
  double lyapunov_residual = 0.0;  // ||Sigma A + A Sigma - C||_max
  SymMatrix sigma;
};

/// A = S S^T with S the per-point gradients; Sigma solves
/// Sigma A + A Sigma = eta eps^2 S S^T.
LyapunovReport lyapunov_equivalence(const Architecture& arch, std::span<const double> theta_star,
                                    const Dataset& data, double eta, double eps,
                                    double zero_error_tol = 1e-6);

struct EquivalenceOptions {
  std::optional<double> lambda;  // default eta * Var / 4
  std::optional<double> gd_eta;  // default eta
  std::uint64_t seed_base = 0;
  double min_signal_ratio = 10.0;
};

struct EquivalenceReport {
  Vector mean_sgd_endpoint;
  Vector gd_endpoint;
  double difference_norm = 0.0;
  double gd_displacement = 0.0;
  double mc_noise = 0.0;  // norm of the standard error of the seed mean
  double relative_deviation = 0.0;
  double lambda = 0.0;
  std::int64_t horizon = 0;
  int n_seeds = 0;
};

/// Mean endpoint of n_seeds noisy SGD runs against full-batch GD on the
/// regularized loss, both started at theta_star. Raises InsufficientData when
/// the GD displacement is below min_signal_ratio times the Monte Carlo noise.
EquivalenceReport equivalence_trajectory_check(const Architecture& arch,
                                               std::span<const double> theta_star,
                                               const Dataset& data, double eta,
                                               const NoiseModel& noise, std::int64_t horizon,
                                               int n_seeds,
                                               const EquivalenceOptions& options = {});

}  // namespace implreg
