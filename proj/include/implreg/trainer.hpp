#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "implreg/model.hpp"
#include "implreg/rng.hpp"

namespace implreg {

enum class NoiseKind { None, Rademacher, Gaussian, Uniform };

std::string_view to_string(NoiseKind k);
NoiseKind noise_kind_from_string(std::string_view name);

/// Zero-mean label noise. Variance is scale^2, or scale^2/3 for uniform on
/// [-scale, scale].
struct NoiseModel {
  NoiseKind kind = NoiseKind::Rademacher;
  double scale = 1.0;

  double variance() const;
  double draw(const CounterRng& rng, std::uint64_t counter) const;
};

struct TrainConfig {
  double eta = 1e-3;
  std::int64_t steps = 1;
  NoiseModel noise{};
  std::uint64_t seed = 0;
  std::int64_t snapshot_stride = 1;
  bool record_residuals = false;

  void validate() const;
};

struct Snapshot {
  std::int64_t step = 0;
  ParamVector params;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::vector<double> residuals;  // per-step e_i including noise, when recorded
  TrainConfig config;

  const ParamVector& final_params() const { return snapshots.back().params; }
  std::int64_t final_step() const { return snapshots.back().step; }
};

/// Called after every step with the step count completed so far. Returning
/// false ends the run early (the current state becomes the last snapshot).
using StepObserver = std::function<bool(std::int64_t step, std::span<const double> theta)>;

inline constexpr double kDivergenceGuard = 1e6;

/// Per-sample SGD with label noise:
///   i ~ Uniform{0..n-1} (with replacement), z ~ noise,
///   theta <- theta - 2 eta (f(x_i) - (y_i + z)) grad f(x_i).
/// The index and noise streams are keyed by (seed, step). Throws
/// DivergedError once ||theta|| exceeds kDivergenceGuard.
Trajectory sgd_label_noise(const Architecture& arch, std::span<const double> theta0,
                           const Dataset& data, const TrainConfig& cfg,
                           const StepObserver& observer = {});

/// Full-batch GD on sum_i (f(x_i) - y_i)^2 + lambda * r_sum(theta) with step
/// eta. Without an explicit lambda, uses eta * Var[noise] / 4. Noise in cfg is
/// otherwise ignored.
Trajectory gd_regularized(const Architecture& arch, std::span<const double> theta0,
                          const Dataset& data, const TrainConfig& cfg,
                          std::optional<double> lambda = std::nullopt,
                          const StepObserver& observer = {});

/// Gradient of sum_i (f(x_i) - y_i)^2 + lambda * r_sum.
Vector regularized_loss_gradient(const Architecture& arch, std::span<const double> theta,
                                 const Dataset& data, double lambda);

/// Each (x, y) becomes (x, y + delta) and (x, y - delta), in that order.
Dataset two_copy_transform(const Dataset& data, double delta);

struct PretrainOptions {
  double initial_step = 1e-2;
  std::int64_t max_iterations = 2'000'000;
};

/// Noiseless full-batch GD with step halving on rejected steps (and mild
/// growth on accepted ones) until max_i |f(x_i) - y_i| <= tol. Throws
/// NotConverged when the budget runs out.
ParamVector pretrain_to_zero_error(const Architecture& arch, std::span<const double> theta0,
                                   const Dataset& data, double tol,
                                   const PretrainOptions& options = {});

/// Noisy SGD at a fixed rate for warm_steps, then the rate is multiplied by
/// `decay` every phase_steps. The iterate is averaged over consecutive windows
/// of `window` steps; training stops once r_sum of the window average changes
/// by less than `tolerance` between consecutive windows, `patience` times in
/// a row, after the warm phase.
struct StableTrainingOptions {
  double eta = 2e-3;
  NoiseModel noise{};
  std::int64_t warm_steps = 4'000'000;
  std::int64_t phase_steps = 1'000'000;
  double decay = 0.5;
  std::int64_t window = 10'000;
  double tolerance = 1e-5;
  int patience = 3;
  std::int64_t max_steps = 100'000'000;
  std::uint64_t seed = 0;
  std::int64_t record_stride = 100'000;  // history resolution, multiple of window

  void validate() const;
};

struct StableTrainingRecord {
  std::int64_t step = 0;
  double eta = 0.0;
  double r_sum = 0.0;  // at the window average
  double loss = 0.0;   // at the window average
  ParamVector params;  // the window average itself
};

struct StableTrainingResult {
  ParamVector last;
  ParamVector window_average;  // last complete window
  std::int64_t steps = 0;
  bool converged = false;
  double final_eta = 0.0;
  double last_change = 0.0;
  std::vector<StableTrainingRecord> history;
};

StableTrainingResult train_until_stable(const Architecture& arch, std::span<const double> theta0,
                                        const Dataset& data, const StableTrainingOptions& options);

/// Damped Gauss-Newton (minimum-norm steps through J J^T) until
/// max_i |f(x_i) - y_i| <= tol. From a point near the zero-error manifold this
/// lands close to its orthogonal projection. Throws NotConverged.
ParamVector project_to_zero_error(const Architecture& arch, std::span<const double> theta0,
                                  const Dataset& data, double tol, int max_iterations = 500);

/// Gaussian initialization: hidden weights and biases N(0, init_scale^2),
/// output weights N(0, init_scale^2 / width), skip block zero.
ParamVector random_init(const Architecture& arch, std::uint64_t seed, double init_scale = 1.0);

}  // namespace implreg
