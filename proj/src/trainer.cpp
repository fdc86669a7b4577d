#include "implreg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "implreg/errors.hpp"
#include "implreg/regularizer.hpp"

namespace implreg {

std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::None: return "none";
    case NoiseKind::Rademacher: return "rademacher";
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Uniform: return "uniform";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(std::string_view name) {
  if (name == "none") return NoiseKind::None;
  if (name == "rademacher") return NoiseKind::Rademacher;
  if (name == "gaussian") return NoiseKind::Gaussian;
  if (name == "uniform") return NoiseKind::Uniform;
  fail(ErrorKind::InvalidInput, "unknown noise kind '" + std::string(name) + "'");
}

double NoiseModel::variance() const {
  switch (kind) {
    case NoiseKind::None: return 0.0;
    case NoiseKind::Rademacher:
    case NoiseKind::Gaussian: return scale * scale;
    case NoiseKind::Uniform: return scale * scale / 3.0;
  }
  return 0.0;
}

double NoiseModel::draw(const CounterRng& rng, std::uint64_t counter) const {
  using S = CounterRng::Stream;
  switch (kind) {
    case NoiseKind::None: return 0.0;
    case NoiseKind::Rademacher: return scale * rng.sign(S::LabelNoise, counter);
    case NoiseKind::Gaussian: return scale * rng.normal(S::LabelNoise, counter);
    case NoiseKind::Uniform: return scale * (2.0 * rng.uniform(S::LabelNoise, counter) - 1.0);
  }
  return 0.0;
}

void TrainConfig::validate() const {
  require(eta > 0.0 && eta < 1.0, ErrorKind::InvalidInput, "eta must lie in (0, 1)");
  require(steps > 0, ErrorKind::InvalidInput, "steps must be positive");
  require(snapshot_stride > 0, ErrorKind::InvalidInput, "snapshot_stride must be positive");
  require(noise.scale >= 0.0 && std::isfinite(noise.scale), ErrorKind::InvalidInput,
          "noise scale must be finite and non-negative");
}

namespace {

void guard(std::int64_t step, std::span<const double> theta) {
  const double n = norm(theta);
  if (!(n <= kDivergenceGuard)) throw DivergedError(step, n);
}

}  // namespace

Trajectory sgd_label_noise(const Architecture& arch, std::span<const double> theta0,
                           const Dataset& data, const TrainConfig& cfg,
                           const StepObserver& observer) {
  arch.validate();
  cfg.validate();
  check_params(arch, theta0);
  data.validate(arch.input_dim);

  const CounterRng rng(cfg.seed);
  const std::uint64_t n = data.size();
  Trajectory traj;
  traj.config = cfg;
  if (cfg.record_residuals) traj.residuals.reserve(static_cast<std::size_t>(cfg.steps));

  Vector theta(theta0.begin(), theta0.end());
  Vector grad(theta.size());
  traj.snapshots.push_back({0, theta});

  std::int64_t step = 0;
  while (step < cfg.steps) {
    const auto counter = static_cast<std::uint64_t>(step);
    const DataPoint& p = data[rng.index(CounterRng::Stream::DataIndex, counter, n)];
    const double z = cfg.noise.draw(rng, counter);
    const double f = forward_and_gradient(arch, theta, p.x, grad);
    const double e = f - (p.y + z);
    if (cfg.record_residuals) traj.residuals.push_back(e);
    axpy(-2.0 * cfg.eta * e, grad, theta);
    ++step;
    guard(step, theta);

    const bool keep_going = !observer || observer(step, theta);
    if (step % cfg.snapshot_stride == 0 || step == cfg.steps || !keep_going)
      traj.snapshots.push_back({step, theta});
    if (!keep_going) break;
  }
  return traj;
}

Vector regularized_loss_gradient(const Architecture& arch, std::span<const double> theta,
                                 const Dataset& data, double lambda) {
  Vector total(theta.size(), 0.0);
  Vector g(theta.size());
  for (const DataPoint& p : data.points) {
    const double e = forward_and_gradient(arch, theta, p.x, g) - p.y;
    axpy(2.0 * e, g, total);
  }
  if (lambda != 0.0) {
    const RegGradient rg = reg_gradient(arch, theta, data);
    if (!rg.excluded_points.empty())
      fail(ErrorKind::AtKink, "regularized gradient: a datapoint sits on a relu kink");
    axpy(lambda, rg.gradient, total);
  }
  return total;
}

Trajectory gd_regularized(const Architecture& arch, std::span<const double> theta0,
                          const Dataset& data, const TrainConfig& cfg,
                          std::optional<double> lambda, const StepObserver& observer) {
  arch.validate();
  cfg.validate();
  check_params(arch, theta0);
  data.validate(arch.input_dim);
  const double lam = lambda.value_or(cfg.eta * cfg.noise.variance() / 4.0);

  Trajectory traj;
  traj.config = cfg;
  Vector theta(theta0.begin(), theta0.end());
  traj.snapshots.push_back({0, theta});
  std::int64_t step = 0;
  while (step < cfg.steps) {
    const Vector grad = regularized_loss_gradient(arch, theta, data, lam);
    axpy(-cfg.eta, grad, theta);
    ++step;
    guard(step, theta);
    const bool keep_going = !observer || observer(step, theta);
    if (step % cfg.snapshot_stride == 0 || step == cfg.steps || !keep_going)
      traj.snapshots.push_back({step, theta});
    if (!keep_going) break;
  }
  return traj;
}

Dataset two_copy_transform(const Dataset& data, double delta) {
  require(delta > 0.0, ErrorKind::InvalidInput, "two_copy_transform: delta must be positive");
  Dataset out;
  out.points.reserve(2 * data.size());
  for (const DataPoint& p : data.points) {
    out.points.push_back({p.x, p.y + delta});
    out.points.push_back({p.x, p.y - delta});
  }
  return out;
}

ParamVector pretrain_to_zero_error(const Architecture& arch, std::span<const double> theta0,
                                   const Dataset& data, double tol,
                                   const PretrainOptions& options) {
  check_params(arch, theta0);
  data.validate(arch.input_dim);
  Vector theta(theta0.begin(), theta0.end());
  if (max_abs_residual(arch, theta, data) <= tol) return theta;

  double step = options.initial_step;
  double current = loss(arch, theta, data);
  Vector trial(theta.size());
  for (std::int64_t it = 0; it < options.max_iterations; ++it) {
    const Vector grad = regularized_loss_gradient(arch, theta, data, 0.0);
    for (int attempt = 0; attempt < 60; ++attempt) {
      for (std::size_t j = 0; j < theta.size(); ++j) trial[j] = theta[j] - step * grad[j];
      const double next = loss(arch, trial, data);
      if (next <= current) {
        theta.swap(trial);
        current = next;
        step *= 1.1;
        break;
      }
      step *= 0.5;
    }
    if (max_abs_residual(arch, theta, data) <= tol) return theta;
    if (step < 1e-300) break;
  }
  fail(ErrorKind::NotConverged, "pretrain_to_zero_error: residual " +
                                    std::to_string(max_abs_residual(arch, theta, data)) +
                                    " above tolerance after " +
                                    std::to_string(options.max_iterations) + " iterations");
}

void StableTrainingOptions::validate() const {
  require(eta > 0.0 && decay > 0.0 && decay <= 1.0, ErrorKind::InvalidInput,
          "stable training: need eta > 0 and decay in (0, 1]");
  require(window > 0 && warm_steps >= window && phase_steps >= window && max_steps > 0,
          ErrorKind::InvalidInput, "stable training: phases must hold at least one window");
  require(tolerance > 0.0 && patience >= 1, ErrorKind::InvalidInput,
          "stable training: need tolerance > 0 and patience >= 1");
  require(record_stride > 0 && record_stride % window == 0, ErrorKind::InvalidInput,
          "stable training: record_stride must be a multiple of window");
}

StableTrainingResult train_until_stable(const Architecture& arch, std::span<const double> theta0,
                                        const Dataset& data,
                                        const StableTrainingOptions& options) {
  options.validate();
  check_params(arch, theta0);
  StableTrainingResult out;
  out.last.assign(theta0.begin(), theta0.end());
  Vector sum(out.last.size(), 0.0);
  double prev_r = std::numeric_limits<double>::quiet_NaN();
  int calm = 0;
  double eta = options.eta;
  std::int64_t done = 0;
  bool stop = false;

  for (std::uint64_t phase = 0; !stop && done < options.max_steps; ++phase) {
    TrainConfig cfg;
    cfg.eta = eta;
    cfg.noise = options.noise;
    cfg.steps = std::min(phase == 0 ? options.warm_steps : options.phase_steps,
                         options.max_steps - done);
    cfg.snapshot_stride = cfg.steps;
    cfg.seed = phase == 0 ? options.seed : derive_seed(options.seed, phase);
    const std::int64_t offset = done;
    auto observer = [&](std::int64_t step, std::span<const double> theta) {
      axpy(1.0, theta, sum);
      const std::int64_t global = offset + step;
      if (global % options.window != 0) return true;
      out.window_average = scaled(sum, 1.0 / static_cast<double>(options.window));
      std::fill(sum.begin(), sum.end(), 0.0);
      const double r = reg(arch, out.window_average, data).r_sum;
      out.last_change = std::abs(r - prev_r);
      if (global % options.record_stride == 0)
        out.history.push_back(
            {global, eta, r, loss(arch, out.window_average, data), out.window_average});
      if (phase > 0 && !std::isnan(prev_r)) {
        calm = out.last_change < options.tolerance ? calm + 1 : 0;
        if (calm >= options.patience) stop = true;
      }
      prev_r = r;
      return !stop;
    };
    const Trajectory t = sgd_label_noise(arch, out.last, data, cfg, observer);
    out.last = t.final_params();
    done += t.final_step();
    out.final_eta = eta;
    eta = options.eta * std::pow(options.decay, static_cast<double>(phase + 1));
  }
  out.steps = done;
  out.converged = stop;
  if (out.window_average.empty()) out.window_average = out.last;
  return out;
}

ParamVector project_to_zero_error(const Architecture& arch, std::span<const double> theta0,
                                  const Dataset& data, double tol, int max_iterations) {
  check_params(arch, theta0);
  data.validate(arch.input_dim);
  require(tol > 0.0 && max_iterations > 0, ErrorKind::InvalidInput,
          "project_to_zero_error: need tol > 0 and a positive budget");
  const std::size_t n = data.size(), p = arch.param_count();
  Vector theta(theta0.begin(), theta0.end());
  Vector e(n), trial(p);
  std::vector<Vector> rows(n, Vector(p));
  double mu = -1.0;
  // relu units whose kink sits on a datapoint stall the linearization; after a
  // stall those units are frozen within a growing band
  double kink_band = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = forward_and_gradient(arch, theta, data[i].x, rows[i]) - data[i].y;
    }
    if (max_abs(e) <= tol) return theta;
    if (kink_band > 0.0) {
      for (std::size_t u = 0; u < arch.hidden_width; ++u) {
        bool near = false;
        for (std::size_t i = 0; i < n && !near; ++i)
          near = std::abs(unit_preactivation(arch, theta, data[i].x, u)) < kink_band;
        if (!near) continue;
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t k = 0; k < arch.input_dim; ++k) rows[i][arch.w_index(u, k)] = 0.0;
          rows[i][arch.b_index(u)] = 0.0;
          rows[i][arch.c_index(u)] = 0.0;
        }
      }
    }
    SymMatrix k(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) k.set(i, j, dot(rows[i], rows[j]));
    const EigenDecomposition eig = sym_eigendecompose(k);
    if (mu < 0.0) mu = 1e-3 * std::max(k.trace() / static_cast<double>(n), 1e-12);
    Vector proj(n);
    for (std::size_t m = 0; m < n; ++m) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += eig.vectors(i, m) * e[i];
      proj[m] = s;
    }
    const double current = dot(e, e);
    bool accepted = false;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      Vector alpha(n, 0.0);
      for (std::size_t m = 0; m < n; ++m) {
        const double w = proj[m] / (std::max(eig.values[m], 0.0) + mu);
        for (std::size_t i = 0; i < n; ++i) alpha[i] += w * eig.vectors(i, m);
      }
      trial = theta;
      for (std::size_t i = 0; i < n; ++i) axpy(-alpha[i], rows[i], trial);
      if (loss(arch, trial, data) < current) {
        theta.swap(trial);
        mu = std::max(mu / 3.0, 1e-300);
        accepted = true;
      } else {
        mu *= 4.0;
      }
    }
    if (!accepted) {
      if (arch.activation != Activation::Relu || kink_band >= 1e-2) break;
      kink_band = kink_band == 0.0 ? 1e-6 : 10.0 * kink_band;
      mu = -1.0;
    }
  }
  const double worst = max_abs_residual(arch, theta, data);
  if (worst <= tol) return theta;
  fail(ErrorKind::NotConverged,
       "project_to_zero_error: residual " + std::to_string(worst) + " above tolerance");
}

ParamVector random_init(const Architecture& arch, std::uint64_t seed, double init_scale) {
  arch.validate();
  const CounterRng rng(seed);
  ParamVector theta(arch.param_count(), 0.0);
  const double c_scale = init_scale / std::sqrt(static_cast<double>(arch.hidden_width));
  std::uint64_t counter = 0;
  auto draw = [&] { return rng.normal(CounterRng::Stream::Init, counter++); };
  for (std::size_t i = 0; i < arch.hidden_width; ++i) {
    for (std::size_t k = 0; k < arch.input_dim; ++k) theta[arch.w_index(i, k)] = init_scale * draw();
    theta[arch.b_index(i)] = init_scale * draw();
    theta[arch.c_index(i)] = c_scale * draw();
  }
  return theta;
}

}  // namespace implreg
