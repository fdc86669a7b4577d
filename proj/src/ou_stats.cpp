#include "implreg/ou_stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "implreg/errors.hpp"
#include "implreg/regularizer.hpp"
#include "implreg/rng.hpp"

namespace implreg {

namespace {

std::int64_t default_horizon(double eta) {
  return static_cast<std::int64_t>(std::ceil(std::pow(eta, -1.6)));
}

double mean_of(std::span<const std::vector<double>> series) {
  double s = 0.0;
  std::size_t count = 0;
  for (const auto& v : series) {
    for (double x : v) s += x;
    count += v.size();
  }
  return count ? s / static_cast<double>(count) : 0.0;
}

}  // namespace

double MomentReport::max_abs_cross() const {
  double m = 0.0;
  for (const MomentEstimate& e : cross) m = std::max(m, std::abs(e.time_avg));
  return m;
}

double block_bootstrap_se(std::span<const std::vector<double>> series, std::size_t block_length,
                          int reps, std::uint64_t seed) {
  require(block_length > 0 && reps > 1, ErrorKind::InvalidInput,
          "block_bootstrap_se: block_length and reps must be positive");
  std::vector<double> block_means;
  for (const auto& v : series) {
    for (std::size_t start = 0; start + block_length <= v.size(); start += block_length) {
      double s = 0.0;
      for (std::size_t t = start; t < start + block_length; ++t) s += v[t];
      block_means.push_back(s / static_cast<double>(block_length));
    }
  }
  if (block_means.size() < 2)
    fail(ErrorKind::InsufficientData, "block_bootstrap_se: fewer than two full blocks");

  const CounterRng rng(seed);
  const std::uint64_t nb = block_means.size();
  double sum = 0.0, sum_sq = 0.0;
  std::uint64_t counter = 0;
  for (int r = 0; r < reps; ++r) {
    double m = 0.0;
    for (std::uint64_t b = 0; b < nb; ++b)
      m += block_means[rng.index(CounterRng::Stream::Bootstrap, counter++, nb)];
    m /= static_cast<double>(nb);
    sum += m;
    sum_sq += m * m;
  }
  const double mean = sum / reps;
  return std::sqrt(std::max(0.0, (sum_sq - reps * mean * mean) / (reps - 1)));
}

MomentReport ou_moments(std::span<const Trajectory> runs, std::span<const double> theta_star,
                        const SpectrumReport& report, double eta, double noise_variance,
                        const MomentOptions& options) {
  require(!runs.empty(), ErrorKind::InvalidInput, "ou_moments: no trajectories");
  require(eta > 0.0, ErrorKind::InvalidInput, "ou_moments: eta must be positive");
  const std::size_t p = theta_star.size();
  require(report.gammas.size() == p, ErrorKind::InvalidInput,
          "ou_moments: spectrum does not match theta_star");

  MomentReport out;
  out.eta = eta;
  out.noise_variance = noise_variance;
  const double gmax = p ? report.gammas.front() : 0.0;
  double gmin = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    if (report.is_zero_direction(k)) continue;
    if (report.gammas[k] < options.min_gamma_rel * gmax) continue;
    out.directions.push_back(k);
    gmin = report.gammas[k];
  }

  std::int64_t shortest = runs.front().final_step();
  for (const Trajectory& t : runs) {
    require(t.snapshots.size() >= 2, ErrorKind::InsufficientData,
            "ou_moments: trajectory has fewer than two snapshots");
    shortest = std::min(shortest, t.final_step());
  }
  if (static_cast<double>(shortest) < 10.0 / eta)
    fail(ErrorKind::InsufficientData, "ou_moments: run of " + std::to_string(shortest) +
                                          " steps is shorter than 10/eta");

  if (options.burn_in) {
    out.burn_in = *options.burn_in;
  } else if (gmin > 0.0) {
    out.burn_in = static_cast<std::int64_t>(std::ceil(5.0 / (eta * gmin)));
  }
  out.burn_in = std::min(out.burn_in, shortest / 2);
  out.block_length = static_cast<std::int64_t>(std::ceil(1.0 / eta));
  if (out.directions.empty()) return out;

  const std::size_t nd = out.directions.size();
  std::vector<Vector> dirs;
  for (std::size_t d : out.directions) dirs.push_back(report.basis.column(d));

  // coords[run][d] is the series of coordinate d after burn-in.
  std::vector<std::vector<std::vector<double>>> coords(runs.size(),
                                                       std::vector<std::vector<double>>(nd));
  std::size_t block_samples = 1;
  Vector offset(p);
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& snaps = runs[r].snapshots;
    const std::int64_t stride = std::max<std::int64_t>(1, snaps[1].step - snaps[0].step);
    block_samples = static_cast<std::size_t>(
        std::max<std::int64_t>(1, (out.block_length + stride - 1) / stride));
    for (const Snapshot& s : snaps) {
      if (s.step < out.burn_in) continue;
      require(s.params.size() == p, ErrorKind::InvalidInput,
              "ou_moments: snapshot dimension mismatch");
      for (std::size_t j = 0; j < p; ++j) offset[j] = s.params[j] - theta_star[j];
      for (std::size_t d = 0; d < nd; ++d) coords[r][d].push_back(dot(dirs[d], offset));
    }
  }
  out.samples_per_run = coords.front().front().size();

  std::uint64_t boot_seed = options.bootstrap_seed;
  auto estimate = [&](std::size_t a, std::size_t b) {
    std::vector<std::vector<double>> prods(runs.size());
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const auto& x = coords[r][a];
      const auto& y = coords[r][b];
      prods[r].resize(x.size());
      for (std::size_t t = 0; t < x.size(); ++t) prods[r][t] = x[t] * y[t];
    }
    MomentEstimate e;
    e.j = out.directions[a];
    e.k = out.directions[b];
    e.time_avg = mean_of(prods);
    e.std_err = block_bootstrap_se(prods, block_samples, options.bootstrap_reps, boot_seed++);
    e.prediction = a == b ? eta * noise_variance : 0.0;
    e.ratio = e.prediction != 0.0 ? e.time_avg / e.prediction : 0.0;
    return e;
  };
  for (std::size_t a = 0; a < nd; ++a) out.variances.push_back(estimate(a, a));
  for (std::size_t a = 0; a < nd; ++a)
    for (std::size_t b = a + 1; b < nd; ++b) out.cross.push_back(estimate(a, b));
  return out;
}

std::vector<double> simulate_ou_reference(double gamma, double eta, double eps,
                                          std::int64_t steps, std::uint64_t seed) {
  require(steps > 0, ErrorKind::InvalidInput, "simulate_ou_reference: steps must be positive");
  const CounterRng rng(seed);
  std::vector<double> xs(static_cast<std::size_t>(steps));
  double x = 0.0;
  const double decay = 1.0 - 2.0 * eta * gamma;
  for (std::int64_t t = 0; t < steps; ++t) {
    x = decay * x + 2.0 * eta * eps * rng.normal(CounterRng::Stream::Test, static_cast<std::uint64_t>(t));
    xs[static_cast<std::size_t>(t)] = x;
  }
  return xs;
}

double ou_reference_variance(double gamma, double eta, double eps) {
  require(gamma > 0.0 && eta * gamma < 1.0, ErrorKind::InvalidInput,
          "ou_reference_variance: need 0 < eta gamma < 1");
  return eta * eps * eps / (gamma * (1.0 - eta * gamma));
}

std::vector<double> predicted_drift(const Architecture& arch, std::span<const double> theta_star,
                                    const Dataset& data, const SpectrumReport& report,
                                    const Subspace& zero_basis, double eta,
                                    double noise_variance, std::int64_t horizon) {
  const std::size_t p = theta_star.size();
  std::vector<Vector> positive;
  for (std::size_t k = 0; k < p; ++k)
    if (!report.is_zero_direction(k)) positive.push_back(report.basis.column(k));

  std::vector<double> out(zero_basis.dim(), 0.0);
  const double n = static_cast<double>(data.size());
  for (const DataPoint& pt : data.points) {
    const Vector g = param_gradient(arch, theta_star, pt.x);
    const SymMatrix h = param_hessian(arch, theta_star, pt.x);
    std::vector<double> hk(positive.size());
    for (std::size_t k = 0; k < positive.size(); ++k) hk[k] = dot(positive[k], g);
    for (std::size_t j = 0; j < zero_basis.dim(); ++j) {
      const Vector hb = h.apply(zero_basis.basis[j]);
      double s = 0.0;
      for (std::size_t k = 0; k < positive.size(); ++k) s += dot(hb, positive[k]) * hk[k];
      out[j] += s / n;
    }
  }
  const double scale = -2.0 * static_cast<double>(horizon) * eta * eta * noise_variance;
  for (double& v : out) v *= scale;
  return out;
}

std::vector<DriftEstimate> drift_check(const Architecture& arch,
                                       std::span<const double> theta_star, const Dataset& data,
                                       const TrainConfig& cfg, const DriftOptions& options) {
  require(options.n_seeds >= 2, ErrorKind::InvalidInput, "drift_check: need at least two seeds");
  const SpectrumReport report = spectrum(arch, theta_star, data, options.gamma_threshold_rel);
  const Subspace zero = options.zero_basis.value_or(report.zero_gamma);
  require(zero.ambient_dim == theta_star.size(), ErrorKind::InvalidInput,
          "drift_check: zero basis dimension mismatch");
  const std::int64_t horizon = options.horizon.value_or(default_horizon(cfg.eta));
  const double var = cfg.noise.variance();
  const std::vector<double> pred =
      predicted_drift(arch, theta_star, data, report, zero, cfg.eta, var, horizon);

  const std::size_t nz = zero.dim();
  std::vector<double> sum(nz, 0.0), sum_sq(nz, 0.0);
  TrainConfig run_cfg = cfg;
  run_cfg.steps = horizon;
  run_cfg.snapshot_stride = horizon;
  run_cfg.record_residuals = false;
  for (int s = 0; s < options.n_seeds; ++s) {
    run_cfg.seed = options.seed_base + static_cast<std::uint64_t>(s);
    const Trajectory t = sgd_label_noise(arch, theta_star, data, run_cfg);
    const Vector disp = subtract(t.final_params(), theta_star);
    for (std::size_t j = 0; j < nz; ++j) {
      const double v = dot(zero.basis[j], disp);
      sum[j] += v;
      sum_sq[j] += v * v;
    }
  }
  const double ns = options.n_seeds;
  std::vector<DriftEstimate> out(nz);
  for (std::size_t j = 0; j < nz; ++j) {
    DriftEstimate& e = out[j];
    e.direction = j;
    e.measured = sum[j] / ns;
    const double var_j = std::max(0.0, (sum_sq[j] - ns * e.measured * e.measured) / (ns - 1.0));
    e.std_err = std::sqrt(var_j / ns);
    e.predicted = pred[j];
    e.signal_ok = std::abs(e.predicted) >= 5.0 * e.std_err;
  }
  return out;
}

LyapunovReport lyapunov_equivalence(const Architecture& arch, std::span<const double> theta_star,
                                    const Dataset& data, double eta, double eps,
                                    double zero_error_tol) {
  const double resid = max_abs_residual(arch, theta_star, data);
  if (resid > zero_error_tol)
    fail(ErrorKind::NotZeroError,
         "lyapunov_equivalence: max residual " + std::to_string(resid));
  const std::size_t p = theta_star.size();
  SymMatrix a(p);
  for (const DataPoint& pt : data.points) a.add_outer(1.0, param_gradient(arch, theta_star, pt.x));
  const double coef = eta * eps * eps;
  const SymMatrix c = coef * a;

  LyapunovReport out;
  out.sigma = solve_lyapunov(a, c);
  const SymMatrix check = anticommutator(out.sigma, a) - c;
  out.lyapunov_residual = check.max_abs();
  out.trace_sigma_a = trace_product(out.sigma, a);
  out.half_eta_eps2_trace_sst = 0.5 * coef * a.trace();
  out.reg_sum = reg(arch, theta_star, data).r_sum;
  out.coefficient = 2.0 * out.trace_sigma_a / coef;
  auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); };
  out.trace_rel_err = rel(out.trace_sigma_a, out.half_eta_eps2_trace_sst);
  out.coefficient_rel_err = rel(out.coefficient, out.reg_sum);
  return out;
}

EquivalenceReport equivalence_trajectory_check(const Architecture& arch,
                                               std::span<const double> theta_star,
                                               const Dataset& data, double eta,
                                               const NoiseModel& noise, std::int64_t horizon,
                                               int n_seeds, const EquivalenceOptions& options) {
  require(n_seeds >= 2, ErrorKind::InvalidInput, "equivalence check: need at least two seeds");
  const std::size_t p = theta_star.size();

  EquivalenceReport out;
  out.horizon = horizon;
  out.n_seeds = n_seeds;
  out.lambda = options.lambda.value_or(eta * noise.variance() / 4.0);

  TrainConfig cfg;
  cfg.eta = eta;
  cfg.steps = horizon;
  cfg.noise = noise;
  cfg.snapshot_stride = horizon;

  Vector sum(p, 0.0), sum_sq(p, 0.0);
  for (int s = 0; s < n_seeds; ++s) {
    cfg.seed = options.seed_base + static_cast<std::uint64_t>(s);
    const Trajectory t = sgd_label_noise(arch, theta_star, data, cfg);
    const ParamVector& end = t.final_params();
    for (std::size_t j = 0; j < p; ++j) {
      sum[j] += end[j];
      sum_sq[j] += end[j] * end[j];
    }
  }
  const double ns = n_seeds;
  out.mean_sgd_endpoint = scaled(sum, 1.0 / ns);
  double noise_sq = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    const double m = out.mean_sgd_endpoint[j];
    noise_sq += std::max(0.0, (sum_sq[j] - ns * m * m) / (ns - 1.0)) / ns;
  }
  out.mc_noise = std::sqrt(noise_sq);

  TrainConfig gd_cfg = cfg;
  gd_cfg.eta = options.gd_eta.value_or(eta);
  gd_cfg.noise = NoiseModel{NoiseKind::None, 0.0};
  out.gd_endpoint = gd_regularized(arch, theta_star, data, gd_cfg, out.lambda).final_params();

  out.difference_norm = norm(subtract(out.mean_sgd_endpoint, out.gd_endpoint));
  out.gd_displacement = norm(subtract(out.gd_endpoint, theta_star));
  out.relative_deviation =
      out.gd_displacement > 0.0 ? out.difference_norm / out.gd_displacement : 0.0;
  if (out.gd_displacement < options.min_signal_ratio * out.mc_noise)
    fail(ErrorKind::InsufficientData,
         "equivalence check: gd displacement " + std::to_string(out.gd_displacement) +
             " below " + std::to_string(options.min_signal_ratio) + "x Monte Carlo noise " +
             std::to_string(out.mc_noise));
  return out;
}

}  // namespace implreg
