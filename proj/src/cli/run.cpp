#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "implreg/errors.hpp"
#include "implreg/experiment.hpp"
#include "implreg/io.hpp"
#include "implreg/ou_stats.hpp"
#include "implreg/regularizer.hpp"
#include "implreg/relu_geometry.hpp"
#include "implreg/single_point.hpp"
#include "implreg/spectrum.hpp"

#ifndef IMPLREG_VERSION
#define IMPLREG_VERSION "dev"
#endif
#ifndef IMPLREG_BUILD_TYPE
#define IMPLREG_BUILD_TYPE "unknown"
#endif

namespace fs = std::filesystem;

namespace implreg::cli {

namespace {

// Runs f, turning library errors into an AnalysisError naming the stage.
template <class F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const AnalysisError&) {
    throw;
  } catch (const Error& e) {
    throw AnalysisError(name, e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw AnalysisError("output", "cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool is_1d_relu(const Architecture& a) {
  return a.input_dim == 1 && a.activation == Activation::Relu;
}

std::pair<double, double> x_range(const Dataset& d) {
  double lo = INFINITY, hi = -INFINITY;
  for (const DataPoint& p : d.points) {
    lo = std::min(lo, p.x[0]);
    hi = std::max(hi, p.x[0]);
  }
  return {lo, hi};
}

io::MetricsRow metrics_at(const Architecture& arch, std::span<const double> theta,
                          const Dataset& data, std::int64_t step) {
  io::MetricsRow r;
  r.step = step;
  r.loss = loss(arch, theta, data);
  r.r_sum = reg(arch, theta, data).r_sum;
  if (is_1d_relu(arch)) {
    const auto [lo, hi] = x_range(data);
    r.curve_length = curve_length(arch, theta, lo, hi);
  }
  return r;
}

// Units whose |c| * ||(w, b)|| exceeds 1% of the largest.
std::size_t active_units(const Architecture& arch, std::span<const double> theta) {
  std::vector<double> s(arch.hidden_width);
  for (std::size_t i = 0; i < arch.hidden_width; ++i) {
    double wb = theta[arch.b_index(i)] * theta[arch.b_index(i)];
    for (std::size_t k = 0; k < arch.input_dim; ++k)
      wb += theta[arch.w_index(i, k)] * theta[arch.w_index(i, k)];
    s[i] = std::abs(theta[arch.c_index(i)]) * std::sqrt(wb);
  }
  const double top = s.empty() ? 0.0 : *std::max_element(s.begin(), s.end());
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [&](double v) { return top > 0.0 && v > 0.01 * top; }));
}

json geometry(const ExperimentConfig& c, std::span<const double> theta, const Dataset& data) {
  double ylo = INFINITY, yhi = -INFINITY;
  for (const DataPoint& p : data.points) {
    ylo = std::min(ylo, p.y);
    yhi = std::max(yhi, p.y);
  }
  const auto [lo, hi] = x_range(data);
  CertificateOptions opts;
  opts.zero_error_tol = c.analyses.zero_error_tol;
  opts.tol_line = c.analyses.line_tol_rel * std::max(yhi - ylo, 1e-12);
  const double length = curve_length(c.arch, theta, lo, hi);
  const double chord = chord_sum(data);
  const KinkList kinks = extract_kinks(c.arch, theta);
  const std::size_t inside = static_cast<std::size_t>(std::count_if(
      kinks.begin(), kinks.end(),
      [&](const Kink& k) { return k.intercept > lo && k.intercept < hi; }));
  json j = {{"curve_length", length},
            {"chord_sum", chord},
            {"length_over_chord", length / chord},
            {"kinks_in_range", inside},
            {"tol_line", opts.tol_line}};
  j["certificate"] = io::to_json(convexity_certificate(c.arch, theta, data, opts));
  return j;
}

json spectrum_analysis(const ExperimentConfig& c, std::span<const double> theta,
                       const Dataset& data) {
  const SpectrumReport sp = spectrum(c.arch, theta, data);
  json j = io::to_json(sp);
  const double resid = max_abs_residual(c.arch, theta, data);
  j["max_residual"] = resid;
  if (resid > c.analyses.zero_error_tol) {
    j["repellence"] = nullptr;
    j["note"] = "not at zero error; repellence and Lyapunov checks skipped";
    return j;
  }
  RepellenceTolerances tol;
  tol.zero_error = c.analyses.zero_error_tol;
  tol.tol_abs = c.analyses.tol_abs;
  tol.tol_rel = c.analyses.tol_rel;
  j["repellence"] = io::to_json(classify_repellence(c.arch, theta, data, sp.zero_gamma, tol));
  const double eps = std::sqrt(c.train.noise.variance());
  if (eps > 0.0)
    j["lyapunov"] = io::to_json(lyapunov_equivalence(c.arch, theta, data, c.train.eta, eps,
                                                     c.analyses.zero_error_tol));
  return j;
}

struct SeedOutcome {
  Trajectory trajectory;
  ParamVector final_params;
  json report;
};

ParamVector start_point(const ExperimentConfig& c, std::uint64_t seed, const Dataset& data,
                        json& report) {
  ParamVector theta = random_init(c.arch, seed, c.init.scale);
  if (c.init.pretrain) {
    theta = stage("pretrain", [&] {
      return pretrain_to_zero_error(c.arch, theta, data, c.init.pretrain_tol);
    });
    report["pretrain_residual"] = max_abs_residual(c.arch, theta, data);
  }
  return theta;
}

SeedOutcome run_seed(const ExperimentConfig& c, std::uint64_t seed, const ParamVector& theta0,
                     const Dataset& data, const fs::path& dir) {
  SeedOutcome out;
  json& rep = out.report;
  rep["seed"] = seed;
  io::MetricsTable metrics;
  metrics.has_curve_length = is_1d_relu(c.arch);

  if (c.train.mode == TrainMode::Fixed) {
    TrainConfig tc;
    tc.eta = c.train.eta;
    tc.steps = c.train.steps;
    tc.noise = c.train.noise;
    tc.seed = seed;
    tc.snapshot_stride = c.train.snapshot_stride;
    out.trajectory = stage("train", [&] { return sgd_label_noise(c.arch, theta0, data, tc); });
    out.final_params = out.trajectory.final_params();
    rep["steps"] = out.trajectory.final_step();
  } else {
    StableTrainingOptions so = c.train.stable;
    so.eta = c.train.eta;
    so.noise = c.train.noise;
    so.seed = seed;
    so.record_stride = c.train.snapshot_stride;
    const StableTrainingResult r =
        stage("train", [&] { return train_until_stable(c.arch, theta0, data, so); });
    out.trajectory.snapshots.push_back({0, theta0});
    for (const StableTrainingRecord& h : r.history)
      out.trajectory.snapshots.push_back({h.step, h.params});
    out.final_params = r.window_average;
    rep["steps"] = r.steps;
    rep["stopping_rule_met"] = r.converged;
    rep["final_eta"] = r.final_eta;
    rep["last_window_change"] = r.last_change;
  }
  for (const Snapshot& s : out.trajectory.snapshots)
    metrics.rows.push_back(metrics_at(c.arch, s.params, data, s.step));

  if (c.train.polish) {
    out.final_params = stage("polish", [&] {
      return project_to_zero_error(c.arch, out.final_params, data, c.train.polish_tol);
    });
    rep["polish_distance"] = norm(subtract(out.final_params, out.trajectory.final_params()));
  }
  rep["final_loss"] = loss(c.arch, out.final_params, data);
  rep["final_r_sum"] = reg(c.arch, out.final_params, data).r_sum;
  rep["final_max_residual"] = max_abs_residual(c.arch, out.final_params, data);
  if (c.arch.hidden_width > 0) rep["active_units"] = active_units(c.arch, out.final_params);
  rep["final_params"] = out.final_params;

  {
    std::ofstream f(dir / "trajectory.csv", std::ios::binary);
    io::write_trajectory_csv(f, out.trajectory);
    std::ofstream m(dir / "metrics.csv", std::ios::binary);
    io::write_metrics_csv(m, metrics);
    if (!f || !m) throw AnalysisError("output", "cannot write CSV under " + dir.string());
  }

  if (c.analyses.spectrum)
    rep["spectrum"] = stage("spectrum", [&] { return spectrum_analysis(c, out.final_params, data); });
  if (c.analyses.geometry)
    rep["geometry"] = stage("geometry", [&] { return geometry(c, out.final_params, data); });
  if (c.analyses.single_point) {
    rep["single_point"] = stage("single_point", [&] {
      require(data.size() == 1, ErrorKind::InvalidInput, "needs exactly one datapoint");
      return io::to_json(
          characterize(c.arch, out.final_params, data[0].x, c.analyses.cluster_tol));
    });
  }
  if (c.train.control) {
    const ParamVector ctrl = stage("control", [&] {
      return pretrain_to_zero_error(c.arch, theta0, data, c.train.control_tol);
    });
    json cj = {{"final_loss", loss(c.arch, ctrl, data)},
               {"final_r_sum", reg(c.arch, ctrl, data).r_sum}};
    if (is_1d_relu(c.arch)) {
      const auto [lo, hi] = x_range(data);
      cj["curve_length"] = curve_length(c.arch, ctrl, lo, hi);
      if (c.analyses.geometry) cj["geometry"] = stage("control", [&] { return geometry(c, ctrl, data); });
    }
    rep["control"] = cj;
  }
  return out;
}

}  // namespace

RunResult run(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out_dir(c.output_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw AnalysisError("output", "cannot create " + out_dir.string() + ": " + ec.message());

  RunResult res;
  json& man = res.manifest;
  man["manifest_version"] = 1;
  man["config"] = config_to_json(c);
  man["seeds"] = c.seeds();
  man["build"] = {{"version", IMPLREG_VERSION},
                  {"build_type", IMPLREG_BUILD_TYPE},
                  {"compiler", __VERSION__}};
  man["started_at"] = utc_now();
  man["status"] = "running";
  json runs = json::array();
  for (std::uint64_t s : c.seeds()) {
    const std::string d = "seed_" + std::to_string(s);
    runs.push_back({{"seed", s},
                    {"trajectory", d + "/trajectory.csv"},
                    {"metrics", d + "/metrics.csv"}});
  }
  man["outputs"] = {{"report", "report.json"}, {"runs", runs}};
  write_json(out_dir / "manifest.json", man);

  auto finish = [&](const std::string& status, const std::string& failed) {
    man["status"] = status;
    if (!failed.empty()) man["failed_analysis"] = failed;
    man["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json(out_dir / "manifest.json", man);
  };

  try {
    Dataset data;
    if (c.dataset.builtin.empty()) {
      data = c.dataset.points;
    } else {
      data = stage("dataset", [&] {
        return builtins::generate(c.dataset.builtin, c.seed, c.dataset.params);
      });
    }
    try {
      data.validate(c.arch.input_dim);
    } catch (const Error& e) {
      throw ConfigError({"field 'dataset': " + std::string(e.what())});
    }

    json& rep = res.report;
    rep["experiment"] = c.experiment;
    rep["dataset"] = io::to_json(data);
    rep["parameter_count"] = c.arch.param_count();

    json shared_info;
    ParamVector shared;
    if (c.init.shared) {
      shared = start_point(c, c.seed, data, shared_info);
      rep["shared_start"] = shared_info;
    }
    std::vector<Trajectory> trajectories;
    json seed_reports = json::array();
    for (std::uint64_t s : c.seeds()) {
      const fs::path dir = out_dir / ("seed_" + std::to_string(s));
      fs::create_directories(dir, ec);
      if (ec) throw AnalysisError("output", "cannot create " + dir.string());
      json start_info;
      const ParamVector theta0 = c.init.shared ? shared : start_point(c, s, data, start_info);
      SeedOutcome o = run_seed(c, s, theta0, data, dir);
      if (!start_info.is_null()) o.report.update(start_info);
      seed_reports.push_back(std::move(o.report));
      if (c.analyses.ou) trajectories.push_back(std::move(o.trajectory));
    }
    rep["runs"] = seed_reports;

    if (c.analyses.ou || c.analyses.drift) {
      const SpectrumReport sp = stage("spectrum", [&] { return spectrum(c.arch, shared, data); });
      if (c.analyses.ou) {
        rep["ou"] = stage("ou", [&] {
          MomentOptions mo;
          mo.min_gamma_rel = c.analyses.ou_min_gamma_rel;
          mo.bootstrap_seed = derive_seed(c.seed, 101);
          return io::to_json(ou_moments(trajectories, shared, sp, c.train.eta,
                                        c.train.noise.variance(), mo));
        });
      }
      if (c.analyses.drift) {
        rep["drift"] = stage("drift", [&] {
          TrainConfig tc;
          tc.eta = c.train.eta;
          tc.noise = c.train.noise;
          DriftOptions dopt;
          dopt.n_seeds = c.analyses.drift_seeds;
          dopt.seed_base = derive_seed(c.seed, 102);
          dopt.horizon = c.analyses.drift_horizon;
          const Vector g = reg_gradient(c.arch, shared, data).gradient;
          dopt.zero_basis = align_basis(sp.zero_gamma, project(g, sp.zero_gamma));
          json arr = json::array();
          for (const DriftEstimate& e : drift_check(c.arch, shared, data, tc, dopt))
            arr.push_back(io::to_json(e));
          return arr;
        });
      }
    }
    write_json(out_dir / "report.json", rep);
  } catch (const AnalysisError& e) {
    finish("failed", e.analysis());
    throw;
  } catch (const ConfigError&) {
    finish("invalid_config", "");
    throw;
  }
  finish("ok", "");
  return res;
}

}  // namespace implreg::cli
