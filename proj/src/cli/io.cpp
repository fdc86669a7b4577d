#include "implreg/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "implreg/errors.hpp"

namespace implreg::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_real(const std::string& s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    // from_chars rejects "inf"/"nan" spellings printed by printf on some libcs
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan" || s == "-nan") return NAN;
    fail(ErrorKind::InvalidInput, "csv: bad number '" + s + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& s) {
  std::int64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && end == s.data() + s.size(), ErrorKind::InvalidInput,
          "csv: bad integer '" + s + "'");
  return v;
}

json vec(std::span<const double> v) { return json(std::vector<double>(v.begin(), v.end())); }

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  const std::size_t p = t.snapshots.empty() ? 0 : t.snapshots.front().params.size();
  out << "step";
  for (std::size_t j = 0; j < p; ++j) out << ",theta_" << j;
  out << '\n';
  for (const Snapshot& s : t.snapshots) {
    require(s.params.size() == p, ErrorKind::Inconsistent, "trajectory: ragged snapshots");
    out << s.step;
    for (double v : s.params) out << ',' << format_real(v);
    out << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::InvalidInput,
          "trajectory csv: empty input");
  const std::vector<std::string> header = split_line(line);
  require(!header.empty() && header[0] == "step", ErrorKind::InvalidInput,
          "trajectory csv: first column must be step");
  for (std::size_t j = 1; j < header.size(); ++j)
    require(header[j] == "theta_" + std::to_string(j - 1), ErrorKind::InvalidInput,
            "trajectory csv: unexpected column '" + header[j] + "'");
  Trajectory t;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line);
    require(f.size() == header.size(), ErrorKind::InvalidInput, "trajectory csv: ragged row");
    Snapshot s;
    s.step = parse_int(f[0]);
    for (std::size_t j = 1; j < f.size(); ++j) s.params.push_back(parse_real(f[j]));
    t.snapshots.push_back(std::move(s));
  }
  return t;
}

void write_metrics_csv(std::ostream& out, const MetricsTable& m) {
  out << "step,loss,r_sum" << (m.has_curve_length ? ",curve_length" : "") << '\n';
  for (const MetricsRow& r : m.rows) {
    out << r.step << ',' << format_real(r.loss) << ',' << format_real(r.r_sum);
    if (m.has_curve_length) out << ',' << format_real(r.curve_length);
    out << '\n';
  }
}

MetricsTable read_metrics_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::InvalidInput,
          "metrics csv: empty input");
  MetricsTable m;
  if (line == "step,loss,r_sum,curve_length" || line == "step,loss,r_sum,curve_length\r")
    m.has_curve_length = true;
  else
    require(line == "step,loss,r_sum" || line == "step,loss,r_sum\r", ErrorKind::InvalidInput,
            "metrics csv: unexpected header '" + line + "'");
  const std::size_t cols = m.has_curve_length ? 4 : 3;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line);
    require(f.size() == cols, ErrorKind::InvalidInput, "metrics csv: ragged row");
    MetricsRow r;
    r.step = parse_int(f[0]);
    r.loss = parse_real(f[1]);
    r.r_sum = parse_real(f[2]);
    if (m.has_curve_length) r.curve_length = parse_real(f[3]);
    m.rows.push_back(r);
  }
  return m;
}

json to_json(const Architecture& a) {
  return {{"input_dim", a.input_dim},
          {"hidden_width", a.hidden_width},
          {"activation", std::string(to_string(a.activation))},
          {"skip", a.skip_linear_and_bias}};
}

json to_json(const Dataset& d) {
  json pts = json::array();
  for (const DataPoint& p : d.points) pts.push_back({{"x", vec(p.x)}, {"y", p.y}});
  return pts;
}

json to_json(const SpectrumReport& r, bool with_matrices) {
  json j = {{"gammas", vec(r.gammas)},
            {"gamma_threshold", r.gamma_threshold},
            {"positive_count", r.positive_count()},
            {"zero_gamma_dim", r.zero_gamma.dim()}};
  if (with_matrices) {
    json cols = json::array();
    for (std::size_t k = 0; k < r.basis.cols(); ++k) {
      std::vector<double> c(r.basis.rows());
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = r.basis(i, k);
      cols.push_back(c);
    }
    j["eigenvectors"] = cols;
  }
  return j;
}

json to_json(const RepellenceVerdict& v) {
  json j = {{"kind", v.kind == Repellence::NonRepellent ? "non_repellent" : "strongly_repellent"},
            {"projected_grad_norm", v.projected_grad_norm},
            {"total_grad_norm", v.total_grad_norm},
            {"max_residual", v.max_residual},
            {"zero_gamma_dim", v.zero_gamma_dim},
            {"tol_abs", v.tolerances.tol_abs},
            {"tol_rel", v.tolerances.tol_rel}};
  if (v.descent_direction) j["descent_direction"] = vec(*v.descent_direction);
  return j;
}

namespace {
json moment(const MomentEstimate& m) {
  return {{"j", m.j},
          {"k", m.k},
          {"time_avg", m.time_avg},
          {"std_err", m.std_err},
          {"prediction", m.prediction},
          {"ratio", m.ratio}};
}
}  // namespace

json to_json(const MomentReport& r) {
  json var = json::array(), cross = json::array();
  for (const auto& m : r.variances) var.push_back(moment(m));
  for (const auto& m : r.cross) cross.push_back(moment(m));
  return {{"directions", r.directions},   {"variances", var},
          {"cross", cross},               {"max_abs_cross", r.max_abs_cross()},
          {"burn_in", r.burn_in},         {"block_length", r.block_length},
          {"eta", r.eta},                 {"noise_variance", r.noise_variance},
          {"samples_per_run", r.samples_per_run}};
}

json to_json(const DriftEstimate& e) {
  return {{"direction", e.direction}, {"measured", e.measured},   {"predicted", e.predicted},
          {"std_err", e.std_err},     {"signal_ok", e.signal_ok}, {"ratio", e.ratio()}};
}

json to_json(const LyapunovReport& r) {
  return {{"trace_sigma_a", r.trace_sigma_a},
          {"half_eta_eps2_trace_sst", r.half_eta_eps2_trace_sst},
          {"reg_sum", r.reg_sum},
          {"coefficient", r.coefficient},
          {"trace_rel_err", r.trace_rel_err},
          {"coefficient_rel_err", r.coefficient_rel_err},
          {"lyapunov_residual", r.lyapunov_residual}};
}

json to_json(const EquivalenceReport& r) {
  return {{"mean_sgd_endpoint", vec(r.mean_sgd_endpoint)},
          {"gd_endpoint", vec(r.gd_endpoint)},
          {"difference_norm", r.difference_norm},
          {"gd_displacement", r.gd_displacement},
          {"mc_noise", r.mc_noise},
          {"relative_deviation", r.relative_deviation},
          {"lambda", r.lambda},
          {"horizon", r.horizon},
          {"n_seeds", r.n_seeds}};
}

json to_json(const CertificateReport& r) {
  json triples = json::array();
  for (const TripleCheck& t : r.triples) {
    const char* shape = t.data_shape == TripleShape::Convex    ? "convex"
                        : t.data_shape == TripleShape::Concave ? "concave"
                                                               : "collinear";
    json jt = {{"first", t.first},
               {"data_shape", shape},
               {"convex_kinks", t.convex_kinks},
               {"concave_kinks", t.concave_kinks},
               {"pass", t.pass}};
    if (t.data_shape == TripleShape::Collinear) jt["max_line_deviation"] = t.max_line_deviation;
    triples.push_back(jt);
  }
  return {{"pass", r.pass()},
          {"failures", r.failures()},
          {"slope_tol", r.slope_tol},
          {"triples", triples}};
}

json to_json(const KinkList& k) {
  json out = json::array();
  for (const Kink& kk : k)
    out.push_back(
        {{"unit", kk.unit}, {"intercept", kk.intercept}, {"slope_change", kk.slope_change}});
  return out;
}

json to_json(const ClusterReport& r) {
  json clusters = json::array();
  for (const Cluster& c : r.clusters)
    clusters.push_back({{"c", c.c}, {"h", c.h}, {"members", c.members}});
  return {{"clusters", clusters},
          {"zero_cluster", r.zero_cluster},
          {"tol", r.tol},
          {"max_member_spread", r.max_member_spread},
          {"max_h_error", r.max_h_error},
          {"r_o_prime_spread", r.r_o_prime_spread},
          {"cluster_count_ok", r.cluster_count_ok},
          {"h_optimal_ok", r.h_optimal_ok},
          {"r_o_prime_ok", r.r_o_prime_ok},
          {"pass", r.pass()}};
}

}  // namespace implreg::io
