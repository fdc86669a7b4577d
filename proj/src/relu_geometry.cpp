#include "implreg/relu_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "implreg/errors.hpp"
#include "implreg/regularizer.hpp"

namespace implreg {

namespace {

void require_1d_relu(const Architecture& arch, const char* who) {
  arch.validate();
  if (arch.input_dim != 1 || arch.activation != Activation::Relu)
    fail(ErrorKind::InvalidInput, std::string(who) + ": needs a 1-d relu network");
}

double f1(const Architecture& arch, std::span<const double> theta, double x) {
  const double xs[1] = {x};
  return forward(arch, theta, xs);
}

void require_sorted(const Dataset& data, const char* who) {
  for (std::size_t i = 0; i + 1 < data.size(); ++i)
    if (!(data[i].x[0] < data[i + 1].x[0]))
      fail(ErrorKind::InvalidInput, std::string(who) + ": inputs must be strictly increasing");
}

struct MergedKink {
  double location;
  double slope_change;
};

std::vector<MergedKink> merge_kinks(const KinkList& kinks) {
  std::vector<MergedKink> out;
  for (const Kink& k : kinks) {
    if (!out.empty() &&
        std::abs(k.intercept - out.back().location) <= 1e-9 * (1.0 + std::abs(k.intercept))) {
      out.back().slope_change += k.slope_change;
    } else {
      out.push_back({k.intercept, k.slope_change});
    }
  }
  return out;
}

}  // namespace

KinkList extract_kinks(const Architecture& arch, std::span<const double> theta) {
  require_1d_relu(arch, "extract_kinks");
  check_params(arch, theta);
  KinkList out;
  for (std::size_t i = 0; i < arch.hidden_width; ++i) {
    const double a = theta[arch.w_index(i)];
    const double b = theta[arch.b_index(i)];
    const double c = theta[arch.c_index(i)];
    if (a == 0.0 || c == 0.0) continue;
    out.push_back({i, -b / a, c * std::abs(a)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Kink& l, const Kink& r) { return l.intercept < r.intercept; });
  return out;
}

double curve_length(const Architecture& arch, std::span<const double> theta, double x_lo,
                    double x_hi, std::size_t samples) {
  require(x_lo < x_hi, ErrorKind::InvalidInput, "curve_length: need x_lo < x_hi");
  require(samples >= 2, ErrorKind::InvalidInput, "curve_length: need at least two samples");
  std::vector<double> xs;
  xs.reserve(samples + arch.hidden_width);
  for (std::size_t s = 0; s < samples; ++s)
    xs.push_back(x_lo + (x_hi - x_lo) * static_cast<double>(s) / static_cast<double>(samples - 1));
  xs.back() = x_hi;
  for (const Kink& k : extract_kinks(arch, theta))
    if (k.intercept > x_lo && k.intercept < x_hi) xs.push_back(k.intercept);
  std::sort(xs.begin(), xs.end());

  double length = 0.0;
  double prev_x = xs.front();
  double prev_f = f1(arch, theta, prev_x);
  for (std::size_t s = 1; s < xs.size(); ++s) {
    const double f = f1(arch, theta, xs[s]);
    length += std::hypot(xs[s] - prev_x, f - prev_f);
    prev_x = xs[s];
    prev_f = f;
  }
  return length;
}

double chord_sum(const Dataset& data) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < data.size(); ++i)
    s += std::hypot(data[i + 1].x[0] - data[i].x[0], data[i + 1].y - data[i].y);
  return s;
}

bool CertificateReport::pass() const { return failures() == 0; }

std::size_t CertificateReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(triples.begin(), triples.end(), [](const TripleCheck& t) { return !t.pass; }));
}

CertificateReport convexity_certificate(const Architecture& arch, std::span<const double> theta,
                                        const Dataset& data, const CertificateOptions& options) {
  require_1d_relu(arch, "convexity_certificate");
  data.validate(1);
  require_sorted(data, "convexity_certificate");
  const double resid = max_abs_residual(arch, theta, data);
  if (resid > options.zero_error_tol)
    fail(ErrorKind::NotZeroError, "convexity_certificate: max residual " + std::to_string(resid));

  double max_slope = 0.0;
  for (std::size_t i = 0; i + 1 < data.size(); ++i)
    max_slope = std::max(max_slope, std::abs((data[i + 1].y - data[i].y) /
                                             (data[i + 1].x[0] - data[i].x[0])));
  CertificateReport out;
  out.slope_tol = options.slope_tol_rel * (1.0 + max_slope);

  const KinkList kinks = extract_kinks(arch, theta);
  const std::vector<MergedKink> merged = merge_kinks(kinks);

  for (std::size_t i = 0; i + 2 < data.size(); ++i) {
    const double x0 = data[i].x[0], x1 = data[i + 1].x[0], x2 = data[i + 2].x[0];
    const double y0 = data[i].y, y1 = data[i + 1].y, y2 = data[i + 2].y;
    TripleCheck t;
    t.first = i;
    const double l = (x1 - x0) * (y2 - y1);
    const double r = (y1 - y0) * (x2 - x1);
    const double cross = l - r;
    const double scale = std::abs(l) + std::abs(r) + (x1 - x0) * (x2 - x1);
    if (std::abs(cross) <= options.collinear_rel * scale)
      t.data_shape = TripleShape::Collinear;
    else
      t.data_shape = cross > 0.0 ? TripleShape::Convex : TripleShape::Concave;

    for (const MergedKink& k : merged) {
      if (!(k.location > x0 && k.location < x2)) continue;
      if (std::abs(k.slope_change) <= out.slope_tol) continue;
      if (k.slope_change > 0.0)
        ++t.convex_kinks;
      else
        ++t.concave_kinks;
    }

    switch (t.data_shape) {
      case TripleShape::Convex: t.pass = t.concave_kinks == 0; break;
      case TripleShape::Concave: t.pass = t.convex_kinks == 0; break;
      case TripleShape::Collinear: {
        auto line = [&](double x) { return y0 + (y2 - y0) * (x - x0) / (x2 - x0); };
        double dev = std::max({std::abs(f1(arch, theta, x0) - y0),
                               std::abs(f1(arch, theta, x1) - line(x1)),
                               std::abs(f1(arch, theta, x2) - y2)});
        for (const Kink& k : kinks)
          if (k.intercept > x0 && k.intercept < x2)
            dev = std::max(dev, std::abs(f1(arch, theta, k.intercept) - line(k.intercept)));
        t.max_line_deviation = dev;
        t.pass = !(t.convex_kinks > 0 && t.concave_kinks > 0) && dev <= options.tol_line;
        break;
      }
    }
    out.triples.push_back(t);
  }
  return out;
}

namespace {

// Parameters of the two units in (possibly reflected) coordinates x' = s x.
struct Frame {
  double s = 1.0;
  double a1, b1, c1, a2, b2, c2;
  double x0;
  std::vector<double> xs;
};

struct Deltas {
  double da1 = 0, db1 = 0, da2 = 0, db2 = 0, dskip_a = 0, dskip_b = 0;
};

Deltas case_deltas(int case_id, const Frame& f, double eps) {
  Deltas d;
  if (case_id == 4) {
    d.da2 = -eps * f.a2;
    d.db2 = f.x0 * f.a2 * eps;
    d.da1 = -(f.c2 / f.c1) * d.da2;
    d.db1 = -(f.c2 / f.c1) * d.db2;
    return d;
  }
  d.da1 = -eps * f.a1;
  d.db1 = f.x0 * f.a1 * eps;
  if (case_id == 1) {
    d.da2 = -(f.c1 / f.c2) * d.da1;
    d.db2 = -(f.c1 / f.c2) * d.db1;
  } else {
    d.da2 = (f.c1 / f.c2) * d.da1;
    d.db2 = (f.c1 / f.c2) * d.db1;
    d.dskip_a = -f.c1 * d.da1;
    d.dskip_b = -f.c1 * d.db1;
  }
  return d;
}

bool same_x(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a)); }

// Sign of the pre-activation, 0 when within roundoff of the kink.
int pattern(double a, double b, double x) {
  const double z = a * x + b;
  if (std::abs(z) <= 1e-12 * (1.0 + std::abs(a * x) + std::abs(b))) return 0;
  return z > 0.0 ? 1 : -1;
}

bool admissible(const Frame& f, const Deltas& d) {
  const double na1 = f.a1 + d.da1, nb1 = f.b1 + d.db1;
  const double na2 = f.a2 + d.da2, nb2 = f.b2 + d.db2;
  if (na1 * f.a1 <= 0.0 || na2 * f.a2 <= 0.0) return false;
  const double k1 = -nb1 / na1, k2 = -nb2 / na2;
  const double lo = std::min(k1, k2), hi = std::max(k1, k2);
  for (double x : f.xs) {
    if (same_x(x, f.x0)) continue;
    if (x >= lo && x <= hi) return false;
  }
  for (double x : f.xs) {
    const int p1 = pattern(f.a1, f.b1, x), q1 = pattern(na1, nb1, x);
    const int p2 = pattern(f.a2, f.b2, x), q2 = pattern(na2, nb2, x);
    if (p1 != 0 && q1 != p1) return false;
    if (p2 != 0 && q2 != p2) return false;
  }
  return true;
}

}  // namespace

PerturbationPlan build_perturbation(const Architecture& arch, std::span<const double> theta,
                                    const Dataset& data, std::size_t unit1, std::size_t unit2,
                                    double x0, double epsilon) {
  require_1d_relu(arch, "build_perturbation");
  check_params(arch, theta);
  data.validate(1);
  require(unit1 < arch.hidden_width && unit2 < arch.hidden_width && unit1 != unit2,
          ErrorKind::InvalidInput, "build_perturbation: bad unit indices");
  require(epsilon >= 0.0 && epsilon < 1.0 && std::isfinite(x0), ErrorKind::InvalidInput,
          "build_perturbation: need 0 <= epsilon < 1 and finite x0");

  const double a1 = theta[arch.w_index(unit1)], b1 = theta[arch.b_index(unit1)];
  const double c1 = theta[arch.c_index(unit1)];
  const double a2 = theta[arch.w_index(unit2)], b2 = theta[arch.b_index(unit2)];
  const double c2 = theta[arch.c_index(unit2)];
  if (!(c1 < 0.0 && c2 > 0.0))
    fail(ErrorKind::NotApplicable, "build_perturbation: need c1 < 0 < c2");
  if (a1 == 0.0 || a2 == 0.0)
    fail(ErrorKind::NotApplicable, "build_perturbation: a unit has no kink");

  PerturbationPlan plan;
  plan.unit1 = unit1;
  plan.unit2 = unit2;
  plan.x0 = x0;
  plan.mirrored = (-b2 / a2) < (-b1 / a1);

  Frame f;
  f.s = plan.mirrored ? -1.0 : 1.0;
  f.a1 = f.s * a1;
  f.b1 = b1;
  f.c1 = c1;
  f.a2 = f.s * a2;
  f.b2 = b2;
  f.c2 = c2;
  f.x0 = f.s * x0;
  for (const DataPoint& p : data.points) f.xs.push_back(f.s * p.x[0]);

  const double k1 = -f.b1 / f.a1, k2 = -f.b2 / f.a2;
  const double slack = 1e-12 * (1.0 + std::abs(f.x0));
  if (f.x0 < k1 - slack || f.x0 > k2 + slack)
    fail(ErrorKind::NotApplicable, "build_perturbation: x0 is not between the kinks");
  for (double x : f.xs)
    if (x >= k1 && x <= k2 && !same_x(x, f.x0))
      fail(ErrorKind::NotApplicable,
           "build_perturbation: another datapoint lies between the kinks");

  if (f.a1 > 0.0)
    plan.case_id = f.a2 > 0.0 ? 1 : 2;
  else
    plan.case_id = f.a2 > 0.0 ? 3 : 4;
  if ((plan.case_id == 2 || plan.case_id == 3) && !arch.skip_linear_and_bias)
    fail(ErrorKind::NotApplicable, "build_perturbation: case " + std::to_string(plan.case_id) +
                                       " needs the skip unit");

  bool has_decrease_side = false;
  for (double x : f.xs) {
    if (same_x(x, f.x0)) continue;
    if (plan.case_id == 1 && x > k2) has_decrease_side = true;
    if (plan.case_id == 4 && x < k1) has_decrease_side = true;
    if (plan.case_id == 2 || plan.case_id == 3) has_decrease_side = true;
  }
  if (!has_decrease_side)
    fail(ErrorKind::NotApplicable,
         "build_perturbation: no datapoint on the side where the regularizer would drop");

  double eps = epsilon;
  Deltas d = case_deltas(plan.case_id, f, eps);
  if (eps > 0.0) {
    while (!admissible(f, d)) {
      if (plan.halvings == 40)
        fail(ErrorKind::NotApplicable, "build_perturbation: epsilon shrink budget exhausted");
      eps *= 0.5;
      ++plan.halvings;
      d = case_deltas(plan.case_id, f, eps);
    }
  }
  plan.epsilon = eps;
  plan.a1 = f.s * (f.a1 + d.da1);
  plan.b1 = f.b1 + d.db1;
  plan.a2 = f.s * (f.a2 + d.da2);
  plan.b2 = f.b2 + d.db2;
  plan.skip_da = f.s * d.dskip_a;
  plan.skip_db = d.dskip_b;
  if (eps == 0.0) {
    plan.a1 = a1;
    plan.b1 = b1;
    plan.a2 = a2;
    plan.b2 = b2;
    plan.skip_da = plan.skip_db = 0.0;
  }
  return plan;
}

ParamVector apply_perturbation(const Architecture& arch, std::span<const double> theta,
                               const PerturbationPlan& plan) {
  require_1d_relu(arch, "apply_perturbation");
  check_params(arch, theta);
  ParamVector out(theta.begin(), theta.end());
  out[arch.w_index(plan.unit1)] = plan.a1;
  out[arch.b_index(plan.unit1)] = plan.b1;
  out[arch.w_index(plan.unit2)] = plan.a2;
  out[arch.b_index(plan.unit2)] = plan.b2;
  if (plan.skip_da != 0.0 || plan.skip_db != 0.0) {
    require(arch.skip_linear_and_bias, ErrorKind::InvalidInput,
            "apply_perturbation: plan moves the skip unit but the network has none");
    out[arch.skip_a_index()] += plan.skip_da;
    out[arch.skip_b_index()] += plan.skip_db;
  }
  return out;
}

PerturbationCheck verify_perturbation(const Architecture& arch, std::span<const double> theta,
                                      const PerturbationPlan& plan, const Dataset& data) {
  PerturbationCheck out;
  const ParamVector moved = apply_perturbation(arch, theta, plan);
  for (std::size_t j = 0; j < data.size(); ++j) {
    const double before = forward(arch, theta, data[j].x);
    const double after = forward(arch, moved, data[j].x);
    const double change = std::abs(after - before) / (1.0 + std::abs(before));
    if (change > out.max_value_change) {
      out.max_value_change = change;
      out.worst_point = j;
    }
  }
  out.values_preserved = out.max_value_change <= 1e-9;

  const double r0 = reg(arch, theta, data).r_sum;
  out.delta_reg = reg(arch, moved, data).r_sum - r0;
  out.strictly_decreasing = out.delta_reg < 0.0;
  if (plan.epsilon > 0.0) {
    out.rate = -out.delta_reg / plan.epsilon;
    const PerturbationPlan half = build_perturbation(arch, theta, data, plan.unit1, plan.unit2,
                                                     plan.x0, plan.epsilon / 2.0);
    const double r_half = reg(arch, apply_perturbation(arch, theta, half), data).r_sum;
    out.rate_half = (r0 - r_half) / half.epsilon;
    out.first_order = out.rate > 0.0 && std::abs(out.rate_half / out.rate - 1.0) <= 0.1;
  }
  return out;
}

}  // namespace implreg
