#include "implreg/single_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "implreg/errors.hpp"
#include "implreg/regularizer.hpp"

namespace implreg {

std::vector<UnitState> unit_states(const Architecture& arch, std::span<const double> theta,
                                   std::span<const double> x) {
  check_params(arch, theta);
  require(x.size() == arch.input_dim, ErrorKind::InvalidInput, "unit_states: dimension mismatch");
  std::vector<UnitState> out(arch.hidden_width);
  for (std::size_t i = 0; i < arch.hidden_width; ++i) {
    UnitState& u = out[i];
    u.c = theta[arch.c_index(i)];
    u.h = activate(arch.activation, unit_preactivation(arch, theta, x, i));
    u.o = u.c * u.h;
  }
  return out;
}

double augmented_norm(std::span<const double> x) { return std::sqrt(dot(x, x) + 1.0); }

double unit_reg(Activation activation, double c, double h, double x_norm) {
  const double d = derivative_from_output(activation, h);
  return h * h + c * c * d * d * x_norm * x_norm;
}

double optimal_h(double o, double x_norm, Activation activation) {
  require(x_norm > 0.0, ErrorKind::InvalidInput, "optimal_h: x_norm must be positive");
  const double z = o * o * x_norm * x_norm;
  switch (activation) {
    case Activation::Logistic: return z / (1.0 + z);
    case Activation::Tanh: {
      if (o == 0.0) return 0.0;
      const double h = std::pow(z / (z + 1.0), 0.25);
      return o > 0.0 ? h : -h;
    }
    default: fail(ErrorKind::InvalidInput, "optimal_h: logistic or tanh only");
  }
}

ClusterReport characterize(const Architecture& arch, std::span<const double> theta,
                           std::span<const double> x, double tol) {
  require(arch.activation == Activation::Logistic || arch.activation == Activation::Tanh,
          ErrorKind::InvalidInput, "characterize: logistic or tanh only");
  require(tol > 0.0, ErrorKind::InvalidInput, "characterize: tol must be positive");
  const std::vector<UnitState> units = unit_states(arch, theta, x);
  const double xn = augmented_norm(x);
  const bool tanh = arch.activation == Activation::Tanh;

  ClusterReport out;
  out.tol = tol;
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (tanh && std::abs(units[i].c) <= tol && std::abs(units[i].h) <= tol)
      out.zero_cluster.push_back(i);
    else
      active.push_back(i);
  }

  // Single linkage by union-find over the active units.
  std::vector<std::size_t> parent(units.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t a = 0; a < active.size(); ++a)
    for (std::size_t b = a + 1; b < active.size(); ++b) {
      const UnitState& u = units[active[a]];
      const UnitState& v = units[active[b]];
      if (std::max(std::abs(u.c - v.c), std::abs(u.h - v.h)) <= tol) {
        const std::size_t ra = find(active[a]), rb = find(active[b]);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  for (std::size_t i : active) {
    const std::size_t root = find(i);
    auto it = std::find_if(out.clusters.begin(), out.clusters.end(),
                           [&](const Cluster& c) { return find(c.members.front()) == root; });
    if (it == out.clusters.end()) {
      out.clusters.push_back({});
      it = out.clusters.end() - 1;
    }
    it->members.push_back(i);
  }
  for (Cluster& c : out.clusters) {
    for (std::size_t i : c.members) {
      c.c += units[i].c;
      c.h += units[i].h;
    }
    c.c /= static_cast<double>(c.members.size());
    c.h /= static_cast<double>(c.members.size());
    for (std::size_t i : c.members)
      out.max_member_spread = std::max(
          out.max_member_spread, std::max(std::abs(units[i].c - c.c), std::abs(units[i].h - c.h)));
  }

  double rp_min = 0.0, rp_max = 0.0;
  bool first = true;
  for (std::size_t i : active) {
    const UnitState& u = units[i];
    // tanh: (c, h) and (-c, -h) give the same o, so only |h| is pinned
    const double h_opt = optimal_h(u.o, xn, arch.activation);
    const double h_err = tanh ? std::abs(std::abs(u.h) - std::abs(h_opt)) : std::abs(u.h - h_opt);
    out.max_h_error = std::max(out.max_h_error, h_err);
    if (u.o == 0.0 && tanh) {
      out.r_o_prime_spread = std::numeric_limits<double>::infinity();
      continue;
    }
    const double rp = r_o_prime(u.o, xn, arch.activation);
    rp_min = first ? rp : std::min(rp_min, rp);
    rp_max = first ? rp : std::max(rp_max, rp);
    first = false;
  }
  if (!first) out.r_o_prime_spread = std::max(out.r_o_prime_spread, rp_max - rp_min);

  if (tanh) {
    if (out.clusters.size() <= 1) {
      out.cluster_count_ok = true;
    } else if (out.clusters.size() == 2) {
      const Cluster& p = out.clusters[0];
      const Cluster& q = out.clusters[1];
      out.cluster_count_ok = std::max(std::abs(p.c + q.c), std::abs(p.h + q.h)) <= tol;
    }
  } else {
    out.cluster_count_ok = out.clusters.size() <= 2;
  }
  out.h_optimal_ok = out.max_h_error <= tol;
  out.r_o_prime_ok = out.r_o_prime_spread <= tol;
  return out;
}

namespace {

double denominator(Activation activation, double h) {
  const double d1 = derivative_from_output(activation, h);
  const double d2 = second_derivative_from_output(activation, h);
  return d1 * d1 - h * d2;
}

}  // namespace

std::pair<double, double> equilibrium_residual(Activation activation, double c, double h,
                                               double x_norm, double delta, double eta,
                                               double eps) {
  require(eta > 0.0 && eps != 0.0 && x_norm > 0.0, ErrorKind::InvalidInput,
          "equilibrium_residual: need eta > 0, eps != 0, x_norm > 0");
  const double d1 = derivative_from_output(activation, h);
  const double den = denominator(activation, h);
  if (h == 0.0 || d1 == 0.0 || std::abs(den) < 1e-300)
    fail(ErrorKind::Undefined, "equilibrium_residual: degenerate unit output");
  const double x2 = x_norm * x_norm;
  const double res1 = c * c - h * h / (x2 * den);
  const double lhs = -2.0 * delta / (eta * eps * eps);
  const double res2 = lhs * lhs - d1 * d1 * d1 * d1 * x2 / den;
  return {res1, res2};
}

double equilibrium_c(Activation activation, double h, double x_norm) {
  const double den = denominator(activation, h);
  if (h == 0.0 || !(den > 0.0))
    fail(ErrorKind::Undefined, "equilibrium_c: degenerate unit output");
  return std::abs(h) / (x_norm * std::sqrt(den));
}

std::vector<double> find_roots(Activation activation, double a, double x_norm, double lo,
                               double hi, std::size_t grid) {
  require(lo < hi && grid >= 2, ErrorKind::InvalidInput, "find_roots: bad bracket");
  if (activation == Activation::Tanh)
    require(lo > 0.0 || hi < 0.0, ErrorKind::InvalidInput,
            "find_roots: tanh bracket must exclude 0");
  auto g = [&](double o) { return r_o_prime(o, x_norm, activation) - a; };
  std::vector<double> roots;
  double prev_o = lo, prev_g = g(lo);
  if (prev_g == 0.0) roots.push_back(lo);
  for (std::size_t s = 1; s < grid; ++s) {
    const double o = lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(grid - 1);
    const double v = g(o);
    if (v == 0.0) {
      roots.push_back(o);
    } else if (prev_g != 0.0 && (v > 0.0) != (prev_g > 0.0)) {
      double l = prev_o, r = o, gl = prev_g;
      for (int it = 0; it < 200 && r - l > 1e-15 * (1.0 + std::abs(l)); ++it) {
        const double m = 0.5 * (l + r);
        const double gm = g(m);
        if ((gm > 0.0) == (gl > 0.0)) {
          l = m;
          gl = gm;
        } else {
          r = m;
        }
      }
      roots.push_back(0.5 * (l + r));
    }
    prev_o = o;
    prev_g = v;
  }
  return roots;
}

std::size_t count_roots(Activation activation, double a, double x_norm, double lo, double hi,
                        std::size_t grid) {
  return find_roots(activation, a, x_norm, lo, hi, grid).size();
}

}  // namespace implreg
