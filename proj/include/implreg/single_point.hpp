#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "implreg/model.hpp"

namespace implreg {

struct UnitState {
  double c = 0.0;
  double h = 0.0;  // sigma(w . x + b)
  double o = 0.0;  // c h
};

/// Per-unit (c, h, o) at the datapoint x.
std::vector<UnitState> unit_states(const Architecture& arch, std::span<const double> theta,
                                   std::span<const double> x);

/// sqrt(||x||^2 + 1): the norm seen by a unit whose input is augmented with
/// its bias.
double augmented_norm(std::span<const double> x);

/// Contribution of one unit to ||grad f(x)||^2, h^2 + c^2 sigma'(h)^2 x_norm^2.
double unit_reg(Activation activation, double c, double h, double x_norm);

/// Output h minimizing unit_reg subject to c h = o.
///   logistic: z / (1 + z), z = o^2 x_norm^2
///   tanh:     sign(o) (z / (z + 1))^(1/4)
double optimal_h(double o, double x_norm, Activation activation);

struct Cluster {
  double c = 0.0;  // representative = member mean
  double h = 0.0;
  std::vector<std::size_t> members;
};

struct ClusterReport {
  std::vector<Cluster> clusters;  // non-zero units
  std::vector<std::size_t> zero_cluster;
  double tol = 0.0;
  double max_member_spread = 0.0;   // max-norm distance of a member from its cluster mean
  double max_h_error = 0.0;         // max |h - optimal_h(o)| over non-zero units (tanh: on |h|)
  double r_o_prime_spread = 0.0;    // max - min of r_o'(o) over non-zero units
  bool cluster_count_ok = false;    // logistic: <= 2; tanh: 1 cluster or a +/- pair
  bool h_optimal_ok = false;
  bool r_o_prime_ok = false;
  bool pass() const { return cluster_count_ok && h_optimal_ok && r_o_prime_ok; }
};

/// Single-linkage clustering of the units by (c, h) in max-norm, in unit
/// order. For tanh, units with |c|, |h| <= tol go to the zero cluster.
ClusterReport characterize(const Architecture& arch, std::span<const double> theta,
                           std::span<const double> x, double tol);

/// (res1, res2) of the equilibrium conditions for a unit with output h:
///   res1 = c^2 - h^2 / (x^2 (s'^2 - h s''))
///   res2 = (-2 delta / (eta eps^2))^2 - s'^4 x^2 / (s'^2 - h s'')
/// with s', s'' the activation derivatives expressed through h. Throws
/// Undefined on h == 0, s' == 0 or a vanishing denominator.
std::pair<double, double> equilibrium_residual(Activation activation, double c, double h,
                                               double x_norm, double delta, double eta,
                                               double eps);

/// |c| solving res1 = 0 for the given h.
double equilibrium_c(Activation activation, double h, double x_norm);

/// Roots of r_o'(o) = a on [lo, hi] located by a grid scan with bisection
/// refinement. For tanh the bracket must not contain 0.
std::vector<double> find_roots(Activation activation, double a, double x_norm, double lo,
                               double hi, std::size_t grid = 10000);

std::size_t count_roots(Activation activation, double a, double x_norm, double lo, double hi,
                        std::size_t grid = 10000);

}  // namespace implreg
