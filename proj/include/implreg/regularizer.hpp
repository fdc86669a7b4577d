#pragma once

#include <cstddef>
#include <vector>

#include "implreg/linalg.hpp"
#include "implreg/model.hpp"

namespace implreg {

/// The implicit regularizer R(theta) = sum_i ||grad_theta f(x_i; theta)||^2.
/// r_sum is the default convention everywhere; r_mean = r_sum / n.
struct RegReport {
  double r_sum = 0.0;
  double r_mean = 0.0;
  std::vector<double> per_point;
};

RegReport reg(const Architecture& arch, std::span<const double> theta, const Dataset& data);

struct RegGradient {
  Vector gradient;  // grad of r_sum over the included points
  std::vector<std::size_t> excluded_points;  // relu points sitting on a kink
};

/// grad r_sum = 2 sum_i H_i g_i. For relu, points whose unit pre-activations
/// come within 1e-9 of zero are left out of the sum and listed.
RegGradient reg_gradient(const Architecture& arch, std::span<const double> theta,
                         const Dataset& data);

/// Closed form for the 1-d relu network with skip unit:
///   sum_j [ sum_i ( relu(a_i x_j + b_i)^2 + c_i^2 (1 + x_j^2) [a_i x_j + b_i > 0] ) + 1 + x_j^2 ]
double relu_reg_closed_form(const Architecture& arch, std::span<const double> theta,
                            const Dataset& data);

/// Per-unit contribution R_ij of relu unit i at input x (1-d).
double relu_unit_reg(double a, double b, double c, double x);

/// Minimized per-unit regularizer as a function of the unit output o at a
/// single datapoint with (augmented) input norm x_norm.
///   logistic: z / (1 + z),                z = o^2 x_norm^2
///   tanh:     2 (sqrt(z (z + 1)) - z)
double r_o(double o, double x_norm, Activation activation);

/// d r_o / d o. For logistic this is 2 o x^2 / (1 + o^2 x^2)^2. For tanh,
/// 2 o x^2 ((2z + 1) / sqrt(z^2 + z) - 2), undefined at o = 0.
double r_o_prime(double o, double x_norm, Activation activation);

}  // namespace implreg
