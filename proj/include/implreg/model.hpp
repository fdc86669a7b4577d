#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "implreg/linalg.hpp"

namespace implreg {

enum class Activation { Relu, Tanh, Logistic, Identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

// Pointwise activation and its derivatives with respect to the pre-activation.
double activate(Activation a, double z);
double activate_d1(Activation a, double z);
double activate_d2(Activation a, double z);

// Derivatives expressed through the unit output h = sigma(z): tanh gives
// sigma' = 1 - h^2 and sigma'' = -2h(1 - h^2); logistic gives h(1-h) and
// h(1-h)(1-2h). Undefined for relu (not a function of h alone).
double derivative_from_output(Activation a, double h);
double second_derivative_from_output(Activation a, double h);

/// Two layers of trainable weights with a scalar output:
///   f(x) = sum_i c_i sigma(w_i . x + b_i) [+ a . x + b]
///
/// Parameter layout (fixed):
///   [ w_0 (input_dim) ... w_{m-1} | b_0 ... b_{m-1} | c_0 ... c_{m-1} | a (input_dim), b ]
/// where the trailing skip block exists only when skip_linear_and_bias is set.
/// hidden_width 0 with the skip unit is the linear model f = a . x + b.
struct Architecture {
  std::size_t input_dim = 1;
  std::size_t hidden_width = 1;
  Activation activation = Activation::Relu;
  bool skip_linear_and_bias = false;

  std::size_t param_count() const {
    return hidden_width * (input_dim + 2) + (skip_linear_and_bias ? input_dim + 1 : 0);
  }
  std::size_t w_index(std::size_t unit, std::size_t k = 0) const { return unit * input_dim + k; }
  std::size_t b_index(std::size_t unit) const { return hidden_width * input_dim + unit; }
  std::size_t c_index(std::size_t unit) const { return hidden_width * (input_dim + 1) + unit; }
  std::size_t skip_a_index(std::size_t k = 0) const { return hidden_width * (input_dim + 2) + k; }
  std::size_t skip_b_index() const { return hidden_width * (input_dim + 2) + input_dim; }

  void validate() const;
};

using ParamVector = Vector;

struct DataPoint {
  Vector x;
  double y = 0.0;
};

struct Dataset {
  std::vector<DataPoint> points;

  std::size_t size() const { return points.size(); }
  const DataPoint& operator[](std::size_t i) const { return points[i]; }
  /// Nonempty, finite, every x of length input_dim.
  void validate(std::size_t input_dim) const;
};

/// Pre-activation of hidden unit `unit` at x.
double unit_preactivation(const Architecture& arch, std::span<const double> theta,
                          std::span<const double> x, std::size_t unit);

double forward(const Architecture& arch, std::span<const double> theta,
               std::span<const double> x);

/// Writes grad_theta f(x; theta) into `grad` and returns f(x; theta). No
/// allocation; this is the SGD inner loop.
double forward_and_gradient(const Architecture& arch, std::span<const double> theta,
                            std::span<const double> x, std::span<double> grad);

Vector param_gradient(const Architecture& arch, std::span<const double> theta,
                      std::span<const double> x);

/// Full parameter Hessian of f at x. For relu, throws AtKink when some unit's
/// pre-activation is within 1e-9 of zero.
SymMatrix param_hessian(const Architecture& arch, std::span<const double> theta,
                        std::span<const double> x);

/// H(x; theta) v without forming H. Same kink rule as param_hessian.
Vector hessian_vector_product(const Architecture& arch, std::span<const double> theta,
                              std::span<const double> x, std::span<const double> v);

/// True when some relu unit's pre-activation at x lies within `tol` of zero.
bool near_kink(const Architecture& arch, std::span<const double> theta,
               std::span<const double> x, double tol = 1e-9);

/// Third-order expansion of one SGD step about `center`, evaluated at `theta`:
///   dtheta_j = -2 eta e h^j - 2 eta (h^t h^j + e h^{j,t})
///              - eta (h^j h^{t,t} + 2 h^{j,t} h^t + e h^{j,t,t})
/// with t = theta - center, derivatives taken at center and e the residual at
/// center. Third derivatives come from central differences of the Hessian.
Vector taylor_update(const Architecture& arch, std::span<const double> center,
                     std::span<const double> theta, double residual, double eta,
                     const DataPoint& point);

/// The exact SGD step theta -> theta - 2 eta (f(x; theta) - target) grad f.
Vector exact_sgd_step(const Architecture& arch, std::span<const double> theta, double target,
                      double eta, std::span<const double> x);

double max_abs_residual(const Architecture& arch, std::span<const double> theta,
                        const Dataset& data);
/// sum_i (f(x_i) - y_i)^2
double loss(const Architecture& arch, std::span<const double> theta, const Dataset& data);

void check_params(const Architecture& arch, std::span<const double> theta);

}  // namespace implreg
