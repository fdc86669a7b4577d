#include "implreg/model.hpp"

#include <cmath>

#include "implreg/errors.hpp"

namespace implreg {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Logistic: return "logistic";
    case Activation::Identity: return "identity";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "logistic") return Activation::Logistic;
  if (name == "identity") return Activation::Identity;
  fail(ErrorKind::InvalidInput, "unknown activation '" + std::string(name) + "'");
}

namespace {

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Logistic: return logistic(z);
    case Activation::Identity: return z;
  }
  return 0.0;
}

double activate_d1(Activation a, double z) {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double h = std::tanh(z);
      return 1.0 - h * h;
    }
    case Activation::Logistic: {
      const double h = logistic(z);
      return h * (1.0 - h);
    }
    case Activation::Identity: return 1.0;
  }
  return 0.0;
}

double activate_d2(Activation a, double z) {
  switch (a) {
    case Activation::Relu: return 0.0;
    case Activation::Tanh: {
      const double h = std::tanh(z);
      return -2.0 * h * (1.0 - h * h);
    }
    case Activation::Logistic: {
      const double h = logistic(z);
      return h * (1.0 - h) * (1.0 - 2.0 * h);
    }
    case Activation::Identity: return 0.0;
  }
  return 0.0;
}

double derivative_from_output(Activation a, double h) {
  switch (a) {
    case Activation::Tanh: return 1.0 - h * h;
    case Activation::Logistic: return h * (1.0 - h);
    case Activation::Identity: return 1.0;
    case Activation::Relu: break;
  }
  fail(ErrorKind::InvalidInput, "derivative_from_output: relu has no output-coordinate form");
}

double second_derivative_from_output(Activation a, double h) {
  switch (a) {
    case Activation::Tanh: return -2.0 * h * (1.0 - h * h);
    case Activation::Logistic: return h * (1.0 - h) * (1.0 - 2.0 * h);
    case Activation::Identity: return 0.0;
    case Activation::Relu: break;
  }
  fail(ErrorKind::InvalidInput,
       "second_derivative_from_output: relu has no output-coordinate form");
}

void Architecture::validate() const {
  require(input_dim > 0, ErrorKind::InvalidInput, "architecture: input_dim must be positive");
  require(hidden_width > 0 || skip_linear_and_bias, ErrorKind::InvalidInput,
          "architecture: hidden_width must be positive unless the skip unit is present");
}

void Dataset::validate(std::size_t input_dim) const {
  require(!points.empty(), ErrorKind::InvalidInput, "dataset is empty");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const DataPoint& p = points[i];
    require(p.x.size() == input_dim, ErrorKind::InvalidInput,
            "dataset point " + std::to_string(i) + " has wrong input dimension");
    require(all_finite(p.x) && std::isfinite(p.y), ErrorKind::InvalidInput,
            "dataset point " + std::to_string(i) + " is not finite");
  }
}

void check_params(const Architecture& arch, std::span<const double> theta) {
  require(theta.size() == arch.param_count(), ErrorKind::InvalidInput,
          "parameter vector has length " + std::to_string(theta.size()) + ", expected " +
              std::to_string(arch.param_count()));
}

namespace {

void check_input(const Architecture& arch, std::span<const double> theta,
                 std::span<const double> x) {
  check_params(arch, theta);
  require(x.size() == arch.input_dim, ErrorKind::InvalidInput, "input has wrong dimension");
}

}  // namespace

double unit_preactivation(const Architecture& arch, std::span<const double> theta,
                          std::span<const double> x, std::size_t unit) {
  double z = theta[arch.b_index(unit)];
  const double* w = theta.data() + arch.w_index(unit);
  for (std::size_t k = 0; k < arch.input_dim; ++k) z += w[k] * x[k];
  return z;
}

double forward(const Architecture& arch, std::span<const double> theta,
               std::span<const double> x) {
  check_input(arch, theta, x);
  double f = 0.0;
  for (std::size_t i = 0; i < arch.hidden_width; ++i)
    f += theta[arch.c_index(i)] * activate(arch.activation, unit_preactivation(arch, theta, x, i));
  if (arch.skip_linear_and_bias) {
    for (std::size_t k = 0; k < arch.input_dim; ++k) f += theta[arch.skip_a_index(k)] * x[k];
    f += theta[arch.skip_b_index()];
  }
  return f;
}

double forward_and_gradient(const Architecture& arch, std::span<const double> theta,
                            std::span<const double> x, std::span<double> grad) {
  check_input(arch, theta, x);
  require(grad.size() == theta.size(), ErrorKind::InvalidInput, "gradient buffer size");
  const std::size_t d = arch.input_dim;
  double f = 0.0;
  for (std::size_t i = 0; i < arch.hidden_width; ++i) {
    const double z = unit_preactivation(arch, theta, x, i);
    const double c = theta[arch.c_index(i)];
    const double h = activate(arch.activation, z);
    const double s1 = activate_d1(arch.activation, z);
    f += c * h;
    const double cs = c * s1;
    double* gw = grad.data() + arch.w_index(i);
    for (std::size_t k = 0; k < d; ++k) gw[k] = cs * x[k];
    grad[arch.b_index(i)] = cs;
    grad[arch.c_index(i)] = h;
  }
  if (arch.skip_linear_and_bias) {
    for (std::size_t k = 0; k < d; ++k) {
      f += theta[arch.skip_a_index(k)] * x[k];
      grad[arch.skip_a_index(k)] = x[k];
    }
    f += theta[arch.skip_b_index()];
    grad[arch.skip_b_index()] = 1.0;
  }
  return f;
}

Vector param_gradient(const Architecture& arch, std::span<const double> theta,
                      std::span<const double> x) {
  Vector g(theta.size(), 0.0);
  forward_and_gradient(arch, theta, x, g);
  return g;
}

bool near_kink(const Architecture& arch, std::span<const double> theta,
               std::span<const double> x, double tol) {
  if (arch.activation != Activation::Relu) return false;
  for (std::size_t i = 0; i < arch.hidden_width; ++i)
    if (std::abs(unit_preactivation(arch, theta, x, i)) < tol) return true;
  return false;
}

namespace {

void check_kink(const Architecture& arch, std::span<const double> theta,
                std::span<const double> x) {
  if (near_kink(arch, theta, x))
    fail(ErrorKind::AtKink, "relu pre-activation within 1e-9 of zero; Hessian undefined");
}

}  // namespace

SymMatrix param_hessian(const Architecture& arch, std::span<const double> theta,
                        std::span<const double> x) {
  check_input(arch, theta, x);
  check_kink(arch, theta, x);
  const std::size_t d = arch.input_dim;
  SymMatrix hess(arch.param_count());
  for (std::size_t i = 0; i < arch.hidden_width; ++i) {
    const double z = unit_preactivation(arch, theta, x, i);
    const double c = theta[arch.c_index(i)];
    const double s1 = activate_d1(arch.activation, z);
    const double s2 = activate_d2(arch.activation, z);
    // Augmented input u = (x, 1) indexes the (w_i, b_i) block.
    auto u_at = [&](std::size_t k) { return k < d ? x[k] : 1.0; };
    auto idx = [&](std::size_t k) { return k < d ? arch.w_index(i, k) : arch.b_index(i); };
    for (std::size_t k = 0; k <= d; ++k) {
      if (s2 != 0.0)
        for (std::size_t l = k; l <= d; ++l) hess.set(idx(k), idx(l), c * s2 * u_at(k) * u_at(l));
      hess.set(idx(k), arch.c_index(i), s1 * u_at(k));
    }
  }
  return hess;
}

Vector hessian_vector_product(const Architecture& arch, std::span<const double> theta,
                              std::span<const double> x, std::span<const double> v) {
  check_input(arch, theta, x);
  require(v.size() == theta.size(), ErrorKind::InvalidInput, "hvp: vector length");
  check_kink(arch, theta, x);
  const std::size_t d = arch.input_dim;
  Vector out(theta.size(), 0.0);
  for (std::size_t i = 0; i < arch.hidden_width; ++i) {
    const double z = unit_preactivation(arch, theta, x, i);
    const double c = theta[arch.c_index(i)];
    const double s1 = activate_d1(arch.activation, z);
    const double s2 = activate_d2(arch.activation, z);
    // u . v restricted to the (w_i, b_i) block
    double uv = v[arch.b_index(i)];
    for (std::size_t k = 0; k < d; ++k) uv += x[k] * v[arch.w_index(i, k)];
    const double vc = v[arch.c_index(i)];
    const double coeff = c * s2 * uv + s1 * vc;
    for (std::size_t k = 0; k < d; ++k) out[arch.w_index(i, k)] = coeff * x[k];
    out[arch.b_index(i)] = coeff;
    out[arch.c_index(i)] = s1 * uv;
  }
  return out;
}

Vector taylor_update(const Architecture& arch, std::span<const double> center,
                     std::span<const double> theta, double residual, double eta,
                     const DataPoint& point) {
  check_params(arch, center);
  check_params(arch, theta);
  const std::size_t p = arch.param_count();
  const Vector delta = subtract(theta, center);
  const Vector g = param_gradient(arch, center, point.x);
  const Vector h_delta = hessian_vector_product(arch, center, point.x, delta);

  const double g_delta = dot(g, delta);      // h^t
  const double delta_h_delta = dot(delta, h_delta);  // h^{t,t}

  // h^{j,t,t} = d/ds [H(center + s delta) delta]_j at s = 0
  Vector third(p, 0.0);
  const double dn = norm(delta);
  if (dn > 0.0) {
    const double s = 1e-4 / dn;
    Vector plus(center.begin(), center.end());
    Vector minus(center.begin(), center.end());
    axpy(s, delta, plus);
    axpy(-s, delta, minus);
    const Vector hp = hessian_vector_product(arch, plus, point.x, delta);
    const Vector hm = hessian_vector_product(arch, minus, point.x, delta);
    for (std::size_t j = 0; j < p; ++j) third[j] = (hp[j] - hm[j]) / (2.0 * s);
  }

  Vector step(p);
  for (std::size_t j = 0; j < p; ++j) {
    step[j] = -2.0 * eta * residual * g[j] - 2.0 * eta * (g_delta * g[j] + residual * h_delta[j]) -
              eta * (g[j] * delta_h_delta + 2.0 * h_delta[j] * g_delta + residual * third[j]);
  }
  return step;
}

Vector exact_sgd_step(const Architecture& arch, std::span<const double> theta, double target,
                      double eta, std::span<const double> x) {
  Vector g(theta.size());
  const double f = forward_and_gradient(arch, theta, x, g);
  return scaled(g, -2.0 * eta * (f - target));
}

double max_abs_residual(const Architecture& arch, std::span<const double> theta,
                        const Dataset& data) {
  double m = 0.0;
  for (const DataPoint& p : data.points)
    m = std::max(m, std::abs(forward(arch, theta, p.x) - p.y));
  return m;
}

double loss(const Architecture& arch, std::span<const double> theta, const Dataset& data) {
  double l = 0.0;
  for (const DataPoint& p : data.points) {
    const double e = forward(arch, theta, p.x) - p.y;
    l += e * e;
  }
  return l;
}

}  // namespace implreg
