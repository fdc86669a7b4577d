#include "implreg/regularizer.hpp"

#include <cmath>

#include "implreg/errors.hpp"

namespace implreg {

RegReport reg(const Architecture& arch, std::span<const double> theta, const Dataset& data) {
  check_params(arch, theta);
  data.validate(arch.input_dim);
  RegReport out;
  out.per_point.reserve(data.size());
  Vector g(theta.size());
  for (const DataPoint& p : data.points) {
    forward_and_gradient(arch, theta, p.x, g);
    const double sq = dot(g, g);
    out.per_point.push_back(sq);
    out.r_sum += sq;
  }
  out.r_mean = out.r_sum / static_cast<double>(data.size());
  return out;
}

RegGradient reg_gradient(const Architecture& arch, std::span<const double> theta,
                         const Dataset& data) {
  check_params(arch, theta);
  data.validate(arch.input_dim);
  RegGradient out;
  out.gradient.assign(theta.size(), 0.0);
  Vector g(theta.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const DataPoint& p = data[i];
    if (near_kink(arch, theta, p.x)) {
      out.excluded_points.push_back(i);
      continue;
    }
    forward_and_gradient(arch, theta, p.x, g);
    const Vector hg = hessian_vector_product(arch, theta, p.x, g);
    axpy(2.0, hg, out.gradient);
  }
  return out;
}

double relu_unit_reg(double a, double b, double c, double x) {
  const double z = a * x + b;
  if (z <= 0.0) return 0.0;
  return z * z + c * c * (1.0 + x * x);
}

double relu_reg_closed_form(const Architecture& arch, std::span<const double> theta,
                            const Dataset& data) {
  require(arch.activation == Activation::Relu && arch.input_dim == 1 &&
              arch.skip_linear_and_bias,
          ErrorKind::InvalidInput,
          "relu_reg_closed_form needs a 1-d relu network with the skip unit");
  check_params(arch, theta);
  data.validate(1);
  double r = 0.0;
  for (const DataPoint& p : data.points) {
    const double x = p.x[0];
    for (std::size_t i = 0; i < arch.hidden_width; ++i)
      r += relu_unit_reg(theta[arch.w_index(i)], theta[arch.b_index(i)], theta[arch.c_index(i)], x);
    r += 1.0 + x * x;
  }
  return r;
}

double r_o(double o, double x_norm, Activation activation) {
  const double z = o * o * x_norm * x_norm;
  switch (activation) {
    case Activation::Logistic: return z / (1.0 + z);
    // 2 (sqrt(z^2 + z) - z), rationalized to avoid cancellation at large z
    case Activation::Tanh: return z == 0.0 ? 0.0 : 2.0 * z / (std::sqrt(z * z + z) + z);
    default: break;
  }
  fail(ErrorKind::InvalidInput, "r_o: activation must be logistic or tanh");
}

double r_o_prime(double o, double x_norm, Activation activation) {
  const double x2 = x_norm * x_norm;
  const double z = o * o * x2;
  switch (activation) {
    case Activation::Logistic: {
      const double den = 1.0 + z;
      return 2.0 * o * x2 / (den * den);
    }
    case Activation::Tanh: {
      if (o == 0.0) fail(ErrorKind::Undefined, "r_o_prime(tanh) is undefined at o = 0");
      // (2z + 1)/sqrt(z^2 + z) - 2 == 1 / (s (2z + 1 + 2s)) with s = sqrt(z^2 + z)
      const double s = std::sqrt(z * z + z);
      return 2.0 * o * x2 / (s * (2.0 * z + 1.0 + 2.0 * s));
    }
    default: break;
  }
  fail(ErrorKind::InvalidInput, "r_o_prime: activation must be logistic or tanh");
}

}  // namespace implreg
