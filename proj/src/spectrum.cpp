#include "implreg/spectrum.hpp"

#include <cmath>
#include <string>

#include "implreg/errors.hpp"
#include "implreg/regularizer.hpp"

namespace implreg {

SpectrumReport spectrum(const Architecture& arch, std::span<const double> theta,
                        const Dataset& data, double gamma_threshold_rel) {
  check_params(arch, theta);
  data.validate(arch.input_dim);
  const std::size_t p = theta.size();
  SpectrumReport out;
  out.gram = SymMatrix(p);
  const double inv_n = 1.0 / static_cast<double>(data.size());
  Vector g(p);
  for (const DataPoint& pt : data.points) {
    forward_and_gradient(arch, theta, pt.x, g);
    out.gram.add_outer(inv_n, g);
  }
  EigenDecomposition eig = sym_eigendecompose(out.gram);
  out.gammas = std::move(eig.values);
  out.basis = std::move(eig.vectors);

  const double gmax = p ? std::max(out.gammas.front(), 0.0) : 0.0;
  out.gamma_threshold = gmax > 0.0 ? gamma_threshold_rel * gmax : 1e-12;
  out.zero_gamma.ambient_dim = p;
  for (std::size_t k = 0; k < p; ++k)
    if (out.gammas[k] <= out.gamma_threshold) out.zero_gamma.basis.push_back(out.basis.column(k));
  return out;
}

Subspace align_basis(const Subspace& zero, std::span<const double> direction) {
  const Vector v = project(direction, zero);
  const double vn = norm(v);
  if (zero.empty() || vn == 0.0) return zero;

  Subspace out;
  out.ambient_dim = zero.ambient_dim;
  out.basis.push_back(scaled(v, 1.0 / vn));
  // Gram-Schmidt (twice) the old basis against what we have; keep the
  // dim - 1 vectors with the largest residuals.
  std::vector<Vector> candidates;
  for (const Vector& b : zero.basis) {
    Vector r = b;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : out.basis) axpy(-dot(q, r), q, r);
    candidates.push_back(std::move(r));
  }
  while (out.basis.size() < zero.dim()) {
    std::size_t best = 0;
    double best_norm = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      Vector r = candidates[i];
      for (int pass = 0; pass < 2; ++pass)
        for (const Vector& q : out.basis) axpy(-dot(q, r), q, r);
      const double rn = norm(r);
      if (rn > best_norm) {
        best_norm = rn;
        best = i;
        candidates[i] = std::move(r);
      }
    }
    Vector r = candidates[best];
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : out.basis) axpy(-dot(q, r), q, r);
    out.basis.push_back(scaled(r, 1.0 / norm(r)));
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return out;
}

RepellenceVerdict classify_repellence(const Architecture& arch, std::span<const double> theta,
                                      const Dataset& data, const RepellenceTolerances& tol) {
  const SpectrumReport report = spectrum(arch, theta, data, tol.gamma_threshold_rel);
  return classify_repellence(arch, theta, data, report.zero_gamma, tol);
}

RepellenceVerdict classify_repellence(const Architecture& arch, std::span<const double> theta,
                                      const Dataset& data, const Subspace& zero_gamma,
                                      const RepellenceTolerances& tol) {
  RepellenceVerdict out;
  out.tolerances = tol;
  out.max_residual = max_abs_residual(arch, theta, data);
  if (out.max_residual > tol.zero_error)
    fail(ErrorKind::NotZeroError, "classify_repellence: max residual " +
                                      std::to_string(out.max_residual) + " exceeds " +
                                      std::to_string(tol.zero_error));
  const RegGradient rg = reg_gradient(arch, theta, data);
  if (!rg.excluded_points.empty())
    fail(ErrorKind::AtKink, "classify_repellence: a datapoint sits on a relu kink");

  const Vector v = project(rg.gradient, zero_gamma);
  out.zero_gamma_dim = zero_gamma.dim();
  out.total_grad_norm = norm(rg.gradient);
  out.projected_grad_norm = norm(v);
  if (out.projected_grad_norm <= tol.tol_abs + tol.tol_rel * out.total_grad_norm) {
    out.kind = Repellence::NonRepellent;
  } else {
    out.kind = Repellence::StronglyRepellent;
    out.descent_direction = scaled(v, -1.0 / out.projected_grad_norm);
  }
  return out;
}

DescentCheck descent_step_check(const Architecture& arch, std::span<const double> theta,
                                const Dataset& data, const RepellenceVerdict& verdict,
                                double step) {
  require(verdict.kind == Repellence::StronglyRepellent && verdict.descent_direction,
          ErrorKind::InvalidInput, "descent_step_check needs a strongly repellent verdict");
  Vector moved(theta.begin(), theta.end());
  axpy(step, *verdict.descent_direction, moved);
  DescentCheck out;
  out.delta_loss = loss(arch, moved, data) - loss(arch, theta, data);
  out.delta_reg = reg(arch, moved, data).r_sum - reg(arch, theta, data).r_sum;
  return out;
}

}  // namespace implreg
