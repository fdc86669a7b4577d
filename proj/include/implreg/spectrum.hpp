#pragma once

#include <optional>
#include <span>

#include "implreg/linalg.hpp"
#include "implreg/model.hpp"

namespace implreg {

/// Gram matrix (1/n) sum_i g_i g_i^T of the per-point parameter gradients,
/// its eigen-spectrum, and the subspace of (numerically) zero eigenvalues.
struct SpectrumReport {
  SymMatrix gram;
  Vector gammas;  // descending
  Matrix basis;   // column k pairs with gammas[k]
  Subspace zero_gamma;
  double gamma_threshold = 0.0;  // absolute cut actually applied

  std::size_t positive_count() const { return gammas.size() - zero_gamma.dim(); }
  bool is_zero_direction(std::size_t k) const { return gammas[k] <= gamma_threshold; }
};

inline constexpr double kDefaultGammaThresholdRel = 1e-8;

/// Directions with gamma <= gamma_threshold_rel * gamma_max form the zero
/// subspace; when gamma_max is 0 the absolute floor 1e-12 applies.
SpectrumReport spectrum(const Architecture& arch, std::span<const double> theta,
                        const Dataset& data,
                        double gamma_threshold_rel = kDefaultGammaThresholdRel);

/// Re-expresses `zero` so that its first basis vector is the normalized
/// projection of `direction` onto it (left unchanged when that projection
/// vanishes). The spanned subspace is the same.
Subspace align_basis(const Subspace& zero, std::span<const double> direction);

struct RepellenceTolerances {
  double zero_error = 1e-6;  // max |f(x_i) - y_i| accepted as zero training error
  double tol_abs = 1e-8;
  double tol_rel = 1e-6;
  double gamma_threshold_rel = kDefaultGammaThresholdRel;
};

enum class Repellence { NonRepellent, StronglyRepellent };

struct RepellenceVerdict {
  Repellence kind = Repellence::NonRepellent;
  double projected_grad_norm = 0.0;  // ||P_zero grad r_sum||
  double total_grad_norm = 0.0;      // ||grad r_sum||
  std::optional<Vector> descent_direction;  // -v/||v|| when strongly repellent
  double max_residual = 0.0;
  std::size_t zero_gamma_dim = 0;
  RepellenceTolerances tolerances;
};

/// Zero-error point classifier: v = P_zero(grad r_sum); non-repellent iff
/// ||v|| <= tol_abs + tol_rel * ||grad r_sum||. Throws NotZeroError when the
/// residual check fails.
RepellenceVerdict classify_repellence(const Architecture& arch, std::span<const double> theta,
                                      const Dataset& data,
                                      const RepellenceTolerances& tol = {});

/// Same, with the zero subspace supplied by the caller.
RepellenceVerdict classify_repellence(const Architecture& arch, std::span<const double> theta,
                                      const Dataset& data, const Subspace& zero_gamma,
                                      const RepellenceTolerances& tol = {});

struct DescentCheck {
  double delta_loss = 0.0;
  double delta_reg = 0.0;
};

/// Change in training loss and r_sum after theta + step * descent_direction.
DescentCheck descent_step_check(const Architecture& arch, std::span<const double> theta,
                                const Dataset& data, const RepellenceVerdict& verdict,
                                double step);

}  // namespace implreg
