#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "implreg/model.hpp"

namespace implreg {

struct Kink {
  std::size_t unit = 0;
  double intercept = 0.0;  // -b/a
  double slope_change = 0.0;  // c |a|, the jump in f' when crossing left to right
  bool convex() const { return slope_change > 0.0; }
};

/// Kinks of a 1-d relu net sorted by intercept; units with a == 0 or c == 0
/// are left out.
using KinkList = std::vector<Kink>;

KinkList extract_kinks(const Architecture& arch, std::span<const double> theta);

/// Arc length of f on [x_lo, x_hi]. f is piecewise linear, so a uniform grid
/// of `samples` points merged with the kink locations gives the exact value.
double curve_length(const Architecture& arch, std::span<const double> theta, double x_lo,
                    double x_hi, std::size_t samples = 1001);

/// sum_i sqrt(dx^2 + dy^2) over consecutive points (sorted by x).
double chord_sum(const Dataset& data);

enum class TripleShape { Convex, Concave, Collinear };

struct TripleCheck {
  std::size_t first = 0;  // triple (first, first+1, first+2)
  TripleShape data_shape = TripleShape::Collinear;
  int convex_kinks = 0;   // inside (x_first, x_first+2), after merging/filtering
  int concave_kinks = 0;
  double max_line_deviation = 0.0;  // collinear triples only
  bool pass = false;
};

struct CertificateOptions {
  double zero_error_tol = 1e-6;
  /// Merged kinks with |slope change| <= slope_tol_rel * (1 + max |chord slope|)
  /// are ignored.
  double slope_tol_rel = 1e-3;
  /// Collinear triples also need max |f - line| <= tol_line on the interval.
  double tol_line = 1e-3;
  double collinear_rel = 1e-9;
};

struct CertificateReport {
  std::vector<TripleCheck> triples;
  double slope_tol = 0.0;
  bool pass() const;
  std::size_t failures() const;
};

/// Compares the convexity of the model on each (x_i, x_{i+2}) with that of the
/// interpolating polyline: convex triples admit no concave kinks, concave
/// triples no convex ones, collinear triples not both and must stay on the
/// line. Needs sorted, strictly increasing 1-d data fitted to zero_error_tol
/// (else NotZeroError).
CertificateReport convexity_certificate(const Architecture& arch, std::span<const double> theta,
                                        const Dataset& data,
                                        const CertificateOptions& options = {});

struct PerturbationPlan {
  int case_id = 0;  // 1..4
  bool mirrored = false;  // convex kink left of the concave one
  std::size_t unit1 = 0;  // concave unit (c < 0)
  std::size_t unit2 = 0;  // convex unit (c > 0)
  double x0 = 0.0;
  double epsilon = 0.0;   // after auto-shrink
  int halvings = 0;
  double a1 = 0.0, b1 = 0.0, a2 = 0.0, b2 = 0.0;  // perturbed unit parameters
  double skip_da = 0.0, skip_db = 0.0;  // increments to the skip unit
};

/// Builds the case 1..4 perturbation for a concave unit1 (c1 < 0) and convex
/// unit2 (c2 > 0) whose kinks bracket x0 and at most that one datapoint.
/// Epsilon is halved (at most 40 times) until no other datapoint enters the
/// moved interval and no activation pattern at the data changes. Throws
/// NotApplicable when the configuration does not fit.
PerturbationPlan build_perturbation(const Architecture& arch, std::span<const double> theta,
                                    const Dataset& data, std::size_t unit1, std::size_t unit2,
                                    double x0, double epsilon);

ParamVector apply_perturbation(const Architecture& arch, std::span<const double> theta,
                               const PerturbationPlan& plan);

struct PerturbationCheck {
  double max_value_change = 0.0;  // max_j |f~ - f| / (1 + |f|)
  std::size_t worst_point = 0;
  double delta_reg = 0.0;   // r_sum(theta~) - r_sum(theta)
  double rate = 0.0;        // -delta_reg / epsilon
  double rate_half = 0.0;   // same at epsilon / 2
  bool values_preserved = false;
  bool strictly_decreasing = false;
  bool first_order = false;  // |rate_half / rate - 1| <= 0.1
  bool pass() const { return values_preserved && strictly_decreasing && first_order; }
};

PerturbationCheck verify_perturbation(const Architecture& arch, std::span<const double> theta,
                                      const PerturbationPlan& plan, const Dataset& data);

}  // namespace implreg
