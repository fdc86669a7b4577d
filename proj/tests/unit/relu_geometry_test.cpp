#include <gtest/gtest.h>

#include <random>

#include "implreg/errors.hpp"
#include "implreg/regularizer.hpp"
#include "implreg/relu_geometry.hpp"
#include "../support/relu_cases.hpp"
#include "../support/test_util.hpp"

using namespace implreg;

TEST(ReluGeometry, ExtractKinksExamples) {
  const Architecture a{1, 3, Activation::Relu, false};
  // unit 0: kink 0.5 convex; unit 1: c = 0 omitted; unit 2: a=-2, b=-1 -> kink -0.5, concave
  const Vector th{1.0, 1.0, -2.0, -0.5, 3.0, -1.0, 1.0, 0.0, -1.0};
  const KinkList k = extract_kinks(a, th);
  ASSERT_EQ(k.size(), 2u);
  EXPECT_EQ(k[0].unit, 2u);
  EXPECT_DOUBLE_EQ(k[0].intercept, -0.5);
  EXPECT_FALSE(k[0].convex());
  EXPECT_DOUBLE_EQ(k[0].slope_change, -2.0);
  EXPECT_EQ(k[1].unit, 0u);
  EXPECT_DOUBLE_EQ(k[1].intercept, 0.5);
  EXPECT_TRUE(k[1].convex());
  EXPECT_THROW(extract_kinks(Architecture{2, 1, Activation::Relu, false}, Vector(4, 0.0)), Error);
  EXPECT_THROW(extract_kinks(Architecture{1, 1, Activation::Tanh, false}, Vector(3, 0.0)), Error);
}

TEST(ReluGeometry, KinksMatchNumericRoots) {
  std::mt19937_64 gen(3);
  const Architecture a{1, 5, Activation::Relu, true};
  for (int trial = 0; trial < 20; ++trial) {
    const Vector th = testutil::random_vector(gen, a.param_count());
    for (const Kink& k : extract_kinks(a, th)) {
      // bisection on the unit pre-activation
      double lo = -1e3, hi = 1e3;
      auto z = [&](double x) { return unit_preactivation(a, th, Vector{x}, k.unit); };
      const double zlo = z(lo);
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (lo + hi);
        ((z(m) > 0) == (zlo > 0) ? lo : hi) = m;
      }
      EXPECT_NEAR(k.intercept, 0.5 * (lo + hi), 1e-9 * (1 + std::abs(k.intercept)));
      // slope jump of f across the kink
      const double h = 1e-6;
      auto f = [&](double x) { return forward(a, th, Vector{x}); };
      const double left = (f(k.intercept - h) - f(k.intercept - 2 * h)) / h;
      const double right = (f(k.intercept + 2 * h) - f(k.intercept + h)) / h;
      bool shared = false;
      for (const Kink& o : extract_kinks(a, th))
        shared |= o.unit != k.unit && std::abs(o.intercept - k.intercept) < 1e-4;
      if (!shared) EXPECT_NEAR(right - left, k.slope_change, 1e-5 * (1 + std::abs(k.slope_change)));
    }
  }
}

TEST(ReluGeometry, CurveLengthOfLines) {
  const Architecture a{1, 1, Activation::Relu, true};
  EXPECT_NEAR(curve_length(a, Vector{0, 0, 0, 0, 3.0}, 0.0, 1.0), 1.0, 1e-14);
  EXPECT_NEAR(curve_length(a, Vector{0, 0, 0, 1.0, 3.0}, 0.0, 1.0), std::sqrt(2.0), 1e-14);
  EXPECT_THROW(curve_length(a, Vector(5, 0.0), 1.0, 0.0), Error);
}

TEST(ReluGeometry, CurveLengthOfInterpolantIsChordSum) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 10; ++trial) {
    Dataset data;
    double x = 0.0;
    for (int i = 0; i < 8; ++i) {
      x += 0.1 + std::abs(testutil::random_vector(gen, 1)[0]);
      data.points.push_back({Vector{x}, testutil::random_vector(gen, 1)[0]});
    }
    Architecture a;
    const Vector th = testutil::interpolant(data, a);
    EXPECT_LE(max_abs_residual(a, th, data), 1e-12);
    const double chords = chord_sum(data);
    EXPECT_NEAR(curve_length(a, th, data[0].x[0], data[7].x[0], 7), chords, 1e-6 * chords);
    EXPECT_NEAR(curve_length(a, th, data[0].x[0], data[7].x[0], 2001), chords, 1e-6 * chords);
  }
}

namespace {

Dataset collinear_data() {
  // (0,0) (1,1) (2,2) collinear; convex bend at 3, concave at 4
  Dataset d;
  const double xs[6] = {0, 1, 2, 3, 4, 5};
  const double ys[6] = {0, 1, 2, 3, 5, 6};
  for (int i = 0; i < 6; ++i) d.points.push_back({Vector{xs[i]}, ys[i]});
  return d;
}

}  // namespace

TEST(ReluGeometry, CertificateOnInterpolant) {
  const Dataset data = collinear_data();
  Architecture a;
  const Vector th = testutil::interpolant(data, a);
  const CertificateReport r = convexity_certificate(a, th, data);
  ASSERT_EQ(r.triples.size(), 4u);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.triples[0].data_shape, TripleShape::Collinear);
  EXPECT_EQ(r.triples[1].data_shape, TripleShape::Collinear);
  EXPECT_EQ(r.triples[2].data_shape, TripleShape::Convex);
  EXPECT_EQ(r.triples[3].data_shape, TripleShape::Concave);
}

namespace {

// Interpolant plus a concave/convex pair between x=0.3 and x=0.7 that
// cancels beyond 0.7: a bump below the line that returns to it.
Vector with_kink_pair(const Dataset& data, Architecture& a) {
  Vector base = testutil::interpolant(data, a, 2);
  const std::size_t u1 = a.hidden_width - 2, u2 = a.hidden_width - 1;
  // -0.5 relu(x - 0.3) + 0.5 relu(x - 0.7) - 0.2 ... needs a third kink to
  // close; use a pair that shifts slope around x = 1 and back by x = 1.4
  base[a.w_index(u1)] = 1.0;
  base[a.b_index(u1)] = -1.2;
  base[a.c_index(u1)] = -0.5;
  base[a.w_index(u2)] = 1.0;
  base[a.b_index(u2)] = -1.4;
  base[a.c_index(u2)] = 0.5;
  return base;
}

}  // namespace

TEST(ReluGeometry, CertificateRejectsKinkPairBetweenCollinearPoints) {
  const Dataset data = collinear_data();
  Architecture a;
  Vector th = with_kink_pair(data, a);
  // the pair lowers f for x >= 1.4 by 0.1; refit the labels from x = 2 on by
  // shifting data instead: compensate with the skip slope beyond 2? Simpler:
  // use labels equal to the model.
  Dataset fitted = data;
  for (DataPoint& p : fitted.points) p.y = forward(a, th, p.x);
  const CertificateReport r = convexity_certificate(a, th, fitted, CertificateOptions{});
  // triple (0,1,2) is no longer collinear, triple (1,2,3) holds both kinds
  bool some_fail = false;
  for (const TripleCheck& t : r.triples)
    if (t.first <= 1 && t.convex_kinks > 0 && t.concave_kinks > 0) some_fail |= !t.pass;
  EXPECT_TRUE(some_fail);
  EXPECT_FALSE(r.pass());
}

TEST(ReluGeometry, CertificateNeedsZeroErrorAndSortedData) {
  const Dataset data = collinear_data();
  Architecture a;
  Vector th = testutil::interpolant(data, a);
  th[a.skip_b_index()] += 0.01;
  try {
    convexity_certificate(a, th, data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotZeroError);
  }
  Dataset unsorted = data;
  std::swap(unsorted.points[0], unsorted.points[1]);
  EXPECT_THROW(convexity_certificate(a, testutil::interpolant(data, a), unsorted), Error);
}

TEST(ReluGeometry, CaseOneExample) {
  const Architecture a{1, 2, Activation::Relu, true};
  const Vector th{1.0, 1.0, -0.5, -1.5, -1.0, 1.0, 0.0, 0.0};
  Dataset data;
  for (double x : {0.0, 1.0, 2.5}) data.points.push_back({Vector{x}, forward(a, th, Vector{x})});
  const PerturbationPlan p = build_perturbation(a, th, data, 0, 1, 1.0, 0.01);
  EXPECT_EQ(p.case_id, 1);
  EXPECT_FALSE(p.mirrored);
  EXPECT_EQ(p.halvings, 0);
  EXPECT_NEAR(p.a1, 0.99, 1e-15);
  EXPECT_NEAR(p.b1, -0.49, 1e-15);
  EXPECT_NEAR(p.a2, 0.99, 1e-15);
  EXPECT_NEAR(p.b2, -1.49, 1e-15);
  EXPECT_EQ(p.skip_da, 0.0);
  const PerturbationCheck c = verify_perturbation(a, th, p, data);
  EXPECT_LE(c.max_value_change, 1e-12);
  EXPECT_LT(c.delta_reg, 0.0);
  EXPECT_TRUE(c.pass());
}

TEST(ReluGeometry, ZeroEpsilonIsIdentity) {
  const Architecture a{1, 2, Activation::Relu, true};
  const Vector th{1.0, 1.0, -0.5, -1.5, -1.0, 1.0, 0.0, 0.0};
  Dataset data;
  for (double x : {0.0, 1.0, 2.5}) data.points.push_back({Vector{x}, forward(a, th, Vector{x})});
  const PerturbationPlan p = build_perturbation(a, th, data, 0, 1, 1.0, 0.0);
  EXPECT_EQ(apply_perturbation(a, th, p), th);
  const PerturbationCheck c = verify_perturbation(a, th, p, data);
  EXPECT_EQ(c.max_value_change, 0.0);
  EXPECT_EQ(c.delta_reg, 0.0);
}

TEST(ReluGeometry, CaseFourFormulas) {
  std::mt19937_64 gen(2);
  const testutil::ReluCase rc = testutil::make_relu_case(gen, 4, false);
  const PerturbationPlan p = build_perturbation(rc.arch, rc.theta, rc.data, 0, 1, rc.x0, 0.01);
  ASSERT_EQ(p.case_id, 4);
  const double a1 = rc.theta[rc.arch.w_index(0)], b1 = rc.theta[rc.arch.b_index(0)];
  const double a2 = rc.theta[rc.arch.w_index(1)], b2 = rc.theta[rc.arch.b_index(1)];
  const double c1 = rc.theta[rc.arch.c_index(0)], c2 = rc.theta[rc.arch.c_index(1)];
  const double e = p.epsilon;
  EXPECT_NEAR(p.a2, a2 * (1 - e), 1e-15);
  EXPECT_NEAR(p.b2, b2 + rc.x0 * a2 * e, 1e-15);
  EXPECT_NEAR(p.a1, a1 - c2 / c1 * (p.a2 - a2), 1e-14);
  EXPECT_NEAR(p.b1, b1 - c2 / c1 * (p.b2 - b2), 1e-14);
}

TEST(ReluGeometry, CasesTwoThreeMoveSkipUnit) {
  std::mt19937_64 gen(5);
  for (int cid : {2, 3}) {
    const testutil::ReluCase rc = testutil::make_relu_case(gen, cid, false);
    const PerturbationPlan p = build_perturbation(rc.arch, rc.theta, rc.data, 0, 1, rc.x0, 0.01);
    ASSERT_EQ(p.case_id, cid);
    const double a1 = rc.theta[rc.arch.w_index(0)], b1 = rc.theta[rc.arch.b_index(0)];
    const double c1 = rc.theta[rc.arch.c_index(0)];
    EXPECT_NEAR(p.skip_da, -c1 * (p.a1 - a1), 1e-15);
    EXPECT_NEAR(p.skip_db, -c1 * (p.b1 - b1), 1e-15);
    Architecture no_skip = rc.arch;
    no_skip.skip_linear_and_bias = false;
    Vector trimmed(rc.theta.begin(), rc.theta.begin() + static_cast<long>(no_skip.param_count()));
    try {
      build_perturbation(no_skip, trimmed, rc.data, 0, 1, rc.x0, 0.01);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::NotApplicable);
    }
  }
}

TEST(ReluGeometry, PreconditionViolations) {
  std::mt19937_64 gen(6);
  const testutil::ReluCase rc = testutil::make_relu_case(gen, 1, false);
  auto kind_of = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidInput;
  };
  // swapped roles: unit 1 is convex
  EXPECT_EQ(kind_of([&] { build_perturbation(rc.arch, rc.theta, rc.data, 1, 0, rc.x0, 0.01); }),
            ErrorKind::NotApplicable);
  // x0 outside the kinks
  EXPECT_EQ(kind_of([&] { build_perturbation(rc.arch, rc.theta, rc.data, 0, 1, rc.x0 + 5.0, 0.01); }),
            ErrorKind::NotApplicable);
  // a second datapoint between the kinks
  Dataset crowded = rc.data;
  const double x_extra = rc.x0 + 1e-3;
  crowded.points.push_back({Vector{x_extra}, forward(rc.arch, rc.theta, Vector{x_extra})});
  EXPECT_EQ(kind_of([&] { build_perturbation(rc.arch, rc.theta, crowded, 0, 1, rc.x0, 0.01); }),
            ErrorKind::NotApplicable);
}

class PerturbationSweep : public ::testing::TestWithParam<int> {};

TEST_P(PerturbationSweep, RandomConfigsPass) {
  const int cid = GetParam();
  std::mt19937_64 gen(1000 + cid);
  for (int trial = 0; trial < 200; ++trial) {
    const bool mirrored = trial % 2 == 1;
    const testutil::ReluCase rc = testutil::make_relu_case(gen, cid, mirrored);
    const PerturbationPlan p = build_perturbation(rc.arch, rc.theta, rc.data, 0, 1, rc.x0, 1e-3);
    EXPECT_EQ(p.case_id, cid);
    EXPECT_EQ(p.mirrored, mirrored);
    const PerturbationCheck c = verify_perturbation(rc.arch, rc.theta, p, rc.data);
    EXPECT_TRUE(c.values_preserved) << c.max_value_change;
    EXPECT_TRUE(c.strictly_decreasing) << c.delta_reg;
    EXPECT_TRUE(c.first_order) << c.rate << " " << c.rate_half;
  }
}

INSTANTIATE_TEST_SUITE_P(Cases, PerturbationSweep, ::testing::Values(1, 2, 3, 4));

TEST(ReluGeometry, EpsilonShrinksWhenTooLarge) {
  std::mt19937_64 gen(8);
  const testutil::ReluCase rc = testutil::make_relu_case(gen, 1, false);
  const PerturbationPlan p = build_perturbation(rc.arch, rc.theta, rc.data, 0, 1, rc.x0, 0.9);
  EXPECT_GT(p.halvings, 0);
  EXPECT_TRUE(verify_perturbation(rc.arch, rc.theta, p, rc.data).values_preserved);
}

TEST(ReluGeometry, CertificateAndWitnessAgree) {
  // A model with an up/down pair between collinear points fails the
  // certificate and admits a perturbation witness there; the interpolant
  // passes and has no opposite-convexity pair inside any collinear triple.
  Dataset data;
  for (double x : {0.0, 1.0, 2.0, 3.0}) data.points.push_back({Vector{x}, 0.5 * x});
  const Architecture a{1, 2, Activation::Relu, true};
  // concave kink at 0.5, convex kink at 1.5, slopes cancel beyond 1.5 only
  // if the bump is compensated: f = 0.5 x - (relu(x-0.5) - relu(x-1.5)) + ...
  // choose labels equal to the model instead, keeping points 1 and 2 collinear
  Vector th{1.0, 1.0, -0.5, -1.5, -1.0, 1.0, 0.5, 0.0};
  Dataset fitted;
  for (const DataPoint& p : data.points) fitted.points.push_back({p.x, forward(a, th, p.x)});
  const CertificateReport r = convexity_certificate(a, th, fitted);
  EXPECT_FALSE(r.pass());
  const PerturbationPlan plan = build_perturbation(a, th, fitted, 0, 1, 1.0, 0.01);
  EXPECT_TRUE(verify_perturbation(a, th, plan, fitted).pass());

  Architecture ia;
  const Vector ith = testutil::interpolant(data, ia);
  const CertificateReport ok = convexity_certificate(ia, ith, data);
  EXPECT_TRUE(ok.pass());
  for (const TripleCheck& t : ok.triples)
    if (t.data_shape == TripleShape::Collinear) EXPECT_EQ(t.convex_kinks + t.concave_kinks, 0);
}
