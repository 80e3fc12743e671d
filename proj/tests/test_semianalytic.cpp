#include <gtest/gtest.h>

#include <ebgevrey/resolvent.hpp>
#include <ebgevrey/semianalytic.hpp>
#include <ebgevrey/spectrum.hpp>

using namespace ebgevrey;

namespace {

void expect_solves_ode(const SegmentBasis& b, const Segment& s) {
  for (double x : {s.a, 0.5 * (s.a + s.b), s.b}) {
    const auto v0 = b.eval(x, 0), v4 = b.eval(x, 4);
    for (int m = 0; m < 4; ++m) {
      const Complex r = b.a * v4[m] + b.lambda * b.lambda * s.rho * v0[m];
      EXPECT_LT(std::abs(r), 1e-9 * (std::abs(b.a * v4[m]) + std::abs(b.lambda * b.lambda * s.rho * v0[m]) + 1e-300));
    }
  }
}

}  // namespace

TEST(Semianalytic, BasisSolvesSegmentEquation) {
  const BeamConfig c;
  const auto segs = segments(c);
  for (Complex lam : {Complex(-6.0, 27.8), Complex(0.0, 1e3), Complex(-2.0, -400.0)}) {
    for (const auto& s : segs) {
      const SegmentBasis b = segment_basis(lam, s);
      if (std::abs(lam) > 500.0) EXPECT_FALSE(b.series);
      expect_solves_ode(b, s);
    }
  }
}

TEST(Semianalytic, SeriesBasisSolvesSegmentEquationAndStartsAtIdentity) {
  const BeamConfig c;
  const auto segs = segments(c);
  const SegmentBasis b = segment_basis(Complex(0.5, 2.0), segs[1]);
  ASSERT_TRUE(b.series);
  expect_solves_ode(b, segs[1]);
  for (int j = 0; j < 4; ++j) {
    const auto v = b.eval(b.xa, j);
    for (int m = 0; m < 4; ++m) EXPECT_NEAR(std::abs(v[m] - Complex(j == m ? 1.0 : 0.0)), 0.0, 1e-15);
  }
}

TEST(Semianalytic, DerivativesAreConsistent) {
  const BeamConfig c;
  const auto segs = segments(c);
  for (Complex lam : {Complex(0.3, 1.0), Complex(-6.0, 27.8)}) {
    const SegmentBasis b = segment_basis(lam, segs[2]);
    const double x = 0.5 * (segs[2].a + segs[2].b), h = 1e-5;
    for (int order = 0; order < 3; ++order) {
      const auto lo = b.eval(x - h, order), hi = b.eval(x + h, order), d = b.eval(x, order + 1);
      for (int m = 0; m < 4; ++m) EXPECT_LT(std::abs((hi[m] - lo[m]) / (2 * h) - d[m]), 1e-6 * (1 + std::abs(d[m])));
    }
  }
}

TEST(Semianalytic, DegenerateCoefficientThrows) {
  const BeamConfig c;
  try {
    characteristic_system(Complex(-c.alpha2 / c.alpha0, 0.0), c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_coefficient);
  }
}

TEST(Semianalytic, DeterminantIsContinuousAcrossBasisSwitch) {
  // the series/exponential switch of a segment must not move the analytic determinant
  const BeamConfig c;
  const auto segs = segments(c);
  const double kl = kSeriesThreshold / segs[0].length();
  const double lam = kl * kl;  // |k| = sqrt(lambda) for the undamped first segment
  const Complex a = log_characteristic_determinant(Complex(0.0, lam * (1 - 1e-9)), c);
  const Complex b = log_characteristic_determinant(Complex(0.0, lam * (1 + 1e-9)), c);
  EXPECT_LT(std::abs(a.real() - b.real()), 1e-6);
  EXPECT_LT(std::abs(std::remainder(a.imag() - b.imag(), 2 * std::numbers::pi)), 1e-6);
}

TEST(Semianalytic, RootsAgreeWithFem) {
  const BeamConfig c;
  const auto modes = oscillatory_modes(eigen_dense(assemble(build_mesh(c, 16), c)), 4);
  for (const Complex z : modes) {
    const RefinedRoot r = refine_root(z, c);
    EXPECT_LT(std::abs(r.lambda - z), 1e-4 * std::abs(z));
    EXPECT_LT(r.abs_det, 1e-8);
  }
}

TEST(Semianalytic, RootsComeInConjugatePairs) {
  const BeamConfig c;
  const RefinedRoot a = refine_root(Complex(-6.0, 27.8), c);
  const RefinedRoot b = refine_root(Complex(-6.0, -27.8), c);
  EXPECT_LT(std::abs(a.lambda - std::conj(b.lambda)), 1e-9 * std::abs(a.lambda));
  EXPECT_NEAR(a.lambda.real(), -5.9783, 1e-3);
}

TEST(Semianalytic, CountsAreAdditive) {
  const BeamConfig c;
  const RootCount whole = count_roots({-7.0, -5.0, -30.0, 30.0}, c);
  const RootCount top = count_roots({-7.0, -5.0, 1.0, 30.0}, c);
  const RootCount bottom = count_roots({-7.0, -5.0, -30.0, 1.0}, c);
  EXPECT_EQ(whole.count, 2);
  EXPECT_EQ(top.count, 1);
  EXPECT_EQ(top.count + bottom.count, whole.count);
  EXPECT_NEAR(whole.winding, 2.0, 1e-6);
}

TEST(Semianalytic, NoRootsInRightHalfPlane) {
  const BeamConfig c;
  EXPECT_EQ(count_roots({0.0, 10.0, -1e3, 1e3}, c).count, 0);
}

TEST(Semianalytic, UndampedRootsOnImaginaryAxis) {
  const BeamConfig u = undamped_config();
  const RefinedRoot r = refine_root(Complex(0.0, 22.0), u);
  EXPECT_LT(std::abs(r.lambda.real()), 1e-8);
  EXPECT_NEAR(r.lambda.imag(), 4.730040744862704 * 4.730040744862704, 1e-7);
}

TEST(Semianalytic, OracleSatisfiesBoundaryAndInterfaceConditions) {
  const BeamConfig c;
  const OracleSolution o = oracle_resolvent(300.0, {0.0, 0.0, 1.0, 0.0, 0.0}, c);
  const double s = std::abs(o.u(2, 0.5 * (c.ell0 + c.xi2)));
  EXPECT_LT(std::abs(o.u(0, 0.0)), 1e-12 * s);
  EXPECT_LT(std::abs(o.u(0, 0.0, 1)), 1e-10 * s);
  EXPECT_LT(std::abs(o.u(4, c.ell)), 1e-12 * s);
  const auto bp = breakpoints(c);
  for (int p = 1; p < 5; ++p) {
    EXPECT_LT(std::abs(o.u(p - 1, bp[p]) - o.u(p, bp[p])), 1e-10 * s);
    EXPECT_LT(std::abs(o.u(p - 1, bp[p], 1) - o.u(p, bp[p], 1)), 1e-8 * s * 300.0);
  }
}

TEST(Semianalytic, OracleIsLinear) {
  const BeamConfig c;
  EXPECT_EQ(oracle_resolvent(500.0, {0, 0, 0, 0, 0}, c).h_norm, 0.0);
  const double a = oracle_resolvent(500.0, {0, 1, 0, 0, 0}, c).h_norm;
  EXPECT_NEAR(oracle_resolvent(500.0, {0, 3, 0, 0, 0}, c).h_norm, 3 * a, 1e-12 * a);
  EXPECT_THROW(oracle_resolvent(0.0, {0, 1, 0, 0, 0}, c), Error);
}

TEST(Semianalytic, OracleMatchesFemResolvent) {
  const BeamConfig c;
  const std::array<double, 5> f = {0.0, 1.0, 0.0, 2.0, 0.0};
  const double lam = 200.0;
  const OracleSolution o = oracle_resolvent(lam, f, c);
  const Mesh mesh = build_mesh(c, 40);
  const SystemMatrices mats = assemble(mesh, c);
  ComplexState rhs = ComplexState::zero(mats.size());
  rhs.v = BandedCholesky(mats.M).solve<double>(load_vector(mesh, f)).cast<Complex>();
  const double fem = g_norm(mats, resolvent_solve(mats, lam, rhs));
  EXPECT_NEAR(fem, o.h_norm, 1e-6 * o.h_norm);
}
