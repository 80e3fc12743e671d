#include <gtest/gtest.h>

#include <random>

#include <Eigen/Dense>

#include <ebgevrey/acceptance.hpp>
#include <ebgevrey/spectrum.hpp>

using namespace ebgevrey;

namespace {

ComplexState random_complex(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  ComplexState s = ComplexState::zero(n);
  for (int i = 0; i < n; ++i) s.u[i] = Complex(d(rng), d(rng)), s.v[i] = Complex(d(rng), d(rng));
  return s;
}

// Plain dense generator [[0, I], [-M^{-1} K, -M^{-1} D]].
Eigen::MatrixXd dense_generator(const SystemMatrices& mats) {
  const int n = mats.size();
  const Eigen::MatrixXd M(mats.M), K(mats.K), D(mats.D);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  a.topRightCorner(n, n).setIdentity();
  a.bottomLeftCorner(n, n) = -M.ldlt().solve(K);
  a.bottomRightCorner(n, n) = -M.ldlt().solve(D);
  return a;
}

}  // namespace

TEST(Spectrum, OperatorSolvesSecondOrderSystem) {
  const BeamConfig c;
  const auto mats = assemble(build_mesh(c, 3), c);
  std::mt19937_64 rng(1);
  const ComplexState s = random_complex(mats.size(), rng);
  const ComplexState a = FirstOrderOperator(mats).apply(s);
  EXPECT_EQ((a.u - s.v).norm(), 0.0);
  const Eigen::VectorXcd r = mats.M * a.v + mats.K * s.u + mats.D * s.v;
  EXPECT_LT(r.norm(), 1e-13 * (mats.K * s.u).norm());
}

TEST(Spectrum, AdjointInEnergyProduct) {
  const BeamConfig c;
  const auto mats = assemble(build_mesh(c, 4), c);
  const FirstOrderOperator op(mats);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 5; ++t) {
    const ComplexState x = random_complex(mats.size(), rng), y = random_complex(mats.size(), rng);
    const ComplexState ax = op.apply(x), ay = op.apply_adjoint(y);
    const Complex lhs = g_inner(mats, y, ax), rhs = g_inner(mats, ay, x);
    EXPECT_LT(std::abs(lhs - rhs), 1e-12 * g_norm(mats, ax) * g_norm(mats, y));
  }
}

TEST(Spectrum, DissipationIdentity) {
  const BeamConfig c;
  const auto mats = assemble(build_mesh(c, 5), c);
  std::mt19937_64 rng(3);
  const ComplexState s = random_complex(mats.size(), rng);
  const double lhs = std::real(g_inner(mats, s, FirstOrderOperator(mats).apply(s)));
  const double vdv = std::real(s.v.dot(mats.D * s.v));
  EXPECT_LT(std::abs(lhs + vdv), 1e-12 * std::abs(vdv) + 1e-12 * g_norm(mats, s) * g_norm(mats, s));
  EXPECT_LT(lhs, 0.0);
}

TEST(Spectrum, MatchesPlainDenseEigensolve) {
  const BeamConfig c;
  const auto mats = assemble(build_mesh(c, 2), c);
  const EigenResult r = eigen_dense(mats);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ref(dense_generator(mats).cast<Complex>());
  ASSERT_EQ(r.size(), static_cast<std::size_t>(ref.eigenvalues().size()));
  for (const Complex z : r.eigenvalues) {
    double best = 1e300;
    for (Eigen::Index j = 0; j < ref.eigenvalues().size(); ++j) best = std::min(best, std::abs(ref.eigenvalues()[j] - z));
    EXPECT_LT(best, 1e-8 * std::abs(z));
  }
}

TEST(Spectrum, ConjugateSymmetricCertifiedAndStable) {
  const BeamConfig c;
  const EigenResult r = eigen_dense(assemble(build_mesh(c, 8), c));
  EXPECT_EQ(r.certified_count(), r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_LT(r.eigenvalues[i].real(), 0.0);
    EXPECT_LE(r.residuals[i], kCertifyTolerance);
    double best = 1e300;
    for (const Complex w : r.eigenvalues) best = std::min(best, std::abs(w - std::conj(r.eigenvalues[i])));
    EXPECT_LT(best, 1e-9 * std::abs(r.eigenvalues[i]));
  }
  EXPECT_DOUBLE_EQ(r.abscissa, spectral_abscissa(r));
}

TEST(Spectrum, ResidualOfEigenpair) {
  const BeamConfig c;
  const auto mats = assemble(build_mesh(c, 4), c);
  const EigenResult r = eigen_dense(mats);
  for (std::size_t i = 0; i < r.size(); i += 7) EXPECT_NEAR(residual(mats, r.eigenvalues[i], r.eigenvectors[i]), r.residuals[i], 1e-12);
  EXPECT_GT(residual(mats, r.eigenvalues[0] + 1.0, r.eigenvectors[0]), 1e-6);
}

TEST(Spectrum, UndampedFrequenciesConvergeToClampedBeam) {
  const BeamConfig u = undamped_config();
  const auto modes = oscillatory_modes(eigen_dense(assemble(build_mesh(u, 16), u)), 3);
  for (int j = 0; j < 3; ++j) {
    const double b = acceptance::clamped_beta(j + 1);
    EXPECT_NEAR(modes[j].imag(), b * b, 1e-5 * b * b);
    EXPECT_LT(std::abs(modes[j].real()), 1e-9 * b * b);
  }
}

TEST(Spectrum, ClampedBetaRoots) {
  EXPECT_NEAR(acceptance::clamped_beta(1), 4.730040744862704, 1e-12);
  EXPECT_NEAR(acceptance::clamped_beta(2), 7.853204624095838, 1e-12);
  for (int j = 1; j <= 8; ++j) {
    const double b = acceptance::clamped_beta(j);
    EXPECT_LT(std::abs(std::cos(b) * std::cosh(b) - 1.0), 1e-10 * std::cosh(b));
  }
}

TEST(Spectrum, OscillatoryModesSortedAndPositive) {
  const BeamConfig c;
  const auto modes = oscillatory_modes(eigen_dense(assemble(build_mesh(c, 6), c)), 10);
  ASSERT_EQ(modes.size(), 10u);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    EXPECT_GT(modes[i].imag(), 0.0);
    if (i) EXPECT_GT(modes[i].imag(), modes[i - 1].imag());
  }
}

TEST(Spectrum, ResolvedAbscissaIsMeshStable) {
  const BeamConfig c;
  const AbscissaEstimate a = abscissa_study(c, 4), b = abscissa_study(c, 8);
  EXPECT_LT(a.resolved, 0.0);
  EXPECT_NEAR(a.resolved, b.resolved, 1e-3 * std::abs(b.resolved));
  EXPECT_GE(a.value, a.resolved);
}

TEST(Spectrum, EnergyCoordinatesPreserveNorm) {
  const BeamConfig c;
  const auto mats = assemble(build_mesh(c, 3), c);
  const EnergyCoordinates ec = energy_coordinates(mats);
  std::mt19937_64 rng(4);
  const ComplexState s = random_complex(mats.size(), rng);
  const int n = mats.size();
  Eigen::VectorXcd y(2 * n);
  y.head(n) = ec.Lk.transpose().cast<Complex>() * s.u;
  y.tail(n) = ec.Lm.transpose().cast<Complex>() * s.v;
  EXPECT_NEAR(y.norm(), g_norm(mats, s), 1e-12 * y.norm());
  EXPECT_LT((ec.to_u(y.head(n)) - s.u).norm(), 1e-10 * s.u.norm());
}
