#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <ebgevrey/fem_assembly.hpp>

using namespace ebgevrey;

namespace {

bool spd(const SparseMatrix& a) {
  Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(a)};
  return llt.info() == Eigen::Success;
}

double asym(const SparseMatrix& a) {
  const Eigen::MatrixXd d(a);
  return (d - d.transpose()).cwiseAbs().maxCoeff() / d.cwiseAbs().maxCoeff();
}

// Nodal interpolant of u with derivative du.
template <class F, class DF>
Eigen::VectorXd nodal_interp(const Mesh& m, F u, DF du) {
  Eigen::VectorXd a = Eigen::VectorXd::Zero(m.free_dofs);
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    if (m.dof_map[i][0] >= 0) a[m.dof_map[i][0]] = u(m.nodes[i]);
    if (m.dof_map[i][1] >= 0) a[m.dof_map[i][1]] = du(m.nodes[i]);
  }
  return a;
}

}  // namespace

TEST(FemAssembly, MeshHitsEveryBreakpoint) {
  const BeamConfig c;
  const Mesh m = build_mesh(c, {2, 3, 4, 5, 6});
  EXPECT_EQ(m.elements.size(), 20u);
  EXPECT_DOUBLE_EQ(m.x_xi1(), c.xi1);
  EXPECT_DOUBLE_EQ(m.x_ell0(), c.ell0);
  EXPECT_DOUBLE_EQ(m.x_xi2(), c.xi2);
  EXPECT_DOUBLE_EQ(m.x_ell1(), c.ell1);
  EXPECT_EQ(m.free_dofs, 2 * 21 - 4);
  EXPECT_EQ(m.tag(), "hermite3-2-3-4-5-6");
}

TEST(FemAssembly, MatricesSymmetricDefiniteAndBanded) {
  const BeamConfig c;
  const auto mats = assemble(build_mesh(c, 4), c);
  for (const SparseMatrix* a : {&mats.M, &mats.K, &mats.D}) {
    EXPECT_LT(asym(*a), 1e-15);
    EXPECT_LE(half_bandwidth(*a), 3);
  }
  EXPECT_TRUE(spd(mats.M));
  EXPECT_TRUE(spd(mats.K));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(mats.D)};
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-12 * es.eigenvalues().maxCoeff());
}

TEST(FemAssembly, ClampedStaticDeflectionIsNodallyExact) {
  // alpha u'''' = q, u = u' = 0 at both ends: u = q x^2 (l - x)^2 / (24 alpha)
  BeamConfig c;
  c.alpha1 = c.alpha2 = 2.5;
  const Mesh mesh = build_mesh(c, 3);
  const auto mats = assemble(mesh, c);
  const Eigen::VectorXd f = load_vector(mesh, {1, 1, 1, 1, 1});
  const Eigen::VectorXd a = Eigen::MatrixXd(mats.K).ldlt().solve(f);
  const double l = c.ell, al = c.alpha1;
  auto u = [&](double x) { return x * x * (l - x) * (l - x) / (24.0 * al); };
  auto du = [&](double x) { return (2 * x * (l - x) * (l - x) - 2 * x * x * (l - x)) / (24.0 * al); };
  const Eigen::VectorXd exact = nodal_interp(mesh, u, du);
  EXPECT_LT((a - exact).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(eval_vector(mesh, c.xi2, 0).dot(a), u(c.xi2), 1e-15);
  EXPECT_NEAR(eval_vector(mesh, 0.5, 1).dot(a), du(0.5), 1e-14);
}

TEST(FemAssembly, EnergyOfInterpolantConverges) {
  // u = x^2 (1 - x)^2: int u^2 = 1/630, int u''^2 = 4/5
  const BeamConfig c;
  auto u = [](double x) { return x * x * (1 - x) * (1 - x); };
  auto du = [](double x) { return 2 * x * (1 - x) * (1 - 2 * x); };
  std::vector<double> em, ek;
  for (int n : {4, 8, 16}) {
    const Mesh mesh = build_mesh(c, n);
    const auto mats = assemble(mesh, c);
    const Eigen::VectorXd a = nodal_interp(mesh, u, du);
    em.push_back(std::abs(a.dot(mats.M * a) - 1.0 / 630.0));
    ek.push_back(std::abs(a.dot(mats.K * a) - 0.8));
  }
  EXPECT_LT(em.back(), 1e-10);
  EXPECT_GT(em[1] / em[2], 14.0);
  EXPECT_LT(ek.back(), 1e-4);
  EXPECT_GT(ek[1] / ek[2], 3.5);
}

TEST(FemAssembly, GlobalViscosityIsScaledStiffnessPlusDampers) {
  BeamConfig c;
  c.extent = ViscousExtent::global;
  const Mesh mesh = build_mesh(c, 3);
  const auto mats = assemble(mesh, c);
  const Eigen::MatrixXd rest = Eigen::MatrixXd(mats.D) - c.alpha0 * Eigen::MatrixXd(mats.K);
  const int u1 = mesh.dof_map[mesh.marked_nodes[0]][0];
  const int u2 = mesh.dof_map[mesh.marked_nodes[2]][0];
  const int r2 = mesh.dof_map[mesh.marked_nodes[2]][1];
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(mats.size(), mats.size());
  expect(u1, u1) = c.gamma1;
  expect(u2, u2) = c.gamma2;
  expect(r2, r2) = c.gamma3;
  EXPECT_LT((rest - expect).cwiseAbs().maxCoeff(), 1e-14 * Eigen::MatrixXd(mats.K).cwiseAbs().maxCoeff());
}

TEST(FemAssembly, LocalViscosityOnlyInsideViscousPart) {
  const BeamConfig c;
  const Mesh mesh = build_mesh(c, 3);
  const auto mats = assemble(mesh, c);
  // a displacement confined to the first segment sees only the xi1 damper
  const Eigen::VectorXd a = Eigen::VectorXd::Unit(mats.size(), mesh.dof_map[1][0]);
  EXPECT_NEAR(a.dot(mats.D * a), 0.0, 1e-15);
  const Eigen::VectorXd b = Eigen::VectorXd::Unit(mats.size(), mesh.dof_map[mesh.marked_nodes[0]][0]);
  EXPECT_NEAR(b.dot(mats.D * b), c.gamma1, 1e-15);
}

TEST(FemAssembly, EnergyAndDissipation) {
  const BeamConfig c;
  const auto mats = assemble(build_mesh(c, 3), c);
  StateVector s = StateVector::zero(mats.size());
  s.u.setConstant(0.3);
  s.v.setLinSpaced(mats.size(), -1.0, 1.0);
  EXPECT_NEAR(energy(mats, s), 0.5 * (s.u.dot(mats.K * s.u) + s.v.dot(mats.M * s.v)), 1e-14);
  EXPECT_LE(dissipation_rate(mats, s), 0.0);
  EXPECT_THROW(energy(mats, StateVector::zero(3)), Error);
}
