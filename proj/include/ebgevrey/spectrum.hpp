#pragma once

// Damped spectrum of the discrete generator, i.e. the roots of the quadratic
// pencil P(lambda) = lambda^2 M + lambda D + K.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "banded.hpp"
#include "errors.hpp"
#include "fem_assembly.hpp"

namespace ebgevrey {

/// First-order form U_t = A_h U with A_h (u, v) = (v, -M^{-1}(K u + D v)).
class FirstOrderOperator {
 public:
  explicit FirstOrderOperator(const SystemMatrices& mats) : mats_(&mats) {
    try {
      mass_.compute(mats.M);
    } catch (const Error&) {
      throw Error(ErrorCode::factorization_failure, "mass matrix is not numerically SPD");
    }
  }

  const SystemMatrices& matrices() const { return *mats_; }

  template <class Scalar>
  BasicState<Scalar> apply(const BasicState<Scalar>& s) const {
    check_dims(*mats_, s.size());
    Vec<Scalar> rhs = mats_->K * s.u + mats_->D * s.v;
    return {s.v, -mass_solve(rhs)};
  }

  /// G-adjoint: A_h^dagger (u, v) = (-v, M^{-1}(K u - D v)).
  template <class Scalar>
  BasicState<Scalar> apply_adjoint(const BasicState<Scalar>& s) const {
    check_dims(*mats_, s.size());
    Vec<Scalar> rhs = mats_->K * s.u - mats_->D * s.v;
    return {-s.v, mass_solve(rhs)};
  }

  template <class Scalar>
  Vec<Scalar> mass_solve(const Vec<Scalar>& b) const {
    // one step of iterative refinement keeps the G-identities at roundoff level
    Vec<Scalar> x = mass_.solve<Scalar>(b);
    const Vec<Scalar> r = b - mats_->M * x;
    return x + mass_.solve<Scalar>(r);
  }

 private:
  const SystemMatrices* mats_;
  BandedCholesky mass_;
};

inline FirstOrderOperator linearize(const SystemMatrices& mats) { return FirstOrderOperator(mats); }

/// Dense generator in energy-orthonormal coordinates y = (Lk^T u, Lm^T v),
/// where K = Lk Lk^T and M = Lm Lm^T. In these coordinates the G-norm is the
/// Euclidean norm and the matrix reads [[0, B^T], [-B, -C]].
struct EnergyCoordinates {
  Eigen::MatrixXd Lk;
  Eigen::MatrixXd Lm;
  Eigen::MatrixXd A;

  Eigen::VectorXcd to_u(const Eigen::VectorXcd& y1) const {
    const Eigen::MatrixXcd lt = Lk.transpose().cast<Complex>();
    return lt.triangularView<Eigen::Upper>().solve(y1);
  }
};

inline EnergyCoordinates energy_coordinates(const SystemMatrices& mats) {
  const int n = mats.size();
  const Eigen::MatrixXd K = Eigen::MatrixXd(mats.K);
  const Eigen::MatrixXd M = Eigen::MatrixXd(mats.M);
  const Eigen::MatrixXd D = Eigen::MatrixXd(mats.D);
  Eigen::LLT<Eigen::MatrixXd> lk(K), lm(M);
  if (lk.info() != Eigen::Success || lm.info() != Eigen::Success)
    throw Error(ErrorCode::cholesky_failure, "energy Gram matrix is not SPD");
  EnergyCoordinates ec;
  ec.Lk = lk.matrixL();
  ec.Lm = lm.matrixL();
  const Eigen::MatrixXd B = ec.Lm.triangularView<Eigen::Lower>().solve(ec.Lk);
  Eigen::MatrixXd C = ec.Lm.triangularView<Eigen::Lower>().solve(D);
  C = ec.Lm.triangularView<Eigen::Lower>().solve(C.transpose().eval());
  C = 0.5 * (C + C.transpose()).eval();
  ec.A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  ec.A.topRightCorner(n, n) = B.transpose();
  ec.A.bottomLeftCorner(n, n) = -B;
  ec.A.bottomRightCorner(n, n) = -C;
  return ec;
}

inline constexpr double kCertifyTolerance = 1e-8;

struct EigenResult {
  std::vector<Complex> eigenvalues;
  std::vector<Eigen::VectorXcd> eigenvectors;  // displacement part u
  std::vector<double> residuals;
  std::vector<bool> certified;
  double abscissa = -std::numeric_limits<double>::infinity();

  std::size_t size() const { return eigenvalues.size(); }
  std::size_t certified_count() const { return std::count(certified.begin(), certified.end(), true); }
};

/// ||P(lambda) u|| / (|lambda|^2 ||M u|| + |lambda| ||D u|| + ||K u||).
inline double residual(const SystemMatrices& mats, Complex lambda, const Eigen::VectorXcd& u) {
  check_dims(mats, static_cast<int>(u.size()));
  if (u.norm() == 0.0) throw Error(ErrorCode::zero_vector, "residual of the zero vector");
  const Eigen::VectorXcd mu = mats.M * u, du = mats.D * u, ku = mats.K * u;
  const Eigen::VectorXcd r = lambda * lambda * mu + lambda * du + ku;
  const double scale = std::norm(lambda) * mu.norm() + std::abs(lambda) * du.norm() + ku.norm();
  return r.norm() / scale;
}

/// Maximum real part over certified pairs.
inline double spectral_abscissa(const EigenResult& r) {
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!r.certified[i]) continue;
    any = true;
    best = std::max(best, r.eigenvalues[i].real());
  }
  if (!any) throw Error(ErrorCode::no_certified_pairs, "no eigenpair passed certification");
  return best;
}

/// All 2n eigenvalues of the linearized pencil via dense Hessenberg-QR.
inline EigenResult eigen_dense(const SystemMatrices& mats, double certify_tol = kCertifyTolerance) {
  const int n = mats.size();
  if (2 * n > 4096) throw Error(ErrorCode::invalid_argument, "dense eigensolve limited to 2n <= 4096");
  const EnergyCoordinates ec = energy_coordinates(mats);
  Eigen::EigenSolver<Eigen::MatrixXd> es(ec.A, true);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::qr_no_convergence, "Hessenberg QR did not converge");
  const Eigen::VectorXcd vals = es.eigenvalues();
  const Eigen::MatrixXcd vecs = es.eigenvectors();

  std::vector<int> order(2 * n);
  for (int i = 0; i < 2 * n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (vals[a].imag() != vals[b].imag()) return vals[a].imag() < vals[b].imag();
    return vals[a].real() < vals[b].real();
  });

  EigenResult out;
  for (int idx : order) {
    const Complex lam = vals[idx];
    Eigen::VectorXcd u = ec.to_u(vecs.col(idx).head(n));
    if (!(u.norm() > 0.0)) {
      // y1 vanishes only for lambda = 0; fall back on v = lambda u
      const Eigen::MatrixXcd lt = ec.Lm.transpose().cast<Complex>();
      u = lt.triangularView<Eigen::Upper>().solve(vecs.col(idx).tail(n));
    }
    u /= u.norm();
    // inverse iteration on the band pencil removes the error amplified by the
    // triangular back-substitution
    double res = residual(mats, lam, u);
    if (res > 1e-13) {
      const BandedLU lu({{Complex(1.0), &mats.K}, {lam, &mats.D}, {lam * lam, &mats.M}});
      for (int it = 0; it < 2 && !lu.exactly_singular(); ++it) {
        Eigen::VectorXcd w = lu.solve(u);
        if (!w.allFinite() || w.norm() == 0.0) break;
        w /= w.norm();
        const double r2 = residual(mats, lam, w);
        if (!(r2 < res)) break;
        u = std::move(w);
        res = r2;
      }
    }
    out.eigenvalues.push_back(lam);
    out.eigenvectors.push_back(std::move(u));
    out.residuals.push_back(res);
    out.certified.push_back(res <= certify_tol);
  }
  if (out.certified_count() > 0) out.abscissa = spectral_abscissa(out);
  return out;
}

/// Certified eigenvalues with Im > 1e-6 |lambda|, ordered by imaginary part.
/// The threshold keeps members of the real cluster, whose imaginary parts are
/// pure roundoff, out of the list.
inline std::vector<Complex> oscillatory_modes(const EigenResult& r, std::size_t count) {
  std::vector<Complex> out;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r.certified[i] && r.eigenvalues[i].imag() > 1e-6 * std::abs(r.eigenvalues[i])) out.push_back(r.eigenvalues[i]);
  std::sort(out.begin(), out.end(), [](Complex a, Complex b) { return a.imag() < b.imag(); });
  if (out.size() > count) out.resize(count);
  return out;
}

/// Undamped natural frequencies from K x = w^2 M x, ascending.
inline Eigen::VectorXd undamped_frequencies(const SystemMatrices& mats) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(mats.K), Eigen::MatrixXd(mats.M));
  if (es.info() != Eigen::Success) throw Error(ErrorCode::qr_no_convergence, "symmetric eigensolve failed");
  return es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
}

/// Spectral abscissa on a mesh and on its uniform refinement.
///
/// The top of a discrete spectrum carries weakly damped branches whose real
/// parts move with the mesh, so the raw abscissa need not be mesh-converged.
/// `resolved` is the maximum real part over certified eigenvalues that
/// reappear on the refined mesh to 1e-3 relative distance with a real part
/// stable to 2 %.
struct AbscissaEstimate {
  double value = 0.0;     // raw abscissa on the given mesh
  double refined = 0.0;   // raw abscissa on the refined mesh
  bool converged = false; // raw values agree to 2 %
  double resolved = 0.0;
  Complex resolved_at;
};

inline AbscissaEstimate abscissa_study(const EigenResult& coarse, const EigenResult& fine) {
  AbscissaEstimate est;
  est.value = coarse.abscissa;
  est.refined = fine.abscissa;
  est.converged = std::abs(est.value - est.refined) <= 0.02 * std::abs(est.refined);
  est.resolved = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    if (!coarse.certified[i]) continue;
    const Complex z = coarse.eigenvalues[i];
    bool match = false;
    for (std::size_t j = 0; j < fine.size() && !match; ++j) {
      const Complex w = fine.eigenvalues[j];
      match = fine.certified[j] && std::abs(w - z) <= 1e-3 * std::abs(z) &&
              std::abs(w.real() - z.real()) <= 0.02 * std::abs(z.real());
    }
    if (match && z.real() > est.resolved) {
      est.resolved = z.real();
      est.resolved_at = z;
    }
  }
  if (!std::isfinite(est.resolved)) throw Error(ErrorCode::no_certified_pairs, "no eigenvalue survives refinement");
  return est;
}

inline AbscissaEstimate abscissa_study(const BeamConfig& c, int n_per_segment) {
  return abscissa_study(eigen_dense(assemble(build_mesh(c, n_per_segment), c)),
                        eigen_dense(assemble(build_mesh(c, 2 * n_per_segment), c)));
}

}  // namespace ebgevrey
