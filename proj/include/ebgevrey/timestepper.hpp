#pragma once

// Implicit-midpoint integration of M u'' + D u' + K u = 0 in first-order form.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "banded.hpp"
#include "errors.hpp"
#include "fem_assembly.hpp"

namespace ebgevrey {

/// U_{k+1} = U_k + dt A_h (U_k + U_{k+1}) / 2. Eliminating u_{k+1} leaves
///   (M + dt/2 D + dt^2/4 K) v1 = (M - dt/2 D - dt^2/4 K) v0 - dt K u0,
///   u1 = u0 + dt/2 (v0 + v1),
/// an SPD band system factored once.
class MidpointStepper {
 public:
  MidpointStepper(const SystemMatrices& mats, double dt) : mats_(&mats), dt_(dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "time step must be positive");
    lhs_ = mats.M + (0.5 * dt) * mats.D + (0.25 * dt * dt) * mats.K;
    try {
      chol_.compute(lhs_);
    } catch (const Error&) {
      throw Error(ErrorCode::factorization_failure, "midpoint system is not numerically SPD");
    }
  }

  double dt() const { return dt_; }

  StateVector step(const StateVector& s) const {
    check_dims(*mats_, s.size());
    const Eigen::VectorXd rhs = 2.0 * (mats_->M * s.v) - lhs_ * s.v - dt_ * (mats_->K * s.u);
    Eigen::VectorXd v1 = chol_.solve<double>(rhs);
    v1 += chol_.solve<double>(Eigen::VectorXd(rhs - lhs_ * v1));
    StateVector out;
    out.u = s.u + 0.5 * dt_ * (s.v + v1);
    out.v = std::move(v1);
    return out;
  }

 private:
  const SystemMatrices* mats_;
  double dt_;
  SparseMatrix lhs_;
  BandedCholesky chol_;
};

inline StateVector step_midpoint(const SystemMatrices& mats, const StateVector& s, double dt) {
  return MidpointStepper(mats, dt).step(s);
}

struct DecayFit {
  double rate = 0.0;
  double stderr_rate = 0.0;
  int samples = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
};

/// Decay rate of E(t) from a least-squares fit of log E over [T/4, 3T/4],
/// where T is the end of the record or the first time E falls below
/// 1e-12 E(0), whichever comes first.
inline DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& e) {
  if (t.size() != e.size() || t.empty()) throw Error(ErrorCode::invalid_argument, "time and energy records differ in length");
  const double floor = 1e-12 * e.front();
  double t_eff = t.back();
  for (std::size_t k = 0; k < t.size(); ++k)
    if (!(e[k] >= floor) || e[k] <= 0.0) {
      t_eff = t[k > 0 ? k - 1 : 0];
      break;
    }
  const double lo = t.front() + 0.25 * (t_eff - t.front());
  const double hi = t.front() + 0.75 * (t_eff - t.front());

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  double e_first = 0.0, e_last = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < lo || t[k] > hi || !(e[k] > 0.0)) continue;
    if (n == 0) e_first = e[k];
    e_last = e[k];
    const double y = std::log(e[k]);
    sx += t[k], sy += y, sxx += t[k] * t[k], sxy += t[k] * y, ++n;
  }
  if (n < 20) throw Error(ErrorCode::insufficient_decay, "fewer than 20 samples in the fit window");
  if (!(e.front() >= 10.0 * std::max(e_last, *std::min_element(e.begin(), e.end()))) || !(e_first > e_last))
    throw Error(ErrorCode::insufficient_decay, "energy did not drop by a factor of 10; lengthen T");

  const double denom = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / denom;
  const double icpt = (sy - slope * sx) / n;
  double ss = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] < lo || t[k] > hi || !(e[k] > 0.0)) continue;
    const double r = std::log(e[k]) - (icpt + slope * t[k]);
    ss += r * r;
  }
  DecayFit fit;
  fit.rate = -slope;
  fit.stderr_rate = n > 2 ? std::sqrt(ss / (n - 2) * n / denom) : 0.0;
  fit.samples = n;
  fit.t_begin = lo;
  fit.t_end = hi;
  return fit;
}

struct Trajectory {
  std::vector<double> times;
  std::vector<double> energies;
  /// r_k = E_{k+1} - E_k - dt R((U_k + U_{k+1}) / 2), identically zero up to roundoff.
  std::vector<double> step_residuals;
  /// E_k - E_0 - int_0^{t_k} R dt with the integral taken by the trapezoid rule
  /// on the sampled states; O(dt^2) against the continuous energy identity.
  std::vector<double> balance;
  std::vector<double> rates;  // R(U_k)
  double fitted_rate = std::numeric_limits<double>::quiet_NaN();
  double fit_stderr = std::numeric_limits<double>::quiet_NaN();
  StateVector final_state;

  std::size_t size() const { return times.size(); }
  double max_abs_balance() const {
    double m = 0.0;
    for (double b : balance) m = std::max(m, std::abs(b));
    return m;
  }
  double max_abs_step_residual() const {
    double m = 0.0;
    for (double r : step_residuals) m = std::max(m, std::abs(r));
    return m;
  }
};

inline Trajectory simulate(const SystemMatrices& mats, const StateVector& u0, double t_end, double dt,
                           bool fit = true) {
  if (!(t_end > 0.0) || !(dt > 0.0) || dt > t_end)
    throw Error(ErrorCode::invalid_argument, "need T > 0 and 0 < dt <= T");
  check_dims(mats, u0.size());
  const MidpointStepper stepper(mats, dt);
  const long steps = std::lround(t_end / dt);

  Trajectory tr;
  tr.times.reserve(steps + 1);
  tr.energies.reserve(steps + 1);
  StateVector s = u0;
  double e = energy(mats, s), r = dissipation_rate(mats, s);
  const double e0 = e;
  double integral = 0.0;
  tr.times.push_back(0.0);
  tr.energies.push_back(e);
  tr.rates.push_back(r);
  tr.balance.push_back(0.0);
  for (long k = 0; k < steps; ++k) {
    StateVector next = stepper.step(s);
    const double e1 = energy(mats, next), r1 = dissipation_rate(mats, next);
    const StateVector mid = 0.5 * (s + next);
    tr.step_residuals.push_back(e1 - e - dt * dissipation_rate(mats, mid));
    integral += 0.5 * dt * (r + r1);
    tr.times.push_back((k + 1) * dt);
    tr.energies.push_back(e1);
    tr.rates.push_back(r1);
    tr.balance.push_back(e1 - e0 - integral);
    s = std::move(next);
    e = e1;
    r = r1;
  }
  tr.step_residuals.push_back(0.0);
  tr.final_state = std::move(s);
  if (fit && e0 > 0.0) {
    try {
      const DecayFit f = fit_decay(tr.times, tr.energies);
      tr.fitted_rate = f.rate;
      tr.fit_stderr = f.stderr_rate;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::insufficient_decay) throw;
    }
  }
  return tr;
}

/// Lowest undamped modes: columns of the returned matrix are M-orthonormal
/// eigenvectors of K x = w^2 M x, with the squared frequencies alongside.
struct ModalBasis {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd omega2;
};

inline ModalBasis lowest_modes(const SystemMatrices& mats, int count) {
  const int n = mats.size();
  if (n > 4096) throw Error(ErrorCode::invalid_argument, "modal initial data limited to n <= 4096");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(mats.K), Eigen::MatrixXd(mats.M));
  if (es.info() != Eigen::Success) throw Error(ErrorCode::qr_no_convergence, "symmetric eigensolve failed");
  count = std::min(count, n);
  ModalBasis b{es.eigenvectors().leftCols(count), es.eigenvalues().head(count)};
  for (int j = 0; j < count; ++j) {
    // fix the sign so the largest entry is positive
    Eigen::Index idx;
    b.vectors.col(j).cwiseAbs().maxCoeff(&idx);
    if (b.vectors(idx, j) < 0) b.vectors.col(j) *= -1.0;
  }
  return b;
}

/// Initial data for decay studies: the first undamped mode at unit energy plus
/// a seeded random combination of the next modes carrying `spread` of that
/// energy. Displacement and velocity parts are drawn independently.
inline StateVector initial_state(const SystemMatrices& mats, std::uint64_t seed, int modes = 6, double spread = 0.5) {
  const ModalBasis b = lowest_modes(mats, modes);
  std::mt19937_64 rng(seed);
  auto draw = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  StateVector s = StateVector::zero(mats.size());
  s.u = b.vectors.col(0) / std::sqrt(b.omega2[0]);
  StateVector extra = StateVector::zero(mats.size());
  for (int j = 1; j < b.vectors.cols(); ++j) {
    extra.u += draw() / std::sqrt(b.omega2[j]) * b.vectors.col(j);
    extra.v += draw() * b.vectors.col(j);
  }
  const double en = g_norm(mats, extra);
  if (en > 0.0) s += (std::sqrt(spread * 2.0 * energy(mats, s)) / en) * extra;
  return s;
}

}  // namespace ebgevrey
