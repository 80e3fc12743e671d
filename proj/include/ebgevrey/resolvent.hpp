#pragma once

// Energy-norm resolvent of the discrete generator along the imaginary axis.
//
// (i lambda - A_h) U = F reduces to the n x n complex symmetric band system
//   (K - lambda^2 M + i lambda D) u = M f2 + (i lambda M + D) f1,  v = i lambda u - f1,
// so every resolvent application costs one band solve. The G-adjoint
// resolvent uses the conjugate-transposed factor of the same matrix.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "banded.hpp"
#include "beam_model.hpp"
#include "errors.hpp"
#include "fem_assembly.hpp"
#include "spectrum.hpp"

namespace ebgevrey {

/// Reciprocal condition bound below which a shift counts as an eigenvalue.
inline constexpr double kNearSingularRcond = 1e-14;

class ResolventSolver {
 public:
  ResolventSolver(const SystemMatrices& mats, double lambda)
      : mats_(&mats),
        lambda_(lambda),
        lu_({{Complex(1.0), &mats.K}, {Complex(-lambda * lambda), &mats.M}, {Complex(0.0, lambda), &mats.D}}) {
    pencil_ = mats.K.cast<Complex>() - Complex(lambda * lambda) * mats.M.cast<Complex>() +
              Complex(0.0, lambda) * mats.D.cast<Complex>();
    if (lu_.exactly_singular() || lu_.rcond() < kNearSingularRcond)
      throw Error(ErrorCode::near_singular, "i*lambda is numerically an eigenvalue (lambda = " + std::to_string(lambda) + ")");
  }

  double lambda() const { return lambda_; }
  double rcond() const { return lu_.rcond(); }

  /// U = (i lambda - A_h)^{-1} F.
  ComplexState solve(const ComplexState& f) const {
    check_dims(*mats_, f.size());
    const Complex il(0.0, lambda_);
    const Eigen::VectorXcd rhs = mats_->M * f.v + il * (mats_->M * f.u) + mats_->D * f.u;
    ComplexState out;
    out.u = refined_solve(rhs, 'N');
    out.v = il * out.u - f.u;
    return out;
  }

  /// G-adjoint of the resolvent, (-i lambda - A_h^dagger)^{-1} F.
  ComplexState solve_adjoint(const ComplexState& f) const {
    check_dims(*mats_, f.size());
    const Complex mu(0.0, -lambda_);
    const Eigen::VectorXcd rhs = mats_->M * f.v - mu * (mats_->M * f.u) - mats_->D * f.u;
    ComplexState out;
    out.u = -refined_solve(rhs, 'C');
    out.v = f.u - mu * out.u;
    return out;
  }

 private:
  Eigen::VectorXcd refined_solve(const Eigen::VectorXcd& rhs, char trans) const {
    Eigen::VectorXcd x = lu_.solve(rhs, trans);
    const Eigen::VectorXcd r = trans == 'N' ? Eigen::VectorXcd(rhs - pencil_ * x)
                                            : Eigen::VectorXcd(rhs - pencil_.adjoint() * x);
    return x + lu_.solve(r, trans);
  }

  const SystemMatrices* mats_;
  double lambda_;
  BandedLU lu_;
  Eigen::SparseMatrix<Complex> pencil_;
};

inline ComplexState resolvent_solve(const SystemMatrices& mats, double lambda, const ComplexState& f) {
  return ResolventSolver(mats, lambda).solve(f);
}

/// ||(i lambda - A_h) U - F||_G / ||F||_G.
inline double substitution_residual(const SystemMatrices& mats, double lambda, const ComplexState& u,
                                    const ComplexState& f) {
  const FirstOrderOperator op(mats);
  ComplexState r = Complex(0.0, lambda) * u - op.apply(u) - f;
  const double fn = g_norm(mats, f);
  return fn > 0.0 ? g_norm(mats, r) / fn : g_norm(mats, r);
}

namespace detail {

inline ComplexState probe_state(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto draw = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5; };
  ComplexState s = ComplexState::zero(n);
  for (int i = 0; i < n; ++i) s.u[i] = Complex(draw(), draw());
  for (int i = 0; i < n; ++i) s.v[i] = Complex(draw(), draw());
  return s;
}

}  // namespace detail

struct NormEstimate {
  double value = 0.0;
  int iterations = 0;
  double ritz_residual = 0.0;
};

/// Largest singular value of a G-bounded operator T given T and T^dagger, by
/// Lanczos with full reorthogonalization on T^dagger T.
template <class Apply, class ApplyAdjoint>
NormEstimate lanczos_operator_norm(const SystemMatrices& mats, Apply&& apply, ApplyAdjoint&& apply_adj,
                                   double tol = 1e-10, int max_iter = 300, std::uint64_t seed = 0x5eed) {
  const int n = mats.size();
  max_iter = std::min(max_iter, 2 * n);
  std::vector<ComplexState> q;
  ComplexState start = detail::probe_state(n, seed);
  start *= Complex(1.0 / g_norm(mats, start));
  q.push_back(std::move(start));
  std::vector<double> alpha, beta;
  NormEstimate est;
  for (int j = 0; j < max_iter; ++j) {
    ComplexState w = apply_adj(apply(q[j]));
    const double a = std::real(g_inner(mats, q[j], w));
    alpha.push_back(a);
    w -= Complex(a) * q[j];
    if (j > 0) w -= Complex(beta[j - 1]) * q[j - 1];
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& qi : q) w -= g_inner(mats, qi, w) * qi;
    const double b = g_norm(mats, w);

    const int m = j + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) t(i, i) = alpha[i];
    for (int i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const double theta = es.eigenvalues()[m - 1];
    const double resid = std::abs(b * es.eigenvectors()(m - 1, m - 1));
    est = {std::sqrt(std::max(theta, 0.0)), m, resid};
    if (theta > 0.0 && (resid <= tol * theta || b <= 1e-300)) return est;
    beta.push_back(b);
    w *= Complex(1.0 / b);
    q.push_back(std::move(w));
  }
  return est;
}

/// ||(i lambda - A_h)^{-1}||_G.
inline NormEstimate resolvent_norm_estimate(const SystemMatrices& mats, double lambda, double tol = 1e-10) {
  const ResolventSolver solver(mats, lambda);
  return lanczos_operator_norm(
      mats, [&](const ComplexState& s) { return solver.solve(s); },
      [&](const ComplexState& s) { return solver.solve_adjoint(s); }, tol);
}

inline double resolvent_norm(const SystemMatrices& mats, double lambda) {
  return resolvent_norm_estimate(mats, lambda).value;
}

/// Same quantity from a dense SVD of the resolvent in energy-orthonormal
/// coordinates. Desk-scale reference for the Lanczos route.
inline double resolvent_norm_dense(const SystemMatrices& mats, double lambda) {
  const EnergyCoordinates ec = energy_coordinates(mats);
  const int m = static_cast<int>(ec.A.rows());
  Eigen::MatrixXcd shifted = -ec.A.cast<Complex>();
  shifted.diagonal().array() += Complex(0.0, lambda);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(shifted);
  if (!(lu.rcond() > kNearSingularRcond)) throw Error(ErrorCode::near_singular, "shift is numerically an eigenvalue");
  const Eigen::MatrixXcd r = lu.solve(Eigen::MatrixXcd::Identity(m, m));
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(r);
  return svd.singularValues()[0];
}

// ---------------------------------------------------------------------------
// Frequency scans

/// Elements per segment for a given frequency. The finest bending wavelength
/// 2 pi / |k|, |k|^4 = lambda^2 rho / |alpha + i lambda kappa|, is covered by at
/// least `elements_per_wavelength` elements.
struct MeshPolicy {
  double elements_per_wavelength = 8.0;
  int min_per_segment = 4;
  int fixed_per_segment = 0;  // > 0 disables the frequency rule
};

inline double bending_wavenumber(const Segment& s, double lambda) {
  const double a = std::abs(Complex(s.alpha, lambda * s.kappa));
  return std::pow(lambda * lambda * s.rho / a, 0.25);
}

inline std::array<int, 5> resolving_counts(const BeamConfig& c, double lambda, const MeshPolicy& p) {
  std::array<int, 5> counts{};
  const auto segs = segments(c);
  for (int s = 0; s < 5; ++s) {
    if (p.fixed_per_segment > 0) {
      counts[s] = p.fixed_per_segment;
      continue;
    }
    const double k = bending_wavenumber(segs[s], std::abs(lambda));
    const double need = p.elements_per_wavelength * k * segs[s].length() / (2.0 * std::numbers::pi);
    counts[s] = std::max(p.min_per_segment, static_cast<int>(std::ceil(need)));
  }
  return counts;
}

inline std::array<int, 5> doubled(std::array<int, 5> c) {
  for (int& x : c) x *= 2;
  return c;
}

/// Supremum of ||R(i mu)||_G over mu in [lo, hi].
///
/// g(mu) = 1/||R(i mu)|| is the smallest singular value of i mu - A_h in the
/// G-norm, which is 1-Lipschitz in mu. Piyavskii-Shubert minimization of g
/// therefore brackets the supremum: the search stops once no unexplored
/// interval can undercut the best value by more than `rel_tol`.
struct WindowSup {
  double norm = 0.0;
  double at = 0.0;
  int evaluations = 0;
  bool near_singular = false;
};

inline WindowSup window_sup(const SystemMatrices& mats, double lo, double hi, double rel_tol = 1e-3,
                            int initial_samples = 8, int max_evaluations = 20000) {
  struct Sample {
    double mu;
    double g;
  };
  WindowSup out;
  auto eval = [&](double mu) -> double {
    ++out.evaluations;
    try {
      return 1.0 / resolvent_norm_estimate(mats, mu, 1e-9).value;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::near_singular) throw;
      out.near_singular = true;
      return 0.0;
    }
  };
  std::vector<Sample> init;
  for (int i = 0; i <= initial_samples; ++i) {
    const double mu = lo + (hi - lo) * i / initial_samples;
    init.push_back({mu, eval(mu)});
  }
  Sample best = *std::min_element(init.begin(), init.end(), [](auto a, auto b) { return a.g < b.g; });
  struct Interval {
    Sample a, b;
    double bound;
    bool operator<(const Interval& o) const { return bound > o.bound; }  // min-heap
  };
  auto make = [](Sample a, Sample b) { return Interval{a, b, 0.5 * (a.g + b.g - (b.mu - a.mu))}; };
  std::priority_queue<Interval> heap;
  for (std::size_t i = 0; i + 1 < init.size(); ++i) heap.push(make(init[i], init[i + 1]));

  while (!heap.empty() && !out.near_singular && out.evaluations < max_evaluations) {
    const Interval iv = heap.top();
    heap.pop();
    if (iv.bound >= best.g * (1.0 - rel_tol)) break;
    const double width = iv.b.mu - iv.a.mu;
    if (width <= 1e-13 * std::max(1.0, iv.b.mu)) continue;
    double mu = 0.5 * (iv.a.mu + iv.b.mu) + 0.5 * (iv.a.g - iv.b.g);
    mu = std::clamp(mu, iv.a.mu + 1e-3 * width, iv.b.mu - 1e-3 * width);
    const Sample s{mu, eval(mu)};
    if (s.g < best.g) best = s;
    heap.push(make(iv.a, s));
    heap.push(make(s, iv.b));
  }
  if (out.near_singular) {
    out.norm = std::numeric_limits<double>::infinity();
    return out;
  }
  out.at = best.mu;
  out.norm = resolvent_norm_estimate(mats, best.mu, 1e-11).value;
  ++out.evaluations;
  return out;
}

enum class ScanMode { window_sup, point };

struct ScanOptions {
  double lambda_min = 1e2;
  double lambda_max = 1e6;
  int points_per_decade = 8;
  ScanMode mode = ScanMode::window_sup;
  MeshPolicy policy{};
  bool companion = true;
  double convergence_tol = 0.05;
  double window_tol = 1e-3;
  int threads = 1;
};

struct ResolventScan {
  std::vector<double> lambdas;
  std::vector<double> norms;
  std::vector<double> scaled;
  std::vector<double> peak_at;
  std::vector<double> companion_norms;
  std::vector<int> mesh_n;  // elements of the primary mesh
  std::vector<bool> converged;
  std::vector<bool> gap;  // near-singular grid point, skipped
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  std::string mesh_tag;

  std::size_t size() const { return lambdas.size(); }
};

inline std::vector<double> log_grid(double lo, double hi, int per_decade) {
  if (!(lo >= 1.0) || !(hi > lo)) throw Error(ErrorCode::invalid_argument, "scan needs 1 <= lambda_min < lambda_max");
  if (per_decade < 4) throw Error(ErrorCode::invalid_argument, "scan needs at least 4 points per decade");
  const int count = static_cast<int>(std::floor(per_decade * std::log10(hi / lo) + 1e-9));
  std::vector<double> out;
  for (int i = 0; i <= count; ++i) out.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
  return out;
}

/// Least-squares slope of log(norm) against log(lambda) over the converged
/// entries of the top two decades.
inline double top_decades_slope(const ResolventScan& s, double offset_power = 0.0) {
  double top = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.converged[i] && !s.gap[i]) top = std::max(top, s.lambdas[i]);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s.converged[i] || s.gap[i] || s.lambdas[i] < top / 100.0 * (1 - 1e-12)) continue;
    const double x = std::log(s.lambdas[i]);
    const double y = std::log(s.norms[i]) + offset_power * x;
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++cnt;
  }
  if (cnt < 2) return std::numeric_limits<double>::quiet_NaN();
  return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

namespace detail {

class MatrixCache {
 public:
  explicit MatrixCache(const BeamConfig& c) : config_(c) {}
  const SystemMatrices& get(const std::array<int, 5>& counts) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(counts);
    if (it == cache_.end()) it = cache_.emplace(counts, assemble(build_mesh(config_, counts), config_)).first;
    return it->second;
  }

 private:
  BeamConfig config_;
  std::mutex mutex_;
  std::map<std::array<int, 5>, SystemMatrices> cache_;
};

template <class F>
void parallel_for(int count, int threads, F&& body) {
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex fail_mutex;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(fail_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline int element_count(const std::array<int, 5>& c) { return c[0] + c[1] + c[2] + c[3] + c[4]; }

}  // namespace detail

/// Resolvent norms on a log-spaced grid of the positive imaginary axis. In
/// window mode each grid value is the supremum over the log-centred window
/// [lambda r^{-1/2}, lambda r^{1/2}], r = 10^{1/points_per_decade}; in point mode
/// it is the norm at lambda itself. With `companion`, every entry is recomputed
/// on the uniformly refined mesh and flagged converged when both agree to
/// `convergence_tol`.
inline ResolventScan scan(const BeamConfig& c, const ScanOptions& opt) {
  if (c.undamped())
    throw Error(ErrorCode::near_singular, "undamped configuration: the spectrum lies on the imaginary axis");
  const auto grid = log_grid(opt.lambda_min, opt.lambda_max, opt.points_per_decade);
  const double half = std::pow(10.0, 0.5 / opt.points_per_decade);
  const int m = static_cast<int>(grid.size());

  ResolventScan out;
  out.lambdas = grid;
  out.norms.assign(m, 0.0);
  out.scaled.assign(m, 0.0);
  out.peak_at.assign(m, 0.0);
  out.companion_norms.assign(m, std::numeric_limits<double>::quiet_NaN());
  out.mesh_n.assign(m, 0);
  out.converged.assign(m, !opt.companion);
  out.gap.assign(m, false);

  detail::MatrixCache cache(c);
  auto measure = [&](const SystemMatrices& mats, double lam) -> std::pair<double, double> {
    if (opt.mode == ScanMode::point) {
      try {
        return {resolvent_norm(mats, lam), lam};
      } catch (const Error& e) {
        if (e.code() != ErrorCode::near_singular) throw;
        return {std::numeric_limits<double>::infinity(), lam};
      }
    }
    const WindowSup w = window_sup(mats, lam / half, lam * half, opt.window_tol);
    return {w.norm, w.at};
  };

  detail::parallel_for(m, opt.threads, [&](int i) {
    const double lam = grid[i];
    const double top = opt.mode == ScanMode::window_sup ? lam * half : lam;
    const auto counts = resolving_counts(c, top, opt.policy);
    out.mesh_n[i] = detail::element_count(counts);
    const auto [norm, at] = measure(cache.get(counts), lam);
    out.norms[i] = norm;
    out.peak_at[i] = at;
    out.gap[i] = !std::isfinite(norm);
    if (opt.companion && !out.gap[i]) {
      const auto [fine, fine_at] = measure(cache.get(doubled(counts)), lam);
      out.companion_norms[i] = fine;
      out.converged[i] = std::isfinite(fine) && std::abs(norm - fine) <= opt.convergence_tol * fine;
    }
    out.scaled[i] = std::pow(lam, 0.25) * norm;
  });
  out.mesh_tag = opt.policy.fixed_per_segment > 0
                     ? "hermite3-fixed-" + std::to_string(opt.policy.fixed_per_segment)
                     : "hermite3-ppw-" + std::to_string(opt.policy.elements_per_wavelength);
  out.fitted_slope = top_decades_slope(out);
  return out;
}

/// Regularity classification of a scan.
struct GevreyReport {
  bool gevrey4_consistent = false;  // max(scaled) / scaled[last] <= 1.5
  bool max_in_first_decade = false;
  bool analytic_excluded = false;   // lambda * norm grows >= 10x over the top two decades
  bool gevrey2_excluded = false;    // lambda^{1/2} * norm grows >= 3x
  double bound_constant = 0.0;      // max(scaled) over converged entries
  double bounded_ratio = 0.0;       // max(scaled) / scaled[last]
  double fitted_slope = 0.0;
  double growth_analytic = 0.0;
  double growth_gevrey2 = 0.0;
  double converged_decades = 0.0;
};

inline GevreyReport classify(const ResolventScan& s) {
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.converged[i] && !s.gap[i]) ok.push_back(i);
  GevreyReport r;
  if (ok.size() >= 2) r.converged_decades = std::log10(s.lambdas[ok.back()] / s.lambdas[ok.front()]);
  if (ok.size() < 2 || r.converged_decades < 2.0 - 1e-9)
    throw Error(ErrorCode::insufficient_converged_range, "fewer than two converged decades");

  std::size_t arg = ok.front();
  for (std::size_t i : ok)
    if (s.scaled[i] > s.scaled[arg]) arg = i;
  r.bound_constant = s.scaled[arg];
  r.bounded_ratio = s.scaled[arg] / s.scaled[ok.back()];
  r.gevrey4_consistent = r.bounded_ratio <= 1.5;
  r.max_in_first_decade = s.lambdas[arg] <= 10.0 * s.lambdas[ok.front()] * (1 + 1e-12);

  r.fitted_slope = top_decades_slope(s);
  // fitted growth of lambda^p * norm across the top two decades
  const double span = std::log(100.0);
  r.growth_analytic = std::exp((r.fitted_slope + 1.0) * span);
  r.growth_gevrey2 = std::exp((r.fitted_slope + 0.5) * span);
  r.analytic_excluded = r.growth_analytic >= 10.0;
  r.gevrey2_excluded = r.growth_gevrey2 >= 3.0;
  return r;
}

}  // namespace ebgevrey
