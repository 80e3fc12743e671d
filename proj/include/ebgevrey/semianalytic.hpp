#pragma once

// Mesh-free eigenvalue and resolvent oracle.
//
// On each segment the pencil reduces to a(lambda) u'''' = -lambda^2 rho u with
// a(lambda) = alpha + lambda kappa. Solutions are combinations of exp(mu x),
// mu in {k, -k, ik, -ik}, k^4 = -lambda^2 rho / a. Gluing the five segments with
// the clamped ends and the interface/jump conditions yields a 20 x 20 system.
//
// The reported determinant is that of the same system written in the
// initial-value (Krylov) basis of every segment. It does not depend on the
// choice of fourth root and is analytic in lambda away from a(lambda) = 0, so
// the argument principle applies to it directly. It is evaluated from the
// better-conditioned exponential basis through
//   det B_krylov = det B_exp * prod exp(mu L) [columns anchored at b] / prod det V,
// with V_jm = mu_m^j the per-segment Vandermonde matrix.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "banded.hpp"
#include "beam_model.hpp"
#include "errors.hpp"
#include "quadrature.hpp"

namespace ebgevrey {

inline Complex bending_coefficient(const Segment& s, Complex lambda) { return s.alpha + lambda * s.kappa; }

/// Fundamental solutions of a u'''' + lambda^2 rho u = 0 on one segment.
struct SegmentBasis {
  Complex lambda;
  Complex a;
  Complex s;  // k^4
  Complex k;
  double xa = 0.0;
  double xb = 0.0;
  bool series = false;  // Krylov power series instead of exponentials
  std::array<Complex, 4> mu{};
  std::array<double, 4> anchor{};

  double length() const { return xb - xa; }

  /// order-th derivatives of the four basis functions at x.
  std::array<Complex, 4> eval(double x, int order) const {
    std::array<Complex, 4> out{};
    if (!series) {
      for (int m = 0; m < 4; ++m) out[m] = std::pow(mu[m], order) * std::exp(mu[m] * (x - anchor[m]));
      return out;
    }
    // Y_m(t) = sum_n s^n t^{4n+m} / (4n+m)!, so Y_m^{(j)}(0) = delta_jm
    const double t = x - xa;
    for (int m = 0; m < 4; ++m) {
      Complex sum = 0.0;
      Complex sp = 1.0;  // s^n
      for (int n = 0; n < 40; ++n, sp *= s) {
        const int p = 4 * n + m - order;
        if (p < 0) continue;
        double tp = 1.0;
        for (int i = 1; i <= p; ++i) tp *= t / i;
        const Complex term = sp * tp;
        sum += term;
        if (n > 2 && std::abs(term) <= 1e-18 * std::abs(sum)) break;
      }
      out[m] = sum;
    }
    return out;
  }

  /// log of det B_krylov / det B_this restricted to this segment's columns.
  Complex log_correction() const {
    if (series) return 0.0;
    Complex shift = 0.0;
    for (int m = 0; m < 4; ++m)
      if (anchor[m] == xb) shift += mu[m] * length();
    Complex logv = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) logv += std::log(mu[j] - mu[i]);
    return shift - logv;
  }
};

/// Segments with |k| L below this use the power-series basis.
inline constexpr double kSeriesThreshold = 1.0;

inline SegmentBasis segment_basis(Complex lambda, const Segment& seg) {
  SegmentBasis b;
  b.lambda = lambda;
  b.a = bending_coefficient(seg, lambda);
  if (std::abs(b.a) < 1e-14 * seg.alpha)
    throw Error(ErrorCode::degenerate_coefficient, "alpha + lambda kappa vanishes on a segment");
  b.s = -lambda * lambda * seg.rho / b.a;
  b.k = std::abs(b.s) == 0.0 ? Complex(0.0) : std::polar(std::pow(std::abs(b.s), 0.25), std::arg(b.s) / 4.0);
  b.xa = seg.a;
  b.xb = seg.b;
  b.series = std::abs(b.k) * seg.length() < kSeriesThreshold;
  const Complex i(0.0, 1.0);
  b.mu = {b.k, -b.k, i * b.k, -i * b.k};
  for (int m = 0; m < 4; ++m) b.anchor[m] = b.mu[m].real() > 0.0 ? seg.b : seg.a;
  return b;
}

using CharMatrix = Eigen::Matrix<Complex, 20, 20>;
using CharVector = Eigen::Matrix<Complex, 20, 1>;

struct CharacteristicSystem {
  Complex lambda;
  CharMatrix blocks;
  /// true determinant = det(blocks) * exp(log_scale)
  Complex log_scale;
  std::array<SegmentBasis, 5> bases;
  std::array<double, 20> row_scale{};
};

namespace detail {

// Damper gains at the four interior points (xi1, ell0, xi2, ell1).
inline std::array<std::pair<double, double>, 4> interior_gains(const BeamConfig& c) {
  return {{{c.gamma1, 0.0}, {0.0, 0.0}, {c.gamma2, c.gamma3}, {0.0, 0.0}}};
}

inline double row_scale(int order, std::initializer_list<const SegmentBasis*> segs) {
  double kref = 1.0, aref = 0.0;
  for (const auto* s : segs) kref = std::max(kref, std::abs(s->k)), aref = std::max(aref, std::abs(s->a));
  double sc = std::pow(kref, -order);
  if (order >= 2) sc /= aref;
  return sc;
}

}  // namespace detail

/// Rows: u(0), u'(0); at each of xi1, ell0, xi2, ell1 the jumps of u, u',
/// a u'' - gamma_r lambda u', a u''' + gamma_t lambda u; then u(ell), u'(ell).
/// Columns: four basis coefficients per segment.
inline CharacteristicSystem characteristic_system(Complex lambda, const BeamConfig& c) {
  CharacteristicSystem sys;
  sys.lambda = lambda;
  sys.blocks.setZero();
  const auto segs = segments(c);
  for (int s = 0; s < 5; ++s) sys.bases[s] = segment_basis(lambda, segs[s]);
  const auto& B = sys.bases;

  auto put = [&](int row, int seg, double x, int order, Complex factor) {
    const auto vals = B[seg].eval(x, order);
    for (int m = 0; m < 4; ++m) sys.blocks(row, 4 * seg + m) += factor * vals[m];
  };

  for (int j = 0; j < 2; ++j) {
    sys.row_scale[j] = detail::row_scale(j, {&B[0]});
    put(j, 0, 0.0, j, 1.0);
  }
  const auto gains = detail::interior_gains(c);
  const auto pts = breakpoints(c);
  for (int p = 0; p < 4; ++p) {
    const double x = pts[p + 1];
    const int L = p, R = p + 1;
    const int r0 = 2 + 4 * p;
    for (int j = 0; j < 4; ++j) {
      const Complex fl = j >= 2 ? B[L].a : Complex(1.0);
      const Complex fr = j >= 2 ? B[R].a : Complex(1.0);
      put(r0 + j, R, x, j, fr);
      put(r0 + j, L, x, j, -fl);
      sys.row_scale[r0 + j] = detail::row_scale(j, {&B[L], &B[R]});
    }
    const auto [gt, gr] = gains[p];
    if (gr != 0.0) put(r0 + 2, L, x, 1, -gr * lambda);
    if (gt != 0.0) put(r0 + 3, L, x, 0, gt * lambda);
  }
  for (int j = 0; j < 2; ++j) {
    sys.row_scale[18 + j] = detail::row_scale(j, {&B[4]});
    put(18 + j, 4, c.ell, j, 1.0);
  }

  sys.log_scale = 0.0;
  for (int r = 0; r < 20; ++r) {
    sys.blocks.row(r) *= sys.row_scale[r];
    sys.log_scale -= std::log(sys.row_scale[r]);
  }
  for (const auto& b : B) sys.log_scale += b.log_correction();
  return sys;
}

/// log of the analytic characteristic determinant: log|D| + i arg D, where
/// the imaginary part is only meaningful modulo 2 pi.
inline Complex log_determinant(const CharacteristicSystem& sys) {
  Eigen::PartialPivLU<CharMatrix> lu(sys.blocks);
  const CharMatrix& f = lu.matrixLU();
  Complex acc = lu.permutationP().determinant() < 0 ? Complex(0.0, std::numbers::pi) : Complex(0.0);
  for (int i = 0; i < 20; ++i) {
    if (f(i, i) == Complex(0.0)) return Complex(-std::numeric_limits<double>::infinity(), 0.0);
    acc += std::log(f(i, i));
  }
  return acc + sys.log_scale;
}

inline Complex log_characteristic_determinant(Complex lambda, const BeamConfig& c) {
  return log_determinant(characteristic_system(lambda, c));
}

// ---------------------------------------------------------------------------
// Root counting and refinement

struct Rect {
  double re_min, re_max, im_min, im_max;
};

struct RootCount {
  int count = 0;
  long samples = 0;
  double winding = 0.0;  // unrounded
};

namespace detail {

inline double wrap_phase(double d) {
  d = std::fmod(d, 2.0 * std::numbers::pi);
  if (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
  if (d <= -std::numbers::pi) d += 2.0 * std::numbers::pi;
  return d;
}

// Upper estimate of |d arg D / d lambda| from the exponential factors,
// sum over segments of 2 L |dk/dlambda| with dk/dlambda = k/4 (2/lambda - kappa/a).
inline double phase_rate(Complex z, const BeamConfig& c) {
  double rate = 0.0;
  for (const auto& seg : segments(c)) {
    const SegmentBasis b = segment_basis(z, seg);
    if (std::abs(z) == 0.0) continue;
    rate += 2.0 * seg.length() * std::abs(b.k / 4.0 * (2.0 / z - seg.kappa / b.a));
  }
  return rate;
}

}  // namespace detail

/// Winding number of the characteristic determinant around a rectangle,
/// with consecutive boundary samples refined until their phase step is
/// below pi/2 and their spacing resolves the exponential phase drift.
inline RootCount count_roots(const Rect& r, const BeamConfig& c, int samples_per_edge = 64, long max_samples = 100000) {
  if (!(r.re_max > r.re_min) || !(r.im_max > r.im_min)) throw Error(ErrorCode::invalid_argument, "empty rectangle");
  const std::array<Complex, 5> corners = {Complex(r.re_min, r.im_min), Complex(r.re_max, r.im_min),
                                          Complex(r.re_max, r.im_max), Complex(r.re_min, r.im_max),
                                          Complex(r.re_min, r.im_min)};
  RootCount out;
  auto phase = [&](Complex z) {
    ++out.samples;
    if (out.samples > max_samples) throw Error(ErrorCode::non_converged_sampling, "boundary sampling exceeded its cap");
    const Complex l = log_characteristic_determinant(z, c);
    if (!std::isfinite(l.real())) throw Error(ErrorCode::boundary_root, "determinant vanishes on the contour");
    return l.imag();
  };
  const double scale = std::max({std::abs(r.re_min), std::abs(r.re_max), std::abs(r.im_min), std::abs(r.im_max), 1.0});
  double total = 0.0;
  for (int e = 0; e < 4; ++e) {
    const Complex z0 = corners[e], z1 = corners[e + 1];
    struct Node {
      double t, ph;
    };
    std::vector<Node> stack;
    double t_prev = 0.0, ph_prev = phase(z0);
    for (int i = 1; i <= samples_per_edge; ++i) {
      const double t_next = static_cast<double>(i) / samples_per_edge;
      stack.push_back({t_next, phase(z0 + t_next * (z1 - z0))});
      while (!stack.empty()) {
        const Node nd = stack.back();
        const double d = detail::wrap_phase(nd.ph - ph_prev);
        const double step = (nd.t - t_prev) * std::abs(z1 - z0);
        const Complex zm = z0 + 0.5 * (t_prev + nd.t) * (z1 - z0);
        if (std::abs(d) < 0.5 * std::numbers::pi && step * detail::phase_rate(zm, c) <= 0.25 * std::numbers::pi) {
          total += d;
          t_prev = nd.t;
          ph_prev = nd.ph;
          stack.pop_back();
          continue;
        }
        if (step < 1e-12 * scale)
          throw Error(ErrorCode::boundary_root, "phase jump does not resolve: root on or near the contour");
        const double tm = 0.5 * (t_prev + nd.t);
        stack.push_back({tm, phase(z0 + tm * (z1 - z0))});
      }
    }
  }
  out.winding = total / (2.0 * std::numbers::pi);
  out.count = static_cast<int>(std::lround(out.winding));
  return out;
}

struct RefinedRoot {
  Complex lambda;
  int iterations = 0;
  double abs_det = 0.0;     // |D(lambda)| / median |D| on the surrounding box
  double log_abs_det = 0.0; // log |D(lambda)|
};

/// Muller iteration on the characteristic determinant. Values are rescaled by
/// |D(lambda0)| so that the exponentially large determinant stays finite.
inline RefinedRoot refine_root(Complex lambda0, const BeamConfig& c, int max_iter = 50, double box_rel = 1e-2) {
  const double ref = log_characteristic_determinant(lambda0, c).real();
  auto f = [&](Complex z) { return std::exp(log_characteristic_determinant(z, c) - ref); };
  const double h = 1e-4 * std::max(std::abs(lambda0), 1.0);
  Complex x0 = lambda0 - h, x1 = lambda0 + h, x2 = lambda0;
  Complex f0 = f(x0), f1 = f(x1), f2 = f(x2);
  std::vector<double> steps;
  RefinedRoot out;
  for (int it = 1; it <= max_iter; ++it) {
    const Complex h1 = x1 - x0, h2 = x2 - x1;
    const Complex d1 = (f1 - f0) / h1, d2 = (f2 - f1) / h2;
    const Complex a = (d2 - d1) / (h2 + h1);
    const Complex b = a * h2 + d2;
    const Complex disc = std::sqrt(b * b - 4.0 * a * f2);
    const Complex den = std::abs(b + disc) >= std::abs(b - disc) ? b + disc : b - disc;
    const Complex dx = den == Complex(0.0) ? Complex(h) : -2.0 * f2 / den;
    x0 = x1, f0 = f1;
    x1 = x2, f1 = f2;
    x2 = x2 + dx;
    f2 = f(x2);
    out.iterations = it;
    steps.push_back(std::abs(dx));
    if (!std::isfinite(x2.real()) || !std::isfinite(x2.imag())) break;
    if (std::abs(dx) <= 1e-14 * std::abs(x2) || f2 == Complex(0.0)) {
      out.lambda = x2;
      break;
    }
  }
  if (out.lambda == Complex(0.0)) {
    if (steps.size() >= 6) {
      // linear convergence with a steady contraction ratio points at a multiple root
      const std::size_t n = steps.size();
      const double q1 = steps[n - 1] / steps[n - 2], q2 = steps[n - 2] / steps[n - 3];
      if (q1 < 0.95 && q2 < 0.95 && std::abs(q1 - q2) < 0.1)
        throw Error(ErrorCode::multiple_root_suspected, "Muller converged only linearly");
    }
    throw Error(ErrorCode::no_convergence, "Muller iteration did not converge");
  }

  const double r = box_rel * std::max(std::abs(out.lambda), 1.0);
  std::vector<double> ring;
  for (int j = 0; j < 16; ++j) {
    const Complex z = out.lambda + std::polar(r, 2.0 * std::numbers::pi * (j + 0.5) / 16.0);
    ring.push_back(log_characteristic_determinant(z, c).real());
  }
  std::nth_element(ring.begin(), ring.begin() + 8, ring.end());
  out.log_abs_det = log_characteristic_determinant(out.lambda, c).real();
  out.abs_det = std::exp(out.log_abs_det - ring[8]);
  if (!(out.abs_det <= 1e-10)) throw Error(ErrorCode::no_convergence, "refined root does not reduce the determinant enough");
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form resolvent

/// Solution of i lambda U - A U = (0, f2) with f2 constant on each segment.
struct OracleSolution {
  double lambda = 0.0;
  BeamConfig config;
  std::array<double, 5> f2{};
  std::array<SegmentBasis, 5> bases;
  std::array<std::array<Complex, 4>, 5> coeffs{};
  std::array<Complex, 5> particular{};
  double h_norm = 0.0;

  /// order-th derivative of u at x in segment `seg`.
  Complex u(int seg, double x, int order = 0) const {
    const auto vals = bases[seg].eval(x, order);
    Complex sum = order == 0 ? particular[seg] : Complex(0.0);
    for (int m = 0; m < 4; ++m) sum += coeffs[seg][m] * vals[m];
    return sum;
  }
};

inline OracleSolution oracle_resolvent(double lambda, const std::array<double, 5>& f2, const BeamConfig& c) {
  if (lambda == 0.0) throw Error(ErrorCode::invalid_argument, "oracle resolvent needs lambda != 0");
  const Complex z(0.0, lambda);
  const CharacteristicSystem sys = characteristic_system(z, c);
  const auto segs = segments(c);
  OracleSolution out;
  out.lambda = lambda;
  out.config = c;
  out.f2 = f2;
  out.bases = sys.bases;
  // -lambda^2 rho u + a u'''' = f2 has the constant particular solution -f2 / (lambda^2 rho)
  for (int s = 0; s < 5; ++s) out.particular[s] = -f2[s] / (lambda * lambda * segs[s].rho);

  CharVector rhs = CharVector::Zero();
  rhs(0) = -out.particular[0];
  const auto gains = detail::interior_gains(c);
  for (int p = 0; p < 4; ++p) {
    const int r0 = 2 + 4 * p;
    rhs(r0) = -(out.particular[p + 1] - out.particular[p]);
    rhs(r0 + 3) = -gains[p].first * z * out.particular[p];
  }
  rhs(18) = -out.particular[4];
  for (int r = 0; r < 20; ++r) rhs(r) *= sys.row_scale[r];

  Eigen::FullPivLU<CharMatrix> lu(sys.blocks);
  if (!(lu.rcond() > 1e-14)) throw Error(ErrorCode::near_singular, "i*lambda is numerically a characteristic root");
  const CharVector coef = lu.solve(rhs);
  for (int s = 0; s < 5; ++s)
    for (int m = 0; m < 4; ++m) out.coeffs[s][m] = coef(4 * s + m);

  // ||U||_H^2 = int alpha |u''|^2 + rho |lambda u|^2, quadrature on sub-intervals of length <= 1/|k|
  static const GaussRule rule = gauss_legendre(32);
  double sum = 0.0;
  for (int s = 0; s < 5; ++s) {
    const double len = segs[s].length();
    const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(out.bases[s].k) * len)));
    const double h = len / pieces;
    for (int q = 0; q < pieces; ++q)
      for (std::size_t g = 0; g < rule.nodes.size(); ++g) {
        const double x = segs[s].a + h * (q + rule.nodes[g]);
        const double w = h * rule.weights[g];
        sum += w * (segs[s].alpha * std::norm(out.u(s, x, 2)) + segs[s].rho * lambda * lambda * std::norm(out.u(s, x)));
      }
  }
  out.h_norm = std::sqrt(sum);
  return out;
}

}  // namespace ebgevrey
