#pragma once

// C1 cubic-Hermite discretization of the clamped transmission beam.
//
// Nodes are forced at xi1, ell0, xi2, ell1 so every element sits inside one
// segment. Transmission and jump conditions are natural conditions of the
// variational form; only the clamped ends are eliminated. The damping form is
//
//   d(v, w) = int_{ell0}^{ell1} alpha0 v'' w'' + g1 v(xi1) w(xi1)
//             + g2 v(xi2) w(xi2) + g3 v'(xi2) w'(xi2).

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "banded.hpp"
#include "beam_model.hpp"
#include "errors.hpp"
#include "quadrature.hpp"

namespace ebgevrey {

struct Element {
  double a;
  double b;
  int segment;
  double h() const { return b - a; }
};

struct Mesh {
  std::vector<double> nodes;
  std::vector<Element> elements;
  /// Per node: free index of the displacement and rotation DOF, -1 if clamped.
  std::vector<std::array<int, 2>> dof_map;
  /// Global DOF ids (2*node + component) removed by the clamped conditions.
  std::array<int, 4> constrained_dofs{};
  /// Node indices of xi1, ell0, xi2, ell1.
  std::array<int, 4> marked_nodes{};
  std::array<int, 5> per_segment{};
  int free_dofs = 0;

  std::size_t node_count() const { return nodes.size(); }
  double x_xi1() const { return nodes[marked_nodes[0]]; }
  double x_ell0() const { return nodes[marked_nodes[1]]; }
  double x_xi2() const { return nodes[marked_nodes[2]]; }
  double x_ell1() const { return nodes[marked_nodes[3]]; }

  std::string tag() const {
    std::string t = "hermite3";
    for (int c : per_segment) t += "-" + std::to_string(c);
    return t;
  }

  /// Index of the element holding x (the right one when x is an interior node).
  int element_containing(double x) const {
    const double tol = 1e-14 * nodes.back();
    if (x < nodes.front() - tol || x > nodes.back() + tol) throw Error(ErrorCode::out_of_domain, "x outside mesh");
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    int e = static_cast<int>(it - nodes.begin()) - 1;
    return std::clamp(e, 0, static_cast<int>(elements.size()) - 1);
  }
};

inline Mesh build_mesh(const BeamConfig& c, const std::array<int, 5>& per_segment) {
  for (int k : per_segment)
    if (k < 1) throw Error(ErrorCode::invalid_argument, "elements per segment must be >= 1");
  const auto bp = breakpoints(c);
  Mesh m;
  m.per_segment = per_segment;
  m.nodes.push_back(bp[0]);
  for (int s = 0; s < 5; ++s) {
    const int ns = per_segment[s];
    for (int j = 1; j <= ns; ++j) {
      // last node of the segment is the breakpoint itself, bit-exact
      const double x = j == ns ? bp[s + 1] : bp[s] + (bp[s + 1] - bp[s]) * j / ns;
      m.elements.push_back({m.nodes.back(), x, s});
      m.nodes.push_back(x);
    }
    if (s < 4) m.marked_nodes[s] = static_cast<int>(m.nodes.size()) - 1;
  }
  const int nn = static_cast<int>(m.nodes.size());
  m.constrained_dofs = {0, 1, 2 * nn - 2, 2 * nn - 1};
  m.dof_map.assign(nn, {-1, -1});
  int next = 0;
  for (int i = 1; i + 1 < nn; ++i) m.dof_map[i] = {next, next + 1}, next += 2;
  m.free_dofs = next;
  return m;
}

inline Mesh build_mesh(const BeamConfig& c, int n_per_segment) {
  return build_mesh(c, std::array<int, 5>{n_per_segment, n_per_segment, n_per_segment, n_per_segment, n_per_segment});
}

/// Cubic Hermite shape functions on an element of length h, ordered
/// (value left, slope left, value right, slope right); `order` counts
/// physical x-derivatives (0..3).
inline std::array<double, 4> hermite_eval(double h, double t, int order) {
  switch (order) {
    case 0:
      return {1 - 3 * t * t + 2 * t * t * t, h * (t - 2 * t * t + t * t * t), 3 * t * t - 2 * t * t * t,
              h * (-t * t + t * t * t)};
    case 1:
      return {(-6 * t + 6 * t * t) / h, 1 - 4 * t + 3 * t * t, (6 * t - 6 * t * t) / h, -2 * t + 3 * t * t};
    case 2:
      return {(-6 + 12 * t) / (h * h), (-4 + 6 * t) / h, (6 - 12 * t) / (h * h), (-2 + 6 * t) / h};
    case 3:
      return {12 / (h * h * h), 6 / (h * h), -12 / (h * h * h), 6 / (h * h)};
    default:
      throw Error(ErrorCode::invalid_argument, "hermite_eval order must be 0..3");
  }
}

inline std::array<double, 4> hermite_eval(const Element& e, double t, int order) { return hermite_eval(e.h(), t, order); }

/// Free-DOF indices of an element's four local functions (-1 if clamped).
inline std::array<int, 4> element_dofs(const Mesh& m, int e) {
  const auto& l = m.dof_map[e];
  const auto& r = m.dof_map[e + 1];
  return {l[0], l[1], r[0], r[1]};
}

struct PointDamper {
  double x;
  int order;  // 0: transverse velocity, 1: rotational velocity
  double gain;
};

struct SystemMatrices {
  SparseMatrix M;  // int rho phi_i phi_j
  SparseMatrix K;  // int alpha phi_i'' phi_j''
  SparseMatrix D;  // Kelvin-Voigt part plus point dampers
  std::vector<PointDamper> dampers;
  std::string mesh_tag;

  int size() const { return static_cast<int>(M.rows()); }

  /// Energy Gram matrix blockdiag(K, M) on (u, v).
  SparseMatrix energy_gram() const {
    const int n = size();
    std::vector<Eigen::Triplet<double>> t;
    for (int j = 0; j < n; ++j) {
      for (SparseMatrix::InnerIterator it(K, j); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
      for (SparseMatrix::InnerIterator it(M, j); it; ++it) t.emplace_back(n + it.row(), n + it.col(), it.value());
    }
    SparseMatrix g(2 * n, 2 * n);
    g.setFromTriplets(t.begin(), t.end());
    return g;
  }
};

/// Functional e with e . u = u(x) (order 0) or u'(x) (order 1).
inline Eigen::VectorXd eval_vector(const Mesh& m, double x, int order) {
  if (order != 0 && order != 1) throw Error(ErrorCode::invalid_argument, "eval_vector order must be 0 or 1");
  const double tol = 1e-12 * m.nodes.back();
  if (order == 1 && (std::abs(x - m.x_ell0()) <= tol || std::abs(x - m.x_ell1()) <= tol))
    throw Error(ErrorCode::on_discontinuity, "derivative functional at a material interface");
  const int e = m.element_containing(x);
  const Element& el = m.elements[e];
  const double t = std::clamp((x - el.a) / el.h(), 0.0, 1.0);
  const auto phi = hermite_eval(el, t, order);
  const auto dofs = element_dofs(m, e);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.free_dofs);
  for (int i = 0; i < 4; ++i)
    if (dofs[i] >= 0) out[dofs[i]] += phi[i];
  return out;
}

inline SystemMatrices assemble(const Mesh& m, const BeamConfig& c) {
  const auto segs = segments(c);
  const GaussRule q = gauss_legendre(4);
  const int n = m.free_dofs;
  std::vector<Eigen::Triplet<double>> tm, tk, td;
  tm.reserve(16 * m.elements.size());
  tk.reserve(16 * m.elements.size());
  for (std::size_t e = 0; e < m.elements.size(); ++e) {
    const Element& el = m.elements[e];
    const double h = el.h();
    if (!(h > 0.0)) throw Error(ErrorCode::singular_mass, "element with nonpositive length");
    const Segment& s = segs[el.segment];
    Eigen::Matrix4d me = Eigen::Matrix4d::Zero(), ke = Eigen::Matrix4d::Zero();
    for (std::size_t g = 0; g < q.nodes.size(); ++g) {
      const auto n0 = hermite_eval(h, q.nodes[g], 0);
      const auto n2 = hermite_eval(h, q.nodes[g], 2);
      const Eigen::Vector4d v0(n0[0], n0[1], n0[2], n0[3]);
      const Eigen::Vector4d v2(n2[0], n2[1], n2[2], n2[3]);
      me += q.weights[g] * h * v0 * v0.transpose();
      ke += q.weights[g] * h * v2 * v2.transpose();
    }
    const auto dofs = element_dofs(m, static_cast<int>(e));
    for (int i = 0; i < 4; ++i) {
      if (dofs[i] < 0) continue;
      for (int j = 0; j < 4; ++j) {
        if (dofs[j] < 0) continue;
        tm.emplace_back(dofs[i], dofs[j], s.rho * me(i, j));
        tk.emplace_back(dofs[i], dofs[j], s.alpha * ke(i, j));
        if (s.kappa != 0.0) td.emplace_back(dofs[i], dofs[j], s.kappa * ke(i, j));
      }
    }
  }
  SystemMatrices out;
  out.mesh_tag = m.tag();
  out.dampers = {{m.x_xi1(), 0, c.gamma1}, {m.x_xi2(), 0, c.gamma2}, {m.x_xi2(), 1, c.gamma3}};
  for (const auto& d : out.dampers) {
    if (d.gain == 0.0) continue;
    const Eigen::VectorXd ev = eval_vector(m, d.x, d.order);
    for (int i = 0; i < n; ++i) {
      if (ev[i] == 0.0) continue;
      for (int j = 0; j < n; ++j)
        if (ev[j] != 0.0) td.emplace_back(i, j, d.gain * ev[i] * ev[j]);
    }
  }
  out.M.resize(n, n);
  out.K.resize(n, n);
  out.D.resize(n, n);
  out.M.setFromTriplets(tm.begin(), tm.end());
  out.K.setFromTriplets(tk.begin(), tk.end());
  out.D.setFromTriplets(td.begin(), td.end());
  return out;
}

/// Galerkin load vector b_i = int f phi_i for f constant on each segment.
inline Eigen::VectorXd load_vector(const Mesh& m, const std::array<double, 5>& f) {
  const GaussRule q = gauss_legendre(4);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m.free_dofs);
  for (std::size_t e = 0; e < m.elements.size(); ++e) {
    const Element& el = m.elements[e];
    const double fe = f[el.segment];
    if (fe == 0.0) continue;
    const auto dofs = element_dofs(m, static_cast<int>(e));
    for (std::size_t g = 0; g < q.nodes.size(); ++g) {
      const auto phi = hermite_eval(el, q.nodes[g], 0);
      for (int i = 0; i < 4; ++i)
        if (dofs[i] >= 0) b[dofs[i]] += q.weights[g] * el.h() * fe * phi[i];
    }
  }
  return b;
}

/// Hermite interpolant coefficients of a C1 function (values and slopes at nodes).
template <class F, class DF>
Eigen::VectorXd interpolate(const Mesh& m, F&& f, DF&& df) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m.free_dofs);
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    if (m.dof_map[i][0] >= 0) u[m.dof_map[i][0]] = f(m.nodes[i]);
    if (m.dof_map[i][1] >= 0) u[m.dof_map[i][1]] = df(m.nodes[i]);
  }
  return u;
}

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Discrete phase-space state U = (u, v) with v = u_t.
template <class Scalar>
struct BasicState {
  Vec<Scalar> u;
  Vec<Scalar> v;

  static BasicState zero(int n) { return {Vec<Scalar>::Zero(n), Vec<Scalar>::Zero(n)}; }
  int size() const { return static_cast<int>(u.size()); }

  BasicState& operator+=(const BasicState& o) { u += o.u, v += o.v; return *this; }
  BasicState& operator-=(const BasicState& o) { u -= o.u, v -= o.v; return *this; }
  BasicState& operator*=(Scalar s) { u *= s, v *= s; return *this; }
  friend BasicState operator+(BasicState a, const BasicState& b) { return a += b; }
  friend BasicState operator-(BasicState a, const BasicState& b) { return a -= b; }
  friend BasicState operator*(Scalar s, BasicState a) { return a *= s; }
};

using StateVector = BasicState<double>;
using ComplexState = BasicState<Complex>;

inline ComplexState to_complex(const StateVector& s) { return {s.u.cast<Complex>(), s.v.cast<Complex>()}; }

inline void check_dims(const SystemMatrices& mats, int n) {
  if (n != mats.size()) throw Error(ErrorCode::invalid_argument, "state size does not match the mesh");
}

/// Energy inner product <U, W>_G = u^H K w + v^H M w.
template <class Scalar>
Complex g_inner(const SystemMatrices& mats, const BasicState<Scalar>& a, const BasicState<Scalar>& b) {
  check_dims(mats, a.size());
  return Complex(a.u.dot(mats.K * b.u) + a.v.dot(mats.M * b.v));
}

template <class Scalar>
double g_norm(const SystemMatrices& mats, const BasicState<Scalar>& a) {
  return std::sqrt(std::max(0.0, std::real(g_inner(mats, a, a))));
}

/// E = (u^T K u + v^T M v) / 2.
template <class Scalar>
double energy(const SystemMatrices& mats, const BasicState<Scalar>& s) {
  return 0.5 * std::real(g_inner(mats, s, s));
}

/// dE/dt = -v^T D v.
template <class Scalar>
double dissipation_rate(const SystemMatrices& mats, const BasicState<Scalar>& s) {
  check_dims(mats, s.size());
  return -std::real(s.v.dot(mats.D * s.v));
}

}  // namespace ebgevrey
