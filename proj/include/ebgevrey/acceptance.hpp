#pragma once

// The nine acceptance checks, shared by the `verify` command and the
// standalone acceptance binary.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "beam_model.hpp"
#include "errors.hpp"
#include "fem_assembly.hpp"
#include "io.hpp"
#include "resolvent.hpp"
#include "semianalytic.hpp"
#include "spectrum.hpp"
#include "timestepper.hpp"

namespace ebgevrey::acceptance {

enum class Status { pass, fail, skipped };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::pass: return "PASS";
    case Status::fail: return "FAIL";
    case Status::skipped: return "SKIP";
  }
  return "?";
}

struct Outcome {
  int id = 0;
  std::string title;
  Status status = Status::fail;
  std::vector<std::pair<std::string, double>> values;
  std::string note;
  double seconds = 0.0;
  double budget = 0.0;

  void set(const std::string& k, double v) { values.emplace_back(k, v); }
};

struct Options {
  int threads = 1;
  std::uint64_t seed = 20240611;
};

/// j-th positive root of cos x cosh x = 1, by bisection on cos x - 1/cosh x.
inline double clamped_beta(int j) {
  auto f = [](double x) { return std::cos(x) - 1.0 / std::cosh(x); };
  double a = (j + 0.5) * std::numbers::pi - 0.5, b = (j + 0.5) * std::numbers::pi + 0.5;
  if (j == 1) a = 4.0, b = 5.5;
  for (int i = 0; i < 200 && b - a > 1e-14 * b; ++i) {
    const double m = 0.5 * (a + b);
    ((f(a) < 0.0) == (f(m) < 0.0) ? a : b) = m;
  }
  return 0.5 * (a + b);
}

namespace detail {

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline StateVector random_state(int n, std::mt19937_64& rng) {
  auto draw = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
  StateVector s = StateVector::zero(n);
  for (int i = 0; i < n; ++i) s.u[i] = draw();
  for (int i = 0; i < n; ++i) s.v[i] = draw();
  return s;
}

}  // namespace detail

// 1. Re<A_h U, U>_G + v^T D v = 0 for random states.
inline void dissipativity(const BeamConfig& c, const Options& opt, Outcome& out) {
  const auto mats = assemble(build_mesh(c, 20), c);
  const FirstOrderOperator op(mats);
  std::mt19937_64 rng(opt.seed);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const StateVector s = detail::random_state(mats.size(), rng);
    const StateVector as = op.apply(s);
    const double lhs = std::real(g_inner(mats, s, as));
    const double vdv = -dissipation_rate(mats, s);
    worst = std::max(worst, std::abs(lhs + vdv) / (g_norm(mats, s) * g_norm(mats, as)));
  }
  out.set("n", mats.size());
  out.set("max_relative_defect", worst);
  out.status = worst <= 1e-12 ? Status::pass : Status::fail;
}

// 2. Undamped uniform beam: first five frequencies against (beta_j / ell)^2 sqrt(alpha / rho).
inline void conservative_spectrum(const BeamConfig& c, const Options&, Outcome& out) {
  if (!c.uniform()) {
    out.status = Status::skipped;
    out.note = "coefficients are not uniform";
    return;
  }
  const BeamConfig u = undamped_config(c);
  const std::vector<int> levels = {4, 8, 16, 32};
  std::vector<std::vector<double>> err(5);
  double worst_re = 0.0;
  for (int nps : levels) {
    const auto r = eigen_dense(assemble(build_mesh(u, nps), u));
    const auto modes = oscillatory_modes(r, 5);
    if (modes.size() < 5) throw Error(ErrorCode::no_certified_pairs, "fewer than five certified modes");
    for (int j = 0; j < 5; ++j) {
      const double beta = clamped_beta(j + 1) / u.ell;
      const double exact = beta * beta * std::sqrt(u.alpha1 / u.rho1);
      err[j].push_back(std::abs(modes[j].imag() - exact) / exact);
      worst_re = std::max(worst_re, std::abs(modes[j].real()) / std::abs(modes[j]));
    }
  }
  double endpoint = 0.0, omin = 1e9, omax = -1e9;
  std::vector<double> lh;
  for (int nps : levels) lh.push_back(std::log(1.0 / nps));
  for (int j = 0; j < 5; ++j) {
    endpoint = std::max(endpoint, err[j].back());
    std::vector<double> le;
    for (double e : err[j]) le.push_back(std::log(e));
    const double order = detail::ls_slope(lh, le);
    out.set(fmt::format("order_mode{}", j + 1), order);
    omin = std::min(omin, order);
    omax = std::max(omax, order);
  }
  out.set("endpoint_n_per_segment", levels.back());
  out.set("endpoint_max_rel_error", endpoint);
  out.set("max_rel_real_part", worst_re);
  out.status = endpoint <= 1e-6 && omin >= 3.5 && omax <= 4.5 && worst_re <= 1e-10 ? Status::pass : Status::fail;
}

// 3. Every certified eigenvalue in the open left half-plane; no characteristic root in [0,10] x [-1e4, 1e4].
inline void stability(const BeamConfig& c, const Options&, Outcome& out) {
  if (c.undamped()) {
    out.status = Status::skipped;
    out.note = "conservative configuration";
    return;
  }
  const auto mats = assemble(build_mesh(c, 20), c);
  const auto r = eigen_dense(mats);
  int bad = 0;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r.certified[i] && !(r.eigenvalues[i].real() < 0.0)) ++bad;
  const RootCount rc = count_roots({0.0, 10.0, -1e4, 1e4}, c);
  out.set("n", mats.size());
  out.set("certified", static_cast<double>(r.certified_count()));
  out.set("eigenvalues", static_cast<double>(r.size()));
  out.set("abscissa", r.abscissa);
  out.set("certified_with_re_ge_0", bad);
  out.set("roots_in_rectangle", rc.count);
  out.set("contour_samples", static_cast<double>(rc.samples));
  out.status = bad == 0 && rc.count == 0 && r.certified_count() > 0 ? Status::pass : Status::fail;
}

// 4. First ten oscillatory FEM eigenvalues against refined characteristic roots.
inline void oracle_spectrum(const BeamConfig& c, const Options&, Outcome& out) {
  const int coarse_n = 13, fine_n = 26;
  const auto fine = oscillatory_modes(eigen_dense(assemble(build_mesh(c, fine_n), c)), 10);
  const auto coarse = oscillatory_modes(eigen_dense(assemble(build_mesh(c, coarse_n), c)), 10);
  if (fine.size() < 10 || coarse.size() < 10) throw Error(ErrorCode::no_certified_pairs, "fewer than ten certified modes");
  std::vector<Complex> roots;
  for (const auto& z : fine) roots.push_back(refine_root(z, c).lambda);
  for (std::size_t i = 0; i < roots.size(); ++i)
    for (std::size_t j = i + 1; j < roots.size(); ++j)
      if (std::abs(roots[i] - roots[j]) <= 1e-8 * std::abs(roots[i]))
        throw Error(ErrorCode::no_convergence, "two seeds refined to the same root");
  double e_fine = 0.0, e_coarse = 0.0;
  for (int j = 0; j < 10; ++j) {
    e_fine = std::max(e_fine, std::abs(fine[j] - roots[j]) / std::abs(roots[j]));
    e_coarse = std::max(e_coarse, std::abs(coarse[j] - roots[j]) / std::abs(roots[j]));
  }
  const double order = std::log2(e_coarse / e_fine);
  out.set("n_per_segment", fine_n);
  out.set("max_rel_discrepancy", e_fine);
  out.set("max_rel_discrepancy_half_mesh", e_coarse);
  out.set("order", order);
  out.status = e_fine <= 1e-4 && order >= 3.5 && order <= 4.5 ? Status::pass : Status::fail;
}

// 5. FEM resolvent against the closed-form solution for piecewise-constant f2.
inline void oracle_resolvent_check(const BeamConfig& c, const Options&, Outcome& out) {
  if (c.undamped()) {
    out.status = Status::skipped;
    out.note = "conservative configuration: the imaginary axis carries the spectrum";
    return;
  }
  const std::array<double, 5> f = {0.0, 0.0, 1.0, 0.0, 0.0};
  const MeshPolicy policy{128.0, 4, 0};
  double worst = 0.0;
  for (double lam : {1e3, 1e4, 1e5}) {
    const OracleSolution exact = oracle_resolvent(lam, f, c);
    const Mesh mesh = build_mesh(c, resolving_counts(c, lam, policy));
    const SystemMatrices mats = assemble(mesh, c);
    ComplexState rhs = ComplexState::zero(mats.size());
    rhs.v = BandedCholesky(mats.M).solve<double>(load_vector(mesh, f)).cast<Complex>();
    const double fem = g_norm(mats, resolvent_solve(mats, lam, rhs));
    const double rel = std::abs(fem - exact.h_norm) / exact.h_norm;
    out.set(fmt::format("rel_diff_lambda_{:.0e}", lam), rel);
    out.set(fmt::format("elements_lambda_{:.0e}", lam), static_cast<double>(mesh.elements.size()));
    worst = std::max(worst, rel);
  }
  out.set("elements_per_wavelength", policy.elements_per_wavelength);
  out.status = worst <= 1e-6 ? Status::pass : Status::fail;
}

// 6. Gevrey-4 resolvent bound over [1e2, 1e6].
inline void gevrey_bound(const BeamConfig& c, const Options& opt, Outcome& out) {
  if (c.undamped()) {
    out.status = Status::skipped;
    out.note = "conservative configuration: spectrum on the imaginary axis";
    return;
  }
  ScanOptions so;
  so.threads = opt.threads;
  const ResolventScan s = scan(c, so);
  const GevreyReport r = classify(s);
  out.set("bound_constant", r.bound_constant);
  out.set("max_over_last", r.bounded_ratio);
  out.set("max_in_first_decade", r.max_in_first_decade);
  out.set("growth_lambda_half_norm", r.growth_gevrey2);
  out.set("growth_lambda_norm", r.growth_analytic);
  out.set("fitted_slope", r.fitted_slope);
  out.set("converged_decades", r.converged_decades);
  out.status = r.gevrey4_consistent && r.max_in_first_decade && r.gevrey2_excluded && r.analytic_excluded
                   ? Status::pass
                   : Status::fail;
}

// 7. Energy conservation in the undamped limit; monotone decay and O(dt^2) balance with damping.
inline void energy_identity(const BeamConfig& c, const Options& opt, Outcome& out) {
  const BeamConfig u = undamped_config(c);
  const auto cons = assemble(build_mesh(u, 6), u);
  const Trajectory tc = simulate(cons, initial_state(cons, opt.seed), 10.0, 1e-3, false);
  double drift = 0.0;
  for (double e : tc.energies) drift = std::max(drift, std::abs(e - tc.energies.front()) / tc.energies.front());
  out.set("undamped_steps", static_cast<double>(tc.size() - 1));
  out.set("undamped_max_rel_drift", drift);
  const bool conserved = drift <= 1e-11;
  if (c.undamped()) {
    out.status = conserved ? Status::pass : Status::fail;
    out.note = "damped half skipped";
    return;
  }
  const auto mats = assemble(build_mesh(c, 6), c);
  const StateVector u0 = initial_state(mats, opt.seed);
  const double dt = 2.5e-5;
  const Trajectory a = simulate(mats, u0, 0.5, dt, false);
  const Trajectory b = simulate(mats, u0, 0.5, 0.5 * dt, false);
  bool monotone = true;
  for (const Trajectory* t : {&a, &b})
    for (std::size_t k = 0; k + 1 < t->size(); ++k)
      if (t->energies[k + 1] > t->energies[k] + std::abs(t->step_residuals[k])) monotone = false;
  const double ratio = a.max_abs_balance() / b.max_abs_balance();
  out.set("dt", dt);
  out.set("monotone", monotone);
  out.set("balance_dt", a.max_abs_balance());
  out.set("balance_dt_half", b.max_abs_balance());
  out.set("halving_ratio", ratio);
  out.status = conserved && monotone && ratio >= 3.0 && ratio <= 5.0 ? Status::pass : Status::fail;
}

// 8. Energy decay rate against twice the spectral abscissa on the same mesh.
inline void decay_rate(const BeamConfig& c, const Options& opt, Outcome& out) {
  if (c.undamped()) {
    out.status = Status::skipped;
    out.note = "conservative configuration";
    return;
  }
  const int nps = 6;
  const auto mats = assemble(build_mesh(c, nps), c);
  const EigenResult r = eigen_dense(mats);
  const AbscissaEstimate ab = abscissa_study(r, eigen_dense(assemble(build_mesh(c, 2 * nps), c)));
  const Trajectory t = simulate(mats, initial_state(mats, opt.seed), 3.0, 2e-5);
  const double ratio = t.fitted_rate / (2.0 * std::abs(ab.resolved));
  out.set("n_per_segment", nps);
  out.set("abscissa", ab.value);
  out.set("abscissa_resolved", ab.resolved);
  out.set("fitted_rate", t.fitted_rate);
  out.set("fit_stderr", t.fit_stderr);
  out.set("ratio", ratio);
  out.status = std::isfinite(ratio) && std::abs(ratio - 1.0) <= 0.1 ? Status::pass : Status::fail;
}

// 9. ||A_h^{-1}||_G finite and mesh-stable.
inline void zero_resolvent(const BeamConfig& c, const Options&, Outcome& out) {
  const double a = resolvent_norm(assemble(build_mesh(c, 8), c), 0.0);
  const double b = resolvent_norm(assemble(build_mesh(c, 16), c), 0.0);
  const double rel = std::abs(a - b) / b;
  out.set("norm_n8", a);
  out.set("norm_n16", b);
  out.set("rel_change", rel);
  out.status = std::isfinite(a) && std::isfinite(b) && rel <= 0.02 ? Status::pass : Status::fail;
}

struct Criterion {
  int id;
  const char* title;
  double budget;
  void (*run)(const BeamConfig&, const Options&, Outcome&);
};

inline const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "dissipativity", 5.0, dissipativity},
      {2, "conservative-limit spectrum", 60.0, conservative_spectrum},
      {3, "strong and exponential stability", 120.0, stability},
      {4, "eigenvalue oracle equivalence", 120.0, oracle_spectrum},
      {5, "resolvent oracle", 120.0, oracle_resolvent_check},
      {6, "Gevrey-4 resolvent bound", 900.0, gevrey_bound},
      {7, "energy identity in time", 60.0, energy_identity},
      {8, "spectrum-determined decay", 120.0, decay_rate},
      {9, "resolvent at zero", 10.0, zero_resolvent},
  };
  return list;
}

inline Outcome run(const Criterion& cr, const BeamConfig& c, const Options& opt) {
  Outcome out;
  out.id = cr.id;
  out.title = cr.title;
  out.budget = cr.budget;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    cr.run(c, opt, out);
  } catch (const Error& e) {
    out.status = Status::fail;
    out.note = e.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (out.status == Status::pass && out.seconds > out.budget) {
    out.status = Status::fail;
    out.note = "over the runtime budget";
  }
  return out;
}

inline std::string summary_line(const Outcome& o) {
  std::string line = fmt::format("{} criterion {} {}:", to_string(o.status), o.id, o.title);
  for (const auto& [k, v] : o.values) line += fmt::format(" {}={:.6g}", k, v);
  if (!o.note.empty()) line += " (" + o.note + ")";
  line += fmt::format(" [{:.2f} s / {:.0f} s]", o.seconds, o.budget);
  return line;
}

inline io::Json to_json(const Outcome& o) {
  std::vector<io::Json::Member> values;
  for (const auto& [k, v] : o.values) values.emplace_back(k, io::Json(v));
  return io::Json::object({{"id", o.id},
                           {"title", o.title},
                           {"status", o.status == Status::pass ? "pass" : o.status == Status::fail ? "fail" : "skipped"},
                           {"measured", io::Json::object(values)},
                           {"note", o.note},
                           {"budget_seconds", o.budget}});
}

}  // namespace ebgevrey::acceptance
