// ebgevrey: command-line front end for the clamped beam with localized damping.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <ebgevrey/ebgevrey.hpp>

namespace fs = std::filesystem;
using namespace ebgevrey;

namespace {

enum Exit { ok = 0, acceptance_failure = 1, config_error = 2, io_failure = 3, numerical = 4 };

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::missing_key:
    case ErrorCode::unknown_key:
    case ErrorCode::malformed_line:
    case ErrorCode::ordering_violation:
    case ErrorCode::non_positive_coefficient:
    case ErrorCode::point_on_interface:
    case ErrorCode::invalid_argument:
    case ErrorCode::on_discontinuity:
    case ErrorCode::out_of_domain:
      return config_error;
    case ErrorCode::io_error:
      return io_failure;
    default:
      return numerical;
  }
}

struct Global {
  std::string config;
  std::string out = ".";
  int threads = 1;
  std::uint64_t seed = 12345;
};

struct LoadedConfig {
  BeamConfig config;
  std::string digest;
  std::string source;
};

std::string config_text(const BeamConfig& c) {
  std::string s;
  for (const auto& [k, v] : to_raw(c)) s += k + " = " + io::num(v) + "\n";
  return s;
}

LoadedConfig load(const Global& g, DampingPolicy policy, bool global_viscous = false) {
  LoadedConfig lc;
  if (g.config.empty()) {
    lc.config = default_config();
    lc.source = "built-in default";
    lc.digest = io::sha256_hex(config_text(lc.config));
  } else {
    const std::string text = read_text_file(g.config);
    lc.config = validate_config(parse_config_text(text), policy);
    lc.source = g.config;
    lc.digest = io::sha256_hex(text);
  }
  if (global_viscous) lc.config.extent = ViscousExtent::global;
  return lc;
}

std::array<int, 5> per_segment(int n_total) {
  const int m = std::max(1, (n_total + 4) / 5);
  return {m, m, m, m, m};
}

fs::path out_path(const Global& g, const std::string& name) { return fs::path(g.out) / name; }

void write_report(const Global& g, const std::string& command, const LoadedConfig& lc,
                  std::vector<io::Json::Member> params, const std::vector<std::string>& outputs,
                  std::vector<io::Json> checks = {}) {
  std::vector<io::Json> files;
  for (const auto& o : outputs) files.emplace_back(o);
  const std::string name = command + "_report.json";
  files.emplace_back(out_path(g, name).string());
  const io::Json report = io::Json::object({{"command", command},
                                            {"config", lc.source},
                                            {"config_digest", lc.digest},
                                            {"parameters", io::Json::object(params)},
                                            {"outputs", io::Json::array(files)},
                                            {"checks", io::Json::array(checks)}});
  io::write_atomic(out_path(g, name), report.str() + "\n");
}

// ---------------------------------------------------------------------------

int cmd_validate(const Global& g, bool allow_undamped) {
  if (g.config.empty()) {
    std::cerr << "validate: --config is required\n";
    return config_error;
  }
  std::string text;
  try {
    text = read_text_file(g.config);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return io_failure;
  }
  try {
    const BeamConfig c = validate_config(parse_config_text(text),
                                         allow_undamped ? DampingPolicy::allow_zero_damping : DampingPolicy::strict);
    std::cout << "valid" << (c.undamped() ? " (conservative)" : "") << "\n";
    return ok;
  } catch (const ConfigError& e) {
    for (const auto& i : e.issues()) std::cerr << to_string(i.code) << ": " << i.message << "\n";
    return config_error;
  }
}

struct SpectrumArgs {
  int n = 64;
  std::vector<double> rect;
  bool oracle = false;
  bool global_viscous = false;
};

int cmd_spectrum(const Global& g, const SpectrumArgs& a) {
  const LoadedConfig lc = load(g, DampingPolicy::allow_zero_damping, a.global_viscous);
  const BeamConfig& c = lc.config;
  const Mesh mesh = build_mesh(c, per_segment(a.n));
  const SystemMatrices mats = assemble(mesh, c);
  const EigenResult r = eigen_dense(mats);

  std::vector<std::optional<double>> disc;
  double max_disc = 0.0;
  std::vector<RefinedRoot> roots;
  if (a.oracle) {
    disc.assign(r.size(), std::nullopt);
    for (const Complex z : oscillatory_modes(r, 10)) {
      const RefinedRoot root = refine_root(z, c);
      roots.push_back(root);
      const double d = std::abs(z - root.lambda) / std::abs(root.lambda);
      max_disc = std::max(max_disc, d);
      for (std::size_t i = 0; i < r.size(); ++i)
        if (r.eigenvalues[i] == z) disc[i] = d;
    }
  }

  std::vector<std::string> outputs;
  io::write_atomic(out_path(g, "spectrum.csv"), io::spectrum_csv(r, disc));
  outputs.push_back(out_path(g, "spectrum.csv").string());
  if (a.oracle) {
    io::write_atomic(out_path(g, "roots.csv"), io::roots_csv(roots));
    outputs.push_back(out_path(g, "roots.csv").string());
  }

  int unstable = 0;
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r.certified[i] && !(r.eigenvalues[i].real() < 0.0)) ++unstable;

  std::vector<io::Json::Member> params = {{"n", a.n},
                                          {"mesh", mesh.tag()},
                                          {"unknowns", mats.size()},
                                          {"eigenvalues", r.size()},
                                          {"certified", r.certified_count()},
                                          {"abscissa", r.abscissa},
                                          {"certified_with_re_ge_0", unstable}};
  if (c.undamped()) params.emplace_back("note", "conservative");
  if (a.oracle) params.emplace_back("max_oracle_discrepancy", max_disc);
  if (a.rect.size() == 4) {
    const RootCount rc = count_roots({a.rect[0], a.rect[1], a.rect[2], a.rect[3]}, c);
    int fem = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const Complex z = r.eigenvalues[i];
      fem += r.certified[i] && z.real() > a.rect[0] && z.real() < a.rect[1] && z.imag() > a.rect[2] && z.imag() < a.rect[3];
    }
    params.emplace_back("rect_roots", rc.count);
    params.emplace_back("rect_certified_fem", fem);
  }
  write_report(g, "spectrum", lc, params, outputs);

  fmt::print("abscissa {} over {} certified of {} eigenvalues{}\n", io::num(r.abscissa), r.certified_count(), r.size(),
             c.undamped() ? " (conservative)" : "");
  if (a.oracle) fmt::print("max oracle discrepancy over first {} modes: {}\n", roots.size(), io::num(max_disc));
  return ok;
}

struct ResolventArgs {
  double lmin = 1e2;
  double lmax = 1e6;
  int ppd = 8;
  std::string n_policy = "resolving";
  double ppw = 8.0;
  int n = 40;
  bool point = false;
  bool no_companion = false;
  bool global_viscous = false;
};

int cmd_resolvent(const Global& g, const ResolventArgs& a) {
  const LoadedConfig lc = load(g, DampingPolicy::allow_zero_damping, a.global_viscous);
  ScanOptions opt;
  opt.lambda_min = a.lmin;
  opt.lambda_max = a.lmax;
  opt.points_per_decade = a.ppd;
  opt.mode = a.point ? ScanMode::point : ScanMode::window_sup;
  opt.policy.elements_per_wavelength = a.ppw;
  if (a.n_policy == "fixed") opt.policy.fixed_per_segment = per_segment(a.n)[0];
  opt.companion = !a.no_companion;
  opt.threads = g.threads;

  const ResolventScan s = scan(lc.config, opt);
  io::write_atomic(out_path(g, "scan.csv"), io::scan_csv(s));
  const GevreyReport rep = classify(s);
  io::write_atomic(out_path(g, "classification.json"), io::classification_json(rep).str() + "\n");
  write_report(g, "resolvent", lc,
               {{"lambda_min", a.lmin},
                {"lambda_max", a.lmax},
                {"points_per_decade", a.ppd},
                {"n_policy", a.n_policy},
                {"elements_per_wavelength", a.ppw},
                {"mode", a.point ? "point" : "window"},
                {"extent", a.global_viscous ? "global" : "localized"}},
               {out_path(g, "scan.csv").string(), out_path(g, "classification.json").string()});
  fmt::print("gevrey4_consistent={} analytic_excluded={} gevrey2_excluded={} C={} slope={}\n", rep.gevrey4_consistent,
             rep.analytic_excluded, rep.gevrey2_excluded, io::num(rep.bound_constant), io::num(rep.fitted_slope));
  return ok;
}

struct SimulateArgs {
  double T = 3.0;
  double dt = 2e-5;
  int n = 30;
  int stride = 50;
};

int cmd_simulate(const Global& g, const SimulateArgs& a) {
  const LoadedConfig lc = load(g, DampingPolicy::allow_zero_damping);
  const BeamConfig& c = lc.config;
  const auto counts = per_segment(a.n);
  const SystemMatrices mats = assemble(build_mesh(c, counts), c);
  const Trajectory t = simulate(mats, initial_state(mats, g.seed), a.T, a.dt);

  bool monotone = true;
  for (std::size_t k = 0; k + 1 < t.size(); ++k)
    if (t.energies[k + 1] > t.energies[k] + std::abs(t.step_residuals[k])) monotone = false;

  std::vector<std::string> outputs = {out_path(g, "trajectory.csv").string()};
  io::write_atomic(out_path(g, "trajectory.csv"), io::trajectory_csv(t, a.stride));
  std::vector<io::Json::Member> params = {{"T", a.T},
                                          {"dt", a.dt},
                                          {"n", a.n},
                                          {"stride", a.stride},
                                          {"seed", static_cast<long>(g.seed)},
                                          {"monotone", monotone},
                                          {"max_abs_balance", t.max_abs_balance()},
                                          {"max_abs_step_residual", t.max_abs_step_residual()}};
  if (c.undamped()) {
    params.emplace_back("note", "conservative");
    write_report(g, "simulate", lc, params, outputs);
    fmt::print("conservative: max relative energy drift {}\n",
               io::num(std::abs(t.energies.back() - t.energies.front()) / t.energies.front()));
    return ok;
  }
  if (!std::isfinite(t.fitted_rate)) {
    write_report(g, "simulate", lc, params, outputs);
    std::cerr << "InsufficientDecay: energy did not decay enough for a fit; lengthen --T\n";
    return numerical;
  }
  const AbscissaEstimate ab = abscissa_study(c, counts[0]);
  io::write_atomic(out_path(g, "decay.json"), io::decay_json(t.fitted_rate, t.fit_stderr, ab.resolved).str() + "\n");
  outputs.push_back(out_path(g, "decay.json").string());
  params.emplace_back("abscissa_raw", ab.value);
  write_report(g, "simulate", lc, params, outputs);
  fmt::print("rate {} +- {}, 2|abscissa| {}, ratio {}{}\n", io::num(t.fitted_rate), io::num(t.fit_stderr),
             io::num(2.0 * std::abs(ab.resolved)), io::num(t.fitted_rate / (2.0 * std::abs(ab.resolved))),
             monotone ? "" : " (energy not monotone)");
  return ok;
}

int cmd_verify(const Global& g, const std::vector<int>& only) {
  const LoadedConfig lc = load(g, DampingPolicy::allow_zero_damping);
  acceptance::Options opt;
  opt.threads = g.threads;
  opt.seed = g.seed;
  std::vector<io::Json> checks;
  int failed = 0;
  for (const auto& cr : acceptance::criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), cr.id) == only.end()) continue;
    const auto out = acceptance::run(cr, lc.config, opt);
    fmt::print("{}\n", acceptance::summary_line(out));
    std::fflush(stdout);
    checks.push_back(acceptance::to_json(out));
    failed += out.status == acceptance::Status::fail;
  }
  write_report(g, "verify", lc, {{"seed", static_cast<long>(g.seed)}, {"failed", failed}}, {}, checks);
  return failed == 0 ? ok : acceptance_failure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clamped Euler-Bernoulli beam with localized Kelvin-Voigt damping and point dampers"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--config", g.config, "Configuration file (key = value); built-in default if omitted");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for the resolvent scan")->capture_default_str()->check(
      CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "Seed for random initial data")->capture_default_str();

  bool allow_undamped = false;
  auto* validate = app.add_subcommand("validate", "Check a configuration file");
  validate->add_flag("--allow-undamped", allow_undamped, "Accept zero damping gains");

  SpectrumArgs sa;
  auto* spectrum = app.add_subcommand("spectrum", "FEM spectrum of A_h");
  spectrum->add_option("--n", sa.n, "Total elements (rounded up to a multiple of 5)")->capture_default_str()->check(
      CLI::PositiveNumber);
  spectrum->add_option("--rect", sa.rect, "re_min re_max im_min im_max: count characteristic roots inside")
      ->expected(4);
  spectrum->add_flag("--oracle", sa.oracle, "Refine the first 10 oscillatory modes on the characteristic determinant");
  spectrum->add_flag("--global-viscous", sa.global_viscous, "Kelvin-Voigt damping on the whole beam");
  spectrum->footer(
      "spectrum.csv columns: re_lambda,im_lambda,residual,certified\n"
      "  re_lambda    real part of the eigenvalue of A_h\n"
      "  im_lambda    imaginary part\n"
      "  residual     scaled quadratic residual of the pair\n"
      "  certified    1 if residual <= 1e-8\n"
      "  discrepancy  (--oracle) relative distance to the refined root\n"
      "roots.csv columns: re_lambda,im_lambda,abs_det,iterations");

  ResolventArgs ra;
  auto* resolvent = app.add_subcommand("resolvent", "Resolvent norm scan along the imaginary axis");
  resolvent->add_option("--lmin", ra.lmin, "Lower end of the scan")->capture_default_str()->check(
      CLI::Range(1.0, std::numeric_limits<double>::max()));
  resolvent->add_option("--lmax", ra.lmax, "Upper end of the scan")->capture_default_str();
  resolvent->add_option("--ppd", ra.ppd, "Grid points per decade")->capture_default_str()->check(CLI::PositiveNumber);
  resolvent->add_option("--n-policy", ra.n_policy, "resolving: elements follow the bending wavelength; fixed: --n elements")
      ->capture_default_str()
      ->check(CLI::IsMember({"resolving", "fixed"}));
  resolvent->add_option("--ppw", ra.ppw, "Elements per bending wavelength")->capture_default_str();
  resolvent->add_option("--n", ra.n, "Total elements for --n-policy fixed")->capture_default_str();
  resolvent->add_flag("--point", ra.point, "Evaluate at grid points instead of window suprema");
  resolvent->add_flag("--no-companion", ra.no_companion, "Skip the doubled-mesh convergence check");
  resolvent->add_flag("--global-viscous", ra.global_viscous, "Kelvin-Voigt damping on the whole beam");
  resolvent->footer(
      "scan.csv columns: lambda,norm,scaled_norm,mesh_n,converged\n"
      "  lambda       grid point (window upper end)\n"
      "  norm         ||(i lambda - A_h)^-1|| in the energy norm\n"
      "  scaled_norm  lambda^(1/4) * norm\n"
      "  mesh_n       elements of the primary mesh\n"
      "  converged    1 if the doubled mesh agrees to 5 %\n"
      "classification.json: gevrey4_consistent, analytic_excluded, gevrey2_excluded, bound_constant, fitted_slope");

  SimulateArgs ma;
  auto* sim = app.add_subcommand("simulate", "Implicit-midpoint time integration");
  sim->add_option("--T", ma.T, "Final time")->capture_default_str();
  sim->add_option("--dt", ma.dt, "Time step")->capture_default_str();
  sim->add_option("--n", ma.n, "Total elements (rounded up to a multiple of 5)")->capture_default_str()->check(
      CLI::PositiveNumber);
  sim->add_option("--stride", ma.stride, "Write every k-th step")->capture_default_str()->check(CLI::PositiveNumber);
  sim->footer(
      "trajectory.csv columns: t,energy,balance_residual\n"
      "  t                 time\n"
      "  energy            (u'Ku + v'Mv) / 2\n"
      "  balance_residual  E(t) - E(0) + trapezoid integral of v'Dv\n"
      "decay.json: rate, stderr, abscissa_ref, ratio");

  std::vector<int> only;
  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  verify->add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 9));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : config_error;
  }

  try {
    fs::create_directories(g.out);
  } catch (const std::exception& e) {
    std::cerr << "IOError: cannot create " << g.out << "\n";
    return io_failure;
  }

  try {
    if (*validate) return cmd_validate(g, allow_undamped);
    if (*spectrum) return cmd_spectrum(g, sa);
    if (*resolvent) {
      if (!(ra.lmax > ra.lmin)) {
        std::cerr << "--lmax must exceed --lmin\n";
        return config_error;
      }
      return cmd_resolvent(g, ra);
    }
    if (*sim) return cmd_simulate(g, ma);
    if (*verify) return cmd_verify(g, only);
  } catch (const ConfigError& e) {
    for (const auto& i : e.issues()) std::cerr << to_string(i.code) << ": " << i.message << "\n";
    return config_error;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "IOError: " << e.what() << "\n";
    return io_failure;
  }
  return ok;
}
