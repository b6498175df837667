// lpr: geometry, simulate, compare, equilibria, check.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lpr/acceptance.hpp"
#include "lpr/config.hpp"
#include "lpr/dynamics.hpp"
#include "lpr/equilibria.hpp"
#include "lpr/io.hpp"

namespace {

using namespace lpr;

struct Flags {
  std::string config, model, output, point, state, mode, momentum;
  std::vector<std::string> params;
  std::string seed, tol, t_end, dt, project_every, max_dev, max_iter;
  bool free_momentum = false;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::ParseError, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Config file first, then flags on top.
RunConfig resolve(const Flags& fl, const std::string& section) {
  RunConfig c = fl.config.empty() ? RunConfig{} : parse_config(read_file(fl.config));
  const auto set = [&](const std::string& sec, const std::string& key, const std::string& v) {
    if (!v.empty()) apply_setting(c, sec, key, v);
  };
  set("model", "name", fl.model);
  for (const std::string& kv : fl.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ParseError, "--param expects key=value, got '" + kv + "'");
    apply_setting(c, "model", kv.substr(0, eq), kv.substr(eq + 1));
  }
  set("", "seed", fl.seed);
  set("", "tol", fl.tol);
  set("", "output", fl.output);
  if (section == "geometry") set("geometry", "point", fl.point);
  if (section == "simulate") {
    set("simulate", "mode", fl.mode);
    set("simulate", "state", fl.state);
    set("simulate", "t_end", fl.t_end);
    set("simulate", "dt", fl.dt);
    set("simulate", "project_every", fl.project_every);
  }
  if (section == "compare") {
    set("compare", "state", fl.state);
    set("compare", "t_end", fl.t_end);
    set("compare", "dt", fl.dt);
    set("compare", "project_every", fl.project_every);
    set("compare", "max_dev", fl.max_dev);
  }
  if (section == "equilibria") {
    set("equilibria", "point", fl.point);
    set("equilibria", "momentum", fl.momentum);
    set("equilibria", "max_iter", fl.max_iter);
    if (fl.free_momentum) c.equilibria.fix_momentum = false;
  }
  validate_config(c);
  return c;
}

void emit(const RunConfig& c, const std::string& text) {
  if (c.output.empty()) std::cout << text;
  else atomic_write(c.output, text);
}

int run_geometry(const RunConfig& c) {
  const SystemModel m = build_model(c.model);
  const VectorXd q = c.geometry.point.empty() ? sample_point(m, c.seed) : to_vector(c.geometry.point);
  if (q.size() != m.n_p) fail(ErrorCode::OutOfRange, m.name + ": point takes " + std::to_string(m.n_p) + " numbers");
  emit(c, geometry_listing(m, q));
  return 0;
}

int run_simulate(const RunConfig& c) {
  const SystemModel m = build_model(c.model);
  const SimulateConfig& s = c.simulate;
  const IntegrateOptions opt{s.t_end, s.dt, s.project_every};
  const Trajectory tr = s.mode == Mode::Reduced ? integrate(m, resolve_reduced(m, s.state), Mode::Reduced, opt)
                                                : integrate(m, resolve_full(m, s.state), Mode::Full, opt);
  emit(c, trajectory_csv(m, tr));
  return 0;
}

int run_compare(const RunConfig& c) {
  const SystemModel m = build_model(c.model);
  const CompareConfig& s = c.compare;
  const IntegrateOptions opt{s.t_end, s.dt, s.project_every};
  const FullState s0 = resolve_full(m, s.state);
  const DeviationReport rep =
      compare_trajectories(m, integrate(m, s0, Mode::Full, opt), integrate(m, s0, Mode::Reduced, opt));
  std::string out;
  out += "model = " + m.name + "\n";
  out += "samples = " + std::to_string(rep.per_sample.size()) + "\n";
  out += "dev_q_star = " + fmt17(rep.q_star) + "\n";
  out += "dev_a = " + fmt17(rep.a) + "\n";
  out += "dev_omega = " + fmt17(rep.omega) + "\n";
  out += "dev_p = " + fmt17(rep.p) + "\n";
  const bool ok = rep.max_dev <= s.max_dev;
  char line[96];
  std::snprintf(line, sizeof line, "max_dev = %.6g %s %g\n", rep.max_dev, ok ? "<=" : ">", s.max_dev);
  out += line;
  emit(c, out);
  if (!ok) {
    std::cerr << "compare: max_dev " << rep.max_dev << " exceeds " << s.max_dev << "\n";
    return 1;
  }
  return 0;
}

int run_equilibria(const RunConfig& c) {
  const SystemModel m = build_model(c.model);
  const EquilibriaConfig& e = c.equilibria;
  const VectorXd q0 = e.point.empty() ? project_to_sigma(m, sample_point(m, c.seed)).first.q_star : to_vector(e.point);
  const VectorXd p0 = e.momentum.empty() ? VectorXd::Ones(m.n_g()) : to_vector(e.momentum);
  if (q0.size() != m.n_p) fail(ErrorCode::OutOfRange, m.name + ": point takes " + std::to_string(m.n_p) + " numbers");
  const EquilibriumResult r = solve_equilibrium({m, q0, p0, c.tol, e.max_iter, e.fix_momentum});
  const auto list = [](const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  nlohmann::ordered_json j;
  j["model"] = m.name;
  j["point"] = list(r.q_star.q_star);
  j["momentum"] = list(r.p);
  j["residual_norm"] = r.residual_norm;
  j["iterations"] = r.iterations;
  emit(c, j.dump(2) + "\n");
  return 0;
}

int run_check() {
  const std::vector<CriterionResult> res = run_acceptance(std::cout);
  for (const CriterionResult& r : res)
    if (!r.pass) return 1;
  return 0;
}

bool usage_error(ErrorCode code) {
  return code == ErrorCode::ParseError || code == ErrorCode::UnknownKey || code == ErrorCode::OutOfRange;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced dynamics on principal bundles in dependent coordinates"};
  app.require_subcommand(1);
  Flags fl;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", fl.config, "config file");
    sub->add_option("--model", fl.model, "planar-rotor, hopf or twisted-su2");
    sub->add_option("--param", fl.params, "model parameter key=value");
    sub->add_option("--seed", fl.seed, "seed");
    sub->add_option("--tol", fl.tol, "tolerance");
    sub->add_option("-o,--output", fl.output, "output file");
  };
  CLI::App* geo = app.add_subcommand("geometry", "print the geometry cache at a point");
  common(geo);
  geo->add_option("--point", fl.point, "ambient point, comma separated");
  CLI::App* sim = app.add_subcommand("simulate", "integrate and write a CSV trajectory");
  common(sim);
  sim->add_option("--mode", fl.mode, "full or reduced");
  sim->add_option("--state", fl.state, "[full:]Q,Qdot or reduced:q*,omega,p,a");
  sim->add_option("--t-end", fl.t_end, "final time");
  sim->add_option("--dt", fl.dt, "step");
  sim->add_option("--project-every", fl.project_every, "steps between projections, 0 disables");
  CLI::App* cmp = app.add_subcommand("compare", "full vs reduced deviation report");
  common(cmp);
  cmp->add_option("--state", fl.state, "[full:]Q,Qdot or reduced:q*,omega,p,a");
  cmp->add_option("--t-end", fl.t_end, "final time");
  cmp->add_option("--dt", fl.dt, "step");
  cmp->add_option("--project-every", fl.project_every, "steps between projections, 0 disables");
  cmp->add_option("--max-dev", fl.max_dev, "pass threshold");
  CLI::App* eqm = app.add_subcommand("equilibria", "solve for a relative equilibrium");
  common(eqm);
  eqm->add_option("--point", fl.point, "initial guess on the gauge surface");
  eqm->add_option("--momentum", fl.momentum, "momentum (initial guess when free)");
  eqm->add_option("--max-iter", fl.max_iter, "iteration budget");
  eqm->add_flag("--free-momentum", fl.free_momentum, "solve for the momentum too");
  CLI::App* chk = app.add_subcommand("check", "run the acceptance suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (chk->parsed()) return run_check();
    if (geo->parsed()) return run_geometry(resolve(fl, "geometry"));
    if (sim->parsed()) return run_simulate(resolve(fl, "simulate"));
    if (cmp->parsed()) return run_compare(resolve(fl, "compare"));
    if (eqm->parsed()) return run_equilibria(resolve(fl, "equilibria"));
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return usage_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
