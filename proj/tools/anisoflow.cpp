// anisoflow command-line front end.
//
//   anisoflow solve-elliptic --config run.cfg --out results/
//   anisoflow evolve --config run.cfg --out results/ --seed 3
//   anisoflow selftest
//
// The JSON report goes to stdout and, with --out, also to DIR/report.json
// next to the field files; "files" lists them relative to DIR. Failures
// print {"error": {...}} on stderr.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "anisoflow/acceptance.hpp"
#include "anisoflow/certificates.hpp"
#include "anisoflow/energy.hpp"
#include "anisoflow/error.hpp"
#include "anisoflow/flow.hpp"
#include "anisoflow/io.hpp"
#include "anisoflow/oracle.hpp"
#include "anisoflow/parallel.hpp"
#include "anisoflow/pd_solver.hpp"

namespace af = anisoflow;
using nlohmann::json;

namespace {

struct Args {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::optional<int> max_iter;
  std::optional<double> gap_tol;
};

// Output directory handling; an empty `dir` means "report to stdout only".
class Output {
 public:
  explicit Output(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(dir_, ec);
      if (ec) throw af::IoError("cannot create output directory '" + dir_ + "': " + ec.message());
    }
  }

  bool enabled() const { return !dir_.empty(); }
  std::string path(const std::string& name) const { return (std::filesystem::path(dir_) / name).string(); }

  void field(const std::string& name, const af::ScalarField& f, json& files) const {
    if (!enabled()) return;
    af::write_field(path(name), f);
    files.push_back(name);
  }

  void finish(const json& report) const {
    if (enabled()) af::emit_report(report, path("report.json"));
    std::cout << report.dump(2) << '\n';
  }

 private:
  std::string dir_;
};

af::RunConfig load(const Args& args) {
  af::RunConfig config = af::load_config(args.config);
  if (args.max_iter) config.solve.max_iter = *args.max_iter;
  if (args.gap_tol) config.solve.gap_tol = *args.gap_tol;
  if (args.seed_given) config.solve.seed = args.seed;
  config.solve.validate();
  return config;
}

json header(const std::string& command, const af::RunConfig& config, const af::GridSpec& spec) {
  return {{"command", command},
          {"config", af::config_echo(config)},
          {"seed", config.solve.seed},
          {"grid", af::to_json(spec)}};
}

json energy_json(const af::EnergyBreakdown& e) {
  return {{"tv_block1", e.tv_block1},
          {"power_terms", e.power_terms},
          {"boundary_term", e.boundary_term},
          {"source_term", e.source_term},
          {"total", e.total}};
}

void write_dual(const Output& out, const af::BlockVectorField& z, const af::BoundaryField& trace,
                const af::GridSpec& spec, json& files) {
  if (!out.enabled()) return;
  af::write_vector_field(out.path("z"), z, spec);
  for (std::size_t a = 0; a < spec.ndim(); ++a) files.push_back(af::component_path("z", a));
  af::write_boundary_field(out.path("trace.anzf"), trace);
  files.push_back("trace.anzf");
}

int run_elliptic(const Args& args) {
  const auto config = load(args);
  const auto spec = config.grid();
  const auto f = af::load_field(config.f, spec, "f");
  const Output out(args.out);

  const auto result = af::solve_elliptic(f, spec, config.solve);
  const auto cert = af::check_weak_solution(result.u, result.z, f, spec, af::CertificateMode::elliptic,
                                            &result.trace, result.report.final_gap);
  json report = header("solve-elliptic", config, spec);
  json files = json::array();
  out.field("u.anzf", result.u, files);
  write_dual(out, result.z, result.trace, spec, files);
  report["report"] = af::to_json(result.report);
  report["certificate"] = af::to_json(cert);
  report["energy"] = energy_json(af::eval_J(result.u, f, spec));
  report["files"] = files;
  out.finish(report);
  return 0;
}

int run_resolvent(const Args& args) {
  const auto config = load(args);
  const auto spec = config.grid();
  const auto g = af::load_field(config.g, spec, "g");
  const Output out(args.out);

  const auto result = af::solve_resolvent(g, config.tau_time, spec, config.solve);
  af::ScalarField rhs = g;
  for (std::size_t c = 0; c < rhs.size(); ++c) rhs[c] = (g[c] - result.u[c]) / config.tau_time;
  const auto cert = af::check_weak_solution(result.u, result.z, rhs, spec, af::CertificateMode::parabolic,
                                            &result.trace, result.report.final_gap);
  json report = header("resolvent", config, spec);
  json files = json::array();
  out.field("u.anzf", result.u, files);
  out.field("v.anzf", rhs, files);
  write_dual(out, result.z, result.trace, spec, files);
  report["report"] = af::to_json(result.report);
  report["certificate"] = af::to_json(cert);
  report["energy"] = energy_json(af::eval_F(result.u, spec));
  report["files"] = files;
  out.finish(report);
  return 0;
}

int run_evolve(const Args& args) {
  const auto config = load(args);
  const auto spec = config.grid();
  const auto u0 = af::load_field(config.u0.present() ? config.u0 : config.g, spec, "u0");
  const Output out(args.out);

  af::FlowOptions opts;
  opts.solve = config.solve;
  opts.stride = config.stride;
  const auto traj = af::evolve(u0, spec, config.tau_time, config.steps, opts);

  json report = header("evolve", config, spec);
  json files = json::array();
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "state_%04zu.anzf", i);
    out.field(name, traj.states[i], files);
  }
  out.field("final.anzf", traj.final_state, files);
  if (config.steps > 0) write_dual(out, traj.last_z, traj.last_trace, spec, files);
  report["trajectory"] = af::to_json(traj);
  report["files"] = files;
  out.finish(report);
  return 0;
}

int run_check(const Args& args) {
  const auto config = load(args);
  const auto spec = config.grid();
  const auto u = af::load_field(config.u, spec, "u");
  if (!config.z) throw af::InvalidInput("check needs 'z' (component file prefix) in [io]");
  const auto z = af::read_vector_field(*config.z, spec);

  // rhs (or f) gives the elliptic form -div z = rhs; g gives the parabolic
  // form with rhs = (g - u) / tau_time.
  af::CertificateMode mode = af::CertificateMode::elliptic;
  af::ScalarField rhs(spec, 0.0);
  if (config.rhs.present()) {
    rhs = af::load_field(config.rhs, spec, "rhs");
  } else if (config.f.present()) {
    rhs = af::load_field(config.f, spec, "f");
  } else if (config.g.present()) {
    const auto g = af::load_field(config.g, spec, "g");
    for (std::size_t c = 0; c < rhs.size(); ++c) rhs[c] = (g[c] - u[c]) / config.tau_time;
    mode = af::CertificateMode::parabolic;
  } else {
    throw af::InvalidInput("check needs one of 'rhs', 'f' or 'g' in [io]");
  }
  std::optional<af::BoundaryField> trace;
  if (config.trace) trace = af::read_boundary_field(*config.trace, spec);

  const auto cert = af::check_weak_solution(u, z, rhs, spec, mode, trace ? &*trace : nullptr);
  const auto gg = af::gauss_green(u, z, spec, trace ? &*trace : nullptr);
  json report = header("check", config, spec);
  report["certificate"] = af::to_json(cert);
  report["gauss_green"] = {{"lhs", gg.lhs}, {"rhs", gg.rhs}, {"residual", gg.residual}, {"scale", gg.scale}};
  report["energy"] = energy_json(af::eval_F(u, spec));
  Output(args.out).finish(report);
  return 0;
}

int run_oracle(const Args& args) {
  const auto config = load(args);
  const auto spec = config.grid();
  af::OracleProblem problem;
  if (config.oracle_kind == "elliptic") {
    problem.kind = af::ProblemKind::elliptic;
    problem.data = af::load_field(config.f, spec, "f");
  } else {
    problem.kind = af::ProblemKind::resolvent;
    problem.data = af::load_field(config.g, spec, "g");
    problem.tau_time = config.tau_time;
  }
  const Output out(args.out);
  const auto result = af::oracle_minimize(problem, spec);
  json report = header("oracle", config, spec);
  json files = json::array();
  out.field("u_ref.anzf", result.u_ref, files);
  report["kind"] = config.oracle_kind;
  report["oracle"] = af::to_json(result);
  report["files"] = files;
  out.finish(report);
  return 0;
}

int run_selftest(const Args& args) {
  const auto results = af::run_acceptance(args.seed, std::cout);
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  if (failed == 0) {
    std::cout << "all criteria passed\n";
    return 0;
  }
  std::cout << failed << " criteria failed\n";
  return 1;
}

int fail(const std::string& kind, const std::string& message, const std::vector<std::string>& details = {},
         std::optional<json> extra = std::nullopt) {
  json err = af::error_object(kind, message, details);
  if (extra) err["error"]["report"] = *extra;
  std::cerr << err.dump(2) << '\n';
  return kind == "usage" ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  af::configure_threads_from_env();

  CLI::App app{"Certified primal-dual solver for the anisotropic p-Laplacian and its gradient flow"};
  app.require_subcommand(1);
  Args args;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* cfg = sub->add_option("--config", args.config, "run configuration file");
    if (need_config) cfg->required();
    sub->add_option("--out", args.out, "output directory for fields and report.json");
    sub->add_option("--seed", args.seed, "seed for power iteration and selftest generators (default 0)");
    sub->add_option_function<int>("--max-iter", [&](const int& n) { args.max_iter = n; },
                                  "override solver.max_iter");
    sub->add_option_function<double>("--gap-tol", [&](const double& x) { args.gap_tol = x; },
                                      "override solver.gap_tol");
  };

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Args&);
  };
  const Command commands[] = {
      {"solve-elliptic", "minimise F(u) - <f, u>", run_elliptic},
      {"resolvent", "one implicit Euler step from g", run_resolvent},
      {"evolve", "implicit Euler trajectory from u0", run_evolve},
      {"check", "certificate residuals of a given (u, z)", run_check},
      {"oracle", "smoothed Newton reference minimiser (small grids)", run_oracle},
      {"selftest", "run the acceptance suite", run_selftest},
  };
  int (*chosen)(const Args&) = nullptr;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, std::string(c.name) != "selftest");
    sub->callback([&chosen, run = c.run] { chosen = run; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) args.seed_given = true;
  }

  try {
    return chosen(args);
  } catch (const af::NonConvergence& e) {
    return fail(e.kind(), e.what(), {}, af::to_json(e.report()));
  } catch (const af::InvalidInput& e) {
    return fail(e.kind(), e.what(), e.details());
  } catch (const af::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
}
