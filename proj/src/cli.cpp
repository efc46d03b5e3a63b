#include "parcon/cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "parcon/errors.hpp"
#include "parcon/verify.hpp"

namespace parcon {

void RunConfig::validate() const {
  optimizer().validate();
  if (n < 1) throw ValidationError("n must be positive");
  if (steps < 0) throw ValidationError("steps must be non-negative");
  if (levels.empty()) throw ValidationError("levels must not be empty");
}

OptimizerConfig RunConfig::optimizer() const {
  OptimizerConfig cfg;
  cfg.alpha = alpha;
  cfg.bounds = bounds;
  cfg.step = step;
  cfg.tol = tol;
  cfg.max_iter = max_iter;
  return cfg;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_value(std::string_view key, std::string_view text, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, "invalid value '" + std::string(text) + "' for key '" + std::string(key) + "'");
  }
  return value;
}

std::vector<int> parse_levels(std::string_view key, std::string_view text, std::size_t line) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = std::min(text.find(',', start), text.size());
    out.push_back(parse_value<int>(key, trim(text.substr(start, comma - start)), line));
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ValidationError("cannot open '" + path + "' for writing");
  f << content;
  f.flush();
  if (!f) throw ValidationError("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string with_suffix(const std::string& path, const std::string& suffix, const std::string& ext) {
  std::string stem = path;
  if (stem.size() > 4 && stem.ends_with(".csv")) stem.resize(stem.size() - 4);
  return stem + suffix + ext;
}

int mesh_info(const RunConfig& cfg, std::ostream& out) {
  const Mesh m = build_lshape_mesh(cfg.n);
  out << "vertices: " << m.num_vertices() << '\n'
      << "triangles: " << m.num_triangles() << '\n'
      << "interior_dofs: " << m.num_interior_vertices() << '\n'
      << "h: " << format_double(m.h()) << '\n';
  if (!cfg.out.empty()) write_file(cfg.out, to_text(m));
  return kExitOk;
}

int solve(const RunConfig& cfg, std::ostream& out) {
  const auto problem = problem_by_id(cfg.problem, cfg.alpha, cfg.bounds);
  Mesh mesh = build_lshape_mesh(cfg.n);
  const int steps = cfg.steps > 0 ? cfg.steps : time_steps_for(mesh.h(), problem.data.final_time);
  const TimeGrid grid(problem.data.final_time, steps);
  const DiscreteControlProblem discrete(problem.data, std::move(mesh), grid);
  const auto sol = projected_gradient_solve(discrete, cfg.optimizer());
  const auto& m = discrete.mesh();

  out << "n: " << cfg.n << "  h: " << format_double(m.h()) << "  dof: " << m.num_interior_vertices()
      << "  N: " << steps << '\n'
      << "iterations: " << sol.report.iterations << (sol.report.converged ? "" : " (not converged)") << '\n'
      << "cost: " << format_double(sol.report.cost_history.back()) << '\n'
      << "kkt_residual: " << format_double(sol.report.kkt_residual) << '\n'
      << "err_y: " << format_double(l2l2_error(m, grid, state_on_intervals(sol.y), problem.exact_state)) << '\n'
      << "err_z: " << format_double(l2l2_error(m, grid, costate_on_intervals(sol.z), problem.exact_costate)) << '\n'
      << "err_u: " << format_double(l2l2_error(m, grid, sol.u, problem.exact_control)) << '\n';

  const std::string prefix = cfg.out.empty() ? "solution" : with_suffix(cfg.out, "", "");
  std::ostringstream state, costate, control;
  write_trajectory_csv(state, m, sol.y);
  write_trajectory_csv(costate, m, sol.z);
  write_control_csv(control, m, sol.u);
  write_file(prefix + "_state.csv", state.str());
  write_file(prefix + "_costate.csv", costate.str());
  write_file(prefix + "_control.csv", control.str());
  return sol.report.converged ? kExitOk : kExitNumerical;
}

int study(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  StudyConfig sc;
  sc.problem = cfg.problem;
  sc.levels = cfg.levels;
  sc.optimizer = cfg.optimizer();
  sc.threads = cfg.threads;
  const auto report = run_convergence_study(sc);

  const std::string path = cfg.out.empty() ? "report.csv" : cfg.out;
  write_file(path, report.to_csv());
  write_file(with_suffix(path, "_final_time", ".csv"), report.final_time_csv());
  write_file(with_suffix(path, "", ".svg"), convergence_svg(report));
  out << report.to_csv();

  bool ok = true;
  for (const auto& r : report.rows) {
    if (!r.failure.empty()) {
      err << "level " << r.level << " failed: " << r.failure << '\n';
      ok = false;
    } else if (!r.converged) {
      err << "level " << r.level << ": optimizer did not converge in " << r.iterations << " iterations\n";
      ok = false;
    }
  }
  return ok ? kExitOk : kExitNumerical;
}

int gradcheck(const RunConfig& cfg, std::ostream& out) {
  const auto problem = problem_by_id(cfg.problem, cfg.alpha, cfg.bounds);
  const int steps = cfg.steps > 0 ? cfg.steps : 4;
  const double worst = gradient_fd_check(problem.data, cfg.n, steps, cfg.alpha, {}, std::nullopt, cfg.bounds);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", worst);
  out << "max relative error: " << buf << '\n';
  return worst <= 1e-5 ? kExitOk : kExitNumerical;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key=value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "command") {
      cfg.command = std::string(value);
    } else if (key == "problem") {
      cfg.problem = std::string(value);
    } else if (key == "n") {
      cfg.n = parse_value<int>(key, value, line_no);
    } else if (key == "levels") {
      cfg.levels = parse_levels(key, value, line_no);
    } else if (key == "steps") {
      cfg.steps = parse_value<int>(key, value, line_no);
    } else if (key == "alpha") {
      cfg.alpha = parse_value<double>(key, value, line_no);
    } else if (key == "u_a") {
      cfg.bounds.lower = parse_value<double>(key, value, line_no);
    } else if (key == "u_b") {
      cfg.bounds.upper = parse_value<double>(key, value, line_no);
    } else if (key == "step") {
      cfg.step = parse_value<double>(key, value, line_no);
    } else if (key == "tol") {
      cfg.tol = parse_value<double>(key, value, line_no);
    } else if (key == "max_iter") {
      cfg.max_iter = parse_value<int>(key, value, line_no);
    } else if (key == "out") {
      cfg.out = std::string(value);
    } else if (key == "threads") {
      cfg.threads = parse_value<unsigned>(key, value, line_no);
    } else {
      throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  cfg.validate();
  return cfg;
}

int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-element solver for parabolic optimal control with measure data", "parcon"};
  app.require_subcommand(1);

  int n = 0, steps = 0, max_iter = 0;
  unsigned threads = 1;
  std::vector<int> levels;
  double alpha = 0, ua = 0, ub = 0, step = 0, tol = 0;
  std::string out_path, config_path, problem;

  std::map<std::string, CLI::Option*> opts;
  auto add_common = [&](CLI::App* sub) {
    opts[sub->get_name() + "config"] = sub->add_option("--config", config_path, "key=value configuration file");
    opts[sub->get_name() + "problem"] = sub->add_option("--problem", problem, "problem id (lshape-measure)");
    opts[sub->get_name() + "n"] = sub->add_option("--n", n, "grid subdivisions per unit length (even)");
    opts[sub->get_name() + "levels"] = sub->add_option("--levels", levels, "comma-separated n values")->delimiter(',');
    opts[sub->get_name() + "steps"] = sub->add_option("--steps", steps, "number of time steps");
    opts[sub->get_name() + "alpha"] = sub->add_option("--alpha", alpha, "control cost weight");
    opts[sub->get_name() + "ua"] = sub->add_option("--ua", ua, "lower control bound");
    opts[sub->get_name() + "ub"] = sub->add_option("--ub", ub, "upper control bound");
    opts[sub->get_name() + "step"] = sub->add_option("--step", step, "gradient step (default 1/alpha)");
    opts[sub->get_name() + "tol"] = sub->add_option("--tol", tol, "optimizer tolerance");
    opts[sub->get_name() + "max-iter"] = sub->add_option("--max-iter", max_iter, "optimizer iteration cap");
    opts[sub->get_name() + "out"] = sub->add_option("--out", out_path, "output path");
    opts[sub->get_name() + "threads"] = sub->add_option("--threads", threads, "levels solved concurrently");
  };
  const std::pair<const char*, const char*> commands[] = {
      {"mesh-info", "print vertex/triangle/DOF counts and h of the L-shape mesh"},
      {"solve", "solve the control problem on one mesh and write state/co-state/control CSVs"},
      {"study", "run a convergence study over --levels and write the error table and plot"},
      {"gradcheck", "compare the reduced gradient with central finite differences"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help));

  std::vector<std::string> argv_store{"parcon"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << e.what() << '\n' << app.help();
    return kExitValidation;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  auto given = [&](const char* key) { return opts.at(cmd + key)->count() > 0; };

  try {
    RunConfig cfg = given("config") ? parse_config(read_file(config_path)) : RunConfig{};
    cfg.command = cmd;
    if (cmd == "gradcheck" && !given("n") && !given("config")) cfg.n = 4;
    if (given("problem")) cfg.problem = problem;
    if (given("n")) cfg.n = n;
    if (given("levels")) cfg.levels = levels;
    if (given("steps")) cfg.steps = steps;
    if (given("alpha")) cfg.alpha = alpha;
    if (given("ua")) cfg.bounds.lower = ua;
    if (given("ub")) cfg.bounds.upper = ub;
    if (given("step")) cfg.step = step;
    if (given("tol")) cfg.tol = tol;
    if (given("max-iter")) cfg.max_iter = max_iter;
    if (given("out")) cfg.out = out_path;
    if (given("threads")) cfg.threads = threads;
    cfg.validate();

    if (cmd == "mesh-info") return mesh_info(cfg, out);
    if (cmd == "solve") return solve(cfg, out);
    if (cmd == "study") return study(cfg, out, err);
    return gradcheck(cfg, out);
  } catch (const SolverError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace parcon
