// Command-line front end: seeded experiment runs, problem listing, gradient
// checks and rate sweeps over the iteration budget.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "saddleopt/harness.hpp"

namespace {

using namespace saddleopt;

ProblemSpec problem_by_name(const std::string& name) {
  if (name == "bilinear") return make_bilinear(BilinearParams{});
  if (name == "quadratic") return make_quadratic_saddle();
  if (name == "dirac_gan") return make_dirac_gan();
  if (name == "one_sided_synthetic") return make_one_sided_synthetic();
  throw ConfigError("$.problem: unknown problem \"" + name + "\"");
}

TraceFormat parse_format(const std::string& name) {
  if (name == "csv") return TraceFormat::Csv;
  if (name == "jsonl") return TraceFormat::Jsonl;
  throw ConfigError("$.format: unknown format \"" + name + "\" (valid: csv, jsonl)");
}

PlotKind parse_plot_kind(const std::string& name) {
  if (name == "grad_norms") return PlotKind::GradNorms;
  if (name == "mvi") return PlotKind::Mvi;
  if (name == "rate") return PlotKind::Rate;
  throw ConfigError("$.plot: unknown plot kind \"" + name +
                    "\" (valid: grad_norms, mvi, rate)");
}

std::vector<TraceRow> load_trace(const std::string& path, TraceFormat format) {
  return format == TraceFormat::Csv ? read_trace_csv(path) : read_trace_jsonl(path);
}

int cmd_run(const std::string& config_path, const std::string& out,
            const std::string& format_name, const std::string& plot_name) {
  const RunConfig cfg = load_config(config_path);
  ExecuteOptions options;
  options.out_override = out;
  options.format = parse_format(format_name);
  const ExecuteSummary summary = execute(cfg, options);

  std::printf("problem=%s optimizer=%s N=%ld seeds=%zu\n", cfg.problem_name.c_str(),
              to_string(cfg.optimizer).c_str(), cfg.iterations, cfg.seeds.size());
  std::printf("final norm_v  mean=%.10g min=%.10g max=%.10g\n", summary.final_norm_v.mean,
              summary.final_norm_v.min, summary.final_norm_v.max);
  std::printf("final |z_N|   mean=%.10g min=%.10g max=%.10g\n",
              summary.final_point_norm.mean, summary.final_point_norm.min,
              summary.final_point_norm.max);
  std::printf("summary: %s\n", summary.summary_path.c_str());

  if (!plot_name.empty()) {
    const PlotKind kind = parse_plot_kind(plot_name);
    std::vector<std::vector<TraceRow>> traces;
    for (const SeedOutcome& o : summary.per_seed)
      traces.push_back(load_trace(o.trace_path, options.format));
    const std::string out_dir = out.empty() ? cfg.output_dir : out;
    const std::string plot_path = out_dir + "/plot_" + plot_name + ".svg";
    emit_plot(traces, kind, plot_path);
    std::printf("plot: %s\n", plot_path.c_str());
  }
  return 0;
}

int cmd_list() {
  std::printf("problems:\n");
  for (const std::string& name : builtin_problem_names())
    std::printf("  %s\n", name.c_str());
  std::printf("optimizers:\n");
  for (const std::string& name : optimizer_names()) std::printf("  %s\n", name.c_str());
  return 0;
}

int cmd_check(const std::string& problem_name, int points, std::uint64_t seed, double h) {
  std::vector<std::string> names;
  if (problem_name == "all")
    names = builtin_problem_names();
  else
    names.push_back(problem_name);

  bool all_pass = true;
  for (const std::string& name : names) {
    const ProblemSpec p = problem_by_name(name);
    RngStream rng(RngStream::derive_key(seed, fnv1a64(name), rng_purpose::kBatch));
    double worst_rel = 0.0, worst_abs = 0.0;
    bool pass = true;
    for (int i = 0; i < points; ++i) {
      Vec z(p.dim());
      for (double& v : z) v = 3.0 * rng.next_double() - 1.5;
      const FdReport r = fd_check(p, SaddleVector(std::move(z), p.n1, p.n2), h);
      worst_rel = std::max(worst_rel, r.max_rel_err);
      worst_abs = std::max(worst_abs, r.max_abs_err);
      pass = pass && r.pass;
    }
    std::printf("%-22s %s  (points=%d max_rel_err=%.3g max_abs_err=%.3g)\n", name.c_str(),
                pass ? "pass" : "FAIL", points, worst_rel, worst_abs);
    all_pass = all_pass && pass;
  }
  if (!all_pass) throw AuditError("gradient check failed");
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& ns_arg,
              const std::string& out, const std::string& format_name,
              const std::string& plot_name) {
  const RunConfig cfg = load_config(config_path);
  std::vector<long> ns;
  std::size_t begin = 0;
  while (begin <= ns_arg.size()) {
    const std::size_t comma = ns_arg.find(',', begin);
    const std::string token =
        ns_arg.substr(begin, comma == std::string::npos ? std::string::npos : comma - begin);
    if (token.empty()) throw ConfigError("$.ns: empty entry in iteration list");
    try {
      ns.push_back(std::stol(token));
    } catch (const std::exception&) {
      throw ConfigError("$.ns: \"" + token + "\" is not an integer");
    }
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }

  ExecuteOptions options;
  options.out_override = out;
  options.format = parse_format(format_name);
  const SweepSummary summary = sweep(cfg, ns, options);

  for (const SweepPoint& p : summary.points)
    std::printf("N=%-8ld avg|V|^2=%.10g avg|Vx|^2=%.10g\n", p.iterations, p.avg_sq_norm,
                p.avg_sq_norm_x);
  if (summary.points.size() >= 3) {
    std::printf("log-log fit:   slope=%.6f r2=%.6f\n", summary.fit.slope, summary.fit.r2);
    std::printf("x-block fit:   slope=%.6f r2=%.6f\n", summary.fit_x.slope,
                summary.fit_x.r2);
  }
  std::printf("summary: %s\n", summary.summary_path.c_str());

  if (!plot_name.empty()) {
    const PlotKind kind = parse_plot_kind(plot_name);
    std::vector<std::vector<TraceRow>> traces;
    for (const SweepPoint& p : summary.points)
      traces.push_back(load_trace(p.trace_path, options.format));
    const std::string out_dir = out.empty() ? cfg.output_dir : out;
    const std::string plot_path = out_dir + "/plot_" + plot_name + ".svg";
    emit_plot(traces, kind, plot_path);
    std::printf("plot: %s\n", plot_path.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"saddle-point optimization experiments"};
  app.require_subcommand(1);

  std::string config_path, out, format = "csv", plot, ns_arg;
  std::string problem = "all";
  int points = 100;
  std::uint64_t seed = 0;
  double h = 1e-5;

  CLI::App* run_cmd = app.add_subcommand("run", "execute a config across its seeds");
  run_cmd->add_option("--config", config_path, "config file (JSON)")->required();
  run_cmd->add_option("--out", out, "output directory override");
  run_cmd->add_option("--format", format, "trace format: csv|jsonl");
  run_cmd->add_option("--plot", plot, "also emit a plot: grad_norms|mvi|rate");

  CLI::App* list_cmd = app.add_subcommand("list", "list problems and optimizers");

  CLI::App* check_cmd =
      app.add_subcommand("check", "finite-difference gradient check at random points");
  check_cmd->add_option("--problem", problem, "problem name or 'all'");
  check_cmd->add_option("--points", points, "number of random points")
      ->check(CLI::PositiveNumber);
  check_cmd->add_option("--seed", seed, "random seed for the probe points");
  check_cmd->add_option("--step", h, "central-difference step")->check(CLI::PositiveNumber);

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "run one config across several iteration budgets");
  sweep_cmd->add_option("--config", config_path, "config file (JSON)")->required();
  sweep_cmd->add_option("--ns", ns_arg, "comma-separated iteration counts")->required();
  sweep_cmd->add_option("--out", out, "output directory override");
  sweep_cmd->add_option("--format", format, "trace format: csv|jsonl");
  sweep_cmd->add_option("--plot", plot, "also emit a plot: grad_norms|mvi|rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems are config errors
  }

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, out, format, plot);
    if (list_cmd->parsed()) return cmd_list();
    if (check_cmd->parsed()) return cmd_check(problem, points, seed, h);
    if (sweep_cmd->parsed()) return cmd_sweep(config_path, ns_arg, out, format, plot);
  } catch (const saddleopt::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
