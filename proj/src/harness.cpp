#include "saddleopt/harness.hpp"

#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "svg_plot.hpp"

namespace saddleopt {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += names[i];
  }
  return out;
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) {
      std::vector<std::string> names(allowed.begin(), allowed.end());
      fail(path + "." + item.key(), "unknown key (allowed: " + join_names(names) + ")");
    }
  }
}

const json& need_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

double need_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

long need_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<long>();
}

bool need_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

std::string need_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Vec need_number_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Vec out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(j[i].get<double>());
  }
  return out;
}

FeasibleSet parse_feasible(const json& j, const std::string& path) {
  need_object(j, path);
  check_keys(j, path, {"kind", "radius", "center", "lo", "hi"});
  const auto it = j.find("kind");
  if (it == j.end()) fail(path + ".kind", "missing key");
  const std::string kind = need_string(*it, path + ".kind");
  if (kind == "unconstrained") return FeasibleSet::unconstrained();
  if (kind == "ball") {
    if (!j.contains("radius")) fail(path + ".radius", "missing key");
    const double radius = need_number(j["radius"], path + ".radius");
    if (!(radius > 0.0)) fail(path + ".radius", "must be positive");
    Vec center;
    if (j.contains("center")) center = need_number_array(j["center"], path + ".center");
    return FeasibleSet::ball(radius, std::move(center));
  }
  if (kind == "box") {
    if (!j.contains("lo") || !j.contains("hi"))
      fail(path, "box feasible set needs lo and hi");
    Vec lo = need_number_array(j["lo"], path + ".lo");
    Vec hi = need_number_array(j["hi"], path + ".hi");
    try {
      return FeasibleSet::box(std::move(lo), std::move(hi));
    } catch (const std::invalid_argument& e) {
      fail(path, e.what());
    }
  }
  fail(path + ".kind", "unknown feasible kind \"" + kind +
                           "\" (valid: unconstrained, ball, box)");
}

json feasible_to_json(const FeasibleSet& s) {
  json j;
  switch (s.kind) {
    case FeasibleKind::Unconstrained:
      j["kind"] = "unconstrained";
      break;
    case FeasibleKind::Ball:
      j["kind"] = "ball";
      j["radius"] = s.radius;
      if (!s.center.empty()) j["center"] = s.center;
      break;
    case FeasibleKind::Box:
      j["kind"] = "box";
      j["lo"] = s.lo;
      j["hi"] = s.hi;
      break;
  }
  return j;
}

std::optional<FeasibleSet> parse_region(const json& params, const std::string& path) {
  if (params.contains("feasible") && params.contains("radius"))
    fail(path, "give either feasible or radius, not both");
  if (params.contains("feasible")) return parse_feasible(params["feasible"], path + ".feasible");
  if (params.contains("radius")) {
    const double r = need_number(params["radius"], path + ".radius");
    if (!(r > 0.0)) fail(path + ".radius", "must be positive");
    return FeasibleSet::ball(r);
  }
  return std::nullopt;
}

struct ResolvedProblem {
  std::string name;
  ProblemSpec spec;
  json normalized_params;
};

ResolvedProblem parse_problem(const json& j, const std::string& path) {
  std::string name;
  json params = json::object();
  if (j.is_string()) {
    name = j.get<std::string>();
  } else if (j.is_object()) {
    check_keys(j, path, {"name", "params"});
    if (!j.contains("name")) fail(path + ".name", "missing key");
    name = need_string(j["name"], path + ".name");
    if (j.contains("params")) params = need_object(j["params"], path + ".params");
  } else {
    fail(path, "expected a problem name or {name, params} object");
  }

  const std::string ppath = path + ".params";
  ResolvedProblem out;
  out.name = name;
  if (name == "bilinear") {
    check_keys(params, ppath, {"A", "a", "b", "feasible", "radius"});
    BilinearParams bp;
    if (params.contains("A")) {
      const json& a = params["A"];
      if (!a.is_array() || a.empty()) fail(ppath + ".A", "expected a non-empty matrix");
      bp.coupling.clear();
      for (std::size_t r = 0; r < a.size(); ++r)
        bp.coupling.push_back(need_number_array(a[r], ppath + ".A[" + std::to_string(r) + "]"));
      bp.a.assign(bp.coupling.size(), 0.0);
      bp.b.assign(bp.coupling[0].size(), 0.0);
    }
    if (params.contains("a")) bp.a = need_number_array(params["a"], ppath + ".a");
    if (params.contains("b")) bp.b = need_number_array(params["b"], ppath + ".b");
    try {
      out.spec = make_bilinear(bp, parse_region(params, ppath));
    } catch (const std::invalid_argument& e) {
      fail(ppath, e.what());
    }
    out.normalized_params = {{"A", bp.coupling}, {"a", bp.a}, {"b", bp.b}};
  } else if (name == "quadratic") {
    check_keys(params, ppath, {"n1", "n2", "feasible", "radius"});
    long n1 = 1, n2 = 1;
    if (params.contains("n1")) n1 = need_integer(params["n1"], ppath + ".n1");
    if (params.contains("n2")) n2 = need_integer(params["n2"], ppath + ".n2");
    if (n1 < 1 || n2 < 1) fail(ppath, "block sizes must be >= 1");
    out.spec = make_quadratic_saddle(static_cast<std::size_t>(n1),
                                     static_cast<std::size_t>(n2),
                                     parse_region(params, ppath));
    out.normalized_params = {{"n1", n1}, {"n2", n2}};
  } else if (name == "dirac_gan") {
    check_keys(params, ppath, {"feasible", "radius"});
    out.spec = make_dirac_gan(parse_region(params, ppath));
    out.normalized_params = json::object();
  } else if (name == "one_sided_synthetic") {
    check_keys(params, ppath, {"feasible", "radius"});
    out.spec = make_one_sided_synthetic(parse_region(params, ppath));
    out.normalized_params = json::object();
  } else {
    fail(path, "unknown problem \"" + name +
                   "\" (valid: " + join_names(builtin_problem_names()) + ")");
  }
  out.normalized_params["feasible"] = feasible_to_json(out.spec.feasible);
  return out;
}

NoiseModel parse_noise(const json& j, const std::string& path, const ProblemSpec& problem) {
  need_object(j, path);
  check_keys(j, path, {"kind", "sigma", "bound"});
  if (!j.contains("kind")) fail(path + ".kind", "missing key");
  const std::string kind = need_string(j["kind"], path + ".kind");
  if (kind == "none") return NoiseModel::none();
  if (kind != "gaussian" && kind != "clipped_gaussian")
    fail(path + ".kind",
         "unknown noise kind \"" + kind + "\" (valid: none, gaussian, clipped_gaussian)");
  if (!j.contains("sigma")) fail(path + ".sigma", "missing key");
  const double sigma = need_number(j["sigma"], path + ".sigma");
  if (sigma < 0.0) fail(path + ".sigma", "must be >= 0");
  if (kind == "gaussian") return NoiseModel::gaussian(sigma);
  if (kind == "clipped_gaussian") {
    double bound = 0.0;
    if (j.contains("bound")) {
      bound = need_number(j["bound"], path + ".bound");
    } else if (problem.grad_bound) {
      bound = *problem.grad_bound;
    } else {
      fail(path + ".bound", "missing key and the problem declares no gradient bound");
    }
    if (!(bound > 0.0)) fail(path + ".bound", "must be positive");
    return NoiseModel::clipped_gaussian(sigma, bound);
  }
  fail(path + ".kind", "unreachable noise kind");
}

json noise_to_json(const NoiseModel& n) {
  switch (n.kind) {
    case NoiseKind::None:
      return {{"kind", "none"}};
    case NoiseKind::Gaussian:
      return {{"kind", "gaussian"}, {"sigma", n.sigma}};
    case NoiseKind::ClippedGaussian:
      return {{"kind", "clipped_gaussian"}, {"sigma", n.sigma}, {"bound", n.bound}};
  }
  return {};
}

void parse_beta1(const json& j, const std::string& path, ScheduleSpec& s) {
  if (j.is_number()) {
    s.beta1_kind = Beta1Kind::Constant;
    s.beta1 = j.get<double>();
    return;
  }
  need_object(j, path);
  check_keys(j, path, {"kind", "beta1", "lambda"});
  if (!j.contains("kind")) fail(path + ".kind", "missing key");
  const std::string kind = need_string(j["kind"], path + ".kind");
  if (kind == "constant") {
    s.beta1_kind = Beta1Kind::Constant;
    if (j.contains("beta1")) s.beta1 = need_number(j["beta1"], path + ".beta1");
  } else if (kind == "exponential") {
    s.beta1_kind = Beta1Kind::Exponential;
    if (j.contains("beta1")) s.beta1 = need_number(j["beta1"], path + ".beta1");
    if (j.contains("lambda")) s.decay = need_number(j["lambda"], path + ".lambda");
  } else if (kind == "harmonic") {
    s.beta1_kind = Beta1Kind::Harmonic;
    if (j.contains("beta1") || j.contains("lambda"))
      fail(path, "harmonic schedule takes no parameters");
  } else {
    fail(path + ".kind",
         "unknown momentum schedule \"" + kind + "\" (valid: constant, exponential, harmonic)");
  }
}

json beta1_to_json(const ScheduleSpec& s) {
  json j;
  j["kind"] = to_string(s.beta1_kind);
  if (s.beta1_kind != Beta1Kind::Harmonic) j["beta1"] = s.beta1;
  if (s.beta1_kind == Beta1Kind::Exponential) j["lambda"] = s.decay;
  return j;
}

void parse_batch(const json& j, const std::string& path, ScheduleSpec& s) {
  if (j.is_number_integer()) {
    s.batch_kind = BatchKind::Constant;
    s.batch_size = j.get<long>();
    return;
  }
  need_object(j, path);
  check_keys(j, path, {"kind", "m"});
  if (!j.contains("kind")) fail(path + ".kind", "missing key");
  const std::string kind = need_string(j["kind"], path + ".kind");
  if (kind == "constant") {
    s.batch_kind = BatchKind::Constant;
    if (j.contains("m")) s.batch_size = need_integer(j["m"], path + ".m");
  } else if (kind == "linear") {
    s.batch_kind = BatchKind::Linear;
    if (j.contains("m")) fail(path + ".m", "linear batch schedule takes no size");
  } else {
    fail(path + ".kind", "unknown batch schedule \"" + kind + "\" (valid: constant, linear)");
  }
}

json batch_to_json(const ScheduleSpec& s) {
  if (s.batch_kind == BatchKind::Linear) return {{"kind", "linear"}};
  return {{"kind", "constant"}, {"m", s.batch_size}};
}

ProbeReference parse_probe(const json& j, const std::string& path, const ProblemSpec& problem) {
  ProbeReference probe;
  std::string kind;
  if (j.is_string()) {
    kind = j.get<std::string>();
  } else if (j.is_object()) {
    check_keys(j, path, {"kind", "value"});
    if (!j.contains("kind")) fail(path + ".kind", "missing key");
    kind = need_string(j["kind"], path + ".kind");
  } else {
    fail(path, "expected a string or {kind, value} object");
  }
  if (kind == "analytic") {
    probe.kind = ProbeReference::Kind::Analytic;
    if (!problem.reference)
      fail(path, "problem \"" + problem.name + "\" declares no analytic reference");
  } else if (kind == "final") {
    probe.kind = ProbeReference::Kind::Final;
  } else if (kind == "literal") {
    probe.kind = ProbeReference::Kind::Literal;
    if (!j.is_object() || !j.contains("value")) fail(path + ".value", "missing key");
    Vec value = need_number_array(j["value"], path + ".value");
    if (value.size() != problem.dim())
      fail(path + ".value", "expected " + std::to_string(problem.dim()) + " entries");
    probe.literal = SaddleVector(std::move(value), problem.n1, problem.n2);
  } else {
    fail(path, "unknown probe reference \"" + kind + "\" (valid: analytic, final, literal)");
  }
  return probe;
}

json probe_to_json(const ProbeReference& probe) {
  json j;
  switch (probe.kind) {
    case ProbeReference::Kind::Analytic:
      j["kind"] = "analytic";
      break;
    case ProbeReference::Kind::Final:
      j["kind"] = "final";
      break;
    case ProbeReference::Kind::Literal:
      j["kind"] = "literal";
      j["value"] = probe.literal->data;
      break;
  }
  return j;
}

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

json row_to_json(const TraceRow& row) {
  return {{"iter", row.iter},
          {"norm_v", row.norm_v},
          {"norm_vx", row.norm_vx},
          {"norm_vy", row.norm_vy},
          {"mvi_total", row.mvi_total},
          {"mvi_x", row.mvi_x},
          {"mvi_y", row.mvi_y},
          {"avg_sq_norm", row.avg_sq_norm},
          {"residual", row.residual},
          {"dist_to_ref", row.dist_to_ref}};
}

TraceRow row_from_json(const json& j) {
  TraceRow row;
  row.iter = j.at("iter").get<long>();
  row.norm_v = j.at("norm_v").get<double>();
  row.norm_vx = j.at("norm_vx").get<double>();
  row.norm_vy = j.at("norm_vy").get<double>();
  row.mvi_total = j.at("mvi_total").get<double>();
  row.mvi_x = j.at("mvi_x").get<double>();
  row.mvi_y = j.at("mvi_y").get<double>();
  row.avg_sq_norm = j.at("avg_sq_norm").get<double>();
  row.residual = j.at("residual").get<double>();
  row.dist_to_ref = j.at("dist_to_ref").get<double>();
  return row;
}

constexpr const char* kCsvHeader =
    "iter,norm_v,norm_vx,norm_vy,mvi_total,mvi_x,mvi_y,avg_sq_norm,residual,dist_to_ref";

Aggregate aggregate_of(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  a.min = values[0];
  a.max = values[0];
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    a.min = std::min(a.min, v);
    a.max = std::max(a.max, v);
  }
  a.mean = sum / static_cast<double>(values.size());
  return a;
}

json aggregate_to_json(const Aggregate& a) {
  return {{"mean", a.mean}, {"min", a.min}, {"max", a.max}};
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* cap = std::getenv("SADDLEOPT_MAX_WORKERS")) {
    const long parsed = std::strtol(cap, nullptr, 10);
    if (parsed >= 1) workers = std::min(workers, static_cast<std::size_t>(parsed));
  }
  return std::min(workers, jobs);
}

// Runs fn(i) for i in [0, jobs), possibly on several threads; rethrows the
// first failure after all workers finished.
void parallel_for(std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = worker_count(jobs);
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("$: not valid JSON: ") + e.what());
  }
  need_object(root, "$");
  check_keys(root, "$",
             {"problem", "optimizer", "eta", "beta1", "beta2", "delta", "batch",
              "dual_decay", "noise", "z0", "N", "seeds", "record_trajectory",
              "probe_reference", "output", "trace_every"});

  RunConfig cfg;

  if (!root.contains("problem")) fail("$.problem", "missing key");
  ResolvedProblem problem = parse_problem(root["problem"], "$.problem");
  cfg.problem_name = problem.name;
  cfg.problem = problem.spec;

  if (!root.contains("optimizer")) fail("$.optimizer", "missing key");
  const std::string opt_name = need_string(root["optimizer"], "$.optimizer");
  const auto kind = optimizer_from_string(opt_name);
  if (!kind)
    fail("$.optimizer", "unknown optimizer \"" + opt_name +
                            "\" (valid: " + join_names(optimizer_names()) + ")");
  cfg.optimizer = *kind;

  if (!root.contains("eta")) fail("$.eta", "missing key");
  cfg.schedules.eta = need_number(root["eta"], "$.eta");
  if (!(cfg.schedules.eta > 0.0)) fail("$.eta", "must be positive");

  if (root.contains("beta1")) parse_beta1(root["beta1"], "$.beta1", cfg.schedules);
  if (root.contains("beta2")) {
    cfg.schedules.beta2 = need_number(root["beta2"], "$.beta2");
    if (!(cfg.schedules.beta2 >= 0.0 && cfg.schedules.beta2 < 1.0))
      fail("$.beta2", "must lie in [0, 1)");
  }
  cfg.delta = 1e-8;
  if (root.contains("delta")) {
    cfg.delta = need_number(root["delta"], "$.delta");
    if (!(cfg.delta > 0.0)) fail("$.delta", "must be positive");
  }
  if (root.contains("batch")) parse_batch(root["batch"], "$.batch", cfg.schedules);

  const bool drd = cfg.optimizer == OptimizerKind::AmsgradEgDrd ||
                   cfg.optimizer == OptimizerKind::AegDrd;
  if (root.contains("dual_decay")) {
    const std::string dd = need_string(root["dual_decay"], "$.dual_decay");
    if (dd == "none")
      cfg.schedules.dual_decay = DualDecay::None;
    else if (dd == "inv_sqrt")
      cfg.schedules.dual_decay = DualDecay::InvSqrt;
    else if (dd == "inv_linear")
      cfg.schedules.dual_decay = DualDecay::InvLinear;
    else
      fail("$.dual_decay",
           "unknown decay \"" + dd + "\" (valid: none, inv_sqrt, inv_linear)");
    if (!drd && cfg.schedules.dual_decay != DualDecay::None)
      fail("$.dual_decay", "only the dual-rate-decay optimizers take a dual decay");
  }
  if (drd && cfg.schedules.dual_decay == DualDecay::None)
    cfg.schedules.dual_decay = cfg.optimizer == OptimizerKind::AmsgradEgDrd
                                   ? DualDecay::InvSqrt
                                   : DualDecay::InvLinear;

  cfg.noise = root.contains("noise") ? parse_noise(root["noise"], "$.noise", cfg.problem)
                                     : NoiseModel::none();

  if (!root.contains("z0")) fail("$.z0", "missing key");
  Vec z0 = need_number_array(root["z0"], "$.z0");
  if (z0.size() != cfg.problem.dim())
    fail("$.z0", "expected " + std::to_string(cfg.problem.dim()) + " entries for problem \"" +
                     cfg.problem_name + "\"");
  if (!all_finite(z0)) fail("$.z0", "entries must be finite");
  cfg.start = SaddleVector(std::move(z0), cfg.problem.n1, cfg.problem.n2);

  if (!root.contains("N")) fail("$.N", "missing key");
  cfg.iterations = need_integer(root["N"], "$.N");
  if (cfg.iterations < 1) fail("$.N", "must be >= 1");

  if (!root.contains("seeds")) fail("$.seeds", "missing key");
  if (!root["seeds"].is_array() || root["seeds"].empty())
    fail("$.seeds", "expected a non-empty array of integers");
  for (std::size_t i = 0; i < root["seeds"].size(); ++i) {
    const json& s = root["seeds"][i];
    if (!s.is_number_integer() || s.get<long long>() < 0)
      fail("$.seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
    cfg.seeds.push_back(s.get<std::uint64_t>());
  }

  if (root.contains("record_trajectory"))
    cfg.record_trajectory = need_bool(root["record_trajectory"], "$.record_trajectory");
  cfg.probe = root.contains("probe_reference")
                  ? parse_probe(root["probe_reference"], "$.probe_reference", cfg.problem)
                  : ProbeReference{};
  if (!root.contains("probe_reference") && !cfg.problem.reference)
    fail("$.probe_reference", "problem \"" + cfg.problem_name +
                                  "\" declares no analytic reference; choose final or literal");
  if (root.contains("output")) cfg.output_dir = need_string(root["output"], "$.output");
  if (root.contains("trace_every")) {
    cfg.trace_every = need_integer(root["trace_every"], "$.trace_every");
    if (cfg.trace_every < 1) fail("$.trace_every", "must be >= 1");
  }

  try {
    validate_schedules(cfg.schedules);
  } catch (const std::invalid_argument& e) {
    fail("$", e.what());
  }

  // canonical form with every default applied
  json canon;
  canon["problem"] = {{"name", cfg.problem_name}, {"params", problem.normalized_params}};
  canon["optimizer"] = to_string(cfg.optimizer);
  canon["eta"] = cfg.schedules.eta;
  canon["beta1"] = beta1_to_json(cfg.schedules);
  canon["beta2"] = cfg.schedules.beta2;
  canon["delta"] = cfg.delta;
  canon["batch"] = batch_to_json(cfg.schedules);
  canon["dual_decay"] = to_string(cfg.schedules.dual_decay);
  canon["noise"] = noise_to_json(cfg.noise);
  canon["z0"] = cfg.start.data;
  canon["N"] = cfg.iterations;
  canon["seeds"] = cfg.seeds;
  canon["record_trajectory"] = cfg.record_trajectory;
  canon["probe_reference"] = probe_to_json(cfg.probe);
  canon["output"] = cfg.output_dir;
  canon["trace_every"] = cfg.trace_every;
  cfg.canonical = canon.dump(2);
  cfg.config_hash = hash_hex(fnv1a64(cfg.canonical));
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("$: cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string serialize_config(const RunConfig& cfg) { return cfg.canonical; }

void write_trace(const std::vector<TraceRow>& rows, const std::string& path,
                 TraceFormat format, const std::string& config_hash, std::uint64_t seed) {
  if (rows.empty()) throw std::invalid_argument("write_trace: no rows");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_trace: cannot open " + path);
  if (format == TraceFormat::Csv) {
    out << kCsvHeader << "\n";
    char buf[512];
    for (const TraceRow& r : rows) {
      std::snprintf(buf, sizeof(buf),
                    "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.iter,
                    r.norm_v, r.norm_vx, r.norm_vy, r.mvi_total, r.mvi_x, r.mvi_y,
                    r.avg_sq_norm, r.residual, r.dist_to_ref);
      out << buf;
    }
  } else {
    for (const TraceRow& r : rows) out << row_to_json(r).dump() << "\n";
  }
  if (!out) throw std::runtime_error("write_trace: write failed for " + path);
  out.close();

  json meta;
  meta["config_hash"] = config_hash;
  meta["seed"] = seed;
  meta["version"] = kLibraryVersion;
  meta["rows"] = rows.size();
  std::ofstream meta_out(path + ".meta.json", std::ios::binary);
  if (!meta_out) throw std::runtime_error("write_trace: cannot open " + path + ".meta.json");
  meta_out << meta.dump(2) << "\n";
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_trace_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_trace_csv: empty file");
  if (line != kCsvHeader) throw std::runtime_error("read_trace_csv: unexpected header");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TraceRow r;
    double* fields[] = {&r.norm_v, &r.norm_vx,     &r.norm_vy,  &r.mvi_total, &r.mvi_x,
                        &r.mvi_y,  &r.avg_sq_norm, &r.residual, &r.dist_to_ref};
    const char* cursor = line.c_str();
    char* end = nullptr;
    r.iter = std::strtol(cursor, &end, 10);
    cursor = end;
    for (double* field : fields) {
      if (*cursor != ',') throw std::runtime_error("read_trace_csv: malformed row");
      ++cursor;
      *field = std::strtod(cursor, &end);
      cursor = end;
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<TraceRow> read_trace_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_trace_jsonl: cannot open " + path);
  std::vector<TraceRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(row_from_json(json::parse(line)));
  }
  return rows;
}

void emit_plot(const std::vector<std::vector<TraceRow>>& traces, PlotKind kind,
               const std::string& path) {
  if (traces.empty()) throw std::invalid_argument("emit_plot: no traces");
  for (const auto& t : traces)
    if (t.empty()) throw std::invalid_argument("emit_plot: empty trace");

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};
  auto color = [&](std::size_t i) { return kPalette[i % 6]; };
  auto suffix = [&](std::size_t i) {
    return traces.size() > 1 ? " #" + std::to_string(i) : std::string();
  };

  svg::Chart chart;
  switch (kind) {
    case PlotKind::GradNorms: {
      chart.title = "gradient block norms";
      chart.x_label = "iteration";
      chart.y_label = "norm";
      chart.log_y = true;
      std::size_t ci = 0;
      for (std::size_t i = 0; i < traces.size(); ++i) {
        svg::Series vx{"norm_vx" + suffix(i), color(ci++), {}, false};
        svg::Series vy{"norm_vy" + suffix(i), color(ci++), {}, false};
        for (const TraceRow& r : traces[i]) {
          vx.points.emplace_back(static_cast<double>(r.iter), r.norm_vx);
          vy.points.emplace_back(static_cast<double>(r.iter), r.norm_vy);
        }
        chart.series.push_back(std::move(vx));
        chart.series.push_back(std::move(vy));
      }
      break;
    }
    case PlotKind::Mvi: {
      chart.title = "variational inequality probes";
      chart.x_label = "iteration";
      chart.y_label = "inner product";
      chart.hline = 0.0;
      std::size_t ci = 0;
      for (std::size_t i = 0; i < traces.size(); ++i) {
        svg::Series total{"mvi_total" + suffix(i), color(ci++), {}, false};
        svg::Series xs{"mvi_x" + suffix(i), color(ci++), {}, false};
        svg::Series ys{"mvi_y" + suffix(i), color(ci++), {}, false};
        for (const TraceRow& r : traces[i]) {
          total.points.emplace_back(static_cast<double>(r.iter), r.mvi_total);
          xs.points.emplace_back(static_cast<double>(r.iter), r.mvi_x);
          ys.points.emplace_back(static_cast<double>(r.iter), r.mvi_y);
        }
        chart.series.push_back(std::move(total));
        chart.series.push_back(std::move(xs));
        chart.series.push_back(std::move(ys));
      }
      break;
    }
    case PlotKind::Rate: {
      chart.title = "average squared gradient norm against iteration budget";
      chart.x_label = "N";
      chart.y_label = "avg ||V||^2";
      chart.log_x = true;
      chart.log_y = true;
      svg::Series pts{"avg_sq_norm", color(0), {}, true};
      std::vector<std::pair<long, double>> fit_points;
      for (const auto& t : traces) {
        const TraceRow& last = t.back();
        const long n = last.iter + 1;
        pts.points.emplace_back(static_cast<double>(n), last.avg_sq_norm);
        fit_points.emplace_back(n, last.avg_sq_norm);
      }
      chart.series.push_back(std::move(pts));
      if (fit_points.size() >= 3) {
        bool positive = true;
        for (const auto& [n, v] : fit_points) positive = positive && v > 0.0;
        if (positive) {
          const RateFit fit = rate_fit(fit_points);
          svg::Series line{"fit", color(1), {}, false};
          for (const auto& [n, v] : fit_points) {
            const double log_n = std::log(static_cast<double>(n));
            line.points.emplace_back(static_cast<double>(n),
                                     std::exp(fit.intercept + fit.slope * log_n));
          }
          chart.series.push_back(std::move(line));
          char note[128];
          std::snprintf(note, sizeof(note), "slope = %.4f (r2 = %.4f)", fit.slope, fit.r2);
          chart.annotations.emplace_back(note);
        }
      }
      break;
    }
  }
  svg::write_chart(chart, path);
}

ExecuteSummary execute(const RunConfig& cfg, const ExecuteOptions& options) {
  namespace fs = std::filesystem;
  const std::string out_dir =
      options.out_override.empty() ? cfg.output_dir : options.out_override;
  if (options.write_files) fs::create_directories(out_dir);

  // Step-size guardrail (warn, never abort). The preconditioned families
  // need eta <= delta/(3L); plain extra-gradient needs eta <= 1/(4L). The
  // non-extrapolating baselines come with no usable constant.
  if (cfg.problem.lipschitz > 0.0) {
    double limit = 0.0;
    const char* rule = nullptr;
    switch (cfg.optimizer) {
      case OptimizerKind::AdamGda:
      case OptimizerKind::AmsgradGda:
      case OptimizerKind::AmsgradEg:
      case OptimizerKind::AmsgradEgDrd:
      case OptimizerKind::Aeg:
      case OptimizerKind::AegDrd:
        limit = cfg.delta / (3.0 * cfg.problem.lipschitz);
        rule = "delta/(3L)";
        break;
      case OptimizerKind::Seg:
        limit = 1.0 / (4.0 * cfg.problem.lipschitz);
        rule = "1/(4L)";
        break;
      default:
        break;
    }
    if (rule && cfg.schedules.eta > limit) {
      std::fprintf(stderr,
                   "warning: eta=%g exceeds %s=%g for problem \"%s\"; "
                   "convergence guarantees may not apply\n",
                   cfg.schedules.eta, rule, limit, cfg.problem_name.c_str());
    }
  }

  ExecuteSummary summary;
  summary.per_seed.resize(cfg.seeds.size());
  const char* ext = options.format == TraceFormat::Csv ? "csv" : "jsonl";

  parallel_for(cfg.seeds.size(), [&](std::size_t i) {
    RunOptions ro;
    ro.kind = cfg.optimizer;
    ro.schedules = cfg.schedules;
    ro.delta = cfg.delta;
    ro.start = cfg.start;
    ro.iterations = cfg.iterations;
    ro.seed = cfg.seeds[i];
    ro.record_trajectory = cfg.record_trajectory;
    ro.trace_every = cfg.trace_every;
    ro.probe = cfg.probe;

    const RunResult result = run(cfg.problem, cfg.noise, ro);
    if (!result.preconditioner_monotone)
      throw AuditError("execute: preconditioner monotonicity violated for seed " +
                       std::to_string(cfg.seeds[i]));

    SeedOutcome& outcome = summary.per_seed[i];
    outcome.seed = cfg.seeds[i];
    outcome.selected_index = result.selected_index;
    outcome.final_row = result.trace.back();
    const FieldValue final_field = evaluate_field(cfg.problem, result.final_point);
    outcome.final_point_norm = l2_norm(result.final_point.data);
    outcome.final_point_norm_v = l2_norm(final_field.data);
    outcome.final_point_norm_vx = std::sqrt(block_x_squared_norm(final_field));
    outcome.max_norm_seen = result.max_norm_seen;
    outcome.momentum_max_norm = result.momentum_max_norm;
    outcome.avg_sq_norm = result.avg_sq_norm_final;
    outcome.avg_sq_norm_x = result.avg_sq_norm_x_final;
    outcome.bound_audit_status = to_string(bound_audit(result, cfg.problem).status);

    if (options.write_files) {
      const std::string trace_path =
          out_dir + "/trace_seed" + std::to_string(cfg.seeds[i]) + "." + ext;
      write_trace(result.trace, trace_path, options.format, cfg.config_hash,
                  cfg.seeds[i]);
      outcome.trace_path = trace_path;
    }
  });

  std::vector<double> norm_v, norm_vx, avg_sq, point_norm;
  for (const SeedOutcome& o : summary.per_seed) {
    norm_v.push_back(o.final_row.norm_v);
    norm_vx.push_back(o.final_row.norm_vx);
    avg_sq.push_back(o.final_row.avg_sq_norm);
    point_norm.push_back(o.final_point_norm);
  }
  summary.final_norm_v = aggregate_of(norm_v);
  summary.final_norm_vx = aggregate_of(norm_vx);
  summary.final_avg_sq_norm = aggregate_of(avg_sq);
  summary.final_point_norm = aggregate_of(point_norm);

  if (options.write_files) {
    json j;
    j["config_hash"] = cfg.config_hash;
    j["version"] = kLibraryVersion;
    j["problem"] = cfg.problem_name;
    j["optimizer"] = to_string(cfg.optimizer);
    j["N"] = cfg.iterations;
    json seeds = json::array();
    for (const SeedOutcome& o : summary.per_seed) {
      json s;
      s["seed"] = o.seed;
      s["selected_index"] = o.selected_index;
      s["final_row"] = row_to_json(o.final_row);
      s["final_point"] = {{"norm_z", o.final_point_norm},
                          {"norm_v", o.final_point_norm_v},
                          {"norm_vx", o.final_point_norm_vx}};
      s["max_norm_seen"] = o.max_norm_seen;
      s["momentum_max_norm"] = o.momentum_max_norm;
      s["avg_sq_norm"] = o.avg_sq_norm;
      s["avg_sq_norm_x"] = o.avg_sq_norm_x;
      s["bound_audit"] = o.bound_audit_status;
      s["trace"] = o.trace_path;
      seeds.push_back(std::move(s));
    }
    j["per_seed"] = std::move(seeds);
    j["aggregate"] = {{"final_norm_v", aggregate_to_json(summary.final_norm_v)},
                      {"final_norm_vx", aggregate_to_json(summary.final_norm_vx)},
                      {"final_avg_sq_norm", aggregate_to_json(summary.final_avg_sq_norm)},
                      {"final_point_norm", aggregate_to_json(summary.final_point_norm)}};
    summary.summary_path = out_dir + "/summary.json";
    std::ofstream out(summary.summary_path, std::ios::binary);
    if (!out) throw std::runtime_error("execute: cannot open " + summary.summary_path);
    out << j.dump(2) << "\n";
  }
  return summary;
}

SweepSummary sweep(const RunConfig& cfg, const std::vector<long>& iteration_counts,
                   const ExecuteOptions& options) {
  if (iteration_counts.empty())
    throw ConfigError("$.ns: sweep needs at least one iteration count");
  namespace fs = std::filesystem;
  const std::string out_dir =
      options.out_override.empty() ? cfg.output_dir : options.out_override;

  SweepSummary summary;
  for (const long n : iteration_counts) {
    if (n < 1) throw ConfigError("$.ns: iteration counts must be >= 1");
    RunConfig point_cfg = cfg;
    point_cfg.iterations = n;
    ExecuteOptions point_options = options;
    point_options.out_override = out_dir + "/N" + std::to_string(n);
    const ExecuteSummary exec = execute(point_cfg, point_options);

    SweepPoint point;
    point.iterations = n;
    double sum = 0.0, sum_x = 0.0;
    for (const SeedOutcome& o : exec.per_seed) {
      sum += o.avg_sq_norm;
      sum_x += o.avg_sq_norm_x;
    }
    point.avg_sq_norm = sum / static_cast<double>(exec.per_seed.size());
    point.avg_sq_norm_x = sum_x / static_cast<double>(exec.per_seed.size());
    if (!exec.per_seed.empty()) point.trace_path = exec.per_seed.front().trace_path;
    summary.points.push_back(point);
  }

  if (summary.points.size() >= 3) {
    std::vector<std::pair<long, double>> pts, pts_x;
    bool positive = true, positive_x = true;
    for (const SweepPoint& p : summary.points) {
      pts.emplace_back(p.iterations, p.avg_sq_norm);
      pts_x.emplace_back(p.iterations, p.avg_sq_norm_x);
      positive = positive && p.avg_sq_norm > 0.0;
      positive_x = positive_x && p.avg_sq_norm_x > 0.0;
    }
    if (positive) summary.fit = rate_fit(pts);
    if (positive_x) summary.fit_x = rate_fit(pts_x);
  }

  if (options.write_files) {
    fs::create_directories(out_dir);
    json j;
    j["config_hash"] = cfg.config_hash;
    json points = json::array();
    for (const SweepPoint& p : summary.points)
      points.push_back({{"N", p.iterations},
                        {"avg_sq_norm", p.avg_sq_norm},
                        {"avg_sq_norm_x", p.avg_sq_norm_x},
                        {"trace", p.trace_path}});
    j["points"] = std::move(points);
    j["fit"] = {{"slope", summary.fit.slope},
                {"intercept", summary.fit.intercept},
                {"r2", summary.fit.r2}};
    j["fit_x"] = {{"slope", summary.fit_x.slope},
                  {"intercept", summary.fit_x.intercept},
                  {"r2", summary.fit_x.r2}};
    summary.summary_path = out_dir + "/sweep.json";
    std::ofstream out(summary.summary_path, std::ios::binary);
    if (!out) throw std::runtime_error("sweep: cannot open " + summary.summary_path);
    out << j.dump(2) << "\n";
  }
  return summary;
}

}  // namespace saddleopt
