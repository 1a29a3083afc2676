#include "saddleopt/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace saddleopt {

namespace {

const std::vector<std::pair<OptimizerKind, const char*>>& kind_table() {
  static const std::vector<std::pair<OptimizerKind, const char*>> table = {
      {OptimizerKind::Sgda, "sgda"},
      {OptimizerKind::AltSgda, "alt_sgda"},
      {OptimizerKind::Og, "og"},
      {OptimizerKind::Seg, "seg"},
      {OptimizerKind::AdamGda, "adam_gda"},
      {OptimizerKind::AmsgradGda, "amsgrad_gda"},
      {OptimizerKind::AmsgradEg, "amsgrad_eg"},
      {OptimizerKind::AmsgradEgDrd, "amsgrad_eg_drd"},
      {OptimizerKind::Aeg, "aeg"},
      {OptimizerKind::AegDrd, "aeg_drd"},
  };
  return table;
}

bool elementwise_ge(const Vec& a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i] >= b[i])) return false;
  return true;
}

double max_entry(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, v);
  return m;
}

// z + (eta * dir.x, y_rate * dir.y)
SaddleVector stepped(const SaddleVector& z, const Vec& dir, double eta, double y_rate) {
  SaddleVector out = z;
  for (std::size_t i = 0; i < z.n1; ++i) out.data[i] += eta * dir[i];
  for (std::size_t i = z.n1; i < z.dim(); ++i) out.data[i] += y_rate * dir[i];
  return out;
}

}  // namespace

std::string to_string(OptimizerKind k) {
  for (const auto& [kind, name] : kind_table())
    if (kind == k) return name;
  return "?";
}

std::optional<OptimizerKind> optimizer_from_string(const std::string& name) {
  for (const auto& [kind, tag] : kind_table())
    if (name == tag) return kind;
  return std::nullopt;
}

const std::vector<std::string>& optimizer_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [kind, name] : kind_table()) out.emplace_back(name);
    return out;
  }();
  return names;
}

FieldValue Oracle::sample(const SaddleVector& z, long batch) {
  FieldValue g = sample_gradient(problem_, noise_, z, batch, rng_);
  evaluations_ += 1;
  samples_ += batch;
  max_query_norm_ = std::max(max_query_norm_, l2_norm(z.data));
  max_sample_norm_ = std::max(max_sample_norm_, l2_norm(g.data));
  return g;
}

SaddleVector sgda_step(Oracle& oracle, const SaddleVector& z, double eta, long batch) {
  const FieldValue g = oracle.sample(z, batch);
  return stepped(z, g.data, eta, eta);
}

SaddleVector alt_sgda_step(Oracle& oracle, const SaddleVector& z, double eta, long batch) {
  const FieldValue g1 = oracle.sample(z, batch);
  SaddleVector mid = z;
  for (std::size_t i = 0; i < z.n1; ++i) mid.data[i] += eta * g1.data[i];
  const FieldValue g2 = oracle.sample(mid, batch);
  SaddleVector out = mid;
  for (std::size_t i = z.n1; i < z.dim(); ++i) out.data[i] += eta * g2.data[i];
  return out;
}

SaddleVector og_step(Oracle& oracle, OptimisticState& state, const SaddleVector& z,
                     double eta, long batch) {
  if (!state.primed) {
    state.carried = oracle.sample(z, batch);
    state.primed = true;
  }
  const SaddleVector shadow = stepped(z, state.carried.data, eta, eta);
  state.carried = oracle.sample(shadow, batch);
  return stepped(z, state.carried.data, eta, eta);
}

SaddleVector seg_step(Oracle& oracle, const SaddleVector& z, double eta, long batch,
                      const FeasibleSet& feasible) {
  const FieldValue g = oracle.sample(z, batch);
  SaddleVector shadow = z;
  shadow.data = project(feasible, stepped(z, g.data, eta, eta).data);
  const FieldValue gh = oracle.sample(shadow, batch);
  SaddleVector out = z;
  out.data = project(feasible, stepped(z, gh.data, eta, eta).data);
  return out;
}

SaddleVector adam_family_gda_step(Oracle& oracle, MomentumState& state,
                                  const SaddleVector& z, const ScheduleSpec& schedules,
                                  double delta, long k, bool max_rule) {
  const long batch = eval_batch(schedules, k);
  const double beta1t = eval_beta1(schedules, k);
  const FieldValue g = oracle.sample(z, batch);
  const std::size_t d = z.dim();
  for (std::size_t i = 0; i < d; ++i)
    state.m[i] = beta1t * state.m[i] + (1.0 - beta1t) * g.data[i];
  for (std::size_t i = 0; i < d; ++i) {
    const double ema = schedules.beta2 * state.v[i] +
                       (1.0 - schedules.beta2) * g.data[i] * g.data[i];
    state.v[i] = max_rule ? std::max(ema, state.v[i]) : ema;
  }
  const auto h = DiagonalPreconditioner::from_velocity(delta, state.v);
  return stepped(z, h.apply_inverse(state.m), schedules.eta, schedules.eta);
}

SaddleVector amsgrad_eg_core(Oracle& oracle, MomentumState& state, const SaddleVector& z,
                             double eta, double y_rate, double beta1t, double beta2,
                             double delta, long batch) {
  const std::size_t d = z.dim();

  // base half: momentum/velocity from the gradient at the current point
  const FieldValue g = oracle.sample(z, batch);
  for (std::size_t i = 0; i < d; ++i)
    state.m[i] = beta1t * state.m_hat[i] + (1.0 - beta1t) * g.data[i];
  state.v = amsgrad_velocity_update(state.v_hat, g.data, beta2);
  const auto h = DiagonalPreconditioner::from_velocity(delta, state.v);
  const SaddleVector shadow = stepped(z, h.apply_inverse(state.m), eta, y_rate);

  // shadow half: refresh both and take the real step from the base point
  const FieldValue gh = oracle.sample(shadow, batch);
  for (std::size_t i = 0; i < d; ++i)
    state.m_hat[i] = beta1t * state.m[i] + (1.0 - beta1t) * gh.data[i];
  state.v_hat = amsgrad_velocity_update(state.v, gh.data, beta2);
  const auto h_hat = DiagonalPreconditioner::from_velocity(delta, state.v_hat);
  return stepped(z, h_hat.apply_inverse(state.m_hat), eta, y_rate);
}

SaddleVector amsgrad_eg_step(Oracle& oracle, MomentumState& state, const SaddleVector& z,
                             const ScheduleSpec& schedules, double delta, long k) {
  return amsgrad_eg_core(oracle, state, z, schedules.eta, schedules.eta,
                         eval_beta1(schedules, k), schedules.beta2, delta,
                         eval_batch(schedules, k));
}

SaddleVector amsgrad_eg_drd_step(Oracle& oracle, MomentumState& state,
                                 const SaddleVector& z, const ScheduleSpec& schedules,
                                 double delta, long k) {
  const double y_rate = schedules.eta / std::sqrt(static_cast<double>(k));
  return amsgrad_eg_core(oracle, state, z, schedules.eta, y_rate,
                         eval_beta1(schedules, k), schedules.beta2, delta,
                         eval_batch(schedules, k));
}

SaddleVector aeg_core(Oracle& oracle, Vec& sumsq, const SaddleVector& z, double eta,
                      double y_rate, double delta, long batch) {
  const std::size_t d = z.dim();

  const FieldValue g = oracle.sample(z, batch);
  for (std::size_t i = 0; i < d; ++i) sumsq[i] += g.data[i] * g.data[i];
  const auto h = DiagonalPreconditioner::from_velocity(delta, sumsq);
  const SaddleVector shadow = stepped(z, h.apply_inverse(g.data), eta, y_rate);

  const FieldValue gh = oracle.sample(shadow, batch);
  for (std::size_t i = 0; i < d; ++i) sumsq[i] += gh.data[i] * gh.data[i];
  const auto s = DiagonalPreconditioner::from_velocity(delta, sumsq);
  return stepped(z, s.apply_inverse(gh.data), eta, y_rate);
}

SaddleVector aeg_step(Oracle& oracle, Vec& sumsq, const SaddleVector& z, double eta,
                      double delta, long batch) {
  return aeg_core(oracle, sumsq, z, eta, eta, delta, batch);
}

SaddleVector aeg_drd_step(Oracle& oracle, Vec& sumsq, const SaddleVector& z, double eta,
                          double delta, long batch, long k) {
  if (k < 1) throw std::invalid_argument("aeg_drd_step: iteration index must be >= 1");
  return aeg_core(oracle, sumsq, z, eta, eta / static_cast<double>(k), delta, batch);
}

RunResult run(const ProblemSpec& p, const NoiseModel& noise, const RunOptions& options) {
  if (options.iterations < 1)
    throw std::invalid_argument("run: need at least one iteration");
  if (options.trace_every < 1)
    throw std::invalid_argument("run: trace_every must be >= 1");
  if (options.start.n1 != p.n1 || options.start.n2 != p.n2)
    throw std::invalid_argument("run: start point shape does not match problem");
  if (!options.start.is_finite())
    throw std::invalid_argument("run: start point must be finite");
  if (!(options.delta > 0.0))
    throw std::invalid_argument("run: preconditioner offset must be positive");
  validate_schedules(options.schedules);

  // Normalize the dual decay against the optimizer family.
  ScheduleSpec schedules = options.schedules;
  const bool drd = options.kind == OptimizerKind::AmsgradEgDrd ||
                   options.kind == OptimizerKind::AegDrd;
  if (!drd && schedules.dual_decay != DualDecay::None)
    throw std::invalid_argument("run: dual_decay requires a dual-rate-decay optimizer");
  if (options.kind == OptimizerKind::AmsgradEgDrd && schedules.dual_decay == DualDecay::None)
    schedules.dual_decay = DualDecay::InvSqrt;
  if (options.kind == OptimizerKind::AegDrd && schedules.dual_decay == DualDecay::None)
    schedules.dual_decay = DualDecay::InvLinear;

  const long n = options.iterations;
  const std::size_t d = p.dim();

  RngStream noise_rng(RngStream::derive_key(options.seed, static_cast<std::uint64_t>(n),
                                            rng_purpose::kNoise));
  RngStream select_rng(RngStream::derive_key(options.seed, static_cast<std::uint64_t>(n),
                                             rng_purpose::kSelection));
  Oracle oracle(p, noise, noise_rng);

  std::optional<SaddleVector> zref;
  switch (options.probe.kind) {
    case ProbeReference::Kind::Analytic:
      if (!p.reference)
        throw std::invalid_argument("run: problem declares no analytic reference point");
      zref = *p.reference;
      break;
    case ProbeReference::Kind::Literal:
      if (!options.probe.literal)
        throw std::invalid_argument("run: literal probe reference missing");
      if (options.probe.literal->n1 != p.n1 || options.probe.literal->n2 != p.n2)
        throw std::invalid_argument("run: probe reference shape mismatch");
      zref = *options.probe.literal;
      break;
    case ProbeReference::Kind::Final:
      break;  // resolved after the loop
  }

  RunResult result;
  result.noise_kind = noise.kind;
  if (options.record_trajectory) result.trajectory.emplace();

  SaddleVector z = options.start;
  MomentumState moments = MomentumState::zeros(d);
  Vec sumsq(d, 0.0);
  OptimisticState og;

  const long selected = static_cast<long>(select_rng.next_below(static_cast<std::uint64_t>(n)));
  double sum_vsq = 0.0;
  double sum_vxsq = 0.0;
  double min_grad = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> deferred_rows;
  std::vector<SaddleVector> deferred_points;

  for (long k = 1; k <= n; ++k) {
    const long t = k - 1;
    if (!z.is_finite())
      throw AuditError("run: iterate became non-finite at iteration " + std::to_string(t));

    const FieldValue field = evaluate_field(p, z);
    const double vsq = squared_norm(field.data);
    const double vxsq = block_x_squared_norm(field);
    sum_vsq += vsq;
    sum_vxsq += vxsq;
    const double norm_v = std::sqrt(vsq);
    result.max_norm_seen = std::max(result.max_norm_seen, l2_norm(z.data));
    if (norm_v < min_grad) {
      min_grad = norm_v;
      result.min_grad_index = t;
      result.min_grad_iterate = z;
    }
    if (t == selected) result.output = z;
    if (result.trajectory) result.trajectory->push_back(z);

    if (t % options.trace_every == 0 || t == n - 1) {
      TraceRow row;
      row.iter = t;
      row.norm_v = norm_v;
      row.norm_vx = std::sqrt(vxsq);
      row.norm_vy = std::sqrt(block_y_squared_norm(field));
      row.avg_sq_norm = sum_vsq / static_cast<double>(t + 1);
      row.residual = residual_from_field(p.feasible, z, field, schedules.eta);
      if (zref) {
        const MviProbe probe = mvi_probe_from_field(field, z, *zref);
        row.mvi_total = probe.total;
        row.mvi_x = probe.x_sided;
        row.mvi_y = probe.y_sided;
        row.dist_to_ref = l2_norm(sub(z.data, zref->data));
      } else {
        deferred_rows.push_back(result.trace.size());
        deferred_points.push_back(z);
      }
      result.trace.push_back(row);
    }

    switch (options.kind) {
      case OptimizerKind::Sgda:
        z = sgda_step(oracle, z, schedules.eta, eval_batch(schedules, k));
        break;
      case OptimizerKind::AltSgda:
        z = alt_sgda_step(oracle, z, schedules.eta, eval_batch(schedules, k));
        break;
      case OptimizerKind::Og:
        z = og_step(oracle, og, z, schedules.eta, eval_batch(schedules, k));
        break;
      case OptimizerKind::Seg:
        z = seg_step(oracle, z, schedules.eta, eval_batch(schedules, k), p.feasible);
        break;
      case OptimizerKind::AdamGda:
      case OptimizerKind::AmsgradGda: {
        const Vec prev_v = moments.v;
        z = adam_family_gda_step(oracle, moments, z, schedules, options.delta, k,
                                 options.kind == OptimizerKind::AmsgradGda);
        result.momentum_max_norm = std::max(result.momentum_max_norm, l2_norm(moments.m));
        result.velocity_max_entry =
            std::max(result.velocity_max_entry, max_entry(moments.v));
        if (options.kind == OptimizerKind::AmsgradGda)
          result.preconditioner_monotone =
              result.preconditioner_monotone && elementwise_ge(moments.v, prev_v);
        break;
      }
      case OptimizerKind::AmsgradEg:
      case OptimizerKind::AmsgradEgDrd: {
        const Vec prev_v_hat = moments.v_hat;
        z = amsgrad_eg_core(oracle, moments, z, schedules.eta, dual_rate(schedules, k),
                            eval_beta1(schedules, k), schedules.beta2, options.delta,
                            eval_batch(schedules, k));
        result.momentum_max_norm = std::max(
            result.momentum_max_norm, std::max(l2_norm(moments.m), l2_norm(moments.m_hat)));
        result.velocity_max_entry =
            std::max(result.velocity_max_entry,
                     std::max(max_entry(moments.v), max_entry(moments.v_hat)));
        result.preconditioner_monotone = result.preconditioner_monotone &&
                                         elementwise_ge(moments.v, prev_v_hat) &&
                                         elementwise_ge(moments.v_hat, moments.v);
        break;
      }
      case OptimizerKind::Aeg:
      case OptimizerKind::AegDrd: {
        const Vec prev = sumsq;
        if (options.kind == OptimizerKind::Aeg)
          z = aeg_step(oracle, sumsq, z, schedules.eta, options.delta,
                       eval_batch(schedules, k));
        else
          z = aeg_core(oracle, sumsq, z, schedules.eta, dual_rate(schedules, k),
                       options.delta, eval_batch(schedules, k));
        result.preconditioner_monotone =
            result.preconditioner_monotone && elementwise_ge(sumsq, prev);
        result.adagrad_scale_history.push_back(std::sqrt(max_entry(sumsq)));
        break;
      }
    }
  }

  if (!z.is_finite())
    throw AuditError("run: final point became non-finite");
  result.final_point = z;
  result.max_norm_seen = std::max({result.max_norm_seen, l2_norm(z.data),
                                   oracle.max_query_norm()});

  if (!zref) {
    zref = z;  // probe against the end of training
    for (std::size_t i = 0; i < deferred_rows.size(); ++i) {
      TraceRow& row = result.trace[deferred_rows[i]];
      const SaddleVector& point = deferred_points[i];
      const MviProbe probe = mvi_probe(p, point, *zref);
      row.mvi_total = probe.total;
      row.mvi_x = probe.x_sided;
      row.mvi_y = probe.y_sided;
      row.dist_to_ref = l2_norm(sub(point.data, zref->data));
    }
  }
  result.reference = *zref;
  result.selected_index = selected;
  result.avg_sq_norm_final = sum_vsq / static_cast<double>(n);
  result.avg_sq_norm_x_final = sum_vxsq / static_cast<double>(n);
  result.oracle_evaluations = oracle.evaluations();
  result.oracle_samples = oracle.samples();
  result.oracle_max_sample_norm = oracle.max_sample_norm();
  return result;
}

}  // namespace saddleopt
