#include "saddleopt/diagnostics.hpp"

#include <cmath>
#include <limits>

namespace saddleopt {

MviProbe mvi_probe_from_field(const FieldValue& v, const SaddleVector& z,
                              const SaddleVector& zref) {
  if (z.n1 != zref.n1 || z.n2 != zref.n2)
    throw std::invalid_argument("mvi_probe: reference shape mismatch");
  if (v.dim() != z.dim()) throw std::invalid_argument("mvi_probe: field shape mismatch");
  MviProbe probe;
  for (std::size_t i = 0; i < z.dim(); ++i)
    probe.total += -v.data[i] * (z.data[i] - zref.data[i]);
  for (std::size_t i = 0; i < z.n1; ++i)
    probe.x_sided += -v.data[i] * (z.data[i] - zref.data[i]);
  for (std::size_t i = z.n1; i < z.dim(); ++i)
    probe.y_sided += -v.data[i] * (z.data[i] - zref.data[i]);
  return probe;
}

MviProbe mvi_probe(const ProblemSpec& p, const SaddleVector& z, const SaddleVector& zref) {
  return mvi_probe_from_field(evaluate_field(p, z), z, zref);
}

double residual_from_field(const FeasibleSet& feasible, const SaddleVector& z,
                           const FieldValue& v, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("residual: eta must be positive");
  if (feasible.kind == FeasibleKind::Unconstrained) return eta * l2_norm(v.data);
  Vec stepped = z.data;
  add_scaled(stepped, eta, v.data);
  const Vec projected = project(feasible, stepped);
  return l2_norm(sub(z.data, projected));
}

double residual(const ProblemSpec& p, const SaddleVector& z, double eta) {
  return residual_from_field(p.feasible, z, evaluate_field(p, z), eta);
}

RateFit rate_fit(const std::vector<std::pair<long, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("rate_fit: need at least 3 points");
  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& [n, value] : points) {
    if (n < 1) throw std::invalid_argument("rate_fit: N must be >= 1");
    if (!(value > 0.0)) throw std::invalid_argument("rate_fit: values must be positive");
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(value));
  }
  const std::size_t n = xs.size();
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xbar += xs[i];
    ybar += ys[i];
  }
  xbar /= static_cast<double>(n);
  ybar /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    syy += (ys[i] - ybar) * (ys[i] - ybar);
  }
  if (sxx == 0.0) throw std::invalid_argument("rate_fit: all N values coincide");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

BoundAuditReport bound_audit(const BoundAuditInputs& inputs, const ProblemSpec& p) {
  BoundAuditReport report;
  report.momentum_max_norm = inputs.momentum_max_norm;
  report.velocity_max_entry = inputs.velocity_max_entry;
  report.monotone = inputs.preconditioner_monotone;

  if (!p.grad_bound) {
    report.status = BoundAuditReport::Status::NotApplicable;
    report.reason = "problem declares no gradient bound G";
    return report;
  }
  const double g = *p.grad_bound;
  report.momentum_bound = g;
  report.velocity_bound = g * g;

  if (inputs.noise == NoiseKind::Gaussian) {
    report.status = BoundAuditReport::Status::NotApplicable;
    report.reason = "unclipped gaussian noise is not almost-surely bounded";
    return report;
  }
  if (inputs.oracle_max_sample_norm > g + kAuditSlack) {
    report.status = BoundAuditReport::Status::NotApplicable;
    report.reason = "realized oracle samples exceeded the declared bound G";
    return report;
  }

  report.worst_momentum_excess = std::max(0.0, inputs.momentum_max_norm - g);
  report.worst_velocity_excess = std::max(0.0, inputs.velocity_max_entry - g * g);
  const bool ok = inputs.momentum_max_norm <= g + kAuditSlack &&
                  inputs.velocity_max_entry <= g * g + kAuditSlack &&
                  inputs.preconditioner_monotone;
  report.status = ok ? BoundAuditReport::Status::Pass : BoundAuditReport::Status::Fail;
  if (!ok) report.reason = "momentum/velocity bound or monotonicity violated";
  return report;
}

double cumulative_gradient_exponent(const std::vector<double>& max_scale_history,
                                    double delta) {
  if (!(delta > 0.0))
    throw std::invalid_argument("cumulative_gradient_exponent: delta must be > 0");
  double alpha = 0.0;
  for (std::size_t idx = 0; idx < max_scale_history.size(); ++idx) {
    const double k = static_cast<double>(idx + 1);
    const double ratio = max_scale_history[idx] / (2.0 * delta);
    if (idx == 0) {
      // k = 1: k^a = 1 for every a, so the bound either holds or never will
      if (ratio > 1.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    if (ratio > 1.0) alpha = std::max(alpha, std::log(ratio) / std::log(k));
  }
  return alpha;
}

std::string to_string(BoundAuditReport::Status s) {
  switch (s) {
    case BoundAuditReport::Status::Pass: return "pass";
    case BoundAuditReport::Status::Fail: return "fail";
    case BoundAuditReport::Status::NotApplicable: return "not_applicable";
  }
  return "?";
}

}  // namespace saddleopt
