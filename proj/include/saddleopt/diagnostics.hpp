#pragma once

#include <string>
#include <vector>

#include "saddleopt/problems.hpp"

namespace saddleopt {

// ---------------------------------------------------------------------------
// Per-iteration probes and post-hoc analyses. All probes evaluate the
// deterministic field; they never consume random state, so attaching probes
// to a run cannot perturb its trajectory.
// ---------------------------------------------------------------------------

struct TraceRow {
  long iter = 0;
  double norm_v = 0.0;
  double norm_vx = 0.0;
  double norm_vy = 0.0;
  double mvi_total = 0.0;
  double mvi_x = 0.0;
  double mvi_y = 0.0;
  double avg_sq_norm = 0.0;  // running mean of ||V(z_t)||^2 over t <= iter
  double residual = 0.0;
  double dist_to_ref = 0.0;
};

struct MviProbe {
  double total = 0.0;    // <-V(z), z - zref>
  double x_sided = 0.0;  // <-Vx(z), x - xref>
  double y_sided = 0.0;  // <-Vy(z), y - yref>
};

MviProbe mvi_probe(const ProblemSpec& p, const SaddleVector& z, const SaddleVector& zref);
// Same probe with the field already evaluated at z.
MviProbe mvi_probe_from_field(const FieldValue& v, const SaddleVector& z,
                              const SaddleVector& zref);

// Stationarity residual r_eta(z) = ||z - proj(z + eta*V(z))||_2, which
// reduces to eta*||V(z)||_2 on unconstrained problems (same expression).
double residual(const ProblemSpec& p, const SaddleVector& z, double eta);
double residual_from_field(const FeasibleSet& feasible, const SaddleVector& z,
                           const FieldValue& v, double eta);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares on (log N, log value); needs >= 3 points with
// N >= 1 and value > 0.
RateFit rate_fit(const std::vector<std::pair<long, double>>& points);

// ---------------------------------------------------------------------------
// Run-level audits. The inputs are gathered online by the driver loop.
// ---------------------------------------------------------------------------

struct BoundAuditInputs {
  double momentum_max_norm = 0.0;   // max over steps of ||m||, ||m_hat||
  double velocity_max_entry = 0.0;  // max coordinate of v, v_hat seen
  bool preconditioner_monotone = true;
  NoiseKind noise = NoiseKind::None;
  double oracle_max_sample_norm = 0.0;  // realized sup of ||V(z;xi)||_2
};

struct BoundAuditReport {
  enum class Status { Pass, Fail, NotApplicable };
  Status status = Status::NotApplicable;
  std::string reason;
  double momentum_max_norm = 0.0;
  double momentum_bound = 0.0;   // G
  double velocity_max_entry = 0.0;
  double velocity_bound = 0.0;   // G^2
  double worst_momentum_excess = 0.0;
  double worst_velocity_excess = 0.0;
  bool monotone = true;
};

// Checks the momentum/velocity bounds implied by a G-bounded oracle together
// with the preconditioner monotonicity chain. Applicable only when the
// problem declares G and the realized oracle respected it (deterministic or
// clipped noise, every sample within G).
BoundAuditReport bound_audit(const BoundAuditInputs& inputs, const ProblemSpec& p);

inline constexpr double kAuditSlack = 1e-12;

// Smallest empirical exponent a with max_i s_{k,i} <= 2*delta*k^a for every
// k, given the per-iteration history of max_i s_{k,i} (k = 1, 2, ...).
// Clamped to [0, inf); +inf when even k = 1 fails.
double cumulative_gradient_exponent(const std::vector<double>& max_scale_history,
                                    double delta);

std::string to_string(BoundAuditReport::Status s);

}  // namespace saddleopt
