#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "saddleopt/diagnostics.hpp"
#include "saddleopt/problems.hpp"

namespace saddleopt {

// ---------------------------------------------------------------------------
// Iterative schemes as single-step functions over explicit state, plus the
// driver loop with trajectory recording and uniform output selection.
// ---------------------------------------------------------------------------

enum class OptimizerKind {
  Sgda,
  AltSgda,
  Og,
  Seg,
  AdamGda,
  AmsgradGda,
  AmsgradEg,
  AmsgradEgDrd,
  Aeg,
  AegDrd,
};

std::string to_string(OptimizerKind k);
std::optional<OptimizerKind> optimizer_from_string(const std::string& name);
const std::vector<std::string>& optimizer_names();

/// Thrown when a runtime invariant breaks (non-finite iterates, monotonicity
/// violations); distinct from configuration errors for exit-code purposes.
struct AuditError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Counts oracle traffic and tracks the realized norms needed by the
/// boundedness audits. All stochastic gradient access in a run goes through
/// one of these.
class Oracle {
 public:
  Oracle(const ProblemSpec& p, const NoiseModel& noise, RngStream& rng)
      : problem_(p), noise_(noise), rng_(rng) {}

  FieldValue sample(const SaddleVector& z, long batch);

  long evaluations() const { return evaluations_; }
  long samples() const { return samples_; }
  double max_query_norm() const { return max_query_norm_; }
  double max_sample_norm() const { return max_sample_norm_; }
  NoiseKind noise_kind() const { return noise_.kind; }

 private:
  const ProblemSpec& problem_;
  const NoiseModel& noise_;
  RngStream& rng_;
  long evaluations_ = 0;
  long samples_ = 0;
  double max_query_norm_ = 0.0;
  double max_sample_norm_ = 0.0;
};

// --- single steps -----------------------------------------------------------

SaddleVector sgda_step(Oracle& oracle, const SaddleVector& z, double eta, long batch);

// x first, then y at the intermediate point (two oracle queries).
SaddleVector alt_sgda_step(Oracle& oracle, const SaddleVector& z, double eta, long batch);

/// Optimistic-gradient state: the gradient taken at the previous
/// extrapolation point, bootstrapped from the start point on first use.
struct OptimisticState {
  FieldValue carried;
  bool primed = false;
};

SaddleVector og_step(Oracle& oracle, OptimisticState& state, const SaddleVector& z,
                     double eta, long batch);

SaddleVector seg_step(Oracle& oracle, const SaddleVector& z, double eta, long batch,
                      const FeasibleSet& feasible);

// Simultaneous Adam / AMSGrad on the joint field (max_rule selects AMSGrad).
SaddleVector adam_family_gda_step(Oracle& oracle, MomentumState& state,
                                  const SaddleVector& z, const ScheduleSpec& schedules,
                                  double delta, long k, bool max_rule);

// Extra-gradient AMSGrad step, iteration k >= 1. The max-block rate y_rate
// equals eta for the base algorithm and decays for the dual-rate variant;
// moment bookkeeping is shared and unsplit either way.
SaddleVector amsgrad_eg_core(Oracle& oracle, MomentumState& state, const SaddleVector& z,
                             double eta, double y_rate, double beta1t, double beta2,
                             double delta, long batch);

SaddleVector amsgrad_eg_step(Oracle& oracle, MomentumState& state, const SaddleVector& z,
                             const ScheduleSpec& schedules, double delta, long k);
SaddleVector amsgrad_eg_drd_step(Oracle& oracle, MomentumState& state,
                                 const SaddleVector& z, const ScheduleSpec& schedules,
                                 double delta, long k);

// Adaptive extra-gradient: preconditioners from running sums of squared
// gradient coordinates (base stream before the shadow update, shadow stream
// before the real update).
SaddleVector aeg_core(Oracle& oracle, Vec& sumsq, const SaddleVector& z, double eta,
                      double y_rate, double delta, long batch);

SaddleVector aeg_step(Oracle& oracle, Vec& sumsq, const SaddleVector& z, double eta,
                      double delta, long batch);
SaddleVector aeg_drd_step(Oracle& oracle, Vec& sumsq, const SaddleVector& z, double eta,
                          double delta, long batch, long k);

// --- driver ------------------------------------------------------------------

struct ProbeReference {
  enum class Kind { Analytic, Final, Literal };
  Kind kind = Kind::Analytic;
  std::optional<SaddleVector> literal;
};

struct RunOptions {
  OptimizerKind kind = OptimizerKind::AmsgradEg;
  ScheduleSpec schedules;
  double delta = 1e-8;  // preconditioner offset
  SaddleVector start;
  long iterations = 1;
  std::uint64_t seed = 0;
  bool record_trajectory = false;
  long trace_every = 1;
  ProbeReference probe;
};

struct RunResult {
  std::optional<std::vector<SaddleVector>> trajectory;  // iterates 0..N-1
  std::vector<TraceRow> trace;
  SaddleVector output;          // iterate at selected_index (uniform over 0..N-1)
  long selected_index = 0;
  SaddleVector final_point;     // point after the N-th step
  SaddleVector min_grad_iterate;
  long min_grad_index = 0;
  SaddleVector reference;       // the probe reference the trace used

  double max_norm_seen = 0.0;        // realized sup of ||z|| incl. shadow points
  double momentum_max_norm = 0.0;    // max of ||m||, ||m_hat|| over the run
  double velocity_max_entry = 0.0;   // max coordinate of v, v_hat over the run
  bool preconditioner_monotone = true;
  double avg_sq_norm_final = 0.0;    // (1/N) sum_t ||V(z_t)||^2, t < N
  double avg_sq_norm_x_final = 0.0;  // same for the min block

  long oracle_evaluations = 0;
  long oracle_samples = 0;
  // realized sup over the batched gradient estimates' norms (the quantities
  // the momentum recursion actually consumes)
  double oracle_max_sample_norm = 0.0;
  NoiseKind noise_kind = NoiseKind::None;

  std::vector<double> adagrad_scale_history;  // max_i sqrt(sumsq) per iteration

  BoundAuditInputs audit_inputs() const {
    return {momentum_max_norm, velocity_max_entry, preconditioner_monotone, noise_kind,
            oracle_max_sample_norm};
  }
};

// Executes N steps from options.start, tracing iterates z_0..z_{N-1} every
// trace_every iterations (the last one always) and selecting the output
// uniformly from them on a dedicated random stream.
RunResult run(const ProblemSpec& p, const NoiseModel& noise, const RunOptions& options);

inline BoundAuditReport bound_audit(const RunResult& r, const ProblemSpec& p) {
  return bound_audit(r.audit_inputs(), p);
}

inline double cumulative_gradient_exponent(const RunResult& r, double delta) {
  return cumulative_gradient_exponent(r.adagrad_scale_history, delta);
}

}  // namespace saddleopt
