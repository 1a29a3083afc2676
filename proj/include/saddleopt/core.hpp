#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include "saddleopt/numeric.hpp"

namespace saddleopt {

// ---------------------------------------------------------------------------
// Shared vocabulary for saddle-point iterations: points and update fields
// split into a min-block and a max-block, diagonal preconditioners, momentum
// state, and hyper-parameter schedules.
// ---------------------------------------------------------------------------

/// A point z = (x, y) with an explicit min/max block split.
struct SaddleVector {
  Vec data;
  std::size_t n1 = 0;  // min-block size
  std::size_t n2 = 0;  // max-block size

  SaddleVector() = default;
  SaddleVector(Vec values, std::size_t min_block, std::size_t max_block);

  static SaddleVector zeros(std::size_t n1, std::size_t n2);

  std::size_t dim() const { return n1 + n2; }
  std::span<const double> x() const { return {data.data(), n1}; }
  std::span<const double> y() const { return {data.data() + n1, n2}; }
  std::span<double> x() { return {data.data(), n1}; }
  std::span<double> y() { return {data.data() + n1, n2}; }
  bool is_finite() const { return all_finite(data); }
};

/// The update field evaluated at a point, same block layout as the point:
/// (vx, vy) = (-grad_x phi, grad_y phi).
struct FieldValue {
  Vec data;
  std::size_t n1 = 0;
  std::size_t n2 = 0;

  FieldValue() = default;
  FieldValue(Vec values, std::size_t min_block, std::size_t max_block);

  static FieldValue zeros(std::size_t n1, std::size_t n2);

  std::size_t dim() const { return n1 + n2; }
  std::span<const double> vx() const { return {data.data(), n1}; }
  std::span<const double> vy() const { return {data.data() + n1, n2}; }
  std::span<double> vx() { return {data.data(), n1}; }
  std::span<double> vy() { return {data.data() + n1, n2}; }
};

std::pair<Vec, Vec> split(const SaddleVector& z);
SaddleVector join(const Vec& x, const Vec& y);

// Squared norm of the min-block prefix only.
double block_x_squared_norm(const FieldValue& v);
double block_y_squared_norm(const FieldValue& v);

/// Diagonal matrix offset*I + Diag(diag); diag holds sqrt-velocity entries so
/// every effective entry is >= offset > 0 and the inverse is well defined.
struct DiagonalPreconditioner {
  double offset = 0.0;
  Vec diag;

  static DiagonalPreconditioner from_velocity(double offset, const Vec& velocity);

  // result[i] = g[i] / (offset + diag[i])
  Vec apply_inverse(const Vec& g) const;
};

/// AMSGrad moment state (momentum and running-max velocity, base and shadow).
struct MomentumState {
  Vec m;
  Vec m_hat;
  Vec v;
  Vec v_hat;

  static MomentumState zeros(std::size_t d);
};

// v_next[i] = max(beta2 * v_prev[i] + (1 - beta2) * g[i]^2, v_prev[i])
Vec amsgrad_velocity_update(const Vec& v_prev, const Vec& g, double beta2);

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

enum class Beta1Kind { Constant, Exponential, Harmonic };
enum class DualDecay { None, InvSqrt, InvLinear };
enum class BatchKind { Constant, Linear };

struct ScheduleSpec {
  Beta1Kind beta1_kind = Beta1Kind::Exponential;
  double beta1 = 0.9;
  double decay = 0.9;  // lambda of the exponential momentum schedule
  double beta2 = 0.99;
  double eta = 0.1;
  DualDecay dual_decay = DualDecay::None;
  BatchKind batch_kind = BatchKind::Constant;
  long batch_size = 1;
};

// Throws std::invalid_argument when a parameter is out of range.
void validate_schedules(const ScheduleSpec& s);

// Momentum mixing weight at step t >= 1 (t = 0 rejected):
//   constant     -> beta1
//   exponential  -> beta1 * decay^(t-1)
//   harmonic     -> 1/t
double eval_beta1(const ScheduleSpec& s, long t);

// Batch size at step k >= 1: constant -> batch_size, linear -> k + 1.
long eval_batch(const ScheduleSpec& s, long k);

// Max-block step size at iteration k: eta, eta/sqrt(k) or eta/k.
double dual_rate(const ScheduleSpec& s, long k);

std::string to_string(Beta1Kind k);
std::string to_string(DualDecay k);
std::string to_string(BatchKind k);

inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace saddleopt
