#include "saddleopt/core.hpp"

#include <algorithm>
#include <cmath>

namespace saddleopt {

SaddleVector::SaddleVector(Vec values, std::size_t min_block, std::size_t max_block)
    : data(std::move(values)), n1(min_block), n2(max_block) {
  if (n1 < 1 || n2 < 1)
    throw std::invalid_argument("SaddleVector: both blocks need at least one entry");
  if (data.size() != n1 + n2)
    throw std::invalid_argument("SaddleVector: data length does not match n1 + n2");
}

SaddleVector SaddleVector::zeros(std::size_t n1, std::size_t n2) {
  return SaddleVector(Vec(n1 + n2, 0.0), n1, n2);
}

FieldValue::FieldValue(Vec values, std::size_t min_block, std::size_t max_block)
    : data(std::move(values)), n1(min_block), n2(max_block) {
  if (n1 < 1 || n2 < 1)
    throw std::invalid_argument("FieldValue: both blocks need at least one entry");
  if (data.size() != n1 + n2)
    throw std::invalid_argument("FieldValue: data length does not match n1 + n2");
}

FieldValue FieldValue::zeros(std::size_t n1, std::size_t n2) {
  return FieldValue(Vec(n1 + n2, 0.0), n1, n2);
}

std::pair<Vec, Vec> split(const SaddleVector& z) {
  Vec x(z.data.begin(), z.data.begin() + static_cast<std::ptrdiff_t>(z.n1));
  Vec y(z.data.begin() + static_cast<std::ptrdiff_t>(z.n1), z.data.end());
  return {std::move(x), std::move(y)};
}

SaddleVector join(const Vec& x, const Vec& y) {
  Vec data;
  data.reserve(x.size() + y.size());
  data.insert(data.end(), x.begin(), x.end());
  data.insert(data.end(), y.begin(), y.end());
  return SaddleVector(std::move(data), x.size(), y.size());
}

double block_x_squared_norm(const FieldValue& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.n1; ++i) s += v.data[i] * v.data[i];
  return s;
}

double block_y_squared_norm(const FieldValue& v) {
  double s = 0.0;
  for (std::size_t i = v.n1; i < v.data.size(); ++i) s += v.data[i] * v.data[i];
  return s;
}

DiagonalPreconditioner DiagonalPreconditioner::from_velocity(double offset,
                                                             const Vec& velocity) {
  if (!(offset > 0.0))
    throw std::invalid_argument("DiagonalPreconditioner: offset must be positive");
  DiagonalPreconditioner h;
  h.offset = offset;
  h.diag.resize(velocity.size());
  for (std::size_t i = 0; i < velocity.size(); ++i) {
    if (velocity[i] < 0.0)
      throw std::invalid_argument("DiagonalPreconditioner: negative velocity entry");
    h.diag[i] = std::sqrt(velocity[i]);
  }
  return h;
}

Vec DiagonalPreconditioner::apply_inverse(const Vec& g) const {
  if (g.size() != diag.size())
    throw std::invalid_argument("apply_inverse: length mismatch");
  Vec r(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) r[i] = g[i] / (offset + diag[i]);
  return r;
}

MomentumState MomentumState::zeros(std::size_t d) {
  MomentumState s;
  s.m.assign(d, 0.0);
  s.m_hat.assign(d, 0.0);
  s.v.assign(d, 0.0);
  s.v_hat.assign(d, 0.0);
  return s;
}

Vec amsgrad_velocity_update(const Vec& v_prev, const Vec& g, double beta2) {
  if (v_prev.size() != g.size())
    throw std::invalid_argument("amsgrad_velocity_update: length mismatch");
  Vec r(v_prev.size());
  for (std::size_t i = 0; i < v_prev.size(); ++i)
    r[i] = std::max(beta2 * v_prev[i] + (1.0 - beta2) * g[i] * g[i], v_prev[i]);
  return r;
}

void validate_schedules(const ScheduleSpec& s) {
  if (!(s.beta1 >= 0.0 && s.beta1 <= 1.0))
    throw std::invalid_argument("schedules: beta1 must lie in [0, 1]");
  if (s.beta1_kind == Beta1Kind::Exponential && !(s.decay > 0.0 && s.decay < 1.0))
    throw std::invalid_argument("schedules: exponential decay must lie in (0, 1)");
  if (!(s.beta2 >= 0.0 && s.beta2 < 1.0))
    throw std::invalid_argument("schedules: beta2 must lie in [0, 1)");
  if (!(s.eta > 0.0)) throw std::invalid_argument("schedules: eta must be positive");
  if (s.batch_kind == BatchKind::Constant && s.batch_size < 1)
    throw std::invalid_argument("schedules: constant batch size must be >= 1");
}

double eval_beta1(const ScheduleSpec& s, long t) {
  if (t < 1) throw std::invalid_argument("eval_beta1: step index must be >= 1");
  switch (s.beta1_kind) {
    case Beta1Kind::Constant:
      return s.beta1;
    case Beta1Kind::Exponential:
      return s.beta1 * std::pow(s.decay, static_cast<double>(t - 1));
    case Beta1Kind::Harmonic:
      return 1.0 / static_cast<double>(t);
  }
  return s.beta1;
}

long eval_batch(const ScheduleSpec& s, long k) {
  if (k < 1) throw std::invalid_argument("eval_batch: step index must be >= 1");
  return s.batch_kind == BatchKind::Constant ? s.batch_size : k + 1;
}

double dual_rate(const ScheduleSpec& s, long k) {
  if (k < 1) throw std::invalid_argument("dual_rate: step index must be >= 1");
  switch (s.dual_decay) {
    case DualDecay::None:
      return s.eta;
    case DualDecay::InvSqrt:
      return s.eta / std::sqrt(static_cast<double>(k));
    case DualDecay::InvLinear:
      return s.eta / static_cast<double>(k);
  }
  return s.eta;
}

std::string to_string(Beta1Kind k) {
  switch (k) {
    case Beta1Kind::Constant: return "constant";
    case Beta1Kind::Exponential: return "exponential";
    case Beta1Kind::Harmonic: return "harmonic";
  }
  return "?";
}

std::string to_string(DualDecay k) {
  switch (k) {
    case DualDecay::None: return "none";
    case DualDecay::InvSqrt: return "inv_sqrt";
    case DualDecay::InvLinear: return "inv_linear";
  }
  return "?";
}

std::string to_string(BatchKind k) {
  return k == BatchKind::Constant ? "constant" : "linear";
}

}  // namespace saddleopt
