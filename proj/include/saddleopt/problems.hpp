#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "saddleopt/core.hpp"

namespace saddleopt {

// ---------------------------------------------------------------------------
// Analytic saddle problems with a stochastic first-order oracle, feasible
// sets with Euclidean projection, and a finite-difference gradient checker.
// ---------------------------------------------------------------------------

enum class FeasibleKind { Unconstrained, Ball, Box };

struct FeasibleSet {
  FeasibleKind kind = FeasibleKind::Unconstrained;
  double radius = 0.0;  // ball
  Vec center;           // ball; empty means origin
  Vec lo, hi;           // box

  static FeasibleSet unconstrained();
  static FeasibleSet ball(double radius, Vec center = {});
  static FeasibleSet box(Vec lo, Vec hi);

  bool bounded() const { return kind != FeasibleKind::Unconstrained; }
  // Largest l2 norm attained on the set; +inf when unconstrained.
  double max_norm(std::size_t dim) const;
};

// Euclidean projection: identity / radial scaling / per-coordinate clamp.
Vec project(const FeasibleSet& s, const Vec& p);

enum class NoiseKind { None, Gaussian, ClippedGaussian };

struct NoiseModel {
  NoiseKind kind = NoiseKind::None;
  double sigma = 0.0;  // per-coordinate standard deviation
  double bound = 0.0;  // l2 cap for clipped samples

  static NoiseModel none() { return {}; }
  static NoiseModel gaussian(double sigma);
  static NoiseModel clipped_gaussian(double sigma, double bound);
};

enum class MviClass { FullMvi, OneSidedMvi, None };

struct ProblemSpec {
  std::string name;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::function<FieldValue(const SaddleVector&)> field;
  std::optional<std::function<double(const SaddleVector&)>> objective;
  double lipschitz = 0.0;             // L of the field (over the bound region)
  std::optional<double> grad_bound;   // G: sup of ||V||_2 over the feasible set
  FeasibleSet feasible;
  std::optional<SaddleVector> reference;  // candidate MVI / one-sided solution
  MviClass mvi_class = MviClass::None;

  std::size_t dim() const { return n1 + n2; }
};

// Deterministic field evaluation; throws on shape mismatch.
FieldValue evaluate_field(const ProblemSpec& p, const SaddleVector& z);

// Mean of `batch` iid oracle samples. With NoiseKind::None this is exactly
// evaluate_field (no averaging round-off is introduced).
FieldValue sample_gradient(const ProblemSpec& p, const NoiseModel& noise,
                           const SaddleVector& z, long batch, RngStream& rng);

struct FdReport {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  bool pass = false;
};

// Central-difference check of the field against the objective, sign-flipped
// on the min block. Relative tolerance 1e-6 with an absolute fallback of
// 1e-9 near zero gradients.
FdReport fd_check(const ProblemSpec& p, const SaddleVector& z, double h = 1e-5);

// ---------------------------------------------------------------------------
// Built-in problems. `bound_radius` feeds the L and G metadata; the default
// feasible set is the origin-centered ball of that radius.
// ---------------------------------------------------------------------------

struct BilinearParams {
  std::vector<Vec> coupling = {{1.0}};  // n1 x n2 matrix A of u'Av + u'a + v'b
  Vec a = {0.0};
  Vec b = {0.0};
};

ProblemSpec make_bilinear(const BilinearParams& params,
                          std::optional<FeasibleSet> feasible = std::nullopt,
                          double bound_radius = 2.0);

// phi(x, y) = 0.5*||x||^2 - 0.5*||y||^2
ProblemSpec make_quadratic_saddle(std::size_t n1 = 1, std::size_t n2 = 1,
                                  std::optional<FeasibleSet> feasible = std::nullopt,
                                  double bound_radius = 2.0);

// phi(theta, psi) = f(theta * psi), f(t) = -log(1 + exp(-t))
ProblemSpec make_dirac_gan(std::optional<FeasibleSet> feasible = std::nullopt,
                           double bound_radius = 2.0);

// phi(x, y) = x^2 * (1 + 0.5*sin(y)^2); one-sided stationarity at x = 0.
ProblemSpec make_one_sided_synthetic(std::optional<FeasibleSet> feasible = std::nullopt,
                                     double bound_radius = 2.0);

const std::vector<std::string>& builtin_problem_names();

// Largest singular value via power iteration on A'A (deterministic start).
double spectral_norm(const std::vector<Vec>& a);

}  // namespace saddleopt
