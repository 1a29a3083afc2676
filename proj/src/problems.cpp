#include "saddleopt/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace saddleopt {

namespace {

constexpr double kFdRelTol = 1e-6;
constexpr double kFdAbsTol = 1e-9;
// Coordinates with both values below this scale are judged by absolute error.
constexpr double kFdScaleFloor = 1e-6;

// Slightly fattened inside-test so re-projecting a projected point is a
// bit-exact no-op despite the rounding of the radial rescale.
constexpr double kBallSlack = 1.0 + 1e-12;

double checked_radius(const FeasibleSet& feasible, double fallback) {
  const double m = feasible.bounded()
                       ? feasible.max_norm(feasible.kind == FeasibleKind::Box
                                               ? feasible.lo.size()
                                               : feasible.center.size())
                       : fallback;
  return m;
}

}  // namespace

FeasibleSet FeasibleSet::unconstrained() { return {}; }

FeasibleSet FeasibleSet::ball(double radius, Vec center) {
  if (!(radius > 0.0)) throw std::invalid_argument("FeasibleSet: ball radius must be > 0");
  FeasibleSet s;
  s.kind = FeasibleKind::Ball;
  s.radius = radius;
  s.center = std::move(center);
  return s;
}

FeasibleSet FeasibleSet::box(Vec lo, Vec hi) {
  if (lo.size() != hi.size())
    throw std::invalid_argument("FeasibleSet: box bounds length mismatch");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) throw std::invalid_argument("FeasibleSet: box needs lo <= hi");
  FeasibleSet s;
  s.kind = FeasibleKind::Box;
  s.lo = std::move(lo);
  s.hi = std::move(hi);
  return s;
}

double FeasibleSet::max_norm(std::size_t dim) const {
  switch (kind) {
    case FeasibleKind::Unconstrained:
      return std::numeric_limits<double>::infinity();
    case FeasibleKind::Ball: {
      double c = 0.0;
      for (double v : center) c += v * v;
      (void)dim;
      return radius + std::sqrt(c);
    }
    case FeasibleKind::Box: {
      double s = 0.0;
      for (std::size_t i = 0; i < lo.size(); ++i)
        s += std::max(lo[i] * lo[i], hi[i] * hi[i]);
      return std::sqrt(s);
    }
  }
  return 0.0;
}

Vec project(const FeasibleSet& s, const Vec& p) {
  switch (s.kind) {
    case FeasibleKind::Unconstrained:
      return p;
    case FeasibleKind::Ball: {
      double sq = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double u = s.center.empty() ? p[i] : p[i] - s.center[i];
        sq += u * u;
      }
      const double nrm = std::sqrt(sq);
      if (nrm <= s.radius * kBallSlack) return p;
      const double scale = s.radius / nrm;
      Vec q(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double c = s.center.empty() ? 0.0 : s.center[i];
        q[i] = c + (p[i] - c) * scale;
      }
      return q;
    }
    case FeasibleKind::Box: {
      if (p.size() != s.lo.size())
        throw std::invalid_argument("project: box dimension mismatch");
      Vec q(p.size());
      for (std::size_t i = 0; i < p.size(); ++i)
        q[i] = std::clamp(p[i], s.lo[i], s.hi[i]);
      return q;
    }
  }
  return p;
}

NoiseModel NoiseModel::gaussian(double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("NoiseModel: sigma must be >= 0");
  NoiseModel n;
  n.kind = NoiseKind::Gaussian;
  n.sigma = sigma;
  return n;
}

NoiseModel NoiseModel::clipped_gaussian(double sigma, double bound) {
  if (sigma < 0.0) throw std::invalid_argument("NoiseModel: sigma must be >= 0");
  if (!(bound > 0.0)) throw std::invalid_argument("NoiseModel: clip bound must be > 0");
  NoiseModel n;
  n.kind = NoiseKind::ClippedGaussian;
  n.sigma = sigma;
  n.bound = bound;
  return n;
}

FieldValue evaluate_field(const ProblemSpec& p, const SaddleVector& z) {
  if (z.n1 != p.n1 || z.n2 != p.n2)
    throw std::invalid_argument("evaluate_field: point shape does not match problem");
  return p.field(z);
}

FieldValue sample_gradient(const ProblemSpec& p, const NoiseModel& noise,
                           const SaddleVector& z, long batch, RngStream& rng) {
  if (batch < 1) throw std::invalid_argument("sample_gradient: batch must be >= 1");
  FieldValue base = evaluate_field(p, z);
  if (noise.kind == NoiseKind::None) return base;

  const std::size_t d = base.data.size();
  Vec acc(d, 0.0);
  Vec sample(d);
  for (long s = 0; s < batch; ++s) {
    for (std::size_t i = 0; i < d; ++i)
      sample[i] = base.data[i] + noise.sigma * rng.next_gaussian();
    if (noise.kind == NoiseKind::ClippedGaussian) {
      const double nrm = l2_norm(sample);
      if (nrm > noise.bound) {
        const double scale = noise.bound / nrm;
        for (double& v : sample) v *= scale;
      }
    }
    for (std::size_t i = 0; i < d; ++i) acc[i] += sample[i];
  }
  for (double& v : acc) v /= static_cast<double>(batch);
  return FieldValue(std::move(acc), p.n1, p.n2);
}

FdReport fd_check(const ProblemSpec& p, const SaddleVector& z, double h) {
  if (!p.objective) throw std::invalid_argument("fd_check: problem has no objective");
  if (!(h > 0.0)) throw std::invalid_argument("fd_check: step must be positive");
  const auto& phi = *p.objective;
  const FieldValue v = evaluate_field(p, z);

  FdReport report;
  report.pass = true;
  SaddleVector probe = z;
  for (std::size_t i = 0; i < z.dim(); ++i) {
    const double saved = probe.data[i];
    probe.data[i] = saved + h;
    const double up = phi(probe);
    probe.data[i] = saved - h;
    const double down = phi(probe);
    probe.data[i] = saved;

    const double fd = (up - down) / (2.0 * h);
    const double expected = i < z.n1 ? -fd : fd;  // field flips sign on the min block
    const double err = std::abs(v.data[i] - expected);
    const double den = std::max(std::abs(v.data[i]), std::abs(expected));

    report.max_abs_err = std::max(report.max_abs_err, err);
    if (den >= kFdScaleFloor)
      report.max_rel_err = std::max(report.max_rel_err, err / den);
    const bool ok = (den > 0.0 && err / den < kFdRelTol) || err < kFdAbsTol;
    report.pass = report.pass && ok;
  }
  return report;
}

double spectral_norm(const std::vector<Vec>& a) {
  const std::size_t rows = a.size();
  if (rows == 0) return 0.0;
  const std::size_t cols = a[0].size();
  for (const Vec& row : a)
    if (row.size() != cols) throw std::invalid_argument("spectral_norm: ragged matrix");
  if (cols == 0) return 0.0;

  // power iteration on A'A
  Vec v(cols, 1.0 / std::sqrt(static_cast<double>(cols)));
  double lambda = 0.0;
  for (int iter = 0; iter < 500; ++iter) {
    Vec av(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) av[r] += a[r][c] * v[c];
    Vec w(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) w[c] += a[r][c] * av[r];
    const double nrm = l2_norm(w);
    if (nrm == 0.0) return 0.0;
    for (double& x : w) x /= nrm;
    const double next = nrm;
    const bool settled = std::abs(next - lambda) <= 1e-15 * std::max(1.0, next);
    lambda = next;
    v = std::move(w);
    if (settled && iter > 2) break;
  }
  return std::sqrt(lambda);
}

ProblemSpec make_bilinear(const BilinearParams& params,
                          std::optional<FeasibleSet> feasible, double bound_radius) {
  const std::size_t n1 = params.coupling.size();
  if (n1 == 0) throw std::invalid_argument("bilinear: empty coupling matrix");
  const std::size_t n2 = params.coupling[0].size();
  for (const Vec& row : params.coupling)
    if (row.size() != n2) throw std::invalid_argument("bilinear: ragged coupling matrix");
  if (params.a.size() != n1 || params.b.size() != n2)
    throw std::invalid_argument("bilinear: linear term sizes must match the matrix");

  ProblemSpec p;
  p.name = "bilinear";
  p.n1 = n1;
  p.n2 = n2;
  p.feasible = feasible ? *feasible : FeasibleSet::ball(bound_radius);

  const auto A = params.coupling;
  const Vec a = params.a;
  const Vec b = params.b;
  p.field = [A, a, b, n1, n2](const SaddleVector& z) {
    FieldValue v = FieldValue::zeros(n1, n2);
    // vx = -(A y + a), vy = A' x + b
    for (std::size_t r = 0; r < n1; ++r) {
      double s = a[r];
      for (std::size_t c = 0; c < n2; ++c) s += A[r][c] * z.data[n1 + c];
      v.data[r] = -s;
    }
    for (std::size_t c = 0; c < n2; ++c) {
      double s = b[c];
      for (std::size_t r = 0; r < n1; ++r) s += A[r][c] * z.data[r];
      v.data[n1 + c] = s;
    }
    return v;
  };
  p.objective = [A, a, b, n1, n2](const SaddleVector& z) {
    double s = 0.0;
    for (std::size_t r = 0; r < n1; ++r)
      for (std::size_t c = 0; c < n2; ++c) s += z.data[r] * A[r][c] * z.data[n1 + c];
    for (std::size_t r = 0; r < n1; ++r) s += z.data[r] * a[r];
    for (std::size_t c = 0; c < n2; ++c) s += z.data[n1 + c] * b[c];
    return s;
  };

  const double sigma_max = spectral_norm(A);
  p.lipschitz = sigma_max;
  if (p.feasible.bounded()) {
    Vec shift;
    shift.insert(shift.end(), a.begin(), a.end());
    shift.insert(shift.end(), b.begin(), b.end());
    p.grad_bound = sigma_max * p.feasible.max_norm(p.dim()) + l2_norm(shift);
  }

  bool homogeneous = true;
  for (double v : a) homogeneous = homogeneous && v == 0.0;
  for (double v : b) homogeneous = homogeneous && v == 0.0;
  if (homogeneous) {
    p.reference = SaddleVector::zeros(n1, n2);
    p.mvi_class = MviClass::FullMvi;
  }
  return p;
}

ProblemSpec make_quadratic_saddle(std::size_t n1, std::size_t n2,
                                  std::optional<FeasibleSet> feasible,
                                  double bound_radius) {
  ProblemSpec p;
  p.name = "quadratic";
  p.n1 = n1;
  p.n2 = n2;
  p.feasible = feasible ? *feasible : FeasibleSet::ball(bound_radius);
  p.field = [n1, n2](const SaddleVector& z) {
    FieldValue v = FieldValue::zeros(n1, n2);
    for (std::size_t i = 0; i < z.dim(); ++i) v.data[i] = -z.data[i];
    return v;
  };
  p.objective = [n1](const SaddleVector& z) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.dim(); ++i)
      s += (i < n1 ? 0.5 : -0.5) * z.data[i] * z.data[i];
    return s;
  };
  p.lipschitz = 1.0;
  if (p.feasible.bounded()) p.grad_bound = p.feasible.max_norm(p.dim());
  p.reference = SaddleVector::zeros(n1, n2);
  p.mvi_class = MviClass::FullMvi;
  return p;
}

ProblemSpec make_dirac_gan(std::optional<FeasibleSet> feasible, double bound_radius) {
  ProblemSpec p;
  p.name = "dirac_gan";
  p.n1 = 1;
  p.n2 = 1;
  p.feasible = feasible ? *feasible : FeasibleSet::ball(bound_radius);
  p.field = [](const SaddleVector& z) {
    const double t = z.data[0] * z.data[1];
    const double fp = 1.0 / (1.0 + std::exp(t));  // f'(t) for f(t) = -log(1+e^-t)
    return FieldValue({-fp * z.data[1], fp * z.data[0]}, 1, 1);
  };
  p.objective = [](const SaddleVector& z) {
    const double t = z.data[0] * z.data[1];
    // -log(1 + e^-t), written to stay accurate for large |t|
    return t >= 0.0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
  };
  // Jacobian Frobenius bound on ||z|| <= R: |f''| <= 1/4, |f'| < 1.
  const double r = checked_radius(p.feasible, bound_radius);
  p.lipschitz = std::sqrt(std::pow(r, 4) / 16.0 +
                          2.0 * std::pow(1.0 + r * r / 8.0, 2));
  if (p.feasible.bounded()) p.grad_bound = p.feasible.max_norm(2);  // ||V|| = f'(t)||z||
  p.reference = SaddleVector::zeros(1, 1);
  p.mvi_class = MviClass::FullMvi;
  return p;
}

ProblemSpec make_one_sided_synthetic(std::optional<FeasibleSet> feasible,
                                     double bound_radius) {
  ProblemSpec p;
  p.name = "one_sided_synthetic";
  p.n1 = 1;
  p.n2 = 1;
  p.feasible = feasible ? *feasible : FeasibleSet::ball(bound_radius);
  p.field = [](const SaddleVector& z) {
    const double x = z.data[0], y = z.data[1];
    const double sy = std::sin(y);
    return FieldValue({-2.0 * x * (1.0 + 0.5 * sy * sy),
                       0.5 * x * x * std::sin(2.0 * y)},
                      1, 1);
  };
  p.objective = [](const SaddleVector& z) {
    const double sy = std::sin(z.data[1]);
    return z.data[0] * z.data[0] * (1.0 + 0.5 * sy * sy);
  };
  const double r = checked_radius(p.feasible, bound_radius);
  p.lipschitz = std::sqrt(9.0 + 2.0 * r * r + std::pow(r, 4));
  if (p.feasible.bounded()) {
    const double m = p.feasible.max_norm(2);
    p.grad_bound = std::sqrt(9.0 * m * m + std::pow(m, 4) / 4.0);
  }
  p.reference = SaddleVector::zeros(1, 1);  // x* = 0; any y works for the x side
  p.mvi_class = MviClass::OneSidedMvi;
  return p;
}

const std::vector<std::string>& builtin_problem_names() {
  static const std::vector<std::string> names = {"bilinear", "quadratic", "dirac_gan",
                                                 "one_sided_synthetic"};
  return names;
}

}  // namespace saddleopt
