#include <cmath>
#include <memory>

#include <doctest.h>

#include "saddleopt/optimizers.hpp"

using namespace saddleopt;

namespace {

// Problem whose field is a fixed constant, for driving steppers with a
// controlled gradient stream.
ProblemSpec make_constant_field(Vec value, std::size_t n1, std::size_t n2) {
  ProblemSpec p;
  p.name = "stub";
  p.n1 = n1;
  p.n2 = n2;
  p.field = [value = std::move(value), n1, n2](const SaddleVector&) {
    return FieldValue(value, n1, n2);
  };
  p.feasible = FeasibleSet::unconstrained();
  p.lipschitz = 0.0;
  return p;
}

// Problem replaying a scripted sequence of gradients (repeats the last one).
ProblemSpec make_scripted_field(std::vector<Vec> values, std::size_t n1, std::size_t n2) {
  ProblemSpec p;
  p.name = "stub";
  p.n1 = n1;
  p.n2 = n2;
  auto script = std::make_shared<std::vector<Vec>>(std::move(values));
  auto cursor = std::make_shared<std::size_t>(0);
  p.field = [script, cursor, n1, n2](const SaddleVector&) {
    const std::size_t i = std::min(*cursor, script->size() - 1);
    ++*cursor;
    return FieldValue((*script)[i], n1, n2);
  };
  p.feasible = FeasibleSet::unconstrained();
  p.lipschitz = 0.0;
  return p;
}

struct OracleRig {
  ProblemSpec problem;
  NoiseModel noise = NoiseModel::none();
  RngStream rng{0};
  Oracle oracle;

  explicit OracleRig(ProblemSpec p) : problem(std::move(p)), oracle(problem, noise, rng) {}
};

ScheduleSpec basic_schedules(double eta) {
  ScheduleSpec s;
  s.eta = eta;
  return s;
}

RunOptions base_options(OptimizerKind kind, SaddleVector z0, long n, double eta,
                        double delta = 0.1) {
  RunOptions o;
  o.kind = kind;
  o.schedules = basic_schedules(eta);
  o.delta = delta;
  o.start = std::move(z0);
  o.iterations = n;
  o.seed = 7;
  return o;
}

}  // namespace

TEST_CASE("sgda step") {
  OracleRig rig(make_bilinear(BilinearParams{}));
  const SaddleVector z({1.0, 0.0}, 1, 1);
  const SaddleVector next = sgda_step(rig.oracle, z, 0.1, 1);
  CHECK(next.data == Vec{1.0, 0.1});

  // fixed point: V = 0 at the origin of the quadratic saddle
  OracleRig quad(make_quadratic_saddle());
  const SaddleVector origin = SaddleVector::zeros(1, 1);
  CHECK(sgda_step(quad.oracle, origin, 0.1, 1).data == origin.data);

  // norm identity ||z'||^2 = (1 + eta^2)||z||^2 on the rotation field
  RngStream rng(4);
  OracleRig rig2(make_bilinear(BilinearParams{}));
  for (int trial = 0; trial < 100; ++trial) {
    const SaddleVector p(Vec{2.0 * rng.next_double() - 1.0, 2.0 * rng.next_double() - 1.0},
                         1, 1);
    const SaddleVector q = sgda_step(rig2.oracle, p, 0.1, 1);
    REQUIRE(squared_norm(q.data) ==
            doctest::Approx(1.01 * squared_norm(p.data)).epsilon(1e-14));
  }
}

TEST_CASE("alternating step uses the intermediate point") {
  OracleRig rig(make_bilinear(BilinearParams{}));
  const SaddleVector z({1.0, 0.0}, 1, 1);
  // Vx(1,0) = 0 so x stays; then Vy(1,0) = x' = 1
  const SaddleVector next = alt_sgda_step(rig.oracle, z, 0.1, 1);
  CHECK(next.data == Vec{1.0, 0.1});
  CHECK(rig.oracle.evaluations() == 2);

  OracleRig quad(make_quadratic_saddle());
  const SaddleVector next2 = alt_sgda_step(quad.oracle, SaddleVector({1.0, 1.0}, 1, 1), 0.1, 1);
  CHECK(next2.data[0] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(next2.data[1] == doctest::Approx(0.9).epsilon(1e-15));

  CHECK(alt_sgda_step(quad.oracle, SaddleVector::zeros(1, 1), 0.1, 1).data == Vec{0.0, 0.0});
}

TEST_CASE("optimistic gradient hand iteration") {
  OracleRig rig(make_bilinear(BilinearParams{}));
  OptimisticState state;
  SaddleVector z({1.0, 0.0}, 1, 1);

  // first step bootstraps the carried gradient from z0
  z = og_step(rig.oracle, state, z, 0.1, 1);
  CHECK(z.data[0] == doctest::Approx(0.99).epsilon(1e-15));
  CHECK(z.data[1] == doctest::Approx(0.1).epsilon(1e-15));
  // carried gradient is V at the extrapolation point (1, 0.1)
  CHECK(state.carried.data[0] == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(state.carried.data[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rig.oracle.evaluations() == 2);  // bootstrap plus one per step

  // second step extrapolates to (0.98, 0.2)
  z = og_step(rig.oracle, state, z, 0.1, 1);
  CHECK(state.carried.data[0] == doctest::Approx(-0.2).epsilon(1e-14));
  CHECK(state.carried.data[1] == doctest::Approx(0.98).epsilon(1e-14));
  CHECK(z.data[0] == doctest::Approx(0.97).epsilon(1e-14));
  CHECK(z.data[1] == doctest::Approx(0.198).epsilon(1e-14));
  CHECK(rig.oracle.evaluations() == 3);

  // stationary start never moves
  OracleRig quad(make_quadratic_saddle());
  OptimisticState rest;
  SaddleVector origin = SaddleVector::zeros(1, 1);
  for (int i = 0; i < 5; ++i) origin = og_step(quad.oracle, rest, origin, 0.1, 1);
  CHECK(origin.data == Vec{0.0, 0.0});
}

TEST_CASE("extra-gradient step and projection") {
  OracleRig rig(make_bilinear(BilinearParams{}, FeasibleSet::unconstrained()));
  const SaddleVector z({1.0, 0.0}, 1, 1);
  const SaddleVector next = seg_step(rig.oracle, z, 0.1, 1, rig.problem.feasible);
  CHECK(next.data[0] == doctest::Approx(0.99).epsilon(1e-15));
  CHECK(next.data[1] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(squared_norm(next.data) ==
        doctest::Approx(0.9901 * squared_norm(z.data)).epsilon(1e-14));

  // an outward-pointing update from the boundary lands back on the sphere
  ProblemSpec outward = make_constant_field({1.0, 0.0}, 1, 1);
  outward.feasible = FeasibleSet::ball(1.0);
  OracleRig ball_rig(outward);
  const SaddleVector on_sphere =
      seg_step(ball_rig.oracle, z, 0.1, 1, ball_rig.problem.feasible);
  CHECK(l2_norm(on_sphere.data) == doctest::Approx(1.0).epsilon(1e-12));

  // zero step size keeps the point (bitwise, interior point)
  OracleRig rig2(make_bilinear(BilinearParams{}));
  const SaddleVector frozen = seg_step(rig2.oracle, z, 0.0, 1, rig2.problem.feasible);
  CHECK(frozen.data == z.data);
}

TEST_CASE("adam and amsgrad descent-ascent steps") {
  // first step on the bilinear field with beta1 = 0.5, beta2 = 0.75
  ScheduleSpec s;
  s.beta1_kind = Beta1Kind::Constant;
  s.beta1 = 0.5;
  s.beta2 = 0.75;
  s.eta = 0.1;

  OracleRig rig(make_bilinear(BilinearParams{}));
  MomentumState state = MomentumState::zeros(2);
  const SaddleVector z({1.0, 0.0}, 1, 1);
  const SaddleVector next = adam_family_gda_step(rig.oracle, state, z, s, 0.5, 1, false);
  CHECK(state.m == Vec{0.0, 0.5});
  CHECK(state.v == Vec{0.0, 0.25});
  CHECK(next.data[0] == 1.0);
  CHECK(next.data[1] == doctest::Approx(0.05).epsilon(1e-15));

  // an all-zero gradient stream never moves the point
  OracleRig zero_rig(make_constant_field({0.0, 0.0}, 1, 1));
  MomentumState zs = MomentumState::zeros(2);
  SaddleVector p({0.4, -0.2}, 1, 1);
  for (long k = 1; k <= 10; ++k)
    p = adam_family_gda_step(zero_rig.oracle, zs, p, s, 0.5, k, true);
  CHECK(p.data == Vec{0.4, -0.2});

  // the max rule freezes the velocity when gradients die out
  OracleRig script(make_scripted_field({{0.0, 2.0}, {0.0, 0.0}}, 1, 1));
  MomentumState ms = MomentumState::zeros(2);
  SaddleVector q({0.0, 0.0}, 1, 1);
  q = adam_family_gda_step(script.oracle, ms, q, s, 0.5, 1, true);
  const Vec v_after_burst = ms.v;
  CHECK(v_after_burst[1] == doctest::Approx(1.0).epsilon(1e-15));  // (1-b2) * 4
  q = adam_family_gda_step(script.oracle, ms, q, s, 0.5, 2, true);
  CHECK(ms.v == v_after_burst);

  // plain adam lets it decay instead
  OracleRig script2(make_scripted_field({{0.0, 2.0}, {0.0, 0.0}}, 1, 1));
  MomentumState as = MomentumState::zeros(2);
  SaddleVector r({0.0, 0.0}, 1, 1);
  r = adam_family_gda_step(script2.oracle, as, r, s, 0.5, 1, false);
  r = adam_family_gda_step(script2.oracle, as, r, s, 0.5, 2, false);
  CHECK(as.v[1] < v_after_burst[1]);
}

TEST_CASE("extra-gradient amsgrad full first iteration") {
  ScheduleSpec s;
  s.beta1_kind = Beta1Kind::Constant;
  s.beta1 = 0.5;
  s.beta2 = 0.75;
  s.eta = 0.1;

  OracleRig rig(make_bilinear(BilinearParams{}));
  MomentumState state = MomentumState::zeros(2);
  const SaddleVector z0({1.0, 0.0}, 1, 1);
  const SaddleVector z1 = amsgrad_eg_step(rig.oracle, state, z0, s, 0.5, 1);

  // base half: m = (0, 0.5), v = (0, 0.25), shadow = (1, 0.05)
  CHECK(state.m == Vec{0.0, 0.5});
  CHECK(state.v == Vec{0.0, 0.25});
  // shadow half: gradient at (1, 0.05) is (-0.05, 1)
  CHECK(state.m_hat[0] == doctest::Approx(-0.025).epsilon(1e-15));
  CHECK(state.m_hat[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(state.v_hat[0] == doctest::Approx(0.000625).epsilon(1e-14));
  CHECK(state.v_hat[1] == doctest::Approx(0.4375).epsilon(1e-15));
  CHECK(z1.data[0] == doctest::Approx(0.9952380952380953).epsilon(1e-15));
  CHECK(z1.data[1] == doctest::Approx(0.06457513110645907).epsilon(1e-15));
  CHECK(rig.oracle.evaluations() == 2);

  // stationary start stays put forever
  OracleRig quad(make_quadratic_saddle());
  MomentumState rest = MomentumState::zeros(2);
  SaddleVector origin = SaddleVector::zeros(1, 1);
  for (long k = 1; k <= 20; ++k) origin = amsgrad_eg_step(quad.oracle, rest, origin, s, 0.5, k);
  CHECK(origin.data == Vec{0.0, 0.0});

  // beta1 = 1 keeps the momentum at zero, so the point never moves
  ScheduleSpec all_momentum = s;
  all_momentum.beta1 = 1.0;
  OracleRig rig2(make_bilinear(BilinearParams{}));
  MomentumState frozen = MomentumState::zeros(2);
  SaddleVector p = z0;
  for (long k = 1; k <= 5; ++k)
    p = amsgrad_eg_step(rig2.oracle, frozen, p, all_momentum, 0.5, k);
  CHECK(p.data == z0.data);
  CHECK(frozen.m_hat == Vec{0.0, 0.0});
}

TEST_CASE("dual rate decay halves the max-block displacement") {
  ScheduleSpec s;
  s.beta1_kind = Beta1Kind::Constant;
  s.beta1 = 0.5;
  s.beta2 = 0.75;
  s.eta = 0.1;

  // k = 1: both variants agree bitwise
  {
    OracleRig a(make_bilinear(BilinearParams{}));
    OracleRig b(make_bilinear(BilinearParams{}));
    MomentumState sa = MomentumState::zeros(2), sb = MomentumState::zeros(2);
    const SaddleVector z({1.0, 0.0}, 1, 1);
    const SaddleVector za = amsgrad_eg_step(a.oracle, sa, z, s, 0.5, 1);
    const SaddleVector zb = amsgrad_eg_drd_step(b.oracle, sb, z, s, 0.5, 1);
    CHECK(za.data == zb.data);
    CHECK(sa.v_hat == sb.v_hat);
  }

  // k = 4 on a constant field: identical moments, y displacement exactly halved
  {
    const Vec g = {1.0, 2.0};
    OracleRig a(make_constant_field(g, 1, 1));
    OracleRig b(make_constant_field(g, 1, 1));
    MomentumState warm = MomentumState::zeros(2);
    SaddleVector z({0.3, -0.4}, 1, 1);
    // warm the state up identically through a few plain steps
    for (long k = 1; k <= 3; ++k) z = amsgrad_eg_step(a.oracle, warm, z, s, 0.5, k);
    MomentumState sa = warm, sb = warm;
    OracleRig a2(make_constant_field(g, 1, 1)), b2(make_constant_field(g, 1, 1));
    const SaddleVector za = amsgrad_eg_step(a2.oracle, sa, z, s, 0.5, 4);
    const SaddleVector zb = amsgrad_eg_drd_step(b2.oracle, sb, z, s, 0.5, 4);
    CHECK(sa.m_hat == sb.m_hat);  // constant field: bookkeeping agrees
    CHECK(sa.v_hat == sb.v_hat);
    CHECK(za.data[0] == zb.data[0]);  // min block keeps the full rate
    const double dy_full = za.data[1] - z.data[1];
    const double dy_half = zb.data[1] - z.data[1];
    CHECK(dy_half == 0.5 * dy_full);  // 1/sqrt(4) is exact
  }
}

TEST_CASE("adaptive extra-gradient accumulates squared gradients") {
  // hand iteration on the bilinear field, delta = 0.5, eta = 0.1
  OracleRig rig(make_bilinear(BilinearParams{}));
  Vec sumsq(2, 0.0);
  const SaddleVector z0({1.0, 0.0}, 1, 1);
  const SaddleVector z1 = aeg_step(rig.oracle, sumsq, z0, 0.1, 0.5, 1);

  // recompute the two halves independently
  const double shadow_y = 0.0 + 0.1 * 1.0 / (0.5 + 1.0);  // H0 = diag(0.5, 1.5)
  CHECK(shadow_y == doctest::Approx(0.06666666666666667).epsilon(1e-15));
  const double gx_hat = -shadow_y;
  const double gy_hat = 1.0;
  const double sx = std::sqrt(gx_hat * gx_hat);
  const double sy = std::sqrt(1.0 + gy_hat * gy_hat);
  CHECK(sumsq[0] == doctest::Approx(gx_hat * gx_hat).epsilon(1e-15));
  CHECK(sumsq[1] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(z1.data[0] == doctest::Approx(1.0 + 0.1 * gx_hat / (0.5 + sx)).epsilon(1e-15));
  CHECK(z1.data[1] == doctest::Approx(0.1 * gy_hat / (0.5 + sy)).epsilon(1e-15));

  // zero gradient stream: preconditioner stays delta*I, point frozen
  OracleRig zero_rig(make_constant_field({0.0, 0.0}, 1, 1));
  Vec zs(2, 0.0);
  SaddleVector p({0.7, 0.1}, 1, 1);
  for (int k = 0; k < 8; ++k) p = aeg_step(zero_rig.oracle, zs, p, 0.1, 0.5, 1);
  CHECK(p.data == Vec{0.7, 0.1});
  CHECK(zs == Vec{0.0, 0.0});

  // unit gradients pile up pythagorean-style: s = sqrt(2k) after k steps
  OracleRig unit(make_constant_field({0.0, 1.0}, 1, 1));
  Vec us(2, 0.0);
  SaddleVector q({0.0, 0.0}, 1, 1);
  q = aeg_step(unit.oracle, us, q, 0.1, 1.0, 1);
  CHECK(std::sqrt(us[1]) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  q = aeg_step(unit.oracle, us, q, 0.1, 1.0, 1);
  CHECK(std::sqrt(us[1]) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("adaptive dual rate decay") {
  // k = 1 agrees with the base variant bitwise
  {
    OracleRig a(make_bilinear(BilinearParams{}));
    OracleRig b(make_bilinear(BilinearParams{}));
    Vec sa(2, 0.0), sb(2, 0.0);
    const SaddleVector z({1.0, 0.0}, 1, 1);
    CHECK(aeg_step(a.oracle, sa, z, 0.1, 0.5, 1).data ==
          aeg_drd_step(b.oracle, sb, z, 0.1, 0.5, 1, 1).data);
    CHECK(sa == sb);
  }
  // k = 5 scales the y displacement by 1/5 on a constant field
  {
    const Vec g = {0.5, 1.5};
    OracleRig a(make_constant_field(g, 1, 1));
    OracleRig b(make_constant_field(g, 1, 1));
    Vec sa = {0.9, 1.1}, sb = {0.9, 1.1};
    const SaddleVector z({0.0, 0.0}, 1, 1);
    const SaddleVector za = aeg_step(a.oracle, sa, z, 0.1, 0.5, 1);
    const SaddleVector zb = aeg_drd_step(b.oracle, sb, z, 0.1, 0.5, 1, 5);
    CHECK(za.data[0] == zb.data[0]);
    CHECK(zb.data[1] / za.data[1] == doctest::Approx(0.2).epsilon(1e-15));
  }
  CHECK_THROWS_AS(
      [] {
        OracleRig rig(make_bilinear(BilinearParams{}));
        Vec s(2, 0.0);
        aeg_drd_step(rig.oracle, s, SaddleVector({1.0, 0.0}, 1, 1), 0.1, 0.5, 1, 0);
      }(),
      std::invalid_argument);
}

TEST_CASE("inverse three-halves series is summable below three") {
  // sequential partial sum to N = 1e6; the infinite sum is ~2.6124
  double sum = 0.0;
  for (long k = 1; k <= 1000000; ++k)
    sum += 1.0 / (static_cast<double>(k) * std::sqrt(static_cast<double>(k)));
  CHECK(sum == doctest::Approx(2.6103753491852295).epsilon(1e-12));
  CHECK(sum < 3.0);
}

TEST_CASE("driver: single iteration") {
  const ProblemSpec p = make_bilinear(BilinearParams{});
  for (const std::string& name : optimizer_names()) {
    const OptimizerKind kind = *optimizer_from_string(name);
    const RunOptions o = base_options(kind, SaddleVector({1.0, 0.0}, 1, 1), 1, 0.1);
    const RunResult r = run(p, NoiseModel::none(), o);
    REQUIRE(r.trace.size() == 1);
    REQUIRE(r.selected_index == 0);
    REQUIRE(r.output.data == Vec{1.0, 0.0});  // the pre-step iterate is index 0
    REQUIRE(r.trace[0].iter == 0);
  }
  const RunOptions o = base_options(OptimizerKind::Sgda, SaddleVector({1.0, 0.0}, 1, 1), 1, 0.1);
  CHECK(run(p, NoiseModel::none(), o).final_point.data == Vec{1.0, 0.1});
}

TEST_CASE("driver: closed-form contraction and expansion on the bilinear game") {
  const ProblemSpec p = make_bilinear(BilinearParams{});
  const SaddleVector z0({1.0, 0.0}, 1, 1);

  const RunResult seg = run(p, NoiseModel::none(), base_options(OptimizerKind::Seg, z0, 100, 0.1));
  const double seg_expected = std::pow(0.9901, 50.0);  // ((1-eta^2)^2 + eta^2)^(N/2)
  CHECK(l2_norm(seg.final_point.data) ==
        doctest::Approx(seg_expected).epsilon(1e-9));

  const RunResult sgda =
      run(p, NoiseModel::none(), base_options(OptimizerKind::Sgda, z0, 100, 0.1));
  const double sgda_expected = std::pow(1.01, 50.0);  // (1+eta^2)^(N/2)
  CHECK(l2_norm(sgda.final_point.data) ==
        doctest::Approx(sgda_expected).epsilon(1e-9));
}

TEST_CASE("driver: identical seed and config reproduce bit-identical results") {
  const ProblemSpec p = make_one_sided_synthetic();
  RunOptions o = base_options(OptimizerKind::AmsgradEgDrd, SaddleVector({1.0, 0.3}, 1, 1),
                              200, 0.01);
  o.seed = 99;
  NoiseModel noise = NoiseModel::clipped_gaussian(0.5, *p.grad_bound);
  const RunResult a = run(p, noise, o);
  const RunResult b = run(p, noise, o);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    REQUIRE(a.trace[i].norm_v == b.trace[i].norm_v);
    REQUIRE(a.trace[i].mvi_total == b.trace[i].mvi_total);
    REQUIRE(a.trace[i].avg_sq_norm == b.trace[i].avg_sq_norm);
    REQUIRE(a.trace[i].residual == b.trace[i].residual);
  }
  CHECK(a.final_point.data == b.final_point.data);
  CHECK(a.selected_index == b.selected_index);
  CHECK(a.output.data == b.output.data);
}

TEST_CASE("driver: oracle call accounting") {
  const ProblemSpec p = make_bilinear(BilinearParams{});
  const SaddleVector z0({0.5, 0.2}, 1, 1);
  const long n = 10;

  auto count = [&](OptimizerKind kind, BatchKind batch_kind, long batch_size) {
    RunOptions o = base_options(kind, z0, n, 0.05);
    o.schedules.batch_kind = batch_kind;
    o.schedules.batch_size = batch_size;
    return run(p, NoiseModel::none(), o);
  };

  // one batched evaluation per iteration
  CHECK(count(OptimizerKind::Sgda, BatchKind::Constant, 3).oracle_evaluations == n);
  CHECK(count(OptimizerKind::Sgda, BatchKind::Constant, 3).oracle_samples == 3 * n);
  CHECK(count(OptimizerKind::AdamGda, BatchKind::Constant, 1).oracle_evaluations == n);

  // two batched evaluations per iteration
  for (OptimizerKind kind : {OptimizerKind::AltSgda, OptimizerKind::Seg,
                             OptimizerKind::AmsgradEg, OptimizerKind::Aeg}) {
    const RunResult r = count(kind, BatchKind::Constant, 4);
    REQUIRE(r.oracle_evaluations == 2 * n);
    REQUIRE(r.oracle_samples == 8 * n);
  }

  // the optimistic scheme amortizes to one evaluation plus a bootstrap
  CHECK(count(OptimizerKind::Og, BatchKind::Constant, 2).oracle_evaluations == n + 1);

  // linear batch schedule: sum of (k+1) over k = 1..10 is 65 per evaluation pass
  CHECK(count(OptimizerKind::Sgda, BatchKind::Linear, 1).oracle_samples == 65);
  CHECK(count(OptimizerKind::AmsgradEg, BatchKind::Linear, 1).oracle_samples == 130);
}

TEST_CASE("driver: convergent and non-convergent families separate on the bilinear game") {
  const ProblemSpec p = make_bilinear(BilinearParams{});
  const SaddleVector z0({1.0, 0.0}, 1, 1);
  const long n = 500;
  auto final_norm = [&](OptimizerKind kind) {
    return l2_norm(run(p, NoiseModel::none(), base_options(kind, z0, n, 0.1)).final_point.data);
  };

  CHECK(final_norm(OptimizerKind::Seg) < 1.0);
  CHECK(final_norm(OptimizerKind::Og) < 1.0);
  CHECK(final_norm(OptimizerKind::AmsgradEg) < 1.0);
  CHECK(final_norm(OptimizerKind::Sgda) >= 1.0);
  CHECK(final_norm(OptimizerKind::AdamGda) >= 1.0);
  // alternating updates are area-preserving here: the norm oscillates around
  // its start value instead of growing, so assert non-contraction only
  CHECK(final_norm(OptimizerKind::AltSgda) >= 0.9);
}

TEST_CASE("driver: moment audits under a bounded oracle") {
  const ProblemSpec p = make_bilinear(BilinearParams{});  // ball(2) metadata, G = 2
  REQUIRE(p.grad_bound.has_value());
  RunOptions o = base_options(OptimizerKind::AmsgradEg, SaddleVector({1.0, 0.0}, 1, 1), 200, 0.1);
  const RunResult r = run(p, NoiseModel::none(), o);
  CHECK(r.momentum_max_norm <= *p.grad_bound + kAuditSlack);
  CHECK(r.velocity_max_entry <= *p.grad_bound * *p.grad_bound + kAuditSlack);
  CHECK(r.preconditioner_monotone);
  CHECK(bound_audit(r, p).status == BoundAuditReport::Status::Pass);

  // unclipped gaussian noise breaks the hypothesis, not the audit
  const RunResult noisy = run(p, NoiseModel::gaussian(1.0), o);
  CHECK(bound_audit(noisy, p).status == BoundAuditReport::Status::NotApplicable);
}

TEST_CASE("driver: adagrad scale history feeds the growth exponent") {
  const ProblemSpec p = make_constant_field({0.0, 1.0}, 1, 1);
  RunOptions o = base_options(OptimizerKind::Aeg, SaddleVector({0.0, 0.0}, 1, 1), 64, 0.1, 1.0);
  o.probe.kind = ProbeReference::Kind::Final;  // the stub has no analytic reference
  const RunResult r = run(p, NoiseModel::none(), o);
  REQUIRE(r.adagrad_scale_history.size() == 64);
  // s_k = sqrt(2k) on the driven coordinate
  CHECK(r.adagrad_scale_history[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(r.adagrad_scale_history[63] == doctest::Approx(std::sqrt(128.0)).epsilon(1e-13));
  const double alpha = cumulative_gradient_exponent(r, 1.0);
  CHECK(alpha == doctest::Approx(0.5 - std::log(2.0) / (2.0 * std::log(64.0))).epsilon(1e-12));
  CHECK(alpha < 0.5);
}

TEST_CASE("driver: trajectory, trace subsampling and probe references") {
  const ProblemSpec p = make_one_sided_synthetic();
  RunOptions o = base_options(OptimizerKind::AmsgradEgDrd, SaddleVector({1.0, 0.3}, 1, 1),
                              10, 0.01);
  o.record_trajectory = true;
  o.trace_every = 4;
  const RunResult r = run(p, NoiseModel::none(), o);
  REQUIRE(r.trajectory.has_value());
  CHECK(r.trajectory->size() == 10);
  CHECK((*r.trajectory)[0].data == Vec{1.0, 0.3});
  CHECK((*r.trajectory)[r.selected_index].data == r.output.data);
  // rows at iterations 0, 4, 8 plus the forced final row 9
  REQUIRE(r.trace.size() == 4);
  CHECK(r.trace[0].iter == 0);
  CHECK(r.trace[1].iter == 4);
  CHECK(r.trace[2].iter == 8);
  CHECK(r.trace[3].iter == 9);

  // the running mean is maintained every iteration, not just at traced rows
  double sum = 0.0;
  for (long t = 0; t <= 4; ++t)
    sum += squared_norm(evaluate_field(p, (*r.trajectory)[t]).data);
  CHECK(r.trace[1].avg_sq_norm == doctest::Approx(sum / 5.0).epsilon(1e-14));

  // final-iterate reference resolves to the end of training; the last traced
  // row (iterate N-1) measures its distance to that post-step point
  RunOptions of = o;
  of.probe.kind = ProbeReference::Kind::Final;
  const RunResult rf = run(p, NoiseModel::none(), of);
  CHECK(rf.reference.data == rf.final_point.data);
  CHECK(rf.trace.back().dist_to_ref ==
        l2_norm(sub((*rf.trajectory)[9].data, rf.final_point.data)));

  // literal reference must match the problem shape
  RunOptions bad = o;
  bad.probe.kind = ProbeReference::Kind::Literal;
  bad.probe.literal = SaddleVector({1.0, 2.0, 3.0}, 2, 1);
  CHECK_THROWS_AS(run(p, NoiseModel::none(), bad), std::invalid_argument);
}

TEST_CASE("driver: per-row bookkeeping matches its definitions") {
  const ProblemSpec p = make_quadratic_saddle();
  RunOptions o = base_options(OptimizerKind::AmsgradEg, SaddleVector({1.0, 1.0}, 1, 1),
                              50, 0.05);
  const RunResult r = run(p, NoiseModel::none(), o);
  REQUIRE(r.trace.size() == 50);
  double running = 0.0;
  double min_norm = std::numeric_limits<double>::infinity();
  long min_index = 0;
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const TraceRow& row = r.trace[i];
    // block norms recombine into the full norm
    REQUIRE(row.norm_v * row.norm_v ==
            doctest::Approx(row.norm_vx * row.norm_vx + row.norm_vy * row.norm_vy)
                .epsilon(1e-12));
    // decomposition of the probe inner product
    REQUIRE(row.mvi_total ==
            doctest::Approx(row.mvi_x + row.mvi_y).epsilon(1e-12));
    running += row.norm_v * row.norm_v;
    REQUIRE(row.avg_sq_norm == doctest::Approx(running / (i + 1)).epsilon(1e-12));
    if (row.norm_v < min_norm) {
      min_norm = row.norm_v;
      min_index = row.iter;
    }
  }
  CHECK(r.min_grad_index == min_index);
  CHECK(r.avg_sq_norm_final == doctest::Approx(running / 50.0).epsilon(1e-12));

  // full MVI problem with its analytic reference: probe never goes negative
  for (const TraceRow& row : r.trace) REQUIRE(row.mvi_total >= -1e-9);

  // on an unconstrained problem the residual column is exactly eta * norm_v
  const ProblemSpec free = make_quadratic_saddle(1, 1, FeasibleSet::unconstrained());
  const RunResult rf = run(free, NoiseModel::none(), o);
  for (const TraceRow& row : rf.trace)
    REQUIRE(row.residual == o.schedules.eta * row.norm_v);

  // the rotation-field problem keeps the probe at zero up to rounding
  const ProblemSpec gan = make_dirac_gan();
  const RunResult rg = run(gan, NoiseModel::none(),
                           base_options(OptimizerKind::Seg,
                                        SaddleVector({0.5, 0.5}, 1, 1), 100, 0.1));
  for (const TraceRow& row : rg.trace) REQUIRE(row.mvi_total >= -1e-9);
}

TEST_CASE("driver: argument validation") {
  const ProblemSpec p = make_bilinear(BilinearParams{});
  RunOptions o = base_options(OptimizerKind::Sgda, SaddleVector({1.0, 0.0}, 1, 1), 0, 0.1);
  CHECK_THROWS_AS(run(p, NoiseModel::none(), o), std::invalid_argument);
  o.iterations = 5;
  o.start = SaddleVector({1.0, 0.0, 0.0}, 2, 1);
  CHECK_THROWS_AS(run(p, NoiseModel::none(), o), std::invalid_argument);
  o.start = SaddleVector({1.0, 0.0}, 1, 1);
  o.trace_every = 0;
  CHECK_THROWS_AS(run(p, NoiseModel::none(), o), std::invalid_argument);
  o.trace_every = 1;
  o.schedules.dual_decay = DualDecay::InvSqrt;  // not a dual-rate optimizer
  CHECK_THROWS_AS(run(p, NoiseModel::none(), o), std::invalid_argument);

  // divergence to non-finite values is an audit error
  RunOptions blowup = base_options(OptimizerKind::Sgda, SaddleVector({1.0, 0.0}, 1, 1),
                                   2000, 10.0);
  CHECK_THROWS_AS(run(p, NoiseModel::none(), blowup), AuditError);
}

TEST_CASE("driver: dual rate decay converges one-sidedly on the one-sided problem") {
  const ProblemSpec p = make_one_sided_synthetic();
  RunOptions o = base_options(OptimizerKind::AmsgradEgDrd, SaddleVector({1.0, 0.3}, 1, 1),
                              2000, p.lipschitz > 0 ? 0.1 / (3.0 * p.lipschitz) : 0.01);
  const RunResult r = run(p, NoiseModel::none(), o);
  const FieldValue vf = evaluate_field(p, r.final_point);
  CHECK(std::sqrt(block_x_squared_norm(vf)) < 1e-2);
  for (const TraceRow& row : r.trace) REQUIRE(row.mvi_x >= -1e-9);
}
