#include "rcbf/conditions.hpp"
#include "rcbf/dynamics.hpp"
#include "rcbf/shapes.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace rcbf;

namespace {

Domain dubins_domain(double half) {
  Domain d;
  d.lower = Vec(3);
  d.upper = Vec(3);
  d.lower << -half, -half, 0.0;
  d.upper << half, half, 2.0 * M_PI;
  d.periodic = {0, 0, 1};
  return d;
}

ControlSignal constant_signal(double tau, std::initializer_list<double> u, int n_seg = 1) {
  ControlSignal s;
  s.tau = tau;
  Vec uv(u.size());
  int i = 0;
  for (double v : u) uv[i++] = v;
  s.values = uv.replicate(1, n_seg);
  return s;
}

}  // namespace

TEST_CASE("dubins3d field values") {
  const Domain dom = dubins_domain(6.0);
  BoxRec box = test::wide_box(dom, 0.0);

  const Dubins3d f1(1.0, box);
  Vec x(3), u(1), dx(3);
  x << 0.0, 0.0, M_PI;
  u << 1.0;
  f1.eval(x, u, dx);
  CHECK(dx[0] == doctest::Approx(-2.0));
  CHECK(dx[1] == doctest::Approx(0.0));
  CHECK(dx[2] == doctest::Approx(-1.0));

  x << 0.0, 0.0, 0.0;
  u << 0.7;
  f1.eval(x, u, dx);
  CHECK(dx[0] == doctest::Approx(0.0));
  CHECK(dx[1] == doctest::Approx(0.0));
  CHECK(dx[2] == doctest::Approx(-0.7));

  const Dubins3d f5(5.0, box);
  x << 1.0, 2.0, M_PI / 2.0;
  u << 1.0;
  f5.eval(x, u, dx);
  // Independent hand calculation: (-5 + 5 cos(pi/2) + 2, 5 sin(pi/2) - 1, -1).
  const double expect0 = -5.0 + 5.0 * std::cos(M_PI / 2.0) + 1.0 * 2.0;
  const double expect1 = 5.0 * std::sin(M_PI / 2.0) - 1.0 * 1.0;
  CHECK(dx[0] == doctest::Approx(expect0));
  CHECK(dx[0] == doctest::Approx(-3.0));
  CHECK(dx[1] == doctest::Approx(expect1));
  CHECK(dx[1] == doctest::Approx(4.0));
  CHECK(dx[2] == doctest::Approx(-1.0));

  // Analytic bounds on the box.
  CHECK(f5.lipschitz() == doctest::Approx(6.0));
  CHECK(f5.velocity() >= 2.0 * 5.0);
}

TEST_CASE("integrator: exact on linear dynamics") {
  const SingleIntegrator f(1);
  Domain dom;
  dom.lower = Vec::Constant(1, -10.0);
  dom.upper = Vec::Constant(1, 10.0);
  dom.periodic = {0};
  const BoxRec box = test::wide_box(dom, 10.0);
  const Vec x0 = Vec::Zero(1);
  const auto traj = integrate(f, x0, constant_signal(1.0, {1.0}), 1.0, 0.01, box, dom);
  CHECK(traj.states(0, traj.steps()) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(!traj.escaped);
  CHECK(traj.steps() == 100);
}

TEST_CASE("dubins: stationary ray and constant-velocity ray") {
  const Domain dom = dubins_domain(8.0);
  const BoxRec box = test::wide_box(dom, 8.0);
  const Dubins3d f(5.0, box);

  Vec x0(3);
  x0 << 0.0, 0.0, 0.0;
  const auto still = integrate(f, x0, constant_signal(0.5, {0.0}), 0.5, 0.005, box, dom);
  CHECK((still.states.col(still.steps()) - x0).lpNorm<Eigen::Infinity>() <= 1e-12);

  // At x3 = pi with u = 0 the field is constant (-2v, 0, 0): RK4 is exact and
  // x1(0.1) = -2*5*0.1 = -1.
  x0 << 0.0, 0.0, M_PI;
  const auto ray = integrate(f, x0, constant_signal(0.1, {0.0}), 0.1, 0.001, box, dom);
  CHECK(ray.states(0, ray.steps()) == doctest::Approx(-1.0).epsilon(1e-6));
  // Cross-check against a much finer reference integration.
  const Vec ref = test::reference_final_state(f, x0, constant_signal(0.1, {0.0}), 0.1, 1e-5,
                                              box, dom);
  CHECK(ray.states(0, ray.steps()) == doctest::Approx(ref[0]).epsilon(1e-9));
}

TEST_CASE("integration order: halving dt shrinks error ~16x") {
  const Domain dom = dubins_domain(20.0);
  const BoxRec box = test::wide_box(dom, 20.0);
  const Dubins3d f(1.0, box);
  Vec x0(3);
  x0 << 0.3, -0.2, 1.1;
  const auto sig = constant_signal(1.0, {0.7});

  const Vec ref = test::reference_final_state(f, x0, sig, 1.0, 1.0 / 6400.0, box, dom);
  const auto coarse = integrate(f, x0, sig, 1.0, 0.02, box, dom);
  const auto fine = integrate(f, x0, sig, 1.0, 0.01, box, dom);
  const double e_coarse = (coarse.states.col(coarse.steps()) - ref).lpNorm<Eigen::Infinity>();
  const double e_fine = (fine.states.col(fine.steps()) - ref).lpNorm<Eigen::Infinity>();
  REQUIRE(e_fine > 0.0);
  CHECK(e_coarse / e_fine >= 12.0);
}

TEST_CASE("periodic wrap keeps x3 in range") {
  const Domain dom = dubins_domain(20.0);
  const BoxRec box = test::wide_box(dom, 20.0);
  const Dubins3d f(1.0, box);
  Vec x0(3);
  x0 << 0.0, 0.0, 0.1;
  const auto traj = integrate(f, x0, constant_signal(2.0, {1.0}), 2.0, 0.01, box, dom);
  for (int k = 0; k <= traj.steps(); ++k) {
    CHECK(traj.states(2, k) >= 0.0);
    CHECK(traj.states(2, k) < 2.0 * M_PI);
  }
}

TEST_CASE("concatenation: two half signals equal the full signal on the grid") {
  const Domain dom = dubins_domain(20.0);
  const BoxRec box = test::wide_box(dom, 20.0);
  const Dubins3d f(1.0, box);
  Vec x0(3);
  x0 << 0.5, 0.5, 2.0;

  ControlSignal full;
  full.tau = 1.0;
  full.values.resize(1, 2);
  full.values << 0.8, -0.4;

  const auto whole = integrate(f, x0, full, 1.0, 0.01, box, dom);
  const auto first = integrate(f, x0, constant_signal(0.5, {0.8}), 0.5, 0.01, box, dom);
  const Vec mid = first.states.col(first.steps());
  const auto second = integrate(f, mid, constant_signal(0.5, {-0.4}), 0.5, 0.01, box, dom);

  // Same RK4 step sequence, so the shared grid states match exactly.
  for (int k = 0; k <= 50; ++k) {
    CHECK(whole.states.col(k) == first.states.col(k));
    CHECK(whole.states.col(50 + k) == second.states.col(k));
  }
}

TEST_CASE("escape: leaving the box truncates and flags") {
  const SingleIntegrator f(1);
  Domain dom;
  dom.lower = Vec::Constant(1, -1.0);
  dom.upper = Vec::Constant(1, 1.0);
  dom.periodic = {0};
  BoxRec box;
  box.lo = Vec::Constant(1, -1.2);
  box.hi = Vec::Constant(1, 1.2);
  Vec x0 = Vec::Constant(1, 0.9);
  const auto traj = integrate(f, x0, constant_signal(1.0, {1.0}), 1.0, 0.01, box, dom);
  CHECK(traj.escaped);
  CHECK(traj.valid_steps < traj.steps());
  CHECK(traj.states(0, traj.valid_steps) <= 1.2 + 1e-12);
  // Post-truncation columns repeat the last in-box state.
  CHECK(traj.states(0, traj.steps()) == traj.states(0, traj.valid_steps));
}

TEST_CASE("sample_controls: deterministic extreme prefix then uniforms") {
  const Domain dom = dubins_domain(6.0);
  const BoxRec box = test::wide_box(dom, 6.0);
  const Dubins3d f(1.0, box);

  const auto sigs = sample_controls(f, 3, 5, 1.0, 42);
  REQUIRE(sigs.size() == 3);
  CHECK(sigs[0].values.minCoeff() == doctest::Approx(-1.0));
  CHECK(sigs[0].values.maxCoeff() == doctest::Approx(-1.0));
  CHECK(sigs[1].values.minCoeff() == doctest::Approx(1.0));
  CHECK(sigs[2].values.cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  // Determinism: the same seed reproduces the same list.
  const auto again = sample_controls(f, 10, 5, 1.0, 42);
  const auto sigs10 = sample_controls(f, 10, 5, 1.0, 42);
  for (int i = 0; i < 10; ++i) CHECK(again[i].values == sigs10[i].values);

  const auto other = sample_controls(f, 10, 5, 1.0, 43);
  bool any_diff = false;
  for (int i = 3; i < 10; ++i)
    if (other[i].values != again[i].values) any_diff = true;
  CHECK(any_diff);
}

TEST_CASE("sample_controls: per-segment empirical mean near zero") {
  const Domain dom = dubins_domain(6.0);
  const BoxRec box = test::wide_box(dom, 6.0);
  const Dubins3d f(1.0, box);
  const auto sigs = sample_controls(f, 3000, 5, 1.0, 7);
  for (int s = 0; s < 5; ++s) {
    double mean = 0.0;
    int count = 0;
    for (std::size_t i = 3; i < sigs.size(); ++i) {  // skip the deterministic prefix
      mean += sigs[i].values(0, s);
      ++count;
    }
    mean /= count;
    CHECK(std::abs(mean) <= 0.05);
  }
}

TEST_CASE("estimate_lipschitz: constant, linear, dubins") {
  Domain dom;
  dom.lower = Vec::Constant(1, -2.0);
  dom.upper = Vec::Constant(1, 2.0);
  dom.periodic = {0};

  ControlBox ubox{Vec::Constant(1, -1.0), Vec::Constant(1, 1.0)};
  const LambdaField constant(1, ubox, [](const Vec&, const Vec&, Vec& dx) { dx.setConstant(0.5); },
                             0.0, 0.5, "constant");
  const auto est_const = estimate_lipschitz(constant, dom, 4000, 1);
  CHECK(est_const.L == doctest::Approx(0.0));
  CHECK(!est_const.certified);

  const double a = -1.7;
  const LambdaField linear(1, ubox, [a](const Vec& x, const Vec&, Vec& dx) { dx = a * x; },
                           std::abs(a), 3.4, "linear");
  const auto est_lin = estimate_lipschitz(linear, dom, 4000, 2);
  CHECK(est_lin.L >= std::abs(a) * 0.98);
  CHECK(est_lin.L <= std::abs(a) * 1.5 * 1.02);

  const Domain d3 = dubins_domain(6.0);
  const BoxRec box = test::wide_box(d3, 0.0);
  const Dubins3d dub(5.0, box);
  const auto est_dub = estimate_lipschitz(dub, d3, 20000, 3);
  CHECK(est_dub.L <= dub.lipschitz() * 1.5 * 1.02);
  CHECK(est_dub.L >= dub.lipschitz() * 0.5);
}

TEST_CASE("deviation stays under r e^{Lt} on random same-control pairs") {
  const Domain dom = dubins_domain(6.0);
  const BoxRec box = test::wide_box(dom, 6.0);
  const Dubins3d f(1.0, box);
  const CylinderSet cyl(2, 1.0);
  const double L = f.lipschitz();
  Rng rng(17);
  const double r = 0.1;

  int checked = 0;
  for (int rep = 0; rep < 200; ++rep) {
    Vec x(3), y(3);
    x << rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(0.0, 2.0 * M_PI);
    for (int d = 0; d < 3; ++d) y[d] = x[d] + rng.uniform(-r, r);
    const auto sigs = sample_controls(f, 4, 5, 1.0, 1000 + rep);
    const auto& sig = sigs[3];  // a random signal, shared by both
    const auto tx = integrate(f, x, sig, 1.0, 0.01, box, dom);
    const auto ty = integrate(f, y, sig, 1.0, 0.01, box, dom);
    if (tx.escaped || ty.escaped) continue;
    ++checked;
    for (int k = 0; k <= tx.steps(); ++k) {
      const double sx = cyl.signed_distance(tx.states.col(k), dom);
      const double sy = cyl.signed_distance(ty.states.col(k), dom);
      const double bound = deviation_bound(r, L, k * 0.01) + 1e-7;
      CHECK(std::abs(sx - sy) <= bound);
    }
  }
  CHECK(checked > 100);
}
