#include "rcbf/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcbf {

// ---------------------------------------------------------------------------
// Systems
// ---------------------------------------------------------------------------

Dubins3d::Dubins3d(double v, const BoxRec& bound_box) : v_(v) {
  if (v < 0.0) throw std::invalid_argument("dubins3d: v must be nonnegative");
  control_.lo = Vec::Constant(1, -1.0);
  control_.hi = Vec::Constant(1, 1.0);
  const double u_max = 1.0;
  // Jacobian rows sum to at most |u| + v |sin/cos x3| <= u_max + v.
  lipschitz_ = u_max + v;
  const double x1 = std::max(std::abs(bound_box.lo[0]), std::abs(bound_box.hi[0]));
  const double x2 = std::max(std::abs(bound_box.lo[1]), std::abs(bound_box.hi[1]));
  velocity_ = std::max({2.0 * v + u_max * x2, v + u_max * x1, u_max});
}

void Dubins3d::eval(const Vec& x, const Vec& u, Vec& dx) const {
  const double c = std::cos(x[2]);
  const double s = std::sin(x[2]);
  dx[0] = -v_ + v_ * c + u[0] * x[1];
  dx[1] = v_ * s - u[0] * x[0];
  dx[2] = -u[0];
}

SingleIntegrator::SingleIntegrator(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("integrator: n must be >= 1");
  control_.lo = Vec::Constant(n, -1.0);
  control_.hi = Vec::Constant(n, 1.0);
}

void SingleIntegrator::eval(const Vec& /*x*/, const Vec& u, Vec& dx) const { dx = u; }

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

namespace {

int grid_steps(double tau, double dt) {
  const auto k = static_cast<int>(std::llround(tau / dt));
  if (k < 1 || std::abs(k * dt - tau) > 1e-9 * std::max(1.0, tau))
    throw std::invalid_argument("integrate: dt must divide tau");
  return k;
}

bool in_box(const Vec& x, const BoxRec& box, const Domain& domain) {
  for (int d = 0; d < x.size(); ++d) {
    if (domain.is_periodic(d)) continue;
    if (x[d] < box.lo[d] || x[d] > box.hi[d]) return false;
  }
  return true;
}

}  // namespace

Trajectory integrate(const VectorField& field, const Vec& x0, const ControlSignal& signal,
                     double tau, double dt, const BoxRec& bound_box, const Domain& domain) {
  const int steps = grid_steps(tau, dt);
  const int n_seg = signal.segments();
  if (n_seg < 1 || steps % n_seg != 0)
    throw std::invalid_argument("integrate: segment boundaries must fall on the grid");
  const int steps_per_seg = steps / n_seg;
  const int n = field.state_dim();

  Trajectory traj;
  traj.dt = dt;
  traj.states.resize(n, steps + 1);

  Vec x = x0;
  domain.wrap(x);
  traj.states.col(0) = x;
  traj.valid_steps = steps;

  Vec k1(n), k2(n), k3(n), k4(n), tmp(n);
  Vec u = signal.values.col(0);
  int seg = 0;
  for (int k = 0; k < steps; ++k) {
    const int next_seg = k / steps_per_seg;
    if (next_seg != seg) {
      seg = next_seg;
      u = signal.values.col(seg);
    }
    field.eval(x, u, k1);
    tmp = x + 0.5 * dt * k1;
    field.eval(tmp, u, k2);
    tmp = x + 0.5 * dt * k2;
    field.eval(tmp, u, k3);
    tmp = x + dt * k3;
    field.eval(tmp, u, k4);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    domain.wrap(x);
    if (!in_box(x, bound_box, domain)) {
      traj.escaped = true;
      traj.valid_steps = k;  // states up to column k are in-box
      for (int j = k + 1; j <= steps; ++j) traj.states.col(j) = traj.states.col(k);
      return traj;
    }
    traj.states.col(k + 1) = x;
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Control sampling
// ---------------------------------------------------------------------------

SignalStream::SignalStream(const ControlBox& box, int n_seg, double tau, std::uint64_t seed)
    : box_(box), n_seg_(n_seg), tau_(tau), rng_(seed) {
  if (n_seg < 1) throw std::invalid_argument("signals: n_seg must be >= 1");
}

ControlSignal SignalStream::next() {
  const int m = box_.dim();
  ControlSignal sig;
  sig.tau = tau_;
  const int idx = emitted_++;
  if (idx < 2 * m + 1) {
    Vec u;
    if (idx < 2 * m) {
      // Per-axis extremes: (lo_0), (hi_0), (lo_1), (hi_1), ...
      u = Vec::Zero(m);
      for (int d = 0; d < m; ++d) u[d] = std::clamp(0.0, box_.lo[d], box_.hi[d]);
      const int d = idx / 2;
      u[d] = (idx % 2 == 0) ? box_.lo[d] : box_.hi[d];
    } else {
      u = Vec::Zero(m);
      for (int d = 0; d < m; ++d) u[d] = std::clamp(0.0, box_.lo[d], box_.hi[d]);
    }
    sig.values = u.replicate(1, n_seg_);
    return sig;
  }
  sig.values.resize(m, n_seg_);
  for (int s = 0; s < n_seg_; ++s)
    for (int d = 0; d < m; ++d) sig.values(d, s) = rng_.uniform(box_.lo[d], box_.hi[d]);
  return sig;
}

std::vector<ControlSignal> sample_controls(const VectorField& field, int n_s, int n_seg,
                                           double tau, std::uint64_t seed) {
  if (n_s < 1) throw std::invalid_argument("sample_controls: n_s must be >= 1");
  SignalStream stream(field.control_box(), n_seg, tau, seed);
  std::vector<ControlSignal> out;
  out.reserve(static_cast<std::size_t>(n_s));
  for (int i = 0; i < n_s; ++i) out.push_back(stream.next());
  return out;
}

// ---------------------------------------------------------------------------
// Bound estimation
// ---------------------------------------------------------------------------

LipschitzEstimate estimate_lipschitz(const VectorField& field, const Domain& domain,
                                     int samples, std::uint64_t seed, double safety_factor) {
  if (samples < 2) throw std::invalid_argument("estimate_lipschitz: samples must be >= 2");
  const int n = field.state_dim();
  const int m = field.control_box().dim();
  Rng rng(mix_seed(seed, 0xe571a7eULL));

  Vec x(n), y(n), u(m), fx(n), fy(n);
  double max_ratio = 0.0;
  double max_vel = 0.0;
  for (int i = 0; i < samples; ++i) {
    for (int d = 0; d < n; ++d) {
      x[d] = rng.uniform(domain.lower[d], domain.upper[d]);
      // Pair point at a modest offset, clamped into the domain.
      const double span = 0.05 * domain.extent(d);
      y[d] = std::clamp(x[d] + rng.uniform(-span, span), domain.lower[d], domain.upper[d]);
    }
    for (int d = 0; d < m; ++d)
      u[d] = rng.uniform(field.control_box().lo[d], field.control_box().hi[d]);
    field.eval(x, u, fx);
    field.eval(y, u, fy);
    max_vel = std::max({max_vel, fx.lpNorm<Eigen::Infinity>(), fy.lpNorm<Eigen::Infinity>()});
    const double dx = (x - y).lpNorm<Eigen::Infinity>();
    if (dx > 1e-12) max_ratio = std::max(max_ratio, (fx - fy).lpNorm<Eigen::Infinity>() / dx);
  }
  LipschitzEstimate est;
  est.safety_factor = safety_factor;
  est.L = max_ratio * safety_factor;
  est.M = max_vel * safety_factor;
  est.certified = false;
  return est;
}

}  // namespace rcbf
