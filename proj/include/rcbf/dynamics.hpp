#pragma once

#include "rcbf/geometry.hpp"
#include "rcbf/rng.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace rcbf {

struct ControlBox {
  Vec lo;
  Vec hi;
  int dim() const { return static_cast<int>(lo.size()); }
};

// Right-hand side F(x, u) of dx/dt = F(x, u) with admissible controls in a
// box. lipschitz() bounds ||F(y,u)-F(x,u)||_inf / ||y-x||_inf and velocity()
// bounds ||F(x,u)||_inf, both over the configured bounding box (which covers
// every state a truncated trajectory can visit).
class VectorField {
 public:
  virtual ~VectorField() = default;

  virtual int state_dim() const = 0;
  virtual const ControlBox& control_box() const = 0;
  virtual void eval(const Vec& x, const Vec& u, Vec& dx) const = 0;

  virtual double lipschitz() const = 0;
  virtual double velocity() const = 0;
  virtual std::string name() const = 0;
};

using VectorFieldPtr = std::shared_ptr<const VectorField>;

// Relative planar evasion dynamics with turning control u in [-1, 1]:
//   dx1 = -v + v cos x3 + u x2
//   dx2 =  v sin x3 - u x1
//   dx3 = -u
// x3 is periodic on [0, 2pi). Bounds are exact on the given box:
//   L = u_max + v,  M = max(2v + u_max |x2|, v + u_max |x1|, u_max).
class Dubins3d final : public VectorField {
 public:
  Dubins3d(double v, const BoxRec& bound_box);

  int state_dim() const override { return 3; }
  const ControlBox& control_box() const override { return control_; }
  void eval(const Vec& x, const Vec& u, Vec& dx) const override;
  double lipschitz() const override { return lipschitz_; }
  double velocity() const override { return velocity_; }
  std::string name() const override { return "dubins3d"; }
  double speed() const { return v_; }

 private:
  double v_;
  ControlBox control_;
  double lipschitz_;
  double velocity_;
};

// dx/dt = u with u in [-1, 1]^n: L = 0, M = 1.
class SingleIntegrator final : public VectorField {
 public:
  explicit SingleIntegrator(int n);

  int state_dim() const override { return n_; }
  const ControlBox& control_box() const override { return control_; }
  void eval(const Vec& x, const Vec& u, Vec& dx) const override;
  double lipschitz() const override { return 0.0; }
  double velocity() const override { return 1.0; }
  std::string name() const override { return "integrator" + std::to_string(n_) + "d"; }

 private:
  int n_;
  ControlBox control_;
};

// Arbitrary field from a callable (tests and custom registrations).
class LambdaField final : public VectorField {
 public:
  using Fn = std::function<void(const Vec&, const Vec&, Vec&)>;
  LambdaField(int n, ControlBox control, Fn fn, double L, double M, std::string name)
      : n_(n), control_(std::move(control)), fn_(std::move(fn)), lipschitz_(L), velocity_(M),
        name_(std::move(name)) {}

  int state_dim() const override { return n_; }
  const ControlBox& control_box() const override { return control_; }
  void eval(const Vec& x, const Vec& u, Vec& dx) const override { fn_(x, u, dx); }
  double lipschitz() const override { return lipschitz_; }
  double velocity() const override { return velocity_; }
  std::string name() const override { return name_; }

 private:
  int n_;
  ControlBox control_;
  Fn fn_;
  double lipschitz_;
  double velocity_;
  std::string name_;
};

// Piecewise-constant control schedule on (0, tau]: n_seg equal segments,
// one control vector per segment.
struct ControlSignal {
  double tau = 0.0;
  Eigen::MatrixXd values;  // control_dim x n_seg

  int segments() const { return static_cast<int>(values.cols()); }
};

// Time-gridded states under one control signal. states.col(k) is the state
// at time k*dt, k = 0..steps. If the trajectory left the bounding box it is
// truncated: columns beyond valid_steps repeat the last in-box state and
// `escaped` is set.
struct Trajectory {
  Eigen::MatrixXd states;
  double dt = 0.0;
  bool escaped = false;
  int valid_steps = 0;

  int steps() const { return static_cast<int>(states.cols()) - 1; }
};

// Classical fixed-step RK4 over the grid 0, dt, ..., tau. dt must divide tau
// and segment boundaries must fall on the grid; the control is held constant
// within each segment. Periodic coordinates wrap after each step; leaving
// `bound_box` in a non-periodic dimension truncates and flags the trajectory.
Trajectory integrate(const VectorField& field, const Vec& x0, const ControlSignal& signal,
                     double tau, double dt, const BoxRec& bound_box, const Domain& domain);

// Deterministic signal stream for one (seed, cell) pair: first the constant
// per-axis extreme and zero controls (2m+1 of them), then i.i.d. uniform
// piecewise-constant signals with n_seg segments.
class SignalStream {
 public:
  SignalStream(const ControlBox& box, int n_seg, double tau, std::uint64_t seed);

  ControlSignal next();
  int emitted() const { return emitted_; }

 private:
  ControlBox box_;
  int n_seg_;
  double tau_;
  Rng rng_;
  int emitted_ = 0;
};

// First n_s signals of the stream seeded with `seed`.
std::vector<ControlSignal> sample_controls(const VectorField& field, int n_s, int n_seg,
                                           double tau, std::uint64_t seed);

struct LipschitzEstimate {
  double L = 0.0;
  double M = 0.0;
  bool certified = false;  // estimates are never certified
  double safety_factor = 1.5;
};

// Sampled estimate of the Lipschitz and velocity bounds over domain x U,
// inflated by a safety factor. Flagged non-certified in all reports.
LipschitzEstimate estimate_lipschitz(const VectorField& field, const Domain& domain,
                                     int samples, std::uint64_t seed,
                                     double safety_factor = 1.5);

}  // namespace rcbf
