#pragma once

#include <Eigen/Core>

#include <cmath>
#include <span>
#include <vector>

namespace rcbf {

// Scalar knobs of the verification conditions. All trajectory-based checks
// run on the uniform grid 0, dt, ..., tau; eps_int absorbs integration error
// and M dt bounds inter-sample drift wherever a condition quantifies over
// continuous time.
struct RcbfParams {
  double tau = 1.0;
  double alpha = 0.05;
  double beta = 0.05;
  double L = 0.0;        // Lipschitz bound of the field (1/time)
  double M = 0.0;        // velocity bound sup ||F||_inf (state units/time)
  double dt = 0.01;
  double eps_int = 0.0;  // integration-error allowance (state units)

  int steps() const;
  void validate() const;  // throws std::invalid_argument

  static double default_eps_int(double L, double tau) { return 1e-6 * std::exp(L * tau); }
};

// Parameters of the minimum-horizon bound for signed-distance barrier
// validity (sector bounds and tightened rate parameters).
struct ValidityParams {
  double a1 = 0.0;
  double a2 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  double delta_bar = 0.0;
  double delta_underbar = 0.0;

  void validate() const;
};

// Piecewise-constant positive rate: alpha on s >= 0, beta on s < 0.
inline double gamma_rate(double s, double alpha, double beta) noexcept {
  return s >= 0.0 ? alpha : beta;
}

// Worst-case inf-norm deviation at time t of two trajectories started within
// r of each other under a shared control: r * e^(L t).
inline double deviation_bound(double r, double L, double t) noexcept {
  return r * std::exp(L * t);
}

// Robust cell-outside check. sd_traj[k] = sd(phi(t_k, x, u), X_u) on the
// grid t_k = k dt, k = 0..steps (size steps+1). True iff
//   sd_traj[k] > r e^(L t_{k+1}) + M dt + eps_int   for every k
// (t_{k+1} clamped to tau), which extends the strict clearance condition
// from grid points to all continuous t in [0, tau]. True certifies that the
// whole cell B_r(x) stays clear of the reference unsafe set under u, hence
// the cell does not meet the backward tube within the horizon.
bool check_outside_brt(std::span<const double> sd_traj, double r, const RcbfParams& params);

// Robust cell-inside check over all sampled controls. Each trajectory covers
// t_k = k dt, k = 1..steps (size steps). True iff every sampled u has some
// grid time with sd < -(r e^(L t_k) + M dt + eps_int). Quantifying over only
// the sampled controls makes a true result a conservative unsafe label, not
// a certificate of tube membership.
bool check_inside_brt(const std::vector<std::span<const double>>& sd_trajs, double r,
                      const RcbfParams& params);

// Robust recurrence check for one control. h_traj[k] = h(phi(t_k, x, u)) on
// t_k = k dt, k = 1..steps (size steps); h_x = h(x) exact. True iff
//   max_k e^(gamma(hm_k) t_k) hm_k >= h_x + r,  hm_k = h_traj[k] - r e^(L t_k) - eps_int.
// The grid max under-approximates the continuous max, which is the sound
// direction; no inter-sample guard is needed.
bool check_robust_recurrent(std::span<const double> h_traj, double h_x, double r,
                            const RcbfParams& params);

// Robust non-recurrence check over all sampled controls (same grid layout as
// check_robust_recurrent). True iff for every sampled u the continuous-time
// max of e^(gamma(hp) t) hp, hp(t) = h(phi(t)) + r e^(L t), is certified
// below h_x - r via per-segment growth bounds. Same conservative-label
// caveat as check_inside_brt.
bool check_robust_nonrecurrent(const std::vector<std::span<const double>>& h_trajs, double h_x,
                               double r, const RcbfParams& params);

// Unrobustified pointwise recurrence condition on an explicit time grid:
//   max_k e^(gamma(h_traj[k]) t_k) h_traj[k] >= h_x.
// Used by tests and the simulator-style API, never for cell certification.
bool rcbf_pointwise(std::span<const double> h_traj, std::span<const double> times, double h_x,
                    double alpha, double beta);

// Minimum horizon that makes the signed distance to a sandwiched set a valid
// recurrence barrier:
//   max{ log(a2/a1)/(alpha_hat - alpha), log(a2/a1)/(beta - beta_hat) }
//   + log(delta_bar/delta_underbar)/min{alpha_hat, beta_hat}.
double validity_min_tau(const ValidityParams& p);

}  // namespace rcbf
