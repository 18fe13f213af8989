#include "rcbf/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcbf {

int RcbfParams::steps() const {
  const auto k = static_cast<int>(std::llround(tau / dt));
  return k;
}

void RcbfParams::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("params: tau must be positive");
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("params: alpha and beta must be positive");
  if (L < 0.0 || M < 0.0) throw std::invalid_argument("params: L and M must be nonnegative");
  if (!(dt > 0.0) || dt > tau) throw std::invalid_argument("params: dt must lie in (0, tau]");
  if (std::abs(steps() * dt - tau) > 1e-9 * std::max(1.0, tau))
    throw std::invalid_argument("params: dt must divide tau");
  if (eps_int < 0.0) throw std::invalid_argument("params: eps_int must be nonnegative");
}

void ValidityParams::validate() const {
  if (!(a2 >= a1) || !(a1 > 0.0))
    throw std::invalid_argument("validity: a2 >= a1 > 0 required");
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("validity: alpha, beta must be positive");
  if (!(alpha_hat > alpha)) throw std::invalid_argument("validity: alpha_hat > alpha required");
  if (!(beta_hat > 0.0) || !(beta_hat < beta))
    throw std::invalid_argument("validity: 0 < beta_hat < beta required");
  if (!(delta_bar >= delta_underbar) || !(delta_underbar > 0.0))
    throw std::invalid_argument("validity: delta_bar >= delta_underbar > 0 required");
}

bool check_outside_brt(std::span<const double> sd_traj, double r, const RcbfParams& params) {
  params.validate();
  const int K = params.steps();
  if (static_cast<int>(sd_traj.size()) != K + 1)
    throw std::invalid_argument("check_outside_brt: trajectory does not match the grid");
  const double guard = params.M * params.dt + params.eps_int;
  // Scan from the end: the clearance threshold grows with t, so late grid
  // points fail first.
  for (int k = K; k >= 0; --k) {
    const double t_next = std::min((k + 1) * params.dt, params.tau);
    if (!(sd_traj[static_cast<std::size_t>(k)] >
          deviation_bound(r, params.L, t_next) + guard))
      return false;
  }
  return true;
}

bool check_inside_brt(const std::vector<std::span<const double>>& sd_trajs, double r,
                      const RcbfParams& params) {
  params.validate();
  if (sd_trajs.empty()) throw std::invalid_argument("check_inside_brt: empty trajectory list");
  const int K = params.steps();
  const double guard = params.M * params.dt + params.eps_int;
  for (const auto& sd : sd_trajs) {
    if (static_cast<int>(sd.size()) != K)
      throw std::invalid_argument("check_inside_brt: trajectory does not match the grid");
    bool dives = false;
    for (int k = 1; k <= K; ++k) {
      if (sd[static_cast<std::size_t>(k - 1)] <
          -(deviation_bound(r, params.L, k * params.dt) + guard)) {
        dives = true;
        break;
      }
    }
    if (!dives) return false;
  }
  return true;
}

bool check_robust_recurrent(std::span<const double> h_traj, double h_x, double r,
                            const RcbfParams& params) {
  params.validate();
  const int K = params.steps();
  if (K < 1 || static_cast<int>(h_traj.size()) != K)
    throw std::invalid_argument("check_robust_recurrent: trajectory does not match the grid");
  const double target = h_x + r;
  for (int k = K; k >= 1; --k) {
    const double t = k * params.dt;
    const double hm = h_traj[static_cast<std::size_t>(k - 1)] -
                      deviation_bound(r, params.L, t) - params.eps_int;
    const double value = std::exp(gamma_rate(hm, params.alpha, params.beta) * t) * hm;
    if (value >= target) return true;
  }
  return false;
}

bool check_robust_nonrecurrent(const std::vector<std::span<const double>>& h_trajs, double h_x,
                               double r, const RcbfParams& params) {
  params.validate();
  if (h_trajs.empty())
    throw std::invalid_argument("check_robust_nonrecurrent: empty trajectory list");
  const int K = params.steps();
  // The guard absorbs inter-sample growth of hp(t) = h(phi(t)) + r e^(L t):
  // |dh/dt| <= M and d(r e^(L t))/dt <= r L e^(L tau).
  const double guard =
      (params.M + r * params.L * std::exp(params.L * params.tau)) * params.dt;
  const double threshold = h_x - r - guard;

  for (const auto& h : h_trajs) {
    if (static_cast<int>(h.size()) != K)
      throw std::invalid_argument("check_robust_nonrecurrent: trajectory does not match the grid");
    for (int k = 1; k <= K; ++k) {
      const double t = k * params.dt;
      const double hp = h[static_cast<std::size_t>(k - 1)] + deviation_bound(r, params.L, t) +
                        params.eps_int;
      const double value = std::exp(gamma_rate(hp, params.alpha, params.beta) * t) * hp;
      if (!(value < threshold)) return false;
    }
  }
  return true;
}

bool rcbf_pointwise(std::span<const double> h_traj, std::span<const double> times, double h_x,
                    double alpha, double beta) {
  if (h_traj.size() != times.size())
    throw std::invalid_argument("rcbf_pointwise: value/time size mismatch");
  for (std::size_t k = 0; k < h_traj.size(); ++k) {
    const double value =
        std::exp(gamma_rate(h_traj[k], alpha, beta) * times[k]) * h_traj[k];
    if (value >= h_x) return true;
  }
  return false;
}

double validity_min_tau(const ValidityParams& p) {
  p.validate();
  const double log_ratio = std::log(p.a2 / p.a1);
  const double first =
      std::max(log_ratio / (p.alpha_hat - p.alpha), log_ratio / (p.beta - p.beta_hat));
  const double second =
      std::log(p.delta_bar / p.delta_underbar) / std::min(p.alpha_hat, p.beta_hat);
  return first + second;
}

}  // namespace rcbf
