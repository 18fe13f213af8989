#include "rcbf/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace rcbf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Signed-distance values along one trajectory, evaluated on demand. The
// signed distance is 1-Lipschitz in the state, so the value at grid index k
// is bracketed by the last exact query plus the accumulated step length;
// scans use the brackets to skip queries without changing any outcome.
class LazyTrace {
 public:
  LazyTrace(const Trajectory& traj, const UnionSdf& sdf, const Domain& domain, int steps)
      : traj_(traj), sdf_(sdf), vals_(static_cast<std::size_t>(steps) + 1,
                                      std::numeric_limits<double>::quiet_NaN()) {
    // Largest single-step displacement (wrap-aware) bounds |sd(k) - sd(j)|
    // by |k - j| * step.
    step_ = 0.0;
    for (int k = 0; k + 1 <= traj.valid_steps; ++k) {
      double d = 0.0;
      for (int dim = 0; dim < traj.states.rows(); ++dim)
        d = std::max(d, std::abs(domain.delta(dim, traj.states(dim, k + 1),
                                              traj.states(dim, k))));
      step_ = std::max(step_, d);
    }
  }

  double sd(int k) {
    double& v = vals_[static_cast<std::size_t>(k)];
    if (std::isnan(v)) {
      v = sdf_(traj_.states.col(std::min(k, traj_.valid_steps)));
      anchor_k_ = k;
      anchor_sd_ = v;
    }
    return v;
  }

  void seed_anchor(int k, double sd_value) {
    vals_[static_cast<std::size_t>(k)] = sd_value;
    anchor_k_ = k;
    anchor_sd_ = sd_value;
  }

  double lower_bound(int k) const { return anchor_sd_ - std::abs(k - anchor_k_) * step_; }

 private:
  const Trajectory& traj_;
  const UnionSdf& sdf_;
  std::vector<double> vals_;
  double step_ = 0.0;
  int anchor_k_ = -1;
  double anchor_sd_ = 0.0;
};

}  // namespace

// The scans below apply exactly the formulas of check_outside_brt /
// check_inside_brt / check_robust_recurrent / check_robust_nonrecurrent with
// lazy evaluation; certificate replay through those functions is covered by
// tests.
SafetyCheckResult safety_check(const Partition& partition, std::int64_t id,
                               const VectorField& field, const StageContext& ctx,
                               const VerifierConfig& cfg) {
  const Cell& cell = partition.cell(id);
  const double r = cell.radius;
  const Domain& domain = partition.domain();
  const bool can_split = cell.radius / 3.0 >= cfg.r_min;

  if (ctx.stage == 1) {
    // tau = 0: the conditions degenerate to a static signed-distance test.
    const double sd = ctx.analytic_unsafe->signed_distance(cell.center, domain);
    SafetyCheckResult out;
    if (sd < -r) {
      out.outcome = CellOutcome::Unsafe;
    } else if (sd > r) {
      out.outcome = CellOutcome::Safe;
      Certificate cert;
      cert.cell_id = id;
      cert.stage = 1;
      cert.signal_seed = cell_stream_seed(cfg.seed, id);
      cert.signal_index = -1;  // static certificate, no witness signal
      out.certificate = cert;
    } else if (can_split) {
      out.outcome = CellOutcome::Split;
    } else {
      out.outcome = CellOutcome::Unsafe;  // resolution floor fallback
    }
    return out;
  }

  const RcbfParams& params = *ctx.params;
  const int K = params.steps();
  const double dt = params.dt;
  const std::vector<double>& expL = *ctx.exp_L;  // e^{L t_k}, k = 0..K
  const double guard2 = params.M * dt + params.eps_int;
  const double guard3 = (params.M + r * params.L * expL[static_cast<std::size_t>(K)]) * dt;

  const std::uint64_t stream_seed = cell_stream_seed(cfg.seed, id);
  SignalStream stream(field.control_box(), cfg.n_seg, params.tau, stream_seed);

  const UnionSdf& sdf = (ctx.stage == 2) ? *ctx.reference_sdf : *ctx.safe_sdf;
  const double h_x = (ctx.stage == 3) ? -sdf(cell.center) : 0.0;

  std::vector<ControlSignal> signals;
  std::vector<Trajectory> trajectories;
  std::vector<LazyTrace> traces;
  signals.reserve(static_cast<std::size_t>(cfg.n_s));
  trajectories.reserve(static_cast<std::size_t>(cfg.n_s));
  traces.reserve(static_cast<std::size_t>(cfg.n_s));

  // Exact signed distance at the cell center, shared by every trace as the
  // initial Lipschitz anchor (phi(0) = center).
  const double sd_center = (ctx.stage == 3) ? -h_x : sdf(cell.center);

  auto ensure = [&](int j) {
    while (static_cast<int>(signals.size()) <= j) {
      signals.push_back(stream.next());
      trajectories.push_back(integrate(field, cell.center, signals.back(), params.tau, dt,
                                       *ctx.escape_box, domain));
      traces.emplace_back(trajectories.back(), sdf, domain, K);
      traces.back().seed_anchor(0, sd_center);
    }
  };

  // Unsafe first: all sampled controls must satisfy the stage's unsafe
  // condition. Escaped samples never do beyond their in-box prefix.
  bool all_unsafe = true;
  for (int j = 0; j < cfg.n_s && all_unsafe; ++j) {
    ensure(j);
    const Trajectory& traj = trajectories[static_cast<std::size_t>(j)];
    LazyTrace& tr = traces[static_cast<std::size_t>(j)];
    bool sample_unsafe = false;
    if (ctx.stage == 2) {
      for (int k = 1; k <= traj.valid_steps; ++k) {
        const double dive = -(r * expL[static_cast<std::size_t>(k)] + guard2);
        if (tr.lower_bound(k) >= dive) continue;  // cannot dive here
        if (tr.sd(k) < dive) {
          sample_unsafe = true;
          break;
        }
      }
    } else if (!traj.escaped) {
      const double threshold = h_x - r - guard3;
      sample_unsafe = true;
      for (int k = 1; k <= K; ++k) {
        const double re = r * expL[static_cast<std::size_t>(k)] + params.eps_int;
        // Largest possible robustified value at k (h = -sd).
        const double hp_ub = -tr.lower_bound(k) + re;
        const double rate_ub = hp_ub >= 0.0 ? params.alpha : params.beta;
        if (std::exp(rate_ub * k * dt) * hp_ub < threshold) continue;
        const double hp = -tr.sd(k) + re;
        const double rate = hp >= 0.0 ? params.alpha : params.beta;
        if (!(std::exp(rate * k * dt) * hp < threshold)) {
          sample_unsafe = false;
          break;
        }
      }
    }
    if (!sample_unsafe) all_unsafe = false;
  }
  if (all_unsafe) {
    SafetyCheckResult out;
    out.outcome = CellOutcome::Unsafe;
    return out;
  }

  // Safe side: one witness suffices. Escaped samples cannot certify.
  for (int j = 0; j < cfg.n_s; ++j) {
    ensure(j);
    const Trajectory& traj = trajectories[static_cast<std::size_t>(j)];
    if (traj.escaped) continue;
    LazyTrace& tr = traces[static_cast<std::size_t>(j)];
    bool ok = false;
    if (ctx.stage == 2) {
      ok = true;
      for (int k = K; k >= 0; --k) {
        const double t_next_idx = std::min(k + 1, K);
        const double bound = r * expL[static_cast<std::size_t>(t_next_idx)] + guard2;
        if (tr.lower_bound(k) > bound) continue;  // clearance certain here
        if (!(tr.sd(k) > bound)) {
          ok = false;
          break;
        }
      }
    } else {
      const double target = h_x + r;
      for (int k = K; k >= 1; --k) {
        const double re = r * expL[static_cast<std::size_t>(k)] + params.eps_int;
        // Largest possible value at k: h(k) <= h_x + accumulated motion.
        const double hm_ub = -tr.lower_bound(k) - re;
        const double rate_ub = hm_ub >= 0.0 ? params.alpha : params.beta;
        if (std::exp(rate_ub * k * dt) * hm_ub < target) continue;  // cannot succeed
        const double hm = -tr.sd(k) - re;
        const double rate = hm >= 0.0 ? params.alpha : params.beta;
        if (std::exp(rate * k * dt) * hm >= target) {
          ok = true;
          break;
        }
      }
    }
    if (ok) {
      SafetyCheckResult out;
      out.outcome = CellOutcome::Safe;
      Certificate cert;
      cert.cell_id = id;
      cert.stage = ctx.stage;
      cert.signal_seed = stream_seed;
      cert.signal_index = j;
      cert.signal_segments = signals[static_cast<std::size_t>(j)].values;
      out.certificate = cert;
      return out;
    }
  }

  SafetyCheckResult out;
  out.outcome = can_split ? CellOutcome::Split : CellOutcome::Unsafe;
  return out;
}

void VerifierConfig::validate() const {
  if (!(r_min > 0.0)) throw std::invalid_argument("verifier: r_min must be positive");
  if (n_s < 1) throw std::invalid_argument("verifier: n_s must be >= 1");
  if (n_seg < 1) throw std::invalid_argument("verifier: n_seg must be >= 1");
  if (max_stage3_iters < 1) throw std::invalid_argument("verifier: stage-3 cap must be >= 1");
  if (workers < 1) throw std::invalid_argument("verifier: workers must be >= 1");
}

std::uint64_t cell_stream_seed(std::uint64_t seed, std::int64_t cell_id) {
  return mix_seed(seed, static_cast<std::uint64_t>(cell_id), 0xce11ULL);
}

StagePassStats verify_cells(Partition& partition, std::vector<std::int64_t> pending,
                            const VectorField& field, const StageContext& ctx_in,
                            const VerifierConfig& cfg,
                            std::map<std::pair<std::int64_t, int>, Certificate>* certs) {
  StagePassStats stats;

  StageContext ctx = ctx_in;
  std::vector<double> exp_table;
  if (ctx.exp_L == nullptr && ctx.params != nullptr) {
    const int K = ctx.params->steps();
    exp_table.resize(static_cast<std::size_t>(K) + 1);
    for (int k = 0; k <= K; ++k)
      exp_table[static_cast<std::size_t>(k)] = std::exp(ctx.params->L * k * ctx.params->dt);
    ctx.exp_L = &exp_table;
  }

  // Bulk-synchronous passes: every cell of a pass is checked against the
  // same snapshot; labels and splits commit at the barrier in id order.
  while (!pending.empty()) {
    std::sort(pending.begin(), pending.end());
    std::vector<SafetyCheckResult> outcomes(pending.size());

    const int workers = std::max(1, cfg.workers);
    if (workers == 1 || pending.size() == 1) {
      for (std::size_t i = 0; i < pending.size(); ++i)
        outcomes[i] = safety_check(partition, pending[i], field, ctx, cfg);
    } else {
      std::atomic<std::size_t> next{0};
      auto work = [&]() {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= pending.size()) break;
          outcomes[i] = safety_check(partition, pending[i], field, ctx, cfg);
        }
      };
      std::vector<std::thread> threads;
      const int spawn = std::min<int>(workers, static_cast<int>(pending.size()));
      threads.reserve(static_cast<std::size_t>(spawn));
      for (int w = 0; w < spawn; ++w) threads.emplace_back(work);
      for (auto& t : threads) t.join();
    }

    std::vector<std::int64_t> next_pending;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      ++stats.examined;
      const std::int64_t id = pending[i];
      SafetyCheckResult& out = outcomes[i];
      switch (out.outcome) {
        case CellOutcome::Safe:
          partition.set_label(id, CellLabel::Safe, ctx.stage);
          if (certs && out.certificate) (*certs)[{id, ctx.stage}] = std::move(*out.certificate);
          break;
        case CellOutcome::Unsafe:
          partition.set_label(id, CellLabel::Unsafe, ctx.stage);
          if (certs) {
            certs->erase({id, 1});
            certs->erase({id, 2});
            certs->erase({id, 3});
          }
          break;
        case CellOutcome::Split: {
          ++stats.split;
          const auto children = partition.split(id);
          next_pending.insert(next_pending.end(), children.begin(), children.end());
          if (certs) {
            certs->erase({id, 1});
            certs->erase({id, 2});
            certs->erase({id, 3});
          }
          break;
        }
      }
    }
    pending = std::move(next_pending);
  }
  return stats;
}

VerifyResult verify_region(Partition& partition, const VectorField& field,
                           const AnalyticSet& unsafe_set, const RcbfParams& params,
                           const VerifierConfig& cfg, const BoxRec& escape_box) {
  cfg.validate();
  params.validate();
  const auto t_start = Clock::now();
  const Domain& domain = partition.domain();
  const bool faces = !cfg.boundary_neutral;

  VerifyResult result;
  result.workers = cfg.workers;
  std::map<std::pair<std::int64_t, int>, Certificate> certs;

  auto make_report = [&](int stage, const StagePassStats& stats, double wall, int iters,
                         bool converged = true) {
    StageReport rep;
    rep.stage = stage;
    rep.iterations = iters;
    rep.converged = converged;
    rep.examined = stats.examined;
    rep.split = stats.split;
    rep.safe = static_cast<std::int64_t>(partition.ids_with_label(CellLabel::Safe).size());
    rep.unsafe = static_cast<std::int64_t>(partition.ids_with_label(CellLabel::Unsafe).size());
    rep.volume_safe = partition.volume_with_label(CellLabel::Safe);
    rep.volume_unsafe = partition.volume_with_label(CellLabel::Unsafe);
    rep.wall_seconds = wall;
    rep.unsafe_ids = partition.ids_with_label(CellLabel::Unsafe);
    return rep;
  };

  // Stage 1: static separation from the analytic unsafe set.
  {
    const auto t0 = Clock::now();
    StageContext ctx;
    ctx.stage = 1;
    ctx.analytic_unsafe = &unsafe_set;
    ctx.params = &params;
    ctx.escape_box = &escape_box;
    const auto stats =
        verify_cells(partition, partition.ids_with_label(CellLabel::Pending), field, ctx, cfg,
                     &certs);
    result.stages.push_back(make_report(1, stats, seconds_since(t0), 1));
  }

  // Stage 2: robust avoidance of the tube of the stage-1 unsafe cells. The
  // reference set is bound at stage entry; the pending list is the previous
  // stage's tentative safe set.
  {
    const auto t0 = Clock::now();
    StageContext ctx;
    ctx.stage = 2;
    ctx.params = &params;
    ctx.escape_box = &escape_box;
    UnionSdf ref(partition.boxes_with_label(CellLabel::Unsafe),
                 partition.boxes_with_label(CellLabel::Safe), domain, faces);
    ctx.reference_sdf = &ref;
    auto pending = partition.ids_with_label(CellLabel::Safe);
    for (const auto id : pending) partition.set_label(id, CellLabel::Pending, 2);
    const auto stats = verify_cells(partition, std::move(pending), field, ctx, cfg, &certs);
    result.stages.push_back(make_report(2, stats, seconds_since(t0), 1));
  }

  // Stage 3: robust recurrence of h = -sd(., tentative safe union), repeated
  // with h rebuilt from the surviving safe set until no cell moves or the
  // iteration cap is reached. With cap 1 this is the single-pass mode: the
  // kept certificates are then relative to the safe set bound at stage-3
  // entry. For fields with L > 0 the frontier cells of any bounded safe set
  // fail the robustified condition under their worst heading, so the full
  // fixed point erodes the safe set to nothing; the cap trades that
  // self-consistency against a nonempty result.
  {
    const auto t0 = Clock::now();
    StagePassStats total;
    int iters = 0;
    bool converged = false;
    while (iters < cfg.max_stage3_iters) {
      ++iters;
      auto pending = partition.ids_with_label(CellLabel::Safe);
      if (pending.empty()) {
        converged = true;
        break;
      }
      std::vector<BoxRec> safe_boxes;
      safe_boxes.reserve(pending.size());
      for (const auto id : pending) safe_boxes.push_back(partition.box(id));
      UnionSdf safe_sdf(std::move(safe_boxes),
                        partition.boxes_with_label(CellLabel::Unsafe), domain, faces);

      StageContext ctx;
      ctx.stage = 3;
      ctx.params = &params;
      ctx.escape_box = &escape_box;
      ctx.safe_sdf = &safe_sdf;

      const auto unsafe_before = partition.ids_with_label(CellLabel::Unsafe).size();
      for (const auto id : pending) partition.set_label(id, CellLabel::Pending, 3);
      const auto stats = verify_cells(partition, std::move(pending), field, ctx, cfg, &certs);
      total.examined += stats.examined;
      total.split += stats.split;
      const auto unsafe_after = partition.ids_with_label(CellLabel::Unsafe).size();
      if (unsafe_after == unsafe_before) {
        converged = true;
        break;
      }
    }
    result.stages.push_back(make_report(3, total, seconds_since(t0), iters, converged));
  }

  for (auto& [key, cert] : certs) {
    if (partition.cell(key.first).label == CellLabel::Safe && key.second >= 2)
      result.certificates.push_back(cert);
  }
  result.wall_seconds = seconds_since(t_start);
  return result;
}

}  // namespace rcbf
