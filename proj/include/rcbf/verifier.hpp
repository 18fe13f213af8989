#pragma once

#include "rcbf/conditions.hpp"
#include "rcbf/dynamics.hpp"
#include "rcbf/geometry.hpp"
#include "rcbf/shapes.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace rcbf {

struct VerifierConfig {
  double r_min = 0.1;            // resolution floor: cells below it are never split
  int n_s = 100;                 // sampled control signals per cell
  int n_seg = 5;                 // piecewise-constant segments per signal
  std::uint64_t seed = 0;
  int max_stage3_iters = 50;
  int workers = 1;
  bool boundary_neutral = false;  // domain faces neutral for inside depth

  void validate() const;
};

struct StageReport {
  int stage = 0;
  int iterations = 1;          // > 1 only for stage 3
  bool converged = true;       // stage 3: last iteration moved no cell
  std::int64_t examined = 0;   // cell checks performed
  std::int64_t split = 0;
  std::int64_t safe = 0;       // safe cells at stage end
  std::int64_t unsafe = 0;     // unsafe cells at stage end
  double volume_safe = 0.0;
  double volume_unsafe = 0.0;
  double wall_seconds = 0.0;
  std::vector<std::int64_t> unsafe_ids;  // unsafe set snapshot at stage end
};

// Witness recorded when a cell passes a stage's safe condition. The signal
// values are stored so replay does not depend on the sampler.
struct Certificate {
  std::int64_t cell_id = -1;
  int stage = 0;
  std::uint64_t signal_seed = 0;  // per-cell stream seed
  int signal_index = -1;          // index within the cell's stream
  Eigen::MatrixXd signal_segments;  // control_dim x n_seg
};

struct VerifyResult {
  std::vector<StageReport> stages;
  // Latest certificate per (cell, stage); stage-3 entries come from the
  // final fixed-point iteration, so they are consistent with the final sets.
  std::vector<Certificate> certificates;
  double wall_seconds = 0.0;
  int workers = 1;
};

// Per-cell stream seed (exposed so replays can re-derive signals).
std::uint64_t cell_stream_seed(std::uint64_t seed, std::int64_t cell_id);

// Three-stage safe-set verification over an adaptive partition:
//   stage 1: static separation from the analytic unsafe set (tau = 0);
//   stage 2: robust tube-avoidance against the stage-1 unsafe cells;
//   stage 3: robust recurrence of h = -sd(., union of tentative safe cells),
//            iterated to a fixed point with h rebuilt each iteration.
// Every cell ends safe or unsafe; safe cells carry replayable certificates.
VerifyResult verify_region(Partition& partition, const VectorField& field,
                           const AnalyticSet& unsafe_set, const RcbfParams& params,
                           const VerifierConfig& cfg, const BoxRec& escape_box);

// Single-stage pass driver (exposed for tests): drains the pending ids,
// splitting undecided cells until the resolution floor. `stage` selects the
// condition family (1, 2 or 3); `reference` is the stage's bound unsafe set
// (stage 2) and `safe_set` the tentative safe union (stage 3).
struct StageContext {
  int stage = 1;
  const AnalyticSet* analytic_unsafe = nullptr;  // stage 1
  const UnionSdf* reference_sdf = nullptr;       // stage 2: sd to bound unsafe cells
  const UnionSdf* safe_sdf = nullptr;            // stage 3: sd to tentative safe cells
  const RcbfParams* params = nullptr;
  const BoxRec* escape_box = nullptr;
  const std::vector<double>* exp_L = nullptr;    // e^{L t_k} table; filled on entry if null
};

struct StagePassStats {
  std::int64_t examined = 0;
  std::int64_t split = 0;
};

// Per-cell decision: unsafe when every sampled control satisfies the stage's
// unsafe condition, safe (with a recorded witness) when some control
// satisfies the safe condition, otherwise split - or unsafe at the
// resolution floor. Pure given its inputs: the sampled signals depend only
// on (seed, cell id), never on scheduling.
enum class CellOutcome : std::uint8_t { Safe, Unsafe, Split };

struct SafetyCheckResult {
  CellOutcome outcome = CellOutcome::Split;
  std::optional<Certificate> certificate;
};

SafetyCheckResult safety_check(const Partition& partition, std::int64_t cell_id,
                               const VectorField& field, const StageContext& ctx,
                               const VerifierConfig& cfg);

StagePassStats verify_cells(Partition& partition, std::vector<std::int64_t> pending,
                            const VectorField& field, const StageContext& ctx,
                            const VerifierConfig& cfg,
                            std::map<std::pair<std::int64_t, int>, Certificate>* certs);

}  // namespace rcbf
