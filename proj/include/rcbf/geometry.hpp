#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

namespace rcbf {

using Vec = Eigen::VectorXd;
using VecRef = Eigen::Ref<const Eigen::VectorXd>;

constexpr int kMaxDim = 4;

// Axis-aligned state-space box, optionally periodic per dimension.
// Periodic dimensions have finite extent and wrap at the seam lower == upper.
struct Domain {
  Vec lower;
  Vec upper;
  std::vector<std::uint8_t> periodic;  // one flag per dimension

  int dim() const { return static_cast<int>(lower.size()); }
  double extent(int d) const { return upper[d] - lower[d]; }
  double volume() const;

  bool is_periodic(int d) const { return d < static_cast<int>(periodic.size()) && periodic[d]; }

  // Wraps periodic coordinates into [lower, upper); other coordinates pass through.
  void wrap(Vec& x) const;

  // Signed offset a - b reduced to [-extent/2, extent/2) on periodic dimensions.
  double delta(int d, double a, double b) const;

  bool contains(VecRef x, double pad = 0.0) const;

  void validate() const;  // throws std::invalid_argument on bad bounds
};

enum class CellLabel : std::uint8_t { Pending = 0, Safe = 1, Unsafe = 2 };

const char* to_string(CellLabel label);
CellLabel label_from_string(const std::string& s);

// Hypercube B_r(c) in the inf-norm: the atomic unit of the partition.
struct Cell {
  std::int64_t id = -1;
  Vec center;
  double radius = 0.0;
  CellLabel label = CellLabel::Pending;
};

// Splits a cell into 3^n children of radius r/3 centered at c + (2r/3)*delta,
// delta in {-1,0,1}^n. Children tile the parent exactly and are labeled
// pending. Ids are assigned sequentially starting at first_child_id.
std::vector<Cell> split_cell(const Cell& cell, std::int64_t first_child_id = 0);

// Total volume of the cells, each clipped to the domain box (periodic
// dimensions are never clipped: cells cannot straddle the seam).
double volume(const std::vector<Cell>& cells, const Domain& domain);

// Inf-norm distance from x to the box [lo, hi]; 0 if x is inside.
// Periodic dimensions measure gaps through the seam.
double box_distance(VecRef x, const Vec& lo, const Vec& hi, const Domain& domain);

// Exact signed inf-norm distance from x to the union of `cells`, where
// `complement_cells` together with `cells` tile the domain. Outside the
// union the value is the distance to the nearest member cell; inside it is
// minus the distance to the nearest non-member cell or domain face (inside
// depth is exact because the complement is known). Returns +inf when
// `cells` is empty.
//
// When `boundary_faces` is true (default), non-periodic domain faces bound
// the inside depth; with false they are ignored.
double signed_distance_to_union(VecRef x, const std::vector<Cell>& cells,
                                const std::vector<Cell>& complement_cells,
                                const Domain& domain, bool boundary_faces = true);

// ---------------------------------------------------------------------------
// Spatial acceleration. Contract: results are identical to the brute-force
// scan; the bucket grid is acceleration only.
// ---------------------------------------------------------------------------

struct BoxRec {
  Vec lo;
  Vec hi;
};

// Bounding-volume hierarchy over axis-aligned boxes. Queries are exact
// (identical to a brute-force scan); the tree is acceleration only.
class BoxTree {
 public:
  BoxTree() = default;
  BoxTree(std::vector<BoxRec> boxes, const Domain& domain);

  bool empty() const { return boxes_.empty(); }

  // Minimum inf-norm distance from x to any box (0 if x inside one).
  double min_distance(VecRef x) const;

  // True if some box contains x (closed boxes).
  bool contains(VecRef x) const;

 private:
  struct Node {
    Vec lo, hi;          // bounds of the subtree
    std::int32_t left = -1, right = -1;
    std::int32_t begin = 0, end = 0;  // leaf box range
  };

  std::int32_t build(std::int32_t begin, std::int32_t end);

  std::vector<BoxRec> boxes_;
  std::vector<std::int32_t> order_;
  std::vector<Node> nodes_;
  Domain domain_;
  std::int32_t root_ = -1;
};

// Signed distance against a labeled tiling: member boxes vs complement boxes,
// with the domain-face policy of signed_distance_to_union.
class UnionSdf {
 public:
  UnionSdf() = default;
  UnionSdf(std::vector<BoxRec> members, std::vector<BoxRec> complement, const Domain& domain,
           bool boundary_faces);

  double operator()(VecRef x) const;
  bool empty_members() const { return members_.empty(); }

 private:
  BoxTree members_;
  BoxTree complement_;
  Domain domain_;
  bool boundary_faces_ = true;
  bool members_empty_ = true;
};

// ---------------------------------------------------------------------------
// Partition: disjoint cells tiling the domain, each pending, safe or unsafe.
//
// Cells live on the triadic lattice of an initial uniform grid of cubes of
// width root_width (which must divide every domain extent exactly; periodic
// dimensions therefore never straddle the seam). Integer lattice keys make
// point lookup and child generation exact.
// ---------------------------------------------------------------------------

struct CellKey {
  std::int8_t depth = 0;
  std::array<std::int64_t, kMaxDim> g{};  // global per-dim index at this depth

  bool operator==(const CellKey& o) const { return depth == o.depth && g == o.g; }
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const;
};

struct CellRec {
  Cell cell;
  CellKey key;
  int label_stage = 0;  // stage that fixed the current label (0 = unset)
  bool alive = true;    // false once split into children
};

class Partition {
 public:
  Partition(const Domain& domain, double root_width);

  // Rebuilds a partition from serialized cells (labels preserved). The cells
  // must be exactly the leaves of a triadic refinement of the root grid.
  static Partition from_cells(const Domain& domain, double root_width,
                              const std::vector<Cell>& cells);

  const Domain& domain() const { return domain_; }
  double root_width() const { return root_width_; }

  // Live cells (leaves). Ids are assigned in commit order.
  std::size_t size() const { return live_count_; }
  std::vector<std::int64_t> live_ids() const;
  const CellRec& rec(std::int64_t id) const { return recs_.at(index_.at(id)); }
  const Cell& cell(std::int64_t id) const { return rec(id).cell; }

  void set_label(std::int64_t id, CellLabel label, int stage);
  void set_label_stage(std::int64_t id, int stage);

  // Replaces the cell with its 3^n children (pending). Returns child ids.
  std::vector<std::int64_t> split(std::int64_t id);

  // Id of the leaf containing x (half-open boxes; upper domain faces closed).
  std::int64_t locate(VecRef x) const;

  std::vector<std::int64_t> ids_with_label(CellLabel label) const;
  std::vector<Cell> cells_with_label(CellLabel label) const;
  double volume_with_label(CellLabel label) const;

  std::vector<BoxRec> boxes_with_label(CellLabel label) const;
  BoxRec box(std::int64_t id) const;

  double cell_width(int depth) const { return root_width_ / std::pow(3.0, depth); }

  // Tiling diagnostics: sum of live-cell volumes must equal the domain volume.
  double total_volume() const;

 private:
  Cell make_cell(const CellKey& key, std::int64_t id) const;
  void insert_leaf(const CellKey& key, std::int64_t id, CellLabel label, int stage);

  Domain domain_;
  double root_width_;
  std::array<std::int64_t, kMaxDim> root_counts_{};
  std::vector<CellRec> recs_;
  std::unordered_map<std::int64_t, std::size_t> index_;  // id -> recs_ slot
  std::unordered_map<CellKey, std::int64_t, CellKeyHash> leaf_map_;
  std::int64_t next_id_ = 0;
  std::size_t live_count_ = 0;
  int max_depth_ = 0;
};

}  // namespace rcbf
