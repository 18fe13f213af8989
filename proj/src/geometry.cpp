#include "rcbf/geometry.hpp"

#include "rcbf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcbf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// Domain
// ---------------------------------------------------------------------------

double Domain::volume() const {
  double v = 1.0;
  for (int d = 0; d < dim(); ++d) v *= extent(d);
  return v;
}

void Domain::wrap(Vec& x) const {
  for (int d = 0; d < dim(); ++d) {
    if (!is_periodic(d)) continue;
    const double ext = extent(d);
    double y = std::fmod(x[d] - lower[d], ext);
    if (y < 0) y += ext;
    x[d] = lower[d] + y;
  }
}

double Domain::delta(int d, double a, double b) const {
  double diff = a - b;
  if (is_periodic(d)) {
    const double ext = extent(d);
    diff = std::fmod(diff, ext);
    if (diff < -0.5 * ext) diff += ext;
    if (diff >= 0.5 * ext) diff -= ext;
  }
  return diff;
}

bool Domain::contains(VecRef x, double pad) const {
  for (int d = 0; d < dim(); ++d) {
    if (is_periodic(d)) continue;
    if (x[d] < lower[d] - pad || x[d] > upper[d] + pad) return false;
  }
  return true;
}

void Domain::validate() const {
  if (dim() < 1) throw std::invalid_argument("domain: dimension must be >= 1");
  if (upper.size() != lower.size()) throw std::invalid_argument("domain: bound size mismatch");
  for (int d = 0; d < dim(); ++d) {
    if (!(lower[d] < upper[d])) throw std::invalid_argument("domain: lower < upper required");
    if (!std::isfinite(lower[d]) || !std::isfinite(upper[d]))
      throw std::invalid_argument("domain: bounds must be finite");
  }
}

const char* to_string(CellLabel label) {
  switch (label) {
    case CellLabel::Pending: return "pending";
    case CellLabel::Safe: return "safe";
    case CellLabel::Unsafe: return "unsafe";
  }
  return "pending";
}

CellLabel label_from_string(const std::string& s) {
  if (s == "safe") return CellLabel::Safe;
  if (s == "unsafe") return CellLabel::Unsafe;
  if (s == "pending") return CellLabel::Pending;
  throw std::invalid_argument("unknown cell label: " + s);
}

// ---------------------------------------------------------------------------
// Cell operations
// ---------------------------------------------------------------------------

std::vector<Cell> split_cell(const Cell& cell, std::int64_t first_child_id) {
  if (!(cell.radius > 0.0)) throw std::invalid_argument("split_cell: radius must be positive");
  const int n = static_cast<int>(cell.center.size());
  const double step = 2.0 * cell.radius / 3.0;
  const double child_r = cell.radius / 3.0;

  std::vector<Cell> children;
  const long total = static_cast<long>(std::llround(std::pow(3.0, n)));
  children.reserve(static_cast<std::size_t>(total));
  for (long idx = 0; idx < total; ++idx) {
    Cell child;
    child.id = first_child_id + idx;
    child.radius = child_r;
    child.label = CellLabel::Pending;
    child.center = cell.center;
    long rem = idx;
    for (int d = 0; d < n; ++d) {
      const int delta = static_cast<int>(rem % 3) - 1;  // -1, 0, 1
      rem /= 3;
      child.center[d] += step * delta;
    }
    children.push_back(std::move(child));
  }
  return children;
}

double volume(const std::vector<Cell>& cells, const Domain& domain) {
  double total = 0.0;
  for (const Cell& c : cells) {
    double v = 1.0;
    for (int d = 0; d < domain.dim(); ++d) {
      double lo = c.center[d] - c.radius;
      double hi = c.center[d] + c.radius;
      if (!domain.is_periodic(d)) {
        lo = std::max(lo, domain.lower[d]);
        hi = std::min(hi, domain.upper[d]);
      }
      v *= std::max(0.0, hi - lo);
    }
    total += v;
  }
  return total;
}

double box_distance(VecRef x, const Vec& lo, const Vec& hi, const Domain& domain) {
  double dist = 0.0;
  for (int d = 0; d < domain.dim(); ++d) {
    double gap;
    if (domain.is_periodic(d)) {
      const double half_w = 0.5 * (hi[d] - lo[d]);
      const double center = 0.5 * (hi[d] + lo[d]);
      gap = std::abs(domain.delta(d, x[d], center)) - half_w;
    } else {
      gap = std::max(lo[d] - x[d], x[d] - hi[d]);
    }
    if (gap > dist) dist = gap;
  }
  return std::max(dist, 0.0);
}

namespace {

double face_depth(VecRef x, const Domain& domain) {
  double depth = kInf;
  for (int d = 0; d < domain.dim(); ++d) {
    if (domain.is_periodic(d)) continue;
    depth = std::min(depth, std::min(x[d] - domain.lower[d], domain.upper[d] - x[d]));
  }
  return std::max(depth, 0.0);
}

BoxRec cell_box(const Cell& c) {
  BoxRec b;
  b.lo = c.center.array() - c.radius;
  b.hi = c.center.array() + c.radius;
  return b;
}

}  // namespace

double signed_distance_to_union(VecRef x, const std::vector<Cell>& cells,
                                const std::vector<Cell>& complement_cells,
                                const Domain& domain, bool boundary_faces) {
  if (cells.empty()) return kInf;

  double outside = kInf;
  for (const Cell& c : cells) {
    const BoxRec b = cell_box(c);
    outside = std::min(outside, box_distance(x, b.lo, b.hi, domain));
    if (outside == 0.0) break;
  }
  if (outside > 0.0) return outside;

  double depth = boundary_faces ? face_depth(x, domain) : kInf;
  for (const Cell& c : complement_cells) {
    const BoxRec b = cell_box(c);
    depth = std::min(depth, box_distance(x, b.lo, b.hi, domain));
    if (depth == 0.0) break;
  }
  return -depth;
}

// ---------------------------------------------------------------------------
// BoxTree
// ---------------------------------------------------------------------------

BoxTree::BoxTree(std::vector<BoxRec> boxes, const Domain& domain)
    : boxes_(std::move(boxes)), domain_(domain) {
  if (boxes_.empty()) return;
  order_.resize(boxes_.size());
  for (std::size_t i = 0; i < boxes_.size(); ++i) order_[i] = static_cast<std::int32_t>(i);
  nodes_.reserve(2 * boxes_.size());
  root_ = build(0, static_cast<std::int32_t>(boxes_.size()));
}

std::int32_t BoxTree::build(std::int32_t begin, std::int32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  const int n = domain_.dim();
  node.lo = boxes_[static_cast<std::size_t>(order_[static_cast<std::size_t>(begin)])].lo;
  node.hi = boxes_[static_cast<std::size_t>(order_[static_cast<std::size_t>(begin)])].hi;
  for (std::int32_t i = begin + 1; i < end; ++i) {
    const BoxRec& b = boxes_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
    node.lo = node.lo.cwiseMin(b.lo);
    node.hi = node.hi.cwiseMax(b.hi);
  }
  if (end - begin > 8) {
    // Median split along the widest axis of the box centers.
    int axis = 0;
    double widest = -1.0;
    for (int d = 0; d < n; ++d) {
      const double w = node.hi[d] - node.lo[d];
      if (w > widest) {
        widest = w;
        axis = d;
      }
    }
    const std::int32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::int32_t a, std::int32_t b) {
                       return boxes_[static_cast<std::size_t>(a)].lo[axis] +
                                  boxes_[static_cast<std::size_t>(a)].hi[axis] <
                              boxes_[static_cast<std::size_t>(b)].lo[axis] +
                                  boxes_[static_cast<std::size_t>(b)].hi[axis];
                     });
    const auto self = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[static_cast<std::size_t>(self)].left = left;
    nodes_[static_cast<std::size_t>(self)].right = right;
    return self;
  }
  const auto self = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  return self;
}

double BoxTree::min_distance(VecRef x) const {
  if (boxes_.empty()) return kInf;
  double best = kInf;
  // Depth-first with lower-bound pruning on the subtree bounds.
  std::int32_t stack[64];
  int top = 0;
  stack[top++] = root_;
  while (top > 0) {
    const Node& node = nodes_[static_cast<std::size_t>(stack[--top])];
    if (box_distance(x, node.lo, node.hi, domain_) >= best) continue;
    if (node.left < 0) {
      for (std::int32_t i = node.begin; i < node.end; ++i) {
        const BoxRec& b = boxes_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
        const double d = box_distance(x, b.lo, b.hi, domain_);
        if (d < best) best = d;
      }
      if (best == 0.0) return 0.0;
      continue;
    }
    // Visit the nearer child first.
    const Node& l = nodes_[static_cast<std::size_t>(node.left)];
    const Node& r = nodes_[static_cast<std::size_t>(node.right)];
    const double dl = box_distance(x, l.lo, l.hi, domain_);
    const double dr = box_distance(x, r.lo, r.hi, domain_);
    if (dl <= dr) {
      if (dr < best) stack[top++] = node.right;
      if (dl < best) stack[top++] = node.left;
    } else {
      if (dl < best) stack[top++] = node.left;
      if (dr < best) stack[top++] = node.right;
    }
  }
  return best;
}

bool BoxTree::contains(VecRef x) const { return min_distance(x) == 0.0; }

// ---------------------------------------------------------------------------
// UnionSdf
// ---------------------------------------------------------------------------

UnionSdf::UnionSdf(std::vector<BoxRec> members, std::vector<BoxRec> complement,
                   const Domain& domain, bool boundary_faces)
    : domain_(domain), boundary_faces_(boundary_faces), members_empty_(members.empty()) {
  members_ = BoxTree(std::move(members), domain);
  complement_ = BoxTree(std::move(complement), domain);
}

double UnionSdf::operator()(VecRef x) const {
  if (members_empty_) return kInf;
  const double outside = members_.min_distance(x);
  if (outside > 0.0) return outside;
  double depth = boundary_faces_ ? face_depth(x, domain_) : kInf;
  depth = std::min(depth, complement_.min_distance(x));
  return -depth;
}

// ---------------------------------------------------------------------------
// Partition
// ---------------------------------------------------------------------------

std::size_t CellKeyHash::operator()(const CellKey& k) const {
  std::uint64_t h = static_cast<std::uint64_t>(k.depth) * 0x9e3779b97f4a7c15ULL;
  for (int d = 0; d < kMaxDim; ++d) h = splitmix64(h ^ static_cast<std::uint64_t>(k.g[d]));
  return static_cast<std::size_t>(h);
}

Partition::Partition(const Domain& domain, double root_width)
    : domain_(domain), root_width_(root_width) {
  domain_.validate();
  if (!(root_width > 0.0)) throw std::invalid_argument("partition: root width must be positive");
  if (domain.dim() > kMaxDim) throw std::invalid_argument("partition: dimension too large");
  for (int d = 0; d < domain_.dim(); ++d) {
    const double ratio = domain_.extent(d) / root_width_;
    const auto count = static_cast<std::int64_t>(std::llround(ratio));
    if (count < 1 || std::abs(ratio - static_cast<double>(count)) > 1e-9)
      throw std::invalid_argument(
          "partition: root width must divide every domain extent exactly");
    root_counts_[d] = count;
  }

  // Root cells in row-major order; the periodic seam coincides with cell faces.
  std::array<std::int64_t, kMaxDim> it{};
  const int n = domain_.dim();
  while (true) {
    CellKey key;
    key.depth = 0;
    for (int d = 0; d < n; ++d) key.g[d] = it[d];
    insert_leaf(key, next_id_++, CellLabel::Pending, 0);
    int d = n - 1;
    while (d >= 0) {
      if (++it[d] < root_counts_[d]) break;
      it[d] = 0;
      --d;
    }
    if (d < 0) break;
  }
}

Cell Partition::make_cell(const CellKey& key, std::int64_t id) const {
  Cell c;
  c.id = id;
  const int n = domain_.dim();
  const double w = cell_width(key.depth);
  c.radius = 0.5 * w;
  c.center.resize(n);
  for (int d = 0; d < n; ++d) c.center[d] = domain_.lower[d] + (key.g[d] + 0.5) * w;
  return c;
}

void Partition::insert_leaf(const CellKey& key, std::int64_t id, CellLabel label, int stage) {
  CellRec rec;
  rec.cell = make_cell(key, id);
  rec.cell.label = label;
  rec.key = key;
  rec.label_stage = stage;
  index_[id] = recs_.size();
  leaf_map_[key] = id;
  recs_.push_back(std::move(rec));
  ++live_count_;
  max_depth_ = std::max(max_depth_, static_cast<int>(key.depth));
}

Partition Partition::from_cells(const Domain& domain, double root_width,
                                const std::vector<Cell>& cells) {
  Partition p(domain, root_width);
  // Clear the root seeding and re-insert the given leaves directly.
  p.recs_.clear();
  p.index_.clear();
  p.leaf_map_.clear();
  p.next_id_ = 0;
  p.live_count_ = 0;
  p.max_depth_ = 0;
  for (const Cell& c : cells) {
    CellKey key;
    const double depth_f = std::log(root_width / (2.0 * c.radius)) / std::log(3.0);
    const auto depth = static_cast<std::int64_t>(std::llround(depth_f));
    if (depth < 0 || std::abs(depth_f - static_cast<double>(depth)) > 1e-6)
      throw std::invalid_argument("from_cells: cell radius off the triadic ladder");
    key.depth = static_cast<std::int8_t>(depth);
    const double w = root_width / std::pow(3.0, static_cast<double>(depth));
    for (int d = 0; d < domain.dim(); ++d) {
      const double g_f = (c.center[d] - domain.lower[d]) / w - 0.5;
      key.g[d] = static_cast<std::int64_t>(std::llround(g_f));
      if (std::abs(g_f - static_cast<double>(key.g[d])) > 1e-6)
        throw std::invalid_argument("from_cells: cell center off the lattice");
    }
    CellRec rec;
    rec.cell = c;
    rec.key = key;
    rec.label_stage = 0;
    p.index_[c.id] = p.recs_.size();
    p.leaf_map_[key] = c.id;
    p.recs_.push_back(std::move(rec));
    ++p.live_count_;
    p.max_depth_ = std::max(p.max_depth_, static_cast<int>(key.depth));
    p.next_id_ = std::max(p.next_id_, c.id + 1);
  }
  return p;
}

void Partition::set_label(std::int64_t id, CellLabel label, int stage) {
  CellRec& r = recs_.at(index_.at(id));
  r.cell.label = label;
  r.label_stage = stage;
}

void Partition::set_label_stage(std::int64_t id, int stage) {
  recs_.at(index_.at(id)).label_stage = stage;
}

std::vector<std::int64_t> Partition::split(std::int64_t id) {
  const CellRec r = recs_.at(index_.at(id));  // copy: recs_ may reallocate below
  const int n = domain_.dim();

  // Remove the parent from the live set.
  leaf_map_.erase(r.key);
  recs_.at(index_.at(id)).alive = false;
  --live_count_;

  const long total = static_cast<long>(std::llround(std::pow(3.0, n)));
  std::vector<std::int64_t> child_ids;
  child_ids.reserve(static_cast<std::size_t>(total));
  std::array<std::int64_t, kMaxDim> base{};
  for (int d = 0; d < n; ++d) base[d] = 3 * r.key.g[d];
  for (long idx = 0; idx < total; ++idx) {
    CellKey key;
    key.depth = static_cast<std::int8_t>(r.key.depth + 1);
    long rem = idx;
    for (int d = 0; d < n; ++d) {
      key.g[d] = base[d] + rem % 3;
      rem /= 3;
    }
    const std::int64_t cid = next_id_++;
    insert_leaf(key, cid, CellLabel::Pending, 0);
    child_ids.push_back(cid);
  }
  return child_ids;
}

std::int64_t Partition::locate(VecRef x) const {
  Vec q = x;
  domain_.wrap(q);
  const int n = domain_.dim();
  for (int depth = 0; depth <= max_depth_; ++depth) {
    const double w = cell_width(depth);
    CellKey key;
    key.depth = static_cast<std::int8_t>(depth);
    bool ok = true;
    for (int d = 0; d < n; ++d) {
      auto g = static_cast<std::int64_t>(std::floor((q[d] - domain_.lower[d]) / w));
      const std::int64_t count = root_counts_[d] * static_cast<std::int64_t>(
                                                       std::llround(std::pow(3.0, depth)));
      if (g < 0 || g >= count) {
        if (g == count && !domain_.is_periodic(d)) {
          g = count - 1;  // upper domain face belongs to the last cell
        } else {
          ok = false;
          break;
        }
      }
      key.g[d] = g;
    }
    if (!ok) continue;
    const auto it = leaf_map_.find(key);
    if (it != leaf_map_.end()) return it->second;
  }
  return -1;
}

std::vector<std::int64_t> Partition::live_ids() const {
  std::vector<std::int64_t> out;
  out.reserve(live_count_);
  for (const CellRec& r : recs_)
    if (r.alive) out.push_back(r.cell.id);
  return out;
}

std::vector<std::int64_t> Partition::ids_with_label(CellLabel label) const {
  std::vector<std::int64_t> out;
  for (const CellRec& r : recs_)
    if (r.alive && r.cell.label == label) out.push_back(r.cell.id);
  return out;
}

std::vector<Cell> Partition::cells_with_label(CellLabel label) const {
  std::vector<Cell> out;
  for (const CellRec& r : recs_)
    if (r.alive && r.cell.label == label) out.push_back(r.cell);
  return out;
}

double Partition::volume_with_label(CellLabel label) const {
  return rcbf::volume(cells_with_label(label), domain_);
}

BoxRec Partition::box(std::int64_t id) const {
  const Cell& c = cell(id);
  BoxRec b;
  b.lo = c.center.array() - c.radius;
  b.hi = c.center.array() + c.radius;
  return b;
}

std::vector<BoxRec> Partition::boxes_with_label(CellLabel label) const {
  std::vector<BoxRec> out;
  for (const CellRec& r : recs_)
    if (r.alive && r.cell.label == label) out.push_back(box(r.cell.id));
  return out;
}

double Partition::total_volume() const {
  std::vector<Cell> all;
  all.reserve(live_count_);
  for (const CellRec& r : recs_)
    if (r.alive) all.push_back(r.cell);
  return rcbf::volume(all, domain_);
}

}  // namespace rcbf
