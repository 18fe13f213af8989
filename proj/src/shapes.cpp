#include "rcbf/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcbf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// BoxSet
// ---------------------------------------------------------------------------

BoxSet::BoxSet(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size()) throw std::invalid_argument("box: bound size mismatch");
  for (int d = 0; d < lo_.size(); ++d)
    if (!(lo_[d] < hi_[d])) throw std::invalid_argument("box: lo < hi required");
}

double BoxSet::signed_distance(VecRef x, const Domain& domain) const {
  const double outside = box_distance(x, lo_, hi_, domain);
  if (outside > 0.0) return outside;
  double depth = kInf;
  for (int d = 0; d < lo_.size(); ++d) {
    if (domain.is_periodic(d)) {
      const double c = 0.5 * (lo_[d] + hi_[d]);
      const double half = 0.5 * (hi_[d] - lo_[d]);
      depth = std::min(depth, half - std::abs(domain.delta(d, x[d], c)));
    } else {
      depth = std::min(depth, std::min(x[d] - lo_[d], hi_[d] - x[d]));
    }
  }
  return -std::max(depth, 0.0);
}

// ---------------------------------------------------------------------------
// Disk helper: inf-norm distance to {y : ||y||_2 <= R} in 2D.
//
// Outside, the distance is the smallest t such that the square of half-width
// t around the point touches the disk; the nearest square point to the
// origin is (max(a-t,0), max(b-t,0)). Inside, the depth is the largest t
// such that the square stays within the disk; the binding corner is
// (a+t, b+t).
// ---------------------------------------------------------------------------

double disk_signed_distance_inf(double dx, double dy, double radius) {
  double a = std::abs(dx);
  double b = std::abs(dy);
  if (a < b) std::swap(a, b);
  const double rho2 = a * a + b * b;
  const double R2 = radius * radius;
  if (rho2 > R2) {
    if (a - radius >= b) return a - radius;  // edge case: square face touches first
    const double disc = 2.0 * R2 - (a - b) * (a - b);
    return 0.5 * ((a + b) - std::sqrt(disc));
  }
  const double disc = 2.0 * R2 - (a - b) * (a - b);
  return -0.5 * (std::sqrt(disc) - (a + b));
}

// ---------------------------------------------------------------------------
// BallSet
// ---------------------------------------------------------------------------

BallSet::BallSet(Vec center, double radius) : center_(std::move(center)), radius_(radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("ball: radius must be positive");
}

double BallSet::signed_distance(VecRef x, const Domain& domain) const {
  const int n = static_cast<int>(center_.size());
  Vec a(n);
  double norm2 = 0.0;
  for (int d = 0; d < n; ++d) {
    a[d] = std::abs(domain.delta(d, x[d], center_[d]));
    norm2 += a[d] * a[d];
  }
  if (n == 2) return disk_signed_distance_inf(a[0], a[1], radius_);

  const double R2 = radius_ * radius_;
  if (norm2 <= R2) {
    // Farthest corner of the square [|a| +- t] has norm R: n t^2 + 2 sum(a) t + (|a|^2 - R^2) = 0.
    const double s = a.sum();
    const double t = (-s + std::sqrt(s * s - n * (norm2 - R2))) / n;
    return -t;
  }
  // Outside: smallest t with sum_d max(a_d - t, 0)^2 <= R^2, found by a
  // piecewise scan over the active set (a sorted descending).
  std::vector<double> s(a.data(), a.data() + n);
  std::sort(s.begin(), s.end(), std::greater<double>());
  for (int m = n; m >= 1; --m) {
    // Active coordinates are the m largest; t must lie between s[m] and
    // s[m-1] and satisfy sum_{i<m} (s_i - t)^2 = R^2.
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < m; ++i) {
      sum += s[i];
      sum2 += s[i] * s[i];
    }
    const double disc = sum * sum - m * (sum2 - R2);
    if (disc < 0.0) continue;
    const double t = (sum - std::sqrt(disc)) / m;
    const double lo_t = (m < n) ? s[m] : 0.0;
    if (t >= lo_t - 1e-15 && t <= s[m - 1] + 1e-15) return std::max(t, 0.0);
  }
  // Fallback (should not happen): distance bounded by the largest coordinate.
  return std::max(s[0] - radius_, 0.0);
}

// ---------------------------------------------------------------------------
// CylinderSet
// ---------------------------------------------------------------------------

CylinderSet::CylinderSet(int axis, double radius, Vec center2)
    : axis_(axis), radius_(radius), center2_(std::move(center2)) {
  if (!(radius > 0.0)) throw std::invalid_argument("cylinder: radius must be positive");
  if (center2_.size() == 0) center2_ = Vec::Zero(2);
  if (center2_.size() != 2) throw std::invalid_argument("cylinder: center must be 2D");
}

double CylinderSet::signed_distance(VecRef x, const Domain& domain) const {
  if (x.size() != 3) throw std::invalid_argument("cylinder: state dimension must be 3");
  double p[2];
  int k = 0;
  for (int d = 0; d < 3; ++d) {
    if (d == axis_) continue;
    p[k] = domain.delta(d, x[d], center2_[k]);
    ++k;
  }
  return disk_signed_distance_inf(p[0], p[1], radius_);
}

// ---------------------------------------------------------------------------
// UnionShape
// ---------------------------------------------------------------------------

UnionShape::UnionShape(std::vector<AnalyticSetPtr> members) : members_(std::move(members)) {}

double UnionShape::signed_distance(VecRef x, const Domain& domain) const {
  double best = kInf;
  for (const auto& m : members_) best = std::min(best, m->signed_distance(x, domain));
  return best;
}

}  // namespace rcbf
