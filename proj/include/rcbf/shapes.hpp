#pragma once

#include "rcbf/geometry.hpp"

#include <memory>
#include <vector>

namespace rcbf {

// Analytic description of an unsafe region. signed_distance returns the
// exact inf-norm signed distance (negative strictly inside) and is valid
// for points outside the domain as well; periodic dimensions wrap.
class AnalyticSet {
 public:
  virtual ~AnalyticSet() = default;
  virtual double signed_distance(VecRef x, const Domain& domain) const = 0;
};

using AnalyticSetPtr = std::shared_ptr<const AnalyticSet>;

// Axis-aligned box [lo, hi].
class BoxSet final : public AnalyticSet {
 public:
  BoxSet(Vec lo, Vec hi);
  double signed_distance(VecRef x, const Domain& domain) const override;

 private:
  Vec lo_, hi_;
};

// Euclidean ball of radius R (inf-norm distance to a 2-norm ball).
class BallSet final : public AnalyticSet {
 public:
  BallSet(Vec center, double radius);
  double signed_distance(VecRef x, const Domain& domain) const override;

 private:
  Vec center_;
  double radius_;
};

// Infinite cylinder along coordinate `axis`: Euclidean disk of radius R in
// the two remaining dimensions (state dimension must be 3).
class CylinderSet final : public AnalyticSet {
 public:
  CylinderSet(int axis, double radius, Vec center2 = Vec());
  double signed_distance(VecRef x, const Domain& domain) const override;

 private:
  int axis_;
  double radius_;
  Vec center2_;
};

// Union of members: min of the member signed distances. Exact outside and
// for disjoint members; a sound under-estimate of inside depth when members
// overlap. Empty union has signed distance +inf.
class UnionShape final : public AnalyticSet {
 public:
  explicit UnionShape(std::vector<AnalyticSetPtr> members);
  double signed_distance(VecRef x, const Domain& domain) const override;

 private:
  std::vector<AnalyticSetPtr> members_;
};

// Inf-norm signed distance from a point to a Euclidean disk of radius R in
// 2 dimensions (helper shared by BallSet/CylinderSet; exposed for tests).
double disk_signed_distance_inf(double dx, double dy, double radius);

}  // namespace rcbf
