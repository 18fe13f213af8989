#pragma once

#include "rcbf/dynamics.hpp"
#include "rcbf/geometry.hpp"
#include "rcbf/shapes.hpp"

#include <string>
#include <vector>

namespace rcbf {

// Dense-grid value field: V(x) <= 0 marks the brute-force estimate of the
// backward reachable tube. Non-periodic dimensions carry `counts` nodes
// including both endpoints; periodic dimensions carry `counts` nodes over
// [lower, upper) with wrap-around interpolation.
struct GridValueField {
  Domain domain;
  std::vector<int> counts;
  double tau = 0.0;
  double dt = 0.0;
  int n_controls = 0;
  Eigen::ArrayXd values;  // row-major over the node lattice

  int dim() const { return domain.dim(); }
  std::size_t node_count() const;
  double spacing(int d) const;
  double node_coord(int d, int i) const;
  std::vector<double> node_point(std::size_t flat) const;

  // Multilinear interpolation; +inf when x leaves the domain in a
  // non-periodic dimension (escape policy).
  double interpolate(VecRef x) const;

  std::vector<std::size_t> brt_nodes() const;  // flat indices with V <= 0
  double brt_volume() const;                   // node count x node volume
};

// Discrete-time dynamic-programming tube estimate:
//   V_{k+1}(x) = min( l(x), max_u V_k(x + dt F(x, u)) ),  V_0 = l = sd(., X_u),
// run for tau/dt steps on the node lattice with n_controls^m gridded
// controls and multilinear interpolation. Leaving the domain scores +inf
// (escape is possible), so boundary states revert to their terminal value.
GridValueField brute_force_brt(const VectorField& field, const AnalyticSet& unsafe_set,
                               const Domain& domain, double tau, std::vector<int> grid_res,
                               int n_controls, double dt);

// Fraction of oracle tube nodes lying in unsafe-labeled cells of the
// partition. Returns -1 when the oracle tube is empty (undefined).
double containment_fraction(const Partition& partition, const GridValueField& oracle);

// Normalized volume gap (V_unsafe - V_tube) / V_tube. Throws when the
// oracle tube volume is zero.
double volume_gap(const Partition& partition, const GridValueField& oracle);

// Flat binary persistence (header: dim, counts, bounds, periodic flags,
// tau, dt, n_controls as 64-bit little-endian values; payload: row-major
// 64-bit node values). Round-trips bit-exactly.
void save_grid(const GridValueField& grid, const std::string& path);
GridValueField load_grid(const std::string& path);

}  // namespace rcbf
