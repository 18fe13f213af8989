#include "rcbf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rcbf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::size_t GridValueField::node_count() const {
  std::size_t total = 1;
  for (const int c : counts) total *= static_cast<std::size_t>(c);
  return total;
}

double GridValueField::spacing(int d) const {
  const int c = counts[static_cast<std::size_t>(d)];
  if (domain.is_periodic(d)) return domain.extent(d) / c;
  return domain.extent(d) / (c - 1);
}

double GridValueField::node_coord(int d, int i) const {
  return domain.lower[d] + spacing(d) * i;
}

std::vector<double> GridValueField::node_point(std::size_t flat) const {
  const int n = dim();
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int d = n - 1; d >= 0; --d) {
    const auto c = static_cast<std::size_t>(counts[static_cast<std::size_t>(d)]);
    x[static_cast<std::size_t>(d)] = node_coord(d, static_cast<int>(flat % c));
    flat /= c;
  }
  return x;
}

double GridValueField::interpolate(VecRef x) const {
  const int n = dim();
  int base[kMaxDim];
  double frac[kMaxDim];
  for (int d = 0; d < n; ++d) {
    const double s = spacing(d);
    double y = x[d];
    if (domain.is_periodic(d)) {
      const double ext = domain.extent(d);
      y = std::fmod(y - domain.lower[d], ext);
      if (y < 0) y += ext;
      const double u = y / s;
      base[d] = static_cast<int>(std::floor(u));
      frac[d] = u - base[d];
    } else {
      if (y < domain.lower[d] || y > domain.upper[d]) return kInf;
      const double u = (y - domain.lower[d]) / s;
      const int c = counts[static_cast<std::size_t>(d)];
      base[d] = std::min(static_cast<int>(std::floor(u)), c - 2);
      frac[d] = u - base[d];
    }
  }
  double acc = 0.0;
  const int corners = 1 << n;
  for (int mask = 0; mask < corners; ++mask) {
    double w = 1.0;
    std::size_t flat = 0;
    for (int d = 0; d < n; ++d) {
      const int c = counts[static_cast<std::size_t>(d)];
      int idx = base[d] + ((mask >> d) & 1);
      if (domain.is_periodic(d)) idx %= c;
      w *= ((mask >> d) & 1) ? frac[d] : 1.0 - frac[d];
      flat = flat * static_cast<std::size_t>(c) + static_cast<std::size_t>(idx);
    }
    if (w != 0.0) acc += w * values[static_cast<Eigen::Index>(flat)];
  }
  return acc;
}

std::vector<std::size_t> GridValueField::brt_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < node_count(); ++i)
    if (values[static_cast<Eigen::Index>(i)] <= 0.0) out.push_back(i);
  return out;
}

double GridValueField::brt_volume() const {
  double node_vol = 1.0;
  for (int d = 0; d < dim(); ++d) node_vol *= spacing(d);
  return node_vol * static_cast<double>(brt_nodes().size());
}

GridValueField brute_force_brt(const VectorField& field, const AnalyticSet& unsafe_set,
                               const Domain& domain, double tau, std::vector<int> grid_res,
                               int n_controls, double dt) {
  domain.validate();
  const int n = domain.dim();
  if (static_cast<int>(grid_res.size()) != n)
    throw std::invalid_argument("oracle: grid resolution size mismatch");
  for (const int c : grid_res)
    if (c < 2) throw std::invalid_argument("oracle: need at least 2 nodes per dimension");
  if (n_controls < 1) throw std::invalid_argument("oracle: n_controls must be >= 1");

  GridValueField grid;
  grid.domain = domain;
  grid.counts = std::move(grid_res);
  grid.tau = tau;
  grid.dt = dt;
  grid.n_controls = n_controls;

  const std::size_t total = grid.node_count();
  grid.values.resize(static_cast<Eigen::Index>(total));

  // Terminal condition l(x) = sd(x, X_u).
  Vec x(n);
  for (std::size_t i = 0; i < total; ++i) {
    const auto pt = grid.node_point(i);
    for (int d = 0; d < n; ++d) x[d] = pt[static_cast<std::size_t>(d)];
    grid.values[static_cast<Eigen::Index>(i)] = unsafe_set.signed_distance(x, domain);
  }
  const Eigen::ArrayXd terminal = grid.values;

  if (tau <= 0.0) return grid;
  const auto steps = static_cast<int>(std::llround(tau / dt));
  if (steps < 1 || std::abs(steps * dt - tau) > 1e-9 * std::max(1.0, tau))
    throw std::invalid_argument("oracle: dt must divide tau");

  // Gridded controls: n_controls per dimension, extremes included.
  const ControlBox& ubox = field.control_box();
  const int m = ubox.dim();
  std::vector<Vec> controls;
  {
    std::vector<int> it(static_cast<std::size_t>(m), 0);
    while (true) {
      Vec u(m);
      for (int d = 0; d < m; ++d) {
        const double f =
            (n_controls == 1) ? 0.5
                              : static_cast<double>(it[static_cast<std::size_t>(d)]) /
                                    (n_controls - 1);
        u[d] = ubox.lo[d] + f * (ubox.hi[d] - ubox.lo[d]);
      }
      controls.push_back(std::move(u));
      int d = m - 1;
      while (d >= 0) {
        if (++it[static_cast<std::size_t>(d)] < n_controls) break;
        it[static_cast<std::size_t>(d)] = 0;
        --d;
      }
      if (d < 0) break;
    }
  }

  // Precompute successor points x + dt F(x, u) per node and control.
  Eigen::ArrayXd next_values(static_cast<Eigen::Index>(total));
  Vec dx(n);
  const std::size_t n_u = controls.size();
  Eigen::MatrixXd successors(n, static_cast<Eigen::Index>(total * n_u));
  {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < total; ++i) {
      const auto pt = grid.node_point(i);
      for (int d = 0; d < n; ++d) x[d] = pt[static_cast<std::size_t>(d)];
      for (const Vec& u : controls) {
        field.eval(x, u, dx);
        successors.col(static_cast<Eigen::Index>(idx++)) = x + dt * dx;
      }
    }
  }

  for (int k = 0; k < steps; ++k) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < total; ++i) {
      double best = -kInf;
      for (std::size_t c = 0; c < n_u; ++c) {
        const double v = grid.interpolate(successors.col(static_cast<Eigen::Index>(idx++)));
        if (v > best) best = v;
        if (best == kInf) {
          idx += n_u - c - 1;
          break;
        }
      }
      const double l = terminal[static_cast<Eigen::Index>(i)];
      next_values[static_cast<Eigen::Index>(i)] = std::min(l, best);
    }
    grid.values.swap(next_values);
  }
  return grid;
}

double containment_fraction(const Partition& partition, const GridValueField& oracle) {
  const auto nodes = oracle.brt_nodes();
  if (nodes.empty()) return -1.0;
  const int n = oracle.dim();
  Vec x(n);
  std::size_t inside = 0;
  for (const std::size_t flat : nodes) {
    const auto pt = oracle.node_point(flat);
    for (int d = 0; d < n; ++d) x[d] = pt[static_cast<std::size_t>(d)];
    const std::int64_t id = partition.locate(x);
    if (id >= 0 && partition.cell(id).label == CellLabel::Unsafe) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(nodes.size());
}

double volume_gap(const Partition& partition, const GridValueField& oracle) {
  const double v_brt = oracle.brt_volume();
  if (v_brt <= 0.0) throw std::invalid_argument("volume_gap: oracle tube volume is zero");
  const double v_unsafe = partition.volume_with_label(CellLabel::Unsafe);
  return (v_unsafe - v_brt) / v_brt;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

void write_f64(std::ofstream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(double));
}

double read_f64(std::ifstream& in) {
  double v = 0.0;
  in.read(reinterpret_cast<char*>(&v), sizeof(double));
  if (!in) throw std::runtime_error("oracle file truncated");
  return v;
}

}  // namespace

void save_grid(const GridValueField& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  const int n = grid.dim();
  write_f64(out, static_cast<double>(n));
  for (int d = 0; d < n; ++d) write_f64(out, static_cast<double>(grid.counts[d]));
  for (int d = 0; d < n; ++d) write_f64(out, grid.domain.lower[d]);
  for (int d = 0; d < n; ++d) write_f64(out, grid.domain.upper[d]);
  for (int d = 0; d < n; ++d) write_f64(out, grid.domain.is_periodic(d) ? 1.0 : 0.0);
  write_f64(out, grid.tau);
  write_f64(out, grid.dt);
  write_f64(out, static_cast<double>(grid.n_controls));
  out.write(reinterpret_cast<const char*>(grid.values.data()),
            static_cast<std::streamsize>(sizeof(double) * grid.node_count()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

GridValueField load_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  GridValueField grid;
  const int n = static_cast<int>(std::llround(read_f64(in)));
  if (n < 1 || n > kMaxDim) throw std::runtime_error("oracle file: bad dimension");
  grid.counts.resize(static_cast<std::size_t>(n));
  for (int d = 0; d < n; ++d)
    grid.counts[static_cast<std::size_t>(d)] = static_cast<int>(std::llround(read_f64(in)));
  grid.domain.lower.resize(n);
  grid.domain.upper.resize(n);
  grid.domain.periodic.assign(static_cast<std::size_t>(n), 0);
  for (int d = 0; d < n; ++d) grid.domain.lower[d] = read_f64(in);
  for (int d = 0; d < n; ++d) grid.domain.upper[d] = read_f64(in);
  for (int d = 0; d < n; ++d)
    grid.domain.periodic[static_cast<std::size_t>(d)] = read_f64(in) != 0.0 ? 1 : 0;
  grid.tau = read_f64(in);
  grid.dt = read_f64(in);
  grid.n_controls = static_cast<int>(std::llround(read_f64(in)));
  grid.values.resize(static_cast<Eigen::Index>(grid.node_count()));
  in.read(reinterpret_cast<char*>(grid.values.data()),
          static_cast<std::streamsize>(sizeof(double) * grid.node_count()));
  if (!in) throw std::runtime_error("oracle file truncated: " + path);
  return grid;
}

}  // namespace rcbf
