#include "rcbf/io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace rcbf {

namespace fs = std::filesystem;

void write_json_atomic(const Json& doc, const std::string& path) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return Json::parse(in);
}

namespace {

Json vec_to_json(const Vec& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vec vec_from_json(const Json& j) {
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace

void write_cells(const Partition& partition, const RunConfig& cfg, const std::string& path) {
  Json doc;
  doc["config"] = cfg.resolved();
  Json cells = Json::array();
  auto ids = partition.live_ids();
  std::sort(ids.begin(), ids.end());
  Json stages = Json::array();
  for (const auto id : ids) {
    const CellRec& r = partition.rec(id);
    Json c;
    c["id"] = r.cell.id;
    c["center"] = vec_to_json(r.cell.center);
    c["radius"] = r.cell.radius;
    c["label"] = to_string(r.cell.label);
    cells.push_back(std::move(c));
    stages.push_back(r.label_stage);
  }
  doc["cells"] = std::move(cells);
  doc["label_stages"] = std::move(stages);  // parallel to cells, by id order
  write_json_atomic(doc, path);
}

LoadedCells load_cells(const std::string& path) {
  const Json doc = read_json(path);
  const Json& cfg = doc.at("config");
  Domain domain;
  domain.lower = vec_from_json(cfg.at("domain").at("lower"));
  domain.upper = vec_from_json(cfg.at("domain").at("upper"));
  domain.periodic.assign(static_cast<std::size_t>(domain.dim()), 0);
  const auto& per = cfg.at("domain").at("periodic");
  for (std::size_t d = 0; d < per.size(); ++d) domain.periodic[d] = per[d].get<bool>() ? 1 : 0;
  const double root_width = cfg.at("domain").at("root_cell_width").get<double>();

  std::vector<Cell> cells;
  for (const auto& c : doc.at("cells")) {
    Cell cell;
    cell.id = c.at("id").get<std::int64_t>();
    cell.center = vec_from_json(c.at("center"));
    cell.radius = c.at("radius").get<double>();
    cell.label = label_from_string(c.at("label").get<std::string>());
    cells.push_back(std::move(cell));
  }
  LoadedCells out{doc.at("config"), Partition::from_cells(domain, root_width, cells)};
  if (doc.contains("label_stages")) {
    const auto& stages = doc.at("label_stages");
    for (std::size_t i = 0; i < cells.size() && i < stages.size(); ++i)
      out.partition.set_label_stage(cells[i].id, stages[i].get<int>());
  }
  return out;
}

void write_certificates(const std::vector<Certificate>& certs, const RunConfig& cfg,
                        const std::string& path) {
  Json doc;
  doc["config"] = cfg.resolved();
  Json arr = Json::array();
  std::vector<const Certificate*> ordered;
  ordered.reserve(certs.size());
  for (const auto& c : certs) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(), [](const Certificate* a, const Certificate* b) {
    return std::tie(a->cell_id, a->stage) < std::tie(b->cell_id, b->stage);
  });
  for (const Certificate* c : ordered) {
    Json j;
    j["cell_id"] = c->cell_id;
    j["stage"] = c->stage;
    j["signal_seed"] = c->signal_seed;
    j["signal_index"] = c->signal_index;
    Json segs = Json::array();
    for (Eigen::Index s = 0; s < c->signal_segments.cols(); ++s)
      segs.push_back(vec_to_json(c->signal_segments.col(s)));
    j["signal_segments"] = std::move(segs);
    arr.push_back(std::move(j));
  }
  doc["certificates"] = std::move(arr);
  write_json_atomic(doc, path);
}

std::vector<Certificate> load_certificates(const std::string& path) {
  const Json doc = read_json(path);
  std::vector<Certificate> out;
  for (const auto& j : doc.at("certificates")) {
    Certificate c;
    c.cell_id = j.at("cell_id").get<std::int64_t>();
    c.stage = j.at("stage").get<int>();
    c.signal_seed = j.at("signal_seed").get<std::uint64_t>();
    c.signal_index = j.at("signal_index").get<int>();
    const auto& segs = j.at("signal_segments");
    if (!segs.empty()) {
      const auto m = segs[0].size();
      c.signal_segments.resize(static_cast<Eigen::Index>(m),
                               static_cast<Eigen::Index>(segs.size()));
      for (std::size_t s = 0; s < segs.size(); ++s)
        c.signal_segments.col(static_cast<Eigen::Index>(s)) = vec_from_json(segs[s]);
    }
    out.push_back(std::move(c));
  }
  return out;
}

void write_reports(const VerifyResult& result, const Partition& partition, const RunConfig& cfg,
                   const std::string& path) {
  Json doc;
  doc["config"] = cfg.resolved();
  Json stages = Json::array();
  for (const auto& s : result.stages) {
    Json j;
    j["stage"] = s.stage;
    j["iterations"] = s.iterations;
    j["converged"] = s.converged;
    j["cells_examined"] = s.examined;
    j["cells_split"] = s.split;
    j["cells_safe"] = s.safe;
    j["cells_unsafe"] = s.unsafe;
    j["volume_safe"] = s.volume_safe;
    j["volume_unsafe"] = s.volume_unsafe;
    j["wall_seconds"] = s.wall_seconds;
    j["unsafe_ids"] = s.unsafe_ids;
    stages.push_back(std::move(j));
  }
  doc["stages"] = std::move(stages);
  doc["total_wall_seconds"] = result.wall_seconds;
  doc["workers"] = result.workers;
  doc["final_cells"] = partition.size();
  doc["final_volume_safe"] = partition.volume_with_label(CellLabel::Safe);
  doc["final_volume_unsafe"] = partition.volume_with_label(CellLabel::Unsafe);
  doc["lipschitz_source"] = cfg.lipschitz_source;
  write_json_atomic(doc, path);
}

void write_metrics(const Json& metrics, const std::string& path) {
  write_json_atomic(metrics, path);
}

void write_oracle_sidecar(const GridValueField& grid, const RunConfig& cfg,
                          const std::string& path) {
  Json doc;
  doc["config"] = cfg.resolved();
  doc["grid"] = grid.counts;
  doc["tau"] = grid.tau;
  doc["dt"] = grid.dt;
  doc["n_controls"] = grid.n_controls;
  doc["brt_nodes"] = grid.brt_nodes().size();
  doc["brt_volume"] = grid.brt_volume();
  write_json_atomic(doc, path);
}

void export_slice(const Partition& partition, int axis, double value, int resolution,
                  const std::string& out_csv) {
  const Domain& domain = partition.domain();
  const int n = domain.dim();
  if (n != 3) throw std::invalid_argument("slice: requires a 3D partition");
  if (axis < 0 || axis >= n) throw std::invalid_argument("slice: bad axis");
  if (resolution < 2) throw std::invalid_argument("slice: resolution must be >= 2");

  int free_dims[2];
  int k = 0;
  for (int d = 0; d < n; ++d)
    if (d != axis) free_dims[k++] = d;

  const fs::path target(out_csv);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for write: " + tmp.string());
    out << "x,y,label\n";
    Vec p(n);
    p[axis] = value;
    char buf[64];
    for (int i = 0; i < resolution; ++i) {
      const int d0 = free_dims[0];
      p[d0] = domain.lower[d0] + (domain.extent(d0) * i) / (resolution - 1);
      for (int j = 0; j < resolution; ++j) {
        const int d1 = free_dims[1];
        p[d1] = domain.lower[d1] + (domain.extent(d1) * j) / (resolution - 1);
        const std::int64_t id = partition.locate(p);
        const char* label = id >= 0 ? to_string(partition.cell(id).label) : "outside";
        auto [p0_end, ec0] = std::to_chars(buf, buf + sizeof(buf), p[d0]);
        out.write(buf, p0_end - buf);
        out.put(',');
        auto [p1_end, ec1] = std::to_chars(buf, buf + sizeof(buf), p[d1]);
        out.write(buf, p1_end - buf);
        out.put(',');
        out << label << '\n';
      }
    }
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace rcbf
