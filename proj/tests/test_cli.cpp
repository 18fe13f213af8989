#include "rcbf/config.hpp"
#include "rcbf/io.hpp"
#include "rcbf/oracle.hpp"
#include "rcbf/verifier.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rcbf;
namespace fs = std::filesystem;

namespace {

Json integrator_config(const std::string& out_dir, double r_min = 0.01) {
  Json doc;
  doc["system"] = {{"name", "integrator1d"}, {"params", Json::object()}};
  doc["domain"] = {{"lower", {-1.0}}, {"upper", {1.0}}, {"periodic", {false}},
                   {"root_cell_width", 2.0}};
  doc["unsafe_set"] = {{"type", "box"}, {"lower", {-0.2}}, {"upper", {0.2}}};
  doc["params"] = {{"tau", 1.0}, {"alpha", 0.5}, {"beta", 0.5}, {"dt", 0.01}};
  doc["verifier"] = {{"r_min", r_min}, {"n_s", 16}, {"n_seg", 5}};
  doc["oracle"] = {{"grid", {401}}, {"n_controls", 5}, {"dt", 0.01}};
  doc["seed"] = 12;
  doc["output_dir"] = out_dir;
  return doc;
}

fs::path temp_dir(const std::string& tag) {
  const auto dir = fs::temp_directory_path() / ("rcbf_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_config(const Json& doc, const fs::path& dir, const std::string& name) {
  const auto path = dir / name;
  std::ofstream out(path);
  out << doc.dump(2);
  return path.string();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RCBF_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config: missing system name exits 2 with an error JSON") {
  const auto dir = temp_dir("badcfg");
  Json doc = integrator_config((dir / "out").string());
  doc["system"].erase("name");
  const auto cfg = write_config(doc, dir, "bad.json");
  CHECK(run_cli("verify --config " + cfg) == 2);

  // The error payload is machine-readable JSON on stdout.
  const std::string out_path = (dir / "stdout.txt").string();
  std::system((std::string(RCBF_CLI) + " verify --config " + cfg + " > " + out_path).c_str());
  const Json err = Json::parse(slurp(out_path));
  CHECK(err.contains("error"));
  CHECK(err["error"].contains("message"));
  fs::remove_all(dir);
}

TEST_CASE("verify: writes the three artifacts; unsafe volume in the derived band") {
  const auto dir = temp_dir("verify");
  const auto out = dir / "out";
  const auto cfg = write_config(integrator_config(out.string()), dir, "run.json");
  REQUIRE(run_cli("verify --config " + cfg) == 0);
  CHECK(fs::exists(out / "cells.json"));
  CHECK(fs::exists(out / "certificates.json"));
  CHECK(fs::exists(out / "reports.json"));

  // Analytic tube volume is 0.4; the floor width (triadic ladder from root
  // radius 1 stopping at r_min = 0.01) bounds the over-approximation: one
  // straddle cell plus one guard layer per side.
  const auto loaded = load_cells((out / "cells.json").string());
  const double v_unsafe = loaded.partition.volume_with_label(CellLabel::Unsafe);
  const double floor_w = 2.0 / 81.0;  // 0.0247
  CHECK(v_unsafe >= 0.4);
  CHECK(v_unsafe <= 0.4 + 4.0 * floor_w + 1e-9);
  fs::remove_all(dir);
}

TEST_CASE("verify: rerunning the same config is byte-identical") {
  const auto dir = temp_dir("determinism");
  const auto out = dir / "out";
  const auto cfg = write_config(integrator_config(out.string()), dir, "run.json");
  REQUIRE(run_cli("verify --config " + cfg) == 0);
  const std::string cells_first = slurp(out / "cells.json");
  const std::string certs_first = slurp(out / "certificates.json");
  REQUIRE(run_cli("verify --config " + cfg) == 0);
  CHECK(slurp(out / "cells.json") == cells_first);
  CHECK(slurp(out / "certificates.json") == certs_first);
  fs::remove_all(dir);
}

TEST_CASE("oracle: artifacts round-trip and tau=0 equals the unsafe set") {
  const auto dir = temp_dir("oracle");
  const auto out = dir / "out";
  Json doc = integrator_config(out.string());
  doc["params"]["tau"] = 1.0;
  const auto cfg = write_config(doc, dir, "o.json");
  REQUIRE(run_cli("oracle --config " + cfg) == 0);
  REQUIRE(fs::exists(out / "oracle.bin"));
  REQUIRE(fs::exists(out / "oracle.json"));

  const auto grid = load_grid((out / "oracle.bin").string());
  CHECK(grid.tau == doctest::Approx(1.0));
  // 1D integrator: tube matches [-0.2, 0.2] within one grid spacing.
  const double spacing = grid.spacing(0);
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    const double x = grid.node_coord(0, static_cast<int>(i));
    const bool in_tube = grid.values[static_cast<Eigen::Index>(i)] <= 0.0;
    if (std::abs(x) <= 0.2 - spacing) CHECK(in_tube);
    if (std::abs(x) >= 0.2 + spacing) CHECK(!in_tube);
  }

  // Bit-exact persistence round-trip through a second save.
  save_grid(grid, (dir / "copy.bin").string());
  CHECK(slurp(out / "oracle.bin") == slurp(dir / "copy.bin"));
  fs::remove_all(dir);
}

TEST_CASE("compare: metrics.json with containment and gap; self-consistent values") {
  const auto dir = temp_dir("compare");
  const auto out = dir / "out";
  const auto cfg = write_config(integrator_config(out.string()), dir, "c.json");
  REQUIRE(run_cli("verify --config " + cfg) == 0);
  REQUIRE(run_cli("oracle --config " + cfg) == 0);
  REQUIRE(run_cli("compare " + (out / "cells.json").string() + " " +
                  (out / "oracle.bin").string() + " --out " + out.string()) == 0);
  const Json metrics = Json::parse(slurp(out / "metrics.json"));
  CHECK(metrics.at("containment_fraction").get<double>() == doctest::Approx(1.0));
  CHECK(metrics.at("volume_gap").get<double>() >= 0.0);
  CHECK(metrics.contains("volume_brt_oracle"));
  CHECK(metrics.contains("compare_wall_seconds"));
  fs::remove_all(dir);
}

TEST_CASE("compare: containment monotone across an r_min ladder sweep") {
  const auto dir = temp_dir("sweep");
  std::vector<double> fractions;
  for (const double r_min : {0.09, 0.03, 0.01}) {
    const auto out = dir / ("out_" + std::to_string(r_min));
    Json doc = integrator_config(out.string(), r_min);
    const auto cfg = write_config(doc, dir, "sweep.json");
    REQUIRE(run_cli("verify --config " + cfg) == 0);
    REQUIRE(run_cli("oracle --config " + cfg) == 0);
    REQUIRE(run_cli("compare " + (out / "cells.json").string() + " " +
                    (out / "oracle.bin").string() + " --out " + out.string()) == 0);
    const Json metrics = Json::parse(slurp(out / "metrics.json"));
    fractions.push_back(metrics.at("containment_fraction").get<double>());
  }
  // Refining r_min never drops coverage below full containment.
  for (const double f : fractions) CHECK(f == doctest::Approx(1.0));
  fs::remove_all(dir);
}

TEST_CASE("slice: raster agrees with direct cell lookups") {
  // A 3D config small enough for a fast end-to-end slice.
  const auto dir = temp_dir("slice");
  const auto out = dir / "out";
  Json doc;
  doc["system"] = {{"name", "dubins3d"}, {"params", {{"v", 0.5}}}};
  doc["domain"] = {{"lower", {-2.0 * M_PI, -2.0 * M_PI, 0.0}},
                   {"upper", {2.0 * M_PI, 2.0 * M_PI, 2.0 * M_PI}},
                   {"periodic", {false, false, true}},
                   {"root_cell_width", M_PI}};
  doc["unsafe_set"] = {{"type", "cylinder"}, {"axis", 2}, {"radius", 1.0}};
  doc["params"] = {{"tau", 0.5}, {"alpha", 5.0}, {"beta", 5.0}, {"dt", 0.01}};
  doc["verifier"] = {{"r_min", 0.37}, {"n_s", 24}, {"n_seg", 5}};
  doc["seed"] = 5;
  doc["output_dir"] = out.string();
  const auto cfg = write_config(doc, dir, "dub.json");
  REQUIRE(run_cli("verify --config " + cfg) == 0);

  const auto csv = (out / "slice.csv").string();
  REQUIRE(run_cli("slice " + (out / "cells.json").string() +
                  " --axis 2 --value 3.14159265358979 --resolution 41 --out-csv " + csv) == 0);

  const auto loaded = load_cells((out / "cells.json").string());
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y,label");
  int rows = 0, unsafe_rows = 0;
  double min_unsafe_abs = 1e9;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const double x = std::stod(line.substr(0, c1));
    const double y = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    const std::string label = line.substr(c2 + 1);
    Vec p(3);
    p << x, y, 3.14159265358979;
    const auto id = loaded.partition.locate(p);
    REQUIRE(id >= 0);
    CHECK(label == to_string(loaded.partition.cell(id).label));
    ++rows;
    if (label == "unsafe") {
      ++unsafe_rows;
      min_unsafe_abs = std::min(min_unsafe_abs, std::max(std::abs(x), std::abs(y)));
    }
  }
  CHECK(rows == 41 * 41);
  // The slice passes through the collision cylinder: an unsafe disk of
  // radius >= 1 must appear around the origin.
  CHECK(unsafe_rows > 0);
  Vec origin(3);
  origin << 0.0, 0.0, 3.14159265358979;
  const auto id0 = loaded.partition.locate(origin);
  CHECK(loaded.partition.cell(id0).label == CellLabel::Unsafe);
  fs::remove_all(dir);
}

TEST_CASE("slice of an all-safe partition is uniformly labeled") {
  Domain dom2;
  dom2.lower = Vec(3);
  dom2.upper = Vec(3);
  dom2.lower << -M_PI, -M_PI, 0.0;
  dom2.upper << M_PI, M_PI, 2.0 * M_PI;
  dom2.periodic = {0, 0, 1};
  Partition all_safe(dom2, M_PI);
  for (const auto id : all_safe.live_ids()) all_safe.set_label(id, CellLabel::Safe, 1);

  const auto dir = temp_dir("uniform_slice");
  const auto csv = (dir / "s.csv").string();
  export_slice(all_safe, 2, 1.0, 21, csv);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(line.substr(line.rfind(',') + 1) == "safe");
    ++rows;
  }
  CHECK(rows == 21 * 21);
  fs::remove_all(dir);
}

TEST_CASE("parse_config materializes defaults and analytic bounds") {
  Json doc = integrator_config("out");
  doc["params"].erase("dt");
  const RunConfig cfg = parse_config(doc);
  CHECK(cfg.params.dt == doctest::Approx(0.01));  // tau/100
  CHECK(cfg.params.L == doctest::Approx(0.0));    // analytic for the integrator
  CHECK(cfg.params.M == doctest::Approx(1.0));
  CHECK(cfg.lipschitz_source == "analytic");
  CHECK(cfg.params.eps_int == doctest::Approx(1e-6));
  const Json resolved = cfg.resolved();
  CHECK(resolved.at("params").at("L").get<double>() == 0.0);
  CHECK(resolved.at("verifier").at("n_s").get<int>() == 16);
}
