#include "rcbf/config.hpp"
#include "rcbf/io.hpp"
#include "rcbf/oracle.hpp"
#include "rcbf/verifier.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using rcbf::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

int fail(int code, const std::string& kind, const std::string& message) {
  Json err;
  err["error"] = {{"type", kind}, {"message", message}};
  std::cout << err.dump(2) << std::endl;
  return code;
}

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> stage3_iters;
};

rcbf::RunConfig load_with_overrides(const CommonOpts& opts) {
  rcbf::RunConfig cfg = rcbf::load_config(opts.config_path);
  if (opts.seed) cfg.verifier.seed = *opts.seed;
  if (opts.workers) cfg.verifier.workers = *opts.workers;
  if (opts.stage3_iters) cfg.verifier.max_stage3_iters = *opts.stage3_iters;
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  cfg.verifier.validate();
  return cfg;
}

int run_verify(const CommonOpts& opts) {
  const rcbf::RunConfig cfg = load_with_overrides(opts);
  rcbf::Partition partition(cfg.domain, cfg.root_width);
  const rcbf::VerifyResult result = rcbf::verify_region(
      partition, *cfg.field, *cfg.unsafe_set, cfg.params, cfg.verifier, cfg.escape_box);

  const fs::path dir(cfg.output_dir);
  rcbf::write_cells(partition, cfg, (dir / "cells.json").string());
  rcbf::write_certificates(result.certificates, cfg, (dir / "certificates.json").string());
  rcbf::write_reports(result, partition, cfg, (dir / "reports.json").string());

  std::cout << "verify: " << partition.size() << " cells, safe volume "
            << partition.volume_with_label(rcbf::CellLabel::Safe) << ", unsafe volume "
            << partition.volume_with_label(rcbf::CellLabel::Unsafe) << ", "
            << result.wall_seconds << " s\n";
  return kExitOk;
}

int run_oracle(const CommonOpts& opts) {
  const rcbf::RunConfig cfg = load_with_overrides(opts);
  const rcbf::GridValueField grid =
      rcbf::brute_force_brt(*cfg.field, *cfg.unsafe_set, cfg.domain, cfg.params.tau,
                            cfg.oracle.grid, cfg.oracle.n_controls, cfg.oracle.dt);
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  rcbf::save_grid(grid, (dir / "oracle.bin").string());
  rcbf::write_oracle_sidecar(grid, cfg, (dir / "oracle.json").string());
  std::cout << "oracle: " << grid.brt_nodes().size() << " tube nodes, volume "
            << grid.brt_volume() << "\n";
  return kExitOk;
}

int run_compare(const std::string& cells_path, const std::string& oracle_path,
                const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  rcbf::LoadedCells loaded = rcbf::load_cells(cells_path);
  const rcbf::GridValueField grid = rcbf::load_grid(oracle_path);

  const rcbf::Domain& pd = loaded.partition.domain();
  if (pd.dim() != grid.dim()) throw std::invalid_argument("compare: dimension mismatch");
  for (int d = 0; d < pd.dim(); ++d) {
    if (std::abs(pd.lower[d] - grid.domain.lower[d]) > 1e-9 ||
        std::abs(pd.upper[d] - grid.domain.upper[d]) > 1e-9)
      throw std::invalid_argument("compare: partition and oracle domains differ");
  }

  const double fraction = rcbf::containment_fraction(loaded.partition, grid);
  Json metrics;
  metrics["config"] = loaded.config;
  metrics["containment_fraction"] = fraction;
  if (fraction < 0.0) metrics["containment_fraction_note"] = "oracle tube empty: undefined";
  metrics["volume_unsafe_cells"] =
      loaded.partition.volume_with_label(rcbf::CellLabel::Unsafe);
  metrics["volume_safe_cells"] = loaded.partition.volume_with_label(rcbf::CellLabel::Safe);
  metrics["volume_brt_oracle"] = grid.brt_volume();
  metrics["brt_nodes"] = grid.brt_nodes().size();
  if (grid.brt_volume() > 0.0)
    metrics["volume_gap"] = rcbf::volume_gap(loaded.partition, grid);
  metrics["compare_wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const fs::path out = fs::path(out_dir.empty() ? "." : out_dir) / "metrics.json";
  rcbf::write_metrics(metrics, out.string());
  std::cout << "compare: containment " << fraction << ", metrics at " << out.string() << "\n";
  return kExitOk;
}

int run_slice(const std::string& cells_path, int axis, double value, int resolution,
              const std::string& out_csv) {
  rcbf::LoadedCells loaded = rcbf::load_cells(cells_path);
  rcbf::export_slice(loaded.partition, axis, value, resolution, out_csv);
  std::cout << "slice: wrote " << out_csv << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe-set verification via recurrence conditions on adaptive cell partitions"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string cells_path, oracle_path, out_csv;
  int axis = 2;
  double value = 0.0;
  int resolution = 201;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "Run configuration JSON")->required();
    cmd->add_option("--out", opts.out_dir, "Output directory (overrides config)");
    cmd->add_option("--seed", opts.seed, "Seed override");
    cmd->add_option("--workers", opts.workers, "Worker thread count override");
    cmd->add_option("--stage3-iters", opts.stage3_iters, "Stage-3 iteration cap override");
  };

  CLI::App* verify = app.add_subcommand("verify", "Run the three-stage verification");
  add_common(verify);

  CLI::App* oracle = app.add_subcommand("oracle", "Compute the brute-force tube oracle");
  add_common(oracle);

  CLI::App* compare = app.add_subcommand("compare", "Compare cells.json against oracle.bin");
  compare->add_option("cells", cells_path, "cells.json path")->required();
  compare->add_option("oracle", oracle_path, "oracle.bin path")->required();
  compare->add_option("--out", opts.out_dir, "Output directory for metrics.json");

  CLI::App* slice = app.add_subcommand("slice", "Export a rasterized 2D label slice as CSV");
  slice->add_option("cells", cells_path, "cells.json path")->required();
  slice->add_option("--axis", axis, "Fixed axis index")->required();
  slice->add_option("--value", value, "Fixed axis coordinate")->required();
  slice->add_option("--resolution", resolution, "Raster points per free axis");
  slice->add_option("--out-csv", out_csv, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    Json err;
    err["error"] = {{"type", "cli"}, {"message", e.what()}};
    std::cout << err.dump(2) << std::endl;
    return kExitConfig;
  }

  try {
    if (verify->parsed()) return run_verify(opts);
    if (oracle->parsed()) return run_oracle(opts);
    if (compare->parsed()) return run_compare(cells_path, oracle_path, opts.out_dir);
    if (slice->parsed()) return run_slice(cells_path, axis, value, resolution, out_csv);
  } catch (const std::invalid_argument& e) {
    return fail(kExitConfig, "config", e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, "runtime", e.what());
  }
  return kExitOk;
}
