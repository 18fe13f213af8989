#pragma once

#include "rcbf/config.hpp"
#include "rcbf/oracle.hpp"
#include "rcbf/verifier.hpp"

#include <string>
#include <vector>

namespace rcbf {

// All artifact writes are atomic (write to a temp file, then rename) and
// emit UTF-8 JSON with sorted keys and shortest round-trip floats.

void write_json_atomic(const Json& doc, const std::string& path);
Json read_json(const std::string& path);

// cells.json: resolved config + the final cell list ({id, center, radius,
// label}, ordered by id) plus per-cell label stages for replay.
void write_cells(const Partition& partition, const RunConfig& cfg, const std::string& path);

struct LoadedCells {
  Json config;
  Partition partition;
};
LoadedCells load_cells(const std::string& path);

// certificates.json: {cell_id, stage, signal_seed, signal_segments}.
void write_certificates(const std::vector<Certificate>& certs, const RunConfig& cfg,
                        const std::string& path);
std::vector<Certificate> load_certificates(const std::string& path);

// reports.json: per-stage reports, totals, provenance.
void write_reports(const VerifyResult& result, const Partition& partition, const RunConfig& cfg,
                   const std::string& path);

// metrics.json written by the compare step.
void write_metrics(const Json& metrics, const std::string& path);

// oracle.json sidecar for oracle.bin.
void write_oracle_sidecar(const GridValueField& grid, const RunConfig& cfg,
                          const std::string& path);

// CSV raster of a 2D slice through the partition: axis `axis` fixed at
// `value`, remaining two dimensions rasterized at `resolution` points each.
// Rows are "x,y,label".
void export_slice(const Partition& partition, int axis, double value, int resolution,
                  const std::string& out_csv);

}  // namespace rcbf
