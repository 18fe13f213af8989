#pragma once

#include "rcbf/conditions.hpp"
#include "rcbf/dynamics.hpp"
#include "rcbf/geometry.hpp"
#include "rcbf/shapes.hpp"
#include "rcbf/verifier.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>

namespace rcbf {

using Json = nlohmann::json;

struct OracleConfig {
  std::vector<int> grid;
  int n_controls = 5;
  double dt = 0.01;
};

// Fully resolved run configuration. Parsing materializes every default so
// outputs are self-describing; `resolved()` returns the expanded document.
struct RunConfig {
  std::string system_name;
  Json system_params;

  Domain domain;
  double root_width = 0.0;

  Json unsafe_json;
  AnalyticSetPtr unsafe_set;

  RcbfParams params;
  VerifierConfig verifier;
  OracleConfig oracle;

  BoxRec escape_box;
  double escape_pad = -1.0;  // <0: auto (half extent per non-periodic dim)

  std::string output_dir = "out";

  // Provenance flags for reports.
  std::string lipschitz_source;  // "config", "analytic", "estimated(non-certified)"
  double system_speed = 0.0;     // dubins v, when applicable

  VectorFieldPtr field;

  Json resolved() const;
};

// Parses a config document; builds the system, unsafe set, bounds and
// escape box. Overrides (seed/workers/stage3) may be layered by the caller
// before use. Throws std::invalid_argument with a descriptive message.
RunConfig parse_config(const Json& doc);
RunConfig load_config(const std::string& path);

// Registry used by parse_config: "dubins3d" (param v) and
// "integrator"/"integratorNd" (param n) are built in.
VectorFieldPtr make_system(const std::string& name, const Json& params, const BoxRec& bound_box,
                           double* speed_out);

AnalyticSetPtr make_unsafe_set(const Json& doc);

}  // namespace rcbf
