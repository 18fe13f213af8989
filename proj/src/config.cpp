#include "rcbf/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace rcbf {

namespace {

Vec vec_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("config: expected an array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Json vec_to_json(const Vec& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

}  // namespace

AnalyticSetPtr make_unsafe_set(const Json& doc) {
  const std::string type = doc.value("type", "");
  if (type == "box") {
    return std::make_shared<BoxSet>(vec_from_json(doc.at("lower")),
                                    vec_from_json(doc.at("upper")));
  }
  if (type == "ball") {
    return std::make_shared<BallSet>(vec_from_json(doc.at("center")),
                                     doc.at("radius").get<double>());
  }
  if (type == "cylinder") {
    Vec center2 = Vec::Zero(2);
    if (doc.contains("center")) center2 = vec_from_json(doc.at("center"));
    return std::make_shared<CylinderSet>(doc.value("axis", 2), doc.at("radius").get<double>(),
                                         center2);
  }
  if (type == "union") {
    std::vector<AnalyticSetPtr> members;
    for (const auto& m : doc.at("members")) members.push_back(make_unsafe_set(m));
    return std::make_shared<UnionShape>(std::move(members));
  }
  throw std::invalid_argument("config: unknown unsafe-set type '" + type + "'");
}

VectorFieldPtr make_system(const std::string& name, const Json& params, const BoxRec& bound_box,
                           double* speed_out) {
  if (name == "dubins3d") {
    const double v = params.value("v", 5.0);
    if (speed_out) *speed_out = v;
    return std::make_shared<Dubins3d>(v, bound_box);
  }
  if (name.rfind("integrator", 0) == 0) {
    int n = params.value("n", 0);
    if (n == 0 && name.size() > 11 && name.back() == 'd')
      n = std::stoi(name.substr(10, name.size() - 11));
    if (n == 0) n = 1;
    if (speed_out) *speed_out = 0.0;
    return std::make_shared<SingleIntegrator>(n);
  }
  throw std::invalid_argument("config: unknown system name '" + name + "'");
}

RunConfig parse_config(const Json& doc) {
  RunConfig cfg;

  const Json& sys = doc.at("system");
  cfg.system_name = sys.value("name", "");
  if (cfg.system_name.empty()) throw std::invalid_argument("config: missing system name");
  cfg.system_params = sys.value("params", Json::object());

  const Json& dom = doc.at("domain");
  cfg.domain.lower = vec_from_json(dom.at("lower"));
  cfg.domain.upper = vec_from_json(dom.at("upper"));
  cfg.domain.periodic.assign(static_cast<std::size_t>(cfg.domain.dim()), 0);
  if (dom.contains("periodic")) {
    const auto& p = dom.at("periodic");
    if (p.size() != static_cast<std::size_t>(cfg.domain.dim()))
      throw std::invalid_argument("config: periodic flag count mismatch");
    for (std::size_t d = 0; d < p.size(); ++d) cfg.domain.periodic[d] = p[d].get<bool>() ? 1 : 0;
  }
  cfg.domain.validate();
  if (!dom.contains("root_cell_width"))
    throw std::invalid_argument("config: domain.root_cell_width is required");
  cfg.root_width = dom.at("root_cell_width").get<double>();

  cfg.unsafe_json = doc.at("unsafe_set");
  cfg.unsafe_set = make_unsafe_set(cfg.unsafe_json);

  const Json par = doc.value("params", Json::object());
  cfg.params.tau = par.value("tau", 1.0);
  cfg.params.alpha = par.value("alpha", 0.05);
  cfg.params.beta = par.value("beta", 0.05);
  cfg.params.dt = par.value("dt", cfg.params.tau / 100.0);

  const Json ver = doc.value("verifier", Json::object());
  cfg.verifier.r_min = ver.value("r_min", 0.1);
  cfg.verifier.n_s = ver.value("n_s", 100);
  cfg.verifier.n_seg = ver.value("n_seg", 5);
  cfg.verifier.seed = doc.value("seed", std::uint64_t{0});
  cfg.verifier.max_stage3_iters = ver.value("max_stage3_iters", 50);
  cfg.verifier.workers = ver.value("workers", 1);
  cfg.verifier.boundary_neutral = ver.value("boundary_neutral", false);

  // Escape box: the domain padded on non-periodic dimensions. Trajectories
  // that leave it are truncated and fail every safe-side condition.
  cfg.escape_pad = ver.value("escape_pad", -1.0);
  cfg.escape_box.lo = cfg.domain.lower;
  cfg.escape_box.hi = cfg.domain.upper;
  for (int d = 0; d < cfg.domain.dim(); ++d) {
    if (cfg.domain.is_periodic(d)) continue;
    const double pad = cfg.escape_pad >= 0.0 ? cfg.escape_pad : 0.5 * cfg.domain.extent(d);
    cfg.escape_box.lo[d] -= pad;
    cfg.escape_box.hi[d] += pad;
  }

  cfg.field = make_system(cfg.system_name, cfg.system_params, cfg.escape_box, &cfg.system_speed);
  if (cfg.field->state_dim() != cfg.domain.dim())
    throw std::invalid_argument("config: system dimension does not match the domain");

  // Bounds: explicit config wins, then the system's analytic values, then a
  // sampled (non-certified) estimate.
  if (par.contains("L") && !par.at("L").is_null()) {
    cfg.params.L = par.at("L").get<double>();
    cfg.params.M = par.value("M", cfg.field->velocity());
    cfg.lipschitz_source = "config";
  } else if (std::dynamic_pointer_cast<const Dubins3d>(cfg.field) ||
             std::dynamic_pointer_cast<const SingleIntegrator>(cfg.field)) {
    cfg.params.L = cfg.field->lipschitz();
    cfg.params.M = cfg.field->velocity();
    cfg.lipschitz_source = "analytic";
  } else {
    const auto est = estimate_lipschitz(*cfg.field, cfg.domain, 20000, cfg.verifier.seed);
    cfg.params.L = est.L;
    cfg.params.M = est.M;
    cfg.lipschitz_source = "estimated(non-certified)";
  }
  cfg.params.eps_int = par.value("eps_int", RcbfParams::default_eps_int(cfg.params.L, cfg.params.tau));

  const Json orc = doc.value("oracle", Json::object());
  if (orc.contains("grid")) {
    for (const auto& g : orc.at("grid")) cfg.oracle.grid.push_back(g.get<int>());
  } else {
    cfg.oracle.grid.assign(static_cast<std::size_t>(cfg.domain.dim()), 61);
  }
  cfg.oracle.n_controls = orc.value("n_controls", 5);
  cfg.oracle.dt = orc.value("dt", 0.01);

  cfg.output_dir = doc.value("output_dir", "out");

  cfg.params.validate();
  cfg.verifier.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
  }
  return parse_config(doc);
}

Json RunConfig::resolved() const {
  Json doc;
  doc["system"] = {{"name", system_name}, {"params", system_params}};
  if (system_name == "dubins3d") doc["system"]["params"]["v"] = system_speed;
  Json dom;
  dom["lower"] = vec_to_json(domain.lower);
  dom["upper"] = vec_to_json(domain.upper);
  Json per = Json::array();
  for (int d = 0; d < domain.dim(); ++d) per.push_back(domain.is_periodic(d));
  dom["periodic"] = per;
  dom["root_cell_width"] = root_width;
  doc["domain"] = dom;
  doc["unsafe_set"] = unsafe_json;
  doc["params"] = {{"tau", params.tau},   {"alpha", params.alpha}, {"beta", params.beta},
                   {"dt", params.dt},     {"L", params.L},         {"M", params.M},
                   {"eps_int", params.eps_int}};
  doc["lipschitz_source"] = lipschitz_source;
  // The worker count is execution infrastructure, not a result-determining
  // parameter (results are worker-invariant); it is reported in reports.json.
  doc["verifier"] = {{"r_min", verifier.r_min},
                     {"n_s", verifier.n_s},
                     {"n_seg", verifier.n_seg},
                     {"max_stage3_iters", verifier.max_stage3_iters},
                     {"boundary_neutral", verifier.boundary_neutral},
                     {"escape_pad", escape_pad}};
  doc["escape_box"] = {{"lower", vec_to_json(escape_box.lo)}, {"upper", vec_to_json(escape_box.hi)}};
  Json orc;
  orc["grid"] = oracle.grid;
  orc["n_controls"] = oracle.n_controls;
  orc["dt"] = oracle.dt;
  doc["oracle"] = orc;
  doc["seed"] = verifier.seed;
  doc["output_dir"] = output_dir;
  return doc;
}

}  // namespace rcbf
