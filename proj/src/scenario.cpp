#include "hase/scenario.hpp"

#include "hase/error.hpp"
#include "hase/rng.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace hase {

namespace {

using nlohmann::json;

std::string join(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string join(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

Vector to_vector(const json& j, const std::string& ptr) {
  if (!j.is_array()) throw ScenarioError(ptr, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ScenarioError(join(ptr, i), "expected a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix to_matrix(const json& j, const std::string& ptr) {
  if (!j.is_array() || j.empty()) throw ScenarioError(ptr, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Matrix m(rows, rows);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = to_vector(j[r], join(ptr, r));
    if (row.size() != rows) throw ScenarioError(join(ptr, r), "matrix must be square");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

json from_vector(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json from_matrix(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(from_vector(m.row(r).transpose()));
  return a;
}

// Object reader that remembers which keys were consumed so unknown keys can
// be reported.
class Reader {
 public:
  Reader(const json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
    if (!j_.is_object()) throw ScenarioError(ptr_.empty() ? "/" : ptr_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const std::string& pointer() const { return ptr_; }
  std::string at(const std::string& key) const { return join(ptr_, key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ScenarioError(at(key), "required field is missing");
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    if (!has(key)) {
      if (!def) raw(key);
      used_.insert(key);
      return *def;
    }
    const json& v = raw(key);
    if (!v.is_number()) throw ScenarioError(at(key), "expected a number");
    return v.get<double>();
  }

  long long integer(const std::string& key, std::optional<long long> def = std::nullopt) {
    if (!has(key)) {
      if (!def) raw(key);
      used_.insert(key);
      return *def;
    }
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ScenarioError(at(key), "expected an integer");
    return v.get<long long>();
  }

  bool boolean(const std::string& key, bool def) {
    used_.insert(key);
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ScenarioError(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) {
    if (!has(key)) {
      if (!def) raw(key);
      used_.insert(key);
      return *def;
    }
    const json& v = raw(key);
    if (!v.is_string()) throw ScenarioError(at(key), "expected a string");
    return v.get<std::string>();
  }

  Vector vector(const std::string& key) { return to_vector(raw(key), at(key)); }
  Matrix matrix(const std::string& key) { return to_matrix(raw(key), at(key)); }

  Reader child(const std::string& key) { return Reader(raw(key), at(key)); }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ScenarioError(at(k), "unknown field");
  }

 private:
  const json& j_;
  std::string ptr_;
  std::set<std::string> used_;
};

int positive_int(Reader& r, const std::string& key, long long def, long long lo = 1) {
  const long long v = r.integer(key, def);
  if (v < lo || v > 1'000'000'000) throw ScenarioError(r.at(key), "value out of range");
  return static_cast<int>(v);
}

double positive(Reader& r, const std::string& key, double def) {
  const double v = r.number(key, def);
  if (!(v > 0.0)) throw ScenarioError(r.at(key), "must be positive");
  return v;
}

WorkspaceSpec parse_workspace(Reader r, int dim) {
  WorkspaceSpec w;
  w.type = r.string("type");
  if (w.type == "polar") {
    w.r_min = positive(r, "r_min", w.r_min);
    w.r_max = r.number("r_max", w.r_max);
    w.n_radii = positive_int(r, "n_radii", w.n_radii);
    w.step_deg = positive(r, "step_deg", w.step_deg);
    if (r.has("sector")) {
      const Vector s = r.vector("sector");
      if (s.size() != 2 || !(s(1) > s(0))) throw ScenarioError(r.at("sector"), "expected [start, end] in degrees");
      w.sector_start_deg = s(0);
      w.sector_end_deg = s(1);
    }
    if (w.r_max < w.r_min) throw ScenarioError(r.at("r_max"), "must be >= r_min");
  } else if (w.type == "shell") {
    w.r_min = positive(r, "r_min", w.r_min);
    w.r_max = r.number("r_max", w.r_max);
    w.n_shells = positive_int(r, "n_shells", w.n_shells);
    w.views = positive_int(r, "views", w.views);
    w.upper_half = r.boolean("upper_half", w.upper_half);
    if (w.r_max < w.r_min) throw ScenarioError(r.at("r_max"), "must be >= r_min");
    if (w.views < w.n_shells) throw ScenarioError(r.at("views"), "need at least one view per shell");
    if (dim != 2 && dim != 3) throw ScenarioError(r.at("type"), "shell workspaces need dim 2 or 3");
  } else if (w.type == "line") {
    const Vector o = r.vector("offsets");
    w.line_offsets.assign(o.data(), o.data() + o.size());
    w.standoff = r.number("standoff", w.standoff);
    if (w.line_offsets.empty()) throw ScenarioError(r.at("offsets"), "must not be empty");
  } else if (w.type == "explicit") {
    const json& arr = r.raw("offsets");
    if (!arr.is_array() || arr.empty()) throw ScenarioError(r.at("offsets"), "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Vector v = to_vector(arr[i], join(r.at("offsets"), i));
      if (v.size() != dim) throw ScenarioError(join(r.at("offsets"), i), "offset dimension must equal dim");
      w.offsets.push_back(std::move(v));
    }
  } else {
    throw ScenarioError(r.at("type"), "unknown workspace type '" + w.type + "'");
  }
  w.actions.neighbors = static_cast<int>(r.integer("neighbors", 0));
  if (w.actions.neighbors < 0) throw ScenarioError(r.at("neighbors"), "must be >= 0");
  w.actions.stationary = r.boolean("stationary", true);
  r.finish();
  return w;
}

json workspace_json(const WorkspaceSpec& w) {
  json j;
  j["type"] = w.type;
  if (w.type == "polar") {
    j["r_min"] = w.r_min;
    j["r_max"] = w.r_max;
    j["n_radii"] = w.n_radii;
    j["step_deg"] = w.step_deg;
    j["sector"] = {w.sector_start_deg, w.sector_end_deg};
  } else if (w.type == "shell") {
    j["r_min"] = w.r_min;
    j["r_max"] = w.r_max;
    j["n_shells"] = w.n_shells;
    j["views"] = w.views;
    j["upper_half"] = w.upper_half;
  } else if (w.type == "line") {
    j["offsets"] = w.line_offsets;
    j["standoff"] = w.standoff;
  } else {
    j["offsets"] = json::array();
    for (const auto& o : w.offsets) j["offsets"].push_back(from_vector(o));
  }
  j["neighbors"] = w.actions.neighbors;
  j["stationary"] = w.actions.stationary;
  return j;
}

json sensor_json(const SensorModel& s) {
  json j;
  if (s.is_stereo()) {
    const auto& rig = s.stereo();
    j["type"] = "stereo";
    j["baseline"] = rig.baseline;
    j["focal"] = rig.focal;
    j["width"] = rig.width;
    j["height"] = rig.height;
    j["fov_deg"] = rig.field_of_view * 180.0 / std::numbers::pi;
    j["pixel_cov"] = from_matrix(rig.pixel_cov);
    j["mount_offset"] = from_vector(rig.mount_offset);
  } else {
    const auto& m = s.range_bearing();
    j["type"] = "range_bearing";
    j["radial_var0"] = m.radial_var0;
    j["radial_var2"] = m.radial_var2;
    j["radial_var4"] = m.radial_var4;
    j["tangential_var0"] = m.tangential_var0;
    j["tangential_var2"] = m.tangential_var2;
    j["min_range"] = m.min_range;
    j["max_range"] = m.max_range;
    j["fov_deg"] = m.field_of_view * 180.0 / std::numbers::pi;
  }
  return j;
}

bool separated(const std::vector<Vector>& pts, const Vector& p, double sep) {
  for (const auto& q : pts)
    if ((q - p).norm() < sep) return false;
  return true;
}

Vector uniform_in_box(const Vector& extent, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector v(extent.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = u(rng) * extent(i);
  return v;
}

Vector uniform_in_ball(int dim, double radius, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = u(rng);
    if (v.norm() <= 1.0) return radius * v;
  }
}

void expand_targets(Scenario& s) {
  const auto& g = s.generator;
  if (g.kind == "explicit") return;
  s.targets.clear();
  Rng rng = substream(s.seed, "targets");
  constexpr int attempts = 200000;
  std::vector<Vector> pts;
  if (g.kind == "uniform") {
    for (int k = 0; k < g.count; ++k) {
      int a = 0;
      for (; a < attempts; ++a) {
        Vector p = uniform_in_box(g.extent, rng);
        if (separated(pts, p, g.min_separation)) {
          pts.push_back(std::move(p));
          break;
        }
      }
      if (a == attempts) throw ScenarioError("/targets", "cannot place targets with the requested separation");
    }
  } else {
    std::vector<Vector> centres;
    const double centre_sep = 2.0 * g.group_radius + g.min_separation;
    for (int k = 0; k < g.groups; ++k) {
      int a = 0;
      for (; a < attempts; ++a) {
        Vector c = uniform_in_box(g.extent, rng);
        if (separated(centres, c, centre_sep)) {
          centres.push_back(std::move(c));
          break;
        }
      }
      if (a == attempts) throw ScenarioError("/targets", "cannot place target groups with the requested separation");
    }
    for (int k = 0; k < g.count; ++k) {
      const Vector& c = centres[static_cast<std::size_t>(k % g.groups)];
      int a = 0;
      for (; a < attempts; ++a) {
        Vector p = c + uniform_in_ball(s.dim, g.group_radius, rng);
        if (separated(pts, p, g.min_separation)) {
          pts.push_back(std::move(p));
          break;
        }
      }
      if (a == attempts) throw ScenarioError("/targets", "cannot place targets with the requested separation");
    }
  }
  for (auto& p : pts) s.targets.push_back({std::move(p), std::nullopt});
}

}  // namespace

std::vector<Pose> WorkspaceSpec::generate(const Vector& target, Rng& rng) const {
  if (type == "polar") return polar_poses(target, r_min, r_max, n_radii, step_deg, sector_start_deg, sector_end_deg);
  if (type == "shell")
    return shell_poses(target, static_cast<int>(target.size()), r_min, r_max, n_shells, views, upper_half, rng);
  if (type == "line") return line_poses(target, line_offsets, standoff);
  return offset_poses(target, offsets);
}

double WorkspaceSpec::reach() const {
  if (type == "polar" || type == "shell") return r_max;
  double m = 0.0;
  if (type == "line")
    for (double o : line_offsets) m = std::max(m, std::hypot(o, standoff));
  else
    for (const auto& o : offsets) m = std::max(m, o.norm());
  return m;
}

SensorModel parse_sensor(const json& spec, const std::string& pointer) {
  Reader r(spec, pointer);
  const std::string type = r.string("type");
  if (type == "range_bearing") {
    RangeBearingModel m;
    m.radial_var0 = r.number("radial_var0", m.radial_var0);
    m.radial_var2 = r.number("radial_var2", m.radial_var2);
    m.radial_var4 = r.number("radial_var4", m.radial_var4);
    m.tangential_var0 = r.number("tangential_var0", m.tangential_var0);
    m.tangential_var2 = r.number("tangential_var2", m.tangential_var2);
    m.min_range = r.number("min_range", m.min_range);
    m.max_range = r.number("max_range", m.max_range);
    m.field_of_view = r.number("fov_deg", 360.0) * std::numbers::pi / 180.0;
    r.finish();
    try {
      return SensorModel(m);
    } catch (const ParameterError& e) {
      throw ScenarioError(pointer, e.what());
    }
  }
  if (type == "stereo") {
    StereoRig rig;
    rig.baseline = r.number("baseline", rig.baseline);
    rig.width = positive_int(r, "width", rig.width);
    rig.height = positive_int(r, "height", rig.height);
    rig.field_of_view = r.number("fov_deg", 70.0) * std::numbers::pi / 180.0;
    rig.focal = r.has("focal") ? r.number("focal") : StereoRig::focal_from_fov(rig.width, rig.field_of_view);
    if (r.has("pixel_cov")) rig.pixel_cov = r.matrix("pixel_cov");
    if (rig.pixel_cov.rows() != 3) throw ScenarioError(r.at("pixel_cov"), "expected a 3x3 matrix");
    if (r.has("mount_offset")) {
      const Vector v = r.vector("mount_offset");
      if (v.size() != 3) throw ScenarioError(r.at("mount_offset"), "expected 3 numbers");
      rig.mount_offset = v;
    }
    r.finish();
    try {
      return SensorModel(rig);
    } catch (const Error& e) {
      throw ScenarioError(pointer, e.what());
    }
  }
  throw ScenarioError(r.at("type"), "unknown sensor type '" + type + "'");
}

void Scenario::validate() const {
  if (version != 1) throw ScenarioError("/version", "unsupported version");
  if (dim < 2 || dim > 3) throw ScenarioError("/dim", "must be 2 or 3");
  if (targets.empty()) throw ScenarioError("/targets", "at least one target is required");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].mean.size() != dim) throw ScenarioError("/targets/" + std::to_string(i) + "/mean", "wrong dimension");
    if (targets[i].cov) {
      if (targets[i].cov->rows() != dim || !is_spd(*targets[i].cov))
        throw ScenarioError("/targets/" + std::to_string(i) + "/cov", "must be a dim x dim SPD matrix");
    }
  }
  auto wrap = [](const char* ptr, auto&& fn) {
    try {
      fn();
    } catch (const ScenarioError&) {
      throw;
    } catch (const Error& e) {
      throw ScenarioError(ptr, e.what());
    }
  };
  wrap("/grid", [&] {
    GridParams g = grid;
    g.dim = dim;
    g.validate();
  });
  wrap("/dp", [&] { dp.validate(); });
  if (m_max < 1 || m_max > 24) throw ScenarioError("/cluster/m_max", "must lie in [1, 24]");
  if (fleet.robots < 1) throw ScenarioError("/fleet/robots", "must be >= 1");
  if (fleet.depot.size() != dim) throw ScenarioError("/fleet/depot", "wrong dimension");
  if (!fleet.starts.empty() && static_cast<int>(fleet.starts.size()) != fleet.robots)
    throw ScenarioError("/fleet/starts", "need one start per robot");
  for (std::size_t i = 0; i < fleet.starts.size(); ++i)
    if (fleet.starts[i].size() != dim) throw ScenarioError("/fleet/starts/" + std::to_string(i), "wrong dimension");
  if (sim.monte_carlo < 1) throw ScenarioError("/sim/monte_carlo", "must be >= 1");
  for (std::size_t i = 0; i < rho_sweep.size(); ++i)
    if (!(rho_sweep[i] >= 0.0 && rho_sweep[i] <= 1.0))
      throw ScenarioError("/rho_sweep/" + std::to_string(i), "rho must lie in [0, 1]");
  if (prior_scale && !(*prior_scale > 0.0)) throw ScenarioError("/prior_scale", "must be positive");
}

Scenario parse_scenario(const json& doc) {
  Reader root(doc, "");
  Scenario s;
  s.version = static_cast<int>(root.integer("version"));
  if (s.version != 1) throw ScenarioError("/version", "unsupported version");
  const long long seed = root.integer("seed", 1);
  if (seed < 0) throw ScenarioError("/seed", "must be non-negative");
  s.seed = static_cast<std::uint64_t>(seed);
  s.dim = static_cast<int>(root.integer("dim", 2));
  if (s.dim < 2 || s.dim > 3) throw ScenarioError("/dim", "must be 2 or 3");

  const json& targets = root.raw("targets");
  if (targets.is_array()) {
    for (std::size_t i = 0; i < targets.size(); ++i) {
      Reader t(targets[i], join("/targets", i));
      TargetSpec spec;
      spec.mean = t.vector("mean");
      if (t.has("cov")) spec.cov = t.matrix("cov");
      t.finish();
      s.targets.push_back(std::move(spec));
    }
    s.generator.kind = "explicit";
    s.generator.count = static_cast<int>(s.targets.size());
  } else {
    Reader g(targets, "/targets");
    s.generator.kind = g.string("generator");
    if (s.generator.kind != "uniform" && s.generator.kind != "grouped")
      throw ScenarioError("/targets/generator", "expected uniform or grouped");
    s.generator.count = positive_int(g, "count", 1);
    s.generator.groups = positive_int(g, "groups", 1);
    s.generator.extent = g.vector("extent");
    if (s.generator.extent.size() != s.dim) throw ScenarioError("/targets/extent", "wrong dimension");
    s.generator.group_radius = g.number("group_radius", 0.0);
    s.generator.min_separation = g.number("min_separation", 0.0);
    g.finish();
  }
  if (root.has("prior_scale")) {
    const json& ps = root.raw("prior_scale");
    if (ps.is_number()) s.prior_scale = ps.get<double>();
    else if (!(ps.is_string() && ps.get<std::string>() == "auto"))
      throw ScenarioError("/prior_scale", "expected a number or \"auto\"");
  }

  s.workspace = parse_workspace(root.child("workspace"), s.dim);
  s.sensor_spec = root.raw("sensor");
  s.sensor = parse_sensor(s.sensor_spec, "/sensor");

  if (root.has("grid")) {
    Reader g = root.child("grid");
    if (g.has("lambda_max")) {
      const json& lm = g.raw("lambda_max");
      if (lm.is_number()) {
        s.grid.lambda_max = lm.get<double>();
        s.lambda_auto = false;
      } else if (!(lm.is_string() && lm.get<std::string>() == "auto")) {
        throw ScenarioError("/grid/lambda_max", "expected a number or \"auto\"");
      }
    }
    s.grid.n_lambda = positive_int(g, "n_lambda", s.grid.n_lambda);
    s.grid.n_alpha = positive_int(g, "n_alpha", s.grid.n_alpha);
    s.grid.n_dirs_max = positive_int(g, "n_dirs_max", s.grid.n_dirs_max);
    s.grid.kappa_lambda = positive(g, "kappa_lambda", s.grid.kappa_lambda);
    s.grid.kappa_alpha = positive(g, "kappa_alpha", s.grid.kappa_alpha);
    s.grid.charge_iters = positive_int(g, "charge_iters", s.grid.charge_iters, 0);
    s.grid.charge_step = positive(g, "charge_step", s.grid.charge_step);
    g.finish();
  }
  s.grid.dim = s.dim;

  if (root.has("dp")) {
    Reader d = root.child("dp");
    s.dp.gamma = d.number("gamma", s.dp.gamma);
    s.dp.rho = d.number("rho", s.dp.rho);
    s.dp.vi_tolerance = d.number("vi_tolerance", s.dp.vi_tolerance);
    s.dp.max_sweeps = positive_int(d, "max_sweeps", s.dp.max_sweeps);
    d.finish();
  }

  if (root.has("cluster")) {
    Reader c = root.child("cluster");
    s.m_max = positive_int(c, "m_max", s.m_max);
    c.finish();
  }

  s.fleet.depot = Vector::Zero(s.dim);
  if (root.has("fleet")) {
    Reader f = root.child("fleet");
    s.fleet.robots = positive_int(f, "robots", s.fleet.robots);
    if (f.has("depot")) s.fleet.depot = f.vector("depot");
    if (f.has("starts")) {
      const json& arr = f.raw("starts");
      if (!arr.is_array()) throw ScenarioError("/fleet/starts", "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) s.fleet.starts.push_back(to_vector(arr[i], join("/fleet/starts", i)));
    }
    s.fleet.comm_range = positive(f, "comm_range", s.fleet.comm_range);
    s.fleet.step = f.number("step", s.fleet.step);
    s.fleet.ticks_per_round = positive_int(f, "ticks_per_round", s.fleet.ticks_per_round);
    s.fleet.rounds_per_tick = positive_int(f, "rounds_per_tick", s.fleet.rounds_per_tick);
    s.fleet.stall_ticks = f.integer("stall_ticks", s.fleet.stall_ticks);
    f.finish();
  }

  if (root.has("sim")) {
    Reader m = root.child("sim");
    s.sim.monte_carlo = positive_int(m, "monte_carlo", s.sim.monte_carlo);
    s.sim.noiseless = m.boolean("noiseless", s.sim.noiseless);
    s.sim.quantize = m.boolean("quantize", s.sim.quantize);
    m.finish();
  }

  if (root.has("single")) {
    Reader m = root.child("single");
    s.single.start_pose = static_cast<int>(m.integer("start_pose", s.single.start_pose));
    s.single.baseline_runs = positive_int(m, "baseline_runs", s.single.baseline_runs);
    m.finish();
  }

  if (root.has("rho_sweep")) {
    const Vector r = root.vector("rho_sweep");
    s.rho_sweep.assign(r.data(), r.data() + r.size());
  }
  root.finish();

  expand_targets(s);
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("", "cannot open scenario file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

void reseed(Scenario& s, std::uint64_t seed) {
  s.seed = seed;
  expand_targets(s);
  s.validate();
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["version"] = s.version;
  j["seed"] = s.seed;
  j["dim"] = s.dim;
  if (s.generator.kind == "explicit") {
    j["targets"] = json::array();
    for (const auto& t : s.targets) {
      json tj;
      tj["mean"] = from_vector(t.mean);
      if (t.cov) tj["cov"] = from_matrix(*t.cov);
      j["targets"].push_back(tj);
    }
  } else {
    json g;
    g["generator"] = s.generator.kind;
    g["count"] = s.generator.count;
    g["groups"] = s.generator.groups;
    g["extent"] = from_vector(s.generator.extent);
    g["group_radius"] = s.generator.group_radius;
    g["min_separation"] = s.generator.min_separation;
    j["targets"] = g;
  }
  j["prior_scale"] = s.prior_scale ? json(*s.prior_scale) : json("auto");
  j["workspace"] = workspace_json(s.workspace);
  j["sensor"] = sensor_json(s.sensor);
  j["grid"] = {{"lambda_max", s.lambda_auto ? json("auto") : json(s.grid.lambda_max)},
               {"n_lambda", s.grid.n_lambda},
               {"n_alpha", s.grid.n_alpha},
               {"n_dirs_max", s.grid.n_dirs_max},
               {"kappa_lambda", s.grid.kappa_lambda},
               {"kappa_alpha", s.grid.kappa_alpha},
               {"charge_iters", s.grid.charge_iters},
               {"charge_step", s.grid.charge_step}};
  j["dp"] = {{"gamma", s.dp.gamma},
             {"rho", s.dp.rho},
             {"vi_tolerance", s.dp.vi_tolerance},
             {"max_sweeps", s.dp.max_sweeps}};
  j["cluster"] = {{"m_max", s.m_max}};
  json f;
  f["robots"] = s.fleet.robots;
  f["depot"] = from_vector(s.fleet.depot);
  f["starts"] = json::array();
  for (const auto& st : s.fleet.starts) f["starts"].push_back(from_vector(st));
  f["comm_range"] = s.fleet.comm_range;
  f["step"] = s.fleet.step;
  f["ticks_per_round"] = s.fleet.ticks_per_round;
  f["rounds_per_tick"] = s.fleet.rounds_per_tick;
  f["stall_ticks"] = s.fleet.stall_ticks;
  j["fleet"] = f;
  j["sim"] = {{"monte_carlo", s.sim.monte_carlo}, {"noiseless", s.sim.noiseless}, {"quantize", s.sim.quantize}};
  j["single"] = {{"start_pose", s.single.start_pose}, {"baseline_runs", s.single.baseline_runs}};
  j["rho_sweep"] = s.rho_sweep;
  return j;
}

}  // namespace hase
