#include "fsflow/cases.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>

#include <fmt/format.h>

#include "fsflow/errors.hpp"

namespace fsflow {

std::string to_string(CaseKind k) { return k == CaseKind::Sloshing ? "sloshing" : "dieswell"; }

void CaseConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive", "case.dt");
  if (!(t_end > 0.0)) throw ConfigError("tmax must be positive", "case.tmax");
  const int min_n = basis.lagrange ? 2 : basis.degree + 1;
  if (n_u < min_n || n_v < min_n)
    throw ConfigError(fmt::format("mesh {}x{} below minimum {} for {}", n_u, n_v, min_n, basis.name()), "case.mesh");
  if (snapshot_every < 0) throw ConfigError("snapshot interval must be nonnegative", "case.snapshot_every");
  if (snapshot_subsample < 1) throw ConfigError("snapshot subsample must be at least 1", "case.snapshot_subsample");
  if (fit_samples < 2) throw ConfigError("fit needs at least two samples", "case.fit_samples");
  scheme.validate(basis);
  fluid.validate();
  mesh_props.validate();
  newton.validate();
}

CaseConfig sloshing_case() {
  CaseConfig c;
  c.kind = CaseKind::Sloshing;
  c.fluid.density = 1000.0;
  c.fluid.viscosity = 0.01;
  c.fluid.body_force = Vec2(0.0, -1.0);
  c.fluid.include_advection = true;
  c.rect = {0.0, 0.0, 1.0, 1.0};
  c.tags = {{Edge::Bottom, 0.0, 1.0, BoundaryTag::Slip},
            {Edge::Left, 0.0, 1.0, BoundaryTag::Slip},
            {Edge::Right, 0.0, 1.0, BoundaryTag::Slip},
            {Edge::Top, 0.0, 1.0, BoundaryTag::Free}};
  return c;
}

CaseConfig die_swell_case() {
  CaseConfig c;
  c.kind = CaseKind::DieSwell;
  c.n_u = 86;
  c.n_v = 16;
  c.dt = 0.015625;
  c.t_end = 15.0;
  c.fluid.density = 1.0;
  c.fluid.viscosity = 1e5;
  c.fluid.body_force = Vec2::Zero();
  c.fluid.include_advection = false;
  c.rect = {0.0, 0.0, 60.0, 10.0};
  c.tags = {{Edge::Bottom, 0.0, 1.0, BoundaryTag::Slip},
            {Edge::Left, 0.0, 1.0, BoundaryTag::Inflow},
            {Edge::Right, 0.0, 1.0, BoundaryTag::Outflow},
            {Edge::Top, 0.0, 1.0 / 3.0, BoundaryTag::NoSlip},
            {Edge::Top, 1.0 / 3.0, 1.0, BoundaryTag::Free}};
  return c;
}

CaseConfig case_defaults(const std::string& name) {
  if (name == "sloshing") return sloshing_case();
  if (name == "dieswell") return die_swell_case();
  throw ConfigError(fmt::format("unknown case '{}'", name), "case");
}

namespace {

double to_double(const std::string& key, const std::string& v, int line) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, x);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(x))
    throw ConfigError(fmt::format("malformed number '{}' for {}", v, key), key, line);
  return x;
}

int to_int(const std::string& key, const std::string& v, int line) {
  int x = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, x);
  if (res.ec != std::errc() || res.ptr != end)
    throw ConfigError(fmt::format("malformed integer '{}' for {}", v, key), key, line);
  return x;
}

bool to_bool(const std::string& key, const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(fmt::format("malformed flag '{}' for {}", v, key), key, line);
}

Vec2 to_vec(const std::string& key, const std::string& v, int line) {
  const auto comma = v.find(',');
  if (comma == std::string::npos) throw ConfigError(fmt::format("expected x,y for {}", key), key, line);
  return Vec2(to_double(key, v.substr(0, comma), line), to_double(key, v.substr(comma + 1), line));
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_setting(CaseConfig& c, const std::string& key, const std::string& value, int line) {
  const std::string v = trim(value);
  auto rethrow = [&](const ConfigError& e) {
    throw ConfigError(line > 0 ? fmt::format("line {}: {}", line, e.what()) : std::string(e.what()), key, line);
  };
  try {
    if (key == "case.name") {
      if (v != to_string(c.kind)) throw ConfigError(fmt::format("case '{}' does not match '{}'", v, to_string(c.kind)));
    } else if (key == "case.basis") {
      c.basis = BasisKind::parse(v);
    } else if (key == "case.mesh") {
      const auto x = v.find('x');
      if (x == std::string::npos) throw ConfigError(fmt::format("mesh '{}' is not NxM", v));
      c.n_u = to_int(key, v.substr(0, x), line);
      c.n_v = to_int(key, v.substr(x + 1), line);
    } else if (key == "case.dt") {
      c.dt = to_double(key, v, line);
    } else if (key == "case.tmax") {
      c.t_end = to_double(key, v, line);
    } else if (key == "case.scheme") {
      c.scheme = DisplacementScheme::parse(v, c.scheme.direction);
    } else if (key == "case.direction") {
      c.scheme.direction = to_vec(key, v, line);
    } else if (key == "case.coupling") {
      c.coupling = parse_coupling(v);
    } else if (key == "case.out") {
      c.out_dir = v;
    } else if (key == "case.snapshot_every") {
      c.snapshot_every = to_int(key, v, line);
    } else if (key == "case.snapshot_subsample") {
      c.snapshot_subsample = to_int(key, v, line);
    } else if (key == "case.fit_samples") {
      c.fit_samples = to_int(key, v, line);
    } else if (key == "fluid.density") {
      c.fluid.density = to_double(key, v, line);
    } else if (key == "fluid.viscosity") {
      c.fluid.viscosity = to_double(key, v, line);
    } else if (key == "fluid.body_force") {
      c.fluid.body_force = to_vec(key, v, line);
    } else if (key == "fluid.advection") {
      c.fluid.include_advection = to_bool(key, v, line);
    } else if (key == "fluid.continuity_scale") {
      c.fluid.continuity_scale = to_double(key, v, line);
    } else if (key == "newton.atol") {
      c.newton.atol = to_double(key, v, line);
    } else if (key == "newton.rtol") {
      c.newton.rtol = to_double(key, v, line);
    } else if (key == "newton.max_iterations") {
      c.newton.max_iterations = to_int(key, v, line);
    } else if (key == "newton.line_search") {
      c.newton.line_search = to_bool(key, v, line);
    } else if (key == "newton.max_halvings") {
      c.newton.max_halvings = to_int(key, v, line);
    } else if (key == "mesh.lambda") {
      c.mesh_props.lambda = to_double(key, v, line);
    } else if (key == "mesh.mu") {
      c.mesh_props.mu = to_double(key, v, line);
    } else if (key == "mesh.chi") {
      c.mesh_props.chi = to_double(key, v, line);
    } else {
      throw ConfigError(fmt::format("unknown key '{}'", key));
    }
  } catch (const ConfigError& e) {
    rethrow(e);
  }
}

std::vector<ConfigEntry> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path), "config");
  std::vector<ConfigEntry> out;
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("line {}: expected key=value", no), line, no);
    out.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), no});
  }
  return out;
}

CaseConfig parse_config(const std::vector<ConfigEntry>& entries, const std::string& case_name) {
  std::string name = case_name;
  if (name.empty())
    for (const auto& e : entries)
      if (e.key == "case.name") name = e.value;
  if (name.empty()) throw ConfigError("no case given", "case.name");
  CaseConfig cfg = case_defaults(name);
  for (const auto& e : entries) {
    if (e.key == "case.name" && !case_name.empty()) continue;
    apply_setting(cfg, e.key, e.value, e.line);
  }
  return cfg;
}

SpatialMesh build_case_mesh(const CaseConfig& cfg) {
  SpatialMesh mesh = build_mesh(cfg.rect, cfg.n_u, cfg.n_v, cfg.basis, cfg.tags);
  if (cfg.kind != CaseKind::Sloshing) return mesh;
  const auto& topo = mesh.topology();
  std::vector<Vec2> samples(cfg.fit_samples);
  for (int k = 0; k < cfg.fit_samples; ++k) {
    const double x = cfg.rect.x0 + (cfg.rect.x1 - cfg.rect.x0) * k / (cfg.fit_samples - 1.0);
    samples[k] = Vec2(x, 1.0 - 0.1 * std::cos(std::numbers::pi * x));
  }
  const NurbsCurve surface = fit_least_squares(samples, topo.knots_u(), true);
  const auto gv = greville_abscissae(topo.knots_v());
  for (int j = 0; j < topo.n_v(); ++j)
    for (int i = 0; i < topo.n_u(); ++i) {
      auto& x = mesh.points[topo.point_index(i, j)];
      x.y() = cfg.rect.y0 + gv[j] * (surface.control_points()[i].y() - cfg.rect.y0);
    }
  return mesh;
}

ProblemSetup problem_setup(const CaseConfig& cfg) {
  ProblemSetup s;
  s.fluid = cfg.fluid;
  s.scheme = cfg.scheme;
  s.coupling = cfg.coupling;
  s.mesh_props = cfg.mesh_props;
  s.newton = cfg.newton;
  s.bcs = default_boundary_conditions();
  if (cfg.kind == CaseKind::DieSwell)
    s.bcs[BoundaryTag::Inflow] =
        BoundaryCondition::dirichlet([](const Vec2& x) { return Vec2(0.1 * (100.0 - x.y() * x.y()), 0.0); });
  return s;
}

RunRecord march(const CaseConfig& cfg) {
  cfg.validate();
  Simulation sim(build_case_mesh(cfg), problem_setup(cfg), cfg.dt, cfg.t_end);
  return sim.run();
}

}  // namespace fsflow
