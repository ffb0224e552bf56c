#pragma once

// Benchmark cases (sloshing tank, die swell) and their configuration.

#include <string>
#include <utility>
#include <vector>

#include "fsflow/coupled_solver.hpp"

namespace fsflow {

enum class CaseKind { Sloshing, DieSwell };
std::string to_string(CaseKind k);

struct CaseConfig {
  CaseKind kind = CaseKind::Sloshing;
  BasisKind basis = BasisKind::nurbs(2);
  int n_u = 12, n_v = 12;
  double dt = 0.2;
  double t_end = 50.0;
  DisplacementScheme scheme;
  CouplingStrategy coupling = CouplingStrategy::SurfaceMonolithic;
  FluidProps fluid;
  MeshElasticityProps mesh_props;
  NewtonSettings newton;
  Rectangle rect;
  BoundaryTagging tags;
  int fit_samples = 1001;     ///< sloshing surface fit
  std::string out_dir = ".";
  int snapshot_every = 0;     ///< 0 disables snapshots
  int snapshot_subsample = 1;

  /// Throws ConfigError on invalid or incompatible settings.
  void validate() const;
};

/// Unit tank, h(x) = 1 - 0.1 cos(pi x), slip walls, free top, rho 1000,
/// mu 0.01, gravity -1, Navier-Stokes, 12x12, dt 0.2, T 50.
CaseConfig sloshing_case();

/// 60 x 10 channel, no-slip die lid on the first 20 units of the top, free
/// surface after it, parabolic inflow, slip bottom, traction-free outflow,
/// rho 1, mu 1e5, no gravity, Stokes, 86x16, dt 0.015625, T 15.
CaseConfig die_swell_case();

/// "sloshing" or "dieswell". Throws ConfigError.
CaseConfig case_defaults(const std::string& name);

/// Sets one key (case.*, fluid.*, newton.*, mesh.*). Throws ConfigError
/// naming the key and line.
void apply_setting(CaseConfig& cfg, const std::string& key, const std::string& value, int line = 0);

/// key=value lines; '#' starts a comment. Returns (key, value, line) triples.
struct ConfigEntry {
  std::string key, value;
  int line = 0;
};
std::vector<ConfigEntry> read_config_file(const std::string& path);

/// Defaults for the case named in the entries (key case.name) or
/// `case_name` when given, then every entry applied in order.
CaseConfig parse_config(const std::vector<ConfigEntry>& entries, const std::string& case_name = {});

/// Initial mesh of a case (the sloshing surface is a least-squares fit of h).
SpatialMesh build_case_mesh(const CaseConfig& cfg);

/// Boundary conditions and solver settings of a case.
ProblemSetup problem_setup(const CaseConfig& cfg);

/// Runs a case to cfg.t_end without file output.
RunRecord march(const CaseConfig& cfg);

}  // namespace fsflow
