#pragma once

// Mass, mass-conservation error, space-time flux error, corner trajectories
// and element quality.

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fsflow/discretization.hpp"

namespace fsflow {

enum class RunStatus { Completed, Tangled, Diverged };
std::string to_string(RunStatus s);

struct RunRow {
  double t = 0.0;
  double mass = 0.0;
  double mass_error = 0.0;
  std::array<Vec2, 4> corners{};  ///< indexed by Corner
  double min_quality = 0.0;
};

struct RunRecord {
  std::vector<RunRow> rows;  ///< first row is the initial state
  double flux_num = 0.0;     ///< accumulated int int |u.n - v.n|^2
  double flux_den = 0.0;     ///< accumulated int int 1
  RunStatus status = RunStatus::Completed;
  std::string message;
  Corner corner = Corner::TopRight;
};

/// rho times the domain area, integrated with the assembly quadrature.
double compute_mass(const SpatialMesh& mesh, double rho);

/// |m/m0 - 1|. Throws DomainError when m0 is zero.
double mass_error(double m, double m0);

struct FluxIntegrals {
  double num = 0.0;
  double den = 0.0;
};

/// Space-time integrals over the free top-edge spans of one slab with a
/// Gauss rule of `space_points` x `time_points` per span.
FluxIntegrals flux_integrals(const SpaceTimeSlab& slab, const Eigen::VectorXd& flow, int space_points,
                             int time_points);

/// Default diagnostic rule for degree p: p+3 points in space, 3 in time.
FluxIntegrals flux_integrals(const SpaceTimeSlab& slab, const Eigen::VectorXd& flow);

/// sqrt(num / den). Throws DomainError when den is zero.
double flux_error(const RunRecord& run);

std::vector<std::pair<double, Vec2>> corner_trajectory(const RunRecord& run, Corner corner);

/// Minimum over elements of (min det J / max det J), sampled on a
/// (p+2) x (p+2) grid including the element corners; 0 when tangled.
double mesh_quality(const SpatialMesh& mesh);

/// Row for the current configuration.
RunRow make_row(double t, const SpatialMesh& mesh, double rho, double m0);

}  // namespace fsflow
