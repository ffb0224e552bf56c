#pragma once

// Free-surface displacement schemes: explicit point updates (node normals
// for Q1, Greville normals for splines) and the weak no-penetration
// residuals of the PDE-based variants.
//
// The free surface is the top edge of the patch. Surface residuals use
// constant-in-time test functions, one per top-edge basis function.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fsflow/discretization.hpp"

namespace fsflow {

enum class SchemeKind { NodeNormal, GrevilleNormal, PdeEqual, PdeNormal, PdeDirectional };

struct DisplacementScheme {
  SchemeKind kind = SchemeKind::PdeDirectional;
  Vec2 direction = Vec2(0.0, 1.0);  ///< PdeDirectional only

  /// node-normal, greville, pde-equal, pde-normal, pde-directional. Throws ConfigError.
  static DisplacementScheme parse(const std::string& name, Vec2 direction = Vec2(0.0, 1.0));
  std::string name() const;
  bool point_based() const noexcept {
    return kind == SchemeKind::NodeNormal || kind == SchemeKind::GrevilleNormal;
  }
  /// Directional scheme with d = (0, +-1), which uses the simplified tangential equation.
  bool vertical() const noexcept { return kind == SchemeKind::PdeDirectional && direction.x() == 0.0; }
  /// Throws ConfigError for a scheme/basis mismatch or a zero direction.
  void validate(const BasisKind& basis) const;
};

/// Length-weighted averaged normals at the vertices of an open polyline
/// ordered left to right (normals point to the left of the travel direction).
/// Throws SingularityError on zero-length faces.
std::vector<Vec2> node_normals(std::span<const Vec2> nodes);

/// New node positions P + (u.n)n dt with averaged node normals.
std::vector<Vec2> node_normal_update(std::span<const Vec2> nodes, std::span<const Vec2> ubar, double dt);

/// Curve normals at the Greville abscissae.
std::vector<Vec2> greville_normals(const NurbsCurve& curve);

/// New control points P_i + (u_i.n_i)n_i dt, n_i the curve normal at the
/// i-th Greville abscissa.
std::vector<Vec2> greville_update(const NurbsCurve& curve, std::span<const Vec2> ubar, double dt);

/// Weak surface equations of one top-edge span. Inputs hold the p+1 top
/// points of the span: positions at both levels and velocities at both
/// levels. F1 (no penetration) and F2 (tangential rule) get p+1 entries,
/// one per test function. Throws SingularityError when |d.n| < 1e-6.
void surface_span_residual(const DisplacementScheme& scheme, const MeshTopology& topo, int eu,
                           std::span<const Vec2> lower, std::span<const Vec2> upper,
                           std::span<const Vec2> u_lower, std::span<const Vec2> u_upper, double dt,
                           Eigen::VectorXd& F1, Eigen::VectorXd& F2);

/// Top-edge spans tagged free, in increasing order.
std::vector<int> free_top_spans(const MeshTopology& topo);

struct SurfaceResidual {
  std::vector<double> f1;  ///< per point; nonzero only on the top edge
  std::vector<double> f2;
};

/// Surface residuals of every free span; `flow` holds 6 values per point.
SurfaceResidual assemble_surface_residual(const DisplacementScheme& scheme, const SpaceTimeSlab& slab,
                                          std::span<const double> flow);

}  // namespace fsflow
