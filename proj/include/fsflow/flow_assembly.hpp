#pragma once

// Space-time Galerkin/least-squares weak form of the incompressible
// Navier-Stokes (or Stokes) equations on a deforming slab, temporal jump
// term, and velocity boundary conditions.

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "fsflow/discretization.hpp"

namespace fsflow {

struct FluidProps {
  double density = 1.0;
  double viscosity = 1.0;
  Vec2 body_force = Vec2::Zero();
  bool include_advection = true;
  /// Scale factor on the continuity stabilization parameter.
  double continuity_scale = 1.0;

  /// Throws ConfigError unless density and viscosity are positive.
  void validate() const;
};

enum class BcKind { Dirichlet, Neumann, Slip, FreeTraction };

struct BoundaryCondition {
  BcKind kind = BcKind::FreeTraction;
  std::function<Vec2(const Vec2&)> velocity;  ///< Dirichlet value; empty means zero
  Vec2 traction = Vec2::Zero();                ///< Neumann value

  static BoundaryCondition dirichlet(std::function<Vec2(const Vec2&)> f = {});
  static BoundaryCondition neumann(Vec2 h = Vec2::Zero());
  static BoundaryCondition slip();
  static BoundaryCondition free_traction();
};

using BoundaryConditions = std::map<BoundaryTag, BoundaryCondition>;

/// noslip/fixed: zero velocity, slip: slip, free: traction free,
/// outflow: zero traction. Inflow has no default.
BoundaryConditions default_boundary_conditions();

struct Stabilization {
  double tau_t = 0.0;     ///< (4/dt^2 + (2|u|/h)^2 + (4 nu/h^2)^2)^(-1/2)
  double tau_mom = 0.0;   ///< tau_t / rho
  double tau_cont = 0.0;  ///< scale * rho h^2 / tau_t
  Vec2 dtau_t = Vec2::Zero();  ///< d tau_t / d u
};

/// `u` is the advection velocity (zero for Stokes).
Stabilization stabilization(const FluidProps& props, double h, double dt, const Vec2& u);

/// Longest diagonal of the element's parametric-corner images.
double element_diameter(const MeshTopology& topo, const Element& el, std::span<const Vec2> points);

struct FlowElementInput {
  const Element* element = nullptr;
  std::span<const Vec2> lower;     ///< local coordinates, lower level
  std::span<const Vec2> upper;     ///< local coordinates, upper level
  std::span<const double> flow;    ///< 6 per local point: (ux, uy, p) lower, then upper
  std::span<const Vec2> previous;  ///< previous slab's upper velocity per local point
  double dt = 0.0;
  double h = 0.0;
  std::vector<std::pair<Edge, Vec2>> tractions;  ///< nonzero Neumann data on element edges
};

/// Element residual (6 per local point) and, when K is given, its Jacobian
/// with respect to the local flow values. Throws TangledMeshError.
void flow_element(const MeshTopology& topo, const FluidProps& props, const FlowElementInput& in,
                  Eigen::VectorXd& r, Eigen::MatrixXd* K);

/// Calls `sink(element, r_e, K_e)` for every element of the slab. K_e is
/// empty when `jacobian` is false. `flow` holds 6 values per point.
void for_each_flow_element(const SpaceTimeSlab& slab, std::span<const double> flow,
                           std::span<const Vec2> previous, const FluidProps& props,
                           const BoundaryConditions& bcs, bool jacobian,
                           const std::function<void(const Element&, const Eigen::VectorXd&,
                                                    const Eigen::MatrixXd&)>& sink);

/// Nonzero Neumann tractions on the boundary edges of an element.
std::vector<std::pair<Edge, Vec2>> element_tractions(const MeshTopology& topo, const Element& el,
                                                     const BoundaryConditions& bcs);

struct FlowAssembly {
  Eigen::VectorXd residual;               ///< 6 per point
  Eigen::SparseMatrix<double> jacobian;   ///< flow block only
};

/// Unconstrained flow residual and flow-block Jacobian of a slab.
FlowAssembly assemble_flow(const SpaceTimeSlab& slab, std::span<const double> flow,
                           std::span<const Vec2> previous, const FluidProps& props,
                           const BoundaryConditions& bcs, bool jacobian = true);

/// Flags Dirichlet and slip velocity unknowns at both temporal levels in the
/// DofMap. Dirichlet values are interpolated at the Greville points of the
/// edge (nodal values for Q1). Returns one message per corner where
/// Dirichlet overrode slip.
std::vector<std::string> apply_velocity_bcs(DofMap& dofs, const SpatialMesh& mesh,
                                            const BoundaryConditions& bcs);

/// Replaces constrained rows by x_i - prescribed_i with identity Jacobian rows.
void constrain_rows(const DofMap& dofs, const Eigen::VectorXd& x, Eigen::VectorXd& residual,
                    Eigen::SparseMatrix<double>* jacobian);

}  // namespace fsflow
