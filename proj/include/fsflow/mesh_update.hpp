#pragma once

// Elastic mesh update: linear pseudo-elasticity for the interior mesh
// displacement, driven by the free-surface displacement.

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Sparse>

#include "fsflow/discretization.hpp"

namespace fsflow {

struct MeshElasticityProps {
  double lambda = 1.0;
  double mu = 1.0;
  double chi = 1.0;  ///< stiffening exponent
  void validate() const;
};

struct ElementLame {
  double lambda = 0.0;
  double mu = 0.0;
};

/// Per-element (lambda, mu) scaled by (mean element area / element area)^chi,
/// areas measured on `mesh`.
std::vector<ElementLame> stiffen(const MeshElasticityProps& props, const SpatialMesh& mesh);

/// What happens to each displacement component of a point.
enum class MeshDof : char { Free, Zero, Prescribed };

struct MeshConstraints {
  std::vector<std::array<MeshDof, 2>> kind;
  std::vector<int> surface_points;  ///< points carrying prescribed surface displacement
};

/// fixed/noslip/inflow points are fixed; slip/outflow points keep the
/// wall-normal component at zero; free-surface points not also fixed are
/// prescribed in every component that no wall constrains.
MeshConstraints mesh_constraints(const MeshTopology& topo);

/// Global 2N x 2N stiffness on `mesh`, dof index 2*point + component.
Eigen::SparseMatrix<double> emum_stiffness(const SpatialMesh& mesh, const MeshElasticityProps& props);

/// Factorized elasticity problem on a fixed configuration.
class EmumSolver {
 public:
  /// Throws ConfigError when nothing is constrained or the reduced system is singular.
  EmumSolver(const SpatialMesh& mesh, const MeshElasticityProps& props, MeshConstraints constraints);

  /// Displacement of every point; Prescribed components are copied from `boundary`.
  std::vector<Vec2> solve(const std::vector<Vec2>& boundary) const;

  const Eigen::SparseMatrix<double>& stiffness() const noexcept { return K_; }
  const MeshConstraints& constraints() const noexcept { return constraints_; }

 private:
  MeshConstraints constraints_;
  Eigen::SparseMatrix<double> K_;
  std::vector<int> free_, fixed_;
  Eigen::SparseMatrix<double> Kfd_;
  std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

/// One-shot solve: interior displacement for boundary data z_D.
std::vector<Vec2> assemble_emum(const SpatialMesh& mesh, const std::vector<Vec2>& z_D,
                                const MeshElasticityProps& props, const MeshConstraints& constraints);

}  // namespace fsflow
