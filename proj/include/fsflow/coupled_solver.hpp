#pragma once

// Per-slab Newton solve of flow + free surface (+ mesh) and time marching.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "fsflow/diagnostics.hpp"
#include "fsflow/discretization.hpp"
#include "fsflow/flow_assembly.hpp"
#include "fsflow/free_surface.hpp"
#include "fsflow/mesh_update.hpp"

namespace fsflow {

enum class CouplingStrategy { Monolithic, SurfaceMonolithic, Staggered };
std::string to_string(CouplingStrategy c);
/// monolithic, surface-monolithic, staggered. Throws ConfigError.
CouplingStrategy parse_coupling(const std::string& s);

struct NewtonSettings {
  double atol = 1e-10;
  double rtol = 1e-8;
  int max_iterations = 25;
  bool line_search = true;
  int max_halvings = 8;
  void validate() const;
};

struct ProblemSetup {
  FluidProps fluid;
  BoundaryConditions bcs = default_boundary_conditions();
  DisplacementScheme scheme;
  CouplingStrategy coupling = CouplingStrategy::SurfaceMonolithic;
  MeshElasticityProps mesh_props;
  NewtonSettings newton;
};

struct SystemState {
  int slab = 0;
  double time = 0.0;
  SpatialMesh mesh;      ///< configuration at `time`
  Eigen::VectorXd flow;  ///< 6 per point: (ux, uy, p) at the lower then upper level of the last slab

  /// Velocity at the upper level of the last slab.
  std::vector<Vec2> velocity() const;
};

/// Zero velocity and pressure on `mesh`.
SystemState initial_state(const SpatialMesh& mesh);

struct SlabReport {
  int iterations = 0;
  std::vector<double> history;  ///< residual norm per Newton iterate
  FluxIntegrals flux;
};

class SlabSolver {
 public:
  /// Boundary data are taken from `reference`, whose topology every state must share.
  SlabSolver(const SpatialMesh& reference, ProblemSetup setup);
  ~SlabSolver();
  SlabSolver(const SlabSolver&) = delete;
  SlabSolver& operator=(const SlabSolver&) = delete;

  /// Advances `prev` by one slab of length dt. Throws TangledMeshError or
  /// NonconvergenceError (both carrying the slab start time).
  SystemState solve_slab(const SystemState& prev, double dt, SlabReport* report = nullptr);

  const DofMap& dofs() const;
  const ProblemSetup& setup() const;
  /// Messages from boundary-condition precedence resolution.
  const std::vector<std::string>& bc_log() const;

  // Introspection of the nonlinear system of one slab.
  /// Starting iterate: both levels equal to the previous upper level, zero displacement.
  Eigen::VectorXd initial_guess(const SystemState& prev) const;
  /// Residual with constrained rows replaced by x_i - prescribed_i.
  Eigen::VectorXd residual(const SystemState& prev, double dt, const Eigen::VectorXd& x);
  /// Jacobian used by Newton. For surface-monolithic coupling the
  /// geometry columns are chained through the linear EMUM map of the slab.
  Eigen::SparseMatrix<double> jacobian(const SystemState& prev, double dt, const Eigen::VectorXd& x);
  /// Geometry increment of every point implied by the iterate.
  std::vector<Vec2> displacement(const SystemState& prev, double dt, const Eigen::VectorXd& x);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Time marching with diagnostics; owns the solver and the run record.
class Simulation {
 public:
  Simulation(const SpatialMesh& initial, ProblemSetup setup, double dt, double t_end);

  /// Resumes from a saved state and the record accumulated up to it.
  void restore(SystemState state, RunRecord record);

  bool done() const;
  /// One slab; updates the record. Throws like SlabSolver::solve_slab.
  void step();
  /// Marches to t_end, converting tangled/diverged failures into the record
  /// status. `after_slab` runs after every successful slab.
  const RunRecord& run(const std::function<void(const Simulation&)>& after_slab = {});

  const SystemState& state() const noexcept { return state_; }
  const RunRecord& record() const noexcept { return record_; }
  const SlabReport& last_report() const noexcept { return report_; }
  SlabSolver& solver() noexcept { return *solver_; }
  double dt() const noexcept { return dt_; }
  double t_end() const noexcept { return t_end_; }
  int num_slabs() const noexcept { return num_slabs_; }

 private:
  ProblemSetup setup_;
  double dt_, t_end_;
  int num_slabs_;
  std::unique_ptr<SlabSolver> solver_;
  SystemState state_;
  RunRecord record_;
  SlabReport report_;
};

}  // namespace fsflow
