#pragma once

// CSV time series, legacy VTK snapshots and binary checkpoints.

#include <string>

#include "fsflow/coupled_solver.hpp"
#include "fsflow/diagnostics.hpp"

namespace fsflow {

/// Header t,mass,mass_error,corner_x,corner_y,min_quality; one row per
/// record row (corner taken from run.corner); final line
/// "# flux_error=<v> status=<s>". Throws IoError.
void write_timeseries(const RunRecord& run, const std::string& path);

/// Legacy ASCII unstructured grid. Every element is emitted as
/// subsample x subsample quads on a shared point grid; point data hold the
/// upper-level velocity and pressure. Throws IoError.
void write_snapshot(const SpatialMesh& mesh, const Eigen::VectorXd& flow, const std::string& path,
                    int subsample = 1);

struct Checkpoint {
  BasisKind basis;
  int n_u = 0, n_v = 0;
  SystemState state;  ///< mesh.topo left empty until bound
  RunRecord record;
};

/// Throws IoError.
void save_checkpoint(const std::string& path, const SystemState& state, const RunRecord& record);

/// Throws IoError on a bad magic, version or truncated file.
Checkpoint load_checkpoint(const std::string& path);

/// Attaches the checkpointed state to `reference`'s topology. Throws
/// IoError when basis or resolution differ.
SystemState bind_checkpoint(const Checkpoint& ck, const SpatialMesh& reference);

}  // namespace fsflow
