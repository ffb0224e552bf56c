// fsflow: run a benchmark case and write diagnostics.

#include <filesystem>
#include <iostream>
#include <optional>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "fsflow/cases.hpp"
#include "fsflow/errors.hpp"
#include "fsflow/io.hpp"

namespace fs = std::filesystem;
using namespace fsflow;

namespace {

constexpr int kExitTangled = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitConfig = 4;

struct Args {
  std::string case_name, config, checkpoint, resume;
  std::optional<std::string> basis, mesh, scheme, direction, coupling, out;
  std::optional<double> dt, tmax;
  std::optional<int> snapshot_every;
};

CaseConfig resolve(const Args& a) {
  std::vector<ConfigEntry> entries;
  if (!a.config.empty()) entries = read_config_file(a.config);
  auto flag = [&](const char* key, const std::string& v) { entries.push_back({key, v, 0}); };
  if (a.basis) flag("case.basis", *a.basis);
  if (a.mesh) flag("case.mesh", *a.mesh);
  if (a.dt) flag("case.dt", fmt::format("{:.17g}", *a.dt));
  if (a.tmax) flag("case.tmax", fmt::format("{:.17g}", *a.tmax));
  // direction before scheme so the scheme sees it
  if (a.direction) flag("case.direction", *a.direction);
  if (a.scheme) flag("case.scheme", *a.scheme);
  if (a.coupling) flag("case.coupling", *a.coupling);
  if (a.out) flag("case.out", *a.out);
  if (a.snapshot_every) flag("case.snapshot_every", std::to_string(*a.snapshot_every));
  CaseConfig cfg = parse_config(entries, a.case_name);
  cfg.validate();
  return cfg;
}

int run(const Args& a) {
  const CaseConfig cfg = resolve(a);
  fs::create_directories(cfg.out_dir);
  const SpatialMesh mesh = build_case_mesh(cfg);
  Simulation sim(mesh, problem_setup(cfg), cfg.dt, cfg.t_end);
  for (const auto& m : sim.solver().bc_log()) std::cerr << "note: " << m << "\n";
  if (!a.resume.empty()) {
    const Checkpoint ck = load_checkpoint(a.resume);
    sim.restore(bind_checkpoint(ck, mesh), ck.record);
  }
  auto snapshot = [&](const Simulation& s) {
    const auto path = fs::path(cfg.out_dir) / fmt::format("snapshot_{:05d}.vtk", s.state().slab);
    write_snapshot(s.state().mesh, s.state().flow, path.string(), cfg.snapshot_subsample);
    if (!a.checkpoint.empty()) save_checkpoint(a.checkpoint, s.state(), s.record());
  };
  if (cfg.snapshot_every > 0 && sim.state().slab == 0) snapshot(sim);
  const RunRecord& rec = sim.run([&](const Simulation& s) {
    const auto& r = s.last_report();
    std::cerr << fmt::format("slab {:5d} t={:.6g} newton={} |R|={:.3e}\n", s.state().slab, s.state().time,
                             r.iterations, r.history.empty() ? 0.0 : r.history.back());
    if (cfg.snapshot_every > 0 && s.state().slab % cfg.snapshot_every == 0) snapshot(s);
  });
  write_timeseries(rec, (fs::path(cfg.out_dir) / "timeseries.csv").string());
  if (!a.checkpoint.empty()) save_checkpoint(a.checkpoint, sim.state(), rec);
  std::cout << fmt::format("status={} t={:.6g} flux_error={:.6e}\n", to_string(rec.status), sim.state().time,
                           rec.flux_den > 0.0 ? flux_error(rec) : 0.0);
  if (!rec.message.empty()) std::cerr << rec.message << "\n";
  switch (rec.status) {
    case RunStatus::Completed: return 0;
    case RunStatus::Tangled: return kExitTangled;
    case RunStatus::Diverged: return kExitDiverged;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time free-surface flow simulator"};
  Args a;
  app.add_option("--case", a.case_name, "sloshing or dieswell");
  app.add_option("--config", a.config, "key=value file; flags override it")->check(CLI::ExistingFile);
  app.add_option("--basis", a.basis, "q1, nurbs2, nurbs3");
  app.add_option("--mesh", a.mesh, "control points NxM");
  app.add_option("--dt", a.dt, "slab length");
  app.add_option("--tmax", a.tmax, "end time");
  app.add_option("--scheme", a.scheme, "node-normal, greville, pde-equal, pde-normal, pde-directional");
  app.add_option("--direction", a.direction, "dx,dy for pde-directional");
  app.add_option("--coupling", a.coupling, "monolithic, surface-monolithic, staggered");
  app.add_option("--out", a.out, "output directory");
  app.add_option("--snapshot-every", a.snapshot_every, "slabs between VTK snapshots (0 = off)");
  app.add_option("--checkpoint", a.checkpoint, "checkpoint file written at snapshots and at the end");
  app.add_option("--resume", a.resume, "checkpoint to resume from")->check(CLI::ExistingFile);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  if (a.case_name.empty() && a.config.empty()) {
    std::cerr << "error: --case or --config is required\n";
    return kExitConfig;
  }
  try {
    return run(a);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
