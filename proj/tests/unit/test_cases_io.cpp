#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <gtest/gtest.h>

#include "fsflow/cases.hpp"
#include "fsflow/errors.hpp"
#include "fsflow/io.hpp"

using namespace fsflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("fsflow_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<ConfigEntry> flags(std::initializer_list<std::pair<const char*, const char*>> kv) {
  std::vector<ConfigEntry> out;
  for (auto [k, v] : kv) out.push_back({k, v, 0});
  return out;
}

RunRecord short_run(CaseConfig cfg, int slabs) {
  cfg.t_end = slabs * cfg.dt;
  return march(cfg);
}

}  // namespace

TEST(Config, SloshingDefaults) {
  const auto c = case_defaults("sloshing");
  EXPECT_EQ(c.kind, CaseKind::Sloshing);
  EXPECT_EQ(c.fluid.density, 1000.0);
  EXPECT_EQ(c.fluid.viscosity, 0.01);
  EXPECT_EQ(c.n_u, 12);
  EXPECT_EQ(c.dt, 0.2);
  EXPECT_EQ(c.t_end, 50.0);
  EXPECT_TRUE(c.fluid.include_advection);
  EXPECT_EQ(c.coupling, CouplingStrategy::SurfaceMonolithic);
}

TEST(Config, DieSwellDefaults) {
  const auto c = case_defaults("dieswell");
  EXPECT_EQ(c.fluid.density, 1.0);
  EXPECT_EQ(c.fluid.viscosity, 1e5);
  EXPECT_EQ(c.n_u, 86);
  EXPECT_EQ(c.n_v, 16);
  EXPECT_EQ(c.dt, 0.015625);
  EXPECT_FALSE(c.fluid.include_advection);
  EXPECT_THROW(case_defaults("dambreak"), ConfigError);
}

TEST(Config, CoarseIgaSloshingFlags) {
  auto c = parse_config(flags({{"case.basis", "nurbs2"},
                               {"case.mesh", "12x12"},
                               {"case.dt", "0.2"},
                               {"case.scheme", "pde-directional"}}),
                        "sloshing");
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.basis, BasisKind::nurbs(2));
  EXPECT_EQ(c.scheme.kind, SchemeKind::PdeDirectional);
  EXPECT_EQ(c.scheme.direction, Vec2(0, 1));
}

TEST(Config, FemDieSwellFlags) {
  auto c = parse_config(flags({{"case.basis", "q1"}, {"case.mesh", "86x16"}, {"case.scheme", "pde-normal"}}), "dieswell");
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.kind, CaseKind::DieSwell);
  EXPECT_EQ(c.basis, BasisKind::q1());
  EXPECT_EQ(c.scheme.kind, SchemeKind::PdeNormal);
  const auto m = build_case_mesh(c);
  EXPECT_EQ(m.num_elements(), 85 * 15);
}

TEST(Config, SchemeBasisMismatch) {
  auto c = parse_config(flags({{"case.scheme", "node-normal"}, {"case.basis", "nurbs2"}}), "sloshing");
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "scheme");
  }
}

TEST(Config, FileErrorsNameKeyAndLine) {
  TempDir d;
  {
    std::ofstream f(d / "bad.cfg");
    f << "# sloshing variant\ncase.name = sloshing\n\ncase.dt = 0.1\ncase.colour = red\n";
  }
  const auto entries = read_config_file(d / "bad.cfg");
  ASSERT_EQ(entries.size(), 3u);
  EXPECT_EQ(entries[1].line, 4);
  try {
    parse_config(entries);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "case.colour");
    EXPECT_EQ(e.line(), 5);
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos);
  }
  {
    std::ofstream f(d / "malformed.cfg");
    f << "case.name=sloshing\ncase.dt=fast\n";
  }
  try {
    parse_config(read_config_file(d / "malformed.cfg"));
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "case.dt");
    EXPECT_EQ(e.line(), 2);
  }
  {
    std::ofstream f(d / "noeq.cfg");
    f << "case.name sloshing\n";
  }
  EXPECT_THROW(read_config_file(d / "noeq.cfg"), ConfigError);
  EXPECT_THROW(read_config_file(d / "missing.cfg"), ConfigError);
  EXPECT_THROW(parse_config({}), ConfigError);
}

TEST(Config, LaterEntriesOverride) {
  const auto c = parse_config(flags({{"case.dt", "0.1"}, {"case.mesh", "6x8"}, {"case.dt", "0.05"}}), "sloshing");
  EXPECT_EQ(c.dt, 0.05);
  EXPECT_EQ(c.n_u, 6);
  EXPECT_EQ(c.n_v, 8);
  EXPECT_THROW(parse_config(flags({{"case.mesh", "6by8"}}), "sloshing"), ConfigError);
  EXPECT_THROW(parse_config(flags({{"case.dt", "-1"}}), "sloshing").validate(), ConfigError);
}

TEST(Timeseries, FormatAndEquilibrium) {
  TempDir d;
  const auto m = build_mesh({}, 5, 5, BasisKind::nurbs(2),
                            {{Edge::Bottom, 0, 1, BoundaryTag::Slip},
                             {Edge::Left, 0, 1, BoundaryTag::Slip},
                             {Edge::Right, 0, 1, BoundaryTag::Slip},
                             {Edge::Top, 0, 1, BoundaryTag::Free}});
  ProblemSetup setup;
  Simulation sim(m, setup, 0.1, 0.3);
  const auto& rec = sim.run();
  write_timeseries(rec, d / "ts.csv");
  std::istringstream in(slurp(d / "ts.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,mass,mass_error,corner_x,corner_y,min_quality");
  int rows = 0;
  std::string last;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) {
      last = line;
      continue;
    }
    ++rows;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    ASSERT_EQ(cols.size(), 6u);
    EXPECT_EQ(std::stod(cols[2]), 0.0);
  }
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(last, "# flux_error=0 status=completed");
  RunRecord empty;
  EXPECT_THROW(write_timeseries(empty, d / "e.csv"), IoError);
  EXPECT_THROW(write_timeseries(rec, (d.path / "no" / "such" / "dir.csv").string()), IoError);
}

TEST(Timeseries, SeventeenDigits) {
  TempDir d;
  RunRecord r;
  RunRow row;
  row.t = 0.1;
  row.mass = 1.0 / 3.0;
  row.corners[static_cast<int>(Corner::TopRight)] = Vec2(1, 1.1);
  r.rows = {row};
  r.flux_num = 2.0;
  r.flux_den = 8.0;
  write_timeseries(r, d / "ts.csv");
  const auto s = slurp(d / "ts.csv");
  EXPECT_NE(s.find("0.10000000000000001,0.33333333333333331,0,1,1.1000000000000001,0\n"), std::string::npos);
  EXPECT_NE(s.find("# flux_error=0.5 status=completed"), std::string::npos);
}

TEST(Timeseries, SloshingPdeMassRows) {
  TempDir d;
  auto cfg = sloshing_case();
  const auto rec = short_run(cfg, 5);
  for (const auto& r : rec.rows) EXPECT_LE(r.mass_error, 1e-10);
  write_timeseries(rec, d / "ts.csv");
}

TEST(Timeseries, DieSwellCornerRisesEarly) {
  auto cfg = die_swell_case();
  cfg.n_u = 44;
  cfg.n_v = 9;
  const auto rec = short_run(cfg, 4);
  ASSERT_EQ(rec.status, RunStatus::Completed);
  const int c = static_cast<int>(rec.corner);
  EXPECT_EQ(rec.corner, Corner::TopRight);
  for (size_t k = 1; k < rec.rows.size(); ++k) EXPECT_GE(rec.rows[k].corners[c].y(), rec.rows[k - 1].corners[c].y());
  EXPECT_GT(rec.rows.back().corners[c].y(), 10.0);
}

TEST(Snapshot, Counts) {
  TempDir d;
  auto count = [&](const std::string& path, const std::string& tag) {
    std::istringstream in(slurp(path));
    for (std::string w; in >> w;)
      if (w == tag) {
        long n;
        in >> n;
        return n;
      }
    return -1L;
  };
  for (auto [basis, cells] : {std::pair{BasisKind::q1(), 121L}, std::pair{BasisKind::nurbs(2), 100L}}) {
    auto cfg = sloshing_case();
    cfg.basis = basis;
    const auto m = build_case_mesh(cfg);
    const Eigen::VectorXd flow = Eigen::VectorXd::Zero(6 * m.num_points());
    write_snapshot(m, flow, d / "s.vtk");
    EXPECT_EQ(count(d / "s.vtk", "CELLS"), cells);
    EXPECT_EQ(count(d / "s.vtk", "CELL_TYPES"), cells);
    const long pts = count(d / "s.vtk", "POINTS");
    EXPECT_EQ(pts, basis.lagrange ? 144 : 121);
    EXPECT_EQ(count(d / "s.vtk", "POINT_DATA"), pts);
    write_snapshot(m, flow, d / "s3.vtk", 3);
    EXPECT_EQ(count(d / "s3.vtk", "CELLS"), 9 * cells);
  }
  const auto m = build_case_mesh(sloshing_case());
  EXPECT_THROW(write_snapshot(m, Eigen::VectorXd::Zero(6 * m.num_points()), d / "x.vtk", 0), IoError);
}

TEST(Snapshot, VelocityArrayLength) {
  TempDir d;
  const auto m = build_case_mesh(sloshing_case());
  Eigen::VectorXd flow = Eigen::VectorXd::Zero(6 * m.num_points());
  for (int a = 0; a < m.num_points(); ++a) flow[6 * a + 3] = 1.0;
  write_snapshot(m, flow, d / "s.vtk");
  std::istringstream in(slurp(d / "s.vtk"));
  std::string line;
  while (std::getline(in, line) && line != "VECTORS velocity double") {
  }
  int n = 0;
  while (std::getline(in, line) && line.rfind("SCALARS", 0) != 0) {
    std::istringstream ls(line);
    double x, y, z;
    ls >> x >> y >> z;
    EXPECT_NEAR(x, 1.0, 1e-14);
    EXPECT_EQ(y, 0.0);
    EXPECT_EQ(z, 0.0);
    ++n;
  }
  EXPECT_EQ(n, 121);
}

TEST(Checkpoint, RoundTrip) {
  TempDir d;
  auto cfg = sloshing_case();
  cfg.n_u = cfg.n_v = 6;
  const auto m = build_case_mesh(cfg);
  Simulation sim(m, problem_setup(cfg), cfg.dt, 3 * cfg.dt);
  sim.run();
  save_checkpoint(d / "a.ck", sim.state(), sim.record());
  const auto ck = load_checkpoint(d / "a.ck");
  EXPECT_EQ(ck.basis, BasisKind::nurbs(2));
  EXPECT_EQ(ck.n_u, 6);
  const auto s = bind_checkpoint(ck, m);
  EXPECT_EQ(s.slab, 3);
  EXPECT_EQ(s.time, sim.state().time);
  EXPECT_EQ(s.mesh.points, sim.state().mesh.points);
  EXPECT_EQ(s.flow, sim.state().flow);
  EXPECT_EQ(ck.record.rows.size(), sim.record().rows.size());
  EXPECT_EQ(ck.record.flux_num, sim.record().flux_num);
  EXPECT_EQ(ck.record.rows.back().corners, sim.record().rows.back().corners);
  save_checkpoint(d / "b.ck", s, ck.record);
  EXPECT_EQ(slurp(d / "a.ck"), slurp(d / "b.ck"));
}

TEST(Checkpoint, MismatchAndCorruption) {
  TempDir d;
  auto cfg = sloshing_case();
  cfg.n_u = cfg.n_v = 6;
  const auto m = build_case_mesh(cfg);
  save_checkpoint(d / "a.ck", initial_state(m), RunRecord{});
  const auto ck = load_checkpoint(d / "a.ck");
  cfg.n_u = cfg.n_v = 7;
  EXPECT_THROW(bind_checkpoint(ck, build_case_mesh(cfg)), IoError);
  cfg.n_u = cfg.n_v = 6;
  cfg.basis = BasisKind::q1();
  EXPECT_THROW(bind_checkpoint(ck, build_case_mesh(cfg)), IoError);

  const auto bytes = slurp(d / "a.ck");
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream(d / name, std::ios::binary) << content;
    return d / name;
  };
  EXPECT_THROW(load_checkpoint(write("trunc.ck", bytes.substr(0, bytes.size() / 2))), IoError);
  EXPECT_THROW(load_checkpoint(write("tail.ck", bytes + "x")), IoError);
  std::string magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(load_checkpoint(write("magic.ck", magic)), IoError);
  std::string version = bytes;
  version[8] = 9;
  EXPECT_THROW(load_checkpoint(write("version.ck", version)), IoError);
  EXPECT_THROW(load_checkpoint(d / "none.ck"), IoError);
}

TEST(Determinism, RepeatRunsGiveIdenticalCsv) {
  TempDir d;
  auto cfg = sloshing_case();
  cfg.n_u = cfg.n_v = 6;
  write_timeseries(short_run(cfg, 4), d / "a.csv");
  write_timeseries(short_run(cfg, 4), d / "b.csv");
  EXPECT_EQ(slurp(d / "a.csv"), slurp(d / "b.csv"));
}
