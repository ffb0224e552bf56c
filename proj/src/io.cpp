#include "fsflow/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "fsflow/errors.hpp"

namespace fsflow {

namespace {

constexpr char kMagic[8] = {'F', 'S', 'F', 'L', 'O', 'W', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path));
  return out;
}

}  // namespace

void write_timeseries(const RunRecord& run, const std::string& path) {
  if (run.rows.empty()) throw IoError("empty run record");
  auto out = open_out(path);
  out << "t,mass,mass_error,corner_x,corner_y,min_quality\n";
  const int c = static_cast<int>(run.corner);
  for (const auto& r : run.rows)
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.t, r.mass, r.mass_error,
                       r.corners[c].x(), r.corners[c].y(), r.min_quality);
  const double fe = run.flux_den > 0.0 ? flux_error(run) : 0.0;
  out << fmt::format("# flux_error={:.17g} status={}\n", fe, to_string(run.status));
  if (!out) throw IoError(fmt::format("write to '{}' failed", path));
}

void write_snapshot(const SpatialMesh& mesh, const Eigen::VectorXd& flow, const std::string& path, int subsample) {
  if (subsample < 1) throw IoError("subsample must be at least 1");
  const auto& topo = mesh.topology();
  auto params = [&](const MeshTopology& t, bool u) {
    std::vector<double> out;
    const int ne = u ? t.num_elements_u() : t.num_elements_v();
    for (int e = 0; e < ne; ++e) {
      const auto& tab = u ? t.table_u(e) : t.table_v(e);
      for (int s = 0; s < subsample; ++s) out.push_back(tab.lo + tab.width * s / subsample);
    }
    out.push_back(u ? t.knots_u().back() : t.knots_v().back());
    return out;
  };
  const auto pu = params(topo, true), pv = params(topo, false);
  std::vector<Vec2> vel(mesh.num_points()), pres(mesh.num_points());
  for (int a = 0; a < mesh.num_points(); ++a) {
    vel[a] = Vec2(flow[6 * a + 3], flow[6 * a + 4]);
    pres[a] = Vec2(flow[6 * a + 5], 0.0);
  }
  const size_t np = pu.size() * pv.size();
  auto out = open_out(path);
  out << "# vtk DataFile Version 3.0\nfsflow snapshot\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << np << " double\n";
  std::vector<Vec2> u(np);
  std::vector<double> p(np);
  size_t k = 0;
  for (double v : pv)
    for (double uu : pu) {
      const Vec2 x = eval_geometry(topo, mesh.points, uu, v).x;
      out << fmt::format("{:.17g} {:.17g} 0\n", x.x(), x.y());
      u[k] = eval_field(topo, vel, uu, v);
      p[k] = eval_field(topo, pres, uu, v).x();
      ++k;
    }
  const size_t nu = pu.size();
  const size_t ncell = (pu.size() - 1) * (pv.size() - 1);
  out << "CELLS " << ncell << " " << 5 * ncell << "\n";
  for (size_t j = 0; j + 1 < pv.size(); ++j)
    for (size_t i = 0; i + 1 < nu; ++i)
      out << "4 " << i + nu * j << " " << i + 1 + nu * j << " " << i + 1 + nu * (j + 1) << " " << i + nu * (j + 1)
          << "\n";
  out << "CELL_TYPES " << ncell << "\n";
  for (size_t c = 0; c < ncell; ++c) out << "9\n";
  out << "POINT_DATA " << np << "\nVECTORS velocity double\n";
  for (const auto& w : u) out << fmt::format("{:.17g} {:.17g} 0\n", w.x(), w.y());
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (double q : p) out << fmt::format("{:.17g}\n", q);
  if (!out) throw IoError(fmt::format("write to '{}' failed", path));
}

namespace {

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated checkpoint");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const SystemState& state, const RunRecord& record) {
  auto out = open_out(path, true);
  const auto& topo = state.mesh.topology();
  out.write(kMagic, sizeof(kMagic));
  put(out, kVersion);
  put<std::int32_t>(out, topo.basis().lagrange ? 1 : 0);
  put<std::int32_t>(out, topo.degree());
  put<std::int32_t>(out, topo.n_u());
  put<std::int32_t>(out, topo.n_v());
  put<std::int32_t>(out, state.slab);
  put(out, state.time);
  put<std::uint64_t>(out, state.mesh.points.size());
  for (const auto& x : state.mesh.points) {
    put(out, x.x());
    put(out, x.y());
  }
  put<std::uint64_t>(out, static_cast<std::uint64_t>(state.flow.size()));
  for (Eigen::Index i = 0; i < state.flow.size(); ++i) put(out, state.flow[i]);
  put(out, record.flux_num);
  put(out, record.flux_den);
  put<std::int32_t>(out, static_cast<std::int32_t>(record.status));
  put<std::int32_t>(out, static_cast<std::int32_t>(record.corner));
  put<std::uint64_t>(out, record.rows.size());
  for (const auto& r : record.rows) {
    put(out, r.t);
    put(out, r.mass);
    put(out, r.mass_error);
    for (const auto& c : r.corners) {
      put(out, c.x());
      put(out, c.y());
    }
    put(out, r.min_quality);
  }
  if (!out) throw IoError(fmt::format("write to '{}' failed", path));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open checkpoint '{}'", path));
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0) throw IoError("not a checkpoint file");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw IoError(fmt::format("checkpoint version {} is not supported", version));
  Checkpoint ck;
  ck.basis.lagrange = get<std::int32_t>(in) != 0;
  ck.basis.degree = get<std::int32_t>(in);
  ck.n_u = get<std::int32_t>(in);
  ck.n_v = get<std::int32_t>(in);
  ck.state.slab = get<std::int32_t>(in);
  ck.state.time = get<double>(in);
  const auto np = get<std::uint64_t>(in);
  if (np != static_cast<std::uint64_t>(ck.n_u) * static_cast<std::uint64_t>(ck.n_v))
    throw IoError("corrupt checkpoint: point count");
  ck.state.mesh.points.resize(np);
  for (auto& x : ck.state.mesh.points) {
    x.x() = get<double>(in);
    x.y() = get<double>(in);
  }
  const auto nf = get<std::uint64_t>(in);
  if (nf != 6 * np) throw IoError("corrupt checkpoint: flow size");
  ck.state.flow.resize(static_cast<Eigen::Index>(nf));
  for (Eigen::Index i = 0; i < ck.state.flow.size(); ++i) ck.state.flow[i] = get<double>(in);
  ck.record.flux_num = get<double>(in);
  ck.record.flux_den = get<double>(in);
  const auto status = get<std::int32_t>(in);
  const auto corner = get<std::int32_t>(in);
  if (status < 0 || status > 2 || corner < 0 || corner > 3) throw IoError("corrupt checkpoint: record");
  ck.record.status = static_cast<RunStatus>(status);
  ck.record.corner = static_cast<Corner>(corner);
  const auto nr = get<std::uint64_t>(in);
  if (nr > (1u << 26)) throw IoError("corrupt checkpoint: row count");
  ck.record.rows.resize(nr);
  for (auto& r : ck.record.rows) {
    r.t = get<double>(in);
    r.mass = get<double>(in);
    r.mass_error = get<double>(in);
    for (auto& c : r.corners) {
      c.x() = get<double>(in);
      c.y() = get<double>(in);
    }
    r.min_quality = get<double>(in);
  }
  in.peek();
  if (!in.eof()) throw IoError("corrupt checkpoint: trailing data");
  return ck;
}

SystemState bind_checkpoint(const Checkpoint& ck, const SpatialMesh& reference) {
  const auto& topo = reference.topology();
  if (!(ck.basis == topo.basis()) || ck.n_u != topo.n_u() || ck.n_v != topo.n_v())
    throw IoError(fmt::format("checkpoint is {} {}x{}, run is {} {}x{}", ck.basis.name(), ck.n_u, ck.n_v,
                              topo.basis().name(), topo.n_u(), topo.n_v()));
  SystemState s = ck.state;
  s.mesh.topo = reference.topo;
  return s;
}

}  // namespace fsflow
