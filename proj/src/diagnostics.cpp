#include "fsflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fsflow/errors.hpp"
#include "fsflow/free_surface.hpp"

namespace fsflow {

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Tangled: return "tangled";
    case RunStatus::Diverged: return "diverged";
  }
  return "?";
}

double compute_mass(const SpatialMesh& mesh, double rho) {
  const auto& topo = mesh.topology();
  const int nq = static_cast<int>(topo.rule().space_points.size());
  ParamBasis pb;
  double area = 0.0;
  for (const auto& el : topo.elements())
    for (int qv = 0; qv < nq; ++qv)
      for (int qu = 0; qu < nq; ++qu) {
        tabulate_element_point(topo, el, qu, qv, pb);
        Mat2 J = Mat2::Zero();
        for (size_t a = 0; a < el.points.size(); ++a) {
          J.col(0) += pb.nu[a] * mesh.points[el.points[a]];
          J.col(1) += pb.nv[a] * mesh.points[el.points[a]];
        }
        area += J.determinant() * pb.weight;
      }
  return rho * area;
}

double mass_error(double m, double m0) {
  if (m0 == 0.0) throw DomainError("reference mass is zero");
  return std::abs(m / m0 - 1.0);
}

FluxIntegrals flux_integrals(const SpaceTimeSlab& slab, const Eigen::VectorXd& flow, int space_points,
                             int time_points) {
  const auto& topo = slab.lower.topology();
  const int p = topo.degree();
  const auto top = topo.edge_points(Edge::Top);
  std::vector<double> sp, sw, tp, tw;
  gauss_legendre(space_points, sp, sw);
  gauss_legendre(time_points, tp, tw);
  const double dt = slab.dt();
  Eigen::MatrixXd b(2, p + 1);
  FluxIntegrals out;
  for (int eu : free_top_spans(topo)) {
    const auto& tab = topo.table_u(eu);
    const int s = tab.span;
    for (size_t q = 0; q < sp.size(); ++q) {
      basis_derivatives_in_span(topo.knots_u(), s, tab.lo + sp[q] * tab.width, 1, b);
      Vec2 v = Vec2::Zero();
      for (int k = 0; k <= p; ++k) {
        const int a = top[s - p + k];
        v += b(0, k) * (slab.upper.points[a] - slab.lower.points[a]) / dt;
      }
      for (size_t tq = 0; tq < tp.size(); ++tq) {
        const double tau = tp[tq];
        Vec2 c = Vec2::Zero(), u = Vec2::Zero();
        for (int k = 0; k <= p; ++k) {
          const int a = top[s - p + k];
          c += b(1, k) * ((1.0 - tau) * slab.lower.points[a] + tau * slab.upper.points[a]);
          u += b(0, k) * Vec2((1.0 - tau) * flow[6 * a] + tau * flow[6 * a + 3],
                              (1.0 - tau) * flow[6 * a + 1] + tau * flow[6 * a + 4]);
        }
        const double len = c.norm();
        const Vec2 n = Vec2(-c.y(), c.x()) / len;
        const double w = sw[q] * tab.width * tw[tq] * dt * len;
        const double diff = (u - v).dot(n);
        out.num += diff * diff * w;
        out.den += w;
      }
    }
  }
  return out;
}

FluxIntegrals flux_integrals(const SpaceTimeSlab& slab, const Eigen::VectorXd& flow) {
  return flux_integrals(slab, flow, slab.lower.topology().degree() + 3, 3);
}

double flux_error(const RunRecord& run) {
  if (run.flux_den == 0.0) throw DomainError("no free-surface measure accumulated");
  return std::sqrt(run.flux_num / run.flux_den);
}

std::vector<std::pair<double, Vec2>> corner_trajectory(const RunRecord& run, Corner corner) {
  std::vector<std::pair<double, Vec2>> out;
  out.reserve(run.rows.size());
  for (const auto& r : run.rows) out.emplace_back(r.t, r.corners[static_cast<int>(corner)]);
  return out;
}

double mesh_quality(const SpatialMesh& mesh) {
  const auto& topo = mesh.topology();
  const int p = topo.degree();
  const int ns = p + 2;
  Eigen::MatrixXd bu(2, p + 1), bv(2, p + 1);
  double quality = 1.0;
  for (const auto& el : topo.elements()) {
    const auto& tu = topo.table_u(el.eu);
    const auto& tv = topo.table_v(el.ev);
    double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
    for (int jv = 0; jv < ns; ++jv) {
      basis_derivatives_in_span(topo.knots_v(), el.span_v, tv.lo + tv.width * jv / (ns - 1.0), 1, bv);
      for (int ju = 0; ju < ns; ++ju) {
        basis_derivatives_in_span(topo.knots_u(), el.span_u, tu.lo + tu.width * ju / (ns - 1.0), 1, bu);
        Mat2 J = Mat2::Zero();
        for (int l = 0; l <= p; ++l)
          for (int k = 0; k <= p; ++k) {
            const Vec2& x = mesh.points[el.points[k + (p + 1) * l]];
            J.col(0) += bu(1, k) * bv(0, l) * x;
            J.col(1) += bu(0, k) * bv(1, l) * x;
          }
        const double d = J.determinant();
        dmin = std::min(dmin, d);
        dmax = std::max(dmax, d);
      }
    }
    if (!(dmin > 0.0)) return 0.0;
    quality = std::min(quality, dmin / dmax);
  }
  return quality;
}

RunRow make_row(double t, const SpatialMesh& mesh, double rho, double m0) {
  RunRow r;
  r.t = t;
  r.mass = compute_mass(mesh, rho);
  r.mass_error = mass_error(r.mass, m0);
  const auto& topo = mesh.topology();
  for (int c = 0; c < 4; ++c) r.corners[c] = mesh.points[topo.corner_point(static_cast<Corner>(c))];
  r.min_quality = mesh_quality(mesh);
  return r;
}

}  // namespace fsflow
