#include "fsflow/free_surface.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fsflow/errors.hpp"

namespace fsflow {

DisplacementScheme DisplacementScheme::parse(const std::string& name, Vec2 direction) {
  DisplacementScheme s;
  s.direction = direction;
  if (name == "node-normal")
    s.kind = SchemeKind::NodeNormal;
  else if (name == "greville")
    s.kind = SchemeKind::GrevilleNormal;
  else if (name == "pde-equal")
    s.kind = SchemeKind::PdeEqual;
  else if (name == "pde-normal")
    s.kind = SchemeKind::PdeNormal;
  else if (name == "pde-directional")
    s.kind = SchemeKind::PdeDirectional;
  else
    throw ConfigError(fmt::format("unknown scheme '{}'", name), "scheme");
  return s;
}

std::string DisplacementScheme::name() const {
  switch (kind) {
    case SchemeKind::NodeNormal: return "node-normal";
    case SchemeKind::GrevilleNormal: return "greville";
    case SchemeKind::PdeEqual: return "pde-equal";
    case SchemeKind::PdeNormal: return "pde-normal";
    case SchemeKind::PdeDirectional: return "pde-directional";
  }
  return "?";
}

void DisplacementScheme::validate(const BasisKind& basis) const {
  if (kind == SchemeKind::NodeNormal && basis.is_nurbs())
    throw ConfigError("node-normal requires the q1 basis", "scheme");
  if (kind == SchemeKind::GrevilleNormal && !basis.is_nurbs())
    throw ConfigError("greville requires a spline basis", "scheme");
  if (kind == SchemeKind::PdeDirectional && !(direction.norm() > 0.0))
    throw ConfigError("direction must be nonzero", "direction");
}

std::vector<Vec2> node_normals(std::span<const Vec2> nodes) {
  const size_t n = nodes.size();
  if (n < 2) throw SingularityError("surface needs at least two nodes");
  std::vector<Vec2> out(n, Vec2::Zero());
  for (size_t i = 0; i + 1 < n; ++i) {
    const Vec2 e = nodes[i + 1] - nodes[i];
    if (e.norm() == 0.0) throw SingularityError(fmt::format("zero-length surface face {}", i));
    const Vec2 fn(-e.y(), e.x());
    out[i] += fn;
    out[i + 1] += fn;
  }
  for (auto& v : out) {
    const double l = v.norm();
    if (l == 0.0) throw SingularityError("degenerate averaged normal");
    v /= l;
  }
  return out;
}

std::vector<Vec2> node_normal_update(std::span<const Vec2> nodes, std::span<const Vec2> ubar, double dt) {
  const auto n = node_normals(nodes);
  std::vector<Vec2> out(nodes.begin(), nodes.end());
  for (size_t i = 0; i < out.size(); ++i) out[i] += ubar[i].dot(n[i]) * n[i] * dt;
  return out;
}

std::vector<Vec2> greville_normals(const NurbsCurve& curve) {
  const auto g = greville_abscissae(curve.knot_vector());
  std::vector<Vec2> out;
  out.reserve(g.size());
  for (double th : g) out.push_back(curve_tangent_normal(curve, th).normal);
  return out;
}

std::vector<Vec2> greville_update(const NurbsCurve& curve, std::span<const Vec2> ubar, double dt) {
  const auto n = greville_normals(curve);
  std::vector<Vec2> out = curve.control_points();
  for (size_t i = 0; i < out.size(); ++i) out[i] += ubar[i].dot(n[i]) * n[i] * dt;
  return out;
}

void surface_span_residual(const DisplacementScheme& scheme, const MeshTopology& topo, int eu,
                           std::span<const Vec2> lower, std::span<const Vec2> upper,
                           std::span<const Vec2> u_lower, std::span<const Vec2> u_upper, double dt,
                           Eigen::VectorXd& F1, Eigen::VectorXd& F2) {
  const int p = topo.degree();
  const auto& tab = topo.table_u(eu);
  const auto& rule = topo.rule();
  F1.setZero(p + 1);
  F2.setZero(p + 1);
  const Vec2 d = scheme.direction.normalized();
  for (size_t q = 0; q < rule.space_points.size(); ++q) {
    const double ws = rule.space_weights[q] * tab.width;
    Vec2 v = Vec2::Zero();
    for (int k = 0; k <= p; ++k) v += tab.val(q, k) * (upper[k] - lower[k]) / dt;
    for (size_t tq = 0; tq < rule.time_points.size(); ++tq) {
      const double tau = rule.time_points[tq];
      const double w = ws * rule.time_weights[tq] * dt;
      Vec2 c = Vec2::Zero(), u = Vec2::Zero();
      for (int k = 0; k <= p; ++k) {
        c += tab.d1(q, k) * ((1.0 - tau) * lower[k] + tau * upper[k]);
        u += tab.val(q, k) * ((1.0 - tau) * u_lower[k] + tau * u_upper[k]);
      }
      const Vec2 nt(-c.y(), c.x());
      const double f1 = (v - u).dot(nt);
      double f2 = 0.0;
      switch (scheme.kind) {
        case SchemeKind::PdeEqual:
          f2 = (v - u).dot(c);
          break;
        case SchemeKind::PdeNormal:
          f2 = v.dot(c);
          break;
        case SchemeKind::PdeDirectional: {
          const double dn = d.dot(nt);
          if (std::abs(dn) < 1e-6 * nt.norm())
            throw SingularityError("direction is nearly tangential to the free surface");
          f2 = scheme.vertical() ? v.x() * c.norm() : v.dot(c) - u.dot(nt) * d.dot(c) / dn;
          break;
        }
        default:
          throw ConfigError("point-based schemes have no surface residual", "scheme");
      }
      for (int k = 0; k <= p; ++k) {
        F1[k] += tab.val(q, k) * f1 * w;
        F2[k] += tab.val(q, k) * f2 * w;
      }
    }
  }
}

std::vector<int> free_top_spans(const MeshTopology& topo) {
  std::vector<int> out;
  for (int k = 0; k < topo.num_edge_spans(Edge::Top); ++k)
    if (topo.edge_span_tag(Edge::Top, k) == BoundaryTag::Free) out.push_back(k);
  return out;
}

SurfaceResidual assemble_surface_residual(const DisplacementScheme& scheme, const SpaceTimeSlab& slab,
                                          std::span<const double> flow) {
  const auto& topo = slab.lower.topology();
  const int p = topo.degree();
  const auto top = topo.edge_points(Edge::Top);
  SurfaceResidual out;
  out.f1.assign(topo.num_points(), 0.0);
  out.f2.assign(topo.num_points(), 0.0);
  std::vector<Vec2> xl(p + 1), xu(p + 1), ul(p + 1), uu(p + 1);
  Eigen::VectorXd F1, F2;
  for (int eu : free_top_spans(topo)) {
    const int s = topo.table_u(eu).span;
    for (int k = 0; k <= p; ++k) {
      const int a = top[s - p + k];
      xl[k] = slab.lower.points[a];
      xu[k] = slab.upper.points[a];
      ul[k] = Vec2(flow[6 * a], flow[6 * a + 1]);
      uu[k] = Vec2(flow[6 * a + 3], flow[6 * a + 4]);
    }
    surface_span_residual(scheme, topo, eu, xl, xu, ul, uu, slab.dt(), F1, F2);
    for (int k = 0; k <= p; ++k) {
      out.f1[top[s - p + k]] += F1[k];
      out.f2[top[s - p + k]] += F2[k];
    }
  }
  return out;
}

}  // namespace fsflow
