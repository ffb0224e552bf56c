#include "fsflow/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "fsflow/errors.hpp"

namespace fsflow {

std::string BasisKind::name() const {
  return lagrange ? std::string("q1") : fmt::format("nurbs{}", degree);
}

BasisKind BasisKind::parse(const std::string& s) {
  if (s == "q1") return q1();
  if (s.rfind("nurbs", 0) == 0 && s.size() > 5) {
    int p = 0;
    try {
      size_t used = 0;
      p = std::stoi(s.substr(5), &used);
      if (used != s.size() - 5) p = 0;
    } catch (const std::exception&) {
      p = 0;
    }
    if (p >= 2 && p <= 7) return nurbs(p);
  }
  throw ConfigError(fmt::format("unknown basis '{}' (expected q1 or nurbsP)", s), "basis");
}

std::string to_string(BoundaryTag t) {
  switch (t) {
    case BoundaryTag::Free: return "free";
    case BoundaryTag::Fixed: return "fixed";
    case BoundaryTag::Slip: return "slip";
    case BoundaryTag::Inflow: return "inflow";
    case BoundaryTag::Outflow: return "outflow";
    case BoundaryTag::NoSlip: return "noslip";
  }
  return "?";
}

std::string to_string(Edge e) {
  switch (e) {
    case Edge::Bottom: return "bottom";
    case Edge::Right: return "right";
    case Edge::Top: return "top";
    case Edge::Left: return "left";
  }
  return "?";
}

void gauss_legendre(int n, std::vector<double>& points, std::vector<double>& weights) {
  points.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) p0 = 1.0, p1 = x;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Map [-1,1] -> [0,1], ascending order.
    points[i] = 0.5 * (1.0 - x);
    points[n - 1 - i] = 0.5 * (1.0 + x);
    weights[i] = weights[n - 1 - i] = 0.5 * w;
  }
  if (n % 2 == 1) points[n / 2] = 0.5;
}

double QuadratureRule::weight_sum() const {
  double s = 0.0;
  for (double wu : space_weights)
    for (double wv : space_weights)
      for (double wt : time_weights) s += wu * wv * wt;
  return s;
}

QuadratureRule quadrature_rule(const BasisKind& basis) {
  QuadratureRule r;
  gauss_legendre(basis.degree + 1, r.space_points, r.space_weights);
  gauss_legendre(2, r.time_points, r.time_weights);
  return r;
}

namespace {

std::vector<SpanTable> tabulate(const KnotVector& kv, const QuadratureRule& rule) {
  std::vector<SpanTable> out;
  const int p = kv.degree();
  const int nq = static_cast<int>(rule.space_points.size());
  Eigen::MatrixXd tab(3, p + 1);
  for (int s : kv.nonempty_spans()) {
    SpanTable t;
    t.span = s;
    t.lo = kv.knots()[s];
    t.width = kv.knots()[s + 1] - t.lo;
    t.val.resize(nq, p + 1);
    t.d1.resize(nq, p + 1);
    t.d2.resize(nq, p + 1);
    for (int q = 0; q < nq; ++q) {
      basis_derivatives_in_span(kv, s, t.lo + t.width * rule.space_points[q], 2, tab);
      t.val.row(q) = tab.row(0);
      t.d1.row(q) = tab.row(1);
      t.d2.row(q) = tab.row(2);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

MeshTopology::MeshTopology(BasisKind basis, KnotVector ku, KnotVector kv, const BoundaryTagging& tags)
    : basis_(basis), ku_(std::move(ku)), kv_(std::move(kv)), rule_(quadrature_rule(basis)) {
  if (ku_.degree() != basis_.degree || kv_.degree() != basis_.degree)
    throw ConfigError("knot vector degree does not match basis degree", "basis");
  tab_u_ = tabulate(ku_, rule_);
  tab_v_ = tabulate(kv_, rule_);

  const int p = degree();
  for (int ev = 0; ev < num_elements_v(); ++ev)
    for (int eu = 0; eu < num_elements_u(); ++eu) {
      Element el;
      el.index = static_cast<int>(elements_.size());
      el.eu = eu;
      el.ev = ev;
      el.span_u = tab_u_[eu].span;
      el.span_v = tab_v_[ev].span;
      for (int l = 0; l <= p; ++l)
        for (int k = 0; k <= p; ++k) el.points.push_back(point_index(el.span_u - p + k, el.span_v - p + l));
      elements_.push_back(std::move(el));
    }

  // Resolve tags per boundary span by span midpoint.
  for (int ei = 0; ei < 4; ++ei) {
    const Edge e = static_cast<Edge>(ei);
    const auto& tabs = (edge_normal_axis(e) == 1) ? tab_u_ : tab_v_;
    const auto& kvec = (edge_normal_axis(e) == 1) ? ku_ : kv_;
    const double a = kvec.front(), b = kvec.back();
    std::vector<int> set(tabs.size(), 0);
    edge_tags_[ei].assign(tabs.size(), BoundaryTag::Fixed);
    for (const auto& r : tags) {
      if (r.edge != e) continue;
      for (size_t k = 0; k < tabs.size(); ++k) {
        const double mid = (tabs[k].lo + 0.5 * tabs[k].width - a) / (b - a);
        if (mid >= r.from && mid <= r.to) {
          edge_tags_[ei][k] = r.tag;
          set[k] = 1;
        }
      }
    }
    for (size_t k = 0; k < tabs.size(); ++k)
      if (!set[k])
        throw ConfigError(fmt::format("boundary span {} of the {} edge has no tag", k, to_string(e)), "tags");
  }

  point_tags_.assign(num_points(), {});
  for (int ei = 0; ei < 4; ++ei) {
    const Edge e = static_cast<Edge>(ei);
    const auto pts = edge_points(e);
    const auto& tabs = (edge_normal_axis(e) == 1) ? tab_u_ : tab_v_;
    for (size_t k = 0; k < tabs.size(); ++k) {
      const int s = tabs[k].span;
      for (int i = s - p; i <= s; ++i) point_tags_[pts[i]].emplace_back(e, edge_tags_[ei][k]);
    }
  }
}

int MeshTopology::num_edge_spans(Edge e) const {
  return edge_normal_axis(e) == 1 ? num_elements_u() : num_elements_v();
}

std::vector<int> MeshTopology::edge_points(Edge e) const {
  std::vector<int> out;
  switch (e) {
    case Edge::Bottom:
      for (int i = 0; i < n_u(); ++i) out.push_back(point_index(i, 0));
      break;
    case Edge::Top:
      for (int i = 0; i < n_u(); ++i) out.push_back(point_index(i, n_v() - 1));
      break;
    case Edge::Left:
      for (int j = 0; j < n_v(); ++j) out.push_back(point_index(0, j));
      break;
    case Edge::Right:
      for (int j = 0; j < n_v(); ++j) out.push_back(point_index(n_u() - 1, j));
      break;
  }
  return out;
}

int MeshTopology::edge_element(Edge e, int k) const {
  switch (e) {
    case Edge::Bottom: return k;
    case Edge::Top: return k + num_elements_u() * (num_elements_v() - 1);
    case Edge::Left: return num_elements_u() * k;
    case Edge::Right: return num_elements_u() - 1 + num_elements_u() * k;
  }
  return -1;
}

int MeshTopology::corner_point(Corner c) const {
  switch (c) {
    case Corner::BottomLeft: return point_index(0, 0);
    case Corner::BottomRight: return point_index(n_u() - 1, 0);
    case Corner::TopRight: return point_index(n_u() - 1, n_v() - 1);
    case Corner::TopLeft: return point_index(0, n_v() - 1);
  }
  return -1;
}

bool MeshTopology::point_has_tag(int point, BoundaryTag t) const {
  for (const auto& [e, tag] : point_tags_[point])
    if (tag == t) return true;
  return false;
}

SpatialMesh build_mesh(const Rectangle& rect, int n_u, int n_v, const BasisKind& basis,
                       const BoundaryTagging& tags) {
  const int min_n = basis.lagrange ? 2 : basis.degree + 1;
  if (n_u < min_n || n_v < min_n)
    throw ConfigError(fmt::format("resolution {}x{} below minimum {} for basis {}", n_u, n_v, min_n,
                                  basis.name()),
                      "mesh");
  if (basis.lagrange && basis.degree != 1) throw ConfigError("Lagrange basis must be bilinear", "basis");
  auto ku = KnotVector::open_uniform(basis.degree, n_u);
  auto kv = KnotVector::open_uniform(basis.degree, n_v);
  const auto gu = greville_abscissae(ku);
  const auto gv = greville_abscissae(kv);
  SpatialMesh m;
  m.topo = std::make_shared<MeshTopology>(basis, std::move(ku), std::move(kv), tags);
  m.points.resize(static_cast<size_t>(n_u) * n_v);
  for (int j = 0; j < n_v; ++j)
    for (int i = 0; i < n_u; ++i)
      m.points[i + n_u * j] =
          Vec2(rect.x0 + (rect.x1 - rect.x0) * gu[i], rect.y0 + (rect.y1 - rect.y0) * gv[j]);
  return m;
}

SpaceTimeSlab build_slab(const SpatialMesh& prev, double t0, double dt) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  return SpaceTimeSlab{t0, t0 + dt, prev, prev};
}

void ParamBasis::resize(int np) {
  n.resize(np);
  nu.resize(np);
  nv.resize(np);
  nuu.resize(np);
  nuv.resize(np);
  nvv.resize(np);
}

void tabulate_element_point(const MeshTopology& topo, const Element& el, int qu, int qv, ParamBasis& out) {
  const auto& tu = topo.table_u(el.eu);
  const auto& tv = topo.table_v(el.ev);
  const int p1 = topo.degree() + 1;
  out.resize(p1 * p1);
  for (int l = 0; l < p1; ++l)
    for (int k = 0; k < p1; ++k) {
      const int a = k + p1 * l;
      out.n[a] = tu.val(qu, k) * tv.val(qv, l);
      out.nu[a] = tu.d1(qu, k) * tv.val(qv, l);
      out.nv[a] = tu.val(qu, k) * tv.d1(qv, l);
      out.nuu[a] = tu.d2(qu, k) * tv.val(qv, l);
      out.nuv[a] = tu.d1(qu, k) * tv.d1(qv, l);
      out.nvv[a] = tu.val(qu, k) * tv.d2(qv, l);
    }
  const auto& r = topo.rule();
  out.weight = r.space_weights[qu] * r.space_weights[qv] * tu.width * tv.width;
}

namespace {

template <typename F>
void for_each_basis(const MeshTopology& topo, double u, double v, F&& f) {
  const auto bu = basis_derivatives(topo.knots_u(), u, 1);
  const auto bv = basis_derivatives(topo.knots_v(), v, 1);
  const int p = topo.degree();
  for (int l = 0; l <= p; ++l)
    for (int k = 0; k <= p; ++k)
      f(topo.point_index(bu.span - p + k, bv.span - p + l), bu.table(0, k) * bv.table(0, l),
        bu.table(1, k) * bv.table(0, l), bu.table(0, k) * bv.table(1, l));
}

}  // namespace

PatchPoint eval_geometry(const MeshTopology& topo, const std::vector<Vec2>& points, double u, double v) {
  PatchPoint out{Vec2::Zero(), Mat2::Zero()};
  for_each_basis(topo, u, v, [&](int a, double n, double nu, double nv) {
    out.x += n * points[a];
    out.jacobian.col(0) += nu * points[a];
    out.jacobian.col(1) += nv * points[a];
  });
  return out;
}

Vec2 eval_field(const MeshTopology& topo, const std::vector<Vec2>& values, double u, double v) {
  Vec2 out = Vec2::Zero();
  for_each_basis(topo, u, v, [&](int a, double n, double, double) { out += n * values[a]; });
  return out;
}

GeometryPoint geometry_map(const SpaceTimeSlab& slab, int e, double xi, double eta, double tau) {
  const auto& topo = slab.lower.topology();
  if (e < 0 || e >= topo.num_elements()) throw DomainError(fmt::format("element {} out of range", e));
  if (tau < 0.0 || tau > 1.0) throw DomainError("time fraction outside [0,1]");
  const auto& el = topo.element(e);
  const auto& tu = topo.table_u(el.eu);
  const auto& tv = topo.table_v(el.ev);
  const double u = tu.lo + 0.5 * (xi + 1.0) * tu.width;
  const double v = tv.lo + 0.5 * (eta + 1.0) * tv.width;
  const int p = topo.degree();
  Eigen::MatrixXd bu(2, p + 1), bv(2, p + 1);
  basis_derivatives_in_span(topo.knots_u(), el.span_u, u, 1, bu);
  basis_derivatives_in_span(topo.knots_v(), el.span_v, v, 1, bv);
  GeometryPoint g{Vec2::Zero(), Mat2::Zero(), 0.0, Vec2::Zero()};
  const double dt = slab.dt();
  for (int l = 0; l <= p; ++l)
    for (int k = 0; k <= p; ++k) {
      const int a = el.points[k + (p + 1) * l];
      const Vec2 x = (1.0 - tau) * slab.lower.points[a] + tau * slab.upper.points[a];
      const double n = bu(0, k) * bv(0, l);
      g.x += n * x;
      g.jacobian.col(0) += bu(1, k) * bv(0, l) * 0.5 * tu.width * x;
      g.jacobian.col(1) += bu(0, k) * bv(1, l) * 0.5 * tv.width * x;
      g.mesh_velocity += n * (slab.upper.points[a] - slab.lower.points[a]) / dt;
    }
  g.det = g.jacobian.determinant();
  if (!(g.det > 0.0))
    throw TangledMeshError(fmt::format("nonpositive Jacobian {} in element {}", g.det, e), slab.t0);
  return g;
}

DofMap::DofMap(const MeshTopology& topo, std::vector<int> surface_points, bool with_mesh)
    : num_points_(topo.num_points()),
      flow_size_(6 * topo.num_points()),
      with_mesh_(with_mesh),
      surface_points_(std::move(surface_points)) {
  surface_slot_.assign(num_points_, -1);
  for (size_t s = 0; s < surface_points_.size(); ++s) surface_slot_[surface_points_[s]] = static_cast<int>(s);
  keys_.reserve(flow_size_ + 2 * num_points_);
  for (int a = 0; a < num_points_; ++a)
    for (int l = 0; l < 2; ++l)
      for (int c = 0; c < 3; ++c) keys_.push_back({a, static_cast<Field>(c), static_cast<Level>(l)});
  geom_index_.assign(2 * num_points_, -1);
  for (int a : surface_points_)
    for (int c = 0; c < 2; ++c) {
      geom_index_[2 * a + c] = static_cast<int>(keys_.size());
      keys_.push_back({a, c == 0 ? Field::Sx : Field::Sy, Level::Upper});
    }
  if (with_mesh_)
    for (int a = 0; a < num_points_; ++a) {
      if (surface_slot_[a] >= 0) continue;
      for (int c = 0; c < 2; ++c) {
        geom_index_[2 * a + c] = static_cast<int>(keys_.size());
        keys_.push_back({a, c == 0 ? Field::Zx : Field::Zy, Level::Upper});
      }
    }
  dirichlet_.assign(keys_.size(), 0);
  prescribed_.assign(keys_.size(), 0.0);
}

int DofMap::index(int point, Field f, Level l) const {
  if (point < 0 || point >= num_points_) return -1;
  switch (f) {
    case Field::Ux:
    case Field::Uy:
    case Field::P:
      return flow(point, static_cast<int>(l), static_cast<int>(f));
    case Field::Sx:
    case Field::Sy:
      if (l != Level::Upper || surface_slot_[point] < 0) return -1;
      return geom_index_[2 * point + (f == Field::Sx ? 0 : 1)];
    case Field::Zx:
    case Field::Zy:
      if (l != Level::Upper || !with_mesh_ || surface_slot_[point] >= 0) return -1;
      return geom_index_[2 * point + (f == Field::Zx ? 0 : 1)];
  }
  return -1;
}

void DofMap::constrain(int idx, double value) {
  dirichlet_[idx] = 1;
  prescribed_[idx] = value;
}

}  // namespace fsflow
