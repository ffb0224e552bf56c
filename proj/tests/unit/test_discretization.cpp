#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fsflow/cases.hpp"
#include "fsflow/discretization.hpp"
#include "fsflow/errors.hpp"

using namespace fsflow;

namespace {

BoundaryTagging tank_tags() {
  return {{Edge::Bottom, 0, 1, BoundaryTag::Slip},
          {Edge::Left, 0, 1, BoundaryTag::Slip},
          {Edge::Right, 0, 1, BoundaryTag::Slip},
          {Edge::Top, 0, 1, BoundaryTag::Free}};
}

// Area via the slab map at time fraction tau with an n-point Gauss rule.
double quadrature_area(const SpaceTimeSlab& slab, double tau, int n) {
  std::vector<double> q, w;
  gauss_legendre(n, q, w);
  double a = 0.0;
  for (int e = 0; e < slab.lower.num_elements(); ++e)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a += 4.0 * w[i] * w[j] * geometry_map(slab, e, 2 * q[i] - 1, 2 * q[j] - 1, tau).det;
  return a;
}

double shoelace(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (size_t k = 0; k < poly.size(); ++k) {
    const auto& p = poly[k];
    const auto& q = poly[(k + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

}  // namespace

TEST(BasisKind, ParseAndName) {
  EXPECT_EQ(BasisKind::parse("q1"), BasisKind::q1());
  EXPECT_EQ(BasisKind::parse("nurbs2"), BasisKind::nurbs(2));
  EXPECT_EQ(BasisKind::parse("nurbs3").name(), "nurbs3");
  EXPECT_THROW(BasisKind::parse("nurbs1"), ConfigError);
  EXPECT_THROW(BasisKind::parse("p2"), ConfigError);
}

TEST(BuildMesh, Q1Counts) {
  const auto m = build_mesh({}, 12, 12, BasisKind::q1(), tank_tags());
  EXPECT_EQ(m.num_points(), 144);
  EXPECT_EQ(m.num_elements(), 121);
}

TEST(BuildMesh, SplineCounts) {
  const auto m = build_mesh({}, 12, 12, BasisKind::nurbs(2), tank_tags());
  EXPECT_EQ(m.num_points(), 144);
  EXPECT_EQ(m.num_elements(), 100);
  EXPECT_EQ(m.topology().num_elements_u(), 10);
}

TEST(BuildMesh, ResolutionBelowMinimum) {
  EXPECT_THROW(build_mesh({}, 1, 5, BasisKind::q1(), tank_tags()), ConfigError);
  EXPECT_THROW(build_mesh({}, 3, 2, BasisKind::nurbs(2), tank_tags()), ConfigError);
  EXPECT_NO_THROW(build_mesh({}, 3, 3, BasisKind::nurbs(2), tank_tags()));
}

TEST(BuildMesh, UntaggedBoundaryIsRejected) {
  BoundaryTagging t = tank_tags();
  t.pop_back();
  EXPECT_THROW(build_mesh({}, 5, 5, BasisKind::q1(), t), ConfigError);
}

TEST(BuildMesh, SloshingTags) {
  const auto cfg = sloshing_case();
  const auto m = build_case_mesh(cfg);
  const auto& topo = m.topology();
  for (Edge e : {Edge::Bottom, Edge::Left, Edge::Right})
    for (int k = 0; k < topo.num_edge_spans(e); ++k) EXPECT_EQ(topo.edge_span_tag(e, k), BoundaryTag::Slip);
  for (int k = 0; k < topo.num_edge_spans(Edge::Top); ++k) EXPECT_EQ(topo.edge_span_tag(Edge::Top, k), BoundaryTag::Free);
}

TEST(BuildMesh, TagsPartitionTheBoundary) {
  const auto cfg = die_swell_case();
  for (auto basis : {BasisKind::q1(), BasisKind::nurbs(2)}) {
    const auto m = build_mesh(cfg.rect, cfg.n_u, cfg.n_v, basis, cfg.tags);
    const auto& topo = m.topology();
    int total = 0, tagged = 0;
    for (int ei = 0; ei < 4; ++ei) {
      const Edge e = static_cast<Edge>(ei);
      total += topo.num_edge_spans(e);
      for (int k = 0; k < topo.num_edge_spans(e); ++k) {
        const auto t = topo.edge_span_tag(e, k);
        tagged += t == BoundaryTag::Free || t == BoundaryTag::Slip || t == BoundaryTag::NoSlip ||
                  t == BoundaryTag::Inflow || t == BoundaryTag::Outflow || t == BoundaryTag::Fixed;
      }
    }
    EXPECT_EQ(total, 2 * (topo.num_elements_u() + topo.num_elements_v()));
    EXPECT_EQ(tagged, total);
  }
}

TEST(BuildMesh, DieSwellLipOnSplineMesh) {
  const auto cfg = die_swell_case();
  const auto m = build_case_mesh(cfg);
  const auto& topo = m.topology();
  // 84 spans of width 60/84; x = 20 falls on a knot
  int noslip = 0;
  for (int k = 0; k < topo.num_edge_spans(Edge::Top); ++k) noslip += topo.edge_span_tag(Edge::Top, k) == BoundaryTag::NoSlip;
  EXPECT_EQ(noslip, 28);
  EXPECT_EQ(m.points[topo.corner_point(Corner::TopRight)], Vec2(60, 10));
}

TEST(Quadrature, PointCounts) {
  EXPECT_EQ(quadrature_rule(BasisKind::q1()).num_points(), 8);
  EXPECT_EQ(quadrature_rule(BasisKind::nurbs(2)).num_points(), 18);
  EXPECT_EQ(quadrature_rule(BasisKind::nurbs(3)).num_points(), 32);
}

TEST(Quadrature, WeightsSumToReferenceMeasure) {
  for (auto b : {BasisKind::q1(), BasisKind::nurbs(2), BasisKind::nurbs(4)})
    EXPECT_NEAR(quadrature_rule(b).weight_sum(), 1.0, 1e-14);
}

TEST(Quadrature, GaussExactness) {
  for (int n = 1; n <= 6; ++n) {
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += w[i] * std::pow(x[i], k);
      EXPECT_NEAR(s, 1.0 / (k + 1), 1e-14);
    }
  }
}

TEST(Slab, CountAndLowerLevel) {
  const auto cfg = sloshing_case();
  Simulation sim(build_case_mesh(cfg), problem_setup(cfg), 0.2, 50.0);
  EXPECT_EQ(sim.num_slabs(), 250);
  const auto mesh = build_case_mesh(cfg);
  const auto slab = build_slab(mesh, 0.0, 0.2);
  EXPECT_EQ(slab.lower.points, mesh.points);
  EXPECT_EQ(slab.upper.points, mesh.points);
  EXPECT_THROW(build_slab(mesh, 0.0, 0.0), DomainError);
}

TEST(GeometryMap, StaticSlabHasZeroMeshVelocity) {
  const auto m = build_case_mesh(sloshing_case());
  const auto slab = build_slab(m, 0.0, 0.2);
  for (int e : {0, 17, 99})
    for (double tau : {0.0, 0.5, 1.0}) EXPECT_EQ(geometry_map(slab, e, 0.3, -0.2, tau).mesh_velocity, Vec2::Zero());
}

TEST(GeometryMap, TranslatedUpperLevel) {
  const auto m = build_case_mesh(sloshing_case());
  auto slab = build_slab(m, 1.0, 0.2);
  const double c = 0.05;
  for (auto& x : slab.upper.points) x.y() += c;
  for (int e : {0, 42, 99}) {
    const auto g0 = geometry_map(slab, e, -0.5, 0.5, 0.0);
    const auto g = geometry_map(slab, e, -0.5, 0.5, 0.25);
    EXPECT_NEAR(g.mesh_velocity.x(), 0.0, 1e-14);
    EXPECT_NEAR(g.mesh_velocity.y(), c / 0.2, 1e-12);
    EXPECT_NEAR(g.x.y() - g0.x.y(), 0.25 * c, 1e-14);
  }
}

TEST(GeometryMap, UniformMeshDeterminant) {
  for (auto [basis, n] : {std::pair{BasisKind::q1(), 12}, std::pair{BasisKind::nurbs(2), 12}}) {
    const auto m = build_mesh({}, n, n, basis, tank_tags());
    const int ne = m.topology().num_elements_u();
    const double h = 1.0 / ne;
    const auto slab = build_slab(m, 0.0, 0.1);
    for (int e = 0; e < m.num_elements(); e += 7) EXPECT_NEAR(geometry_map(slab, e, 0.1, 0.9, 0.5).det, h * h / 4, 1e-14);
  }
}

TEST(GeometryMap, TangledElementThrows) {
  auto m = build_mesh({}, 3, 3, BasisKind::q1(), tank_tags());
  std::swap(m.points[0], m.points[1]);
  const auto slab = build_slab(m, 0.0, 0.1);
  EXPECT_THROW(geometry_map(slab, 0, 0.0, 0.0, 0.0), TangledMeshError);
}

TEST(GeometryMap, AreaOfQ1SloshingMesh) {
  auto cfg = sloshing_case();
  cfg.basis = BasisKind::q1();
  const auto m = build_case_mesh(cfg);
  const auto& topo = m.topology();
  std::vector<Vec2> poly;
  for (int a : topo.edge_points(Edge::Bottom)) poly.push_back(m.points[a]);
  auto right = topo.edge_points(Edge::Right);
  for (size_t k = 1; k < right.size(); ++k) poly.push_back(m.points[right[k]]);
  auto top = topo.edge_points(Edge::Top);
  for (size_t k = top.size() - 1; k-- > 0;) poly.push_back(m.points[top[k]]);
  auto left = topo.edge_points(Edge::Left);
  for (size_t k = left.size() - 1; k-- > 1;) poly.push_back(m.points[left[k]]);
  auto slab = build_slab(m, 0.0, 0.2);
  const double exact = shoelace(poly);
  EXPECT_NEAR(quadrature_area(slab, 0.0, 2), exact, 1e-10 * exact);
  EXPECT_NEAR(quadrature_area(slab, 1.0, 2), exact, 1e-10 * exact);
}

TEST(GeometryMap, AreaOfSplineSloshingMesh) {
  const auto cfg = sloshing_case();
  const auto m = build_case_mesh(cfg);
  const auto& topo = m.topology();
  // x(u) = u and y(u, v) = v * top(u), so the area is the integral of the
  // top curve: sum_i h_i (t_{i+p+1} - t_i) / (p + 1).
  const auto& k = topo.knots_u().knots();
  const int p = topo.degree();
  double exact = 0.0;
  const auto top = topo.edge_points(Edge::Top);
  for (int i = 0; i < topo.n_u(); ++i) exact += m.points[top[i]].y() * (k[i + p + 1] - k[i]) / (p + 1);
  auto slab = build_slab(m, 0.0, 0.2);
  EXPECT_NEAR(quadrature_area(slab, 0.0, 3), exact, 1e-10 * exact);
  EXPECT_NEAR(quadrature_area(slab, 1.0, 3), exact, 1e-10 * exact);
  EXPECT_NEAR(exact, 1.0, 1e-3);
}

TEST(DofMap, RoundTripOnRandomMeshes) {
  std::mt19937 g(3);
  std::uniform_int_distribution<int> N(3, 9), P(1, 3), B(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = P(g);
    const BasisKind basis = p == 1 ? BasisKind::q1() : BasisKind::nurbs(p);
    const auto m = build_mesh({}, N(g) + p, N(g) + p, basis, tank_tags());
    const auto& topo = m.topology();
    const auto top = topo.edge_points(Edge::Top);
    const bool with_mesh = B(g);
    const DofMap d(topo, top, with_mesh);
    std::set<int> seen;
    for (int a = 0; a < topo.num_points(); ++a)
      for (int f = 0; f < 7; ++f)
        for (int l = 0; l < 2; ++l) {
          const int idx = d.index(a, static_cast<Field>(f), static_cast<Level>(l));
          if (idx < 0) continue;
          EXPECT_TRUE(seen.insert(idx).second);
          const auto& key = d.key(idx);
          EXPECT_EQ(key.point, a);
          EXPECT_EQ(static_cast<int>(key.field), f);
          EXPECT_EQ(static_cast<int>(key.level), l);
        }
    EXPECT_EQ(static_cast<int>(seen.size()), d.size());
    const int expected = 6 * topo.num_points() + 2 * static_cast<int>(top.size()) +
                         (with_mesh ? 2 * (topo.num_points() - static_cast<int>(top.size())) : 0);
    EXPECT_EQ(d.size(), expected);
    // surface unknowns only on surface points, upper level only
    EXPECT_EQ(d.index(top[0], Field::Sx, Level::Lower), -1);
    EXPECT_EQ(d.index(0, Field::Sy), -1);
  }
}
