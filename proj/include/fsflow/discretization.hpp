#pragma once

// Structured single-patch meshes for bilinear Lagrange and B-spline bases,
// boundary tagging, space-time quadrature, slabs and the slab geometry map.
//
// A LagrangeQ1 mesh is stored as a degree-1 B-spline patch with open uniform
// knots: the hat functions coincide with bilinear nodal shape functions and
// the control points are the nodes.

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "fsflow/splines.hpp"

namespace fsflow {

struct BasisKind {
  bool lagrange = true;
  int degree = 1;

  static BasisKind q1() { return {true, 1}; }
  static BasisKind nurbs(int p) { return {false, p}; }
  bool is_nurbs() const noexcept { return !lagrange; }
  std::string name() const;
  /// Parses "q1", "nurbs2", "nurbs3", ... Throws ConfigError.
  static BasisKind parse(const std::string& s);
  bool operator==(const BasisKind&) const = default;
};

enum class BoundaryTag { Free, Fixed, Slip, Inflow, Outflow, NoSlip };
enum class Edge { Bottom = 0, Right = 1, Top = 2, Left = 3 };
enum class Corner { BottomLeft, BottomRight, TopRight, TopLeft };

std::string to_string(BoundaryTag t);
std::string to_string(Edge e);

/// Cartesian axis normal to an edge of the (axis-aligned) patch boundary.
inline int edge_normal_axis(Edge e) { return (e == Edge::Bottom || e == Edge::Top) ? 1 : 0; }

struct Rectangle {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

/// Tag for the part of an edge between two fractions of its length, measured
/// in the direction of increasing x (bottom/top) or y (left/right).
struct TagRange {
  Edge edge;
  double from = 0.0;
  double to = 1.0;
  BoundaryTag tag;
};

/// Boundary spans take the tag of the last range containing their midpoint.
using BoundaryTagging = std::vector<TagRange>;

/// Per-span 1D basis data at the spatial Gauss points of one knot span.
struct SpanTable {
  int span = 0;          ///< knot span index
  double lo = 0.0;       ///< parametric span start
  double width = 0.0;    ///< parametric span width
  Eigen::MatrixXd val;   ///< (nq) x (p+1)
  Eigen::MatrixXd d1;
  Eigen::MatrixXd d2;
};

/// Tensor-product Gauss rule on one space-time element: (p+1)^2 spatial
/// points times 2 temporal points, on the unit reference cube.
struct QuadratureRule {
  std::vector<double> space_points, space_weights;  // 1D on [0,1]
  std::vector<double> time_points, time_weights;    // on [0,1]
  int num_points() const {
    return static_cast<int>(space_points.size() * space_points.size() * time_points.size());
  }
  double weight_sum() const;
};

QuadratureRule quadrature_rule(const BasisKind& basis);

/// Gauss-Legendre rule with n points on [0,1].
void gauss_legendre(int n, std::vector<double>& points, std::vector<double>& weights);

struct Element {
  int index = 0;
  int eu = 0, ev = 0;  ///< element position in the element grid
  int span_u = 0, span_v = 0;
  std::vector<int> points;  ///< (p+1)^2 global point indices, u fastest
};

/// Immutable mesh topology shared by every configuration of a run.
class MeshTopology {
 public:
  MeshTopology(BasisKind basis, KnotVector ku, KnotVector kv, const BoundaryTagging& tags);

  const BasisKind& basis() const noexcept { return basis_; }
  int degree() const noexcept { return basis_.degree; }
  const KnotVector& knots_u() const noexcept { return ku_; }
  const KnotVector& knots_v() const noexcept { return kv_; }
  int n_u() const noexcept { return ku_.num_basis(); }
  int n_v() const noexcept { return kv_.num_basis(); }
  int num_points() const noexcept { return n_u() * n_v(); }
  int point_index(int i, int j) const noexcept { return i + n_u() * j; }
  int nodes_per_element() const noexcept { return (degree() + 1) * (degree() + 1); }

  int num_elements_u() const noexcept { return static_cast<int>(tab_u_.size()); }
  int num_elements_v() const noexcept { return static_cast<int>(tab_v_.size()); }
  int num_elements() const noexcept { return num_elements_u() * num_elements_v(); }
  const Element& element(int e) const { return elements_[e]; }
  const std::vector<Element>& elements() const noexcept { return elements_; }

  const SpanTable& table_u(int eu) const { return tab_u_[eu]; }
  const SpanTable& table_v(int ev) const { return tab_v_[ev]; }
  const QuadratureRule& rule() const noexcept { return rule_; }

  /// Boundary spans along an edge, in increasing parameter order.
  int num_edge_spans(Edge e) const;
  BoundaryTag edge_span_tag(Edge e, int k) const { return edge_tags_[static_cast<int>(e)][k]; }
  /// Points on an edge, in increasing parameter order.
  std::vector<int> edge_points(Edge e) const;
  /// Element-grid coordinate of boundary span k of an edge.
  int edge_element(Edge e, int k) const;
  int corner_point(Corner c) const;

  /// (edge, tag) pairs of every boundary span in the support of a point's
  /// basis function. Empty for interior points.
  const std::vector<std::pair<Edge, BoundaryTag>>& point_tags(int point) const {
    return point_tags_[point];
  }
  bool point_has_tag(int point, BoundaryTag t) const;

 private:
  BasisKind basis_;
  KnotVector ku_, kv_;
  QuadratureRule rule_;
  std::vector<SpanTable> tab_u_, tab_v_;
  std::vector<Element> elements_;
  std::array<std::vector<BoundaryTag>, 4> edge_tags_;
  std::vector<std::vector<std::pair<Edge, BoundaryTag>>> point_tags_;
};

struct SpatialMesh {
  std::shared_ptr<const MeshTopology> topo;
  std::vector<Vec2> points;  ///< nodes or control points

  const MeshTopology& topology() const { return *topo; }
  int num_points() const { return static_cast<int>(points.size()); }
  int num_elements() const { return topo->num_elements(); }
};

/// Uniform structured mesh of a rectangle. Control points sit at the mapped
/// Greville abscissae, so the geometry map is affine and all elements are
/// congruent. Throws ConfigError when the resolution is below the minimum or
/// the tags leave part of the boundary untagged.
SpatialMesh build_mesh(const Rectangle& rect, int n_u, int n_v, const BasisKind& basis,
                       const BoundaryTagging& tags);

struct SpaceTimeSlab {
  double t0 = 0.0, t1 = 0.0;
  SpatialMesh lower;
  SpatialMesh upper;
  double dt() const { return t1 - t0; }
};

/// Slab over [t0, t0+dt]; the upper configuration starts as a copy of prev.
SpaceTimeSlab build_slab(const SpatialMesh& prev, double t0, double dt);

struct GeometryPoint {
  Vec2 x;
  Mat2 jacobian;      ///< d x / d xi on the reference square [-1,1]^2
  double det = 0.0;
  Vec2 mesh_velocity;
};

/// Point, reference Jacobian and mesh velocity at reference coordinates
/// (xi, eta) in [-1,1]^2 of element `e` and time fraction tau in [0,1].
/// Throws TangledMeshError when the Jacobian determinant is not positive.
GeometryPoint geometry_map(const SpaceTimeSlab& slab, int e, double xi, double eta, double tau);

enum class Field { Ux = 0, Uy = 1, P = 2, Sx = 3, Sy = 4, Zx = 5, Zy = 6 };
enum class Level { Lower = 0, Upper = 1 };

struct DofKey {
  int point = -1;
  Field field = Field::Ux;
  Level level = Level::Lower;
  bool operator==(const DofKey&) const = default;
};

/// Global numbering. Velocity and pressure exist on every point at both
/// temporal levels. Surface displacement (Sx, Sy) exists on free-surface
/// points at the upper level only. Interior mesh displacement (Zx, Zy) at
/// the upper level exists when the mesh is part of the system.
/// Constrained unknowns keep an index and are flagged in the Dirichlet mask;
/// their rows are replaced by identity rows during assembly.
class DofMap {
 public:
  DofMap(const MeshTopology& topo, std::vector<int> surface_points, bool with_mesh);

  int size() const noexcept { return static_cast<int>(keys_.size()); }
  int flow_size() const noexcept { return flow_size_; }
  /// -1 when the key does not exist.
  int index(int point, Field f, Level l = Level::Upper) const;
  int flow(int point, int level, int comp) const noexcept { return 6 * point + 3 * level + comp; }
  int geometry(int point, int comp) const noexcept { return geom_index_[2 * point + comp]; }
  const DofKey& key(int idx) const { return keys_[idx]; }
  bool has_mesh() const noexcept { return with_mesh_; }
  const std::vector<int>& surface_points() const noexcept { return surface_points_; }
  bool is_surface_point(int point) const { return surface_slot_[point] >= 0; }

  void constrain(int idx, double value);
  bool constrained(int idx) const { return dirichlet_[idx] != 0; }
  double prescribed(int idx) const { return prescribed_[idx]; }
  const std::vector<char>& dirichlet_mask() const noexcept { return dirichlet_; }

 private:
  int num_points_;
  int flow_size_;
  bool with_mesh_;
  std::vector<int> surface_points_;
  std::vector<int> surface_slot_;
  std::vector<int> geom_index_;
  std::vector<DofKey> keys_;
  std::vector<char> dirichlet_;
  std::vector<double> prescribed_;
};

/// Per-element tensor-product basis at one spatial Gauss point, in
/// parametric coordinates: N, dN/du, dN/dv, d2N/du2, d2N/dudv, d2N/dv2.
struct ParamBasis {
  Eigen::VectorXd n, nu, nv, nuu, nuv, nvv;
  double weight = 0.0;  ///< Gauss weight times parametric element area
  void resize(int np);
};

void tabulate_element_point(const MeshTopology& topo, const Element& el, int qu, int qv, ParamBasis& out);

/// Evaluates the patch geometry of `points` at parametric (u, v).
PatchPoint eval_geometry(const MeshTopology& topo, const std::vector<Vec2>& points, double u, double v);

/// Evaluates a per-point vector field at parametric (u, v).
Vec2 eval_field(const MeshTopology& topo, const std::vector<Vec2>& values, double u, double v);

}  // namespace fsflow
