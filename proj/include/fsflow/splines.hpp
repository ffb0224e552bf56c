#pragma once

// B-spline / NURBS primitives: knot vectors, Cox-de Boor basis evaluation
// with derivatives, rational curves and tensor-product patches, Greville
// abscissae and graph-form least-squares fitting.
//
// All functions are pure; objects are immutable after construction.

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fsflow {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Open (clamped) knot vector of a given degree.
///
/// Invariants checked on construction: knots non-decreasing, first and last
/// knot repeated exactly degree+1 times, at least degree+1 basis functions.
class KnotVector {
 public:
  KnotVector(int degree, std::vector<double> knots);

  /// Open knot vector with uniformly spaced interior knots on [first, last].
  static KnotVector open_uniform(int degree, int num_basis, double first = 0.0, double last = 1.0);

  int degree() const noexcept { return degree_; }
  const std::vector<double>& knots() const noexcept { return knots_; }
  int num_basis() const noexcept { return static_cast<int>(knots_.size()) - degree_ - 1; }
  double front() const noexcept { return knots_.front(); }
  double back() const noexcept { return knots_.back(); }

  /// Index s of the knot span [knots[s], knots[s+1]) containing theta.
  /// Right-limit convention, except theta == back() which maps to the last
  /// nonempty span. Throws DomainError outside [front(), back()].
  int find_span(double theta) const;

  /// Span indices s with knots[s] < knots[s+1], in increasing order.
  std::vector<int> nonempty_spans() const;

  bool operator==(const KnotVector&) const = default;

 private:
  int degree_;
  std::vector<double> knots_;
};

struct BasisValues {
  int span = 0;                ///< basis functions span-p .. span are nonzero
  std::vector<double> values;  ///< p+1 values
};

struct BasisDerivatives {
  int span = 0;
  Eigen::MatrixXd table;  ///< (order+1) x (p+1); row j holds j-th derivatives
};

BasisValues basis_eval(const KnotVector& kv, double theta);

/// Basis values and derivatives up to `order`. Rows beyond the degree are zero.
BasisDerivatives basis_derivatives(const KnotVector& kv, double theta, int order);

/// Allocation-free kernel behind basis_derivatives; `out` must be
/// (order+1) x (p+1). `span` must come from kv.find_span(theta) or be a span
/// whose closure contains theta.
void basis_derivatives_in_span(const KnotVector& kv, int span, double theta, int order,
                               Eigen::Ref<Eigen::MatrixXd> out);

class NurbsCurve {
 public:
  /// Empty `weights` means all ones.
  NurbsCurve(KnotVector kv, std::vector<Vec2> control_points, std::vector<double> weights = {});

  const KnotVector& knot_vector() const noexcept { return kv_; }
  const std::vector<Vec2>& control_points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  KnotVector kv_;
  std::vector<Vec2> points_;
  std::vector<double> weights_;
};

Vec2 curve_eval(const NurbsCurve& c, double theta);

/// First parametric derivative C'(theta) of the rational curve.
Vec2 curve_derivative(const NurbsCurve& c, double theta);

struct TangentNormal {
  Vec2 tangent;
  Vec2 normal;
};

/// t = C'/|C'|, n = (-t_y, t_x). Throws SingularityError when |C'| is below
/// 1e-14 times the control polygon extent.
TangentNormal curve_tangent_normal(const NurbsCurve& c, double theta);

/// gamma_i = (knots[i+1] + ... + knots[i+p]) / p for each basis function.
std::vector<double> greville_abscissae(const KnotVector& kv);

/// Graph-form least-squares fit y = f(x). Each sample's parameter is its x
/// coordinate mapped affinely onto the knot range; control point abscissae
/// sit at the mapped Greville points so the x component is reproduced exactly.
/// With fixed_ends the end control points interpolate the samples at the
/// smallest and largest x. Throws FitError on too few samples or rank loss.
NurbsCurve fit_least_squares(std::span<const Vec2> samples, const KnotVector& kv, bool fixed_ends);

/// Tensor-product NURBS surface; control net index is i + n_u * j.
class NurbsPatch {
 public:
  NurbsPatch(KnotVector ku, KnotVector kv, std::vector<Vec2> control_net,
             std::vector<double> weights = {});

  const KnotVector& knots_u() const noexcept { return ku_; }
  const KnotVector& knots_v() const noexcept { return kv_; }
  int n_u() const noexcept { return ku_.num_basis(); }
  int n_v() const noexcept { return kv_.num_basis(); }
  const std::vector<Vec2>& control_net() const noexcept { return net_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  KnotVector ku_, kv_;
  std::vector<Vec2> net_;
  std::vector<double> weights_;
};

struct PatchPoint {
  Vec2 x;
  Mat2 jacobian;  ///< columns dx/du, dx/dv
};

PatchPoint patch_eval(const NurbsPatch& s, double u, double v);

}  // namespace fsflow
