#include "fsflow/splines.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fsflow/errors.hpp"

namespace fsflow {

KnotVector::KnotVector(int degree, std::vector<double> knots)
    : degree_(degree), knots_(std::move(knots)) {
  if (degree_ < 1) throw DomainError(fmt::format("knot vector degree {} < 1", degree_));
  const int m = static_cast<int>(knots_.size());
  if (m - degree_ - 1 < degree_ + 1)
    throw DomainError(fmt::format("knot vector of length {} too short for degree {}", m, degree_));
  for (int i = 1; i < m; ++i)
    if (knots_[i] < knots_[i - 1]) throw DomainError("knots must be non-decreasing");
  auto count = [&](double value) {
    return std::count(knots_.begin(), knots_.end(), value);
  };
  if (count(knots_.front()) != degree_ + 1 || count(knots_.back()) != degree_ + 1)
    throw DomainError("knot vector must be open: end knots repeated exactly degree+1 times");
  if (!(knots_.back() > knots_.front())) throw DomainError("knot vector has zero length");
}

KnotVector KnotVector::open_uniform(int degree, int num_basis, double first, double last) {
  if (num_basis < degree + 1)
    throw DomainError(fmt::format("{} basis functions is below degree+1 = {}", num_basis, degree + 1));
  const int spans = num_basis - degree;
  std::vector<double> k;
  k.reserve(num_basis + degree + 1);
  for (int i = 0; i <= degree; ++i) k.push_back(first);
  for (int i = 1; i < spans; ++i) k.push_back(first + (last - first) * i / spans);
  for (int i = 0; i <= degree; ++i) k.push_back(last);
  return KnotVector(degree, std::move(k));
}

int KnotVector::find_span(double theta) const {
  if (!(theta >= front() && theta <= back()))
    throw DomainError(fmt::format("parameter {} outside knot range [{}, {}]", theta, front(), back()));
  const int n = num_basis();
  if (theta == back()) {
    int s = n - 1;
    while (knots_[s] == knots_[s + 1]) --s;
    return s;
  }
  // Largest s with knots[s] <= theta.
  auto it = std::upper_bound(knots_.begin() + degree_, knots_.begin() + n + 1, theta);
  return static_cast<int>(it - knots_.begin()) - 1;
}

std::vector<int> KnotVector::nonempty_spans() const {
  std::vector<int> out;
  for (int s = degree_; s < num_basis(); ++s)
    if (knots_[s] < knots_[s + 1]) out.push_back(s);
  return out;
}

void basis_derivatives_in_span(const KnotVector& kv, int span, double theta, int order,
                               Eigen::Ref<Eigen::MatrixXd> out) {
  const int p = kv.degree();
  const auto& U = kv.knots();
  out.setZero();
  const int nd = std::min(order, p);

  // Piegl & Tiller A2.3.
  double ndu[8][8];
  double left[8], right[8];
  double a[2][8];
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = theta - U[span + 1 - j];
    right[j] = U[span + j] - theta;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }
  for (int j = 0; j <= p; ++j) out(0, j) = ndu[j][p];

  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = (rk >= -1) ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      out(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double fac = p;
  for (int k = 1; k <= nd; ++k) {
    out.row(k) *= fac;
    fac *= (p - k);
  }
}

BasisValues basis_eval(const KnotVector& kv, double theta) {
  const int span = kv.find_span(theta);
  Eigen::MatrixXd tab(1, kv.degree() + 1);
  basis_derivatives_in_span(kv, span, theta, 0, tab);
  BasisValues out;
  out.span = span;
  out.values.assign(tab.data(), tab.data() + tab.size());
  return out;
}

BasisDerivatives basis_derivatives(const KnotVector& kv, double theta, int order) {
  if (order < 0) throw DomainError("derivative order must be non-negative");
  if (kv.degree() > 7) throw DomainError("degree above 7 is not supported");
  BasisDerivatives out;
  out.span = kv.find_span(theta);
  out.table.resize(order + 1, kv.degree() + 1);
  basis_derivatives_in_span(kv, out.span, theta, order, out.table);
  return out;
}

namespace {

void check_weights(const std::vector<double>& w) {
  for (double x : w)
    if (!(x > 0.0)) throw DomainError("NURBS weights must be strictly positive");
}

}  // namespace

NurbsCurve::NurbsCurve(KnotVector kv, std::vector<Vec2> control_points, std::vector<double> weights)
    : kv_(std::move(kv)), points_(std::move(control_points)), weights_(std::move(weights)) {
  if (static_cast<int>(points_.size()) != kv_.num_basis())
    throw DomainError(fmt::format("curve has {} control points but knot vector needs {}",
                                  points_.size(), kv_.num_basis()));
  if (weights_.empty()) weights_.assign(points_.size(), 1.0);
  if (weights_.size() != points_.size()) throw DomainError("weight count must match control points");
  check_weights(weights_);
}

namespace {

// Homogeneous sums A = sum w N P, W = sum w N and their first derivatives.
struct CurveSums {
  Vec2 a = Vec2::Zero(), da = Vec2::Zero();
  double w = 0.0, dw = 0.0;
};

CurveSums curve_sums(const NurbsCurve& c, double theta, int order) {
  const auto d = basis_derivatives(c.knot_vector(), theta, order);
  const int p = c.knot_vector().degree();
  CurveSums s;
  for (int k = 0; k <= p; ++k) {
    const int i = d.span - p + k;
    const double wi = c.weights()[i];
    s.a += wi * d.table(0, k) * c.control_points()[i];
    s.w += wi * d.table(0, k);
    if (order > 0) {
      s.da += wi * d.table(1, k) * c.control_points()[i];
      s.dw += wi * d.table(1, k);
    }
  }
  return s;
}

}  // namespace

Vec2 curve_eval(const NurbsCurve& c, double theta) {
  const auto s = curve_sums(c, theta, 0);
  return s.a / s.w;
}

Vec2 curve_derivative(const NurbsCurve& c, double theta) {
  const auto s = curve_sums(c, theta, 1);
  const Vec2 point = s.a / s.w;
  return (s.da - s.dw * point) / s.w;
}

TangentNormal curve_tangent_normal(const NurbsCurve& c, double theta) {
  const Vec2 d = curve_derivative(c, theta);
  Vec2 lo = c.control_points().front(), hi = lo;
  for (const auto& p : c.control_points()) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double scale = std::max((hi - lo).norm(), 1e-300);
  const double len = d.norm();
  if (len < 1e-14 * scale)
    throw SingularityError(fmt::format("degenerate curve tangent at parameter {}", theta));
  TangentNormal tn;
  tn.tangent = d / len;
  tn.normal = Vec2(-tn.tangent.y(), tn.tangent.x());
  return tn;
}

std::vector<double> greville_abscissae(const KnotVector& kv) {
  const int p = kv.degree();
  const auto& U = kv.knots();
  std::vector<double> g(kv.num_basis());
  for (int i = 0; i < kv.num_basis(); ++i) {
    double sum = 0.0;
    for (int k = 1; k <= p; ++k) sum += U[i + k];
    g[i] = sum / p;
  }
  return g;
}

NurbsCurve fit_least_squares(std::span<const Vec2> samples, const KnotVector& kv, bool fixed_ends) {
  const int n = kv.num_basis();
  const int p = kv.degree();
  const int m = static_cast<int>(samples.size());
  if (m < n) throw FitError(fmt::format("{} samples cannot determine {} control points", m, n));

  int imin = 0, imax = 0;
  for (int j = 1; j < m; ++j) {
    if (samples[j].x() < samples[imin].x()) imin = j;
    if (samples[j].x() > samples[imax].x()) imax = j;
  }
  const double x0 = samples[imin].x(), x1 = samples[imax].x();
  if (!(x1 > x0)) throw FitError("samples do not span a nonzero x interval");
  const double a = kv.front(), b = kv.back();
  auto to_param = [&](double x) { return std::clamp(a + (b - a) * (x - x0) / (x1 - x0), a, b); };

  const int first = fixed_ends ? 1 : 0;
  const int last = fixed_ends ? n - 2 : n - 1;
  const int unknowns = last - first + 1;
  std::vector<double> y(n, 0.0);
  if (fixed_ends) {
    y.front() = samples[imin].y();
    y.back() = samples[imax].y();
  }

  if (unknowns > 0) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, unknowns);
    Eigen::VectorXd rhs(m);
    for (int j = 0; j < m; ++j) {
      const auto bv = basis_eval(kv, to_param(samples[j].x()));
      rhs(j) = samples[j].y();
      for (int k = 0; k <= p; ++k) {
        const int i = bv.span - p + k;
        if (i >= first && i <= last)
          A(j, i - first) += bv.values[k];
        else
          rhs(j) -= bv.values[k] * y[i];
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < unknowns)
      throw FitError(fmt::format("least-squares system is rank deficient ({} < {})", qr.rank(), unknowns));
    const Eigen::VectorXd sol = qr.solve(rhs);
    for (int i = 0; i < unknowns; ++i) y[first + i] = sol(i);
  }

  const auto g = greville_abscissae(kv);
  std::vector<Vec2> cps(n);
  for (int i = 0; i < n; ++i) cps[i] = Vec2(x0 + (g[i] - a) / (b - a) * (x1 - x0), y[i]);
  return NurbsCurve(kv, std::move(cps));
}

NurbsPatch::NurbsPatch(KnotVector ku, KnotVector kv, std::vector<Vec2> control_net,
                       std::vector<double> weights)
    : ku_(std::move(ku)), kv_(std::move(kv)), net_(std::move(control_net)), weights_(std::move(weights)) {
  const size_t count = static_cast<size_t>(n_u()) * n_v();
  if (net_.size() != count)
    throw DomainError(fmt::format("control net has {} points, knot vectors need {}", net_.size(), count));
  if (weights_.empty()) weights_.assign(count, 1.0);
  if (weights_.size() != count) throw DomainError("weight count must match control net");
  check_weights(weights_);
}

PatchPoint patch_eval(const NurbsPatch& s, double u, double v) {
  const auto bu = basis_derivatives(s.knots_u(), u, 1);
  const auto bv = basis_derivatives(s.knots_v(), v, 1);
  const int pu = s.knots_u().degree(), pv = s.knots_v().degree();
  Vec2 a = Vec2::Zero(), au = Vec2::Zero(), av = Vec2::Zero();
  double w = 0.0, wu = 0.0, wv = 0.0;
  for (int l = 0; l <= pv; ++l) {
    const int j = bv.span - pv + l;
    for (int k = 0; k <= pu; ++k) {
      const int i = bu.span - pu + k;
      const int idx = i + s.n_u() * j;
      const double wi = s.weights()[idx];
      const Vec2& P = s.control_net()[idx];
      const double n = bu.table(0, k) * bv.table(0, l);
      const double nu = bu.table(1, k) * bv.table(0, l);
      const double nv = bu.table(0, k) * bv.table(1, l);
      a += wi * n * P;
      au += wi * nu * P;
      av += wi * nv * P;
      w += wi * n;
      wu += wi * nu;
      wv += wi * nv;
    }
  }
  PatchPoint out;
  out.x = a / w;
  out.jacobian.col(0) = (au - wu * out.x) / w;
  out.jacobian.col(1) = (av - wv * out.x) / w;
  return out;
}

}  // namespace fsflow
