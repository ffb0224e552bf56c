#include "fsflow/flow_assembly.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fsflow/errors.hpp"

namespace fsflow {

void FluidProps::validate() const {
  if (!(density > 0.0)) throw ConfigError("density must be positive", "fluid.density");
  if (!(viscosity > 0.0)) throw ConfigError("viscosity must be positive", "fluid.viscosity");
  if (!(continuity_scale >= 0.0))
    throw ConfigError("continuity scale must be nonnegative", "fluid.continuity_scale");
}

BoundaryCondition BoundaryCondition::dirichlet(std::function<Vec2(const Vec2&)> f) {
  BoundaryCondition bc;
  bc.kind = BcKind::Dirichlet;
  bc.velocity = std::move(f);
  return bc;
}

BoundaryCondition BoundaryCondition::neumann(Vec2 h) {
  BoundaryCondition bc;
  bc.kind = BcKind::Neumann;
  bc.traction = h;
  return bc;
}

BoundaryCondition BoundaryCondition::slip() {
  BoundaryCondition bc;
  bc.kind = BcKind::Slip;
  return bc;
}

BoundaryCondition BoundaryCondition::free_traction() { return {}; }

BoundaryConditions default_boundary_conditions() {
  return {{BoundaryTag::Free, BoundaryCondition::free_traction()},
          {BoundaryTag::Fixed, BoundaryCondition::dirichlet()},
          {BoundaryTag::NoSlip, BoundaryCondition::dirichlet()},
          {BoundaryTag::Slip, BoundaryCondition::slip()},
          {BoundaryTag::Outflow, BoundaryCondition::neumann()}};
}

Stabilization stabilization(const FluidProps& props, double h, double dt, const Vec2& u) {
  const double nu = props.viscosity / props.density;
  const double a = 4.0 / (h * h);
  const double visc = 4.0 * nu / (h * h);
  const double s = 4.0 / (dt * dt) + a * u.squaredNorm() + visc * visc;
  Stabilization st;
  st.tau_t = 1.0 / std::sqrt(s);
  st.tau_mom = st.tau_t / props.density;
  st.tau_cont = props.continuity_scale * props.density * h * h / st.tau_t;
  st.dtau_t = -a * st.tau_t * st.tau_t * st.tau_t * u;
  return st;
}

double element_diameter(const MeshTopology& topo, const Element& el, std::span<const Vec2> points) {
  const int p = topo.degree();
  const auto& tu = topo.table_u(el.eu);
  const auto& tv = topo.table_v(el.ev);
  Eigen::MatrixXd bu0(1, p + 1), bu1(1, p + 1), bv0(1, p + 1), bv1(1, p + 1);
  basis_derivatives_in_span(topo.knots_u(), el.span_u, tu.lo, 0, bu0);
  basis_derivatives_in_span(topo.knots_u(), el.span_u, tu.lo + tu.width, 0, bu1);
  basis_derivatives_in_span(topo.knots_v(), el.span_v, tv.lo, 0, bv0);
  basis_derivatives_in_span(topo.knots_v(), el.span_v, tv.lo + tv.width, 0, bv1);
  auto corner = [&](const Eigen::MatrixXd& bu, const Eigen::MatrixXd& bv) {
    Vec2 x = Vec2::Zero();
    for (int l = 0; l <= p; ++l)
      for (int k = 0; k <= p; ++k) x += bu(0, k) * bv(0, l) * points[k + (p + 1) * l];
    return x;
  };
  const Vec2 c00 = corner(bu0, bv0), c10 = corner(bu1, bv0), c01 = corner(bu0, bv1), c11 = corner(bu1, bv1);
  return std::max((c11 - c00).norm(), (c10 - c01).norm());
}

namespace {

struct FunctionData {
  double phi, phit, trh;
  Vec2 grad;
  Mat2 hess;
};

void add_tractions(const MeshTopology& topo, const FlowElementInput& in, Eigen::VectorXd& r) {
  const Element& el = *in.element;
  const int p = topo.degree();
  const auto& rule = topo.rule();
  const auto& tu = topo.table_u(el.eu);
  const auto& tv = topo.table_v(el.ev);
  Eigen::MatrixXd bu(2, p + 1), bv(2, p + 1);
  for (const auto& [edge, h] : in.tractions) {
    const bool along_u = edge_normal_axis(edge) == 1;
    for (size_t q = 0; q < rule.space_points.size(); ++q) {
      const double s = rule.space_points[q];
      double u, v;
      if (along_u) {
        u = tu.lo + s * tu.width;
        v = edge == Edge::Bottom ? tv.lo : tv.lo + tv.width;
      } else {
        v = tv.lo + s * tv.width;
        u = edge == Edge::Left ? tu.lo : tu.lo + tu.width;
      }
      basis_derivatives_in_span(topo.knots_u(), el.span_u, u, 1, bu);
      basis_derivatives_in_span(topo.knots_v(), el.span_v, v, 1, bv);
      for (size_t tq = 0; tq < rule.time_points.size(); ++tq) {
        const double tau = rule.time_points[tq];
        const double T[2] = {1.0 - tau, tau};
        Vec2 xt = Vec2::Zero();
        for (int l = 0; l <= p; ++l)
          for (int k = 0; k <= p; ++k) {
            const int a = k + (p + 1) * l;
            const Vec2 x = T[0] * in.lower[a] + T[1] * in.upper[a];
            xt += (along_u ? bu(1, k) * bv(0, l) : bu(0, k) * bv(1, l)) * x;
          }
        const double w = rule.space_weights[q] * (along_u ? tu.width : tv.width) * xt.norm() *
                         rule.time_weights[tq] * in.dt;
        for (int l = 0; l <= p; ++l)
          for (int k = 0; k <= p; ++k) {
            const int a = k + (p + 1) * l;
            const double n = bu(0, k) * bv(0, l);
            for (int b = 0; b < 2; ++b)
              for (int i = 0; i < 2; ++i) r[6 * a + 3 * b + i] -= n * T[b] * h[i] * w;
          }
      }
    }
  }
}

}  // namespace

void flow_element(const MeshTopology& topo, const FluidProps& props, const FlowElementInput& in,
                  Eigen::VectorXd& r, Eigen::MatrixXd* K) {
  const Element& el = *in.element;
  const int nen = topo.nodes_per_element();
  const int nf = 2 * nen;
  const int nd = 6 * nen;
  r.setZero(nd);
  if (K) K->setZero(nd, nd);
  const auto& rule = topo.rule();
  const int nq = static_cast<int>(rule.space_points.size());
  const double rho = props.density;
  const double mu = props.viscosity;
  const double dt = in.dt;
  const double adv = props.include_advection ? 1.0 : 0.0;
  const Vec2 f = props.body_force;
  const double h = in.h;

  ParamBasis pb;
  std::vector<Vec2> gN(nen);
  std::vector<Mat2> hN(nen);
  std::vector<FunctionData> fd(nf);
  std::vector<Vec2> ufun(nf);
  std::vector<double> pfun(nf);
  std::vector<Mat2> Qf(nf), Mf(nf);
  std::vector<Vec2> Qr(nf);
  for (int a = 0; a < nen; ++a)
    for (int b = 0; b < 2; ++b) {
      const int j = b * nen + a;
      ufun[j] = Vec2(in.flow[6 * a + 3 * b], in.flow[6 * a + 3 * b + 1]);
      pfun[j] = in.flow[6 * a + 3 * b + 2];
    }

  for (int qv = 0; qv < nq; ++qv)
    for (int qu = 0; qu < nq; ++qu) {
      tabulate_element_point(topo, el, qu, qv, pb);

      // Temporal jump at the slab bottom.
      {
        Mat2 J = Mat2::Zero();
        Vec2 um = Vec2::Zero(), up = Vec2::Zero();
        for (int a = 0; a < nen; ++a) {
          J.col(0) += pb.nu[a] * in.lower[a];
          J.col(1) += pb.nv[a] * in.lower[a];
          um += pb.n[a] * ufun[a];
          up += pb.n[a] * in.previous[a];
        }
        const double det = J.determinant();
        if (!(det > 0.0)) throw TangledMeshError(fmt::format("nonpositive Jacobian in element {}", el.index));
        const double w = det * pb.weight;
        const Vec2 jump = rho * (um - up) * w;
        for (int a = 0; a < nen; ++a) {
          r[6 * a] += pb.n[a] * jump.x();
          r[6 * a + 1] += pb.n[a] * jump.y();
        }
        if (K)
          for (int a = 0; a < nen; ++a)
            for (int c = 0; c < nen; ++c) {
              const double m = rho * pb.n[a] * pb.n[c] * w;
              (*K)(6 * a, 6 * c) += m;
              (*K)(6 * a + 1, 6 * c + 1) += m;
            }
      }

      for (size_t tq = 0; tq < rule.time_points.size(); ++tq) {
        const double tau = rule.time_points[tq];
        const double T[2] = {1.0 - tau, tau};
        const double dT[2] = {-1.0 / dt, 1.0 / dt};

        Mat2 J = Mat2::Zero(), Hx = Mat2::Zero(), Hy = Mat2::Zero();
        Vec2 v = Vec2::Zero();
        for (int a = 0; a < nen; ++a) {
          const Vec2 x = T[0] * in.lower[a] + T[1] * in.upper[a];
          J.col(0) += pb.nu[a] * x;
          J.col(1) += pb.nv[a] * x;
          Mat2 Ha;
          Ha << pb.nuu[a], pb.nuv[a], pb.nuv[a], pb.nvv[a];
          Hx += x.x() * Ha;
          Hy += x.y() * Ha;
          v += pb.n[a] * (in.upper[a] - in.lower[a]) / dt;
        }
        const double det = J.determinant();
        if (!(det > 0.0)) throw TangledMeshError(fmt::format("nonpositive Jacobian in element {}", el.index));
        const Mat2 Jinv = J.inverse();
        const Mat2 JinvT = Jinv.transpose();
        for (int a = 0; a < nen; ++a) {
          gN[a] = JinvT * Vec2(pb.nu[a], pb.nv[a]);
          Mat2 Ha;
          Ha << pb.nuu[a], pb.nuv[a], pb.nuv[a], pb.nvv[a];
          hN[a] = JinvT * (Ha - gN[a].x() * Hx - gN[a].y() * Hy) * Jinv;
        }
        const double dQ = det * pb.weight * dt * rule.time_weights[tq];

        Vec2 u = Vec2::Zero(), ut = Vec2::Zero(), gp = Vec2::Zero(), visc = Vec2::Zero();
        Mat2 G = Mat2::Zero();
        double p = 0.0;
        for (int b = 0; b < 2; ++b)
          for (int a = 0; a < nen; ++a) {
            const int j = b * nen + a;
            FunctionData& d = fd[j];
            d.phi = pb.n[a] * T[b];
            d.grad = gN[a] * T[b];
            d.phit = pb.n[a] * dT[b] - T[b] * v.dot(gN[a]);
            d.hess = hN[a] * T[b];
            d.trh = d.hess.trace();
            u += d.phi * ufun[j];
            ut += d.phit * ufun[j];
            G += ufun[j] * d.grad.transpose();
            p += d.phi * pfun[j];
            gp += pfun[j] * d.grad;
            visc += d.trh * ufun[j] + d.hess * ufun[j];
          }
        const double divu = G.trace();
        const Vec2 acc = ut + adv * G * u - f;
        const Vec2 rM = rho * acc + gp - mu * visc;
        const Stabilization st = stabilization(props, h, dt, adv * u);
        const Mat2 eps2 = G + G.transpose();

        for (int j = 0; j < nf; ++j) {
          const FunctionData& d = fd[j];
          const double aj = rho * (d.phit + adv * u.dot(d.grad));
          Qf[j] = (aj - mu * d.trh) * Mat2::Identity() - mu * d.hess;
          Mf[j] = Qf[j] + adv * rho * d.phi * G;
          Qr[j] = Qf[j] * rM;
          const int a = j % nen, b = j / nen;
          const int row = 6 * a + 3 * b;
          const Vec2 mom = d.phi * rho * acc + mu * eps2 * d.grad - d.grad * p + st.tau_mom * Qr[j] +
                           st.tau_cont * d.grad * divu;
          r[row] += dQ * mom.x();
          r[row + 1] += dQ * mom.y();
          r[row + 2] += dQ * (d.phi * divu + st.tau_mom * d.grad.dot(rM));
        }
        if (!K) continue;

        const Vec2 dtm = adv * st.dtau_t / rho;
        const double tt = st.tau_t;
        const Vec2 dtc = -props.continuity_scale * rho * h * h / (tt * tt) * adv * st.dtau_t;
        auto& Km = *K;
        for (int j = 0; j < nf; ++j) {
          const FunctionData& dj = fd[j];
          const int rj = 6 * (j % nen) + 3 * (j / nen);
          const double grj_r = dj.grad.dot(rM);
          for (int k = 0; k < nf; ++k) {
            const FunctionData& dk = fd[k];
            const int ck = 6 * (k % nen) + 3 * (k / nen);
            const Mat2 QM = Qf[j] * Mf[k];
            const double transport = dk.phit + adv * u.dot(dk.grad);
            const double gg = dj.grad.dot(dk.grad);
            for (int i = 0; i < 2; ++i) {
              for (int c = 0; c < 2; ++c) {
                double val = rho * dj.phi * ((i == c ? transport : 0.0) + adv * dk.phi * G(i, c));
                val += mu * ((i == c ? gg : 0.0) + dj.grad[c] * dk.grad[i]);
                val += st.tau_mom * (QM(i, c) + adv * rho * dk.phi * dj.grad[c] * rM[i]);
                val += dtm[c] * dk.phi * Qr[j][i];
                val += st.tau_cont * dj.grad[i] * dk.grad[c] + dtc[c] * dk.phi * dj.grad[i] * divu;
                Km(rj + i, ck + c) += dQ * val;
              }
              Km(rj + i, ck + 2) += dQ * (-dj.grad[i] * dk.phi + st.tau_mom * (Qf[j].row(i).dot(dk.grad)));
            }
            for (int c = 0; c < 2; ++c)
              Km(rj + 2, ck + c) += dQ * (dj.phi * dk.grad[c] + st.tau_mom * dj.grad.dot(Mf[k].col(c)) +
                                          dtm[c] * dk.phi * grj_r);
            Km(rj + 2, ck + 2) += dQ * st.tau_mom * gg;
          }
        }
      }
    }
  if (!in.tractions.empty()) add_tractions(topo, in, r);
}

std::vector<std::pair<Edge, Vec2>> element_tractions(const MeshTopology& topo, const Element& el,
                                                     const BoundaryConditions& bcs) {
  std::vector<std::pair<Edge, Vec2>> out;
  auto check = [&](Edge e, int k) {
    const auto it = bcs.find(topo.edge_span_tag(e, k));
    if (it != bcs.end() && it->second.kind == BcKind::Neumann && it->second.traction.squaredNorm() > 0.0)
      out.emplace_back(e, it->second.traction);
  };
  if (el.ev == 0) check(Edge::Bottom, el.eu);
  if (el.ev == topo.num_elements_v() - 1) check(Edge::Top, el.eu);
  if (el.eu == 0) check(Edge::Left, el.ev);
  if (el.eu == topo.num_elements_u() - 1) check(Edge::Right, el.ev);
  return out;
}

void for_each_flow_element(const SpaceTimeSlab& slab, std::span<const double> flow,
                           std::span<const Vec2> previous, const FluidProps& props,
                           const BoundaryConditions& bcs, bool jacobian,
                           const std::function<void(const Element&, const Eigen::VectorXd&,
                                                    const Eigen::MatrixXd&)>& sink) {
  const auto& topo = slab.lower.topology();
  const int nen = topo.nodes_per_element();
  std::vector<Vec2> xl(nen), xu(nen), pv(nen);
  std::vector<double> fl(6 * nen);
  Eigen::VectorXd r;
  Eigen::MatrixXd K;
  for (const Element& el : topo.elements()) {
    for (int a = 0; a < nen; ++a) {
      const int g = el.points[a];
      xl[a] = slab.lower.points[g];
      xu[a] = slab.upper.points[g];
      pv[a] = previous[g];
      for (int c = 0; c < 6; ++c) fl[6 * a + c] = flow[6 * g + c];
    }
    FlowElementInput in{&el, xl, xu, fl, pv, slab.dt(), element_diameter(topo, el, xl),
                        element_tractions(topo, el, bcs)};
    try {
      flow_element(topo, props, in, r, jacobian ? &K : nullptr);
    } catch (TangledMeshError& e) {
      e.set_time(slab.t0);
      throw;
    }
    sink(el, r, K);
  }
}

FlowAssembly assemble_flow(const SpaceTimeSlab& slab, std::span<const double> flow,
                           std::span<const Vec2> previous, const FluidProps& props,
                           const BoundaryConditions& bcs, bool jacobian) {
  const int n = 6 * slab.lower.num_points();
  FlowAssembly out;
  out.residual.setZero(n);
  std::vector<Eigen::Triplet<double>> trip;
  for_each_flow_element(slab, flow, previous, props, bcs, jacobian,
                        [&](const Element& el, const Eigen::VectorXd& r, const Eigen::MatrixXd& K) {
                          const int nl = static_cast<int>(el.points.size());
                          for (int a = 0; a < nl; ++a)
                            for (int c = 0; c < 6; ++c) out.residual[6 * el.points[a] + c] += r[6 * a + c];
                          if (!jacobian) return;
                          for (int a = 0; a < nl; ++a)
                            for (int c = 0; c < 6; ++c)
                              for (int b = 0; b < nl; ++b)
                                for (int d = 0; d < 6; ++d)
                                  trip.emplace_back(6 * el.points[a] + c, 6 * el.points[b] + d,
                                                    K(6 * a + c, 6 * b + d));
                        });
  if (jacobian) {
    out.jacobian.resize(n, n);
    out.jacobian.setFromTriplets(trip.begin(), trip.end());
  }
  return out;
}

namespace {

// Coefficients reproducing g at the Greville points of an edge.
std::vector<Vec2> edge_interpolant(const SpatialMesh& mesh, Edge e,
                                   const std::function<Vec2(const Vec2&)>& g) {
  const auto& topo = mesh.topology();
  const bool along_u = edge_normal_axis(e) == 1;
  const KnotVector& kv = along_u ? topo.knots_u() : topo.knots_v();
  const auto gr = greville_abscissae(kv);
  const int n = kv.num_basis();
  const double fixed = (e == Edge::Bottom) ? topo.knots_v().front()
                       : (e == Edge::Top)  ? topo.knots_v().back()
                       : (e == Edge::Left) ? topo.knots_u().front()
                                           : topo.knots_u().back();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd rhs(n, 2);
  for (int i = 0; i < n; ++i) {
    const auto bv = basis_eval(kv, gr[i]);
    for (int k = 0; k <= kv.degree(); ++k) A(i, bv.span - kv.degree() + k) = bv.values[k];
    const Vec2 x = along_u ? eval_geometry(topo, mesh.points, gr[i], fixed).x
                           : eval_geometry(topo, mesh.points, fixed, gr[i]).x;
    const Vec2 val = g ? g(x) : Vec2::Zero();
    rhs.row(i) = val.transpose();
  }
  const Eigen::MatrixXd c = A.partialPivLu().solve(rhs);
  std::vector<Vec2> out(n);
  for (int i = 0; i < n; ++i) out[i] = c.row(i).transpose();
  return out;
}

}  // namespace

std::vector<std::string> apply_velocity_bcs(DofMap& dofs, const SpatialMesh& mesh, const BoundaryConditions& bcs) {
  const auto& topo = mesh.topology();
  std::vector<std::string> log;
  std::vector<char> dirichlet(topo.num_points(), 0);
  for (int ei = 0; ei < 4; ++ei) {
    const Edge e = static_cast<Edge>(ei);
    const auto pts = topo.edge_points(e);
    std::vector<Vec2> values;
    for (size_t i = 0; i < pts.size(); ++i) {
      const int a = pts[i];
      for (const auto& [edge, tag] : topo.point_tags(a)) {
        if (edge != e) continue;
        const auto it = bcs.find(tag);
        if (it == bcs.end())
          throw ConfigError(fmt::format("no boundary condition for tag '{}'", to_string(tag)), "bcs");
        if (it->second.kind != BcKind::Dirichlet || dirichlet[a]) continue;
        if (values.empty()) values = edge_interpolant(mesh, e, it->second.velocity);
        dirichlet[a] = 1;
        for (int lv = 0; lv < 2; ++lv)
          for (int c = 0; c < 2; ++c) dofs.constrain(dofs.flow(a, lv, c), values[i][c]);
      }
    }
  }
  for (int a = 0; a < topo.num_points(); ++a)
    for (const auto& [edge, tag] : topo.point_tags(a)) {
      const auto it = bcs.find(tag);
      if (it == bcs.end() || it->second.kind != BcKind::Slip) continue;
      if (dirichlet[a]) {
        log.push_back(fmt::format("point {}: Dirichlet overrides slip on the {} edge", a, to_string(edge)));
        continue;
      }
      const int c = edge_normal_axis(edge);
      for (int lv = 0; lv < 2; ++lv) dofs.constrain(dofs.flow(a, lv, c), 0.0);
    }
  return log;
}

void constrain_rows(const DofMap& dofs, const Eigen::VectorXd& x, Eigen::VectorXd& residual,
                    Eigen::SparseMatrix<double>* jacobian) {
  const int n = static_cast<int>(residual.size());
  for (int i = 0; i < n; ++i)
    if (dofs.constrained(i)) residual[i] = x[i] - dofs.prescribed(i);
  if (!jacobian) return;
  auto& K = *jacobian;
  for (int k = 0; k < K.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
      if (it.row() < n && dofs.constrained(static_cast<int>(it.row())))
        it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
  for (int i = 0; i < n; ++i)
    if (dofs.constrained(i) && K.coeff(i, i) != 1.0) K.coeffRef(i, i) = 1.0;
}

}  // namespace fsflow
