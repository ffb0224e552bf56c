#include "fsflow/coupled_solver.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fsflow/errors.hpp"
#include "fsflow/sparse.hpp"

namespace fsflow {

std::string to_string(CouplingStrategy c) {
  switch (c) {
    case CouplingStrategy::Monolithic: return "monolithic";
    case CouplingStrategy::SurfaceMonolithic: return "surface-monolithic";
    case CouplingStrategy::Staggered: return "staggered";
  }
  return "?";
}

CouplingStrategy parse_coupling(const std::string& s) {
  if (s == "monolithic") return CouplingStrategy::Monolithic;
  if (s == "surface-monolithic") return CouplingStrategy::SurfaceMonolithic;
  if (s == "staggered") return CouplingStrategy::Staggered;
  throw ConfigError(fmt::format("unknown coupling '{}'", s), "coupling");
}

void NewtonSettings::validate() const {
  if (!(atol > 0.0)) throw ConfigError("newton.atol must be positive", "newton.atol");
  if (!(rtol > 0.0)) throw ConfigError("newton.rtol must be positive", "newton.rtol");
  if (max_iterations < 1) throw ConfigError("newton.max_iterations must be at least 1", "newton.max_iterations");
  if (max_halvings < 0) throw ConfigError("newton.max_halvings must be nonnegative", "newton.max_halvings");
}

std::vector<Vec2> SystemState::velocity() const {
  std::vector<Vec2> u(mesh.num_points());
  for (int a = 0; a < mesh.num_points(); ++a) u[a] = Vec2(flow[6 * a + 3], flow[6 * a + 4]);
  return u;
}

SystemState initial_state(const SpatialMesh& mesh) {
  SystemState s;
  s.mesh = mesh;
  s.flow = Eigen::VectorXd::Zero(6 * mesh.num_points());
  return s;
}

struct SlabSolver::Impl {
  std::shared_ptr<const MeshTopology> topo;
  ProblemSetup setup;
  MeshConstraints mc;
  std::unique_ptr<DofMap> dofs;
  std::vector<std::string> log;
  bool pde = false;
  bool with_mesh = false;
  std::vector<int> spans;  // free top spans
  std::vector<int> top;

  BlockPattern pattern{1};
  std::vector<int> flow_block, geom_block, emum_block, surf_block;
  std::vector<std::vector<int>> geom_cols;  // per element, 2 per local point
  std::vector<std::vector<int>> surf_cols;  // per free span, 6 per top point
  bool chain = false;        // surface-monolithic: geometry columns go through the EMUM map
  std::vector<int> sdofs;    // free surface geometry unknowns
  Eigen::MatrixXd emum_map;  // d(point coordinates)/d(sdofs), 2 rows per point
  SparseLU lu;

  // Per-slab data.
  const SystemState* prev = nullptr;
  double t0 = 0.0, dt = 0.0;
  std::vector<Vec2> uprev;
  std::vector<double> diam;
  std::unique_ptr<EmumSolver> emum;

  Impl(const SpatialMesh& reference, ProblemSetup s);
  int geom_col(int point, int c) const {
    const int g = dofs->geometry(point, c);
    return (g >= 0 && !dofs->constrained(g)) ? g : -1;
  }
  void begin_slab(const SystemState& p, double step);
  std::vector<Vec2> delta(const Eigen::VectorXd& x) const;
  void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& R, bool jac);
  Eigen::VectorXd initial_guess(const SystemState& p) const;
};

SlabSolver::Impl::Impl(const SpatialMesh& reference, ProblemSetup s)
    : topo(reference.topo), setup(std::move(s)), mc(mesh_constraints(*topo)) {
  setup.fluid.validate();
  setup.mesh_props.validate();
  setup.newton.validate();
  setup.scheme.validate(topo->basis());
  for (int ei = 0; ei < 4; ++ei) {
    const Edge e = static_cast<Edge>(ei);
    if (e == Edge::Top) continue;
    for (int k = 0; k < topo->num_edge_spans(e); ++k)
      if (topo->edge_span_tag(e, k) == BoundaryTag::Free)
        throw ConfigError("free-surface tags are supported on the top edge only", "tags");
  }
  pde = !setup.scheme.point_based();
  with_mesh = pde && setup.coupling == CouplingStrategy::Monolithic;
  spans = free_top_spans(*topo);
  top = topo->edge_points(Edge::Top);
  if (spans.empty()) throw ConfigError("no free surface", "tags");

  dofs = std::make_unique<DofMap>(*topo, pde ? mc.surface_points : std::vector<int>{}, with_mesh);
  // Dirichlet edges never move, so their values come from the reference configuration.
  log = apply_velocity_bcs(*dofs, reference, setup.bcs);
  for (int a = 0; a < topo->num_points(); ++a)
    for (int c = 0; c < 2; ++c) {
      const int g = dofs->geometry(a, c);
      if (g >= 0 && mc.kind[a][c] == MeshDof::Zero) dofs->constrain(g, 0.0);
    }

  chain = pde && setup.coupling == CouplingStrategy::SurfaceMonolithic;
  if (chain)
    for (int a : dofs->surface_points())
      for (int c = 0; c < 2; ++c)
        if (geom_col(a, c) >= 0) sdofs.push_back(geom_col(a, c));

  const int n = dofs->size();
  const int nen = topo->nodes_per_element();
  pattern = BlockPattern(n);
  for (const auto& el : topo->elements()) {
    std::vector<int> rows(6 * nen), gcols(2 * nen);
    bool any = false;
    for (int a = 0; a < nen; ++a) {
      for (int c = 0; c < 6; ++c) rows[6 * a + c] = 6 * el.points[a] + c;
      for (int c = 0; c < 2; ++c) {
        gcols[2 * a + c] = geom_col(el.points[a], c);
        any = any || gcols[2 * a + c] >= 0;
      }
    }
    flow_block.push_back(pattern.add_block(rows, rows));
    if (chain)
      geom_block.push_back(sdofs.empty() ? -1 : pattern.add_block(rows, sdofs));
    else
      geom_block.push_back(any ? pattern.add_block(rows, gcols) : -1);
    geom_cols.push_back(gcols);
    if (with_mesh) {
      std::vector<int> erows(2 * nen), ecols(2 * nen);
      for (int a = 0; a < nen; ++a)
        for (int c = 0; c < 2; ++c) {
          const int pt = el.points[a];
          erows[2 * a + c] = dofs->is_surface_point(pt) ? -1 : dofs->geometry(pt, c);
          ecols[2 * a + c] = dofs->geometry(pt, c);
        }
      emum_block.push_back(pattern.add_block(erows, ecols));
    }
  }
  if (pde) {
    const int p = topo->degree();
    for (int eu : spans) {
      const int s = topo->table_u(eu).span;
      std::vector<int> rows(2 * (p + 1)), cols(6 * (p + 1));
      for (int k = 0; k <= p; ++k) {
        const int a = top[s - p + k];
        const bool surf = dofs->is_surface_point(a);
        rows[2 * k] = surf ? dofs->geometry(a, 0) : -1;
        rows[2 * k + 1] = surf ? dofs->geometry(a, 1) : -1;
        cols[6 * k + 0] = dofs->flow(a, 0, 0);
        cols[6 * k + 1] = dofs->flow(a, 0, 1);
        cols[6 * k + 2] = dofs->flow(a, 1, 0);
        cols[6 * k + 3] = dofs->flow(a, 1, 1);
        cols[6 * k + 4] = geom_col(a, 0);
        cols[6 * k + 5] = geom_col(a, 1);
      }
      surf_block.push_back(pattern.add_block(rows, cols));
      surf_cols.push_back(cols);
    }
  }
  pattern.finalize();
}

void SlabSolver::Impl::begin_slab(const SystemState& p, double step) {
  if (!(step > 0.0)) throw DomainError("time step must be positive");
  if (p.mesh.topo.get() != topo.get() && !(p.mesh.topo->n_u() == topo->n_u() && p.mesh.topo->n_v() == topo->n_v()))
    throw DomainError("state does not match the solver mesh");
  prev = &p;
  t0 = p.time;
  dt = step;
  uprev = p.velocity();
  diam.resize(topo->num_elements());
  std::vector<Vec2> xl(topo->nodes_per_element());
  for (const auto& el : topo->elements()) {
    for (size_t a = 0; a < el.points.size(); ++a) xl[a] = p.mesh.points[el.points[a]];
    diam[el.index] = element_diameter(*topo, el, xl);
  }
  try {
    emum = std::make_unique<EmumSolver>(p.mesh, setup.mesh_props, mc);
  } catch (TangledMeshError& e) {
    e.set_time(t0);
    throw;
  }
  if (chain) {
    const int np = topo->num_points();
    emum_map.setZero(2 * np, static_cast<Eigen::Index>(sdofs.size()));
    std::vector<Vec2> unit(np, Vec2::Zero());
    for (size_t k = 0; k < sdofs.size(); ++k) {
      const DofKey& key = dofs->key(sdofs[k]);
      const int c = key.field == Field::Sx ? 0 : 1;
      unit[key.point][c] = 1.0;
      const auto col = emum->solve(unit);
      unit[key.point][c] = 0.0;
      for (int a = 0; a < np; ++a) {
        emum_map(2 * a, k) = col[a].x();
        emum_map(2 * a + 1, k) = col[a].y();
      }
    }
  }
}

std::vector<Vec2> SlabSolver::Impl::delta(const Eigen::VectorXd& x) const {
  const int np = topo->num_points();
  std::vector<Vec2> d(np, Vec2::Zero());
  if (!pde) return d;
  for (int a : dofs->surface_points()) d[a] = Vec2(x[dofs->geometry(a, 0)], x[dofs->geometry(a, 1)]);
  switch (setup.coupling) {
    case CouplingStrategy::Monolithic:
      for (int a = 0; a < np; ++a)
        if (!dofs->is_surface_point(a)) d[a] = Vec2(x[dofs->geometry(a, 0)], x[dofs->geometry(a, 1)]);
      break;
    case CouplingStrategy::SurfaceMonolithic:
      d = emum->solve(d);
      break;
    case CouplingStrategy::Staggered:
      break;
  }
  return d;
}

Eigen::VectorXd SlabSolver::Impl::initial_guess(const SystemState& p) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dofs->size());
  for (int a = 0; a < topo->num_points(); ++a)
    for (int lv = 0; lv < 2; ++lv)
      for (int c = 0; c < 3; ++c) x[dofs->flow(a, lv, c)] = p.flow[6 * a + 3 + c];
  for (int i = 0; i < dofs->size(); ++i)
    if (dofs->constrained(i)) x[i] = dofs->prescribed(i);
  return x;
}

void SlabSolver::Impl::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& R, bool jac) {
  const auto& lower = prev->mesh;
  const int nen = topo->nodes_per_element();
  const int n = dofs->size();
  const auto d = delta(x);
  R.setZero(n);
  if (jac) pattern.set_zero();

  std::vector<Vec2> xl(nen), xu(nen), xp(nen), pv(nen);
  std::vector<double> fl(6 * nen);
  Eigen::VectorXd r, r2;
  Eigen::MatrixXd K, G;
  for (const auto& el : topo->elements()) {
    for (int a = 0; a < nen; ++a) {
      const int g = el.points[a];
      xl[a] = lower.points[g];
      xu[a] = xl[a] + d[g];
      pv[a] = uprev[g];
      for (int c = 0; c < 6; ++c) fl[6 * a + c] = x[6 * g + c];
    }
    FlowElementInput in{&el, xl, xu, fl, pv, dt, diam[el.index], element_tractions(*topo, el, setup.bcs)};
    flow_element(*topo, setup.fluid, in, r, jac ? &K : nullptr);
    for (int a = 0; a < nen; ++a)
      for (int c = 0; c < 6; ++c) R[6 * el.points[a] + c] += r[6 * a + c];
    if (!jac) continue;
    pattern.add(flow_block[el.index], K);
    if (geom_block[el.index] < 0) continue;
    G.setZero(6 * nen, 2 * nen);
    const auto& gc = geom_cols[el.index];
    const double eps = 1e-7 * diam[el.index];
    for (int j = 0; j < 2 * nen; ++j) {
      if (chain ? emum_map.row(2 * el.points[j / 2] + j % 2).isZero(0.0) : gc[j] < 0) continue;
      xp = xu;
      xp[j / 2][j % 2] += eps;
      FlowElementInput pin = in;
      pin.upper = xp;
      flow_element(*topo, setup.fluid, pin, r2, nullptr);
      G.col(j) = (r2 - r) / eps;
    }
    if (chain) {
      Eigen::MatrixXd E(2 * nen, emum_map.cols());
      for (int j = 0; j < 2 * nen; ++j) E.row(j) = emum_map.row(2 * el.points[j / 2] + j % 2);
      pattern.add(geom_block[el.index], G * E);
    } else {
      pattern.add(geom_block[el.index], G);
    }
  }

  if (pde) {
    const int p = topo->degree();
    std::vector<Vec2> sl(p + 1), su(p + 1), ul(p + 1), uu(p + 1);
    Eigen::VectorXd F1, F2, F1p, F2p, F1m, F2m;
    Eigen::MatrixXd S(2 * (p + 1), 6 * (p + 1));
    for (size_t si = 0; si < spans.size(); ++si) {
      const int eu = spans[si];
      const int s = topo->table_u(eu).span;
      for (int k = 0; k <= p; ++k) {
        const int a = top[s - p + k];
        sl[k] = lower.points[a];
        su[k] = sl[k] + d[a];
        ul[k] = Vec2(x[dofs->flow(a, 0, 0)], x[dofs->flow(a, 0, 1)]);
        uu[k] = Vec2(x[dofs->flow(a, 1, 0)], x[dofs->flow(a, 1, 1)]);
      }
      surface_span_residual(setup.scheme, *topo, eu, sl, su, ul, uu, dt, F1, F2);
      for (int k = 0; k <= p; ++k) {
        const int a = top[s - p + k];
        if (!dofs->is_surface_point(a)) continue;
        R[dofs->geometry(a, 0)] += F2[k];
        R[dofs->geometry(a, 1)] += F1[k];
      }
      if (!jac) continue;
      S.setZero();
      const auto& cols = surf_cols[si];
      double uscale = 1.0;
      for (int k = 0; k <= p; ++k) uscale = std::max({uscale, ul[k].norm(), uu[k].norm()});
      const double xscale = (sl[p] - sl[0]).norm() + 1e-300;
      for (int j = 0; j < 6 * (p + 1); ++j) {
        if (cols[j] < 0) continue;
        const int k = j / 6, v = j % 6;
        const double eps = v < 4 ? 1e-6 * uscale : 1e-6 * xscale;
        auto perturb = [&](double e, Eigen::VectorXd& f1, Eigen::VectorXd& f2) {
          auto ul2 = ul, uu2 = uu, su2 = su;
          if (v < 2)
            ul2[k][v] += e;
          else if (v < 4)
            uu2[k][v - 2] += e;
          else
            su2[k][v - 4] += e;
          surface_span_residual(setup.scheme, *topo, eu, sl, su2, ul2, uu2, dt, f1, f2);
        };
        perturb(eps, F1p, F2p);
        perturb(-eps, F1m, F2m);
        for (int kk = 0; kk <= p; ++kk) {
          S(2 * kk, j) = (F2p[kk] - F2m[kk]) / (2 * eps);
          S(2 * kk + 1, j) = (F1p[kk] - F1m[kk]) / (2 * eps);
        }
      }
      pattern.add(surf_block[si], S);
    }
  }

  if (with_mesh) {
    const auto& Km = emum->stiffness();
    for (int k = 0; k < Km.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(Km, k); it; ++it) {
        const int rp = static_cast<int>(it.row()) / 2, rc = static_cast<int>(it.row()) % 2;
        if (dofs->is_surface_point(rp)) continue;
        const int cp = static_cast<int>(it.col()) / 2, cc = static_cast<int>(it.col()) % 2;
        const int gr = dofs->geometry(rp, rc);
        R[gr] += it.value() * d[cp][cc];
        if (jac) pattern.add_entry(gr, dofs->geometry(cp, cc), it.value());
      }
  }

  for (int i = 0; i < n; ++i)
    if (dofs->constrained(i)) R[i] = x[i] - dofs->prescribed(i);
  if (jac) pattern.identity_rows(dofs->dirichlet_mask());
}

SlabSolver::SlabSolver(const SpatialMesh& reference, ProblemSetup setup)
    : impl_(std::make_unique<Impl>(reference, std::move(setup))) {}

SlabSolver::~SlabSolver() = default;

const DofMap& SlabSolver::dofs() const { return *impl_->dofs; }
const ProblemSetup& SlabSolver::setup() const { return impl_->setup; }
const std::vector<std::string>& SlabSolver::bc_log() const { return impl_->log; }

Eigen::VectorXd SlabSolver::initial_guess(const SystemState& prev) const { return impl_->initial_guess(prev); }

Eigen::VectorXd SlabSolver::residual(const SystemState& prev, double dt, const Eigen::VectorXd& x) {
  impl_->begin_slab(prev, dt);
  Eigen::VectorXd R;
  impl_->evaluate(x, R, false);
  return R;
}

Eigen::SparseMatrix<double> SlabSolver::jacobian(const SystemState& prev, double dt, const Eigen::VectorXd& x) {
  impl_->begin_slab(prev, dt);
  Eigen::VectorXd R;
  impl_->evaluate(x, R, true);
  return impl_->pattern.matrix();
}

std::vector<Vec2> SlabSolver::displacement(const SystemState& prev, double dt, const Eigen::VectorXd& x) {
  impl_->begin_slab(prev, dt);
  return impl_->delta(x);
}

SystemState SlabSolver::solve_slab(const SystemState& prev, double dt, SlabReport* report) {
  Impl& m = *impl_;
  m.begin_slab(prev, dt);
  const auto& nw = m.setup.newton;
  Eigen::VectorXd x = m.initial_guess(prev);
  Eigen::VectorXd R, Rt, xt;
  std::vector<double> history;
  try {
    m.evaluate(x, R, false);
  } catch (TangledMeshError& e) {
    e.set_time(m.t0);
    throw;
  }
  double rn = R.norm();
  const double r0 = rn;
  history.push_back(rn);
  int it = 0;
  while (!(rn <= nw.atol || (it > 0 && rn <= nw.rtol * r0))) {
    if (it >= nw.max_iterations)
      throw NonconvergenceError(fmt::format("Newton did not converge in {} iterations at t={} (|R|={:.3e})",
                                            nw.max_iterations, m.t0, rn),
                                history, m.t0);
    ++it;
    m.evaluate(x, R, true);
    m.lu.factorize(m.pattern.matrix());
    const Eigen::VectorXd dx = m.lu.solve(-R);
    double alpha = 1.0;
    bool accepted = false, tangled = false;
    std::string tangle_msg;
    const int tries = nw.line_search ? nw.max_halvings + 1 : 1;
    for (int h = 0; h < tries; ++h, alpha *= 0.5) {
      xt = x + alpha * dx;
      try {
        m.evaluate(xt, Rt, false);
        tangled = false;
      } catch (const TangledMeshError& e) {
        tangled = true;
        tangle_msg = e.what();
        continue;
      }
      if (!nw.line_search || Rt.norm() < rn || h == tries - 1) {
        accepted = true;
        break;
      }
    }
    if (!accepted || tangled) throw TangledMeshError(fmt::format("mesh tangled during Newton at t={}: {}", m.t0, tangle_msg), m.t0);
    x = xt;
    R = Rt;
    rn = R.norm();
    history.push_back(rn);
  }

  // Final geometry.
  const int np = m.topo->num_points();
  std::vector<Vec2> d = m.delta(x);
  if (!m.pde) {
    std::vector<Vec2> pts(m.top.size()), ubar(m.top.size());
    for (size_t i = 0; i < m.top.size(); ++i) {
      const int a = m.top[i];
      pts[i] = prev.mesh.points[a];
      ubar[i] = 0.5 * Vec2(x[6 * a] + x[6 * a + 3], x[6 * a + 1] + x[6 * a + 4]);
    }
    std::vector<Vec2> moved;
    if (m.setup.scheme.kind == SchemeKind::NodeNormal)
      moved = node_normal_update(pts, ubar, dt);
    else
      moved = greville_update(NurbsCurve(m.topo->knots_u(), pts), ubar, dt);
    std::vector<Vec2> zd(np, Vec2::Zero());
    for (size_t i = 0; i < m.top.size(); ++i) zd[m.top[i]] = moved[i] - pts[i];
    for (int a : m.mc.surface_points)
      for (int c = 0; c < 2; ++c)
        if (m.mc.kind[a][c] != MeshDof::Prescribed) zd[a][c] = 0.0;
    d = m.emum->solve(zd);
  } else if (m.setup.coupling == CouplingStrategy::Staggered) {
    d = m.emum->solve(d);
  }

  SystemState next;
  next.slab = prev.slab + 1;
  next.time = prev.time + dt;
  next.mesh.topo = prev.mesh.topo;
  next.mesh.points.resize(np);
  for (int a = 0; a < np; ++a) next.mesh.points[a] = prev.mesh.points[a] + d[a];
  next.flow = x.head(6 * np);
  if (!(mesh_quality(next.mesh) > 0.0))
    throw TangledMeshError(fmt::format("mesh tangled at t={}", next.time), m.t0);

  if (report) {
    report->iterations = it;
    report->history = history;
    SpaceTimeSlab slab{prev.time, next.time, prev.mesh, next.mesh};
    report->flux = flux_integrals(slab, next.flow);
  }
  return next;
}

Simulation::Simulation(const SpatialMesh& initial, ProblemSetup setup, double dt, double t_end)
    : setup_(std::move(setup)), dt_(dt), t_end_(t_end) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive", "dt");
  if (!(t_end > 0.0)) throw ConfigError("tmax must be positive", "tmax");
  num_slabs_ = static_cast<int>(std::ceil(t_end / dt - 1e-9));
  solver_ = std::make_unique<SlabSolver>(initial, setup_);
  state_ = initial_state(initial);
  record_.rows.push_back(make_row(0.0, initial, setup_.fluid.density, compute_mass(initial, setup_.fluid.density)));
}

void Simulation::restore(SystemState state, RunRecord record) {
  state_ = std::move(state);
  record_ = std::move(record);
}

bool Simulation::done() const { return state_.slab >= num_slabs_; }

void Simulation::step() {
  SystemState next = solver_->solve_slab(state_, dt_, &report_);
  // Times are slab multiples to avoid drift.
  next.time = next.slab * dt_;
  record_.flux_num += report_.flux.num;
  record_.flux_den += report_.flux.den;
  record_.rows.push_back(make_row(next.time, next.mesh, setup_.fluid.density, record_.rows.front().mass));
  state_ = std::move(next);
}

const RunRecord& Simulation::run(const std::function<void(const Simulation&)>& after_slab) {
  try {
    while (!done()) {
      step();
      if (after_slab) after_slab(*this);
    }
    record_.status = RunStatus::Completed;
  } catch (const TangledMeshError& e) {
    record_.status = RunStatus::Tangled;
    record_.message = e.what();
  } catch (const NonconvergenceError& e) {
    record_.status = RunStatus::Diverged;
    record_.message = e.what();
  } catch (const SingularityError& e) {
    record_.status = RunStatus::Diverged;
    record_.message = e.what();
  }
  return record_;
}

}  // namespace fsflow
