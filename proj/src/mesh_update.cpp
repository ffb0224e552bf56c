#include "fsflow/mesh_update.hpp"

#include <cmath>

#include <fmt/format.h>

#include "fsflow/errors.hpp"

namespace fsflow {

void MeshElasticityProps::validate() const {
  if (!(mu > 0.0)) throw ConfigError("mesh mu must be positive", "mesh.mu");
  if (!(lambda >= 0.0)) throw ConfigError("mesh lambda must be nonnegative", "mesh.lambda");
  if (!(chi >= 0.0)) throw ConfigError("stiffening exponent must be nonnegative", "mesh.chi");
}

namespace {

double element_area(const MeshTopology& topo, const Element& el, const std::vector<Vec2>& points) {
  const int nq = static_cast<int>(topo.rule().space_points.size());
  ParamBasis pb;
  double area = 0.0;
  for (int qv = 0; qv < nq; ++qv)
    for (int qu = 0; qu < nq; ++qu) {
      tabulate_element_point(topo, el, qu, qv, pb);
      Mat2 J = Mat2::Zero();
      for (size_t a = 0; a < el.points.size(); ++a) {
        J.col(0) += pb.nu[a] * points[el.points[a]];
        J.col(1) += pb.nv[a] * points[el.points[a]];
      }
      area += J.determinant() * pb.weight;
    }
  return area;
}

}  // namespace

std::vector<ElementLame> stiffen(const MeshElasticityProps& props, const SpatialMesh& mesh) {
  const auto& topo = mesh.topology();
  std::vector<double> area(topo.num_elements());
  double mean = 0.0;
  for (const auto& el : topo.elements()) {
    area[el.index] = element_area(topo, el, mesh.points);
    mean += area[el.index];
  }
  mean /= topo.num_elements();
  std::vector<ElementLame> out(topo.num_elements());
  for (int e = 0; e < topo.num_elements(); ++e) {
    if (!(area[e] > 0.0)) throw TangledMeshError(fmt::format("element {} has nonpositive area", e));
    const double s = props.chi == 0.0 ? 1.0 : std::pow(mean / area[e], props.chi);
    out[e] = {props.lambda * s, props.mu * s};
  }
  return out;
}

MeshConstraints mesh_constraints(const MeshTopology& topo) {
  MeshConstraints mc;
  mc.kind.assign(topo.num_points(), {MeshDof::Free, MeshDof::Free});
  for (int a = 0; a < topo.num_points(); ++a) {
    bool fixed = false, free = false;
    std::array<bool, 2> wall{false, false};
    for (const auto& [edge, tag] : topo.point_tags(a)) {
      switch (tag) {
        case BoundaryTag::Fixed:
        case BoundaryTag::NoSlip:
        case BoundaryTag::Inflow:
          fixed = true;
          break;
        case BoundaryTag::Slip:
        case BoundaryTag::Outflow:
          wall[edge_normal_axis(edge)] = true;
          break;
        case BoundaryTag::Free:
          free = true;
          break;
      }
    }
    auto& k = mc.kind[a];
    if (fixed) {
      k = {MeshDof::Zero, MeshDof::Zero};
      continue;
    }
    for (int c = 0; c < 2; ++c) k[c] = wall[c] ? MeshDof::Zero : (free ? MeshDof::Prescribed : MeshDof::Free);
    if (free) mc.surface_points.push_back(a);
  }
  return mc;
}

Eigen::SparseMatrix<double> emum_stiffness(const SpatialMesh& mesh, const MeshElasticityProps& props) {
  const auto& topo = mesh.topology();
  const auto lame = stiffen(props, mesh);
  const int nen = topo.nodes_per_element();
  const int nq = static_cast<int>(topo.rule().space_points.size());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(topo.num_elements()) * 4 * nen * nen);
  ParamBasis pb;
  Eigen::MatrixXd Ke(2 * nen, 2 * nen);
  std::vector<Vec2> g(nen);
  for (const auto& el : topo.elements()) {
    Ke.setZero();
    const double lam = lame[el.index].lambda, mu = lame[el.index].mu;
    for (int qv = 0; qv < nq; ++qv)
      for (int qu = 0; qu < nq; ++qu) {
        tabulate_element_point(topo, el, qu, qv, pb);
        Mat2 J = Mat2::Zero();
        for (int a = 0; a < nen; ++a) {
          J.col(0) += pb.nu[a] * mesh.points[el.points[a]];
          J.col(1) += pb.nv[a] * mesh.points[el.points[a]];
        }
        const double det = J.determinant();
        if (!(det > 0.0)) throw TangledMeshError(fmt::format("nonpositive Jacobian in element {}", el.index));
        const Mat2 JinvT = J.inverse().transpose();
        for (int a = 0; a < nen; ++a) g[a] = JinvT * Vec2(pb.nu[a], pb.nv[a]);
        const double w = det * pb.weight;
        for (int a = 0; a < nen; ++a)
          for (int b = 0; b < nen; ++b) {
            const double gg = g[a].dot(g[b]);
            for (int i = 0; i < 2; ++i)
              for (int j = 0; j < 2; ++j)
                Ke(2 * a + i, 2 * b + j) +=
                    w * (lam * g[a][i] * g[b][j] + mu * g[a][j] * g[b][i] + (i == j ? mu * gg : 0.0));
          }
      }
    for (int a = 0; a < nen; ++a)
      for (int b = 0; b < nen; ++b)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            trip.emplace_back(2 * el.points[a] + i, 2 * el.points[b] + j, Ke(2 * a + i, 2 * b + j));
  }
  const int n = 2 * topo.num_points();
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

EmumSolver::EmumSolver(const SpatialMesh& mesh, const MeshElasticityProps& props, MeshConstraints constraints)
    : constraints_(std::move(constraints)), K_(emum_stiffness(mesh, props)) {
  const int n = 2 * mesh.num_points();
  std::vector<int> slot(n, -1);
  for (int a = 0; a < mesh.num_points(); ++a)
    for (int c = 0; c < 2; ++c) {
      const int i = 2 * a + c;
      if (constraints_.kind[a][c] == MeshDof::Free) {
        slot[i] = static_cast<int>(free_.size());
        free_.push_back(i);
      } else {
        slot[i] = static_cast<int>(fixed_.size());
        fixed_.push_back(i);
      }
    }
  if (fixed_.empty()) throw ConfigError("mesh elasticity problem has no Dirichlet boundary", "tags");
  std::vector<Eigen::Triplet<double>> tff, tfd;
  for (int k = 0; k < K_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K_, k); it; ++it) {
      const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
      const bool rf = constraints_.kind[r / 2][r % 2] == MeshDof::Free;
      const bool cf = constraints_.kind[c / 2][c % 2] == MeshDof::Free;
      if (!rf) continue;
      if (cf)
        tff.emplace_back(slot[r], slot[c], it.value());
      else
        tfd.emplace_back(slot[r], slot[c], it.value());
    }
  const int nf = static_cast<int>(free_.size());
  Eigen::SparseMatrix<double> Kff(nf, nf);
  Kff.setFromTriplets(tff.begin(), tff.end());
  Kfd_.resize(nf, static_cast<int>(fixed_.size()));
  Kfd_.setFromTriplets(tfd.begin(), tfd.end());
  ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  if (nf > 0) {
    ldlt_->compute(Kff);
    bool ok = ldlt_->info() == Eigen::Success;
    if (ok) {
      const auto& d = ldlt_->vectorD();
      const double dmax = d.cwiseAbs().maxCoeff();
      ok = d.minCoeff() > 1e-12 * dmax;
    }
    if (!ok) throw ConfigError("mesh elasticity system is singular", "tags");
  }
}

std::vector<Vec2> EmumSolver::solve(const std::vector<Vec2>& boundary) const {
  const int npts = static_cast<int>(constraints_.kind.size());
  std::vector<Vec2> z(npts, Vec2::Zero());
  Eigen::VectorXd zd(fixed_.size());
  for (size_t k = 0; k < fixed_.size(); ++k) {
    const int i = fixed_[k];
    zd[k] = constraints_.kind[i / 2][i % 2] == MeshDof::Prescribed ? boundary[i / 2][i % 2] : 0.0;
    z[i / 2][i % 2] = zd[k];
  }
  if (!free_.empty()) {
    const Eigen::VectorXd zf = ldlt_->solve(-(Kfd_ * zd));
    for (size_t k = 0; k < free_.size(); ++k) z[free_[k] / 2][free_[k] % 2] = zf[k];
  }
  return z;
}

std::vector<Vec2> assemble_emum(const SpatialMesh& mesh, const std::vector<Vec2>& z_D,
                                const MeshElasticityProps& props, const MeshConstraints& constraints) {
  return EmumSolver(mesh, props, constraints).solve(z_D);
}

}  // namespace fsflow
