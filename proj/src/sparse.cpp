#include "fsflow/sparse.hpp"

#include <algorithm>

#include <Eigen/SparseLU>

#include "fsflow/errors.hpp"

namespace fsflow {

BlockPattern::BlockPattern(int n) : n_(n), A_(n, n) {}

int BlockPattern::add_block(std::vector<int> rows, std::vector<int> cols) {
  blocks_.push_back({std::move(rows), std::move(cols), {}});
  return static_cast<int>(blocks_.size()) - 1;
}

void BlockPattern::finalize() {
  std::vector<std::vector<int>> col_rows(n_);
  for (int i = 0; i < n_; ++i) col_rows[i].push_back(i);
  for (const auto& b : blocks_)
    for (int c : b.cols) {
      if (c < 0) continue;
      for (int r : b.rows)
        if (r >= 0) col_rows[c].push_back(r);
    }
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < n_; ++c) {
    auto& v = col_rows[c];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    for (int r : v) trip.emplace_back(r, c, 0.0);
  }
  A_.resize(n_, n_);
  A_.setFromTriplets(trip.begin(), trip.end());
  A_.makeCompressed();
  for (auto& b : blocks_) {
    b.slots.assign(b.rows.size() * b.cols.size(), -1);
    for (size_t j = 0; j < b.cols.size(); ++j)
      for (size_t i = 0; i < b.rows.size(); ++i)
        if (b.rows[i] >= 0 && b.cols[j] >= 0) b.slots[i + j * b.rows.size()] = slot(b.rows[i], b.cols[j]);
  }
  row_slots_.assign(n_, {});
  for (int c = 0; c < n_; ++c)
    for (int k = A_.outerIndexPtr()[c]; k < A_.outerIndexPtr()[c + 1]; ++k) row_slots_[A_.innerIndexPtr()[k]].push_back(k);
}

int BlockPattern::slot(int row, int col) const {
  const int* inner = A_.innerIndexPtr();
  const int lo = A_.outerIndexPtr()[col], hi = A_.outerIndexPtr()[col + 1];
  const int* it = std::lower_bound(inner + lo, inner + hi, row);
  if (it == inner + hi || *it != row) return -1;
  return static_cast<int>(it - inner);
}

void BlockPattern::set_zero() { std::fill(A_.valuePtr(), A_.valuePtr() + A_.nonZeros(), 0.0); }

void BlockPattern::add(int block, const Eigen::MatrixXd& m) {
  const Block& b = blocks_[block];
  double* val = A_.valuePtr();
  const size_t nr = b.rows.size();
  for (size_t j = 0; j < b.cols.size(); ++j)
    for (size_t i = 0; i < nr; ++i) {
      const int s = b.slots[i + j * nr];
      if (s >= 0) val[s] += m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
}

void BlockPattern::add_entry(int row, int col, double v) {
  const int s = slot(row, col);
  if (s < 0) throw Error("entry outside the sparsity pattern");
  A_.valuePtr()[s] += v;
}

void BlockPattern::identity_rows(const std::vector<char>& mask) {
  double* val = A_.valuePtr();
  for (int r = 0; r < n_; ++r) {
    if (!mask[r]) continue;
    for (int s : row_slots_[r]) val[s] = 0.0;
    val[slot(r, r)] = 1.0;
  }
}

struct SparseLU::Impl {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  Eigen::Index n = -1, nnz = -1;
};

SparseLU::SparseLU() : impl_(std::make_unique<Impl>()) {}
SparseLU::~SparseLU() = default;

void SparseLU::factorize(const Eigen::SparseMatrix<double>& A) {
  if (!impl_->analyzed || impl_->n != A.rows() || impl_->nnz != A.nonZeros()) {
    impl_->lu.analyzePattern(A);
    impl_->analyzed = true;
    impl_->n = A.rows();
    impl_->nnz = A.nonZeros();
  }
  impl_->lu.factorize(A);
  if (impl_->lu.info() != Eigen::Success) throw SingularityError("sparse LU factorization failed");
}

Eigen::VectorXd SparseLU::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = impl_->lu.solve(b);
  if (impl_->lu.info() != Eigen::Success) throw SingularityError("sparse LU solve failed");
  return x;
}

const char* SparseLU::backend() {
  return "eigen-sparselu";
}

}  // namespace fsflow
