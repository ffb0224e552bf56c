#pragma once

// Fixed-pattern sparse assembly and the direct solver behind the Newton steps.

#include <memory>
#include <vector>

#include <Eigen/Sparse>

namespace fsflow {

/// Sparse matrix whose pattern is the union of dense blocks registered up
/// front; every block keeps the value slots of its entries so repeated
/// assembly is a plain scatter.
class BlockPattern {
 public:
  explicit BlockPattern(int n);

  /// Registers a block; negative indices are skipped on scatter. Returns its id.
  int add_block(std::vector<int> rows, std::vector<int> cols);
  /// Builds the pattern, always including the diagonal.
  void finalize();

  void set_zero();
  /// Adds m (rows x cols of the block) into the matrix.
  void add(int block, const Eigen::MatrixXd& m);
  void add_entry(int row, int col, double v);
  /// Clears the masked rows and puts 1 on their diagonal.
  void identity_rows(const std::vector<char>& mask);

  int size() const noexcept { return n_; }
  const Eigen::SparseMatrix<double>& matrix() const noexcept { return A_; }
  Eigen::SparseMatrix<double>& matrix() noexcept { return A_; }

 private:
  struct Block {
    std::vector<int> rows, cols;
    std::vector<int> slots;  ///< rows.size() * cols.size(), column-major; -1 when skipped
  };
  int slot(int row, int col) const;

  int n_;
  std::vector<Block> blocks_;
  Eigen::SparseMatrix<double> A_;
  std::vector<std::vector<int>> row_slots_;
};

/// Sparse direct LU with symbolic analysis reused while the pattern is unchanged.
class SparseLU {
 public:
  SparseLU();
  ~SparseLU();
  SparseLU(const SparseLU&) = delete;
  SparseLU& operator=(const SparseLU&) = delete;

  /// Throws SingularityError when the factorization fails.
  void factorize(const Eigen::SparseMatrix<double>& A);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  static const char* backend();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fsflow
