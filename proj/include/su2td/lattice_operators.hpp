#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "su2td/sector_basis.hpp"

namespace su2td {

/// Sparse real symmetric operator over a sector (or subsystem) basis.
/// Constructed from upper-triangle triplets; the lower triangle is filled by
/// the mirror rule, so stored values are symmetric by construction. Row
/// access covers the full pattern.
class SparseSymmetricOperator {
 public:
  struct Triplet {
    std::uint32_t row;
    std::uint32_t col;
    double value;
  };

  /// Build from upper-triangle triplets (row <= col required, duplicates
  /// are merged by summation).
  static SparseSymmetricOperator from_upper_triplets(std::size_t dim,
                                                     std::vector<Triplet> upper);

  std::size_t dim() const { return dim_; }
  std::size_t nnz() const { return col_.size(); }

  struct Entry {
    std::uint32_t col;
    double value;
  };
  std::span<const Entry> row(std::size_t r) const {
    return {entries_.data() + row_ptr_[r], entries_.data() + row_ptr_[r + 1]};
  }

  /// Stored value at (r, c); 0 for absent entries.
  double value_at(std::size_t r, std::size_t c) const;

  void apply(const double* x, double* y) const;  // y = A x
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  double expectation(const Eigen::VectorXd& v) const;  // v' A v
  double trace() const;
  Eigen::MatrixXd to_dense() const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> col_;  // kept for binary search in value_at
  std::vector<Entry> entries_;
};

/// J1-J2 Heisenberg chain with open boundaries inside a fixed-magnetization
/// sector:  sum_j J1 S_j.S_{j+1} + sum_j J2 S_j.S_{j+2}.
/// Matrix elements are exact dyadic rationals (+-J/4 diagonal, J/2 swap).
SparseSymmetricOperator build_hamiltonian(const SectorBasis& basis, double j1, double j2);

/// S_tot^2 = (3N/4) Id + 2 sum_{i<j} S_i.S_j within the sector.
SparseSymmetricOperator build_total_spin_squared(const SectorBasis& basis);

/// S_A^2 on the full 2^{n_a}-dimensional subsystem space (basis index ==
/// configuration bits). Block diagonal in m_A by construction.
SparseSymmetricOperator build_subsystem_spin_squared(int n_a);

/// U^T op U restricted to one parity block. Validates that op commutes with
/// site reversal (entrywise to 1e-12) before projecting.
Eigen::MatrixXd project_to_parity(const SparseSymmetricOperator& op,
                                  const ParityBasis& pb, Parity sector);

/// Diagonal expectations v_k' A v_k for every column v_k. The _serial and
/// _parallel variants produce identical results; the unsuffixed form
/// dispatches on the OpenMP thread count.
Eigen::VectorXd batch_expectations(const SparseSymmetricOperator& op,
                                   const Eigen::MatrixXd& vectors);
Eigen::VectorXd batch_expectations_serial(const SparseSymmetricOperator& op,
                                          const Eigen::MatrixXd& vectors);
Eigen::VectorXd batch_expectations_parallel(const SparseSymmetricOperator& op,
                                            const Eigen::MatrixXd& vectors);

/// In-memory cache of sector operators keyed by (N, two_m, J1, J2).
/// Thread-safe; entries are immutable once built.
class OperatorCache {
 public:
  std::shared_ptr<const SparseSymmetricOperator> hamiltonian(const SectorBasis& basis,
                                                             double j1, double j2);
  std::shared_ptr<const SparseSymmetricOperator> total_spin_squared(const SectorBasis& basis);

 private:
  struct HamKey {
    int n, two_m;
    double j1, j2;
    bool operator<(const HamKey& o) const;
  };
  std::mutex mutex_;
  std::map<HamKey, std::shared_ptr<const SparseSymmetricOperator>> hams_;
  std::map<std::pair<int, int>, std::shared_ptr<const SparseSymmetricOperator>> s2s_;
};

}  // namespace su2td
