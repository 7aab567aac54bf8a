#include "su2td/lattice_operators.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "su2td/errors.hpp"

namespace su2td {

SparseSymmetricOperator SparseSymmetricOperator::from_upper_triplets(
    std::size_t dim, std::vector<Triplet> upper) {
  for (const auto& t : upper) {
    if (t.row > t.col || t.col >= dim) {
      throw argument_error("SparseSymmetricOperator: triplet not in upper triangle");
    }
  }
  // Mirror below the diagonal, then sort and merge duplicates.
  std::vector<Triplet> full;
  full.reserve(2 * upper.size());
  for (const auto& t : upper) {
    full.push_back(t);
    if (t.row != t.col) full.push_back(Triplet{t.col, t.row, t.value});
  }
  std::sort(full.begin(), full.end(), [](const Triplet& a, const Triplet& b) {
    return std::tie(a.row, a.col) < std::tie(b.row, b.col);
  });

  SparseSymmetricOperator op;
  op.dim_ = dim;
  op.row_ptr_.assign(dim + 1, 0);
  op.col_.reserve(full.size());
  op.entries_.reserve(full.size());
  std::size_t i = 0;
  while (i < full.size()) {
    double v = full[i].value;
    std::size_t j = i + 1;
    while (j < full.size() && full[j].row == full[i].row && full[j].col == full[i].col) {
      v += full[j].value;
      ++j;
    }
    op.col_.push_back(full[i].col);
    op.entries_.push_back(Entry{full[i].col, v});
    ++op.row_ptr_[full[i].row + 1];
    i = j;
  }
  for (std::size_t r = 0; r < dim; ++r) op.row_ptr_[r + 1] += op.row_ptr_[r];
  return op;
}

double SparseSymmetricOperator::value_at(std::size_t r, std::size_t c) const {
  const auto begin = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
  const auto end = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
  auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(c));
  if (it == end || *it != c) return 0.0;
  return entries_[static_cast<std::size_t>(it - col_.begin())].value;
}

void SparseSymmetricOperator::apply(const double* x, double* y) const {
  for (std::size_t r = 0; r < dim_; ++r) {
    double acc = 0.0;
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      acc += entries_[k].value * x[entries_[k].col];
    }
    y[r] = acc;
  }
}

Eigen::VectorXd SparseSymmetricOperator::apply(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_) {
    throw argument_error("SparseSymmetricOperator::apply: dimension mismatch");
  }
  Eigen::VectorXd y(x.size());
  apply(x.data(), y.data());
  return y;
}

double SparseSymmetricOperator::expectation(const Eigen::VectorXd& v) const {
  return v.dot(apply(v));
}

double SparseSymmetricOperator::trace() const {
  double t = 0.0;
  for (std::size_t r = 0; r < dim_; ++r) t += value_at(r, r);
  return t;
}

Eigen::MatrixXd SparseSymmetricOperator::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim_),
                                            static_cast<Eigen::Index>(dim_));
  for (std::size_t r = 0; r < dim_; ++r) {
    for (auto e : row(r)) m(static_cast<Eigen::Index>(r), e.col) = e.value;
  }
  return m;
}

namespace {

struct Bond {
  int i, j;
  double coupling;
};

std::vector<Bond> chain_bonds(int n, double j1, double j2) {
  std::vector<Bond> bonds;
  if (j1 != 0.0) {
    for (int s = 0; s + 1 < n; ++s) bonds.push_back(Bond{s, s + 1, j1});
  }
  if (j2 != 0.0) {
    for (int s = 0; s + 2 < n; ++s) bonds.push_back(Bond{s, s + 2, j2});
  }
  return bonds;
}

/// Row-parallel assembly of the upper-triangle triplets for a sum of
/// S_i.S_j bond terms. Each row is generated independently, so the result
/// is identical for any thread count.
std::vector<SparseSymmetricOperator::Triplet> assemble_bond_triplets(
    const SectorBasis& basis, const std::vector<Bond>& bonds,
    double diagonal_shift, double exchange_scale) {
  const std::size_t dim = basis.size();
  std::vector<std::vector<SparseSymmetricOperator::Triplet>> rows(dim);

#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(dim); ++k) {
    auto& out = rows[static_cast<std::size_t>(k)];
    const SpinConfig s = basis.config(static_cast<std::size_t>(k));
    double diag = diagonal_shift;
    for (const Bond& b : bonds) {
      const bool bi = (s >> b.i) & 1u;
      const bool bj = (s >> b.j) & 1u;
      if (bi == bj) {
        diag += 0.25 * b.coupling * exchange_scale;
      } else {
        diag -= 0.25 * b.coupling * exchange_scale;
        const SpinConfig swapped =
            s ^ ((SpinConfig{1} << b.i) | (SpinConfig{1} << b.j));
        const std::size_t kp = basis.index_of(swapped);
        if (static_cast<std::size_t>(k) < kp) {
          out.push_back({static_cast<std::uint32_t>(k),
                         static_cast<std::uint32_t>(kp),
                         0.5 * b.coupling * exchange_scale});
        }
      }
    }
    if (diag != 0.0) {
      out.push_back({static_cast<std::uint32_t>(k),
                     static_cast<std::uint32_t>(k), diag});
    }
  }

  std::vector<SparseSymmetricOperator::Triplet> triplets;
  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  triplets.reserve(total);
  for (auto& r : rows) triplets.insert(triplets.end(), r.begin(), r.end());
  return triplets;
}

}  // namespace

SparseSymmetricOperator build_hamiltonian(const SectorBasis& basis, double j1, double j2) {
  if (!std::isfinite(j1) || !std::isfinite(j2)) {
    throw argument_error("build_hamiltonian: couplings must be finite");
  }
  auto triplets = assemble_bond_triplets(basis, chain_bonds(basis.n_sites(), j1, j2),
                                         0.0, 1.0);
  return SparseSymmetricOperator::from_upper_triplets(basis.size(), std::move(triplets));
}

SparseSymmetricOperator build_total_spin_squared(const SectorBasis& basis) {
  const int n = basis.n_sites();
  std::vector<Bond> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.push_back(Bond{i, j, 1.0});
  }
  // S_tot^2 = (3N/4) Id + 2 sum_{i<j} S_i.S_j
  auto triplets = assemble_bond_triplets(basis, pairs, 0.75 * n, 2.0);
  return SparseSymmetricOperator::from_upper_triplets(basis.size(), std::move(triplets));
}

SparseSymmetricOperator build_subsystem_spin_squared(int n_a) {
  if (n_a < 1 || n_a > 12) {
    throw argument_error("build_subsystem_spin_squared: n_a out of range [1,12]");
  }
  // Full 2^{n_a} space: index == configuration bits.
  std::vector<SpinConfig> configs(std::size_t{1} << n_a);
  for (std::size_t c = 0; c < configs.size(); ++c) configs[c] = static_cast<SpinConfig>(c);
  SectorBasis full(n_a, /*two_m=*/0, std::move(configs));  // two_m unused here
  std::vector<Bond> pairs;
  for (int i = 0; i < n_a; ++i) {
    for (int j = i + 1; j < n_a; ++j) pairs.push_back(Bond{i, j, 1.0});
  }
  auto triplets = assemble_bond_triplets(full, pairs, 0.75 * n_a, 2.0);
  return SparseSymmetricOperator::from_upper_triplets(full.size(), std::move(triplets));
}

Eigen::MatrixXd project_to_parity(const SparseSymmetricOperator& op,
                                  const ParityBasis& pb, Parity sector) {
  const SectorBasis& basis = pb.parent();
  if (op.dim() != basis.size()) {
    throw argument_error("project_to_parity: operator/basis dimension mismatch");
  }
  // Reflection permutation on sector indices.
  std::vector<std::uint32_t> perm(op.dim());
  for (std::size_t i = 0; i < op.dim(); ++i) {
    perm[i] = static_cast<std::uint32_t>(
        basis.index_of(reflect(basis.config(i), basis.n_sites())));
  }
  // [op, R] = 0 <=> op[perm(r), perm(c)] == op[r, c] for every entry.
  for (std::size_t r = 0; r < op.dim(); ++r) {
    for (auto e : op.row(r)) {
      if (std::abs(op.value_at(perm[r], perm[e.col]) - e.value) > 1e-12) {
        throw property_violation(
            "project_to_parity: operator does not commute with reflection");
      }
    }
  }

  const auto bdim = static_cast<Eigen::Index>(pb.dim(sector));
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(bdim, bdim);
  const auto& cols = pb.columns(sector);

#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t p = 0; p < static_cast<std::int64_t>(cols.size()); ++p) {
    const auto& cp = cols[static_cast<std::size_t>(p)];
    const std::uint32_t supp[2] = {cp.rep, cp.mirror};
    const double coeff[2] = {cp.rep_coeff, cp.mirror_coeff};
    const int nsupp = (cp.mirror == cp.rep) ? 1 : 2;
    for (int s = 0; s < nsupp; ++s) {
      for (auto e : op.row(supp[s])) {
        const auto q = pb.support(sector, e.col);
        if (q.col >= 0) {
          block(static_cast<Eigen::Index>(p), q.col) += coeff[s] * e.value * q.coeff;
        }
      }
    }
  }
  return block;
}

Eigen::VectorXd batch_expectations_serial(const SparseSymmetricOperator& op,
                                          const Eigen::MatrixXd& vectors) {
  Eigen::VectorXd out(vectors.cols());
  Eigen::VectorXd work(vectors.rows());
  for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
    op.apply(vectors.col(k).data(), work.data());
    out[k] = vectors.col(k).dot(work);
  }
  return out;
}

Eigen::VectorXd batch_expectations_parallel(const SparseSymmetricOperator& op,
                                            const Eigen::MatrixXd& vectors) {
  Eigen::VectorXd out(vectors.cols());
#pragma omp parallel
  {
    Eigen::VectorXd work(vectors.rows());
#pragma omp for schedule(static)
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(vectors.cols()); ++k) {
      op.apply(vectors.col(k).data(), work.data());
      out[k] = vectors.col(k).dot(work);
    }
  }
  return out;
}

Eigen::VectorXd batch_expectations(const SparseSymmetricOperator& op,
                                   const Eigen::MatrixXd& vectors) {
#ifdef _OPENMP
  if (omp_get_max_threads() > 1) return batch_expectations_parallel(op, vectors);
#endif
  return batch_expectations_serial(op, vectors);
}

bool OperatorCache::HamKey::operator<(const HamKey& o) const {
  return std::tie(n, two_m, j1, j2) < std::tie(o.n, o.two_m, o.j1, o.j2);
}

std::shared_ptr<const SparseSymmetricOperator> OperatorCache::hamiltonian(
    const SectorBasis& basis, double j1, double j2) {
  const HamKey key{basis.n_sites(), basis.two_m(), j1, j2};
  {
    std::lock_guard lock(mutex_);
    auto it = hams_.find(key);
    if (it != hams_.end()) return it->second;
  }
  auto op = std::make_shared<const SparseSymmetricOperator>(
      build_hamiltonian(basis, j1, j2));
  std::lock_guard lock(mutex_);
  return hams_.try_emplace(key, std::move(op)).first->second;
}

std::shared_ptr<const SparseSymmetricOperator> OperatorCache::total_spin_squared(
    const SectorBasis& basis) {
  const auto key = std::make_pair(basis.n_sites(), basis.two_m());
  {
    std::lock_guard lock(mutex_);
    auto it = s2s_.find(key);
    if (it != s2s_.end()) return it->second;
  }
  auto op = std::make_shared<const SparseSymmetricOperator>(build_total_spin_squared(basis));
  std::lock_guard lock(mutex_);
  return s2s_.try_emplace(key, std::move(op)).first->second;
}

}  // namespace su2td
