#include "su2td/sector_basis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace su2td {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n || n < 0) return 0;
  if (k > n - k) k = n - k;
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return r;
}

std::uint64_t multiplet_count(int n_sites, int two_s) {
  if (two_s < 0 || two_s > n_sites) return 0;
  if (((n_sites + two_s) & 1) != 0) return 0;
  const int k = (n_sites + two_s) / 2;
  return binomial(n_sites, k) - binomial(n_sites, k + 1);
}

SpinConfig reflect(SpinConfig config, int n_sites) {
  SpinConfig out = 0;
  for (int j = 0; j < n_sites; ++j) {
    if (config & (SpinConfig{1} << j)) out |= SpinConfig{1} << (n_sites - 1 - j);
  }
  return out;
}

SectorBasis::SectorBasis(int n_sites, int two_m, std::vector<SpinConfig> configs)
    : n_sites_(n_sites), two_m_(two_m), configs_(std::move(configs)) {}

std::size_t SectorBasis::index_of(SpinConfig c) const {
  auto it = std::lower_bound(configs_.begin(), configs_.end(), c);
  if (it == configs_.end() || *it != c) {
    throw argument_error("SectorBasis::index_of: config not in sector");
  }
  return static_cast<std::size_t>(it - configs_.begin());
}

bool SectorBasis::contains(SpinConfig c) const {
  return std::binary_search(configs_.begin(), configs_.end(), c);
}

SectorBasis enumerate_sector(int n_sites, int two_m) {
  if (n_sites < 1 || n_sites > kMaxSites) {
    throw argument_error("enumerate_sector: n_sites out of range [1," +
                         std::to_string(kMaxSites) + "]");
  }
  if (std::abs(two_m) > n_sites || ((two_m + n_sites) & 1) != 0) {
    throw argument_error("enumerate_sector: two_m must satisfy |two_m| <= n_sites "
                         "and two_m === n_sites (mod 2)");
  }
  const int n_up = (n_sites + two_m) / 2;
  std::vector<SpinConfig> configs;
  configs.reserve(binomial(n_sites, n_up));
  if (n_up == 0) {
    configs.push_back(0);
  } else {
    // Gosper's hack: next integer with the same popcount, ascending.
    const SpinConfig limit = (n_sites == 32) ? ~SpinConfig{0}
                                             : (SpinConfig{1} << n_sites);
    SpinConfig c = (SpinConfig{1} << n_up) - 1;
    while (c < limit) {
      configs.push_back(c);
      const SpinConfig lo = c & (~c + 1);
      const SpinConfig left = c + lo;
      if (left >= limit || left == 0) break;
      c = left | (((c ^ left) >> 2) / lo);
    }
  }
  return SectorBasis(n_sites, two_m, std::move(configs));
}

const char* parity_name(Parity p) {
  switch (p) {
    case Parity::even: return "even";
    case Parity::odd: return "odd";
    default: return "none";
  }
}

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

ParityBasis::ParityBasis(SectorBasis parent) : parent_(std::move(parent)) {
  const std::size_t dim = parent_.size();
  even_support_.assign(dim, Support{-1, 0.0});
  odd_support_.assign(dim, Support{-1, 0.0});
  const int n = parent_.n_sites();
  for (std::size_t i = 0; i < dim; ++i) {
    const SpinConfig c = parent_.config(i);
    const SpinConfig r = reflect(c, n);
    if (r == c) {
      even_support_[i] = Support{static_cast<std::int32_t>(even_.size()), 1.0};
      even_.push_back(Column{static_cast<std::uint32_t>(i),
                             static_cast<std::uint32_t>(i), 1.0, 1.0});
    } else if (c < r) {
      const std::size_t j = parent_.index_of(r);
      even_support_[i] = Support{static_cast<std::int32_t>(even_.size()), kInvSqrt2};
      even_support_[j] = Support{static_cast<std::int32_t>(even_.size()), kInvSqrt2};
      even_.push_back(Column{static_cast<std::uint32_t>(i),
                             static_cast<std::uint32_t>(j), kInvSqrt2, kInvSqrt2});
      odd_support_[i] = Support{static_cast<std::int32_t>(odd_.size()), kInvSqrt2};
      odd_support_[j] = Support{static_cast<std::int32_t>(odd_.size()), -kInvSqrt2};
      odd_.push_back(Column{static_cast<std::uint32_t>(i),
                            static_cast<std::uint32_t>(j), kInvSqrt2, -kInvSqrt2});
    }
  }
}

std::size_t ParityBasis::dim(Parity p) const {
  return p == Parity::even ? even_.size() : odd_.size();
}

const std::vector<ParityBasis::Column>& ParityBasis::columns(Parity p) const {
  return p == Parity::even ? even_ : odd_;
}

ParityBasis::Support ParityBasis::support(Parity p, std::size_t parent_index) const {
  return p == Parity::even ? even_support_[parent_index] : odd_support_[parent_index];
}

Eigen::VectorXd ParityBasis::lift(Parity p, const Eigen::VectorXd& block_vec) const {
  const auto& cols = columns(p);
  if (static_cast<std::size_t>(block_vec.size()) != cols.size()) {
    throw argument_error("ParityBasis::lift: block vector dimension mismatch");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parent_.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const Column& col = cols[k];
    out[col.rep] += col.rep_coeff * block_vec[static_cast<Eigen::Index>(k)];
    if (col.mirror != col.rep) {
      out[col.mirror] += col.mirror_coeff * block_vec[static_cast<Eigen::Index>(k)];
    }
  }
  return out;
}

Eigen::MatrixXd ParityBasis::dense_transform() const {
  const auto ncols = static_cast<Eigen::Index>(even_.size() + odd_.size());
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(parent_.size()), ncols);
  Eigen::Index q = 0;
  for (const auto& col : even_) {
    u(col.rep, q) += col.rep_coeff;
    if (col.mirror != col.rep) u(col.mirror, q) += col.mirror_coeff;
    ++q;
  }
  for (const auto& col : odd_) {
    u(col.rep, q) += col.rep_coeff;
    u(col.mirror, q) += col.mirror_coeff;
    ++q;
  }
  return u;
}

ParityBasis build_parity_basis(const SectorBasis& basis) { return ParityBasis(basis); }

}  // namespace su2td
