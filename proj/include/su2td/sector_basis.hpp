#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "su2td/errors.hpp"

namespace su2td {

/// Computational basis state of an N-site spin-1/2 chain.
/// Bit j set <=> site j carries spin up (+1/2).
using SpinConfig = std::uint32_t;

constexpr int kMaxSites = 24;

/// Exact binomial coefficient, 0 when k is out of range.
std::uint64_t binomial(int n, int k);

/// Number of spin-(two_s/2) multiplets in the Clebsch-Gordan series of
/// n_sites spin-1/2 sites. Zero when two_s has the wrong parity or range.
std::uint64_t multiplet_count(int n_sites, int two_s);

/// Site-reversal of the low n_sites bits: bit j of the result equals
/// bit (n_sites-1-j) of the input.
SpinConfig reflect(SpinConfig config, int n_sites);

/// All configurations of a fixed-magnetization block, ordered by increasing
/// bits value. two_m is twice the total magnetization (integer convention).
class SectorBasis {
 public:
  SectorBasis() = default;
  SectorBasis(int n_sites, int two_m, std::vector<SpinConfig> configs);

  int n_sites() const { return n_sites_; }
  int two_m() const { return two_m_; }
  std::size_t size() const { return configs_.size(); }
  const std::vector<SpinConfig>& configs() const { return configs_; }
  SpinConfig config(std::size_t i) const { return configs_[i]; }

  /// Position of a config in the ordered list; throws argument_error if
  /// the config does not belong to the sector.
  std::size_t index_of(SpinConfig c) const;

  bool contains(SpinConfig c) const;

 private:
  int n_sites_ = 0;
  int two_m_ = 0;
  std::vector<SpinConfig> configs_;
};

/// Enumerate the fixed-magnetization block of an n_sites chain.
/// Requires 1 <= n_sites <= 24, |two_m| <= n_sites, two_m === n_sites (mod 2).
SectorBasis enumerate_sector(int n_sites, int two_m);

enum class Parity : std::uint8_t { even = 0, odd = 1, none = 2 };

const char* parity_name(Parity p);

/// Reflection-symmetrized basis over a SectorBasis. Every column is an
/// orthonormal vector supported on one reflection orbit {c, reflect(c)}:
/// palindromes give an even column with coefficient 1, two-element orbits
/// give (c +- reflect(c))/sqrt(2) in the even/odd block. Representatives
/// are the numerically smaller config and columns are ordered by
/// representative.
class ParityBasis {
 public:
  struct Column {
    std::uint32_t rep;      // parent index of the orbit representative
    std::uint32_t mirror;   // parent index of reflect(rep); == rep for palindromes
    double rep_coeff;
    double mirror_coeff;
  };

  explicit ParityBasis(SectorBasis parent);

  const SectorBasis& parent() const { return parent_; }
  std::size_t dim(Parity p) const;
  const std::vector<Column>& columns(Parity p) const;

  /// Column index (and signed coefficient) of the given parity block that
  /// has support on parent index i; col < 0 when no such column exists
  /// (palindromes have no odd column).
  struct Support {
    std::int32_t col;
    double coeff;
  };
  Support support(Parity p, std::size_t parent_index) const;

  /// Lift a parity-block vector back to the parent sector basis.
  Eigen::VectorXd lift(Parity p, const Eigen::VectorXd& block_vec) const;

  /// Dense [even | odd] transformation matrix (tests and small systems).
  Eigen::MatrixXd dense_transform() const;

 private:
  SectorBasis parent_;
  std::vector<Column> even_;
  std::vector<Column> odd_;
  std::vector<Support> even_support_;
  std::vector<Support> odd_support_;
};

ParityBasis build_parity_basis(const SectorBasis& basis);

}  // namespace su2td
