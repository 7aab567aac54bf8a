#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "su2td/sector_basis.hpp"
#include "su2td/spectral.hpp"

namespace su2td {

/// Index range of equal-spin columns inside one magnetization block.
struct SpinRange {
  int two_s_a;
  Eigen::Index begin;
  Eigen::Index end;
};

/// Spin-adapted orthogonal basis of the 2^{n_a} space of the prefix
/// subsystem: per two_m_a block, the eigenbasis of the subsystem S^2 with
/// columns sorted by two_s_a ascending (equal-spin columns contiguous).
class SpinAdaptedBasisA {
 public:
  struct Block {
    int two_m_a;
    SectorBasis basis;          // subsystem configs of the block
    Eigen::MatrixXd transform;  // orthogonal, columns = adapted states
    std::vector<int> labels;    // two_s_a per column, ascending
    std::vector<SpinRange> spin_ranges;
  };

  explicit SpinAdaptedBasisA(int n_a);

  int n_a() const { return n_a_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  /// Block of the given subsystem magnetization; argument_error if absent.
  const Block& block(int two_m_a) const;
  /// All subsystem spin values {n_a mod 2, n_a mod 2 + 2, ..., n_a}.
  std::vector<int> spin_values() const;

 private:
  int n_a_;
  std::vector<Block> blocks_;  // two_m_a ascending
};

/// Fresh instance (uncached).
SpinAdaptedBasisA build_spin_adapted_basis(int n_a);

/// Process-wide cache; built once per n_a, shared read-only.
const SpinAdaptedBasisA& spin_adapted_basis(int n_a);

/// Reduced density matrix of a sector state on the prefix subsystem (low
/// n_a bits), one dense block per two_m_a. Cross-block elements vanish
/// identically because the parent magnetization is fixed.
struct BlockedRdm {
  int n_a = 0;
  int two_m = 0;  // parent sector magnetization
  struct Block {
    int two_m_a;
    Eigen::MatrixXd rho;  // subsystem config basis, ascending configs
  };
  std::vector<Block> blocks;  // two_m_a ascending
  double trace() const;
};

BlockedRdm reduced_density_matrix(const Eigen::VectorXd& psi, const SectorBasis& basis,
                                  int n_a);

/// rho_A rotated into the spin-adapted basis, with subsystem-spin sector
/// probabilities and the off-sector leakage. Equal-spin column ranges are
/// copied from the basis so the object is self-contained.
struct SymmetryResolvedRDM {
  int n_a = 0;
  int two_m = 0;

  struct Block {
    int two_m_a;
    Eigen::MatrixXd w;  // adapted-basis coordinates of the rho_A block
    std::vector<SpinRange> spin_ranges;
  };
  std::vector<Block> blocks;  // two_m_a ascending

  std::map<int, double> probability;  // two_s_a -> P, all labels of present blocks
  double leakage = 0.0;               // half trace norm of the off-sector part
  double trace_deficit = 0.0;         // |1 - sum of probabilities|
  double p_floor = 1e-14;

  bool present(int two_s_a) const;
  /// Unnormalized (two_s_a, two_s_a) diagonal sub-blocks, one per two_m_a
  /// block where the spin occurs; empty when the spin never occurs.
  std::vector<Eigen::MatrixXd> sector_blocks(int two_s_a) const;
  /// sector_blocks divided by the sector probability; argument_error when
  /// the probability is at or below p_floor.
  std::vector<Eigen::MatrixXd> normalized_blocks(int two_s_a) const;
};

SymmetryResolvedRDM resolve(const BlockedRdm& rho, const SpinAdaptedBasisA& basisA,
                            double p_floor = 1e-14);

/// reduced_density_matrix + resolve for the listed eigenstates (which must
/// retain vectors). The _serial and _parallel variants produce identical
/// results; the unsuffixed form dispatches on the OpenMP thread count.
std::vector<SymmetryResolvedRDM> resolve_states(const SectorSpectrum& spectrum,
                                                std::span<const std::size_t> indices,
                                                const SpinAdaptedBasisA& basisA,
                                                double p_floor = 1e-14);
std::vector<SymmetryResolvedRDM> resolve_states_serial(const SectorSpectrum& spectrum,
                                                       std::span<const std::size_t> indices,
                                                       const SpinAdaptedBasisA& basisA,
                                                       double p_floor = 1e-14);
std::vector<SymmetryResolvedRDM> resolve_states_parallel(const SectorSpectrum& spectrum,
                                                         std::span<const std::size_t> indices,
                                                         const SpinAdaptedBasisA& basisA,
                                                         double p_floor = 1e-14);

/// Max over subsystem spins and components x,y,z of the max-norm of the
/// commutator between the explicit sector projector (adapted columns on A,
/// identity on B) and the total-spin component in the full 2^n space.
/// Analytically zero; the return value is pure round-off.
double projector_invariance_check(int n, int n_a);

/// Compare subsystem-spin probabilities of matching multiplet members
/// across adjacent two_m sectors (matched by (two_s, parity) group and
/// energy order). Near-degenerate states (gap < 1e-9) are skipped as
/// ambiguous rather than compared.
struct MIndependenceReport {
  double max_discrepancy = 0.0;
  std::size_t compared = 0;
  std::size_t skipped = 0;
};
MIndependenceReport m_independence_check(int n, double j1, double j2, int n_a);

}  // namespace su2td
