#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "su2td/sector_basis.hpp"

namespace su2td::bruteforce {

/// Dense reference implementations on the full 2^n space (basis index ==
/// configuration bits), built from explicit single-site spin operators.
/// Deliberately independent of the sector-basis code paths; used as the
/// oracle in verification runs and tests.

/// Total-spin component over a contiguous site prefix [0, n_sites_in) of an
/// n-site chain. axis: 0=x, 1=y, 2=z.
Eigen::MatrixXcd spin_component(int n, int n_sites_in, int axis);

/// (sum_{j<n_sites_in} S_j)^2, real symmetric.
Eigen::MatrixXd prefix_spin_squared(int n, int n_sites_in);

Eigen::MatrixXd full_hamiltonian(int n, double j1, double j2);

/// Projector onto subsystem spin two_s_a (prefix of n_a low bits) acting on
/// the full 2^n space, built from the spectral decomposition of the dense
/// subsystem S^2.
Eigen::MatrixXd sector_projector(int n, int n_a, int two_s_a);

/// Embed a sector vector into the full 2^n space.
Eigen::VectorXd embed(const Eigen::VectorXd& sector_vec, const SectorBasis& basis);

/// rho_A of a pure full-space state, dense over the 2^{n_a} subsystem space.
Eigen::MatrixXd partial_trace_b(const Eigen::VectorXd& full_state, int n, int n_a);

/// Dense 2^{n_a} matrix from a blocked rho_A (block entries placed at their
/// configuration positions). Declared here to keep oracle comparisons in one
/// place; the blocked layout comes from the sector pipeline.
struct BlockEntry {
  int two_m_a;
  Eigen::MatrixXd rho;
};
Eigen::MatrixXd dense_from_blocks(const std::vector<BlockEntry>& blocks, int n_a);

/// Symmetry resolution of a pure full-space state through the explicit
/// projectors only.
struct OracleResolved {
  int n_a = 0;
  Eigen::MatrixXd rho_a;                          // dense 2^{n_a}
  std::map<int, double> probability;              // two_s_a -> <psi|Pi|psi>
  std::map<int, Eigen::MatrixXd> pinched_sector;  // two_s_a -> Pi rho Pi
  double leakage = 0.0;
};
OracleResolved resolve_full_state(const Eigen::VectorXd& full_state, int n, int n_a);

struct OraclePair {
  double d_full = 0.0;
  std::map<int, double> d_sector;
  double d_prob = 0.0;
  double d_conf = 0.0;
};
OraclePair pair_from_oracle(const OracleResolved& alpha, const OracleResolved& alpha1,
                            double p_floor = 1e-14);

/// Max deviations between the sector pipeline and the oracle over every
/// eigenstate of every two_m sector of an n-site chain, plus the multiset
/// comparison of sector spectra against the full-space spectrum.
struct OracleReport {
  double max_spectrum_dev = 0.0;
  double max_rho_dev = 0.0;
  double max_probability_dev = 0.0;
  double max_leakage_dev = 0.0;
  double max_distance_dev = 0.0;
  std::size_t states_checked = 0;
  std::size_t pairs_checked = 0;
};
OracleReport compare_pipeline_to_oracle(int n, double j1, double j2, int n_a);

}  // namespace su2td::bruteforce
