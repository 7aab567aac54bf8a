#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "su2td/su2_resolution.hpp"

namespace su2td {

/// Sum of absolute eigenvalues of a dense symmetric matrix.
double trace_norm(const Eigen::MatrixXd& m);
/// Same for a block-diagonal matrix given as its blocks.
double trace_norm(std::span<const Eigen::MatrixXd> blocks);

/// Half trace norm of the difference of two blocked density matrices with
/// identical block structure.
double trace_distance(const BlockedRdm& rho, const BlockedRdm& sigma);

/// Decomposed trace distance between the resolved reduced density matrices
/// of a consecutive eigenstate pair (alpha, alpha+1).
struct PairDistances {
  std::size_t alpha_index = 0;

  double d_full = 0.0;             // half trace norm of the raw difference
  std::map<int, double> d_sector;  // two_s_a -> half trace norm of the pinched diff
  double d_prob = 0.0;             // half sum |Delta P|
  double d_conf = 0.0;             // weights from the alpha+1 state
  double d_conf_rev = 0.0;         // weights from the alpha state
  double leakage_alpha = 0.0;
  double leakage_alpha1 = 0.0;

  double lower_slack = 0.0;  // d_full - d_prob
  double upper_slack = 0.0;  // d_prob + d_conf + both leakages - d_full
  double sector_sum_deviation = 0.0;  // d_full - sum of d_sector

  double sector_sum() const;
};

/// Sectors where either probability is at or below the floor contribute 0
/// to d_conf (the missing normalized block is taken equal to the other
/// state's, which keeps the convexity bound valid at zero weight).
PairDistances pair_distances(const SymmetryResolvedRDM& alpha,
                             const SymmetryResolvedRDM& alpha1);

/// The five PairDistances inequalities; throws property_violation naming
/// the first violated one.
void check_pair_invariants(const PairDistances& pd, double tol = 1e-10);

/// PairDistances for every consecutive pair of an energy-ordered state
/// list; result[k] has alpha_index = k. The _serial and _parallel variants
/// produce identical results; the unsuffixed form dispatches on the OpenMP
/// thread count.
std::vector<PairDistances> consecutive_pair_distances(
    std::span<const SymmetryResolvedRDM> states);
std::vector<PairDistances> consecutive_pair_distances_serial(
    std::span<const SymmetryResolvedRDM> states);
std::vector<PairDistances> consecutive_pair_distances_parallel(
    std::span<const SymmetryResolvedRDM> states);

}  // namespace su2td
