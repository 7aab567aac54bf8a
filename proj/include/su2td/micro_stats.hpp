#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "su2td/distances.hpp"
#include "su2td/sector_basis.hpp"
#include "su2td/su2_resolution.hpp"
#include "su2td/window.hpp"

namespace su2td {

/// Number of kinematically allowed subsystem spin sectors: values
/// two_s_a in {n_a mod 2, n_a mod 2 + 2, ..., n_a} with |two_s - two_s_a| <= n_b.
int count_sectors(int n_a, int n_b, int two_s);

/// The allowed two_s_a values themselves (same rule as count_sectors).
std::vector<int> allowed_sectors(int n_a, int n_b, int two_s);

enum class NsecMode {
  kinematic,  // triangle-rule count (default)
  observed,   // sectors with a window probability above the floor
};

/// Identity of one energy-ordered eigenstate group, carried along with its
/// window statistics.
struct GroupMeta {
  int n_sites = 0;
  int two_m = 0;
  int two_s = 0;
  Parity parity = Parity::none;  // none for parity-merged groups
  double j1 = 1.0;
  double j2 = 0.0;
  int n_a = 0;
  std::size_t group_size = 0;  // states in the full group
  IndexRange window;           // window within the group
  double max_s2_residual = 0.0;
};

/// Window-averaged statistics of one group.
struct WindowStats {
  GroupMeta meta;

  std::size_t n_states = 0;  // states in the window
  std::size_t n_pairs = 0;   // consecutive pairs fully inside the window

  std::map<int, double> mean_p;       // two_s_a -> <P>_W
  std::map<int, double> var_p;        // two_s_a -> Var_W(P), population
  std::map<int, double> mean_absdev;  // two_s_a -> <|P - <P>|>_W
  double sum_var = 0.0;
  int n_sec = 0;

  double avg_d_prob = 0.0;
  double avg_d_conf = 0.0;
  double avg_d_full = 0.0;
  double avg_gap = 0.0;  // <D - D_conf>_W
  double avg_leakage = 0.0;

  double bound_rhs = 0.0;  // sqrt(n_sec * sum_var)
  bool bound_satisfied = false;

  // Intermediate links of the variance-bound chain, individually checkable.
  double sum_mean_absdev = 0.0;      // sum_{S_A} <|P - <P>|>
  double sum_sqrt_var = 0.0;         // sum_{S_A} sqrt(Var)
  double endpoint_correction = 0.0;  // 2 * (sum_{S_A} max|P - <P>|) / n_pairs
};

/// Aggregate window states and their consecutive-pair distances. States and
/// pairs must come from one energy-ordered group slice; pairs[k] links
/// states k and k+1.
WindowStats window_statistics(std::span<const SymmetryResolvedRDM> states,
                              std::span<const PairDistances> pairs,
                              const GroupMeta& meta,
                              NsecMode nsec_mode = NsecMode::kinematic);

/// All WindowStats inequality invariants; returns a diagnostic message for
/// the first violation, or nothing.
std::optional<std::string> check_window_invariants(const WindowStats& w,
                                                   double tol = 1e-10);

}  // namespace su2td
