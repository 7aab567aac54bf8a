#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "su2td/lattice_operators.hpp"
#include "su2td/sector_basis.hpp"
#include "su2td/window.hpp"

namespace su2td {

struct EigResult {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, sign-fixed
};

/// Full dense symmetric eigendecomposition. Eigenvalues ascending; the
/// largest-magnitude component of every eigenvector is made positive
/// (first such component on ties), so results are reproducible.
/// Throws argument_error for non-symmetric input (1e-12 relative) and
/// numerical_error on convergence failure.
EigResult full_symmetric_eig(const Eigen::MatrixXd& matrix);

/// One labeled eigenstate of a sector.
struct EigenstateRecord {
  double energy = 0.0;
  int two_s = 0;
  Parity parity = Parity::none;
  double s2_residual = 0.0;
  Eigen::VectorXd vector;  // amplitudes over SectorBasis configs; empty if dropped
  bool has_vector() const { return vector.size() > 0; }
};

/// How eigenstates are grouped into energy-ordered lists for windows and
/// consecutive-pair statistics.
enum class WindowGrouping {
  by_spin_parity,  // one group per (two_s, parity)
  by_spin,         // parity blocks interleaved by energy within each two_s
};

struct VectorRetention {
  enum class Mode { all, window } mode = Mode::all;
  WindowSpec window;
  WindowGrouping grouping = WindowGrouping::by_spin_parity;

  static VectorRetention keep_all() { return {}; }
  static VectorRetention keep_window(WindowSpec w,
                                     WindowGrouping g = WindowGrouping::by_spin_parity) {
    return {Mode::window, w, g};
  }
};

struct SolveOptions {
  bool parity_resolved = true;
  std::size_t dim_limit = 16000;
  double s2_tolerance = 1e-6;
  // Cluster gap for degenerate-cluster repair, relative to spectral width.
  double cluster_gap_rel = 1e-10;
  VectorRetention retention = VectorRetention::keep_all();
};

/// Full eigendecomposition of one symmetry sector with per-state total-spin
/// (and parity) labels. States are grouped by (two_s, parity) -- two_s
/// ascending, even before odd -- and energy-ordered within each group.
struct SectorSpectrum {
  int n_sites = 0;
  int two_m = 0;
  double j1 = 1.0;
  double j2 = 0.0;
  bool parity_resolved = false;
  std::vector<EigenstateRecord> states;

  struct Group {
    int two_s;
    Parity parity;
    std::size_t begin;  // index range into states
    std::size_t end;
  };
  /// Contiguous (two_s, parity) groups in storage order.
  std::vector<Group> groups() const;
  /// Energy-ordered state indices of one window group under the given
  /// grouping; by_spin merges parity blocks of equal two_s.
  std::vector<std::vector<std::size_t>> window_groups(WindowGrouping g) const;
  /// (two_s, parity) key per window group, parity == none for merged groups
  /// of a parity-resolved spectrum.
  std::vector<std::pair<int, Parity>> window_group_keys(WindowGrouping g) const;
};

/// Assign total-spin labels to orthonormal eigenvectors. residual(i) is
/// |<S^2> - s(s+1)| for the chosen two_s. If any residual exceeds
/// s2_tolerance, energy clusters with gaps below cluster_gap are
/// re-diagonalized in the S^2 eigenbasis (vectors are rotated in place) and
/// labels are re-assigned; a residual still above tolerance afterwards
/// throws labeling_error.
struct SpinLabels {
  std::vector<int> two_s;
  Eigen::VectorXd residuals;
  bool repaired = false;
};
SpinLabels assign_spin_labels(Eigen::MatrixXd& vectors, const Eigen::VectorXd& energies,
                              const SparseSymmetricOperator& s2_operator, int two_m,
                              double s2_tolerance = 1e-6, double cluster_gap = 0.0);

/// Exact diagonalization of the (n, two_m) sector of the J1-J2 chain.
/// Throws capacity_error when the sector dimension exceeds opts.dim_limit.
SectorSpectrum solve_sector(int n, int two_m, double j1, double j2,
                            const SolveOptions& opts = {});

}  // namespace su2td
