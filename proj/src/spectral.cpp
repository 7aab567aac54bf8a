#include "su2td/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <lapacke.h>

#include "su2td/errors.hpp"

namespace su2td {

namespace {

void fix_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    Eigen::Index imax = 0;
    double vmax = 0.0;
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      const double a = std::abs(vectors(i, j));
      if (a > vmax) {
        vmax = a;
        imax = i;
      }
    }
    if (vectors(imax, j) < 0.0) vectors.col(j) = -vectors.col(j);
  }
}

int parity_rank(Parity p) { return static_cast<int>(p); }

}  // namespace

EigResult full_symmetric_eig(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) {
    throw argument_error("full_symmetric_eig: matrix must be square");
  }
  const Eigen::Index n = matrix.rows();
  EigResult res;
  res.eigenvalues.resize(n);
  res.eigenvectors = matrix;
  if (n == 0) return res;

  const double scale = matrix.cwiseAbs().maxCoeff();
  const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    throw argument_error("full_symmetric_eig: matrix not symmetric (relative "
                         "asymmetry " + std::to_string(asym / scale) + ")");
  }

  const lapack_int info = LAPACKE_dsyevd(
      LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n),
      res.eigenvectors.data(), static_cast<lapack_int>(n), res.eigenvalues.data());
  if (info < 0) {
    throw argument_error("full_symmetric_eig: invalid argument " + std::to_string(-info));
  }
  if (info > 0) {
    throw numerical_error("full_symmetric_eig: dsyevd failed to converge (dim=" +
                          std::to_string(n) + ", info=" + std::to_string(info) + ")");
  }
  fix_signs(res.eigenvectors);
  return res;
}

SpinLabels assign_spin_labels(Eigen::MatrixXd& vectors, const Eigen::VectorXd& energies,
                              const SparseSymmetricOperator& s2_operator, int two_m,
                              double s2_tolerance, double cluster_gap) {
  const Eigen::Index k = vectors.cols();
  if (energies.size() != k) {
    throw argument_error("assign_spin_labels: energies/vectors size mismatch");
  }

  const int two_s_min = std::abs(two_m);
  auto nearest_two_s = [two_s_min](double s2val) {
    // two_s grid: {|two_m|, |two_m|+2, ...}
    const double s = 0.5 * (-1.0 + std::sqrt(std::max(0.0, 1.0 + 4.0 * s2val)));
    const long steps = std::lround((2.0 * s - two_s_min) / 2.0);
    return two_s_min + 2 * static_cast<int>(std::max(0L, steps));
  };
  auto expected_s2 = [](int two_s) {
    return 0.25 * static_cast<double>(two_s) * static_cast<double>(two_s + 2);
  };

  SpinLabels out;
  out.two_s.resize(static_cast<std::size_t>(k));
  out.residuals.resize(k);

  Eigen::VectorXd s2vals = batch_expectations(s2_operator, vectors);
  for (Eigen::Index i = 0; i < k; ++i) {
    out.two_s[static_cast<std::size_t>(i)] = nearest_two_s(s2vals[i]);
    out.residuals[i] = std::abs(s2vals[i] - expected_s2(out.two_s[static_cast<std::size_t>(i)]));
  }
  if (k == 0 || out.residuals.maxCoeff() <= s2_tolerance) return out;

  // Repair: re-diagonalize S^2 inside each (near-)degenerate energy cluster
  // that holds an offending state, then re-assign labels.
  const double width = (k > 1) ? energies[k - 1] - energies[0] : 0.0;
  double gap = (cluster_gap > 0.0) ? cluster_gap : 1e-10 * width;
  if (gap <= 0.0) gap = 1e-12;

  Eigen::Index a = 0;
  while (a < k) {
    Eigen::Index b = a;
    while (b + 1 < k && energies[b + 1] - energies[b] < gap) ++b;
    bool needs_repair = false;
    for (Eigen::Index i = a; i <= b; ++i) {
      if (out.residuals[i] > s2_tolerance) needs_repair = true;
    }
    if (needs_repair && b > a) {
      const Eigen::Index m = b - a + 1;
      Eigen::MatrixXd cluster = vectors.middleCols(a, m);
      Eigen::MatrixXd s2v(cluster.rows(), m);
      for (Eigen::Index j = 0; j < m; ++j) {
        s2v.col(j) = s2_operator.apply(Eigen::VectorXd(cluster.col(j)));
      }
      Eigen::MatrixXd small = cluster.transpose() * s2v;
      small = 0.5 * (small + small.transpose()).eval();
      const EigResult sub = full_symmetric_eig(small);
      Eigen::MatrixXd rotated = cluster * sub.eigenvectors;
      fix_signs(rotated);
      vectors.middleCols(a, m) = rotated;
      // Re-evaluate the labels from expectation values of the rotated columns
      // (not from the small eigenproblem) so they match a later recomputation
      // from the stored vectors exactly.
      const Eigen::VectorXd repaired = batch_expectations(s2_operator, rotated);
      for (Eigen::Index j = 0; j < m; ++j) {
        out.two_s[static_cast<std::size_t>(a + j)] = nearest_two_s(repaired[j]);
        out.residuals[a + j] =
            std::abs(repaired[j] - expected_s2(out.two_s[static_cast<std::size_t>(a + j)]));
      }
      out.repaired = true;
    }
    a = b + 1;
  }

  std::ostringstream bad;
  bool any_bad = false;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (out.residuals[i] > s2_tolerance) {
      if (any_bad) bad << ", ";
      bad << "state " << i << " (E=" << energies[i] << ", residual=" << out.residuals[i] << ")";
      any_bad = true;
    }
  }
  if (any_bad) {
    throw labeling_error("assign_spin_labels: residual above tolerance after "
                         "cluster repair: " + bad.str());
  }
  return out;
}

namespace {

struct BlockSolve {
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;  // lifted to the sector basis
  Parity parity;
};

}  // namespace

SectorSpectrum solve_sector(int n, int two_m, double j1, double j2,
                            const SolveOptions& opts) {
  const SectorBasis basis = enumerate_sector(n, two_m);
  if (basis.size() > opts.dim_limit) {
    throw capacity_error(
        "solve_sector: sector dimension " + std::to_string(basis.size()) +
        " exceeds limit " + std::to_string(opts.dim_limit) +
        "; raise the dimension limit or reuse cached spectra");
  }

  const SparseSymmetricOperator h = build_hamiltonian(basis, j1, j2);
  const SparseSymmetricOperator s2 = build_total_spin_squared(basis);

  std::vector<BlockSolve> blocks;
  if (opts.parity_resolved) {
    const ParityBasis pb = build_parity_basis(basis);
    for (Parity p : {Parity::even, Parity::odd}) {
      if (pb.dim(p) == 0) continue;
      EigResult eig = full_symmetric_eig(project_to_parity(h, pb, p));
      Eigen::MatrixXd lifted(static_cast<Eigen::Index>(basis.size()), eig.eigenvalues.size());
      for (Eigen::Index c = 0; c < eig.eigenvalues.size(); ++c) {
        lifted.col(c) = pb.lift(p, eig.eigenvectors.col(c));
      }
      blocks.push_back(BlockSolve{std::move(eig.eigenvalues), std::move(lifted), p});
    }
  } else {
    EigResult eig = full_symmetric_eig(h.to_dense());
    blocks.push_back(BlockSolve{std::move(eig.eigenvalues), std::move(eig.eigenvectors),
                                Parity::none});
  }

  SectorSpectrum spec;
  spec.n_sites = n;
  spec.two_m = two_m;
  spec.j1 = j1;
  spec.j2 = j2;
  spec.parity_resolved = opts.parity_resolved;

  for (auto& blk : blocks) {
    const SpinLabels labels =
        assign_spin_labels(blk.vectors, blk.energies, s2, two_m, opts.s2_tolerance,
                           opts.cluster_gap_rel > 0.0 && blk.energies.size() > 1
                               ? opts.cluster_gap_rel *
                                     (blk.energies[blk.energies.size() - 1] - blk.energies[0])
                               : 0.0);
    for (Eigen::Index i = 0; i < blk.energies.size(); ++i) {
      EigenstateRecord rec;
      rec.energy = blk.energies[i];
      rec.two_s = labels.two_s[static_cast<std::size_t>(i)];
      rec.parity = blk.parity;
      rec.s2_residual = labels.residuals[i];
      rec.vector = blk.vectors.col(i);
      spec.states.push_back(std::move(rec));
    }
  }

  // Canonical storage order: two_s ascending, even before odd, energy
  // ascending within each group. stable_sort keeps eigensolver order on ties.
  std::stable_sort(spec.states.begin(), spec.states.end(),
                   [](const EigenstateRecord& x, const EigenstateRecord& y) {
                     if (x.two_s != y.two_s) return x.two_s < y.two_s;
                     if (x.parity != y.parity) return parity_rank(x.parity) < parity_rank(y.parity);
                     return x.energy < y.energy;
                   });

  if (opts.retention.mode == VectorRetention::Mode::window) {
    std::vector<bool> keep(spec.states.size(), false);
    for (const auto& group : spec.window_groups(opts.retention.grouping)) {
      IndexRange w;
      try {
        w = select_window(group.size(), opts.retention.window);
      } catch (const window_error&) {
        continue;  // group too small; nothing retained
      }
      for (std::size_t i = w.lo; i < w.hi; ++i) keep[group[i]] = true;
    }
    for (std::size_t i = 0; i < spec.states.size(); ++i) {
      if (!keep[i]) spec.states[i].vector.resize(0);
    }
  }
  return spec;
}

std::vector<SectorSpectrum::Group> SectorSpectrum::groups() const {
  std::vector<Group> out;
  std::size_t i = 0;
  while (i < states.size()) {
    std::size_t j = i;
    while (j < states.size() && states[j].two_s == states[i].two_s &&
           states[j].parity == states[i].parity) {
      ++j;
    }
    out.push_back(Group{states[i].two_s, states[i].parity, i, j});
    i = j;
  }
  return out;
}

std::vector<std::vector<std::size_t>> SectorSpectrum::window_groups(WindowGrouping g) const {
  std::vector<std::vector<std::size_t>> out;
  const auto gs = groups();
  if (g == WindowGrouping::by_spin_parity) {
    for (const auto& grp : gs) {
      std::vector<std::size_t> idx(grp.end - grp.begin);
      std::iota(idx.begin(), idx.end(), grp.begin);
      out.push_back(std::move(idx));
    }
    return out;
  }
  // by_spin: merge parity blocks of equal two_s, ordered by energy
  // (ties: even before odd, then storage order).
  std::size_t i = 0;
  while (i < gs.size()) {
    std::size_t j = i;
    std::vector<std::size_t> idx;
    while (j < gs.size() && gs[j].two_s == gs[i].two_s) {
      for (std::size_t s = gs[j].begin; s < gs[j].end; ++s) idx.push_back(s);
      ++j;
    }
    std::stable_sort(idx.begin(), idx.end(), [this](std::size_t a, std::size_t b) {
      return states[a].energy < states[b].energy;
    });
    out.push_back(std::move(idx));
    i = j;
  }
  return out;
}

std::vector<std::pair<int, Parity>> SectorSpectrum::window_group_keys(WindowGrouping g) const {
  std::vector<std::pair<int, Parity>> out;
  const auto gs = groups();
  if (g == WindowGrouping::by_spin_parity) {
    for (const auto& grp : gs) out.emplace_back(grp.two_s, grp.parity);
    return out;
  }
  // Merged grouping reports no parity label, also for spin values that
  // happen to live in a single parity block, so the key set is uniform.
  std::size_t i = 0;
  while (i < gs.size()) {
    std::size_t j = i;
    while (j < gs.size() && gs[j].two_s == gs[i].two_s) ++j;
    out.emplace_back(gs[i].two_s, Parity::none);
    i = j;
  }
  return out;
}

}  // namespace su2td
