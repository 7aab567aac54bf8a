#include "su2td/su2_resolution.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "su2td/distances.hpp"
#include "su2td/errors.hpp"
#include "su2td/lattice_operators.hpp"

namespace su2td {

namespace {

int label_on_grid(double s2_value, int two_s_min) {
  const double s = 0.5 * (-1.0 + std::sqrt(std::max(0.0, 1.0 + 4.0 * s2_value)));
  const long steps = std::lround((2.0 * s - two_s_min) / 2.0);
  return two_s_min + 2 * static_cast<int>(std::max(0L, steps));
}

double expected_s2(int two_s) {
  return 0.25 * static_cast<double>(two_s) * static_cast<double>(two_s + 2);
}

}  // namespace

SpinAdaptedBasisA::SpinAdaptedBasisA(int n_a) : n_a_(n_a) {
  if (n_a < 1 || n_a > 12) {
    throw argument_error("SpinAdaptedBasisA: n_a out of range [1,12]");
  }
  for (int two_m_a = -n_a; two_m_a <= n_a; two_m_a += 2) {
    Block blk;
    blk.two_m_a = two_m_a;
    blk.basis = enumerate_sector(n_a, two_m_a);
    const SparseSymmetricOperator s2 = build_total_spin_squared(blk.basis);
    EigResult eig = full_symmetric_eig(s2.to_dense());
    blk.transform = std::move(eig.eigenvectors);
    blk.labels.resize(static_cast<std::size_t>(eig.eigenvalues.size()));
    for (Eigen::Index k = 0; k < eig.eigenvalues.size(); ++k) {
      const int two_s_a = label_on_grid(eig.eigenvalues[k], std::abs(two_m_a));
      if (std::abs(eig.eigenvalues[k] - expected_s2(two_s_a)) > 1e-10) {
        throw numerical_error("SpinAdaptedBasisA: subsystem S^2 eigenvalue " +
                              std::to_string(eig.eigenvalues[k]) +
                              " off the spin grid (n_a=" + std::to_string(n_a) + ")");
      }
      blk.labels[static_cast<std::size_t>(k)] = two_s_a;
    }
    Eigen::Index b = 0;
    while (b < static_cast<Eigen::Index>(blk.labels.size())) {
      Eigen::Index e = b;
      while (e < static_cast<Eigen::Index>(blk.labels.size()) &&
             blk.labels[static_cast<std::size_t>(e)] ==
                 blk.labels[static_cast<std::size_t>(b)]) {
        ++e;
      }
      blk.spin_ranges.push_back(SpinRange{blk.labels[static_cast<std::size_t>(b)], b, e});
      b = e;
    }
    blocks_.push_back(std::move(blk));
  }
}

const SpinAdaptedBasisA::Block& SpinAdaptedBasisA::block(int two_m_a) const {
  if (two_m_a < -n_a_ || two_m_a > n_a_ || (two_m_a + n_a_) % 2 != 0) {
    throw argument_error("SpinAdaptedBasisA: no block with two_m_a=" +
                         std::to_string(two_m_a));
  }
  return blocks_[static_cast<std::size_t>((two_m_a + n_a_) / 2)];
}

std::vector<int> SpinAdaptedBasisA::spin_values() const {
  std::vector<int> out;
  for (int two_s_a = n_a_ % 2; two_s_a <= n_a_; two_s_a += 2) out.push_back(two_s_a);
  return out;
}

SpinAdaptedBasisA build_spin_adapted_basis(int n_a) { return SpinAdaptedBasisA(n_a); }

const SpinAdaptedBasisA& spin_adapted_basis(int n_a) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<const SpinAdaptedBasisA>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n_a];
  if (!slot) slot = std::make_unique<const SpinAdaptedBasisA>(n_a);
  return *slot;
}

double BlockedRdm::trace() const {
  double t = 0.0;
  for (const auto& b : blocks) t += b.rho.trace();
  return t;
}

BlockedRdm reduced_density_matrix(const Eigen::VectorXd& psi, const SectorBasis& basis,
                                  int n_a) {
  const int n = basis.n_sites();
  if (n_a < 1 || n_a >= n) {
    throw argument_error("reduced_density_matrix: need 1 <= n_a < n_sites");
  }
  if (static_cast<std::size_t>(psi.size()) != basis.size()) {
    throw argument_error("reduced_density_matrix: vector/basis size mismatch");
  }
  if (std::abs(psi.norm() - 1.0) > 1e-8) {
    throw argument_error("reduced_density_matrix: state vector not normalized");
  }

  const int n_b = n - n_a;
  const int two_m = basis.two_m();
  const SpinConfig mask_a = (SpinConfig{1} << n_a) - 1;

  struct Slot {
    int two_m_a;
    SectorBasis basis_a;
    SectorBasis basis_b;
    Eigen::MatrixXd amp;  // rows: A configs, cols: B configs
  };
  std::vector<Slot> slots;
  const int lo = std::max(-n_a, two_m - n_b);
  const int hi = std::min(n_a, two_m + n_b);
  for (int two_m_a = lo; two_m_a <= hi; two_m_a += 2) {
    Slot s;
    s.two_m_a = two_m_a;
    s.basis_a = enumerate_sector(n_a, two_m_a);
    s.basis_b = enumerate_sector(n_b, two_m - two_m_a);
    s.amp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(s.basis_a.size()),
                                  static_cast<Eigen::Index>(s.basis_b.size()));
    slots.push_back(std::move(s));
  }

  for (std::size_t k = 0; k < basis.size(); ++k) {
    const SpinConfig c = basis.config(k);
    const SpinConfig a = c & mask_a;
    const SpinConfig b = c >> n_a;
    const int two_m_a = 2 * std::popcount(a) - n_a;
    Slot& s = slots[static_cast<std::size_t>((two_m_a - lo) / 2)];
    s.amp(static_cast<Eigen::Index>(s.basis_a.index_of(a)),
          static_cast<Eigen::Index>(s.basis_b.index_of(b))) = psi[static_cast<Eigen::Index>(k)];
  }

  BlockedRdm out;
  out.n_a = n_a;
  out.two_m = two_m;
  for (auto& s : slots) {
    Eigen::MatrixXd rho = s.amp * s.amp.transpose();
    rho = 0.5 * (rho + rho.transpose()).eval();
    out.blocks.push_back(BlockedRdm::Block{s.two_m_a, std::move(rho)});
  }
  return out;
}

bool SymmetryResolvedRDM::present(int two_s_a) const {
  auto it = probability.find(two_s_a);
  return it != probability.end() && it->second > p_floor;
}

std::vector<Eigen::MatrixXd> SymmetryResolvedRDM::sector_blocks(int two_s_a) const {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& blk : blocks) {
    for (const auto& r : blk.spin_ranges) {
      if (r.two_s_a == two_s_a) {
        out.push_back(blk.w.block(r.begin, r.begin, r.end - r.begin, r.end - r.begin));
      }
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> SymmetryResolvedRDM::normalized_blocks(int two_s_a) const {
  if (!present(two_s_a)) {
    throw argument_error("SymmetryResolvedRDM: sector two_s_a=" + std::to_string(two_s_a) +
                         " absent (probability at or below the floor)");
  }
  const double p = probability.at(two_s_a);
  std::vector<Eigen::MatrixXd> out = sector_blocks(two_s_a);
  for (auto& m : out) m /= p;
  return out;
}

SymmetryResolvedRDM resolve(const BlockedRdm& rho, const SpinAdaptedBasisA& basisA,
                            double p_floor) {
  if (rho.n_a != basisA.n_a()) {
    throw argument_error("resolve: subsystem size mismatch");
  }
  SymmetryResolvedRDM out;
  out.n_a = rho.n_a;
  out.two_m = rho.two_m;
  out.p_floor = p_floor;

  double psum = 0.0;
  for (const auto& rb : rho.blocks) {
    const auto& ab = basisA.block(rb.two_m_a);
    if (ab.transform.rows() != rb.rho.rows()) {
      throw argument_error("resolve: block dimension mismatch at two_m_a=" +
                           std::to_string(rb.two_m_a));
    }
    SymmetryResolvedRDM::Block blk;
    blk.two_m_a = rb.two_m_a;
    // Exact entrywise symmetry here keeps every downstream block difference
    // exactly symmetric, however small the difference gets.
    blk.w = ab.transform.transpose() * rb.rho * ab.transform;
    blk.w = 0.5 * (blk.w + blk.w.transpose()).eval();
    blk.spin_ranges = ab.spin_ranges;

    Eigen::MatrixXd off = blk.w;
    for (const auto& r : blk.spin_ranges) {
      const Eigen::Index len = r.end - r.begin;
      const double p = blk.w.block(r.begin, r.begin, len, len).trace();
      out.probability[r.two_s_a] += p;
      psum += p;
      off.block(r.begin, r.begin, len, len).setZero();
    }
    out.leakage += 0.5 * trace_norm(off);
    out.blocks.push_back(std::move(blk));
  }
  out.trace_deficit = std::abs(1.0 - psum);
  return out;
}

std::vector<SymmetryResolvedRDM> resolve_states_serial(const SectorSpectrum& spectrum,
                                                       std::span<const std::size_t> indices,
                                                       const SpinAdaptedBasisA& basisA,
                                                       double p_floor) {
  const SectorBasis basis = enumerate_sector(spectrum.n_sites, spectrum.two_m);
  std::vector<SymmetryResolvedRDM> out(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& st = spectrum.states.at(indices[i]);
    if (!st.has_vector()) {
      throw argument_error("resolve_states: state " + std::to_string(indices[i]) +
                           " has no retained vector");
    }
    out[i] = resolve(reduced_density_matrix(st.vector, basis, basisA.n_a()), basisA, p_floor);
  }
  return out;
}

std::vector<SymmetryResolvedRDM> resolve_states_parallel(const SectorSpectrum& spectrum,
                                                         std::span<const std::size_t> indices,
                                                         const SpinAdaptedBasisA& basisA,
                                                         double p_floor) {
  const SectorBasis basis = enumerate_sector(spectrum.n_sites, spectrum.two_m);
  for (std::size_t idx : indices) {
    if (!spectrum.states.at(idx).has_vector()) {
      throw argument_error("resolve_states: state " + std::to_string(idx) +
                           " has no retained vector");
    }
  }
  std::vector<SymmetryResolvedRDM> out(indices.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(indices.size()); ++i) {
    try {
      const auto& st = spectrum.states[indices[static_cast<std::size_t>(i)]];
      out[static_cast<std::size_t>(i)] =
          resolve(reduced_density_matrix(st.vector, basis, basisA.n_a()), basisA, p_floor);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<SymmetryResolvedRDM> resolve_states(const SectorSpectrum& spectrum,
                                                std::span<const std::size_t> indices,
                                                const SpinAdaptedBasisA& basisA,
                                                double p_floor) {
#ifdef _OPENMP
  if (omp_get_max_threads() > 1) {
    return resolve_states_parallel(spectrum, indices, basisA, p_floor);
  }
#endif
  return resolve_states_serial(spectrum, indices, basisA, p_floor);
}

double projector_invariance_check(int n, int n_a) {
  if (n < 2 || n > 8) {
    throw argument_error("projector_invariance_check: n out of range [2,8]");
  }
  if (n_a < 1 || n_a >= n) {
    throw argument_error("projector_invariance_check: need 1 <= n_a < n");
  }
  const SpinAdaptedBasisA& basisA = spin_adapted_basis(n_a);
  const Eigen::Index dim_a = Eigen::Index{1} << n_a;
  const Eigen::Index dim = Eigen::Index{1} << n;
  const Eigen::Index dim_b = dim / dim_a;

  using Cmplx = std::complex<double>;
  using MatrixXcd = Eigen::MatrixXcd;

  // Total-spin components on the full space (bit j set <=> site j up).
  MatrixXcd sx = MatrixXcd::Zero(dim, dim);
  MatrixXcd sy = MatrixXcd::Zero(dim, dim);
  MatrixXcd sz = MatrixXcd::Zero(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    sz(c, c) = 0.5 * (2 * std::popcount(static_cast<std::uint32_t>(c)) - n);
    for (int j = 0; j < n; ++j) {
      const Eigen::Index flipped = c ^ (Eigen::Index{1} << j);
      const bool up = (c >> j) & 1;
      sx(flipped, c) += 0.5;
      sy(flipped, c) += up ? Cmplx(0.0, 0.5) : Cmplx(0.0, -0.5);
    }
  }

  double worst = 0.0;
  for (int two_s_a : basisA.spin_values()) {
    // Spectral projector on A, embedded in the 2^{n_a} configuration space.
    Eigen::MatrixXd proj_a = Eigen::MatrixXd::Zero(dim_a, dim_a);
    for (const auto& blk : basisA.blocks()) {
      for (const auto& r : blk.spin_ranges) {
        if (r.two_s_a != two_s_a) continue;
        Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(dim_a, r.end - r.begin);
        for (Eigen::Index i = 0; i < blk.transform.rows(); ++i) {
          cols.row(static_cast<Eigen::Index>(blk.basis.config(static_cast<std::size_t>(i)))) =
              blk.transform.row(i).segment(r.begin, r.end - r.begin);
        }
        proj_a += cols * cols.transpose();
      }
    }
    MatrixXcd proj = MatrixXcd::Zero(dim, dim);
    for (Eigen::Index b = 0; b < dim_b; ++b) {
      proj.block(b * dim_a, b * dim_a, dim_a, dim_a) = proj_a.cast<Cmplx>();
    }
    for (const MatrixXcd* comp : {&sx, &sy, &sz}) {
      const double norm = (proj * (*comp) - (*comp) * proj).cwiseAbs().maxCoeff();
      worst = std::max(worst, norm);
    }
  }
  return worst;
}

MIndependenceReport m_independence_check(int n, double j1, double j2, int n_a) {
  if (n < 2 || n > 8) {
    throw argument_error("m_independence_check: n out of range [2,8]");
  }
  if (n_a < 1 || n_a >= n) {
    throw argument_error("m_independence_check: need 1 <= n_a < n");
  }
  constexpr double kMatchTol = 1e-9;
  const SpinAdaptedBasisA& basisA = spin_adapted_basis(n_a);

  MIndependenceReport report;
  SolveOptions opts;
  SectorSpectrum low = solve_sector(n, n % 2, j1, j2, opts);
  for (int two_m = n % 2; two_m + 2 <= n; two_m += 2) {
    SectorSpectrum high = solve_sector(n, two_m + 2, j1, j2, opts);

    for (const auto& ghi : high.groups()) {
      const auto glo_all = low.groups();
      const auto it = std::find_if(glo_all.begin(), glo_all.end(), [&](const auto& g) {
        return g.two_s == ghi.two_s && g.parity == ghi.parity;
      });
      if (it == glo_all.end() || (it->end - it->begin) != (ghi.end - ghi.begin)) {
        throw property_violation(
            "m_independence_check: multiplet group (two_s=" + std::to_string(ghi.two_s) +
            ", " + parity_name(ghi.parity) + ") differs between two_m=" +
            std::to_string(two_m) + " and " + std::to_string(two_m + 2));
      }
      const std::size_t count = ghi.end - ghi.begin;
      auto ambiguous = [&](const SectorSpectrum& s, std::size_t begin, std::size_t i) {
        const double e = s.states[begin + i].energy;
        return (i > 0 && e - s.states[begin + i - 1].energy < kMatchTol) ||
               (i + 1 < count && s.states[begin + i + 1].energy - e < kMatchTol);
      };
      for (std::size_t i = 0; i < count; ++i) {
        const auto& st_lo = low.states[it->begin + i];
        const auto& st_hi = high.states[ghi.begin + i];
        if (ambiguous(low, it->begin, i) || ambiguous(high, ghi.begin, i) ||
            std::abs(st_lo.energy - st_hi.energy) > kMatchTol) {
          ++report.skipped;
          continue;
        }
        const SectorBasis basis_lo = enumerate_sector(n, low.two_m);
        const SectorBasis basis_hi = enumerate_sector(n, high.two_m);
        const SymmetryResolvedRDM a =
            resolve(reduced_density_matrix(st_lo.vector, basis_lo, n_a), basisA);
        const SymmetryResolvedRDM b =
            resolve(reduced_density_matrix(st_hi.vector, basis_hi, n_a), basisA);
        for (int two_s_a : basisA.spin_values()) {
          const auto pa = a.probability.find(two_s_a);
          const auto pb = b.probability.find(two_s_a);
          const double va = (pa == a.probability.end()) ? 0.0 : pa->second;
          const double vb = (pb == b.probability.end()) ? 0.0 : pb->second;
          report.max_discrepancy = std::max(report.max_discrepancy, std::abs(va - vb));
        }
        ++report.compared;
      }
    }
    low = std::move(high);
  }
  return report;
}

}  // namespace su2td
