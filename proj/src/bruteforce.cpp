#include "su2td/bruteforce.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "su2td/distances.hpp"
#include "su2td/errors.hpp"
#include "su2td/spectral.hpp"
#include "su2td/su2_resolution.hpp"

namespace su2td::bruteforce {

namespace {

using Cmplx = std::complex<double>;

Eigen::MatrixXcd single_site(int n, int site, int axis) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    const bool up = (c >> site) & 1;
    const Eigen::Index flipped = c ^ (Eigen::Index{1} << site);
    switch (axis) {
      case 0: m(flipped, c) += 0.5; break;
      case 1: m(flipped, c) += up ? Cmplx(0.0, 0.5) : Cmplx(0.0, -0.5); break;
      case 2: m(c, c) += up ? 0.5 : -0.5; break;
      default: throw argument_error("single_site: axis must be 0, 1, or 2");
    }
  }
  return m;
}

Eigen::MatrixXd real_part_checked(const Eigen::MatrixXcd& m) {
  if (m.imag().cwiseAbs().maxCoeff() > 1e-12) {
    throw numerical_error("bruteforce: expected a real operator");
  }
  Eigen::MatrixXd r = m.real();
  return 0.5 * (r + r.transpose()).eval();
}

double dense_trace_norm(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

/// Subsystem-level spectral projectors, two_s_a -> dense 2^{n_a} matrix.
std::map<int, Eigen::MatrixXd> subsystem_projectors(int n_a) {
  const Eigen::MatrixXd sa2 = prefix_spin_squared(n_a, n_a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sa2);
  std::map<int, Eigen::MatrixXd> out;
  for (int two_s_a = n_a % 2; two_s_a <= n_a; two_s_a += 2) {
    const double want = 0.25 * two_s_a * (two_s_a + 2);
    std::vector<Eigen::Index> sel;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
      if (std::abs(es.eigenvalues()[k] - want) < 1e-8) sel.push_back(k);
    }
    Eigen::MatrixXd cols(sa2.rows(), static_cast<Eigen::Index>(sel.size()));
    for (std::size_t j = 0; j < sel.size(); ++j) {
      cols.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(sel[j]);
    }
    out[two_s_a] = cols * cols.transpose();
  }
  return out;
}

}  // namespace

Eigen::MatrixXcd spin_component(int n, int n_sites_in, int axis) {
  if (n < 1 || n > 12 || n_sites_in < 1 || n_sites_in > n) {
    throw argument_error("spin_component: bad site range");
  }
  const Eigen::Index dim = Eigen::Index{1} << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (int j = 0; j < n_sites_in; ++j) m += single_site(n, j, axis);
  return m;
}

Eigen::MatrixXd prefix_spin_squared(int n, int n_sites_in) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
  for (int axis = 0; axis < 3; ++axis) {
    const Eigen::MatrixXcd c = spin_component(n, n_sites_in, axis);
    acc += c * c;
  }
  return real_part_checked(acc);
}

Eigen::MatrixXd full_hamiltonian(int n, double j1, double j2) {
  if (n < 2 || n > 12) throw argument_error("full_hamiltonian: n out of range [2,12]");
  const Eigen::Index dim = Eigen::Index{1} << n;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
  for (int axis = 0; axis < 3; ++axis) {
    std::vector<Eigen::MatrixXcd> site_ops;
    for (int j = 0; j < n; ++j) site_ops.push_back(single_site(n, j, axis));
    for (int j = 0; j + 1 < n; ++j) acc += j1 * (site_ops[j] * site_ops[j + 1]);
    for (int j = 0; j + 2 < n; ++j) acc += j2 * (site_ops[j] * site_ops[j + 2]);
  }
  return real_part_checked(acc);
}

Eigen::MatrixXd sector_projector(int n, int n_a, int two_s_a) {
  if (n_a < 1 || n_a >= n) throw argument_error("sector_projector: need 1 <= n_a < n");
  const auto projs = subsystem_projectors(n_a);
  const auto it = projs.find(two_s_a);
  if (it == projs.end()) {
    throw argument_error("sector_projector: invalid two_s_a=" + std::to_string(two_s_a));
  }
  const Eigen::Index dim_a = Eigen::Index{1} << n_a;
  const Eigen::Index dim = Eigen::Index{1} << n;
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim / dim_a; ++b) {
    full.block(b * dim_a, b * dim_a, dim_a, dim_a) = it->second;
  }
  return full;
}

Eigen::VectorXd embed(const Eigen::VectorXd& sector_vec, const SectorBasis& basis) {
  if (static_cast<std::size_t>(sector_vec.size()) != basis.size()) {
    throw argument_error("embed: vector/basis size mismatch");
  }
  Eigen::VectorXd full = Eigen::VectorXd::Zero(Eigen::Index{1} << basis.n_sites());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    full[static_cast<Eigen::Index>(basis.config(k))] = sector_vec[static_cast<Eigen::Index>(k)];
  }
  return full;
}

Eigen::MatrixXd partial_trace_b(const Eigen::VectorXd& full_state, int n, int n_a) {
  if (n_a < 1 || n_a >= n) throw argument_error("partial_trace_b: need 1 <= n_a < n");
  if (full_state.size() != (Eigen::Index{1} << n)) {
    throw argument_error("partial_trace_b: state dimension mismatch");
  }
  const Eigen::Index dim_a = Eigen::Index{1} << n_a;
  const Eigen::Index dim_b = Eigen::Index{1} << (n - n_a);
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(dim_a, dim_a);
  for (Eigen::Index b = 0; b < dim_b; ++b) {
    const auto seg = full_state.segment(b * dim_a, dim_a);
    rho += seg * seg.transpose();
  }
  return rho;
}

Eigen::MatrixXd dense_from_blocks(const std::vector<BlockEntry>& blocks, int n_a) {
  const Eigen::Index dim_a = Eigen::Index{1} << n_a;
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(dim_a, dim_a);
  for (const auto& blk : blocks) {
    const SectorBasis basis = enumerate_sector(n_a, blk.two_m_a);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      for (std::size_t j = 0; j < basis.size(); ++j) {
        dense(static_cast<Eigen::Index>(basis.config(i)),
              static_cast<Eigen::Index>(basis.config(j))) =
            blk.rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
  return dense;
}

OracleResolved resolve_full_state(const Eigen::VectorXd& full_state, int n, int n_a) {
  OracleResolved out;
  out.n_a = n_a;
  out.rho_a = partial_trace_b(full_state, n, n_a);
  Eigen::MatrixXd pinched_total =
      Eigen::MatrixXd::Zero(out.rho_a.rows(), out.rho_a.cols());
  for (const auto& [two_s_a, proj_a] : subsystem_projectors(n_a)) {
    const Eigen::MatrixXd full_proj = sector_projector(n, n_a, two_s_a);
    const Eigen::VectorXd projected = full_proj * full_state;
    out.probability[two_s_a] = full_state.dot(projected);
    out.pinched_sector[two_s_a] = proj_a * out.rho_a * proj_a;
    pinched_total += out.pinched_sector[two_s_a];
  }
  out.leakage = 0.5 * dense_trace_norm(out.rho_a - pinched_total);
  return out;
}

OraclePair pair_from_oracle(const OracleResolved& alpha, const OracleResolved& alpha1,
                            double p_floor) {
  OraclePair pd;
  pd.d_full = 0.5 * dense_trace_norm(alpha1.rho_a - alpha.rho_a);
  for (const auto& [two_s_a, pa] : alpha.probability) {
    const double pb = alpha1.probability.at(two_s_a);
    pd.d_prob += 0.5 * std::abs(pb - pa);
    pd.d_sector[two_s_a] = 0.5 * dense_trace_norm(alpha1.pinched_sector.at(two_s_a) -
                                                  alpha.pinched_sector.at(two_s_a));
    if (pa > p_floor && pb > p_floor) {
      pd.d_conf += 0.5 * pb *
                   dense_trace_norm(alpha1.pinched_sector.at(two_s_a) / pb -
                                    alpha.pinched_sector.at(two_s_a) / pa);
    }
  }
  return pd;
}

OracleReport compare_pipeline_to_oracle(int n, double j1, double j2, int n_a) {
  if (n < 2 || n > 8) {
    throw argument_error("compare_pipeline_to_oracle: n out of range [2,8]");
  }
  if (n_a < 1 || n_a >= n) {
    throw argument_error("compare_pipeline_to_oracle: need 1 <= n_a < n");
  }

  OracleReport report;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full_es(full_hamiltonian(n, j1, j2),
                                                         Eigen::EigenvaluesOnly);
  std::vector<double> sector_energies;
  const SpinAdaptedBasisA& basisA = spin_adapted_basis(n_a);

  for (int two_m = -n; two_m <= n; two_m += 2) {
    const SectorBasis basis = enumerate_sector(n, two_m);
    const SectorSpectrum spec = solve_sector(n, two_m, j1, j2);
    for (const auto& st : spec.states) sector_energies.push_back(st.energy);

    for (const auto& group : spec.groups()) {
      SymmetryResolvedRDM prev_srr;
      OracleResolved prev_oracle;
      for (std::size_t idx = group.begin; idx < group.end; ++idx) {
        const auto& st = spec.states[idx];
        const SymmetryResolvedRDM srr =
            resolve(reduced_density_matrix(st.vector, basis, n_a), basisA);
        const OracleResolved oracle = resolve_full_state(embed(st.vector, basis), n, n_a);

        std::vector<BlockEntry> blocks;
        {
          const BlockedRdm rdm = reduced_density_matrix(st.vector, basis, n_a);
          for (const auto& b : rdm.blocks) blocks.push_back(BlockEntry{b.two_m_a, b.rho});
        }
        report.max_rho_dev =
            std::max(report.max_rho_dev,
                     (dense_from_blocks(blocks, n_a) - oracle.rho_a).cwiseAbs().maxCoeff());
        for (const auto& [two_s_a, p_oracle] : oracle.probability) {
          const auto it = srr.probability.find(two_s_a);
          const double p_pipe = (it == srr.probability.end()) ? 0.0 : it->second;
          report.max_probability_dev =
              std::max(report.max_probability_dev, std::abs(p_pipe - p_oracle));
        }
        report.max_leakage_dev =
            std::max(report.max_leakage_dev, std::abs(srr.leakage - oracle.leakage));
        ++report.states_checked;

        if (idx > group.begin) {
          const PairDistances pd = pair_distances(prev_srr, srr);
          const OraclePair od = pair_from_oracle(prev_oracle, oracle);
          double dev = std::abs(pd.d_full - od.d_full);
          dev = std::max(dev, std::abs(pd.d_prob - od.d_prob));
          dev = std::max(dev, std::abs(pd.d_conf - od.d_conf));
          for (const auto& [two_s_a, d_oracle] : od.d_sector) {
            const auto it = pd.d_sector.find(two_s_a);
            const double d_pipe = (it == pd.d_sector.end()) ? 0.0 : it->second;
            dev = std::max(dev, std::abs(d_pipe - d_oracle));
          }
          report.max_distance_dev = std::max(report.max_distance_dev, dev);
          ++report.pairs_checked;
        }
        prev_srr = srr;
        prev_oracle = oracle;
      }
    }
  }

  std::sort(sector_energies.begin(), sector_energies.end());
  if (sector_energies.size() != static_cast<std::size_t>(full_es.eigenvalues().size())) {
    throw property_violation("oracle: sector state count differs from 2^n");
  }
  for (std::size_t k = 0; k < sector_energies.size(); ++k) {
    report.max_spectrum_dev =
        std::max(report.max_spectrum_dev,
                 std::abs(sector_energies[k] - full_es.eigenvalues()[static_cast<Eigen::Index>(k)]));
  }
  return report;
}

}  // namespace su2td::bruteforce
