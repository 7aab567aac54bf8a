#include "su2td/distances.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "su2td/errors.hpp"
#include "su2td/spectral.hpp"

namespace su2td {

double trace_norm(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw argument_error("trace_norm: matrix must be square");
  }
  if (m.rows() == 0) return 0.0;
  if (m.rows() == 1) return std::abs(m(0, 0));
  const EigResult eig = full_symmetric_eig(m);
  return eig.eigenvalues.cwiseAbs().sum();
}

double trace_norm(std::span<const Eigen::MatrixXd> blocks) {
  double t = 0.0;
  for (const auto& b : blocks) t += trace_norm(b);
  return t;
}

double trace_distance(const BlockedRdm& rho, const BlockedRdm& sigma) {
  if (rho.blocks.size() != sigma.blocks.size()) {
    throw argument_error("trace_distance: block structure mismatch");
  }
  double t = 0.0;
  for (std::size_t i = 0; i < rho.blocks.size(); ++i) {
    const auto& a = rho.blocks[i];
    const auto& b = sigma.blocks[i];
    if (a.two_m_a != b.two_m_a || a.rho.rows() != b.rho.rows()) {
      throw argument_error("trace_distance: block structure mismatch");
    }
    t += trace_norm(Eigen::MatrixXd(a.rho - b.rho));
  }
  return 0.5 * t;
}

double PairDistances::sector_sum() const {
  double t = 0.0;
  for (const auto& [two_s_a, d] : d_sector) t += d;
  return t;
}

PairDistances pair_distances(const SymmetryResolvedRDM& alpha,
                             const SymmetryResolvedRDM& alpha1) {
  if (alpha.n_a != alpha1.n_a || alpha.two_m != alpha1.two_m ||
      alpha.blocks.size() != alpha1.blocks.size()) {
    throw argument_error("pair_distances: resolved RDM structure mismatch");
  }
  PairDistances pd;
  pd.leakage_alpha = alpha.leakage;
  pd.leakage_alpha1 = alpha1.leakage;

  double full = 0.0;
  for (std::size_t i = 0; i < alpha.blocks.size(); ++i) {
    const auto& a = alpha.blocks[i];
    const auto& b = alpha1.blocks[i];
    if (a.two_m_a != b.two_m_a || a.w.rows() != b.w.rows()) {
      throw argument_error("pair_distances: block structure mismatch");
    }
    full += trace_norm(Eigen::MatrixXd(b.w - a.w));
    for (const auto& r : a.spin_ranges) {
      const Eigen::Index len = r.end - r.begin;
      pd.d_sector[r.two_s_a] += 0.5 * trace_norm(Eigen::MatrixXd(
          b.w.block(r.begin, r.begin, len, len) - a.w.block(r.begin, r.begin, len, len)));
    }
  }
  pd.d_full = 0.5 * full;

  for (const auto& [two_s_a, pa] : alpha.probability) {
    const auto it = alpha1.probability.find(two_s_a);
    if (it == alpha1.probability.end()) {
      throw argument_error("pair_distances: sector key mismatch at two_s_a=" +
                           std::to_string(two_s_a));
    }
    const double pb = it->second;
    pd.d_prob += 0.5 * std::abs(pb - pa);
    const bool both = alpha.present(two_s_a) && alpha1.present(two_s_a);
    if (!both) continue;
    double norm = 0.0;
    for (std::size_t i = 0; i < alpha.blocks.size(); ++i) {
      const auto& a = alpha.blocks[i];
      const auto& b = alpha1.blocks[i];
      for (const auto& r : a.spin_ranges) {
        if (r.two_s_a != two_s_a) continue;
        const Eigen::Index len = r.end - r.begin;
        norm += trace_norm(Eigen::MatrixXd(
            b.w.block(r.begin, r.begin, len, len) / pb -
            a.w.block(r.begin, r.begin, len, len) / pa));
      }
    }
    pd.d_conf += 0.5 * pb * norm;
    pd.d_conf_rev += 0.5 * pa * norm;
  }

  pd.lower_slack = pd.d_full - pd.d_prob;
  pd.upper_slack = pd.d_prob + pd.d_conf + pd.leakage_alpha + pd.leakage_alpha1 - pd.d_full;
  pd.sector_sum_deviation = pd.d_full - pd.sector_sum();
  return pd;
}

void check_pair_invariants(const PairDistances& pd, double tol) {
  auto fail = [&](const std::string& what) {
    throw property_violation("pair invariant violated at alpha_index=" +
                             std::to_string(pd.alpha_index) + ": " + what);
  };
  if (!(pd.d_full >= 0.0) || pd.d_full > 1.0 + tol) {
    fail("d_full outside [0,1] (d_full=" + std::to_string(pd.d_full) + ")");
  }
  for (const auto& [two_s_a, d] : pd.d_sector) {
    if (!(d >= 0.0)) fail("negative sector distance at two_s_a=" + std::to_string(two_s_a));
  }
  if (pd.lower_slack < -tol) {
    fail("d_prob exceeds d_full by " + std::to_string(-pd.lower_slack));
  }
  if (pd.sector_sum() > pd.d_full + tol) {
    fail("sector distances sum above d_full by " +
         std::to_string(pd.sector_sum() - pd.d_full));
  }
  if (pd.d_prob > pd.sector_sum() + tol) {
    fail("d_prob above the sector distance sum by " +
         std::to_string(pd.d_prob - pd.sector_sum()));
  }
  if (pd.upper_slack < -tol) {
    fail("leakage-corrected upper bound short by " + std::to_string(-pd.upper_slack));
  }
}

std::vector<PairDistances> consecutive_pair_distances_serial(
    std::span<const SymmetryResolvedRDM> states) {
  std::vector<PairDistances> out(states.size() < 2 ? 0 : states.size() - 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = pair_distances(states[k], states[k + 1]);
    out[k].alpha_index = k;
  }
  return out;
}

std::vector<PairDistances> consecutive_pair_distances_parallel(
    std::span<const SymmetryResolvedRDM> states) {
  std::vector<PairDistances> out(states.size() < 2 ? 0 : states.size() - 1);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(out.size()); ++k) {
    try {
      const auto i = static_cast<std::size_t>(k);
      out[i] = pair_distances(states[i], states[i + 1]);
      out[i].alpha_index = i;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<PairDistances> consecutive_pair_distances(
    std::span<const SymmetryResolvedRDM> states) {
#ifdef _OPENMP
  if (omp_get_max_threads() > 1) return consecutive_pair_distances_parallel(states);
#endif
  return consecutive_pair_distances_serial(states);
}

}  // namespace su2td
