#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"

#include "su2td/distances.hpp"
#include "su2td/lattice_operators.hpp"
#include "su2td/pipeline.hpp"
#include "su2td/spectral.hpp"
#include "su2td/su2_resolution.hpp"

namespace {

using namespace su2td;
using clock_type = std::chrono::steady_clock;

double best_of(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = clock_type::now();
    fn();
    const auto t1 = clock_type::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

bool same(double a, double b) { return a == b; }

bool same(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a.data()[i] != b.data()[i]) return false;
  }
  return true;
}

bool same(const SymmetryResolvedRDM& a, const SymmetryResolvedRDM& b) {
  if (a.probability != b.probability) return false;
  if (!same(a.leakage, b.leakage) || !same(a.trace_deficit, b.trace_deficit)) return false;
  if (a.blocks.size() != b.blocks.size()) return false;
  for (std::size_t i = 0; i < a.blocks.size(); ++i) {
    if (a.blocks[i].two_m_a != b.blocks[i].two_m_a) return false;
    if (!same(a.blocks[i].w, b.blocks[i].w)) return false;
  }
  return true;
}

bool same(const PairDistances& a, const PairDistances& b) {
  return same(a.d_full, b.d_full) && a.d_sector == b.d_sector &&
         same(a.d_prob, b.d_prob) && same(a.d_conf, b.d_conf) &&
         same(a.d_conf_rev, b.d_conf_rev) && same(a.lower_slack, b.lower_slack) &&
         same(a.upper_slack, b.upper_slack);
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
  std::printf("%-28s %10.2f ms %10.2f ms %8.2fx   %s\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms, equal ? "identical" : "MISMATCH");
  if (!equal) std::exit(1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel timings (results must match bitwise)"};
  int n = 12;
  double j2 = 0.4;
  int threads = 0;
  int repeats = 3;
  app.add_option("--n", n, "chain length")->check(CLI::Range(4, 16));
  app.add_option("--j2", j2, "next-nearest coupling");
  app.add_option("--threads", threads, "OpenMP thread count (0 = library default)");
  app.add_option("--repeats", repeats, "repetitions, best time wins")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
  const int max_threads = omp_get_max_threads();
#else
  const int max_threads = 1;
#endif

  const int two_m = n % 2;
  std::printf("N=%d two_m=%d J1=1 J2=%g, %d thread(s), best of %d\n", n, two_m, j2,
              max_threads, repeats);
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "parallel", "speedup");

  const SectorSpectrum spec = solve_sector(n, two_m, 1.0, j2);
  const SectorBasis basis = enumerate_sector(n, two_m);
  const SparseSymmetricOperator s2 = build_total_spin_squared(basis);

  Eigen::MatrixXd vectors(static_cast<Eigen::Index>(basis.size()),
                          static_cast<Eigen::Index>(spec.states.size()));
  for (std::size_t i = 0; i < spec.states.size(); ++i) {
    vectors.col(static_cast<Eigen::Index>(i)) = spec.states[i].vector;
  }
  Eigen::VectorXd ex_s, ex_p;
  const double t_ex_s = best_of(repeats, [&] { ex_s = batch_expectations_serial(s2, vectors); });
  const double t_ex_p =
      best_of(repeats, [&] { ex_p = batch_expectations_parallel(s2, vectors); });
  bool eq = ex_s.size() == ex_p.size();
  for (Eigen::Index i = 0; eq && i < ex_s.size(); ++i) eq = ex_s[i] == ex_p[i];
  report("batch_expectations", t_ex_s, t_ex_p, eq);

  const auto groups = spec.window_groups(WindowGrouping::by_spin_parity);
  std::size_t gi = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].size() > groups[gi].size()) gi = g;
  }
  const auto& indices = groups[gi];
  const int n_a = n / 2;
  const SpinAdaptedBasisA& basisA = spin_adapted_basis(n_a);

  std::vector<SymmetryResolvedRDM> rs, rp;
  const double t_rs = best_of(
      repeats, [&] { rs = resolve_states_serial(spec, std::span(indices), basisA, 1e-14); });
  const double t_rp = best_of(
      repeats, [&] { rp = resolve_states_parallel(spec, std::span(indices), basisA, 1e-14); });
  eq = rs.size() == rp.size();
  for (std::size_t i = 0; eq && i < rs.size(); ++i) eq = same(rs[i], rp[i]);
  report("resolve_states", t_rs, t_rp, eq);

  std::vector<PairDistances> ds, dp;
  const double t_ds = best_of(repeats, [&] { ds = consecutive_pair_distances_serial(rs); });
  const double t_dp = best_of(repeats, [&] { dp = consecutive_pair_distances_parallel(rs); });
  eq = ds.size() == dp.size();
  for (std::size_t i = 0; eq && i < ds.size(); ++i) eq = same(ds[i], dp[i]);
  report("consecutive_pair_distances", t_ds, t_dp, eq);

  return 0;
}
