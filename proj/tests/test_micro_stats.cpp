#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>

#include "su2td/distances.hpp"
#include "su2td/errors.hpp"
#include "su2td/lattice_operators.hpp"
#include "su2td/micro_stats.hpp"
#include "su2td/sector_basis.hpp"
#include "su2td/spectral.hpp"
#include "su2td/su2_resolution.hpp"
#include "su2td/window.hpp"

using namespace su2td;

namespace {

// Resolved state with a 2x2 adapted block carrying the given singlet weight.
SymmetryResolvedRDM two_sector_state(double p_singlet) {
  SymmetryResolvedRDM r;
  r.n_a = 2;
  r.two_m = 0;
  r.blocks.push_back(
      {0, Eigen::MatrixXd::Zero(2, 2), spin_adapted_basis(2).block(0).spin_ranges});
  r.blocks[0].w(0, 0) = p_singlet;
  r.blocks[0].w(1, 1) = 1.0 - p_singlet;
  r.probability = {{0, p_singlet}, {2, 1.0 - p_singlet}};
  return r;
}

GroupMeta small_meta(std::size_t n_states) {
  GroupMeta meta;
  meta.n_sites = 4;
  meta.two_m = 0;
  meta.two_s = 0;
  meta.n_a = 2;
  meta.group_size = n_states;
  meta.window = {0, n_states};
  return meta;
}

WindowStats stats_of(const std::vector<SymmetryResolvedRDM>& states,
                     NsecMode mode = NsecMode::kinematic) {
  const auto pairs = consecutive_pair_distances(states);
  return window_statistics(states, pairs, small_meta(states.size()), mode);
}

// Unresolved sector spectrum of a dense Hamiltonian shifted by a constant,
// ordered the same way solve_sector orders its states.
SectorSpectrum shifted_solve(int n, double j1, double j2, double shift) {
  const SectorBasis basis = enumerate_sector(n, 0);
  const auto s2 = build_total_spin_squared(basis);
  Eigen::MatrixXd h = build_hamiltonian(basis, j1, j2).to_dense();
  h += shift * Eigen::MatrixXd::Identity(h.rows(), h.cols());

  EigResult eig = full_symmetric_eig(h);
  const SpinLabels labels = assign_spin_labels(eig.eigenvectors, eig.eigenvalues, s2, 0);

  SectorSpectrum spec;
  spec.n_sites = n;
  spec.two_m = 0;
  spec.j1 = j1;
  spec.j2 = j2;
  spec.parity_resolved = false;
  std::vector<std::size_t> order(static_cast<std::size_t>(eig.eigenvalues.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (labels.two_s[a] != labels.two_s[b]) return labels.two_s[a] < labels.two_s[b];
    return eig.eigenvalues[static_cast<Eigen::Index>(a)] <
           eig.eigenvalues[static_cast<Eigen::Index>(b)];
  });
  for (std::size_t i : order) {
    EigenstateRecord st;
    st.energy = eig.eigenvalues[static_cast<Eigen::Index>(i)];
    st.two_s = labels.two_s[i];
    st.s2_residual = labels.residuals[static_cast<Eigen::Index>(i)];
    st.vector = eig.eigenvectors.col(static_cast<Eigen::Index>(i));
    spec.states.push_back(std::move(st));
  }
  return spec;
}

std::vector<WindowStats> window_stats_of_spectrum(const SectorSpectrum& spec, int n_a) {
  const SpinAdaptedBasisA& basisA = spin_adapted_basis(n_a);
  std::vector<WindowStats> out;
  const auto groups = spec.window_groups(WindowGrouping::by_spin_parity);
  const auto keys = spec.window_group_keys(WindowGrouping::by_spin_parity);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    IndexRange w;
    try {
      w = select_window(groups[g].size(), WindowSpec{});
    } catch (const window_error&) {
      continue;
    }
    std::vector<std::size_t> indices(groups[g].begin() + static_cast<std::ptrdiff_t>(w.lo),
                                     groups[g].begin() + static_cast<std::ptrdiff_t>(w.hi));
    const auto states = resolve_states(spec, indices, basisA);
    const auto pairs = consecutive_pair_distances(states);
    GroupMeta meta;
    meta.n_sites = spec.n_sites;
    meta.two_m = spec.two_m;
    meta.two_s = keys[g].first;
    meta.parity = keys[g].second;
    meta.j1 = spec.j1;
    meta.j2 = spec.j2;
    meta.n_a = n_a;
    meta.group_size = groups[g].size();
    meta.window = w;
    out.push_back(window_statistics(states, pairs, meta));
  }
  return out;
}

}  // namespace

TEST_CASE("kinematically allowed sector counting") {
  CHECK(count_sectors(6, 6, 0) == 4);
  CHECK(allowed_sectors(6, 6, 0) == std::vector<int>{0, 2, 4, 6});
  CHECK(count_sectors(1, 5, 3) == 1);
  CHECK(count_sectors(1, 1, 2) == 1);
  CHECK(count_sectors(6, 2, 8) == 1);
  CHECK(allowed_sectors(6, 2, 8) == std::vector<int>{6});
  CHECK(count_sectors(4, 4, 0) == 3);
  CHECK_THROWS_AS(count_sectors(0, 4, 0), argument_error);
}

TEST_CASE("two orthogonal window states saturate the variance bound") {
  const std::vector<SymmetryResolvedRDM> states{two_sector_state(1.0), two_sector_state(0.0)};
  const WindowStats w = stats_of(states);

  CHECK(w.n_states == 2);
  CHECK(w.n_pairs == 1);
  CHECK(w.mean_p.at(0) == doctest::Approx(0.5));
  CHECK(w.mean_p.at(2) == doctest::Approx(0.5));
  CHECK(w.var_p.at(0) == doctest::Approx(0.25));
  CHECK(w.var_p.at(2) == doctest::Approx(0.25));
  CHECK(w.sum_var == doctest::Approx(0.5));
  CHECK(w.n_sec == 2);
  CHECK(w.avg_d_prob == doctest::Approx(1.0));
  CHECK(w.avg_d_full == doctest::Approx(1.0));
  CHECK(w.avg_d_conf == doctest::Approx(0.0));
  CHECK(w.avg_gap == doctest::Approx(1.0));
  CHECK(w.bound_rhs == doctest::Approx(1.0));  // saturated
  CHECK(w.bound_satisfied);
  CHECK(w.sum_mean_absdev == doctest::Approx(1.0));
  CHECK(w.sum_sqrt_var == doctest::Approx(1.0));
  CHECK(w.endpoint_correction == doctest::Approx(2.0));
  CHECK_FALSE(check_window_invariants(w).has_value());
}

TEST_CASE("identical window states give vanishing statistics") {
  const std::vector<SymmetryResolvedRDM> states{two_sector_state(0.3), two_sector_state(0.3),
                                                two_sector_state(0.3)};
  const WindowStats w = stats_of(states);
  CHECK(w.sum_var == doctest::Approx(0.0));
  CHECK(w.avg_d_prob == doctest::Approx(0.0));
  CHECK(w.avg_d_full == doctest::Approx(0.0));
  CHECK(w.bound_rhs == doctest::Approx(0.0));
  CHECK(w.bound_satisfied);
  CHECK_FALSE(check_window_invariants(w).has_value());
}

TEST_CASE("a three-state alternating window breaks only the bare bound") {
  // P alternates (1,0), (0,1), (1,0): the consecutive-pair average reaches 1
  // while sqrt(n_sec * sum_var) = sqrt(8/9); only the endpoint-corrected
  // chain is a theorem, and the reported flag records the bare failure.
  const std::vector<SymmetryResolvedRDM> states{two_sector_state(1.0), two_sector_state(0.0),
                                                two_sector_state(1.0)};
  const WindowStats w = stats_of(states);
  CHECK(w.avg_d_prob == doctest::Approx(1.0));
  CHECK(w.sum_var == doctest::Approx(4.0 / 9.0));
  CHECK(w.bound_rhs == doctest::Approx(std::sqrt(8.0 / 9.0)));
  CHECK_FALSE(w.bound_satisfied);
  CHECK(w.endpoint_correction == doctest::Approx(4.0 / 3.0));
  CHECK_FALSE(check_window_invariants(w).has_value());
}

TEST_CASE("observed sector counting drops empty sectors") {
  const std::vector<SymmetryResolvedRDM> states{two_sector_state(1.0), two_sector_state(1.0)};
  const WindowStats w = stats_of(states, NsecMode::observed);
  CHECK(w.n_sec == 1);  // the triplet sector never carries weight
  const WindowStats k = stats_of(states, NsecMode::kinematic);
  CHECK(k.n_sec == 2);
}

TEST_CASE("window_statistics argument validation") {
  const std::vector<SymmetryResolvedRDM> one{two_sector_state(0.5)};
  CHECK_THROWS_AS(window_statistics(one, {}, small_meta(1)), argument_error);

  const std::vector<SymmetryResolvedRDM> two{two_sector_state(0.5), two_sector_state(0.6)};
  CHECK_THROWS_AS(window_statistics(two, {}, small_meta(2)), argument_error);
}

TEST_CASE("window statistics are invariant under a constant energy shift") {
  const SectorSpectrum base = shifted_solve(6, 1.0, 0.37, 0.0);
  const SectorSpectrum shifted = shifted_solve(6, 1.0, 0.37, 3.7);

  const auto a = window_stats_of_spectrum(base, 3);
  const auto b = window_stats_of_spectrum(shifted, 3);
  REQUIRE_FALSE(a.empty());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].meta.two_s == b[i].meta.two_s);
    CHECK(a[i].n_states == b[i].n_states);
    CHECK(std::abs(a[i].sum_var - b[i].sum_var) <= 1e-8);
    CHECK(std::abs(a[i].avg_d_prob - b[i].avg_d_prob) <= 1e-8);
    CHECK(std::abs(a[i].avg_d_full - b[i].avg_d_full) <= 1e-8);
    CHECK(std::abs(a[i].avg_gap - b[i].avg_gap) <= 1e-8);
    CHECK(std::abs(a[i].avg_leakage - b[i].avg_leakage) <= 1e-8);
    CHECK(check_window_invariants(a[i]) == check_window_invariants(b[i]));
  }
}

TEST_CASE("invariant checker flags an inconsistent pair count") {
  const std::vector<SymmetryResolvedRDM> states{two_sector_state(1.0), two_sector_state(0.0)};
  WindowStats w = stats_of(states);
  w.n_pairs = 5;
  const auto msg = check_window_invariants(w);
  REQUIRE(msg.has_value());
  CHECK(msg->find("pair count") != std::string::npos);
}
