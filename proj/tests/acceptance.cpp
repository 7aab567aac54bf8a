// Acceptance gate: one line per criterion, nonzero exit when a required
// criterion fails. Criterion 10 is an optional capacity run and never
// affects the exit code.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "su2td/bruteforce.hpp"
#include "su2td/distances.hpp"
#include "su2td/errors.hpp"
#include "su2td/micro_stats.hpp"
#include "su2td/pipeline.hpp"
#include "su2td/scaling_fits.hpp"
#include "su2td/sector_basis.hpp"
#include "su2td/spectral.hpp"
#include "su2td/su2_resolution.hpp"
#include "su2td/window.hpp"

using namespace su2td;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

int g_failures = 0;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct WindowRecord {
  WindowStats stats;
  double min_lower_slack = 1e300;
  double min_upper_slack = 1e300;
  double max_singlet_pair_excess = 0.0;  // d_full - d_prob - d_conf, two_s = 0 only
  double max_singlet_leakage = 0.0;
  double max_trace_deficit = 0.0;
};

// The same per-group pipeline analyze() runs, but keeping the pair-level
// numbers the criteria need.
std::vector<WindowRecord> analyzed_windows(const RunConfig& cfg) {
  std::vector<WindowRecord> out;
  for (int n : cfg.sizes) {
    const int n_a = cfg.subsystem_size(n);
    const SpinAdaptedBasisA& basisA = spin_adapted_basis(n_a);
    for (double j2 : cfg.j2_list) {
      const SectorSpectrum spec = ensure_spectrum(cfg, n, j2);
      const auto groups = spec.window_groups(cfg.grouping);
      const auto keys = spec.window_group_keys(cfg.grouping);
      for (std::size_t g = 0; g < groups.size(); ++g) {
        IndexRange w;
        try {
          w = select_window(groups[g].size(), cfg.window);
        } catch (const window_error&) {
          continue;
        }
        const std::vector<std::size_t> indices(
            groups[g].begin() + static_cast<std::ptrdiff_t>(w.lo),
            groups[g].begin() + static_cast<std::ptrdiff_t>(w.hi));
        const auto states = resolve_states(spec, indices, basisA, cfg.p_floor);
        const auto pairs = consecutive_pair_distances(states);

        GroupMeta meta;
        meta.n_sites = n;
        meta.two_m = cfg.two_m;
        meta.two_s = keys[g].first;
        meta.parity = keys[g].second;
        meta.j1 = cfg.j1;
        meta.j2 = j2;
        meta.n_a = n_a;
        meta.group_size = groups[g].size();
        meta.window = w;
        for (std::size_t idx : indices)
          meta.max_s2_residual = std::max(meta.max_s2_residual, spec.states[idx].s2_residual);

        WindowRecord rec;
        rec.stats = window_statistics(states, pairs, meta, cfg.nsec_mode);
        for (const auto& pd : pairs) {
          rec.min_lower_slack = std::min(rec.min_lower_slack, pd.lower_slack);
          rec.min_upper_slack = std::min(rec.min_upper_slack, pd.upper_slack);
          if (meta.two_s == 0)
            rec.max_singlet_pair_excess = std::max(
                rec.max_singlet_pair_excess, pd.d_full - pd.d_prob - pd.d_conf);
        }
        for (const auto& st : states) {
          rec.max_trace_deficit = std::max(rec.max_trace_deficit, st.trace_deficit);
          if (meta.two_s == 0) rec.max_singlet_leakage = std::max(rec.max_singlet_leakage, st.leakage);
        }
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

std::string trend_string(const std::vector<std::pair<int, double>>& seq) {
  std::string s;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) s += " -> ";
    s += std::to_string(seq[i].first) + ":" + fmt(seq[i].second);
  }
  return s;
}

}  // namespace

int main() {
  const fs::path work = fs::path("acceptance_work");
  fs::create_directories(work);

  // ---- criterion 1: oracle equivalence at N <= 6 --------------------------
  {
    const auto t0 = clock_type::now();
    double dev = 0.0;
    std::size_t states = 0, pairs = 0;
    for (int n = 2; n <= 6; ++n) {
      for (double j2 : {0.0, 0.5}) {
        for (int n_a = 1; n_a < n; ++n_a) {
          const auto rep = bruteforce::compare_pipeline_to_oracle(n, 1.0, j2, n_a);
          dev = std::max({dev, rep.max_spectrum_dev, rep.max_rho_dev,
                          rep.max_probability_dev, rep.max_leakage_dev,
                          rep.max_distance_dev});
          states += rep.states_checked;
          pairs += rep.pairs_checked;
        }
      }
    }
    const double dt = seconds_since(t0);
    report(1, dev <= 1e-10 && dt < 30.0,
           "pipeline vs dense-oracle max deviation " + fmt(dev) + " over " +
               std::to_string(states) + " states / " + std::to_string(pairs) +
               " pairs (" + fmt(dt) + " s, budget 30 s)");
  }

  // ---- criterion 2: exact small spectra ------------------------------------
  {
    bool ok = true;
    const SectorSpectrum two = solve_sector(2, 0, 1.0, 0.0);
    ok &= two.states.size() == 2 && std::abs(two.states[0].energy + 0.75) <= 1e-12 &&
          two.states[0].two_s == 0 && std::abs(two.states[1].energy - 0.25) <= 1e-12 &&
          two.states[1].two_s == 2;

    std::vector<double> all;
    for (int two_m = -3; two_m <= 3; two_m += 2) {
      SolveOptions opts;
      opts.parity_resolved = false;
      for (const auto& st : solve_sector(3, two_m, 1.0, 0.0, opts).states)
        all.push_back(st.energy);
    }
    std::sort(all.begin(), all.end());
    const std::vector<double> want{-1.0, -1.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.5};
    ok &= all.size() == want.size();
    double dev = 0.0;
    for (std::size_t i = 0; i < want.size() && i < all.size(); ++i)
      dev = std::max(dev, std::abs(all[i] - want[i]));
    ok &= dev <= 1e-12;

    SolveOptions opts;
    opts.parity_resolved = false;
    const SectorSpectrum three = solve_sector(3, 1, 1.0, 0.0, opts);
    ok &= three.states.size() == 3 && three.states[0].two_s == 1 &&
          three.states[1].two_s == 1 && three.states[2].two_s == 3 &&
          std::abs(three.states[0].energy + 1.0) <= 1e-12 &&
          std::abs(three.states[1].energy) <= 1e-12 &&
          std::abs(three.states[2].energy - 0.5) <= 1e-12;
    report(2, ok, "N=2 energies {-3/4, 1/4}, N=3 spectrum {-1 x2, 0 x2, 1/2 x4}, max dev " +
                      fmt(dev));
  }

  // ---- criteria 3 and 4: pair and window inequality suites -----------------
  RunConfig cfg;
  cfg.sizes = {8, 10, 12, 14};
  cfg.j2_list = {0.0, 0.4, 0.8};
  cfg.cache_dir = (work / "cache").string();
  cfg.out_dir = (work / "out").string();

  std::vector<WindowRecord> records;
  {
    const auto t0 = clock_type::now();
    records = analyzed_windows(cfg);
    double min_lower = 1e300, min_upper = 1e300;
    double singlet_excess = 0.0, singlet_leak = 0.0, deficit = 0.0;
    std::size_t n_pairs = 0;
    for (const auto& rec : records) {
      min_lower = std::min(min_lower, rec.min_lower_slack);
      min_upper = std::min(min_upper, rec.min_upper_slack);
      singlet_excess = std::max(singlet_excess, rec.max_singlet_pair_excess);
      singlet_leak = std::max(singlet_leak, rec.max_singlet_leakage);
      deficit = std::max(deficit, rec.max_trace_deficit);
      n_pairs += rec.stats.n_pairs;
    }
    const bool ok = !records.empty() && min_lower >= -1e-10 && min_upper >= -1e-10 &&
                    singlet_excess <= 1e-10 && singlet_leak <= 1e-10;
    report(3, ok,
           "slack minima " + fmt(min_lower) + " / " + fmt(min_upper) + " over " +
               std::to_string(n_pairs) + " window pairs; singlet-sector exact-split excess " +
               fmt(singlet_excess) + ", singlet leakage " + fmt(singlet_leak) + " (" +
               fmt(seconds_since(t0)) + " s)");

    double worst_bare = -1e300, worst_chain = -1e300;
    bool chain_ok = true;
    for (const auto& rec : records) {
      const WindowStats& w = rec.stats;
      worst_bare = std::max(worst_bare, w.avg_d_prob - w.bound_rhs);
      const double links[3] = {
          w.avg_d_prob - (w.sum_mean_absdev + w.endpoint_correction),
          w.sum_mean_absdev - w.sum_sqrt_var,
          w.sum_sqrt_var - w.bound_rhs,
      };
      for (double l : links) {
        worst_chain = std::max(worst_chain, l);
        chain_ok &= l <= 1e-10;
      }
      chain_ok &= !check_window_invariants(w).has_value();
    }
    report(4, worst_bare <= 1e-10 && chain_ok,
           "variance bound margin max(avg_d_prob - sqrt(n_sec*sum_var)) = " + fmt(worst_bare) +
               ", worst proof-chain link " + fmt(worst_chain) + " over " +
               std::to_string(records.size()) + " windows");
  }

  // ---- criterion 5: SU(2) structure ----------------------------------------
  {
    double proj = 0.0;
    for (int n = 2; n <= 6; ++n)
      for (int n_a = 1; n_a < n; ++n_a)
        proj = std::max(proj, projector_invariance_check(n, n_a));

    double deficit = 0.0, singlet_leak = 0.0;
    for (const auto& rec : records) {
      deficit = std::max(deficit, rec.max_trace_deficit);
      singlet_leak = std::max(singlet_leak, rec.max_singlet_leakage);
    }
    for (int n = 2; n <= 6; ++n) {
      const int n_a = std::max(1, n / 2);
      const SpinAdaptedBasisA& basisA = spin_adapted_basis(n_a);
      for (int two_m = -n; two_m <= n; two_m += 2) {
        SolveOptions opts;
        opts.parity_resolved = false;
        const SectorSpectrum spec = solve_sector(n, two_m, 1.0, 0.5, opts);
        const SectorBasis basis = enumerate_sector(n, two_m);
        for (const auto& st : spec.states) {
          const auto r = resolve(reduced_density_matrix(st.vector, basis, n_a), basisA);
          deficit = std::max(deficit, r.trace_deficit);
          if (st.two_s == 0) singlet_leak = std::max(singlet_leak, r.leakage);
        }
      }
    }

    double mdev = 0.0;
    std::size_t compared = 0;
    for (int n = 2; n <= 8; ++n) {
      for (double j2 : {0.0, 0.5}) {
        const auto rep = m_independence_check(n, 1.0, j2, std::max(1, n / 2));
        mdev = std::max(mdev, rep.max_discrepancy);
        compared += rep.compared;
      }
    }
    const bool ok = proj <= 1e-12 && deficit <= 1e-10 && singlet_leak <= 1e-10 && mdev <= 1e-10;
    report(5, ok,
           "projector commutator " + fmt(proj) + ", probability deficit " + fmt(deficit) +
               ", singlet leakage " + fmt(singlet_leak) + ", m-independence " + fmt(mdev) +
               " (" + std::to_string(compared) + " multiplet comparisons)");
  }

  // ---- criteria 6-8: scaling trends over N in {8,10,12,14} -----------------
  {
    const auto t0 = clock_type::now();
    RunConfig trend = cfg;
    trend.j2_list = {0.4, 0.8};
    const ScanResult sc = scan(trend);
    const double dt = seconds_since(t0);

    std::map<double, std::vector<std::pair<int, double>>> var_seq, gap_seq;
    for (const auto& row : sc.rows) {
      if (!row.aggregate) continue;
      var_seq[row.j2].emplace_back(row.n, row.sum_var);
      gap_seq[row.j2].emplace_back(row.n, row.avg_gap);
    }
    const std::vector<FitRow> fits = fit_scan(sc.rows);
    const auto fit_for = [&](double j2, const std::string& q) -> const FitRow* {
      for (const auto& f : fits)
        if (f.j2 == j2 && f.quantity == q) return &f;
      return nullptr;
    };
    const auto strictly_decreasing = [](const std::vector<std::pair<int, double>>& seq) {
      for (std::size_t i = 1; i < seq.size(); ++i)
        if (seq[i].second >= seq[i - 1].second) return false;
      return seq.size() >= 2;
    };

    bool var_ok = true, gap_ok = true, exp_ok = true, pref_ok = true;
    std::string var_detail, gap_detail, pref_detail;
    for (double j2 : trend.j2_list) {
      auto& vs = var_seq[j2];
      auto& gs = gap_seq[j2];
      std::sort(vs.begin(), vs.end());
      std::sort(gs.begin(), gs.end());
      var_ok &= strictly_decreasing(vs);
      gap_ok &= strictly_decreasing(gs);
      var_detail += (var_detail.empty() ? "" : " | ") + ("J2=" + fmt(j2) + ": " + trend_string(vs));
      gap_detail += (gap_detail.empty() ? "" : " | ") + ("J2=" + fmt(j2) + ": " + trend_string(gs));

      const FitRow* fv = fit_for(j2, "sum_var");
      exp_ok &= fv != nullptr && fv->preferred == ModelPreference::exponential;
      const FitRow* fp = fit_for(j2, "avg_d_prob");
      pref_ok &= fp != nullptr && fp->preferred != ModelPreference::indeterminate;
      if (fp != nullptr)
        pref_detail += (pref_detail.empty() ? "" : " | ") +
                       ("J2=" + fmt(j2) + ": " + preference_name(fp->preferred) +
                        " (delta rss " + fmt(fp->delta_rss_log) + ")");
    }

    report(6, var_ok && exp_ok,
           "aggregate sum_var " + var_detail + (exp_ok ? "; exponential preferred" : "; exponential not preferred") +
               " (" + fmt(dt) + " s, budget 900 s)");
    report(7, gap_ok, "aggregate avg_gap " + gap_detail);

    bool bare_ok = true;
    for (const auto& rec : records) bare_ok &= rec.stats.bound_satisfied;
    report(8, pref_ok && bare_ok,
           "avg_d_prob fit preference " + pref_detail +
               (bare_ok ? "; variance bound holds on all windows"
                        : "; variance bound violated somewhere"));
  }

  // ---- criterion 9: byte-identical repeated analysis ------------------------
  {
    RunConfig rcfg;
    rcfg.sizes = {8, 10};
    rcfg.j2_list = {0.4};
    rcfg.cache_dir = (work / "cache9").string();
    rcfg.out_dir = (work / "out9").string();
    rcfg.force = true;
    const std::string fresh = result_csv(analyze(rcfg).rows);
    rcfg.force = false;
    const std::string cached = result_csv(analyze(rcfg).rows);
    const std::string cached2 = result_csv(analyze(rcfg).rows);
    const bool ok = !fresh.empty() && fresh == cached && cached == cached2;
    report(9, ok, ok ? "fresh, cache-backed, and repeated cache-backed runs all byte-identical ("
                           + std::to_string(fresh.size()) + " bytes)"
                     : "runs differ");
  }

  // ---- criterion 10: optional capacity run ----------------------------------
  {
    if (std::getenv("SU2TD_ACCEPTANCE_CAPACITY") != nullptr) {
      const auto t0 = clock_type::now();
      bool ok = true;
      std::string detail;
      try {
        SolveOptions opts;
        opts.retention = VectorRetention::keep_window(WindowSpec{});
        const SectorSpectrum spec = solve_sector(16, 0, 1.0, 0.4, opts);
        detail = std::to_string(spec.states.size()) + " states solved in " +
                 fmt(seconds_since(t0)) + " s";
      } catch (const capacity_error& e) {
        detail = std::string("documented capacity exit: ") + e.what();
      } catch (const std::exception& e) {
        ok = false;
        detail = std::string("unexpected error: ") + e.what();
      }
      std::printf("criterion 10: %s  %s (optional)\n", ok ? "PASS" : "FAIL", detail.c_str());
    } else {
      std::printf(
          "criterion 10: SKIP  optional capacity run (N=16, dim 12870); set "
          "SU2TD_ACCEPTANCE_CAPACITY=1 to execute\n");
    }
  }

  std::printf("acceptance: %d of 9 required criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
