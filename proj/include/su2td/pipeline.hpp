#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "su2td/micro_stats.hpp"
#include "su2td/scaling_fits.hpp"
#include "su2td/spectral.hpp"
#include "su2td/window.hpp"

namespace su2td {

struct RunConfig {
  std::vector<int> sizes{8, 10, 12};
  std::vector<double> j2_list{0.0, 0.4, 0.8};
  double j1 = 1.0;
  int two_m = 0;
  bool parity_resolved = true;
  double fraction = 0.5;  // subsystem fraction x = n_a / N
  WindowSpec window{};
  std::optional<std::vector<int>> spin_sectors;  // nullopt = all two_s
  std::string cache_dir = "cache";
  std::string out_dir = "out";
  std::size_t dim_limit = 16000;
  WindowGrouping grouping = WindowGrouping::by_spin_parity;
  NsecMode nsec_mode = NsecMode::kinematic;
  double p_floor = 1e-14;
  double s2_tolerance = 1e-6;
  bool force = false;      // recompute caches
  bool use_cache = true;   // in-memory only when false

  /// round(fraction * n); argument_error unless fraction*n is integral
  /// (within 1e-9) and 1 <= n_a <= min(n-1, 12).
  int subsystem_size(int n) const;
};

/// Parse a JSON config file (RunConfig field names; unknown keys rejected).
RunConfig load_config(const std::string& path);
void validate(const RunConfig& cfg);

std::filesystem::path cache_path(const RunConfig& cfg, int n, double j2);

/// Binary spectrum cache (magic "SU2TDC1\0", little-endian header and
/// records, trailing 64-bit FNV-1a checksum). Vectors dropped at solve time
/// are stored with length 0; labeling residuals are recomputed on load for
/// every state that kept its vector.
void write_spectrum_cache(const std::filesystem::path& path, const SectorSpectrum& spec);
SectorSpectrum read_spectrum_cache(const std::filesystem::path& path);

/// Solve or reuse the cache for one (n, j2) sector pair. A cache is reused
/// only when its header matches the request and it retains vectors for
/// every state the config's window needs; otherwise the sector is solved
/// and the cache rewritten.
SectorSpectrum ensure_spectrum(const RunConfig& cfg, int n, double j2,
                               bool* from_cache = nullptr);

struct AnalyzeResult {
  std::vector<WindowStats> rows;     // sorted by (N, J2, two_s, parity)
  std::vector<std::string> skipped;  // groups without a usable window
};
AnalyzeResult analyze(const RunConfig& cfg);

std::string result_csv(const std::vector<WindowStats>& rows);

struct ScanRow {
  int n = 0;
  double j2 = 0.0;
  bool aggregate = false;  // dimension-weighted mean over the groups
  int two_s = 0;           // group rows only
  Parity parity = Parity::none;
  double weight = 0.0;     // group size; summed for aggregate rows
  double sum_var = 0.0;
  double avg_d_prob = 0.0;
  double avg_gap = 0.0;
};
struct ScanResult {
  std::vector<ScanRow> rows;
  std::vector<std::string> warnings;  // non-monotone trends and skipped groups
};
ScanResult scan(const RunConfig& cfg);

std::string scan_csv(const std::vector<ScanRow>& rows);
std::vector<ScanRow> parse_scan_csv(const std::string& text);

struct FitRow {
  double j2 = 0.0;
  std::string quantity;
  ScalingFit exponential;
  ScalingFit powerlaw;
  ModelPreference preferred = ModelPreference::indeterminate;
  double delta_rss_log = 0.0;
};
/// Fits over the aggregate rows of a scan, per (J2, quantity).
std::vector<FitRow> fit_scan(const std::vector<ScanRow>& rows);
std::string fits_csv(const std::vector<FitRow>& rows);

/// Log-y scaling figure from the aggregate scan rows. figure_id selects the
/// quantity: fig1a = sum_var, fig1b = avg_d_prob, fig2 = avg_gap.
std::string render_figure(const std::vector<ScanRow>& rows, const std::string& figure_id);

struct VerifyReport {
  std::vector<std::string> lines;
  bool ok = true;
};
/// Structural checks, oracle comparisons, and inequality sweeps up to
/// max_n sites (2 <= max_n <= 8). Oracle and projector suites are capped at
/// 6 sites; everything runs in memory.
VerifyReport run_verify(int max_n);

}  // namespace su2td
