#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"

#include "su2td/errors.hpp"
#include "su2td/pipeline.hpp"

namespace {

using namespace su2td;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw argument_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (!path.parent_path().empty()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw argument_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw argument_error("write failed for " + path.string());
}

struct CliOverrides {
  std::optional<std::string> config;
  std::optional<std::vector<int>> sizes;
  std::optional<std::vector<double>> j2_list;
  std::optional<double> j1;
  std::optional<int> two_m;
  std::optional<std::string> parity;
  std::optional<double> fraction;
  std::optional<std::string> window;
  std::optional<std::string> spin_sectors;
  std::optional<std::string> cache_dir;
  std::optional<std::string> out_dir;
  std::optional<std::size_t> dim_limit;
  std::optional<std::string> grouping;
  std::optional<std::string> nsec_mode;
  std::optional<int> threads;
  bool force = false;
};

WindowSpec parse_window_arg(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == s.size()) {
    throw argument_error("--window expects LO:HI, got '" + s + "'");
  }
  WindowSpec w;
  try {
    std::size_t used = 0;
    w.f_lo = std::stod(s.substr(0, colon), &used);
    if (used != colon) throw argument_error("");
    w.f_hi = std::stod(s.substr(colon + 1), &used);
    if (used != s.size() - colon - 1) throw argument_error("");
  } catch (...) {
    throw argument_error("--window expects LO:HI, got '" + s + "'");
  }
  return w;
}

std::optional<std::vector<int>> parse_spin_sectors_arg(const std::string& s) {
  if (s == "all") return std::nullopt;
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw argument_error("");
    } catch (...) {
      throw argument_error("--spin-sectors expects 'all' or comma-separated two_s values");
    }
  }
  return out;
}

RunConfig build_config(const CliOverrides& o) {
  RunConfig cfg = o.config ? load_config(*o.config) : RunConfig{};
  if (o.sizes) cfg.sizes = *o.sizes;
  if (o.j2_list) cfg.j2_list = *o.j2_list;
  if (o.j1) cfg.j1 = *o.j1;
  if (o.two_m) cfg.two_m = *o.two_m;
  if (o.parity) cfg.parity_resolved = (*o.parity == "on");
  if (o.fraction) cfg.fraction = *o.fraction;
  if (o.window) cfg.window = parse_window_arg(*o.window);
  if (o.spin_sectors) cfg.spin_sectors = parse_spin_sectors_arg(*o.spin_sectors);
  if (o.cache_dir) cfg.cache_dir = *o.cache_dir;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.dim_limit) cfg.dim_limit = *o.dim_limit;
  if (o.grouping) {
    cfg.grouping = (*o.grouping == "spin") ? WindowGrouping::by_spin
                                           : WindowGrouping::by_spin_parity;
  }
  if (o.nsec_mode) {
    cfg.nsec_mode = (*o.nsec_mode == "observed") ? NsecMode::observed : NsecMode::kinematic;
  }
  if (o.force) cfg.force = true;
  return cfg;
}

int cmd_solve(const RunConfig& cfg) {
  validate(cfg);
  for (int n : cfg.sizes) {
    for (double j2 : cfg.j2_list) {
      bool from_cache = false;
      const SectorSpectrum spec = ensure_spectrum(cfg, n, j2, &from_cache);
      std::printf("N=%d J2=%g two_m=%d: %zu states %s\n", n, j2, cfg.two_m,
                  spec.states.size(), from_cache ? "cached" : "solved");
    }
  }
  return 0;
}

int cmd_analyze(const RunConfig& cfg) {
  const AnalyzeResult res = analyze(cfg);
  for (const auto& s : res.skipped) std::printf("skipped %s\n", s.c_str());
  const std::filesystem::path out = std::filesystem::path(cfg.out_dir) / "results.csv";
  write_text_file(out, result_csv(res.rows));
  std::printf("wrote %s (%zu rows)\n", out.string().c_str(), res.rows.size());
  return 0;
}

int cmd_scan(const RunConfig& cfg) {
  const ScanResult res = scan(cfg);
  for (const auto& w : res.warnings) std::printf("warning: %s\n", w.c_str());
  const std::filesystem::path out = std::filesystem::path(cfg.out_dir) / "scan.csv";
  write_text_file(out, scan_csv(res.rows));
  std::printf("wrote %s (%zu rows)\n", out.string().c_str(), res.rows.size());
  return 0;
}

int cmd_fit(const RunConfig& cfg, const std::string& scan_path) {
  const std::filesystem::path in =
      scan_path.empty() ? std::filesystem::path(cfg.out_dir) / "scan.csv"
                        : std::filesystem::path(scan_path);
  const std::vector<ScanRow> rows = parse_scan_csv(read_text_file(in));
  const std::vector<FitRow> fits = fit_scan(rows);
  for (const auto& f : fits) {
    std::printf("J2=%g %s: prefers %s (exp b=%.4g r2=%.6f | pow b=%.4g r2=%.6f, "
                "delta_rss_log=%.4g)\n",
                f.j2, f.quantity.c_str(), preference_name(f.preferred), f.exponential.b,
                f.exponential.r_squared, f.powerlaw.b, f.powerlaw.r_squared,
                f.delta_rss_log);
  }
  const std::filesystem::path out = std::filesystem::path(cfg.out_dir) / "fits.csv";
  write_text_file(out, fits_csv(fits));
  std::printf("wrote %s (%zu rows)\n", out.string().c_str(), fits.size());
  return 0;
}

int cmd_plot(const RunConfig& cfg, const std::string& scan_path, const std::string& figure) {
  const std::filesystem::path in =
      scan_path.empty() ? std::filesystem::path(cfg.out_dir) / "scan.csv"
                        : std::filesystem::path(scan_path);
  const std::vector<ScanRow> rows = parse_scan_csv(read_text_file(in));
  const std::string svg = render_figure(rows, figure);
  const std::filesystem::path out = std::filesystem::path(cfg.out_dir) / (figure + ".svg");
  write_text_file(out, svg);
  std::printf("wrote %s\n", out.string().c_str());
  return 0;
}

int cmd_verify(int max_n) {
  const VerifyReport rep = run_verify(max_n);
  for (const auto& line : rep.lines) std::printf("%s\n", line.c_str());
  std::printf("verify: %s\n", rep.ok ? "ok" : "FAIL");
  return rep.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symmetry-resolved trace-distance diagnostics for J1-J2 Heisenberg chains"};
  app.require_subcommand(1);

  CliOverrides o;
  app.add_option("--config", o.config, "JSON config file");
  app.add_option("--sizes", o.sizes, "chain lengths, e.g. 8,10,12")->delimiter(',');
  app.add_option("--j2-list", o.j2_list, "J2 values, e.g. 0,0.4,0.8")->delimiter(',');
  app.add_option("--j1", o.j1, "nearest-neighbour coupling");
  app.add_option("--two-m", o.two_m, "twice the total magnetization");
  app.add_option("--parity", o.parity, "reflection-parity resolution")
      ->check(CLI::IsMember({"on", "off"}));
  app.add_option("--fraction", o.fraction, "subsystem fraction n_a/N");
  app.add_option("--window", o.window, "microcanonical window LO:HI (fractions)");
  app.add_option("--spin-sectors", o.spin_sectors,
                 "'all' or comma-separated two_s values to analyze");
  app.add_option("--cache-dir", o.cache_dir, "spectrum cache directory");
  app.add_option("--out", o.out_dir, "output directory");
  app.add_option("--dim-limit", o.dim_limit, "largest sector dimension to diagonalize");
  app.add_option("--grouping", o.grouping, "window grouping")
      ->check(CLI::IsMember({"spin_parity", "spin"}));
  app.add_option("--nsec-mode", o.nsec_mode, "sector count in the variance bound")
      ->check(CLI::IsMember({"kinematic", "observed"}));
  app.add_option("--threads", o.threads, "OpenMP thread count")
      ->check(CLI::PositiveNumber);
  app.add_flag("--force", o.force, "recompute cached spectra");

  auto* solve = app.add_subcommand("solve", "diagonalize the configured sectors");
  auto* analyze_cmd = app.add_subcommand("analyze", "per-group window statistics CSV");
  auto* scan_cmd = app.add_subcommand("scan", "size scan with per-(N,J2) aggregates");
  auto* fit = app.add_subcommand("fit", "exponential vs power-law fits of a scan");
  std::string fit_scan_path;
  fit->add_option("--scan", fit_scan_path, "scan CSV to fit (default: OUT/scan.csv)");
  auto* plot = app.add_subcommand("plot", "render one scaling figure as SVG");
  std::string plot_scan_path, figure;
  plot->add_option("--scan", plot_scan_path, "scan CSV to plot (default: OUT/scan.csv)");
  plot->add_option("--figure", figure, "fig1a (sum_var), fig1b (avg_d_prob), fig2 (avg_gap)")
      ->required()
      ->check(CLI::IsMember({"fig1a", "fig1b", "fig2"}));
  auto* verify = app.add_subcommand("verify", "internal consistency and oracle checks");
  int max_n = 6;
  verify->add_option("--max-n", max_n, "largest chain length to verify (2..8)");

  for (auto* sub : {solve, analyze_cmd, scan_cmd, fit, plot, verify}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
#ifdef _OPENMP
    if (o.threads) omp_set_num_threads(*o.threads);
#endif
    const RunConfig cfg = build_config(o);
    if (solve->parsed()) return cmd_solve(cfg);
    if (analyze_cmd->parsed()) return cmd_analyze(cfg);
    if (scan_cmd->parsed()) return cmd_scan(cfg);
    if (fit->parsed()) return cmd_fit(cfg, fit_scan_path);
    if (plot->parsed()) return cmd_plot(cfg, plot_scan_path, figure);
    if (verify->parsed()) return cmd_verify(max_n);
  } catch (const argument_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const format_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const capacity_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
