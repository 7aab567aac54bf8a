#include "su2td/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "su2td/bruteforce.hpp"
#include "su2td/distances.hpp"
#include "su2td/errors.hpp"
#include "su2td/lattice_operators.hpp"
#include "su2td/su2_resolution.hpp"

namespace su2td {

namespace {

static_assert(std::endian::native == std::endian::little,
              "cache format is little-endian; big-endian hosts unsupported");

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

int parity_rank(Parity p) { return static_cast<int>(p); }

Parity parse_parity(const std::string& s) {
  if (s == "even") return Parity::even;
  if (s == "odd") return Parity::odd;
  if (s == "none") return Parity::none;
  throw format_error("unknown parity '" + s + "'");
}

constexpr char kCacheMagic[8] = {'S', 'U', '2', 'T', 'D', 'C', '1', '\0'};
constexpr std::uint32_t kCacheVersion = 1;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::string& bytes, std::size_t& pos, const char* what) {
  if (pos + sizeof(T) > bytes.size()) {
    throw integrity_error(std::string("cache truncated while reading ") + what);
  }
  T v;
  std::memcpy(&v, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

const char* kResultHeader =
    "N,J2,two_m,two_s,parity,n_a,window_lo,window_hi,n_states,n_pairs,n_sec,"
    "sum_var,avg_d_prob,avg_d_conf,avg_d_full,avg_gap,bound_rhs,bound_satisfied,"
    "avg_leakage,max_s2_residual,schema_version";

const char* kScanHeader =
    "N,J2,scope,two_s,parity,weight,sum_var,avg_d_prob,avg_gap,schema_version";

const char* kFitsHeader =
    "J2,quantity,exp_a,exp_b,exp_r_squared,exp_rss_log,pow_a,pow_b,"
    "pow_r_squared,pow_rss_log,preferred,delta_rss_log,n_points,schema_version";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw format_error("");
    return v;
  } catch (...) {
    throw format_error(std::string("bad ") + what + " value '" + s + "'");
  }
}

long parse_long(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw format_error("");
    return v;
  } catch (...) {
    throw format_error(std::string("bad ") + what + " value '" + s + "'");
  }
}

}  // namespace

int RunConfig::subsystem_size(int n) const {
  const double x = fraction * n;
  const int n_a = static_cast<int>(std::lround(x));
  if (std::abs(x - n_a) > 1e-9) {
    throw argument_error("fraction*N must be integral: fraction=" + fmt_short(fraction) +
                         ", N=" + std::to_string(n));
  }
  if (n_a < 1 || n_a > n - 1 || n_a > 12) {
    throw argument_error("subsystem size " + std::to_string(n_a) +
                         " out of range [1, min(N-1, 12)] for N=" + std::to_string(n));
  }
  return n_a;
}

void validate(const RunConfig& cfg) {
  if (cfg.sizes.empty()) throw argument_error("config: sizes must not be empty");
  std::set<int> seen;
  for (int n : cfg.sizes) {
    if (n < 2 || n > kMaxSites) {
      throw argument_error("config: size " + std::to_string(n) + " out of range [2," +
                           std::to_string(kMaxSites) + "]");
    }
    if (!seen.insert(n).second) {
      throw argument_error("config: duplicate size " + std::to_string(n));
    }
    if (std::abs(cfg.two_m) > n || (n - cfg.two_m) % 2 != 0) {
      throw argument_error("config: two_m=" + std::to_string(cfg.two_m) +
                           " invalid for N=" + std::to_string(n));
    }
    (void)cfg.subsystem_size(n);
  }
  if (cfg.j2_list.empty()) throw argument_error("config: j2_list must not be empty");
  std::set<double> seen_j2;
  for (double j2 : cfg.j2_list) {
    if (!std::isfinite(j2)) throw argument_error("config: J2 must be finite");
    if (!seen_j2.insert(j2).second) throw argument_error("config: duplicate J2 value");
  }
  if (!std::isfinite(cfg.j1)) throw argument_error("config: J1 must be finite");
  if (!(cfg.window.f_lo >= 0.0) || !(cfg.window.f_hi <= 1.0) ||
      !(cfg.window.f_lo < cfg.window.f_hi)) {
    throw argument_error("config: window must satisfy 0 <= f_lo < f_hi <= 1");
  }
  if (cfg.dim_limit < 1) throw argument_error("config: dim_limit must be positive");
  if (!(cfg.p_floor >= 0.0)) throw argument_error("config: p_floor must be >= 0");
  if (!(cfg.s2_tolerance > 0.0)) throw argument_error("config: s2_tolerance must be > 0");
  if (cfg.cache_dir.empty() || cfg.out_dir.empty()) {
    throw argument_error("config: cache_dir and out_dir must not be empty");
  }
  if (cfg.spin_sectors) {
    const int max_n = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
    for (int two_s : *cfg.spin_sectors) {
      if (two_s < std::abs(cfg.two_m) || two_s > max_n || (max_n - two_s) % 2 != 0) {
        throw argument_error("config: spin sector two_s=" + std::to_string(two_s) +
                             " unreachable for the configured sizes and two_m");
      }
    }
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw argument_error("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw argument_error(std::string("config: parse failure: ") + e.what());
  }
  if (!j.is_object()) throw argument_error("config: top level must be a JSON object");

  static const std::set<std::string> known = {
      "sizes",       "j2_list",   "j1",        "two_m",      "parity_resolved",
      "fraction",    "window",    "spin_sectors", "cache_dir", "out_dir",
      "dim_limit",   "grouping",  "nsec_mode", "p_floor",    "s2_tolerance",
      "force"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      throw argument_error("config: unknown key '" + item.key() + "'");
    }
  }

  RunConfig cfg;
  try {
    if (j.contains("sizes")) cfg.sizes = j["sizes"].get<std::vector<int>>();
    if (j.contains("j2_list")) cfg.j2_list = j["j2_list"].get<std::vector<double>>();
    if (j.contains("j1")) cfg.j1 = j["j1"].get<double>();
    if (j.contains("two_m")) cfg.two_m = j["two_m"].get<int>();
    if (j.contains("parity_resolved")) cfg.parity_resolved = j["parity_resolved"].get<bool>();
    if (j.contains("fraction")) cfg.fraction = j["fraction"].get<double>();
    if (j.contains("window")) {
      const auto& w = j["window"];
      if (!w.is_object()) throw argument_error("config: window must be an object");
      for (const auto& item : w.items()) {
        if (item.key() != "f_lo" && item.key() != "f_hi") {
          throw argument_error("config: unknown window key '" + item.key() + "'");
        }
      }
      if (w.contains("f_lo")) cfg.window.f_lo = w["f_lo"].get<double>();
      if (w.contains("f_hi")) cfg.window.f_hi = w["f_hi"].get<double>();
    }
    if (j.contains("spin_sectors")) {
      const auto& s = j["spin_sectors"];
      if (s.is_string() && s.get<std::string>() == "all") {
        cfg.spin_sectors.reset();
      } else if (s.is_array()) {
        cfg.spin_sectors = s.get<std::vector<int>>();
      } else {
        throw argument_error("config: spin_sectors must be \"all\" or a list of two_s");
      }
    }
    if (j.contains("cache_dir")) cfg.cache_dir = j["cache_dir"].get<std::string>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("dim_limit")) cfg.dim_limit = j["dim_limit"].get<std::size_t>();
    if (j.contains("grouping")) {
      const std::string g = j["grouping"].get<std::string>();
      if (g == "spin_parity") {
        cfg.grouping = WindowGrouping::by_spin_parity;
      } else if (g == "spin") {
        cfg.grouping = WindowGrouping::by_spin;
      } else {
        throw argument_error("config: grouping must be 'spin_parity' or 'spin'");
      }
    }
    if (j.contains("nsec_mode")) {
      const std::string m = j["nsec_mode"].get<std::string>();
      if (m == "kinematic") {
        cfg.nsec_mode = NsecMode::kinematic;
      } else if (m == "observed") {
        cfg.nsec_mode = NsecMode::observed;
      } else {
        throw argument_error("config: nsec_mode must be 'kinematic' or 'observed'");
      }
    }
    if (j.contains("p_floor")) cfg.p_floor = j["p_floor"].get<double>();
    if (j.contains("s2_tolerance")) cfg.s2_tolerance = j["s2_tolerance"].get<double>();
    if (j.contains("force")) cfg.force = j["force"].get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw argument_error(std::string("config: ") + e.what());
  }
  return cfg;
}

std::filesystem::path cache_path(const RunConfig& cfg, int n, double j2) {
  std::string name = "spectrum_N" + std::to_string(n) + "_m" + std::to_string(cfg.two_m) +
                     "_j1_" + fmt17(cfg.j1) + "_j2_" + fmt17(j2) +
                     (cfg.parity_resolved ? "_par" : "_full") + ".bin";
  return std::filesystem::path(cfg.cache_dir) / name;
}

void write_spectrum_cache(const std::filesystem::path& path, const SectorSpectrum& spec) {
  std::string payload;
  put<std::uint32_t>(payload, kCacheVersion);
  put<std::uint32_t>(payload, static_cast<std::uint32_t>(spec.n_sites));
  put<std::int32_t>(payload, spec.two_m);
  put<double>(payload, spec.j1);
  put<double>(payload, spec.j2);
  put<std::uint8_t>(payload, spec.parity_resolved ? 1 : 0);
  for (const auto& st : spec.states) {
    put<double>(payload, st.energy);
    put<std::int32_t>(payload, st.two_s);
    put<std::uint8_t>(payload, static_cast<std::uint8_t>(st.parity));
    put<std::uint32_t>(payload, static_cast<std::uint32_t>(st.vector.size()));
    for (Eigen::Index i = 0; i < st.vector.size(); ++i) put<double>(payload, st.vector[i]);
  }

  if (!path.parent_path().empty()) {
    std::filesystem::create_directories(path.parent_path());
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw integrity_error("cache: cannot open " + tmp.string() + " for writing");
    out.write(kCacheMagic, sizeof kCacheMagic);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    const std::uint64_t checksum = fnv1a(payload);
    out.write(reinterpret_cast<const char*>(&checksum), sizeof checksum);
    if (!out) throw integrity_error("cache: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

SectorSpectrum read_spectrum_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw integrity_error("cache: cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof kCacheMagic + 29 + 8 ||
      std::memcmp(bytes.data(), kCacheMagic, sizeof kCacheMagic) != 0) {
    throw integrity_error("cache: magic mismatch in " + path.string());
  }
  const std::string payload = bytes.substr(sizeof kCacheMagic, bytes.size() - sizeof kCacheMagic - 8);
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
  if (fnv1a(payload) != stored) {
    throw integrity_error("cache: checksum mismatch in " + path.string());
  }

  std::size_t pos = 0;
  const auto version = take<std::uint32_t>(payload, pos, "version");
  if (version != kCacheVersion) {
    throw integrity_error("cache: unsupported version " + std::to_string(version) + " in " +
                          path.string());
  }
  SectorSpectrum spec;
  spec.n_sites = static_cast<int>(take<std::uint32_t>(payload, pos, "site count"));
  spec.two_m = take<std::int32_t>(payload, pos, "two_m");
  spec.j1 = take<double>(payload, pos, "J1");
  spec.j2 = take<double>(payload, pos, "J2");
  spec.parity_resolved = take<std::uint8_t>(payload, pos, "parity flag") != 0;

  bool any_vector = false;
  while (pos < payload.size()) {
    EigenstateRecord rec;
    rec.energy = take<double>(payload, pos, "energy");
    rec.two_s = take<std::int32_t>(payload, pos, "two_s");
    const auto parity = take<std::uint8_t>(payload, pos, "parity");
    if (parity > 2) throw integrity_error("cache: bad parity byte in " + path.string());
    rec.parity = static_cast<Parity>(parity);
    const auto veclen = take<std::uint32_t>(payload, pos, "vector length");
    rec.vector.resize(static_cast<Eigen::Index>(veclen));
    for (std::uint32_t i = 0; i < veclen; ++i) {
      rec.vector[static_cast<Eigen::Index>(i)] = take<double>(payload, pos, "amplitude");
    }
    any_vector |= rec.has_vector();
    spec.states.push_back(std::move(rec));
  }

  // Residuals are not stored; recompute them for every state that kept its
  // vector, through the same expectation kernel as the solve path, so the
  // values are bit-identical to a fresh solve.
  if (any_vector) {
    const SectorBasis basis = enumerate_sector(spec.n_sites, spec.two_m);
    const SparseSymmetricOperator s2 = build_total_spin_squared(basis);
    for (auto& st : spec.states) {
      if (!st.has_vector()) continue;
      if (static_cast<std::size_t>(st.vector.size()) != basis.size()) {
        throw integrity_error("cache: vector length does not match the sector dimension in " +
                              path.string());
      }
      const double val = st.vector.dot(s2.apply(st.vector));
      st.s2_residual = std::abs(val - 0.25 * st.two_s * (st.two_s + 2));
    }
  }
  return spec;
}

namespace {

/// Stale when a recomputed labeling residual exceeds the tolerance.
bool labels_within_tolerance(const SectorSpectrum& spec, double s2_tolerance) {
  for (const auto& st : spec.states) {
    if (st.has_vector() && st.s2_residual > s2_tolerance) return false;
  }
  return true;
}

/// Window-state indices the config needs vectors for, per group.
std::vector<std::size_t> needed_indices(const SectorSpectrum& spec, const RunConfig& cfg) {
  std::vector<std::size_t> needed;
  const auto groups = spec.window_groups(cfg.grouping);
  const auto keys = spec.window_group_keys(cfg.grouping);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (cfg.spin_sectors &&
        std::find(cfg.spin_sectors->begin(), cfg.spin_sectors->end(), keys[g].first) ==
            cfg.spin_sectors->end()) {
      continue;
    }
    IndexRange w;
    try {
      w = select_window(groups[g].size(), cfg.window);
    } catch (const window_error&) {
      continue;
    }
    for (std::size_t i = w.lo; i < w.hi; ++i) needed.push_back(groups[g][i]);
  }
  return needed;
}

}  // namespace

SectorSpectrum ensure_spectrum(const RunConfig& cfg, int n, double j2, bool* from_cache) {
  if (from_cache) *from_cache = false;
  const std::filesystem::path path = cache_path(cfg, n, j2);

  if (cfg.use_cache && !cfg.force && std::filesystem::exists(path)) {
    SectorSpectrum spec = read_spectrum_cache(path);
    if (spec.n_sites != n || spec.two_m != cfg.two_m || spec.j1 != cfg.j1 ||
        spec.j2 != j2 || spec.parity_resolved != cfg.parity_resolved) {
      throw integrity_error("cache: header does not match its file name: " + path.string());
    }
    if (labels_within_tolerance(spec, cfg.s2_tolerance)) {
      bool usable = true;
      for (std::size_t idx : needed_indices(spec, cfg)) {
        if (!spec.states[idx].has_vector()) {
          usable = false;
          break;
        }
      }
      if (usable) {
        if (from_cache) *from_cache = true;
        return spec;
      }
    }
  }

  SolveOptions opts;
  opts.parity_resolved = cfg.parity_resolved;
  opts.dim_limit = cfg.dim_limit;
  opts.s2_tolerance = cfg.s2_tolerance;
  opts.retention = VectorRetention::keep_window(cfg.window, cfg.grouping);
  SectorSpectrum spec = solve_sector(n, cfg.two_m, cfg.j1, j2, opts);
  if (cfg.use_cache) write_spectrum_cache(path, spec);
  return spec;
}

AnalyzeResult analyze(const RunConfig& cfg) {
  validate(cfg);
  AnalyzeResult res;

  for (int n : cfg.sizes) {
    const int n_a = cfg.subsystem_size(n);
    const SpinAdaptedBasisA& basisA = spin_adapted_basis(n_a);
    for (double j2 : cfg.j2_list) {
      const SectorSpectrum spec = ensure_spectrum(cfg, n, j2);
      const auto groups = spec.window_groups(cfg.grouping);
      const auto keys = spec.window_group_keys(cfg.grouping);

      for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto [two_s, parity] = keys[g];
        if (cfg.spin_sectors &&
            std::find(cfg.spin_sectors->begin(), cfg.spin_sectors->end(), two_s) ==
                cfg.spin_sectors->end()) {
          continue;
        }
        const std::string context = "N=" + std::to_string(n) + " J2=" + fmt_short(j2) +
                                    " two_s=" + std::to_string(two_s) + " parity=" +
                                    parity_name(parity);
        IndexRange w;
        try {
          w = select_window(groups[g].size(), cfg.window);
        } catch (const window_error& e) {
          res.skipped.push_back(context + ": " + e.what());
          continue;
        }
        const std::span<const std::size_t> indices =
            std::span(groups[g]).subspan(w.lo, w.size());

        const auto srrs = resolve_states(spec, indices, basisA, cfg.p_floor);
        const auto pairs = consecutive_pair_distances(srrs);
        for (const auto& pd : pairs) {
          try {
            check_pair_invariants(pd);
          } catch (const property_violation& e) {
            std::ostringstream dump;
            dump << context << ": " << e.what() << " [d_full=" << fmt17(pd.d_full)
                 << " d_prob=" << fmt17(pd.d_prob) << " d_conf=" << fmt17(pd.d_conf)
                 << " leak=" << fmt17(pd.leakage_alpha) << "/" << fmt17(pd.leakage_alpha1)
                 << " lower_slack=" << fmt17(pd.lower_slack)
                 << " upper_slack=" << fmt17(pd.upper_slack) << "]";
            throw property_violation(dump.str());
          }
        }

        GroupMeta meta;
        meta.n_sites = n;
        meta.two_m = cfg.two_m;
        meta.two_s = two_s;
        meta.parity = parity;
        meta.j1 = cfg.j1;
        meta.j2 = j2;
        meta.n_a = n_a;
        meta.group_size = groups[g].size();
        meta.window = w;
        for (std::size_t idx : indices) {
          meta.max_s2_residual = std::max(meta.max_s2_residual, spec.states[idx].s2_residual);
        }

        const WindowStats ws = window_statistics(srrs, pairs, meta, cfg.nsec_mode);
        if (auto msg = check_window_invariants(ws)) {
          throw property_violation(context + ": " + *msg);
        }
        res.rows.push_back(ws);
      }
    }
  }

  std::sort(res.rows.begin(), res.rows.end(), [](const WindowStats& a, const WindowStats& b) {
    if (a.meta.n_sites != b.meta.n_sites) return a.meta.n_sites < b.meta.n_sites;
    if (a.meta.j2 != b.meta.j2) return a.meta.j2 < b.meta.j2;
    if (a.meta.two_s != b.meta.two_s) return a.meta.two_s < b.meta.two_s;
    return parity_rank(a.meta.parity) < parity_rank(b.meta.parity);
  });
  return res;
}

std::string result_csv(const std::vector<WindowStats>& rows) {
  std::string out = kResultHeader;
  out += '\n';
  for (const auto& w : rows) {
    out += std::to_string(w.meta.n_sites) + ',' + fmt17(w.meta.j2) + ',' +
           std::to_string(w.meta.two_m) + ',' + std::to_string(w.meta.two_s) + ',' +
           parity_name(w.meta.parity) + ',' + std::to_string(w.meta.n_a) + ',' +
           std::to_string(w.meta.window.lo) + ',' + std::to_string(w.meta.window.hi) + ',' +
           std::to_string(w.n_states) + ',' + std::to_string(w.n_pairs) + ',' +
           std::to_string(w.n_sec) + ',' + fmt17(w.sum_var) + ',' + fmt17(w.avg_d_prob) +
           ',' + fmt17(w.avg_d_conf) + ',' + fmt17(w.avg_d_full) + ',' + fmt17(w.avg_gap) +
           ',' + fmt17(w.bound_rhs) + ',' + (w.bound_satisfied ? "1" : "0") + ',' +
           fmt17(w.avg_leakage) + ',' + fmt17(w.meta.max_s2_residual) + ",1\n";
  }
  return out;
}

ScanResult scan(const RunConfig& cfg) {
  AnalyzeResult ar = analyze(cfg);
  ScanResult out;
  for (const auto& s : ar.skipped) out.warnings.push_back("skipped " + s);

  // Group rows arrive sorted by (N, J2, two_s, parity); aggregate per (N, J2)
  // with the full group size as the weight.
  std::size_t i = 0;
  while (i < ar.rows.size()) {
    std::size_t j = i;
    ScanRow agg;
    agg.n = ar.rows[i].meta.n_sites;
    agg.j2 = ar.rows[i].meta.j2;
    agg.aggregate = true;
    while (j < ar.rows.size() && ar.rows[j].meta.n_sites == agg.n &&
           ar.rows[j].meta.j2 == agg.j2) {
      const auto& w = ar.rows[j];
      ScanRow row;
      row.n = agg.n;
      row.j2 = agg.j2;
      row.two_s = w.meta.two_s;
      row.parity = w.meta.parity;
      row.weight = static_cast<double>(w.meta.group_size);
      row.sum_var = w.sum_var;
      row.avg_d_prob = w.avg_d_prob;
      row.avg_gap = w.avg_gap;
      out.rows.push_back(row);
      agg.weight += row.weight;
      agg.sum_var += row.weight * row.sum_var;
      agg.avg_d_prob += row.weight * row.avg_d_prob;
      agg.avg_gap += row.weight * row.avg_gap;
      ++j;
    }
    agg.sum_var /= agg.weight;
    agg.avg_d_prob /= agg.weight;
    agg.avg_gap /= agg.weight;
    out.rows.push_back(agg);
    i = j;
  }

  // Trend warnings on the aggregates, per J2 over increasing N.
  std::map<double, std::vector<const ScanRow*>> by_j2;
  for (const auto& r : out.rows) {
    if (r.aggregate) by_j2[r.j2].push_back(&r);
  }
  for (auto& [j2, series] : by_j2) {
    std::sort(series.begin(), series.end(),
              [](const ScanRow* a, const ScanRow* b) { return a->n < b->n; });
    auto warn_trend = [&](const char* name, double ScanRow::* member) {
      for (std::size_t k = 1; k < series.size(); ++k) {
        if (!(series[k]->*member < series[k - 1]->*member)) {
          out.warnings.push_back(std::string(name) + " not strictly decreasing for J2=" +
                                 fmt_short(j2) + " between N=" +
                                 std::to_string(series[k - 1]->n) + " and N=" +
                                 std::to_string(series[k]->n));
        }
      }
    };
    warn_trend("sum_var", &ScanRow::sum_var);
    warn_trend("avg_gap", &ScanRow::avg_gap);
  }
  return out;
}

std::string scan_csv(const std::vector<ScanRow>& rows) {
  std::string out = kScanHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.n) + ',' + fmt17(r.j2) + ',';
    if (r.aggregate) {
      out += "aggregate,all,all,";
    } else {
      out += "group," + std::to_string(r.two_s) + ',' + parity_name(r.parity) + ',';
    }
    out += fmt17(r.weight) + ',' + fmt17(r.sum_var) + ',' + fmt17(r.avg_d_prob) + ',' +
           fmt17(r.avg_gap) + ",1\n";
  }
  return out;
}

std::vector<ScanRow> parse_scan_csv(const std::string& text) {
  std::vector<std::string> lines;
  {
    std::string cur;
    for (char c : text) {
      if (c == '\n') {
        if (!cur.empty() && cur.back() == '\r') cur.pop_back();
        lines.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) lines.push_back(cur);
  }
  if (lines.empty() || lines[0] != kScanHeader) {
    throw format_error("scan CSV: header mismatch");
  }
  std::vector<ScanRow> rows;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    const auto f = split_csv_line(lines[k]);
    if (f.size() != 10) {
      throw format_error("scan CSV: expected 10 fields on line " + std::to_string(k + 1));
    }
    if (f[9] != "1") throw format_error("scan CSV: unsupported schema version " + f[9]);
    ScanRow r;
    r.n = static_cast<int>(parse_long(f[0], "N"));
    r.j2 = parse_double(f[1], "J2");
    if (f[2] == "aggregate") {
      r.aggregate = true;
      if (f[3] != "all" || f[4] != "all") {
        throw format_error("scan CSV: aggregate rows must carry two_s=all, parity=all");
      }
    } else if (f[2] == "group") {
      r.two_s = static_cast<int>(parse_long(f[3], "two_s"));
      r.parity = parse_parity(f[4]);
    } else {
      throw format_error("scan CSV: unknown scope '" + f[2] + "'");
    }
    r.weight = parse_double(f[5], "weight");
    r.sum_var = parse_double(f[6], "sum_var");
    r.avg_d_prob = parse_double(f[7], "avg_d_prob");
    r.avg_gap = parse_double(f[8], "avg_gap");
    rows.push_back(r);
  }
  return rows;
}

std::vector<FitRow> fit_scan(const std::vector<ScanRow>& rows) {
  std::map<double, std::vector<const ScanRow*>> by_j2;
  for (const auto& r : rows) {
    if (r.aggregate) by_j2[r.j2].push_back(&r);
  }
  if (by_j2.empty()) throw argument_error("fit: scan holds no aggregate rows");

  static const std::pair<const char*, double ScanRow::*> quantities[] = {
      {"sum_var", &ScanRow::sum_var},
      {"avg_d_prob", &ScanRow::avg_d_prob},
      {"avg_gap", &ScanRow::avg_gap},
  };

  std::vector<FitRow> out;
  for (const auto& [j2, series] : by_j2) {
    for (const auto& [name, member] : quantities) {
      std::vector<ScalingPoint> points;
      for (const ScanRow* r : series) {
        points.push_back(ScalingPoint{static_cast<double>(r->n), r->*member});
      }
      const ModelComparison cmp = compare_models(points);
      FitRow fr;
      fr.j2 = j2;
      fr.quantity = name;
      fr.exponential = cmp.exponential;
      fr.powerlaw = cmp.powerlaw;
      fr.preferred = cmp.preferred;
      fr.delta_rss_log = cmp.delta_rss_log;
      out.push_back(std::move(fr));
    }
  }
  return out;
}

std::string fits_csv(const std::vector<FitRow>& rows) {
  std::string out = kFitsHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += fmt17(r.j2) + ',' + r.quantity + ',' + fmt17(r.exponential.a) + ',' +
           fmt17(r.exponential.b) + ',' + fmt17(r.exponential.r_squared) + ',' +
           fmt17(r.exponential.rss_log) + ',' + fmt17(r.powerlaw.a) + ',' +
           fmt17(r.powerlaw.b) + ',' + fmt17(r.powerlaw.r_squared) + ',' +
           fmt17(r.powerlaw.rss_log) + ',' + preference_name(r.preferred) + ',' +
           fmt17(r.delta_rss_log) + ',' + std::to_string(r.exponential.n_points) + ",1\n";
  }
  return out;
}

namespace {

struct FigureSpec {
  double ScanRow::* member;
  const char* quantity;
  const char* title;
};

FigureSpec figure_spec(const std::string& id) {
  if (id == "fig1a") {
    return {&ScanRow::sum_var, "sum_var", "Sum of sector-probability variances vs N"};
  }
  if (id == "fig1b") {
    return {&ScanRow::avg_d_prob, "avg_d_prob", "Window-averaged probability distance vs N"};
  }
  if (id == "fig2") {
    return {&ScanRow::avg_gap, "avg_gap", "Window-averaged D - D_conf vs N"};
  }
  throw argument_error("figure id must be fig1a, fig1b, or fig2 (got '" + id + "')");
}

std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_figure(const std::vector<ScanRow>& rows, const std::string& figure_id) {
  const FigureSpec fs = figure_spec(figure_id);

  std::map<double, std::vector<std::pair<int, double>>> series;
  for (const auto& r : rows) {
    if (!r.aggregate) continue;
    const double y = r.*(fs.member);
    if (y > 0.0) series[r.j2].emplace_back(r.n, y);
  }
  for (auto it = series.begin(); it != series.end();) {
    std::sort(it->second.begin(), it->second.end());
    it = it->second.empty() ? series.erase(it) : std::next(it);
  }
  if (series.empty()) {
    throw format_error("figure " + figure_id + ": no plottable aggregate rows");
  }

  int n_min = 1 << 30, n_max = -(1 << 30);
  double y_min = 1e300, y_max = -1e300;
  for (const auto& [j2, pts] : series) {
    for (const auto& [n, y] : pts) {
      n_min = std::min(n_min, n);
      n_max = std::max(n_max, n);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (n_min == n_max) {
    --n_min;
    ++n_max;
  }
  const double dec_lo = std::floor(std::log10(y_min));
  double dec_hi = std::ceil(std::log10(y_max));
  if (dec_hi <= dec_lo) dec_hi = dec_lo + 1.0;

  const double width = 720, height = 480;
  const double ml = 90, mr = 170, mt = 50, mb = 60;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto xpix = [&](double n) { return ml + (n - n_min) / double(n_max - n_min) * pw; };
  auto ypix = [&](double y) {
    return mt + (dec_hi - std::log10(y)) / (dec_hi - dec_lo) * ph;
  };

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << ml << "\" y=\"" << mt - 20
      << "\" font-family=\"sans-serif\" font-size=\"16\">" << fs.title << "</text>\n";

  for (double d = dec_lo; d <= dec_hi + 0.5; d += 1.0) {
    const double y = ypix(std::pow(10.0, d));
    svg << "<line x1=\"" << fmt_coord(ml) << "\" y1=\"" << fmt_coord(y) << "\" x2=\""
        << fmt_coord(ml + pw) << "\" y2=\"" << fmt_coord(y)
        << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt_coord(ml - 8) << "\" y=\"" << fmt_coord(y + 4)
        << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">1e"
        << static_cast<long>(d) << "</text>\n";
  }
  std::set<int> xticks;
  for (const auto& [j2, pts] : series) {
    for (const auto& [n, y] : pts) xticks.insert(n);
  }
  for (int n : xticks) {
    const double x = xpix(n);
    svg << "<line x1=\"" << fmt_coord(x) << "\" y1=\"" << fmt_coord(mt + ph) << "\" x2=\""
        << fmt_coord(x) << "\" y2=\"" << fmt_coord(mt + ph + 6)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << fmt_coord(x) << "\" y=\"" << fmt_coord(mt + ph + 22)
        << "\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">" << n
        << "</text>\n";
  }
  svg << "<line x1=\"" << fmt_coord(ml) << "\" y1=\"" << fmt_coord(mt) << "\" x2=\""
      << fmt_coord(ml) << "\" y2=\"" << fmt_coord(mt + ph)
      << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  svg << "<line x1=\"" << fmt_coord(ml) << "\" y1=\"" << fmt_coord(mt + ph) << "\" x2=\""
      << fmt_coord(ml + pw) << "\" y2=\"" << fmt_coord(mt + ph)
      << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  svg << "<text x=\"" << fmt_coord(ml + pw / 2) << "\" y=\"" << fmt_coord(height - 14)
      << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">N</text>\n";
  svg << "<text x=\"20\" y=\"" << fmt_coord(mt + ph / 2)
      << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 20 "
      << fmt_coord(mt + ph / 2) << ")\">" << fs.quantity << "</text>\n";

  std::size_t ci = 0;
  for (const auto& [j2, pts] : series) {
    const char* color = kPalette[ci % (sizeof kPalette / sizeof kPalette[0])];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [n, y] : pts) {
      svg << fmt_coord(xpix(n)) << ',' << fmt_coord(ypix(y)) << ' ';
    }
    svg << "\"/>\n";
    for (const auto& [n, y] : pts) {
      svg << "<circle cx=\"" << fmt_coord(xpix(n)) << "\" cy=\"" << fmt_coord(ypix(y))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = mt + 10 + 22 * static_cast<double>(ci);
    svg << "<line x1=\"" << fmt_coord(ml + pw + 12) << "\" y1=\"" << fmt_coord(ly)
        << "\" x2=\"" << fmt_coord(ml + pw + 40) << "\" y2=\"" << fmt_coord(ly)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fmt_coord(ml + pw + 46) << "\" y=\"" << fmt_coord(ly + 4)
        << "\" font-family=\"monospace\" font-size=\"12\">J2=" << fmt_short(j2)
        << "</text>\n";
    ++ci;
  }
  svg << "</svg>\n";
  return svg.str();
}

VerifyReport run_verify(int max_n) {
  if (max_n < 2 || max_n > 8) {
    throw argument_error("verify: max_n out of range [2,8]");
  }
  VerifyReport rep;
  auto add = [&rep](bool ok, const std::string& line) {
    rep.lines.push_back(std::string(ok ? "ok   " : "FAIL ") + line);
    rep.ok = rep.ok && ok;
  };

  {
    const int cap = std::min(max_n, 6);
    double worst = 0.0;
    for (int n = 2; n <= cap; ++n) {
      for (int n_a = 1; n_a < n; ++n_a) {
        worst = std::max(worst, projector_invariance_check(n, n_a));
      }
    }
    add(worst <= 1e-12, "projector invariance (n <= " + std::to_string(cap) +
                            "): max commutator " + fmt_short(worst));
  }

  {
    double worst = 0.0;
    std::size_t compared = 0, skipped = 0;
    for (int n = 2; n <= max_n; ++n) {
      for (int n_a = 1; n_a < n && n_a <= 12; ++n_a) {
        for (double j2 : {0.0, 0.5}) {
          const MIndependenceReport r = m_independence_check(n, 1.0, j2, n_a);
          worst = std::max(worst, r.max_discrepancy);
          compared += r.compared;
          skipped += r.skipped;
        }
      }
    }
    add(worst <= 1e-10, "magnetization independence of sector probabilities (n <= " +
                            std::to_string(max_n) + "): max deviation " + fmt_short(worst) +
                            " over " + std::to_string(compared) + " states (" +
                            std::to_string(skipped) + " ambiguous skipped)");
  }

  {
    const int cap = std::min(max_n, 6);
    bruteforce::OracleReport total;
    for (int n = 2; n <= cap; ++n) {
      for (int n_a = 1; n_a < n; ++n_a) {
        for (double j2 : {0.0, 0.5}) {
          const auto r = bruteforce::compare_pipeline_to_oracle(n, 1.0, j2, n_a);
          total.max_spectrum_dev = std::max(total.max_spectrum_dev, r.max_spectrum_dev);
          total.max_rho_dev = std::max(total.max_rho_dev, r.max_rho_dev);
          total.max_probability_dev =
              std::max(total.max_probability_dev, r.max_probability_dev);
          total.max_leakage_dev = std::max(total.max_leakage_dev, r.max_leakage_dev);
          total.max_distance_dev = std::max(total.max_distance_dev, r.max_distance_dev);
          total.states_checked += r.states_checked;
          total.pairs_checked += r.pairs_checked;
        }
      }
    }
    const double worst =
        std::max({total.max_spectrum_dev, total.max_rho_dev, total.max_probability_dev,
                  total.max_leakage_dev, total.max_distance_dev});
    add(worst <= 1e-10,
        "full-space oracle (n <= " + std::to_string(cap) + "): spectra " +
            fmt_short(total.max_spectrum_dev) + ", rho " + fmt_short(total.max_rho_dev) +
            ", P " + fmt_short(total.max_probability_dev) + ", leakage " +
            fmt_short(total.max_leakage_dev) + ", distances " +
            fmt_short(total.max_distance_dev) + " over " +
            std::to_string(total.states_checked) + " states / " +
            std::to_string(total.pairs_checked) + " pairs");
  }

  {
    double max_deficit = 0.0, max_singlet_leak = 0.0, max_forbidden_p = 0.0;
    std::size_t checked = 0;
    for (int n = 2; n <= max_n; ++n) {
      std::vector<int> subsystems;
      if (n <= 6) {
        for (int n_a = 1; n_a < n; ++n_a) subsystems.push_back(n_a);
      } else {
        subsystems.push_back(n / 2);
      }
      for (double j2 : {0.0, 0.5}) {
        for (int two_m = n % 2; two_m <= n; two_m += 2) {
          const SectorSpectrum spec = solve_sector(n, two_m, 1.0, j2);
          const SectorBasis basis = enumerate_sector(n, two_m);
          for (int n_a : subsystems) {
            const SpinAdaptedBasisA& basisA = spin_adapted_basis(n_a);
            for (const auto& st : spec.states) {
              const SymmetryResolvedRDM srr =
                  resolve(reduced_density_matrix(st.vector, basis, n_a), basisA);
              max_deficit = std::max(max_deficit, srr.trace_deficit);
              if (st.two_s == 0) {
                max_singlet_leak = std::max(max_singlet_leak, srr.leakage);
              }
              for (const auto& [two_s_a, p] : srr.probability) {
                if (std::abs(st.two_s - two_s_a) > n - n_a) {
                  max_forbidden_p = std::max(max_forbidden_p, std::abs(p));
                }
              }
              ++checked;
            }
          }
        }
      }
    }
    add(max_deficit <= 1e-10, "sector probabilities sum to one: max deficit " +
                                  fmt_short(max_deficit) + " over " +
                                  std::to_string(checked) + " resolutions");
    add(max_singlet_leak <= 1e-10,
        "leakage vanishes for singlet eigenstates: max " + fmt_short(max_singlet_leak));
    add(max_forbidden_p <= 1e-12, "triangle-forbidden sectors carry no weight: max " +
                                      fmt_short(max_forbidden_p));
  }

  {
    RunConfig cfg;
    cfg.sizes.clear();
    for (int n = 4; n <= max_n; n += 2) cfg.sizes.push_back(n);
    cfg.use_cache = false;
    if (cfg.sizes.empty()) {
      add(true, "inequality sweep: no even sizes >= 4 below the limit, skipped");
    } else {
      try {
        const AnalyzeResult ar = analyze(cfg);
        std::size_t pairs = 0;
        for (const auto& w : ar.rows) pairs += w.n_pairs;
        add(true, "pair and window inequalities (even n <= " + std::to_string(max_n) +
                      ", J2 in {0, 0.4, 0.8}): " + std::to_string(ar.rows.size()) +
                      " windows, " + std::to_string(pairs) + " pairs, " +
                      std::to_string(ar.skipped.size()) + " groups without usable window");
      } catch (const property_violation& e) {
        add(false, std::string("inequality sweep: ") + e.what());
      }
    }
  }

  return rep;
}

}  // namespace su2td
