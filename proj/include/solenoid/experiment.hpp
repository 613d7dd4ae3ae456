#pragma once

// Run configuration and experiment dispatch. A run produces a JSON summary and
// a set of named output files (CSV tables, PGM rasters).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "solenoid/attractor.hpp"
#include "solenoid/common.hpp"
#include "solenoid/entropy.hpp"
#include "solenoid/io.hpp"
#include "solenoid/measure.hpp"
#include "solenoid/partitions.hpp"
#include "solenoid/periodic.hpp"
#include "solenoid/separation.hpp"
#include "solenoid/symbolic.hpp"

namespace solenoid {

inline constexpr const char* kVersion = "0.1.0";

struct Budgets {
  std::int64_t samples = 1'000'000;
  std::int64_t orbit_points = 10'000'000;
  std::int64_t scan = kScanBudget;
  std::int64_t words = kWordBudget;
  std::int64_t exact = kExactEnumerationBudget;

  friend bool operator==(const Budgets&, const Budgets&) = default;
};

struct RunConfig {
  int b = 2;
  double gamma = 0.4;
  PeriodicFn phi = PeriodicFn::cosine();
  /// Set when phi was given as cohomological_phi(psi, b, gamma).
  std::optional<PeriodicFn> psi;
  double truncation_tol = 1e-10;
  std::uint64_t seed = 1;
  Budgets budgets;
  std::string output_dir = "out";
  std::vector<std::string> experiments;
  /// Per-experiment settings, keyed by experiment name.
  json options = json::object();

  SystemParams params() const { return SystemParams(b, gamma, phi, truncation_tol); }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"dim-estimate", "separation-scan",     "dichotomy-check", "porosity",
                                              "theta-entropy", "decomposition-check", "render",          "weierstrass"};
  return names;
}

inline void validate(const RunConfig& c) {
  const auto& names = experiment_names();
  for (const auto& e : c.experiments)
    require(std::find(names.begin(), names.end(), e) != names.end(), "unknown experiment '" + e + "'");
  require(c.budgets.samples > 0 && c.budgets.orbit_points > 0 && c.budgets.scan > 0 && c.budgets.words > 0 &&
              c.budgets.exact > 0,
          "all budgets must be positive");
  require(c.options.is_object(), "options must be an object");
  (void)c.params();
}

inline json to_json(const RunConfig& c) {
  json j;
  j["b"] = c.b;
  j["gamma"] = c.gamma;
  if (c.psi) j["phi"] = {{"cohomological", phi_to_json(*c.psi)}};
  else j["phi"] = phi_to_json(c.phi);
  j["truncation_tol"] = c.truncation_tol;
  j["seed"] = c.seed;
  j["budgets"] = {{"samples", c.budgets.samples},
                  {"orbit_points", c.budgets.orbit_points},
                  {"scan", c.budgets.scan},
                  {"words", c.budgets.words},
                  {"exact", c.budgets.exact}};
  j["output_dir"] = c.output_dir;
  j["experiments"] = c.experiments;
  j["options"] = c.options;
  return j;
}

inline RunConfig config_from_json(const json& j) {
  require(j.is_object(), "config: expected an object");
  RunConfig c;
  try {
    c.b = j.value("b", c.b);
    c.gamma = j.value("gamma", c.gamma);
    c.truncation_tol = j.value("truncation_tol", c.truncation_tol);
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("experiments")) c.experiments = j.at("experiments").get<std::vector<std::string>>();
    if (j.contains("options")) c.options = j.at("options");
    if (j.contains("budgets")) {
      const auto& bj = j.at("budgets");
      require(bj.is_object(), "config: budgets must be an object");
      c.budgets.samples = bj.value("samples", c.budgets.samples);
      c.budgets.orbit_points = bj.value("orbit_points", c.budgets.orbit_points);
      c.budgets.scan = bj.value("scan", c.budgets.scan);
      c.budgets.words = bj.value("words", c.budgets.words);
      c.budgets.exact = bj.value("exact", c.budgets.exact);
    }
  } catch (const json::exception& e) {
    throw rejected_input(std::string("config: ") + e.what());
  }
  require(c.b >= 2 && c.b <= Word::kMaxBase, "config: b must be in [2, 36]");
  require(c.gamma > 0.0 && c.gamma < 1.0, "config: gamma must lie in (0,1)");
  if (j.contains("phi")) {
    const auto& pj = j.at("phi");
    if (pj.is_object()) {
      require(pj.contains("cohomological"), "config: phi object must hold 'cohomological'");
      c.psi = phi_from_json(pj.at("cohomological"));
      c.phi = cohomological_phi(*c.psi, c.b, c.gamma);
    } else {
      c.phi = phi_from_json(pj);
    }
  }
  validate(c);
  return c;
}

struct RunReport {
  json summary;
  /// File name (relative to the output directory) and content.
  std::vector<std::pair<std::string, std::string>> files;
};

namespace detail {

inline json opts(const RunConfig& c, const std::string& name) {
  return c.options.contains(name) ? c.options.at(name) : json::object();
}

template <class T>
T opt(const json& o, const char* key, T def) {
  try {
    return o.value(key, def);
  } catch (const json::exception& e) {
    throw rejected_input(std::string("option '") + key + "': " + e.what());
  }
}

inline json run_dim_estimate(const RunConfig& c, const SystemParams& p, RunReport& rep) {
  const auto o = opts(c, "dim-estimate");
  const double x = opt(o, "x", 0.3);
  const int first = opt(o, "first_level", 8);
  const int last = std::min(opt(o, "last_level", 16), max_level(c.b));
  const auto levels = level_range(first, last);
  const auto mu = build_mx_empirical(p, x, last, static_cast<std::size_t>(c.budgets.samples), c.seed,
                                     opt(o, "threads", 1u));
  const auto prof = dimension_estimate(mu, levels);
  const double ln_b = std::log(static_cast<double>(c.b));
  std::vector<double> nats;
  CsvWriter w({"level", "entropy", "entropy_nats"});
  for (std::size_t i = 0; i < prof.levels.size(); ++i) {
    nats.push_back(prof.entropies[i] * ln_b);
    w.row({std::to_string(prof.levels[i]), fmt(prof.entropies[i]), fmt(nats.back())});
  }
  rep.files.emplace_back("dim_estimate.csv", w.str());
  const double pred = predicted_dimension(c.b, c.gamma);
  return {{"x", x},
          {"samples", c.budgets.samples},
          {"levels", prof.levels},
          {"entropies", prof.entropies},
          {"entropies_nats", nats},
          {"slope", prof.slope},
          {"intercept", prof.intercept},
          {"residuals", prof.residuals},
          {"predicted_dimension", pred},
          {"predicted_fibre_dimension", pred - 1.0}};
}

inline json run_separation_scan(const RunConfig& c, const SystemParams& p, RunReport& rep) {
  const auto o = opts(c, "separation-scan");
  const int x_count = opt(o, "x_count", 20);
  const int ell = opt(o, "ell", 4);
  const auto ns = level_range(opt(o, "n_first", 8), opt(o, "n_last", 18));
  double eps = opt(o, "epsilon", 0.0);
  require(x_count >= 1, "separation-scan: x_count must be positive");
  DigitSource src(c.b, c.seed);
  std::vector<double> xs;
  for (int i = 0; i < x_count; ++i) xs.push_back(src.uniform());
  std::vector<SeparationScan> scans;
  // Gaps do not depend on epsilon; scan once and judge afterwards.
  for (double x : xs) scans.push_back(exp_separation_scan(p, x, ell, 1e-300, ns, c.budgets.scan, c.seed));
  std::vector<double> crit;
  for (const auto& s : scans) crit.push_back(critical_epsilon(s));
  const double lo = *std::min_element(crit.begin(), crit.end());
  const double hi = *std::max_element(crit.begin(), crit.end());
  double mean = 0.0;
  for (double e : crit) mean += e / crit.size();
  if (eps <= 0.0) eps = 0.9 * lo;
  CsvWriter w({"x", "n", "n_hat", "min_gap", "threshold", "passed"});
  bool all_pass = true;
  bool sampled = false;
  for (const auto& s : scans) {
    sampled = sampled || s.sampled;
    for (std::size_t i = 0; i < s.n_values.size(); ++i) {
      const double thr = std::pow(eps, s.nhat_values[i]);
      const bool ok = s.min_gaps[i] > thr;
      all_pass = all_pass && ok;
      w.row({fmt(s.x), std::to_string(s.n_values[i]), std::to_string(s.nhat_values[i]), fmt(s.min_gaps[i]), fmt(thr),
             ok ? "1" : "0"});
    }
  }
  rep.files.emplace_back("separation_scan.csv", w.str());
  return {{"ell", ell},          {"n_values", ns},    {"epsilon", eps},        {"all_pass", all_pass},
          {"critical_epsilon", crit}, {"critical_min", lo}, {"critical_max", hi}, {"critical_mean", mean},
          {"relative_spread", (hi - lo) / mean}, {"sampled", sampled}};
}

inline json verdict_json(const DichotomyVerdict& v) {
  return {{"verdict", to_string(v.verdict)},   {"sup_gap", v.sup_gap},
          {"error_budget", v.error_budget},    {"degeneracy_bound", v.degeneracy_bound},
          {"witness_x", v.witness_x},          {"witness_i", v.witness_i.str()},
          {"witness_j", v.witness_j.str()},    {"grid_size", v.grid_size},
          {"word_depth", v.word_depth}};
}

inline json run_dichotomy(const RunConfig& c, const SystemParams& p, RunReport&) {
  const auto o = opts(c, "dichotomy-check");
  return verdict_json(condition_H_scan(p, opt(o, "grid", 128), opt(o, "depth", 10), c.budgets.scan));
}

inline json run_porosity(const RunConfig& c, const SystemParams& p, RunReport& rep) {
  const auto o = opts(c, "porosity");
  const double x = opt(o, "x", 0.3);
  const int m = opt(o, "m", 4), n1 = opt(o, "n1", 2), n2 = opt(o, "n2", 8);
  const double h = opt(o, "h", 0.8), delta = opt(o, "delta", 0.1);
  require(n2 + m <= max_level(c.b), "porosity: n2 + m too deep");
  const auto mu = build_mx_empirical(p, x, n2 + m, static_cast<std::size_t>(c.budgets.samples), c.seed);
  const auto r = porosity_fraction(mu, h, delta, m, n1, n2);
  CsvWriter w({"level", "component_mass", "normalised_entropy"});
  for (int i = n1; i <= n2; ++i)
    for (const auto& [mass, hc] : component_entropies(mu, i, m)) w.row({std::to_string(i), fmt(mass), fmt(hc / m)});
  rep.files.emplace_back("porosity.csv", w.str());
  return {{"x", x}, {"h", h}, {"delta", delta}, {"m", m}, {"n1", n1}, {"n2", n2}, {"fraction", r.fraction},
          {"verdict", r.verdict}};
}

inline json run_theta_entropy(const RunConfig& c, const SystemParams& p, RunReport& rep) {
  const auto o = opts(c, "theta-entropy");
  const auto t_list = opt(o, "t_list", std::vector<int>{1, 2});
  const int grid = opt(o, "grid", 1024);
  const double x0 = opt(o, "x0", 0.3);
  const auto ns = opt(o, "n_list", std::vector<int>{12, 14, 16, 18, 20});
  double C = opt(o, "C", 0.0);
  const auto search = transversality_search(p, t_list, grid, x0);
  json out{{"t_list", t_list}, {"grid", grid}, {"best_bound", search.best_bound}};
  if (!search.certificate) {
    out["certificate"] = nullptr;
    return out;
  }
  const auto& cert = *search.certificate;
  const auto check = validate_certificate(p, cert);
  if (C <= 0.0) C = scan_derived_C(exp_separation_scan(p, x0, cert.t, 1e-300, ns, c.budgets.scan, c.seed), c.b);
  const auto rows = theta_entropy_table(p, cert, ns, C, c.budgets.words);
  CsvWriter w({"n", "n_hat", "words", "fine_level", "coarse_entropy", "fine_entropy", "coarse", "fine",
               "fine_separated", "fine_level_capped"});
  for (const auto& r : rows)
    w.row({std::to_string(r.n), std::to_string(r.n_hat), std::to_string(r.words), std::to_string(r.fine_level),
           fmt(r.coarse_entropy), fmt(r.fine_entropy), fmt(r.coarse), fmt(r.fine), r.fine_separated ? "1" : "0",
           r.fine_level_capped ? "1" : "0"});
  rep.files.emplace_back("theta_entropy.csv", w.str());
  out["certificate"] = certificate_to_json(cert);
  out["certificate_valid"] = check.valid;
  out["C"] = C;
  out["limit_fine"] = std::log(static_cast<double>(c.b)) / std::log(1.0 / c.gamma);
  json fine = json::array(), coarse = json::array();
  for (const auto& r : rows) {
    fine.push_back(r.fine);
    coarse.push_back(r.coarse);
  }
  out["fine"] = fine;
  out["coarse"] = coarse;
  return out;
}

inline json run_decomposition(const RunConfig& c, const SystemParams& p, RunReport&) {
  const auto o = opts(c, "decomposition-check");
  const int t = opt(o, "t", 1), n = opt(o, "n", 8), i_level = opt(o, "i_level", 8), level = opt(o, "level", 6);
  const int tails = opt(o, "tail_samples", 2);
  const double x0 = opt(o, "x0", 0.3);
  const auto r = decomposition_check(p, t, x0, n, i_level, level, tails, c.seed, opt(o, "budget", std::int64_t{1} << 16));
  return {{"t", t},         {"n", n},         {"i_level", i_level},           {"level", level},
          {"tail_samples", tails}, {"n_hat", r.n_hat}, {"depth", r.depth}, {"residual", r.residual},
          {"certified_bound", r.certified_bound}};
}

inline json run_render(const RunConfig& c, const SystemParams& p, RunReport& rep) {
  const auto o = opts(c, "render");
  const int level = opt(o, "level", c.b == 2 ? 10 : 6);
  const auto grid = render_attractor(p, level, static_cast<long>(c.budgets.orbit_points), c.seed);
  rep.files.emplace_back("attractor.pgm", to_pgm(grid));
  json out{{"level", level}, {"width", grid.width}, {"height", grid.height}, {"y_lo", grid.y_lo()},
           {"y_hi", grid.y_hi()}, {"occupied", grid.occupied()}, {"points", c.budgets.orbit_points},
           {"predicted_dimension", predicted_dimension(c.b, c.gamma)}};
  const int first = opt(o, "first_box_level", std::max(1, level - 6));
  if (level - first >= 2) {
    const auto levels = level_range(first, level);
    const auto bc = box_count_dimension(grid, levels);
    CsvWriter w({"level", "boxes"});
    for (std::size_t i = 0; i < bc.levels.size(); ++i) w.row({std::to_string(bc.levels[i]), std::to_string(bc.counts[i])});
    rep.files.emplace_back("attractor_boxes.csv", w.str());
    out["box_count"] = box_count_to_json(bc);
  }
  return out;
}

inline json run_weierstrass(const RunConfig& c, const SystemParams&, RunReport& rep) {
  const auto o = opts(c, "weierstrass");
  const double lambda = opt(o, "lambda", 0.5);
  const int wb = opt(o, "b", 3);
  const int level = opt(o, "level", 10);
  const PeriodicFn psi = o.contains("psi") ? phi_from_json(o.at("psi")) : PeriodicFn::cosine();
  const auto g = weierstrass_graph(psi, lambda, wb, level, opt(o, "oversample", 16));
  const auto bc = graph_box_count(g, level_range(opt(o, "first_box_level", 4), level));
  CsvWriter w({"level", "boxes"});
  for (std::size_t i = 0; i < bc.levels.size(); ++i) w.row({std::to_string(bc.levels[i]), std::to_string(bc.counts[i])});
  rep.files.emplace_back("weierstrass_boxes.csv", w.str());
  return {{"lambda", lambda}, {"b", wb}, {"terms", g.terms}, {"predicted_dimension", g.predicted_dimension},
          {"box_count", box_count_to_json(bc)}};
}

}  // namespace detail

/// Runs every experiment in `c.experiments` in order. Nothing touches the file
/// system; see write_report.
inline RunReport run_experiment(const RunConfig& c) {
  validate(c);
  const SystemParams p = c.params();
  using Runner = json (*)(const RunConfig&, const SystemParams&, RunReport&);
  static const std::map<std::string, Runner> runners{
      {"dim-estimate", detail::run_dim_estimate},     {"separation-scan", detail::run_separation_scan},
      {"dichotomy-check", detail::run_dichotomy},     {"porosity", detail::run_porosity},
      {"theta-entropy", detail::run_theta_entropy},   {"decomposition-check", detail::run_decomposition},
      {"render", detail::run_render},                 {"weierstrass", detail::run_weierstrass}};
  RunReport rep;
  rep.summary["version"] = kVersion;
  rep.summary["config"] = to_json(c);
  rep.summary["experiments"] = json::object();
  for (const auto& name : c.experiments) {
    json r = runners.at(name)(c, p, rep);
    r["seed"] = c.seed;
    rep.summary["experiments"][name] = std::move(r);
  }
  return rep;
}

/// Writes summary.json and every report file under `dir`, each atomically.
inline void write_report(const RunReport& rep, const std::filesystem::path& dir) {
  for (const auto& [name, content] : rep.files) write_file_atomic(dir / name, content);
  write_file_atomic(dir / "summary.json", rep.summary.dump(2) + "\n");
}

}  // namespace solenoid
