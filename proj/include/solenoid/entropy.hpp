#pragma once

// Base-b Shannon entropy of b-adic coarsenings, the entropy-slope dimension
// estimator, entropy porosity and convolution entropy growth.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "solenoid/common.hpp"
#include "solenoid/measure.hpp"

namespace solenoid {

/// H(mu, L_level) = - sum mu(Q) log_b mu(Q) over level-`level` cells; 0 log 0 = 0.
inline double entropy(const DiscreteMeasure& mu, int level) {
  const DiscreteMeasure m = mu.coarsen(level);
  double h = 0.0;
  for (const auto& [idx, w] : m.entries())
    if (w > 0.0) h -= w * log_base(w, mu.base());
  return h;
}

/// H(mu, L_fine | L_coarse) = H(mu, L_fine) - H(mu, L_coarse).
inline double cond_entropy(const DiscreteMeasure& mu, int fine_level, int coarse_level) {
  require(fine_level >= coarse_level, "cond_entropy: fine level must not be coarser");
  if (fine_level == coarse_level) return 0.0;
  return entropy(mu, fine_level) - entropy(mu, coarse_level);
}

struct EntropyProfile {
  std::vector<int> levels;
  std::vector<double> entropies;
  /// Least-squares slope of entropy against level: the dimension estimate.
  double slope = 0.0;
  double intercept = 0.0;
  std::pair<int, int> slope_window{0, 0};
  std::vector<double> residuals;
  /// H(n+1) - H(n) for consecutive levels in the window.
  std::vector<double> increments;
};

namespace detail {

inline EntropyProfile fit_profile(std::vector<int> levels, std::vector<double> entropies) {
  EntropyProfile prof;
  std::vector<double> xs(levels.begin(), levels.end());
  const LinearFit fit = least_squares(xs, entropies);
  prof.slope = fit.slope;
  prof.intercept = fit.intercept;
  prof.residuals = fit.residuals;
  prof.slope_window = {levels.front(), levels.back()};
  for (std::size_t i = 1; i < levels.size(); ++i)
    prof.increments.push_back((entropies[i] - entropies[i - 1]) / (levels[i] - levels[i - 1]));
  prof.levels = std::move(levels);
  prof.entropies = std::move(entropies);
  return prof;
}

inline void check_levels(std::span<const int> levels) {
  require(levels.size() >= 3, "dimension_estimate: need at least 3 levels");
  for (std::size_t i = 1; i < levels.size(); ++i)
    require(levels[i] > levels[i - 1], "dimension_estimate: levels must be strictly increasing");
}

}  // namespace detail

/// Entropy slope over `levels`, calling `builder(level)` for each level.
template <class Builder>
  requires std::invocable<Builder&, int>
EntropyProfile dimension_estimate(Builder&& builder, std::span<const int> levels) {
  detail::check_levels(levels);
  std::vector<double> hs;
  for (int n : levels) hs.push_back(entropy(builder(n), n));
  return detail::fit_profile(std::vector<int>(levels.begin(), levels.end()), std::move(hs));
}

/// Entropy slope of one measure, coarsened to each level.
inline EntropyProfile dimension_estimate(const DiscreteMeasure& mu, std::span<const int> levels) {
  detail::check_levels(levels);
  require(levels.back() <= mu.level(), "dimension_estimate: measure not resolved to the finest level");
  std::vector<double> hs;
  for (int n : levels) hs.push_back(entropy(mu, n));
  return detail::fit_profile(std::vector<int>(levels.begin(), levels.end()), std::move(hs));
}

inline std::vector<int> level_range(int first, int last) {
  std::vector<int> v;
  for (int n = first; n <= last; ++n) v.push_back(n);
  return v;
}

// ---------------------------------------------------------------------------
// Entropy porosity

struct PorosityReport {
  double h = 0.0;
  double delta = 0.0;
  int m = 0;
  int n1 = 0;
  int n2 = 0;
  /// Mass-weighted share of level-i components (i in [n1, n2], averaged over i)
  /// whose normalised entropy (1/m) H(mu_{x,i}, L_{i+m}) lies below h + delta.
  double fraction = 0.0;
  bool verdict = false;
};

/// Per component at `level`: (mass, H(component, L_{level+m})).
inline std::vector<std::pair<double, double>> component_entropies(const DiscreteMeasure& mu, int level, int m) {
  require(level >= 0 && m >= 0 && level + m <= mu.level(), "component_entropies: insufficient resolution");
  const DiscreteMeasure fine = mu.coarsen(level + m);
  const std::int64_t f = checked_pow(mu.base(), m);
  std::vector<std::pair<double, double>> out;
  auto cells = fine.entries();
  for (std::size_t i = 0; i < cells.size();) {
    const std::int64_t parent = floor_div(cells[i].first, f);
    std::size_t j = i;
    double mass = 0.0;
    while (j < cells.size() && floor_div(cells[j].first, f) == parent) mass += cells[j++].second;
    double h = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      const double q = cells[k].second / mass;
      if (q > 0.0) h -= q * log_base(q, mu.base());
    }
    out.emplace_back(mass, h);
    i = j;
  }
  return out;
}

inline PorosityReport porosity_fraction(const DiscreteMeasure& mu, double h, double delta, int m, int n1, int n2) {
  require(m >= 1 && n1 >= 0 && n2 >= n1, "porosity_fraction: need m >= 1 and 0 <= n1 <= n2");
  require(n2 + m <= mu.level(), "porosity_fraction: measure not resolved to level n2 + m");
  PorosityReport r{h, delta, m, n1, n2, 0.0, false};
  double acc = 0.0;
  for (int i = n1; i <= n2; ++i) {
    double level_share = 0.0;
    for (const auto& [mass, hc] : component_entropies(mu, i, m))
      if (hc / m < h + delta) level_share += mass;
    acc += level_share;
  }
  r.fraction = std::clamp(acc / (n2 - n1 + 1), 0.0, 1.0);
  r.verdict = r.fraction > 1.0 - delta;
  return r;
}

// ---------------------------------------------------------------------------
// Entropy growth under convolution

struct GrowthRecord {
  double H_tau = 0.0;
  double H_theta = 0.0;
  double H_conv = 0.0;
  /// (1/k) (H(theta * tau, L_{n+k}) - H(tau, L_{n+k})).
  double gain = 0.0;
};

inline GrowthRecord entropy_growth_experiment(const DiscreteMeasure& theta, const DiscreteMeasure& tau, int n, int k) {
  require(k >= 1 && n >= 0, "entropy_growth_experiment: need k >= 1");
  require(theta.base() == tau.base(), "entropy_growth_experiment: bases differ");
  const int out = n + k;
  require(theta.level() >= out && tau.level() >= out, "entropy_growth_experiment: measures not resolved to n + k");
  const double limit = dpow(tau.base(), -n) * (1.0 + 1e-12);
  require(theta.support_diameter() <= limit && tau.support_diameter() <= limit,
          "entropy_growth_experiment: support diameter exceeds b^-n");
  GrowthRecord g;
  g.H_tau = entropy(tau, out);
  g.H_theta = entropy(theta, out);
  g.H_conv = entropy(convolve(theta, tau, out), out);
  g.gain = (g.H_conv - g.H_tau) / k;
  return g;
}

}  // namespace solenoid
