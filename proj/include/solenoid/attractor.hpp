#pragma once

// Attractor rasters, b-adic box counting and the Weierstrass-graph bridge.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "solenoid/common.hpp"
#include "solenoid/periodic.hpp"
#include "solenoid/symbolic.hpp"

namespace solenoid {

/// min(2, 1 + ln b / ln(1/gamma)).
inline double predicted_dimension(int b, double gamma) {
  require(b >= 2, "predicted_dimension: b must be >= 2");
  require(gamma > 0.0 && gamma < 1.0, "predicted_dimension: gamma must lie in (0,1)");
  return std::min(2.0, 1.0 + std::log(static_cast<double>(b)) / std::log(1.0 / gamma));
}

/// 2 + ln lambda / ln b.
inline double weierstrass_predicted_dimension(double lambda, int b) {
  require(b >= 2, "weierstrass: b must be >= 2");
  require(lambda > 1.0 / b && lambda < 1.0, "weierstrass: lambda must lie in (1/b, 1)");
  return 2.0 + std::log(lambda) / std::log(static_cast<double>(b));
}

struct BoxCountResult {
  std::vector<int> levels;
  std::vector<std::int64_t> counts;
  /// Least-squares slope of log_b(count) against level.
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;
};

namespace detail {

inline BoxCountResult fit_box_counts(std::vector<int> levels, std::vector<std::int64_t> counts, int b) {
  BoxCountResult r;
  std::vector<double> xs(levels.begin(), levels.end()), ys;
  for (auto c : counts) ys.push_back(log_base(static_cast<double>(c), b));
  const LinearFit fit = least_squares(xs, ys);
  r.slope = fit.slope;
  r.intercept = fit.intercept;
  r.residuals = fit.residuals;
  r.levels = std::move(levels);
  r.counts = std::move(counts);
  return r;
}

inline void check_box_levels(std::span<const int> levels, int finest) {
  require(levels.size() >= 3, "box_count_dimension: need at least 3 levels");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    require(levels[i] >= 0 && levels[i] <= finest, "box_count_dimension: level outside the available range");
    if (i > 0) require(levels[i] > levels[i - 1], "box_count_dimension: levels must be strictly increasing");
  }
}

// Distinct (ix, iy) cells at each requested level, from the distinct cells of the finest level.
inline std::vector<std::int64_t> count_coarsened(std::vector<std::pair<std::int64_t, std::int64_t>> cells, int b,
                                                 int finest, std::span<const int> levels) {
  std::vector<std::int64_t> counts(levels.size(), 0);
  int current = finest;
  for (std::size_t k = levels.size(); k-- > 0;) {
    const std::int64_t f = checked_pow(b, current - levels[k]);
    for (auto& c : cells) c = {floor_div(c.first, f), floor_div(c.second, f)};
    current = levels[k];
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    counts[k] = static_cast<std::int64_t>(cells.size());
  }
  return counts;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Raster

/// Occupancy counts on a b-adic aligned grid: pixel (i, j) is the level-`level`
/// box [i, i+1) x [row0 + j, row0 + j + 1) scaled by b^-level.
struct RasterGrid {
  int base = 2;
  int level = 0;
  int width = 0;
  int height = 0;
  std::int64_t row0 = 0;
  std::vector<std::uint32_t> counts;

  double y_lo() const { return static_cast<double>(row0) * dpow(base, -level); }
  double y_hi() const { return static_cast<double>(row0 + height) * dpow(base, -level); }
  std::uint32_t at(int i, int j) const { return counts[static_cast<std::size_t>(j) * width + i]; }

  std::int64_t occupied() const {
    return std::count_if(counts.begin(), counts.end(), [](std::uint32_t c) { return c > 0; });
  }
};

inline constexpr std::int64_t kRasterPixelBudget = std::int64_t{1} << 28;

/// Orbit occupancy of T over [0,1) x [-M, M], M = sup|phi| / (1 - gamma), at
/// resolution b^-level; the orbit starts at (seeded x, 0).
inline RasterGrid render_attractor(const SystemParams& p, int level, long n_points, std::uint64_t seed,
                                   long burn_in = 200) {
  require(level >= 1 && n_points >= 1 && burn_in >= 0, "render_attractor: budgets must be positive");
  const int b = p.b();
  const std::int64_t w = checked_pow(b, level, kRasterPixelBudget);
  require(w > 0, "render_attractor: resolution exceeds the pixel budget");
  const double M = std::max(p.fibre_bound(), 1e-300);
  const double scale = dpow(b, level);
  RasterGrid g;
  g.base = b;
  g.level = level;
  g.width = static_cast<int>(w);
  g.row0 = static_cast<std::int64_t>(std::floor(-M * scale));
  const std::int64_t top = static_cast<std::int64_t>(std::floor(M * scale));
  g.height = static_cast<int>(top - g.row0 + 1);
  require(static_cast<std::int64_t>(g.width) * g.height <= kRasterPixelBudget,
          "render_attractor: resolution exceeds the pixel budget");
  g.counts.assign(static_cast<std::size_t>(g.width) * g.height, 0);

  DigitSource src(b, seed);
  const OrbitPoint z0{src.uniform(), 0.0};
  stream_orbit(p, z0, burn_in, n_points, derive_seed(seed, 1), [&](OrbitPoint z) {
    const auto i = std::min<std::int64_t>(g.width - 1, static_cast<std::int64_t>(z.x * scale));
    const auto j = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(z.y * scale)) - g.row0, 0,
                                            g.height - 1);
    auto& c = g.counts[static_cast<std::size_t>(j) * g.width + i];
    if (c != UINT32_MAX) ++c;
  });
  return g;
}

/// Binary portable graymap, log-scaled occupancy, top row = largest y.
inline std::string to_pgm(const RasterGrid& g) {
  std::uint32_t mx = 0;
  for (auto c : g.counts) mx = std::max(mx, c);
  std::string out = "P5\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n255\n";
  out.reserve(out.size() + g.counts.size());
  const double denom = std::log1p(static_cast<double>(std::max<std::uint32_t>(mx, 1)));
  for (int j = g.height - 1; j >= 0; --j)
    for (int i = 0; i < g.width; ++i) {
      const double v = std::log1p(static_cast<double>(g.at(i, j))) / denom;
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
  return out;
}

// ---------------------------------------------------------------------------
// Box counting

inline BoxCountResult box_count_dimension(const RasterGrid& g, std::span<const int> levels) {
  detail::check_box_levels(levels, g.level);
  std::vector<std::pair<std::int64_t, std::int64_t>> cells;
  for (int j = 0; j < g.height; ++j)
    for (int i = 0; i < g.width; ++i)
      if (g.at(i, j) > 0) cells.emplace_back(i, g.row0 + j);
  require(!cells.empty(), "box_count_dimension: empty raster");
  auto counts = detail::count_coarsened(std::move(cells), g.base, g.level, levels);
  require(counts.front() >= 2, "box_count_dimension: points occupy a single box at the coarsest level");
  return detail::fit_box_counts(std::vector<int>(levels.begin(), levels.end()), std::move(counts), g.base);
}

inline BoxCountResult box_count_dimension(std::span<const OrbitPoint> pts, int b, std::span<const int> levels) {
  require(b >= 2, "box_count_dimension: b must be >= 2");
  require(!pts.empty(), "box_count_dimension: empty point set");
  detail::check_box_levels(levels, max_level(b));
  const int finest = levels.back();
  const double scale = dpow(b, finest);
  std::vector<std::pair<std::int64_t, std::int64_t>> cells;
  cells.reserve(pts.size());
  for (const auto& z : pts) {
    require(std::isfinite(z.x) && std::isfinite(z.y), "box_count_dimension: non-finite point");
    cells.emplace_back(static_cast<std::int64_t>(std::floor(z.x * scale)),
                       static_cast<std::int64_t>(std::floor(z.y * scale)));
  }
  auto counts = detail::count_coarsened(std::move(cells), b, finest, levels);
  require(counts.front() >= 2, "box_count_dimension: points occupy a single box at the coarsest level");
  return detail::fit_box_counts(std::vector<int>(levels.begin(), levels.end()), std::move(counts), b);
}

// ---------------------------------------------------------------------------
// Weierstrass graph  W(x) = sum_{n>=0} lambda^n psi(b^n x)

struct WeierstrassGraph {
  int base = 3;
  double lambda = 0.5;
  double predicted_dimension = 0.0;
  /// Finest column level; samples are W(i / (oversample * b^level)).
  int level = 0;
  int oversample = 0;
  int terms = 0;
  std::vector<double> xs;
  std::vector<double> ys;
};

/// Samples the truncated series on the grid i / (oversample * b^level); the
/// truncation keeps terms while lambda^n sup|psi| >= tol. Phases b^n x mod 1
/// are exact rationals on this grid.
inline WeierstrassGraph weierstrass_graph(const PeriodicFn& psi, double lambda, int b, int level, int oversample = 16,
                                          double tol = 1e-10) {
  const double predicted = weierstrass_predicted_dimension(lambda, b);
  require(level >= 1 && oversample >= 1, "weierstrass: resolution must be positive");
  const std::int64_t cols = checked_pow(b, level, kRasterPixelBudget);
  require(cols > 0 && cols * oversample <= kRasterPixelBudget, "weierstrass: resolution exceeds budget");
  const std::int64_t R = cols * oversample;
  WeierstrassGraph g;
  g.base = b;
  g.lambda = lambda;
  g.predicted_dimension = predicted;
  g.level = level;
  g.oversample = oversample;
  const double sup = std::max(psi.sup_norm(0), 1e-300);
  int terms = 0;
  for (double amp = sup; amp >= tol; amp *= lambda) ++terms;
  g.terms = terms;

  std::vector<std::int64_t> mult(terms);
  std::int64_t m = 1 % R;
  for (int n = 0; n < terms; ++n) {
    mult[n] = m;
    m = static_cast<std::int64_t>((m * b) % R);
  }
  g.xs.resize(static_cast<std::size_t>(R));
  g.ys.resize(static_cast<std::size_t>(R));
  for (std::int64_t i = 0; i < R; ++i) {
    double y = 0.0, amp = 1.0;
    for (int n = 0; n < terms; ++n) {
      const std::int64_t phase = static_cast<std::int64_t>((i * mult[n]) % R);
      y += amp * psi.eval(static_cast<double>(phase) / static_cast<double>(R));
      amp *= lambda;
    }
    g.xs[i] = static_cast<double>(i) / static_cast<double>(R);
    g.ys[i] = y;
  }
  return g;
}

/// Graph box count: a level-k column holding sample values in [lo, hi] costs
/// floor(hi b^k) - floor(lo b^k) + 1 boxes.
inline BoxCountResult graph_box_count(const WeierstrassGraph& g, std::span<const int> levels) {
  detail::check_box_levels(levels, g.level);
  const int b = g.base;
  const std::int64_t finest_cols = checked_pow(b, g.level);
  std::vector<double> lo(finest_cols), hi(finest_cols);
  for (std::int64_t c = 0; c < finest_cols; ++c) {
    const auto first = g.ys.begin() + c * g.oversample;
    // Include the left sample of the next column so the column range is closed.
    const auto last = (c + 1 < finest_cols) ? first + g.oversample + 1 : g.ys.end();
    auto [mn, mx] = std::minmax_element(first, last);
    lo[c] = *mn;
    hi[c] = *mx;
  }
  std::vector<std::int64_t> counts;
  for (int k : levels) {
    const std::int64_t per = checked_pow(b, g.level - k);
    const double scale = dpow(b, k);
    std::int64_t total = 0;
    for (std::int64_t c = 0; c < finest_cols; c += per) {
      const double l = *std::min_element(lo.begin() + c, lo.begin() + c + per);
      const double h = *std::max_element(hi.begin() + c, hi.begin() + c + per);
      total += static_cast<std::int64_t>(std::floor(h * scale)) - static_cast<std::int64_t>(std::floor(l * scale)) + 1;
    }
    counts.push_back(total);
  }
  return detail::fit_box_counts(std::vector<int>(levels.begin(), levels.end()), std::move(counts), b);
}

}  // namespace solenoid
