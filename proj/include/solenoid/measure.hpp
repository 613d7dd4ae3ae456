#pragma once

// Probability measures resolved on the level-n b-adic partition
// { [j/b^n, (j+1)/b^n) : j in Z } of the real line, and the builders
// and transformations used for fibre measures m_x.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "solenoid/common.hpp"
#include "solenoid/symbolic.hpp"

namespace solenoid {

struct BAdicCell {
  int base = 2;
  int level = 0;
  std::int64_t index = 0;

  double width() const { return dpow(base, -level); }
  double left() const { return static_cast<double>(index) * width(); }
  double right() const { return static_cast<double>(index + 1) * width(); }
  double midpoint() const { return (static_cast<double>(index) + 0.5) * width(); }
  bool contains(double y) const { return cell_index(y, base, level) == index; }

  /// The coarser cell at `coarse_level` containing this one.
  BAdicCell ancestor(int coarse_level) const {
    require(coarse_level <= level, "BAdicCell::ancestor: level must not increase");
    return {base, coarse_level, floor_div(index, checked_pow(base, level - coarse_level))};
  }

  friend bool operator==(const BAdicCell&, const BAdicCell&) = default;
};

class DiscreteMeasure {
 public:
  using Entry = std::pair<std::int64_t, double>;
  static constexpr std::int64_t kMaxDenseCells = std::int64_t{1} << 28;

  /// Sorts, merges duplicate cells, drops zero weights and normalises to mass 1.
  static DiscreteMeasure from_weights(int base, int level, std::vector<Entry> entries) {
    check_resolution(base, level);
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.first < b.first; });
    std::vector<Entry> merged;
    merged.reserve(entries.size());
    for (const auto& [idx, w] : entries) {
      require(w >= 0.0 && std::isfinite(w), "DiscreteMeasure: weights must be finite and nonnegative");
      if (w == 0.0) continue;
      if (!merged.empty() && merged.back().first == idx) merged.back().second += w;
      else merged.emplace_back(idx, w);
    }
    return DiscreteMeasure(base, level, std::move(merged));
  }

  /// Weights kept exactly as given (e.g. read back from a file); they must
  /// already sum to 1 and be sorted by strictly increasing index.
  static DiscreteMeasure from_normalised(int base, int level, std::vector<Entry> entries) {
    check_resolution(base, level);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      require(entries[i].second > 0.0 && std::isfinite(entries[i].second), "DiscreteMeasure: weights must be positive");
      require(i == 0 || entries[i].first > entries[i - 1].first, "DiscreteMeasure: indices must increase");
    }
    DiscreteMeasure m(base, level, std::move(entries), false);
    require(std::abs(m.total_mass() - 1.0) <= 1e-9, "DiscreteMeasure: weights must sum to 1");
    return m;
  }

  /// Histogram of cell indices, one unit of mass per entry.
  static DiscreteMeasure from_indices(int base, int level, std::vector<std::int64_t> indices) {
    check_resolution(base, level);
    require(!indices.empty(), "DiscreteMeasure: empty sample");
    std::sort(indices.begin(), indices.end());
    std::vector<Entry> cells;
    for (std::size_t i = 0; i < indices.size();) {
      std::size_t j = i;
      while (j < indices.size() && indices[j] == indices[i]) ++j;
      cells.emplace_back(indices[i], static_cast<double>(j - i));
      i = j;
    }
    return DiscreteMeasure(base, level, std::move(cells));
  }

  static DiscreteMeasure dirac(int base, int level, double y) {
    return DiscreteMeasure(base, level, {{cell_index(y, base, level), 1.0}});
  }

  /// Equal mass on `count` consecutive cells starting at `first`.
  static DiscreteMeasure uniform(int base, int level, std::int64_t first, std::int64_t count) {
    check_resolution(base, level);
    require(count >= 1, "DiscreteMeasure::uniform: count must be positive");
    require(count <= kMaxDenseCells, "DiscreteMeasure::uniform: too many cells");
    std::vector<Entry> cells;
    cells.reserve(static_cast<std::size_t>(count));
    for (std::int64_t j = 0; j < count; ++j) cells.emplace_back(first + j, 1.0);
    return DiscreteMeasure(base, level, std::move(cells));
  }

  /// Lebesgue measure on [0,1) at the given level.
  static DiscreteMeasure lebesgue(int base, int level) { return uniform(base, level, 0, checked_pow(base, level)); }

  int base() const { return base_; }
  int level() const { return level_; }
  std::size_t size() const { return cells_.size(); }
  std::span<const Entry> entries() const { return cells_; }

  double weight(std::int64_t index) const {
    auto it = std::lower_bound(cells_.begin(), cells_.end(), index,
                               [](const Entry& e, std::int64_t i) { return e.first < i; });
    return (it != cells_.end() && it->first == index) ? it->second : 0.0;
  }

  double total_mass() const {
    double s = 0.0;
    for (const auto& e : cells_) s += e.second;
    return s;
  }

  BAdicCell cell(std::int64_t index) const { return {base_, level_, index}; }
  std::int64_t min_index() const { return cells_.front().first; }
  std::int64_t max_index() const { return cells_.back().first; }

  /// Diameter of the closed hull of the supporting cells.
  double support_diameter() const {
    return static_cast<double>(max_index() - min_index() + 1) * dpow(base_, -level_);
  }

  DiscreteMeasure coarsen(int coarse_level) const {
    require(coarse_level <= level_, "coarsen: target level exceeds resolution");
    if (coarse_level == level_) return *this;
    const std::int64_t f = checked_pow(base_, level_ - coarse_level);
    std::vector<Entry> out;
    for (const auto& [idx, w] : cells_) {
      const std::int64_t c = floor_div(idx, f);
      if (!out.empty() && out.back().first == c) out.back().second += w;
      else out.emplace_back(c, w);
    }
    DiscreteMeasure m(base_, coarse_level, std::move(out), false);
    return m;
  }

  friend bool operator==(const DiscreteMeasure&, const DiscreteMeasure&) = default;

 private:
  DiscreteMeasure(int base, int level, std::vector<Entry> cells, bool normalise = true)
      : base_(base), level_(level), cells_(std::move(cells)) {
    require(!cells_.empty(), "DiscreteMeasure: no mass");
    if (normalise) {
      const double total = total_mass();
      require(total > 0.0, "DiscreteMeasure: no mass");
      for (auto& e : cells_) e.second /= total;
    }
  }

  static void check_resolution(int base, int level) {
    require(base >= 2, "DiscreteMeasure: base must be >= 2");
    require(level >= 0 && level <= max_level(base), "DiscreteMeasure: level outside exact index range");
  }

  int base_;
  int level_;
  std::vector<Entry> cells_;
};

/// Half the L1 distance between two measures on a common lattice.
inline double total_variation(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  require(mu.base() == nu.base() && mu.level() == nu.level(), "total_variation: lattices differ");
  auto a = mu.entries(), b = nu.entries();
  std::size_t i = 0, j = 0;
  double s = 0.0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) s += a[i++].second;
    else if (i == a.size() || b[j].first < a[i].first) s += b[j++].second;
    else s += std::abs(a[i++].second - b[j++].second);
  }
  return 0.5 * s;
}

// ---------------------------------------------------------------------------
// Builders for m_x

/// Empirical m_x: histogram of S(x, j) over i.i.d. words j continued to the
/// truncation depth. Samples are split into fixed shards with derived seeds and
/// counted as integers, so the result does not depend on the number of threads.
inline DiscreteMeasure build_mx_empirical(const SystemParams& p, double x, int level, std::size_t n_samples,
                                          std::uint64_t seed, unsigned threads = 1) {
  require(level >= 0 && level <= max_level(p.b()), "build_mx_empirical: level too deep");
  require(n_samples >= 1, "build_mx_empirical: need at least one sample");
  constexpr std::size_t kShards = 16;
  constexpr std::int64_t kDenseCells = std::int64_t{1} << 27;
  const int depth = p.truncation_depth();
  const double scale = dpow(p.b(), level);
  // Every value lies in [-M, M]; one guard cell each side absorbs rounding.
  const double M = p.fibre_bound();
  const std::int64_t lo = static_cast<std::int64_t>(std::floor(-M * scale)) - 1;
  const std::int64_t hi = static_cast<std::int64_t>(std::floor(M * scale)) + 1;
  const bool dense = hi - lo + 1 <= kDenseCells;
  threads = std::max(1u, std::min<unsigned>(threads, kShards));

  std::vector<std::vector<std::uint64_t>> hist(dense ? threads : 0);
  std::vector<std::vector<std::int64_t>> shard_idx(dense ? 0 : kShards);
  auto run_shard = [&](std::size_t s, unsigned worker) {
    const std::size_t first = n_samples * s / kShards, last = n_samples * (s + 1) / kShards;
    DigitSource src(p.b(), derive_seed(seed, s));
    for (std::size_t k = first; k < last; ++k) {
      const double v = series_sum(p, x, static_cast<std::size_t>(depth), [&](std::size_t) { return src.next(); });
      const auto idx = static_cast<std::int64_t>(std::floor(v * scale));
      if (dense) ++hist[worker][static_cast<std::size_t>(std::clamp(idx, lo, hi) - lo)];
      else shard_idx[s].push_back(idx);
    }
  };
  for (auto& h : hist) h.assign(static_cast<std::size_t>(hi - lo + 1), 0);

  if (threads == 1) {
    for (std::size_t s = 0; s < kShards; ++s) run_shard(s, 0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t s = t; s < kShards; s += threads) run_shard(s, t);
      });
    for (auto& th : pool) th.join();
  }

  if (!dense) {
    std::vector<std::int64_t> all;
    all.reserve(n_samples);
    for (auto& v : shard_idx) all.insert(all.end(), v.begin(), v.end());
    return DiscreteMeasure::from_indices(p.b(), level, std::move(all));
  }
  for (unsigned t = 1; t < threads; ++t)
    for (std::size_t i = 0; i < hist[0].size(); ++i) hist[0][i] += hist[t][i];
  std::vector<DiscreteMeasure::Entry> cells;
  for (std::size_t i = 0; i < hist[0].size(); ++i)
    if (hist[0][i] > 0) cells.emplace_back(lo + static_cast<std::int64_t>(i), static_cast<double>(hist[0][i]));
  return DiscreteMeasure::from_weights(p.b(), level, std::move(cells));
}

inline constexpr std::int64_t kExactEnumerationBudget = 100'000'000;

/// m_x from all b^depth words of length `depth`, each with weight b^-depth.
inline DiscreteMeasure build_mx_exact(const SystemParams& p, double x, int level, int depth,
                                      std::int64_t budget = kExactEnumerationBudget) {
  require(level >= 0 && level <= max_level(p.b()), "build_mx_exact: level too deep");
  require(depth >= 0, "build_mx_exact: negative depth");
  const std::int64_t count = checked_pow(p.b(), depth, budget);
  require(count > 0, "build_mx_exact: b^depth exceeds the work budget");
  const double scale = dpow(p.b(), level);
  std::vector<std::int64_t> idx;
  idx.reserve(static_cast<std::size_t>(count));
  for_each_word_value(p, x, depth, [&](const std::vector<int>&, double v, double) {
    idx.push_back(static_cast<std::int64_t>(std::floor(v * scale)));
  });
  return DiscreteMeasure::from_indices(p.b(), level, std::move(idx));
}

// ---------------------------------------------------------------------------
// Transformations

/// Image under y -> a y + c; each cell's mass moves to the image of its midpoint,
/// so every atom lands within |a| b^-(level+1) of its exact image.
inline DiscreteMeasure pushforward_affine(const DiscreteMeasure& mu, double a, double c, int out_level) {
  require(a != 0.0 && std::isfinite(a) && std::isfinite(c), "pushforward_affine: a must be finite and nonzero");
  const double w = dpow(mu.base(), -mu.level());
  const double out_scale = dpow(mu.base(), out_level);
  std::vector<DiscreteMeasure::Entry> out;
  out.reserve(mu.size());
  for (const auto& [idx, m] : mu.entries()) {
    const double y = a * ((static_cast<double>(idx) + 0.5) * w) + c;
    out.emplace_back(static_cast<std::int64_t>(std::floor(y * out_scale)), m);
  }
  return DiscreteMeasure::from_weights(mu.base(), out_level, std::move(out));
}

struct WeightedMeasure {
  double weight;
  std::reference_wrapper<const DiscreteMeasure> measure;
};

inline DiscreteMeasure mix(std::span<const WeightedMeasure> components) {
  require(!components.empty(), "mix: no components");
  const int base = components.front().measure.get().base();
  const int level = components.front().measure.get().level();
  double total = 0.0;
  std::vector<DiscreteMeasure::Entry> all;
  for (const auto& c : components) {
    const auto& m = c.measure.get();
    require(m.base() == base && m.level() == level, "mix: components live on different lattices");
    require(c.weight >= 0.0, "mix: negative weight");
    total += c.weight;
    for (const auto& [idx, w] : m.entries()) all.emplace_back(idx, c.weight * w);
  }
  require(std::abs(total - 1.0) <= 1e-9, "mix: weights must sum to 1");
  return DiscreteMeasure::from_weights(base, level, std::move(all));
}

/// Law of X + Y for independent X ~ mu, Y ~ nu. A pair of cells contributes at
/// the sum of their left endpoints plus half the finer width, so a Dirac in
/// cell 0 acts as the identity and lattice translates stay lattice translates.
inline DiscreteMeasure convolve(const DiscreteMeasure& mu, const DiscreteMeasure& nu, int out_level) {
  require(mu.base() == nu.base(), "convolve: bases differ");
  const int base = mu.base();
  const double wm = dpow(base, -mu.level()), wn = dpow(base, -nu.level());
  const double half = 0.5 * std::min(wm, wn);
  const double out_scale = dpow(base, out_level);
  std::vector<DiscreteMeasure::Entry> out;
  out.reserve(mu.size() * nu.size());
  for (const auto& [i, a] : mu.entries())
    for (const auto& [j, c] : nu.entries()) {
      const double y = static_cast<double>(i) * wm + static_cast<double>(j) * wn + half;
      out.emplace_back(static_cast<std::int64_t>(std::floor(y * out_scale)), a * c);
    }
  return DiscreteMeasure::from_weights(base, out_level, std::move(out));
}

struct ComponentMeasure {
  BAdicCell cell;
  /// Mass of `cell` under the parent measure.
  double parent_mass = 0.0;
  DiscreteMeasure measure;
};

/// The normalised restriction mu(. | cell).
inline ComponentMeasure component(const DiscreteMeasure& mu, const BAdicCell& cell) {
  require(cell.base == mu.base() && cell.level <= mu.level(), "component: cell is finer than the measure");
  const std::int64_t f = checked_pow(mu.base(), mu.level() - cell.level);
  std::vector<DiscreteMeasure::Entry> inside;
  double mass = 0.0;
  for (const auto& [idx, w] : mu.entries())
    if (floor_div(idx, f) == cell.index) {
      inside.emplace_back(idx, w);
      mass += w;
    }
  require(mass > 0.0, "component: conditioning cell has zero mass");
  return {cell, mass, DiscreteMeasure::from_weights(mu.base(), mu.level(), std::move(inside))};
}

// ---------------------------------------------------------------------------
// Self-similarity  m_x = b^-n sum_{j in Lambda^n} f_{x,j} m_{j(x)},  f_{x,j}(y) = gamma^n y + S(x, j)

struct ResidualReport {
  double residual = 0.0;
  /// Certified upper bound on `residual`: mass of exact atoms lying within the
  /// worst-case displacement of a cell boundary.
  double certified_bound = 0.0;
};

/// The inner measures m_{j(x)} are resolved at `inner_level`; -1 selects
/// floor((depth - n) log_b(1/gamma)), the scale of their own truncation,
/// clamped to [level, max_level(b)].
inline ResidualReport self_similarity_residual(const SystemParams& p, double x, int n, int depth, int level,
                                               std::int64_t budget = kExactEnumerationBudget, int inner_level = -1) {
  require(n >= 0 && n <= depth, "self_similarity_residual: need 0 <= n <= depth");
  const int b = p.b();
  if (inner_level < 0)
    inner_level = std::clamp(scale_floor(depth - n, b, p.gamma()), level, std::max(level, max_level(b)));
  require(inner_level >= level, "self_similarity_residual: inner level coarser than level");
  const DiscreteMeasure lhs = build_mx_exact(p, x, level, depth, budget);
  if (n == 0) return {total_variation(lhs, pushforward_affine(lhs, 1.0, 0.0, level)), 0.0};

  const double gn = std::pow(p.gamma(), n);
  const double wj = dpow(b, -n);
  std::vector<DiscreteMeasure> pieces;
  std::vector<double> weights;
  for_each_word_value(p, x, n, [&](const std::vector<int>&, double s, double point) {
    pieces.push_back(pushforward_affine(build_mx_exact(p, point, inner_level, depth - n, budget), gn, s, level));
    weights.push_back(wj);
  });
  std::vector<WeightedMeasure> parts;
  for (std::size_t k = 0; k < pieces.size(); ++k) parts.push_back({weights[k], pieces[k]});
  const DiscreteMeasure rhs = mix(parts);

  // Each inner atom is moved to its cell midpoint before scaling by gamma^n.
  const double disp = 0.5 * gn * dpow(b, -inner_level);
  const double scale = dpow(b, level);
  double near = 0.0;
  const double unit = dpow(b, -depth);
  for_each_word_value(p, x, depth, [&](const std::vector<int>&, double v, double) {
    const double t = v * scale;
    const double d = std::min(t - std::floor(t), std::ceil(t) - t) / scale;
    if (d <= disp * (1.0 + 1e-9) + 1e-15) near += unit;
  });
  return {total_variation(lhs, rhs), std::min(1.0, near)};
}

}  // namespace solenoid
