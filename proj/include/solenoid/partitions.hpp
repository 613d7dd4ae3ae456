#pragma once

// Word-space partitions keyed by (|w|, S(w(x0),h), S(w(x0),h'), S(x0,w)),
// the word measures theta_n^u, the fibre measures A_u and B_q built from them,
// and the entropy tables over key classes.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "solenoid/common.hpp"
#include "solenoid/entropy.hpp"
#include "solenoid/measure.hpp"
#include "solenoid/separation.hpp"
#include "solenoid/symbolic.hpp"

namespace solenoid {

inline constexpr std::int64_t kWordBudget = std::int64_t{1} << 20;

struct PartitionKey {
  int n = 0;
  int m = 0;
  /// Unused (zero) when n == 0.
  std::int64_t cell1 = 0;
  std::int64_t cell2 = 0;
  std::int64_t cell3 = 0;

  auto operator<=>(const PartitionKey&) const = default;

  /// "n:m:cell1:cell2:cell3", with "-" for the cells dropped at n = 0.
  std::string str() const {
    const std::string c12 = n == 0 ? "-:-" : std::to_string(cell1) + ":" + std::to_string(cell2);
    return std::to_string(n) + ":" + std::to_string(m) + ":" + c12 + ":" + std::to_string(cell3);
  }
};

/// Deepest cell level a key can hold: b^level <= 2^61.
inline int max_key_level(int b) { return static_cast<int>(61.0 / std::log2(static_cast<double>(b)) + 1e-12); }

namespace detail {

// Keys reach levels past max_level(b); bin in long double within 61 bits.
inline std::int64_t key_cell(double y, int b, int level) {
  require(level >= 0 && level <= max_key_level(b), "partition_key: cell level too deep");
  long double scale = 1.0L;
  for (int i = 0; i < level; ++i) scale *= b;
  const long double v = std::floor(static_cast<long double>(y) * scale);
  require(std::fabs(v) < 0x1.0p62L, "partition_key: value out of range at this level");
  return static_cast<std::int64_t>(v);
}

struct KeyContext {
  const SystemParams& p;
  double x0;
  Word h_tail;
  Word hp_tail;
};

// h and h' extended by zeros to the truncation depth.
inline KeyContext key_context(const SystemParams& p, double x0, const Word& h, const Word& hp) {
  detail::check_word(p, h);
  detail::check_word(p, hp);
  auto ext = [&](const Word& w) {
    const std::size_t len = std::max<std::size_t>(w.size(), p.truncation_depth());
    return w + Word::repeat(0, len - w.size());
  };
  return {p, x0, ext(h), ext(hp)};
}

inline PartitionKey key_from_values(const KeyContext& ctx, int n, int m, double s_word, double point) {
  const int b = ctx.p.b();
  PartitionKey k;
  k.n = n;
  k.m = m;
  if (n > 0) {
    k.cell1 = key_cell(eval_S(ctx.p, point, ctx.h_tail).value, b, n);
    k.cell2 = key_cell(eval_S(ctx.p, point, ctx.hp_tail).value, b, n);
  }
  k.cell3 = key_cell(s_word, b, n + scale_floor(m, b, ctx.p.gamma()));
  return k;
}

}  // namespace detail

/// The key of w in L_n^{Lambda#}. S(x0, w) is the finite-word value; h and h'
/// are continued with zeros to the truncation depth.
inline PartitionKey partition_key(const SystemParams& p, const Word& w, int n, double x0, const Word& h,
                                  const Word& hp) {
  require(n >= 0, "partition_key: negative level");
  detail::check_word(p, w);
  const auto ctx = detail::key_context(p, x0, h, hp);
  return detail::key_from_values(ctx, n, static_cast<int>(w.size()), eval_S(p, x0, w).value,
                                 word_point(w, x0, p.b()));
}

// ---------------------------------------------------------------------------
// Word measures

class WordMeasure {
 public:
  /// Explicit table; weights are normalised to 1.
  static WordMeasure from_table(int b, std::map<Word, double> table) {
    require(!table.empty(), "WordMeasure: empty table");
    double total = 0.0;
    for (const auto& [w, v] : table) {
      require(w.valid_for_base(b), "WordMeasure: word has a digit >= b");
      require(v >= 0.0 && std::isfinite(v), "WordMeasure: weights must be nonnegative");
      total += v;
    }
    require(total > 0.0, "WordMeasure: zero total mass");
    for (auto& [w, v] : table) v /= total;
    WordMeasure m;
    m.b_ = b;
    m.table_ = std::move(table);
    return m;
  }

  /// Uniform on { w u : w in Lambda^prefix_length }, enumerated lazily.
  static WordMeasure uniform(int b, int prefix_length, Word suffix, std::int64_t budget = kWordBudget) {
    require(prefix_length >= 0, "WordMeasure: negative prefix length");
    require(suffix.valid_for_base(b), "WordMeasure: suffix has a digit >= b");
    require(checked_pow(b, prefix_length, budget) > 0, "WordMeasure: b^prefix_length exceeds budget");
    WordMeasure m;
    m.b_ = b;
    m.suffix_ = std::move(suffix);
    m.prefix_length_ = prefix_length;
    return m;
  }

  int base() const { return b_; }
  bool is_uniform() const { return !table_.has_value(); }
  const Word& suffix() const { return suffix_; }
  int prefix_length() const { return prefix_length_; }

  std::size_t support_size() const {
    return table_ ? table_->size() : static_cast<std::size_t>(checked_pow(b_, prefix_length_));
  }

  double weight(const Word& w) const {
    if (table_) {
      auto it = table_->find(w);
      return it == table_->end() ? 0.0 : it->second;
    }
    if (w.size() != static_cast<std::size_t>(prefix_length_) + suffix_.size() || !w.valid_for_base(b_)) return 0.0;
    for (std::size_t i = 0; i < suffix_.size(); ++i)
      if (w[prefix_length_ + i] != suffix_[i]) return 0.0;
    return dpow(b_, -prefix_length_);
  }

  double total_mass() const {
    if (!table_) return 1.0;
    double s = 0.0;
    for (const auto& e : *table_) s += e.second;
    return s;
  }

  /// fn(const Word&, double weight) over the support, in lexicographic order of
  /// the table or, for uniform measures, with the first prefix digit slowest.
  template <class Fn>
  void for_each(Fn&& fn) const {
    if (table_) {
      for (const auto& [w, v] : *table_) fn(w, v);
      return;
    }
    const double wt = dpow(b_, -prefix_length_);
    const std::int64_t count = checked_pow(b_, prefix_length_);
    std::vector<Word::digit_type> ds(prefix_length_ + suffix_.size());
    std::copy(suffix_.digits().begin(), suffix_.digits().end(), ds.begin() + prefix_length_);
    for (std::int64_t i = 0; i < count; ++i) {
      std::int64_t r = i;
      for (int d = prefix_length_ - 1; d >= 0; --d) {
        ds[d] = static_cast<Word::digit_type>(r % b_);
        r /= b_;
      }
      fn(Word(ds), wt);
    }
  }

 private:
  int b_ = 2;
  std::optional<std::map<Word, double>> table_;
  Word suffix_;
  int prefix_length_ = 0;
};

/// theta_n^a: uniform on { w a : w in Lambda^{n_hat - t} }, t = |a|.
inline WordMeasure theta_measure(const SystemParams& p, const Word& a, int n, std::int64_t budget = kWordBudget) {
  detail::check_word(p, a);
  const int t = static_cast<int>(a.size());
  const int nh = nhat(n, p.b(), p.gamma());
  require(nh > t, "theta_measure: need n_hat > |a|");
  return WordMeasure::uniform(p.b(), nh - t, a, budget);
}

/// A_u(xi): atoms at S(x0, w u) with weights xi({w}), binned at `level`.
inline DiscreteMeasure measure_A(const SystemParams& p, const WordMeasure& xi, const Word& u, double x0, int level) {
  detail::check_word(p, u);
  std::vector<DiscreteMeasure::Entry> atoms;
  atoms.reserve(xi.support_size());
  xi.for_each([&](const Word& w, double v) {
    atoms.emplace_back(cell_index(eval_S(p, x0, w + u).value, p.b(), level), v);
  });
  return DiscreteMeasure::from_weights(p.b(), level, std::move(atoms));
}

/// B_q(xi): law of S(x0, w q j) with w ~ xi and j an i.i.d. uniform tail of
/// truncation-depth length; `tail_samples` tails per support word, seeded per
/// word. tail_samples = 0 uses the finite word w q.
inline DiscreteMeasure measure_B(const SystemParams& p, const WordMeasure& xi, const Word& q, double x0, int level,
                                 int tail_samples, std::uint64_t seed) {
  detail::check_word(p, q);
  require(tail_samples >= 0, "measure_B: negative tail sample count");
  const int depth = p.truncation_depth();
  std::vector<DiscreteMeasure::Entry> atoms;
  atoms.reserve(xi.support_size() * static_cast<std::size_t>(std::max(1, tail_samples)));
  std::uint64_t k = 0;
  xi.for_each([&](const Word& w, double v) {
    const Word wq = w + q;
    const double head = eval_S(p, x0, wq).value;
    if (tail_samples == 0) {
      atoms.emplace_back(cell_index(head, p.b(), level), v);
      ++k;
      return;
    }
    const double point = word_point(wq, x0, p.b());
    const double g = std::pow(p.gamma(), static_cast<double>(wq.size()));
    DigitSource src(p.b(), derive_seed(seed, k++));
    for (int s = 0; s < tail_samples; ++s) {
      const double tail = series_sum(p, point, static_cast<std::size_t>(depth), [&](std::size_t) { return src.next(); });
      atoms.emplace_back(cell_index(head + g * tail, p.b(), level), v / tail_samples);
    }
  });
  return DiscreteMeasure::from_weights(p.b(), level, std::move(atoms));
}

struct DecompositionReport {
  double residual = 0.0;
  /// Mass of exact left-hand atoms within the tail bound of a cell boundary;
  /// the residual can never exceed it.
  double certified_bound = 0.0;
  int n_hat = 0;
  int depth = 0;
};

/// Compares m_{x0} (exact, depth n_hat + i_hat) with
/// b^{-2t} sum_{u,v in Lambda^t} b^{-(i_hat - t)} sum_{q in Lambda^{i_hat - t}} B_{vq}(theta_n^u).
inline DecompositionReport decomposition_check(const SystemParams& p, int t, double x0, int n, int i_level, int level,
                                               int tail_samples, std::uint64_t seed,
                                               std::int64_t budget = std::int64_t{1} << 16) {
  require(t >= 1, "decomposition_check: t must be >= 1");
  require(i_level >= t, "decomposition_check: need i_hat >= t");
  const int b = p.b();
  const int nh = nhat(n, b, p.gamma());
  require(nh > t, "decomposition_check: need n_hat > t");
  require(checked_pow(b, nh - t, budget) > 0 && checked_pow(b, i_level - t, budget) > 0,
          "decomposition_check: enumeration exceeds budget");
  const int depth = nh + i_level;
  DecompositionReport rep;
  rep.n_hat = nh;
  rep.depth = depth;
  const DiscreteMeasure lhs = build_mx_exact(p, x0, level, depth);

  const std::int64_t nt = checked_pow(b, t);
  const std::int64_t nq = checked_pow(b, i_level - t);
  const double weight = 1.0 / static_cast<double>(nt * nt * nq);
  std::vector<DiscreteMeasure> parts;
  parts.reserve(static_cast<std::size_t>(nt * nt * nq));
  std::uint64_t k = 0;
  for (std::int64_t ui = 0; ui < nt; ++ui) {
    const WordMeasure theta = WordMeasure::uniform(b, nh - t, detail::word_from_index(ui, t, b), budget);
    for (std::int64_t vi = 0; vi < nt; ++vi)
      for (std::int64_t qi = 0; qi < nq; ++qi) {
        const Word vq = detail::word_from_index(vi, t, b) + detail::word_from_index(qi, i_level - t, b);
        parts.push_back(measure_B(p, theta, vq, x0, level, tail_samples, derive_seed(seed, k++)));
      }
  }
  std::vector<WeightedMeasure> mixture;
  mixture.reserve(parts.size());
  for (const auto& m : parts) mixture.push_back({weight, m});
  rep.residual = total_variation(lhs, mix(mixture));

  if (tail_samples > 0) {
    const double reach = p.tail_bound(depth);
    const double scale = dpow(b, level);
    const double unit = dpow(b, -depth);
    for_each_word_value(p, x0, depth, [&](const std::vector<int>&, double v, double) {
      const double s = v * scale;
      const double d = std::min(s - std::floor(s), std::ceil(s) - s) / scale;
      if (d <= reach * (1.0 + 1e-9) + 1e-15) rep.certified_bound += unit;
    });
  }
  // Finite-word atoms are recomputed along a different evaluation order.
  rep.certified_bound = std::min(1.0, rep.certified_bound + 1e-12);
  return rep;
}

// ---------------------------------------------------------------------------
// Entropy over key classes

/// Base-b Shannon entropy of the distribution of keys under xi.
inline double key_entropy(const SystemParams& p, const WordMeasure& xi, int n, double x0, const Word& h,
                          const Word& hp) {
  const auto ctx = detail::key_context(p, x0, h, hp);
  std::vector<std::pair<PartitionKey, double>> keyed;
  keyed.reserve(xi.support_size());
  xi.for_each([&](const Word& w, double v) {
    keyed.emplace_back(detail::key_from_values(ctx, n, static_cast<int>(w.size()), eval_S(p, x0, w).value,
                                               word_point(w, x0, p.b())),
                       v);
  });
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& c) { return a.first < c.first; });
  double h_sum = 0.0;
  for (std::size_t i = 0; i < keyed.size();) {
    std::size_t j = i;
    double mass = 0.0;
    while (j < keyed.size() && keyed[j].first == keyed[i].first) mass += keyed[j++].second;
    if (mass > 0.0) h_sum -= mass * log_base(mass, p.b());
    i = j;
  }
  return h_sum;
}

/// Smallest C with every scanned gap above b^{-C n}, times `safety`.
inline double scan_derived_C(const SeparationScan& scan, int b, double safety = 1.05) {
  double c = 0.0;
  for (std::size_t i = 0; i < scan.n_values.size(); ++i) {
    if (scan.nhat_values[i] <= scan.ell || scan.n_values[i] <= 0) continue;
    require(scan.min_gaps[i] > 0.0, "scan_derived_C: coincident values in the scan");
    c = std::max(c, -log_base(scan.min_gaps[i], b) / scan.n_values[i]);
  }
  return c * safety;
}

struct ThetaEntropyRow {
  int n = 0;
  int n_hat = 0;
  std::int64_t words = 0;
  int fine_level = 0;
  double coarse_entropy = 0.0;
  double fine_entropy = 0.0;
  /// coarse_entropy / n and fine_entropy / n.
  double coarse = 0.0;
  double fine = 0.0;
  /// fine_entropy == n_hat - t: every key distinct.
  bool fine_separated = false;
  /// floor(C n) was lowered to keep the S(x0, w) cell within max_key_level.
  bool fine_level_capped = false;
};

/// For each n: (1/n) H(theta_n^a, L_0) and (1/n) H(theta_n^a, L_{floor(C n)}).
inline std::vector<ThetaEntropyRow> theta_entropy_table(const SystemParams& p, const TransversalityCertificate& cert,
                                                        std::span<const int> n_list, double C,
                                                        std::int64_t budget = kWordBudget) {
  require(C > 0.0, "theta_entropy_table: C must be positive");
  std::vector<ThetaEntropyRow> rows;
  for (int n : n_list) {
    require(n >= 1, "theta_entropy_table: n must be positive");
    const WordMeasure theta = theta_measure(p, cert.a, n, budget);
    ThetaEntropyRow r;
    r.n = n;
    r.n_hat = nhat(n, p.b(), p.gamma());
    r.words = static_cast<std::int64_t>(theta.support_size());
    r.fine_level = static_cast<int>(std::floor(C * n));
    const int cap = max_key_level(p.b()) - scale_floor(r.n_hat, p.b(), p.gamma());
    require(cap >= 0, "theta_entropy_table: n too large for key resolution");
    if (r.fine_level > cap) {
      r.fine_level = cap;
      r.fine_level_capped = true;
    }
    r.coarse_entropy = key_entropy(p, theta, 0, cert.x0, cert.h, cert.h_prime);
    r.fine_entropy = key_entropy(p, theta, r.fine_level, cert.x0, cert.h, cert.h_prime);
    r.coarse = r.coarse_entropy / n;
    r.fine = r.fine_entropy / n;
    r.fine_separated = std::abs(r.fine_entropy - theta.prefix_length()) <= 1e-9;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace solenoid
