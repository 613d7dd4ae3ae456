#pragma once

// Numeric evidence for the structural hypotheses on S: gaps between finite-scale
// values, exponential separation along the n -> n_hat scales, derivative
// separation, the (H)/(H*) dichotomy and transversality certificates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "solenoid/common.hpp"
#include "solenoid/symbolic.hpp"

namespace solenoid {

inline constexpr std::int64_t kScanBudget = std::int64_t{1} << 24;

namespace detail {

// Values S(x, j w) for all j in Lambda^len, via S(x, j w) = S(x, j) + gamma^len S(j(x), w).
inline std::vector<double> suffix_values(const SystemParams& p, double x, int len, const Word& w) {
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(checked_pow(p.b(), len)));
  const double g = std::pow(p.gamma(), len);
  for_each_word_value(p, x, len, [&](const std::vector<int>&, double s, double point) {
    vals.push_back(s + g * eval_S(p, point, w).value);
  });
  return vals;
}

inline double sorted_min_gap(std::vector<double>& vals) {
  if (vals.size() < 2) return std::numeric_limits<double>::infinity();
  std::sort(vals.begin(), vals.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < vals.size(); ++i) gap = std::min(gap, vals[i] - vals[i - 1]);
  return gap;
}

}  // namespace detail

/// Minimum pairwise distance within X_n^{w,x} = { S(x, j w) : j in Lambda^{n-|w|} }.
inline double min_gap(const SystemParams& p, double x, const Word& w, int n, std::int64_t budget = kScanBudget) {
  detail::check_word(p, w);
  require(n > static_cast<int>(w.size()), "min_gap: need n > |w|");
  require(checked_pow(p.b(), n - static_cast<int>(w.size()), budget) > 0, "min_gap: b^(n-|w|) exceeds budget");
  auto vals = detail::suffix_values(p, x, n - static_cast<int>(w.size()), w);
  return detail::sorted_min_gap(vals);
}

// ---------------------------------------------------------------------------
// Exponential separation

struct SeparationScan {
  double x = 0.0;
  int ell = 0;
  double epsilon = 0.0;
  std::vector<int> n_values;
  std::vector<int> nhat_values;
  /// min over suffixes w in Lambda^ell of the gap within X_{n_hat}^{w,x}.
  std::vector<double> min_gaps;
  /// epsilon^{n_hat}.
  std::vector<double> thresholds;
  std::vector<bool> passed;
  /// Passing set Q.
  std::vector<int> passing;
  /// True when only a sampled subset of suffixes fitted the budget.
  bool sampled = false;
  std::size_t suffixes_scanned = 0;
};

/// For each n: pass iff every two distinct points of X_{n_hat}^{w,x} are more
/// than epsilon^{n_hat} apart, for all w in Lambda^ell.
inline SeparationScan exp_separation_scan(const SystemParams& p, double x, int ell, double epsilon,
                                          std::span<const int> n_list, std::int64_t budget = kScanBudget,
                                          std::uint64_t seed = 0) {
  require(ell >= 0, "exp_separation_scan: ell must be >= 0");
  require(epsilon > 0.0, "exp_separation_scan: epsilon must be positive");
  SeparationScan scan;
  scan.x = x;
  scan.ell = ell;
  scan.epsilon = epsilon;
  const std::int64_t n_suffix = checked_pow(p.b(), ell, budget);
  require(n_suffix > 0, "exp_separation_scan: b^ell exceeds budget");

  for (int n : n_list) {
    const int nh = nhat(n, p.b(), p.gamma());
    double gap = std::numeric_limits<double>::infinity();
    if (nh > ell) {
      const std::int64_t per = checked_pow(p.b(), nh - ell, budget);
      require(per > 0, "exp_separation_scan: b^(n_hat - ell) exceeds budget");
      std::int64_t count = n_suffix;
      if (per * n_suffix > budget) {
        count = std::max<std::int64_t>(1, budget / per);
        scan.sampled = true;
      }
      std::vector<Word> suffixes;
      if (count == n_suffix) {
        for (std::int64_t s = 0; s < n_suffix; ++s) {
          Word w;
          std::int64_t r = s;
          for (int d = 0; d < ell; ++d) {
            w.push_back(static_cast<int>(r % p.b()));
            r /= p.b();
          }
          suffixes.push_back(std::move(w));
        }
      } else {
        suffixes = sample_words(p.b(), static_cast<std::size_t>(ell), static_cast<std::size_t>(count),
                                derive_seed(seed, static_cast<std::uint64_t>(n)));
      }
      scan.suffixes_scanned = std::max(scan.suffixes_scanned, suffixes.size());
      for (const auto& w : suffixes) {
        auto vals = detail::suffix_values(p, x, nh - ell, w);
        gap = std::min(gap, detail::sorted_min_gap(vals));
      }
    }
    const double thr = std::pow(epsilon, nh);
    const bool ok = gap > thr;
    scan.n_values.push_back(n);
    scan.nhat_values.push_back(nh);
    scan.min_gaps.push_back(gap);
    scan.thresholds.push_back(thr);
    scan.passed.push_back(ok);
    if (ok) scan.passing.push_back(n);
  }
  return scan;
}

/// Supremum of the epsilons for which every scanned n passes: min_n gap_n^{1/n_hat}.
inline double critical_epsilon(const SeparationScan& scan) {
  double eps = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scan.n_values.size(); ++i) {
    if (scan.nhat_values[i] <= scan.ell) continue;
    eps = std::min(eps, std::pow(scan.min_gaps[i], 1.0 / scan.nhat_values[i]));
  }
  return eps;
}

// ---------------------------------------------------------------------------
// Derivative separation

struct DerivativeSeparation {
  int k_best = 0;
  double value = 0.0;
  /// |S^(k)(x,i) - S^(k)(x,j)| for k = 0..Qmax.
  std::vector<double> per_order;
  /// 2 * tail bound at order k_best.
  double tail_budget = 0.0;
};

inline DerivativeSeparation derivative_separation(const SystemParams& p, double x, const Word& i, const Word& j,
                                                  int q_max, const TailPolicy& tail = TailPolicy::constant(0)) {
  require(!i.empty() && !j.empty() && i[0] != j[0], "derivative_separation: first digits must differ");
  require(q_max >= 0 && q_max <= PeriodicFn::kDefaultMaxDerivOrder, "derivative_separation: Qmax out of range");
  DerivativeSeparation out;
  out.value = -1.0;
  for (int k = 0; k <= q_max; ++k) {
    const auto si = eval_S_deriv(p, x, i, k, tail);
    const auto sj = eval_S_deriv(p, x, j, k, tail);
    const double v = std::abs(si.value - sj.value);
    out.per_order.push_back(v);
    if (v > out.value) {
      out.value = v;
      out.k_best = k;
      out.tail_budget = si.tail_bound + sj.tail_bound;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// (H) / (H*) dichotomy

enum class Dichotomy { H, H_star, undetermined };

inline std::string to_string(Dichotomy d) {
  switch (d) {
    case Dichotomy::H: return "H";
    case Dichotomy::H_star: return "H*";
    default: return "undetermined";
  }
}

struct DichotomyVerdict {
  Dichotomy verdict = Dichotomy::undetermined;
  /// Witness for (H): the pair attaining the largest gap.
  double witness_x = 0.0;
  Word witness_i;
  Word witness_j;
  /// sup over the grid and scanned pairs of |S(x,i) - S(x,j)|.
  double sup_gap = 0.0;
  /// 2 * tail bound + grid modulus.
  double error_budget = 0.0;
  /// For (H*): every scanned pair differs by at most this much at every x in [0,1].
  double degeneracy_bound = 0.0;
  int grid_size = 0;
  int word_depth = 0;
};

/// Scans words of length `word_depth` (continued with zeros to the truncation
/// depth) over an x-grid, comparing pairs whose first digits differ.
inline DichotomyVerdict condition_H_scan(const SystemParams& p, int x_grid_size, int word_depth,
                                         std::int64_t budget = kScanBudget) {
  require(x_grid_size >= 1 && word_depth >= 1, "condition_H_scan: grid and depth must be positive");
  const int b = p.b();
  int depth = word_depth;
  // Fit the enumeration into the work budget by shortening words.
  while (depth > 1) {
    const std::int64_t words = checked_pow(b, depth, budget);
    if (words > 0 && words * x_grid_size <= budget) break;
    --depth;
  }
  const int L = std::max(depth, p.truncation_depth());
  const Word zeros = Word::repeat(0, static_cast<std::size_t>(L - depth));
  const double gd = std::pow(p.gamma(), depth);

  DichotomyVerdict out;
  out.grid_size = x_grid_size;
  out.word_depth = depth;
  const double lipschitz = 2.0 * p.phi().sup_norm(1) / (b - p.gamma());
  out.error_budget = 2.0 * p.tail_bound(L) + lipschitz * 0.5 / x_grid_size;

  struct Extreme {
    double lo = std::numeric_limits<double>::infinity(), hi = -std::numeric_limits<double>::infinity();
    std::vector<int> lo_word, hi_word;
  };
  for (int g = 0; g < x_grid_size; ++g) {
    const double x = (g + 0.5) / x_grid_size;
    std::vector<Extreme> ext(b);
    for_each_word_value(p, x, depth, [&](const std::vector<int>& ds, double s, double point) {
      const double v = s + gd * eval_S(p, point, zeros).value;
      auto& e = ext[ds[0]];
      if (v < e.lo) {
        e.lo = v;
        e.lo_word = ds;
      }
      if (v > e.hi) {
        e.hi = v;
        e.hi_word = ds;
      }
    });
    for (int d1 = 0; d1 < b; ++d1)
      for (int d2 = 0; d2 < b; ++d2) {
        if (d1 == d2) continue;
        const double gap = ext[d1].hi - ext[d2].lo;
        if (gap > out.sup_gap) {
          out.sup_gap = gap;
          out.witness_x = x;
          out.witness_i = Word(std::vector<Word::digit_type>(ext[d1].hi_word.begin(), ext[d1].hi_word.end()));
          out.witness_j = Word(std::vector<Word::digit_type>(ext[d2].lo_word.begin(), ext[d2].lo_word.end()));
        }
      }
  }
  if (out.sup_gap > 10.0 * out.error_budget) {
    out.verdict = Dichotomy::H;
  } else if (out.sup_gap <= out.error_budget) {
    out.verdict = Dichotomy::H_star;
    out.degeneracy_bound = out.sup_gap + out.error_budget;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transversality

struct TransversalityCertificate {
  int t = 0;
  /// Certified: for z in I_a and all extensions i of h, j of h',
  /// |S'(z,i)|, |S'(z,j)| >= delta1 and |S'(z,i) - S'(z,j)| >= delta1.
  double delta1 = 0.0;
  Word h;
  Word h_prime;
  Word a;
  double x0 = 0.0;
  int grid_size = 0;
  /// Raw grid minima of |S'(z,h)|, |S'(z,h')| and |S'(z,h) - S'(z,h')| over I_a.
  double grid_min_h = 0.0;
  double grid_min_h_prime = 0.0;
  double grid_min_diff = 0.0;
  /// Lipschitz allowance between grid points.
  double modulus = 0.0;
  /// sup over extensions r of |S'(z, h r) - S'(z, h)|.
  double extension_bound = 0.0;
};

struct TransversalityResult {
  std::optional<TransversalityCertificate> certificate;
  /// Largest certified lower bound seen (may be <= 0 when nothing certifies).
  double best_bound = -std::numeric_limits<double>::infinity();
  std::int64_t candidates = 0;
};

namespace detail {

inline Word word_from_index(std::int64_t idx, int len, int b) {
  Word w;
  for (int d = 0; d < len; ++d) {
    w.push_back(static_cast<int>(idx % b));
    idx /= b;
  }
  return w;
}

struct TransversalityGeometry {
  double spacing;
  double modulus;
  double extension;
  int points;
};

inline TransversalityGeometry transversality_geometry(const SystemParams& p, int t, int grid_size) {
  const int b = p.b();
  const double len = dpow(b, -t);
  const int points = std::max(4, static_cast<int>(std::llround(grid_size * len)));
  const double spacing = len / points;
  const double lip = p.phi().sup_norm(2) / (static_cast<double>(b) * b - p.gamma());
  return {spacing, 0.5 * spacing * lip, std::pow(p.gamma() / b, t) * p.phi().sup_norm(1) / (b - p.gamma()), points};
}

}  // namespace detail

/// Searches h, h', a in Lambda^t over t in `t_list` for the triple with the
/// largest certified transversality constant on I_a.
inline TransversalityResult transversality_search(const SystemParams& p, std::span<const int> t_list, int grid_size,
                                                  double x0 = 0.3, std::int64_t budget = std::int64_t{1} << 28) {
  require(grid_size >= 1, "transversality_search: grid size must be positive");
  const int b = p.b();
  TransversalityResult res;
  for (int t : t_list) {
    require(t >= 1, "transversality_search: t must be >= 1");
    const std::int64_t nw = checked_pow(b, t, budget);
    require(nw > 0, "transversality_search: b^t exceeds budget");
    const auto geo = detail::transversality_geometry(p, t, grid_size);
    require(nw * nw <= budget / nw / geo.points, "transversality_search: b^3t grid work exceeds budget");
    std::vector<Word> words;
    for (std::int64_t i = 0; i < nw; ++i) words.push_back(detail::word_from_index(i, t, b));

    for (std::int64_t ai = 0; ai < nw; ++ai) {
      const Word& a = words[ai];
      const double left = word_cell_left(a, b);
      std::vector<std::vector<double>> d(nw, std::vector<double>(geo.points));
      std::vector<double> min_abs(nw, std::numeric_limits<double>::infinity());
      for (std::int64_t hi = 0; hi < nw; ++hi)
        for (int g = 0; g < geo.points; ++g) {
          const double z = left + (g + 0.5) * geo.spacing;
          d[hi][g] = eval_S_deriv(p, z, words[hi], 1).value;
          min_abs[hi] = std::min(min_abs[hi], std::abs(d[hi][g]));
        }
      for (std::int64_t hi = 0; hi < nw; ++hi) {
        const double l1 = min_abs[hi] - geo.modulus - geo.extension;
        if (l1 <= res.best_bound) continue;
        for (std::int64_t hj = hi + 1; hj < nw; ++hj) {
          ++res.candidates;
          const double l1p = min_abs[hj] - geo.modulus - geo.extension;
          if (l1p <= res.best_bound) continue;
          double md = std::numeric_limits<double>::infinity();
          for (int g = 0; g < geo.points; ++g) md = std::min(md, std::abs(d[hi][g] - d[hj][g]));
          const double l2 = md - 2.0 * geo.modulus - 2.0 * geo.extension;
          const double bound = std::min({l1, l1p, l2});
          if (bound > res.best_bound) {
            res.best_bound = bound;
            if (bound > 0.0) {
              TransversalityCertificate c;
              c.t = t;
              c.delta1 = bound;
              c.h = words[hi];
              c.h_prime = words[hj];
              c.a = a;
              c.x0 = x0;
              c.grid_size = grid_size;
              c.grid_min_h = min_abs[hi];
              c.grid_min_h_prime = min_abs[hj];
              c.grid_min_diff = md;
              c.modulus = geo.modulus;
              c.extension_bound = geo.extension;
              res.certificate = c;
            }
          }
        }
      }
    }
  }
  return res;
}

struct CertificateCheck {
  bool valid = false;
  double min_h = 0.0;
  double min_h_prime = 0.0;
  double min_diff = 0.0;
};

/// Re-evaluates a certificate on a `refine`-times finer grid of I_a, also along
/// `extensions` random continuations of h and h'; every quantity must stay
/// above delta1 * (1 - allowance).
inline CertificateCheck validate_certificate(const SystemParams& p, const TransversalityCertificate& c, int refine = 4,
                                             int extensions = 8, double allowance = 1e-9, std::uint64_t seed = 7) {
  const int b = p.b();
  const auto geo = detail::transversality_geometry(p, c.t, c.grid_size * refine);
  const double left = word_cell_left(c.a, b);
  CertificateCheck out;
  out.min_h = out.min_h_prime = out.min_diff = std::numeric_limits<double>::infinity();
  std::vector<std::pair<Word, Word>> pairs{{c.h, c.h_prime}};
  for (int e = 0; e < extensions; ++e) {
    const auto ext = sample_words(b, 6, 2, derive_seed(seed, static_cast<std::uint64_t>(e)));
    pairs.emplace_back(c.h + ext[0], c.h_prime + ext[1]);
  }
  for (int g = 0; g < geo.points; ++g) {
    const double z = left + (g + 0.5) * geo.spacing;
    for (const auto& [hi, hj] : pairs) {
      const double di = eval_S_deriv(p, z, hi, 1).value, dj = eval_S_deriv(p, z, hj, 1).value;
      out.min_h = std::min(out.min_h, std::abs(di));
      out.min_h_prime = std::min(out.min_h_prime, std::abs(dj));
      out.min_diff = std::min(out.min_diff, std::abs(di - dj));
    }
  }
  const double floor = c.delta1 * (1.0 - allowance);
  out.valid = out.min_h >= floor && out.min_h_prime >= floor && out.min_diff >= floor;
  return out;
}

}  // namespace solenoid
