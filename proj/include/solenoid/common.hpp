#pragma once

// Shared numeric helpers for the solenoid library: error type, b-adic
// arithmetic, base-b logarithms, seeded digit streams and least squares.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace solenoid {

/// Raised whenever an operation's precondition is violated by caller input.
class rejected_input : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline void require(bool ok, const std::string& what) {
  if (!ok) throw rejected_input(what);
}

/// Fractional part in [0,1).
inline double frac(double x) {
  double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t d) {
  std::int64_t q = a / d;
  if ((a % d != 0) && ((a < 0) != (d < 0))) --q;
  return q;
}

/// b^e as an integer, or -1 when it exceeds `limit`.
inline std::int64_t checked_pow(std::int64_t b, int e,
                                std::int64_t limit = std::numeric_limits<std::int64_t>::max()) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) {
    if (r > limit / b) return -1;
    r *= b;
  }
  return r;
}

/// b^e in double; exact whenever b^e < 2^53.
inline double dpow(int b, int e) {
  double r = 1.0;
  double base = static_cast<double>(b);
  if (e < 0) {
    base = 1.0 / base;
    e = -e;
  }
  for (; e > 0; e >>= 1) {
    if (e & 1) r *= base;
    base *= base;
  }
  return r;
}

/// log base b; exact for powers of two when b is a power of two.
inline double log_base(double w, int b) {
  if (std::has_single_bit(static_cast<unsigned>(b)))
    return std::log2(w) / std::countr_zero(static_cast<unsigned>(b));
  return std::log(w) / std::log(static_cast<double>(b));
}

/// Deepest b-adic level whose cell indices stay exact in a double (2^45 cells per unit).
inline int max_level(int b) {
  return static_cast<int>(std::floor(45.0 / std::log2(static_cast<double>(b)) + 1e-12));
}

/// Index of the level-`level` b-adic cell containing y.
inline std::int64_t cell_index(double y, int b, int level) {
  return static_cast<std::int64_t>(std::floor(y * dpow(b, level)));
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Independent child seed for shard `k` of a seeded computation.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t s = seed ^ (0xD1B54A32D192ED03ull * (k + 1));
  splitmix64(s);
  return splitmix64(s);
}

/// Uniform base-b digits drawn from a 64-bit engine.
///
/// Each engine output is consumed most-significant digit first by repeated
/// multiply-high, so one draw yields several digits. At least 8 bits of the
/// draw stay unused.
class DigitSource {
  __extension__ typedef unsigned __int128 u128;

 public:
  DigitSource(int b, std::uint64_t seed) : engine_(seed), b_(static_cast<std::uint64_t>(b)) {
    per_draw_ = std::max(1, static_cast<int>(56.0 / std::log2(static_cast<double>(b))));
  }

  int next() {
    if (left_ == 0) {
      buf_ = engine_();
      left_ = per_draw_;
    }
    --left_;
    const u128 prod = static_cast<u128>(buf_) * b_;
    buf_ = static_cast<std::uint64_t>(prod);
    return static_cast<int>(prod >> 64);
  }

  std::uint64_t raw() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t b_;
  std::uint64_t buf_ = 0;
  int per_draw_ = 1;
  int left_ = 0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;
  double rms = 0.0;
};

/// Ordinary least squares y ~ slope * x + intercept.
inline LinearFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, "least_squares: need >= 2 paired points");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  require(sxx > 0, "least_squares: degenerate abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double r = ys[i] - (fit.slope * xs[i] + fit.intercept);
    fit.residuals.push_back(r);
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / n);
  return fit;
}

}  // namespace solenoid
