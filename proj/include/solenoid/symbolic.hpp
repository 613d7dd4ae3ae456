#pragma once

// Words over {0..b-1}, the fibre series
//   S(x, j) = sum_{n>=1} gamma^{n-1} phi(tau_n(x)),  tau_n(x) = (x + j_1 + ... + j_n b^{n-1}) / b^n,
// its x-derivatives, the scale map n -> n_hat, and orbits of
//   T(x, y) = (b x mod 1, gamma y + phi(x)).

#include <cmath>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "solenoid/common.hpp"
#include "solenoid/periodic.hpp"

namespace solenoid {

// ---------------------------------------------------------------------------
// Word

class Word {
 public:
  using digit_type = std::uint8_t;
  static constexpr int kMaxBase = 36;

  Word() = default;
  explicit Word(std::vector<digit_type> digits) : digits_(std::move(digits)) {}
  Word(std::initializer_list<int> digits) {
    for (int d : digits) {
      require(d >= 0 && d < 256, "Word: digit out of range");
      digits_.push_back(static_cast<digit_type>(d));
    }
  }

  static Word repeat(int digit, std::size_t n) {
    return Word(std::vector<digit_type>(n, static_cast<digit_type>(digit)));
  }

  /// Parses "10210"; digits 0-9 then a-z.
  static Word parse(std::string_view text, int b) {
    require(b >= 2 && b <= kMaxBase, "Word::parse: base out of range");
    std::vector<digit_type> ds;
    ds.reserve(text.size());
    for (char c : text) {
      int d = -1;
      if (c >= '0' && c <= '9') d = c - '0';
      else if (c >= 'a' && c <= 'z') d = c - 'a' + 10;
      require(d >= 0 && d < b, "Word::parse: invalid digit '" + std::string(1, c) + "'");
      ds.push_back(static_cast<digit_type>(d));
    }
    return Word(std::move(ds));
  }

  std::string str() const {
    std::string s;
    s.reserve(digits_.size());
    for (auto d : digits_) s.push_back(d < 10 ? static_cast<char>('0' + d) : static_cast<char>('a' + d - 10));
    return s;
  }

  std::size_t size() const { return digits_.size(); }
  bool empty() const { return digits_.empty(); }
  int operator[](std::size_t i) const { return digits_[i]; }
  const std::vector<digit_type>& digits() const { return digits_; }

  void push_back(int d) { digits_.push_back(static_cast<digit_type>(d)); }

  Word prefix(std::size_t k) const {
    return Word(std::vector<digit_type>(digits_.begin(), digits_.begin() + std::min(k, size())));
  }

  bool is_prefix_of(const Word& other) const {
    return size() <= other.size() && std::equal(digits_.begin(), digits_.end(), other.digits_.begin());
  }

  bool valid_for_base(int b) const {
    return std::all_of(digits_.begin(), digits_.end(), [b](digit_type d) { return d < b; });
  }

  friend Word operator+(const Word& u, const Word& v) {
    std::vector<digit_type> ds = u.digits_;
    ds.insert(ds.end(), v.digits_.begin(), v.digits_.end());
    return Word(std::move(ds));
  }

  auto operator<=>(const Word&) const = default;

 private:
  std::vector<digit_type> digits_;
};

/// w(x) = (x + w_1 + w_2 b + ... + w_n b^{n-1}) / b^n; the identity for the empty word.
inline double word_point(const Word& w, double x, int b) {
  double t = x;
  for (std::size_t i = 0; i < w.size(); ++i) t = (t + w[i]) / b;
  return t;
}

/// Left endpoint of I_w, the level-|w| b-adic cell {w(x) : x in [0,1)}.
inline double word_cell_left(const Word& w, int b) { return word_point(w, 0.0, b); }

// ---------------------------------------------------------------------------
// SystemParams

class SystemParams {
 public:
  static constexpr int kMaxTruncationDepth = 4096;

  SystemParams(int b, double gamma, PeriodicFn phi, double truncation_tol = 1e-10)
      : b_(b), gamma_(gamma), phi_(std::move(phi)), tol_(truncation_tol) {
    require(b >= 2 && b <= Word::kMaxBase, "SystemParams: b must be in [2, 36]");
    require(gamma > 0.0 && gamma < 1.0, "SystemParams: gamma must lie in (0,1)");
    require(truncation_tol > 0.0, "SystemParams: truncation_tol must be positive");
    sup0_ = phi_.sup_norm(0);
    depth_ = 0;
    while (tail_bound(depth_) > tol_) {
      ++depth_;
      require(depth_ <= kMaxTruncationDepth, "SystemParams: truncation depth too large");
    }
  }

  int b() const { return b_; }
  double gamma() const { return gamma_; }
  const PeriodicFn& phi() const { return phi_; }
  double truncation_tol() const { return tol_; }
  /// Smallest p with gamma^p ||phi|| / (1 - gamma) <= truncation_tol.
  int truncation_depth() const { return depth_; }

  /// Bound on the contribution of digits past `length` to S^(k):
  /// sup|phi^(k)| b^-k (gamma/b^k)^length / (1 - gamma/b^k).
  double tail_bound(int length, int order = 0) const {
    const double r = gamma_ / dpow(b_, order);
    const double sup = order == 0 ? sup0_ : phi_.sup_norm(order);
    return sup * dpow(b_, -order) * std::pow(r, length) / (1.0 - r);
  }

  /// sup_x |S(x, j)| over all infinite words.
  double fibre_bound() const { return sup0_ / (1.0 - gamma_); }

 private:
  int b_;
  double gamma_;
  PeriodicFn phi_;
  double tol_;
  double sup0_ = 0.0;
  int depth_ = 0;
};

// ---------------------------------------------------------------------------
// Series evaluation

/// How a finite word is continued to an infinite one.
struct TailPolicy {
  enum class Kind { none, constant, seeded };
  Kind kind = Kind::none;
  int digit = 0;
  std::uint64_t seed = 0;

  static TailPolicy none() { return {}; }
  static TailPolicy constant(int d) { return {Kind::constant, d, 0}; }
  static TailPolicy seeded(std::uint64_t s) { return {Kind::seeded, 0, s}; }
};

struct SeriesValue {
  double value = 0.0;
  /// Distance to the value of any infinite continuation of the digits summed.
  double tail_bound = 0.0;
};

/// sum_{n=1}^{len} gamma^{n-1} b^{-nk} phi^{(k)}(tau_n(x)), digits supplied by `digit_at(n-1)`.
template <class DigitAt>
double series_sum(const SystemParams& p, double x, std::size_t len, DigitAt&& digit_at, int order = 0) {
  const int b = p.b();
  const double ratio = p.gamma() / dpow(b, order);
  double scale = dpow(b, -order);
  double tau = x;
  double sum = 0.0;
  for (std::size_t n = 0; n < len; ++n) {
    tau = (tau + digit_at(n)) / b;
    sum += scale * (order == 0 ? p.phi().eval(tau) : p.phi().eval_deriv(tau, order));
    scale *= ratio;
  }
  return sum;
}

namespace detail {

inline void check_word(const SystemParams& p, const Word& w) {
  require(w.valid_for_base(p.b()), "word has a digit >= b");
}

inline std::vector<int> extended_digits(const SystemParams& p, const Word& w, const TailPolicy& tail) {
  std::vector<int> ds(w.digits().begin(), w.digits().end());
  if (tail.kind == TailPolicy::Kind::none) return ds;
  const std::size_t target = std::max<std::size_t>(w.size(), p.truncation_depth());
  if (tail.kind == TailPolicy::Kind::constant) {
    require(tail.digit >= 0 && tail.digit < p.b(), "tail digit out of range");
    ds.resize(target, tail.digit);
  } else {
    DigitSource src(p.b(), tail.seed);
    while (ds.size() < target) ds.push_back(src.next());
  }
  return ds;
}

}  // namespace detail

inline SeriesValue eval_S_deriv(const SystemParams& p, double x, const Word& w, int order,
                                const TailPolicy& tail = TailPolicy::none()) {
  detail::check_word(p, w);
  require(order >= 0 && order <= PeriodicFn::kDefaultMaxDerivOrder, "eval_S_deriv: order out of range");
  const auto ds = detail::extended_digits(p, w, tail);
  const double v = series_sum(p, x, ds.size(), [&](std::size_t i) { return ds[i]; }, order);
  return {v, p.tail_bound(static_cast<int>(ds.size()), order)};
}

inline SeriesValue eval_S(const SystemParams& p, double x, const Word& w,
                          const TailPolicy& tail = TailPolicy::none()) {
  return eval_S_deriv(p, x, w, 0, tail);
}

/// |S(x, w i) - S(x, w) - gamma^|w| S(w(x), i)| on finite words.
inline double cocycle_check(const SystemParams& p, double x, const Word& w, const Word& i) {
  require(!w.empty(), "cocycle_check: |w| must be >= 1");
  const double whole = eval_S(p, x, w + i).value;
  const double head = eval_S(p, x, w).value;
  const double rest = eval_S(p, word_point(w, x, p.b()), i).value;
  return std::abs(whole - head - std::pow(p.gamma(), static_cast<double>(w.size())) * rest);
}

/// Visits every word of length `len` (first digit slowest) with S(x, word) and word(x).
/// `fn(const std::vector<int>& digits, double value, double point)`.
template <class Fn>
void for_each_word_value(const SystemParams& p, double x, int len, Fn&& fn) {
  const int b = p.b();
  const double gamma = p.gamma();
  std::vector<int> digits(len, 0);
  if (len == 0) {
    fn(digits, 0.0, x);
    return;
  }
  std::vector<double> tau(len + 1), val(len + 1), scale(len + 1);
  tau[0] = x;
  val[0] = 0.0;
  scale[0] = 1.0;
  int depth = 0;
  digits[0] = -1;
  while (depth >= 0) {
    if (++digits[depth] >= b) {
      --depth;
      continue;
    }
    tau[depth + 1] = (tau[depth] + digits[depth]) / b;
    val[depth + 1] = val[depth] + scale[depth] * p.phi().eval(tau[depth + 1]);
    scale[depth + 1] = scale[depth] * gamma;
    if (depth + 1 == len) {
      fn(static_cast<const std::vector<int>&>(digits), val[len], tau[len]);
    } else {
      ++depth;
      digits[depth] = -1;
    }
  }
}

// ---------------------------------------------------------------------------
// Scales

namespace detail {

// gamma^e in extended precision by repeated squaring.
inline long double powl_exact(long double base, long long e) {
  long double r = 1.0L;
  for (; e > 0; e >>= 1) {
    if (e & 1) r *= base;
    base *= base;
  }
  return r;
}

}  // namespace detail

/// The unique n_hat with gamma^n_hat <= b^-n < gamma^(n_hat - 1).
inline int nhat(int n, int b, double gamma) {
  require(b >= 2 && gamma > 0.0 && gamma < 1.0, "nhat: need b >= 2 and gamma in (0,1)");
  require(n >= 0, "nhat: n must be nonnegative");
  const long double target = detail::powl_exact(1.0L / b, n);
  long long k = static_cast<long long>(std::ceil(n * std::log(static_cast<double>(b)) / std::log(1.0 / gamma)));
  const long double g = gamma;
  while (detail::powl_exact(g, k) > target) ++k;
  while (k >= 1 && !(target < detail::powl_exact(g, k - 1))) --k;
  return static_cast<int>(k);
}

/// floor(m log_b(1/gamma)): the largest L with b^L <= gamma^-m.
inline int scale_floor(int m, int b, double gamma) {
  require(m >= 0, "scale_floor: m must be nonnegative");
  const long double gm = detail::powl_exact(static_cast<long double>(gamma), m);
  long long L = static_cast<long long>(std::floor(m * std::log(1.0 / gamma) / std::log(static_cast<double>(b))));
  if (L < 0) L = 0;
  while (detail::powl_exact(1.0L / b, L + 1) >= gm) ++L;
  while (L > 0 && detail::powl_exact(1.0L / b, L) < gm) --L;
  return static_cast<int>(L);
}

// ---------------------------------------------------------------------------
// Orbits

struct OrbitPoint {
  double x = 0.0;
  double y = 0.0;
};

struct OrbitSample {
  std::vector<OrbitPoint> points;
  long burn_in = 0;
  std::uint64_t seed = 0;
};

/// x is carried as a 64-bit binary fraction so x -> b x mod 1 is exact
/// integer multiplication. Multiplying by b pushes log2(b) bits per step out
/// of the top (and, for even b, zeros in at the bottom), so every `interval`
/// steps the low `bits` bits are refilled from the seeded stream. Lebesgue
/// measure is invariant under x -> b x mod 1, hence refilling low bits keeps
/// the base point generic without changing the empirical statistics.
struct ReseedPolicy {
  bool enabled = true;
  int bits = 40;
  /// 0 selects floor(bits / log2 b), i.e. 40 steps for b = 2.
  int interval = 0;

  int effective_interval(int b) const {
    if (interval > 0) return interval;
    return std::max(1, static_cast<int>(bits / std::log2(static_cast<double>(b))));
  }
};

/// Streams T-orbit points z_k for k = n_burn .. n_burn + n_keep - 1 to `sink(OrbitPoint)`.
template <class Sink>
void stream_orbit(const SystemParams& p, OrbitPoint z0, long n_burn, long n_keep, std::uint64_t seed,
                  Sink&& sink, const ReseedPolicy& reseed = {}) {
  require(n_keep >= 1, "iterate_T: n_keep must be >= 1");
  require(n_burn >= 0, "iterate_T: n_burn must be >= 0");
  require(reseed.bits >= 0 && reseed.bits < 64, "iterate_T: reseed bits out of range");
  std::mt19937_64 rng(seed);
  const std::uint64_t b = static_cast<std::uint64_t>(p.b());
  const std::uint64_t mask = reseed.bits == 0 ? 0 : ((std::uint64_t{1} << reseed.bits) - 1);
  const int interval = reseed.effective_interval(p.b());
  const double scaled = std::ldexp(frac(z0.x), 64);
  std::uint64_t X = scaled >= 0x1.0p64 ? ~std::uint64_t{0} : static_cast<std::uint64_t>(scaled);
  double y = z0.y;
  const long total = n_burn + n_keep;
  for (long k = 0; k < total; ++k) {
    if (reseed.enabled && k > 0 && k % interval == 0) X = (X & ~mask) | (rng() & mask);
    const double x = static_cast<double>(X >> 11) * 0x1.0p-53;
    if (k >= n_burn) sink(OrbitPoint{x, y});
    y = p.gamma() * y + p.phi().eval(x);
    X *= b;
  }
}

inline OrbitSample iterate_T(const SystemParams& p, OrbitPoint z0, long n_burn, long n_keep, std::uint64_t seed,
                             const ReseedPolicy& reseed = {}) {
  OrbitSample out;
  out.burn_in = n_burn;
  out.seed = seed;
  out.points.reserve(static_cast<std::size_t>(n_keep));
  stream_orbit(p, z0, n_burn, n_keep, seed, [&](OrbitPoint z) { out.points.push_back(z); }, reseed);
  return out;
}

// ---------------------------------------------------------------------------
// Word sampling

/// I.i.d. uniform words, reproducible under the seed.
class WordSampler {
 public:
  WordSampler(int b, std::size_t length, std::uint64_t seed) : src_(b, seed), length_(length) {
    require(b >= 2 && b <= Word::kMaxBase, "WordSampler: base out of range");
  }

  Word next() {
    std::vector<Word::digit_type> ds(length_);
    for (auto& d : ds) d = static_cast<Word::digit_type>(src_.next());
    return Word(std::move(ds));
  }

 private:
  DigitSource src_;
  std::size_t length_;
};

inline std::vector<Word> sample_words(int b, std::size_t length, std::size_t count, std::uint64_t seed) {
  WordSampler sampler(b, length, seed);
  std::vector<Word> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sampler.next());
  return out;
}

}  // namespace solenoid
