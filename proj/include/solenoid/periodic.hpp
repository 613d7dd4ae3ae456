#pragma once

// Real-analytic Z-periodic functions as finite trigonometric polynomials
//   f(x) = sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x),  k = 0..K.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "solenoid/common.hpp"

namespace solenoid {

struct FourierTerm {
  int k = 0;
  double cos_coef = 0.0;
  double sin_coef = 0.0;

  friend bool operator==(const FourierTerm&, const FourierTerm&) = default;
};

class PeriodicFn {
 public:
  static constexpr int kDefaultMaxDerivOrder = 8;

  PeriodicFn() : a_(1, 0.0), b_(1, 0.0) {}

  /// cos_coefs[k] = a_k for k = 0..K; sin_coefs[k] = b_k (entry 0 is ignored).
  PeriodicFn(std::vector<double> cos_coefs, std::vector<double> sin_coefs)
      : a_(std::move(cos_coefs)), b_(std::move(sin_coefs)) {
    if (a_.empty()) a_.push_back(0.0);
    const std::size_t n = std::max(a_.size(), b_.size());
    a_.resize(n, 0.0);
    b_.resize(n, 0.0);
    b_[0] = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      require(std::isfinite(a_[k]) && std::isfinite(b_[k]), "PeriodicFn: non-finite coefficient");
    trim();
  }

  static PeriodicFn from_terms(std::span<const FourierTerm> terms) {
    int kmax = 0;
    for (const auto& t : terms) {
      require(t.k >= 0, "PeriodicFn: negative frequency");
      kmax = std::max(kmax, t.k);
    }
    std::vector<double> a(kmax + 1, 0.0), b(kmax + 1, 0.0);
    for (const auto& t : terms) {
      a[t.k] += t.cos_coef;
      if (t.k > 0) b[t.k] += t.sin_coef;
    }
    return PeriodicFn(std::move(a), std::move(b));
  }

  static PeriodicFn constant(double c) { return PeriodicFn({c}, {}); }

  static PeriodicFn cosine(int k = 1, double amplitude = 1.0) {
    std::vector<double> a(k + 1, 0.0);
    a[k] = amplitude;
    return PeriodicFn(std::move(a), {});
  }

  static PeriodicFn sine(int k = 1, double amplitude = 1.0) {
    std::vector<double> b(k + 1, 0.0);
    b[k] = amplitude;
    return PeriodicFn({0.0}, std::move(b));
  }

  int degree() const { return static_cast<int>(a_.size()) - 1; }
  double cos_coef(int k) const { return k <= degree() ? a_[k] : 0.0; }
  double sin_coef(int k) const { return (k >= 1 && k <= degree()) ? b_[k] : 0.0; }

  bool is_zero() const {
    return std::all_of(a_.begin(), a_.end(), [](double v) { return v == 0.0; }) &&
           std::all_of(b_.begin(), b_.end(), [](double v) { return v == 0.0; });
  }

  /// Nonzero terms, ascending in k.
  std::vector<FourierTerm> terms() const {
    std::vector<FourierTerm> out;
    for (int k = 0; k <= degree(); ++k)
      if (a_[k] != 0.0 || b_[k] != 0.0) out.push_back({k, a_[k], b_[k]});
    return out;
  }

  double eval(double x) const { return eval_deriv_unchecked(x, 0); }
  double operator()(double x) const { return eval(x); }

  double eval_deriv(double x, int order, int max_order = kDefaultMaxDerivOrder) const {
    require(order >= 0 && order <= max_order, "eval_deriv: derivative order out of range");
    return eval_deriv_unchecked(x, order);
  }

  /// Certified upper bound sum_k (2 pi k)^order (|a_k| + |b_k|) on sup |f^(order)|.
  double sup_norm(int order) const {
    require(order >= 0, "sup_norm: negative order");
    double s = 0.0;
    for (int k = (order == 0 ? 0 : 1); k <= degree(); ++k)
      s += std::pow(two_pi * k, order) * (std::abs(a_[k]) + std::abs(b_[k]));
    return s;
  }

  /// x -> f(m x).
  PeriodicFn compose_frequency(int m) const {
    require(m >= 1, "compose_frequency: multiplier must be positive");
    std::vector<double> a(degree() * m + 1, 0.0), b(degree() * m + 1, 0.0);
    for (int k = 0; k <= degree(); ++k) {
      a[k * m] = a_[k];
      b[k * m] = b_[k];
    }
    return PeriodicFn(std::move(a), std::move(b));
  }

  PeriodicFn scaled(double s) const {
    auto a = a_, b = b_;
    for (auto& v : a) v *= s;
    for (auto& v : b) v *= s;
    return PeriodicFn(std::move(a), std::move(b));
  }

  friend PeriodicFn operator+(const PeriodicFn& f, const PeriodicFn& g) {
    const std::size_t n = std::max(f.a_.size(), g.a_.size());
    std::vector<double> a(n, 0.0), b(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      a[k] = (k < f.a_.size() ? f.a_[k] : 0.0) + (k < g.a_.size() ? g.a_[k] : 0.0);
      b[k] = (k < f.b_.size() ? f.b_[k] : 0.0) + (k < g.b_.size() ? g.b_[k] : 0.0);
    }
    return PeriodicFn(std::move(a), std::move(b));
  }

  friend PeriodicFn operator-(const PeriodicFn& f, const PeriodicFn& g) { return f + g.scaled(-1.0); }

  friend bool operator==(const PeriodicFn&, const PeriodicFn&) = default;

 private:
  void trim() {
    while (a_.size() > 1 && a_.back() == 0.0 && b_.back() == 0.0) {
      a_.pop_back();
      b_.pop_back();
    }
  }

  // Harmonics by angle addition from one sincos; the order-th derivative
  // rotates each harmonic by order * pi/2.
  double eval_deriv_unchecked(double x, int order) const {
    const int K = degree();
    double sum = (order == 0) ? a_[0] : 0.0;
    if (K == 0) return sum;
    const double theta = two_pi * frac(x);
    const double c1 = std::cos(theta), s1 = std::sin(theta);
    double ck = 1.0, sk = 0.0;
    for (int k = 1; k <= K; ++k) {
      const double cn = ck * c1 - sk * s1;
      sk = sk * c1 + ck * s1;
      ck = cn;
      if (a_[k] == 0.0 && b_[k] == 0.0) continue;
      double c = ck, s = sk;
      switch (order & 3) {
        case 1: c = -sk; s = ck; break;
        case 2: c = -ck; s = -sk; break;
        case 3: c = sk; s = -ck; break;
        default: break;
      }
      const double scale = order == 0 ? 1.0 : std::pow(two_pi * k, order);
      sum += scale * (a_[k] * c + b_[k] * s);
    }
    return sum;
  }

  std::vector<double> a_;
  std::vector<double> b_;
};

/// phi(x) = psi(b x) - gamma psi(x). Along any word the series of phi
/// telescopes to psi(x), which makes this the canonical degenerate case.
inline PeriodicFn cohomological_phi(const PeriodicFn& psi, int b, double gamma) {
  require(b >= 2, "cohomological_phi: b must be >= 2");
  require(gamma > 0.0 && gamma < 1.0, "cohomological_phi: gamma must lie in (0,1)");
  return psi.compose_frequency(b) - psi.scaled(gamma);
}

}  // namespace solenoid
