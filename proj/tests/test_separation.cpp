#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "solenoid/separation.hpp"

using namespace solenoid;
using Catch::Approx;

namespace {

const SystemParams& ref_params() {
  static const SystemParams p(2, 0.4, PeriodicFn::cosine());
  return p;
}

const std::vector<oracle::Trig> kCosine{{1, 1.0L, 0.0L}};

std::vector<int> digits(const Word& w) { return {w.digits().begin(), w.digits().end()}; }

Word W(std::string_view s) { return Word::parse(s, 2); }

}  // namespace

TEST_CASE("min_gap agrees with brute force over prefixes") {
  const auto& p = ref_params();
  for (const char* suffix : {"0", "1", "01", "110"}) {
    const Word w = W(suffix);
    for (int n : {6, 9}) {
      std::vector<long double> vals;
      for (auto j : oracle::all_words(2, n - static_cast<int>(w.size()))) {
        j.insert(j.end(), w.digits().begin(), w.digits().end());
        vals.push_back(oracle::S(kCosine, 2, 0.4L, 0.3L, j));
      }
      std::sort(vals.begin(), vals.end());
      long double gap = INFINITY;
      for (std::size_t i = 1; i < vals.size(); ++i) gap = std::min(gap, vals[i] - vals[i - 1]);
      CHECK(min_gap(p, 0.3, w, n) == Approx(static_cast<double>(gap)).epsilon(1e-6).margin(1e-13));
    }
  }
  CHECK_THROWS_AS(min_gap(p, 0.3, W("0101"), 4), rejected_input);
  CHECK_THROWS_AS(min_gap(p, 0.3, W("0"), 40, 1000), rejected_input);
}

TEST_CASE("separation scan is reproducible and monotone in epsilon") {
  const auto& p = ref_params();
  const std::vector<int> ns{8, 10, 12, 14};
  const auto a = exp_separation_scan(p, 0.3, 4, 0.2, ns);
  const auto b = exp_separation_scan(p, 0.3, 4, 0.2, ns);
  CHECK(a.min_gaps == b.min_gaps);
  CHECK(a.passing == b.passing);
  CHECK_FALSE(a.sampled);
  CHECK(a.suffixes_scanned == 16);
  // Scanning n in a different order changes nothing per n.
  const std::vector<int> rev{14, 12, 10, 8};
  const auto r = exp_separation_scan(p, 0.3, 4, 0.2, rev);
  for (std::size_t i = 0; i < ns.size(); ++i) CHECK(r.min_gaps[ns.size() - 1 - i] == a.min_gaps[i]);

  const double crit = critical_epsilon(a);
  CHECK(crit > 0.0);
  CHECK(crit < 1.0);
  std::vector<int> prev_pass = ns;
  for (double eps : {0.5 * crit, 0.99 * crit, 1.01 * crit, 0.5, 0.9}) {
    const auto s = exp_separation_scan(p, 0.3, 4, eps, ns);
    // A larger epsilon can only shrink the passing set.
    for (int n : s.passing) CHECK(std::find(prev_pass.begin(), prev_pass.end(), n) != prev_pass.end());
    prev_pass = s.passing;
    if (eps < crit) CHECK(s.passing == ns);
  }
  CHECK(exp_separation_scan(p, 0.3, 4, 1.01 * crit, ns).passing.size() < ns.size());
  CHECK_THROWS_AS(exp_separation_scan(p, 0.3, 4, 0.0, ns), rejected_input);
}

TEST_CASE("separation scan gap is the minimum over suffixes") {
  const auto& p = ref_params();
  const std::vector<int> ns{10};
  const auto s = exp_separation_scan(p, 0.7, 2, 0.1, ns);
  const int nh = nhat(10, 2, 0.4);
  double expect = INFINITY;
  for (const char* w : {"00", "01", "10", "11"}) expect = std::min(expect, min_gap(p, 0.7, W(w), nh));
  CHECK(s.min_gaps[0] == expect);
  CHECK(s.nhat_values[0] == 8);
}

TEST_CASE("separation scan samples suffixes beyond the budget") {
  const auto& p = ref_params();
  const std::vector<int> ns{12};
  const auto s = exp_separation_scan(p, 0.3, 6, 0.2, ns, 1 << 9, 3);
  CHECK(s.sampled);
  CHECK(s.suffixes_scanned < 64);
  CHECK(s.min_gaps == exp_separation_scan(p, 0.3, 6, 0.2, ns, 1 << 9, 3).min_gaps);
}

TEST_CASE("critical epsilon is the smallest per-scale separation rate") {
  const auto& p = ref_params();
  std::vector<int> ns;
  for (int n = 8; n <= 16; ++n) ns.push_back(n);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  for (int i = 0; i < 5; ++i) {
    const auto s = exp_separation_scan(p, ux(rng), 4, 0.1, ns);
    const double crit = critical_epsilon(s);
    CHECK(crit > 0.0);
    double lo = INFINITY;
    for (std::size_t k = 0; k < ns.size(); ++k) lo = std::min(lo, std::pow(s.min_gaps[k], 1.0 / s.nhat_values[k]));
    CHECK(crit == lo);
    CHECK(exp_separation_scan(p, s.x, 4, 0.999 * crit, ns).passing == ns);
  }
}

TEST_CASE("derivative separation") {
  const auto& p = ref_params();
  const Word i = W("0110"), j = W("1001");
  const auto d = derivative_separation(p, 0.3, i, j, 4);
  REQUIRE(d.per_order.size() == 5);
  for (int k = 0; k <= 4; ++k) {
    auto di = digits(i), dj = digits(j);
    di.resize(p.truncation_depth(), 0);
    dj.resize(p.truncation_depth(), 0);
    const long double ref = std::abs(oracle::S_deriv(kCosine, 2, 0.4L, 0.3L, di, k) -
                                     oracle::S_deriv(kCosine, 2, 0.4L, 0.3L, dj, k));
    CHECK(d.per_order[k] == Approx(static_cast<double>(ref)).epsilon(1e-9).margin(1e-12));
  }
  CHECK(d.value == *std::max_element(d.per_order.begin(), d.per_order.end()));
  CHECK(d.per_order[d.k_best] == d.value);
  // Symmetric in the pair.
  const auto e = derivative_separation(p, 0.3, j, i, 4);
  CHECK(e.k_best == d.k_best);
  CHECK(e.value == d.value);
  // Extending both words past the truncation depth moves each order by at most the tail budget.
  const Word pad = Word::repeat(0, p.truncation_depth());
  const auto ext = derivative_separation(p, 0.3, i + pad + W("1101"), j + pad + W("1101"), 4);
  for (int k = 0; k <= 4; ++k) CHECK(std::abs(ext.per_order[k] - d.per_order[k]) <= 2.0 * p.tail_bound(p.truncation_depth(), k));
  CHECK_THROWS_AS(derivative_separation(p, 0.3, W("01"), W("00"), 3), rejected_input);
  CHECK_THROWS_AS(derivative_separation(p, 0.3, i, j, 99), rejected_input);
}

TEST_CASE("dichotomy scan: generic cosine satisfies H") {
  const auto v = condition_H_scan(ref_params(), 64, 8);
  CHECK(v.verdict == Dichotomy::H);
  CHECK(v.sup_gap > 10.0 * v.error_budget);
  CHECK(v.witness_i[0] != v.witness_j[0]);
  CHECK(to_string(v.verdict) == "H");
  // The witness really separates: recompute with the zero tail.
  const auto& p = ref_params();
  auto wi = digits(v.witness_i), wj = digits(v.witness_j);
  wi.resize(std::max<std::size_t>(wi.size(), p.truncation_depth()), 0);
  wj.resize(std::max<std::size_t>(wj.size(), p.truncation_depth()), 0);
  const long double gap = oracle::S(kCosine, 2, 0.4L, v.witness_x, wi) - oracle::S(kCosine, 2, 0.4L, v.witness_x, wj);
  CHECK(static_cast<double>(gap) == Approx(v.sup_gap).epsilon(1e-9));
}

TEST_CASE("dichotomy scan: coboundaries satisfy H*") {
  for (double gamma : {0.4, 0.7}) {
    const PeriodicFn psi = PeriodicFn::cosine(1, 0.8) + PeriodicFn::sine(2, 0.3);
    const SystemParams q(3, gamma, cohomological_phi(psi, 3, gamma));
    const auto v = condition_H_scan(q, 32, 5);
    CHECK(v.verdict == Dichotomy::H_star);
    CHECK(v.sup_gap <= v.error_budget);
    CHECK(v.degeneracy_bound >= v.sup_gap);
    CHECK(to_string(v.verdict) == "H*");
  }
  const SystemParams zero(2, 0.4, PeriodicFn{});
  CHECK(condition_H_scan(zero, 16, 6).verdict == Dichotomy::H_star);
}

TEST_CASE("dichotomy scan shrinks word depth to fit its budget") {
  const auto v = condition_H_scan(ref_params(), 16, 30, 1 << 12);
  CHECK(v.word_depth == 8);
  CHECK(v.verdict == Dichotomy::H);
}

TEST_CASE("transversality search and certificate validation") {
  const auto& p = ref_params();
  const std::vector<int> t1{1};
  const auto r1 = transversality_search(p, t1, 256);
  CHECK_FALSE(r1.certificate.has_value());
  CHECK(r1.best_bound <= 0.0);

  const std::vector<int> t12{1, 2};
  const auto r = transversality_search(p, t12, 1024);
  REQUIRE(r.certificate.has_value());
  const auto& c = *r.certificate;
  CHECK(c.t == 2);
  CHECK(c.delta1 > 0.0);
  CHECK(c.delta1 == Approx(2.303).margin(0.01));
  CHECK(c.delta1 <= c.grid_min_h - c.modulus - c.extension_bound + 1e-12);
  CHECK(c.delta1 <= c.grid_min_diff - 2 * (c.modulus + c.extension_bound) + 1e-12);
  CHECK(c.h != c.h_prime);
  const auto chk = validate_certificate(p, c);
  CHECK(chk.valid);
  CHECK(chk.min_diff >= c.delta1);

  // The derivative bound is inherited by extensions: check against the oracle.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uz(0.0, 1.0);
  const double left = word_cell_left(c.a, 2);
  for (int s = 0; s < 200; ++s) {
    const long double z = left + uz(rng) * 0.25;
    auto h = digits(c.h), hp = digits(c.h_prime);
    for (int k = 0; k < 20; ++k) {
      h.push_back(static_cast<int>(rng() % 2));
      hp.push_back(static_cast<int>(rng() % 2));
    }
    const long double dh = oracle::S_deriv(kCosine, 2, 0.4L, z, h, 1);
    const long double dhp = oracle::S_deriv(kCosine, 2, 0.4L, z, hp, 1);
    CHECK(std::abs(static_cast<double>(dh)) >= c.delta1);
    CHECK(std::abs(static_cast<double>(dhp)) >= c.delta1);
    CHECK(std::abs(static_cast<double>(dh - dhp)) >= c.delta1);
  }

  auto forged = c;
  forged.delta1 *= 2.0;
  CHECK_FALSE(validate_certificate(p, forged).valid);
}
