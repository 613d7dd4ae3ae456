#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "solenoid/symbolic.hpp"

using namespace solenoid;
using Catch::Approx;

namespace {

std::vector<oracle::Trig> to_oracle(const PeriodicFn& f) {
  std::vector<oracle::Trig> t;
  for (const auto& term : f.terms()) t.push_back({term.k, term.cos_coef, term.sin_coef});
  return t;
}

std::vector<int> digits_of(const Word& w) { return {w.digits().begin(), w.digits().end()}; }

struct Case {
  int b;
  double gamma;
  PeriodicFn phi;
};

std::vector<Case> corpus() {
  return {{2, 0.4, PeriodicFn::cosine()},
          {2, 0.45, PeriodicFn::cosine()},
          {3, 0.5, PeriodicFn::cosine()},
          {2, 0.4, cohomological_phi(PeriodicFn::cosine(), 2, 0.4)},
          {5, 0.7, PeriodicFn({0.3, 0.0, 0.5}, {0.0, 1.0, -0.2})}};
}

}  // namespace

TEST_CASE("words parse, print and concatenate") {
  const auto w = Word::parse("0121", 3);
  CHECK(w.size() == 4);
  CHECK(w.str() == "0121");
  CHECK((w + Word{2, 2}).str() == "012122");
  CHECK(w.prefix(2) == Word{0, 1});
  CHECK(Word{0, 1}.is_prefix_of(w));
  CHECK_FALSE(Word{1}.is_prefix_of(w));
  CHECK(Word::parse("a9", 11).str() == "a9");
  CHECK_THROWS_AS(Word::parse("3", 3), rejected_input);
  CHECK_THROWS_AS(Word::parse("x", 36 + 1), rejected_input);
}

TEST_CASE("word_point applies digits left to right") {
  CHECK(word_point(Word{}, 0.3, 2) == 0.3);
  CHECK(word_point(Word{1}, 0.0, 2) == 0.5);
  CHECK(word_point(Word{1, 0}, 0.0, 2) == 0.25);
  CHECK(word_point(Word{0, 1}, 0.0, 2) == 0.5);
  CHECK(word_cell_left(Word{2, 1}, 3) == Approx((0.0 + 2.0 / 3.0 + 1.0) / 3.0));
}

TEST_CASE("system parameters are validated") {
  CHECK_THROWS_AS(SystemParams(1, 0.4, PeriodicFn::cosine()), rejected_input);
  CHECK_THROWS_AS(SystemParams(37, 0.4, PeriodicFn::cosine()), rejected_input);
  CHECK_THROWS_AS(SystemParams(2, 0.0, PeriodicFn::cosine()), rejected_input);
  CHECK_THROWS_AS(SystemParams(2, 1.0, PeriodicFn::cosine()), rejected_input);
  CHECK_THROWS_AS(SystemParams(2, 0.4, PeriodicFn::cosine(), 0.0), rejected_input);
}

TEST_CASE("truncation depth is the first length whose tail bound meets the tolerance") {
  for (const auto& c : corpus()) {
    const SystemParams p(c.b, c.gamma, c.phi);
    const int d = p.truncation_depth();
    CHECK(p.tail_bound(d) <= p.truncation_tol());
    if (d > 0) CHECK(p.tail_bound(d - 1) > p.truncation_tol());
  }
}

TEST_CASE("series values match a long-double direct sum") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  for (const auto& c : corpus()) {
    const SystemParams p(c.b, c.gamma, c.phi);
    const auto terms = to_oracle(c.phi);
    for (int trial = 0; trial < 40; ++trial) {
      const double x = ux(rng);
      const auto w = sample_words(c.b, 1 + trial % 30, 1, rng())[0];
      const double ref = static_cast<double>(oracle::S(terms, c.b, c.gamma, x, digits_of(w)));
      CHECK(eval_S(p, x, w).value == Approx(ref).margin(1e-12));
    }
  }
}

TEST_CASE("empty word has S = 0 and phi = 0 gives S = 0") {
  const SystemParams p(2, 0.4, PeriodicFn::cosine());
  CHECK(eval_S(p, 0.3, Word{}).value == 0.0);
  const SystemParams z(3, 0.6, PeriodicFn{});
  CHECK(eval_S(z, 0.3, Word{1, 2, 0}, TailPolicy::seeded(4)).value == 0.0);
}

TEST_CASE("any continuation stays within the reported tail bound") {
  std::mt19937_64 rng(8);
  for (const auto& c : corpus()) {
    const SystemParams p(c.b, c.gamma, c.phi);
    for (int len : {1, 3, 7, 12}) {
      const auto w = sample_words(c.b, len, 1, rng())[0];
      const double head = eval_S(p, 0.41, w).value;
      const double bound = p.tail_bound(len);
      for (std::uint64_t s = 0; s < 5; ++s)
        CHECK(std::abs(eval_S(p, 0.41, w, TailPolicy::seeded(s)).value - head) <= bound * (1 + 1e-12));
      for (int d = 0; d < c.b; ++d)
        CHECK(std::abs(eval_S(p, 0.41, w, TailPolicy::constant(d)).value - head) <= bound * (1 + 1e-12));
    }
  }
}

TEST_CASE("cocycle identity holds on finite words") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  for (const auto& c : corpus()) {
    const SystemParams p(c.b, c.gamma, c.phi);
    const double scale = p.fibre_bound();
    for (int trial = 0; trial < 50; ++trial) {
      const auto w = sample_words(c.b, 1 + trial % 12, 1, rng())[0];
      const auto i = sample_words(c.b, trial % 17, 1, rng())[0];
      CHECK(cocycle_check(p, ux(rng), w, i) <= 1e-10 * scale);
    }
    CHECK(cocycle_check(p, 0.2, Word{1}, Word{}) == 0.0);
    CHECK_THROWS_AS(cocycle_check(p, 0.2, Word{}, Word{1}), rejected_input);
  }
}

TEST_CASE("fibre derivatives match the chain rule and finite differences") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ux(0.05, 0.95);
  for (const auto& c : corpus()) {
    const SystemParams p(c.b, c.gamma, c.phi);
    const auto terms = to_oracle(c.phi);
    for (int trial = 0; trial < 20; ++trial) {
      const double x = ux(rng);
      const auto w = sample_words(c.b, 1 + trial % 15, 1, rng())[0];
      const auto ds = digits_of(w);
      for (int order = 1; order <= 3; ++order) {
        const double ref = static_cast<double>(oracle::S_deriv(terms, c.b, c.gamma, x, ds, order));
        CHECK(eval_S_deriv(p, x, w, order).value == Approx(ref).margin(1e-10 * std::max(1.0, p.phi().sup_norm(order))));
      }
      const long double fd =
          oracle::central_diff([&](long double t) { return oracle::S(terms, c.b, c.gamma, t, ds); }, x);
      CHECK(eval_S_deriv(p, x, w, 1).value == Approx(static_cast<double>(fd)).margin(1e-6));
    }
  }
}

TEST_CASE("word enumeration visits b^n words, first digit slowest") {
  const SystemParams p(3, 0.5, PeriodicFn({0.0, 1.0}, {0.0, 0.3}));
  const auto expected = oracle::all_words(3, 4);
  std::size_t k = 0;
  for_each_word_value(p, 0.6, 4, [&](const std::vector<int>& ds, double v, double point) {
    REQUIRE(k < expected.size());
    CHECK(ds == expected[k]);
    Word w;
    for (int d : ds) w.push_back(d);
    CHECK(v == Approx(eval_S(p, 0.6, w).value).margin(1e-14));
    CHECK(point == Approx(word_point(w, 0.6, 3)).margin(1e-15));
    ++k;
  });
  CHECK(k == 81);
  int calls = 0;
  for_each_word_value(p, 0.6, 0, [&](const std::vector<int>& ds, double v, double point) {
    CHECK(ds.empty());
    CHECK(v == 0.0);
    CHECK(point == 0.6);
    ++calls;
  });
  CHECK(calls == 1);
}

TEST_CASE("n_hat and scale_floor agree with exhaustive search") {
  for (int b : {2, 3, 5, 10})
    for (double g : {0.1, 0.25, 0.4, 0.45, 0.5, 0.7, 0.9})
      for (int n = 0; n <= 40; ++n) {
        const int nh = nhat(n, b, g);
        CHECK(nh == oracle::nhat(n, b, g));
        CHECK(scale_floor(n, b, g) == oracle::scale_floor(n, b, g));
      }
}

TEST_CASE("n_hat at the reference parameters") {
  // gamma = 0.4, b = 2: n_hat = ceil(n log 2 / log 2.5).
  CHECK(nhat(10, 2, 0.4) == 8);
  CHECK(nhat(20, 2, 0.4) == 16);
  CHECK(nhat(28, 2, 0.4) == 22);
  CHECK(scale_floor(10, 2, 0.4) == 13);
  // b gamma = 1: exact powers, the boundary case.
  CHECK(nhat(7, 2, 0.5) == 7);
}

TEST_CASE("orbits follow the map and are reproducible") {
  const SystemParams p(2, 0.4, PeriodicFn::cosine());
  ReseedPolicy off;
  off.enabled = false;
  const auto orb = iterate_T(p, {0.3, 0.1}, 0, 60, 9, off);
  REQUIRE(orb.points.size() == 60);
  for (std::size_t k = 0; k + 1 < orb.points.size(); ++k) {
    const auto& z = orb.points[k];
    const auto& n = orb.points[k + 1];
    CHECK(n.y == Approx(0.4 * z.y + std::cos(2 * M_PI * z.x)).margin(1e-12));
    if (k < 40) CHECK(n.x == Approx(frac(2 * z.x)).margin(1e-12));
  }
  const auto a = iterate_T(p, {0.3, 0.1}, 100, 1000, 77);
  const auto b = iterate_T(p, {0.3, 0.1}, 100, 1000, 77);
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    CHECK(a.points[k].x == b.points[k].x);
    CHECK(a.points[k].y == b.points[k].y);
  }
}

TEST_CASE("orbits stay inside the fibre bound") {
  const SystemParams p(3, 0.5, PeriodicFn::cosine());
  const double M = p.fibre_bound();
  long outside = 0;
  stream_orbit(p, {0.123, 0.0}, 0, 200000, 5, [&](OrbitPoint z) {
    if (std::abs(z.y) > M || z.x < 0.0 || z.x >= 1.0) ++outside;
  });
  CHECK(outside == 0);
}

TEST_CASE("reseeded orbits keep the base point equidistributed") {
  const SystemParams p(2, 0.4, PeriodicFn::cosine());
  std::vector<long> hist(16, 0);
  const long N = 400000;
  stream_orbit(p, {0.7, 0.0}, 0, N, 13, [&](OrbitPoint z) { ++hist[static_cast<int>(z.x * 16)]; });
  double chi2 = 0.0;
  for (long h : hist) chi2 += (h - N / 16.0) * (h - N / 16.0) / (N / 16.0);
  // 15 degrees of freedom; 99.9% quantile is about 37.7.
  CHECK(chi2 < 37.7);
}

TEST_CASE("telescoping: cohomological phi sums to psi(x)") {
  const auto psi = PeriodicFn::cosine();
  const SystemParams p(2, 0.4, cohomological_phi(psi, 2, 0.4));
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double x = ux(rng);
    const auto w = sample_words(2, 8, 1, rng())[0];
    CHECK(std::abs(eval_S(p, x, w, TailPolicy::seeded(rng())).value - psi(x)) <= 1e-8);
  }
}

TEST_CASE("digit sources are uniform and reproducible") {
  for (int b : {2, 3, 7, 10}) {
    DigitSource a(b, 42), c(b, 42);
    std::vector<long> hist(b, 0);
    const long N = 200000;
    for (long i = 0; i < N; ++i) {
      const int d = a.next();
      REQUIRE(d == c.next());
      REQUIRE(d >= 0);
      REQUIRE(d < b);
      ++hist[d];
    }
    double chi2 = 0.0;
    for (long h : hist) chi2 += (h - double(N) / b) * (h - double(N) / b) / (double(N) / b);
    CHECK(chi2 < 30.0);
  }
  CHECK(sample_words(3, 5, 4, 1) == sample_words(3, 5, 4, 1));
}
