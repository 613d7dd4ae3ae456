#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "solenoid/partitions.hpp"

using namespace solenoid;
using Catch::Approx;

namespace {

const SystemParams& ref_params() {
  static const SystemParams p(2, 0.4, PeriodicFn::cosine());
  return p;
}

const std::vector<oracle::Trig> kCosine{{1, 1.0L, 0.0L}};

Word W(std::string_view s) { return Word::parse(s, 2); }

std::vector<int> digits(const Word& w) { return {w.digits().begin(), w.digits().end()}; }

const TransversalityCertificate& ref_certificate() {
  static const TransversalityCertificate c = [] {
    const std::vector<int> ts{2};
    return *transversality_search(ref_params(), ts, 1024).certificate;
  }();
  return c;
}

}  // namespace

TEST_CASE("partition keys") {
  const auto& p = ref_params();
  const Word w = W("0110100111");
  const auto k0 = partition_key(p, w, 0, 0.3, W("00"), W("11"));
  CHECK(k0.n == 0);
  CHECK(k0.m == 10);
  CHECK(k0.cell1 == 0);
  CHECK(k0.cell2 == 0);
  CHECK(k0.str().find(":-:-:") != std::string::npos);
  // cell3 sits at level floor(10 log2 2.5) = 13.
  const long double s = oracle::S(kCosine, 2, 0.4L, 0.3L, digits(w));
  CHECK(k0.cell3 == static_cast<std::int64_t>(std::floor(s * 8192.0L)));
  CHECK(partition_key(p, w, 0, 0.3, W("00"), W("11")) == k0);

  const auto k4 = partition_key(p, w, 4, 0.3, W("00"), W("11"));
  CHECK(k4.cell3 == static_cast<std::int64_t>(std::floor(s * 131072.0L)));
  // cell1 bins S(w(x0), h) with h continued by zeros.
  auto h = std::vector<int>(p.truncation_depth(), 0);
  const long double pt = word_point(w, 0.3, 2);
  CHECK(k4.cell1 == static_cast<std::int64_t>(std::floor(oracle::S(kCosine, 2, 0.4L, pt, h) * 16.0L)));
  CHECK(k4.str() == "4:10:" + std::to_string(k4.cell1) + ":" + std::to_string(k4.cell2) + ":" +
                        std::to_string(k4.cell3));
  CHECK_THROWS_AS(partition_key(p, w, 60, 0.3, W("00"), W("11")), rejected_input);
}

TEST_CASE("finer keys refine coarser keys") {
  const auto& p = ref_params();
  const auto words = sample_words(2, 9, 400, 17);
  for (int n = 0; n < 8; ++n) {
    std::map<PartitionKey, PartitionKey> parent;
    for (const auto& w : words) {
      const auto fine = partition_key(p, w, n + 1, 0.3, W("00"), W("11"));
      const auto coarse = partition_key(p, w, n, 0.3, W("00"), W("11"));
      CHECK(fine.m == coarse.m);
      auto [it, fresh] = parent.emplace(fine, coarse);
      if (!fresh) CHECK(it->second == coarse);
    }
  }
}

TEST_CASE("theta measures") {
  const auto& p = ref_params();
  const auto th = theta_measure(p, W("0110"), 10);
  CHECK(th.support_size() == 16);
  CHECK(th.total_mass() == 1.0);
  CHECK(th.weight(W("10100110")) == Approx(1.0 / 16));
  CHECK(th.weight(W("10101111")) == 0.0);
  double mass = 0.0;
  std::set<Word> seen;
  th.for_each([&](const Word& w, double v) {
    mass += v;
    seen.insert(w);
    CHECK(W("0110").is_prefix_of(Word(std::vector<Word::digit_type>(w.digits().end() - 4, w.digits().end()))));
  });
  CHECK(mass == Approx(1.0));
  CHECK(seen.size() == 16);
  // n_hat - t = 1: two words.
  const auto small = theta_measure(p, W("0"), 2);
  REQUIRE(nhat(2, 2, 0.4) == 2);
  CHECK(small.support_size() == 2);
  CHECK(small.weight(W("00")) == 0.5);
  CHECK(small.weight(W("10")) == 0.5);
  CHECK_THROWS_AS(theta_measure(p, W("0110"), 4), rejected_input);
  CHECK_THROWS_AS(theta_measure(p, W("0"), 40, 1 << 10), rejected_input);
}

TEST_CASE("measure A") {
  const auto& p = ref_params();
  const auto one = WordMeasure::from_table(2, {{W("0101"), 3.0}});
  const auto d = measure_A(p, one, W("11"), 0.3, 8);
  REQUIRE(d.size() == 1);
  CHECK(d.entries()[0].first ==
        static_cast<std::int64_t>(std::floor(oracle::S(kCosine, 2, 0.4L, 0.3L, {0, 1, 0, 1, 1, 1}) * 256.0L)));

  const SystemParams z(2, 0.4, PeriodicFn{});
  const auto th = theta_measure(z, W("01"), 10);
  const auto dz = measure_A(z, th, W("1"), 0.3, 10);
  REQUIRE(dz.size() == 1);
  CHECK(dz.entries()[0].first == 0);

  // Weighted table against a Monte-Carlo pushforward of the word law.
  std::mt19937_64 rng(8);
  std::map<Word, double> table;
  for (const auto& w : sample_words(2, 7, 40, 5)) table[w] = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
  const auto xi = WordMeasure::from_table(2, table);
  const auto a = measure_A(p, xi, W("10"), 0.3, 7);
  CHECK(a.total_mass() == Approx(1.0));
  CHECK(measure_A(p, xi, W("10"), 0.3, 7) == a);
  std::vector<Word> ws;
  std::vector<double> wts;
  xi.for_each([&](const Word& w, double v) {
    ws.push_back(w);
    wts.push_back(v);
  });
  std::discrete_distribution<std::size_t> pick(wts.begin(), wts.end());
  const int N = 200000;
  std::map<std::int64_t, double> hist;
  for (int i = 0; i < N; ++i) {
    auto ds = digits(ws[pick(rng)]);
    ds.push_back(1);
    ds.push_back(0);
    hist[static_cast<std::int64_t>(std::floor(oracle::S(kCosine, 2, 0.4L, 0.3L, ds) * 128.0L))] += 1.0;
  }
  for (const auto& [cell, c] : hist) {
    const double q = a.weight(cell);
    CHECK(std::abs(c / N - q) <= 5.0 * std::sqrt(q * (1 - q) / N) + 1e-9);
  }
}

TEST_CASE("measure B") {
  const auto& p = ref_params();
  const SystemParams z(2, 0.4, PeriodicFn{});
  const auto th = theta_measure(z, W("01"), 10);
  const auto bz = measure_B(z, th, W("1"), 0.3, 10, 4, 1);
  REQUIRE(bz.size() == 1);
  CHECK(bz.entries()[0].first == 0);

  // A single word: every tail lands within the certified reach of the finite value.
  const auto one = WordMeasure::from_table(2, {{W("0110"), 1.0}});
  const auto b1 = measure_B(p, one, W("10"), 0.3, 10, 500, 3);
  const double head = static_cast<double>(oracle::S(kCosine, 2, 0.4L, 0.3L, {0, 1, 1, 0, 1, 0}));
  const double reach = std::pow(0.4, 6) * p.fibre_bound();
  for (const auto& [idx, w] : b1.entries()) {
    const auto c = b1.cell(idx);
    CHECK(c.right() >= head - reach);
    CHECK(c.left() <= head + reach);
  }
  CHECK(measure_B(p, one, W("10"), 0.3, 10, 500, 3) == b1);
  CHECK_FALSE(measure_B(p, one, W("10"), 0.3, 10, 500, 4) == b1);
  // tail_samples = 0 is measure_A.
  const auto th2 = theta_measure(p, W("10"), 12);
  CHECK(measure_B(p, th2, W("011"), 0.3, 9, 0, 0) == measure_A(p, th2, W("011"), 0.3, 9));

  // Law of S(x0, w q j) by direct sampling.
  std::mt19937_64 rng(9);
  const auto xi = theta_measure(p, W("1"), 5);
  const auto b = measure_B(p, xi, W("01"), 0.3, 6, 4000, 11);
  std::vector<Word> ws;
  xi.for_each([&](const Word& w, double) { ws.push_back(w); });
  const int N = 400000;
  std::vector<std::int64_t> idx;
  for (int i = 0; i < N; ++i) {
    auto ds = digits(ws[rng() % ws.size()]);
    ds.push_back(0);
    ds.push_back(1);
    for (int k = 0; k < 40; ++k) ds.push_back(static_cast<int>(rng() % 2));
    idx.push_back(static_cast<std::int64_t>(std::floor(oracle::S(kCosine, 2, 0.4L, 0.3L, ds) * 64.0L)));
  }
  CHECK(total_variation(b, DiscreteMeasure::from_indices(2, 6, idx)) < 0.03);
}

TEST_CASE("decomposition identity") {
  const SystemParams z(2, 0.4, PeriodicFn{});
  CHECK(decomposition_check(z, 1, 0.3, 6, 3, 6, 2, 1).residual == 0.0);

  const auto& p = ref_params();
  // Without random tails both sides enumerate the same words.
  CHECK(decomposition_check(p, 1, 0.3, 8, 4, 6, 0, 1).residual <= 1e-12);
  // Minimal n: n_hat = t + 1.
  REQUIRE(nhat(2, 2, 0.4) == 2);
  const auto small = decomposition_check(p, 1, 0.3, 2, 2, 6, 8, 5);
  CHECK(small.residual <= small.certified_bound);

  double prev = 1.0;
  for (int i : {6, 8, 10}) {
    const auto r = decomposition_check(p, 1, 0.3, 8, i, 6, 2, 7);
    CHECK(r.residual <= 0.05);
    CHECK(r.residual <= r.certified_bound);
    CHECK(r.residual < prev);
    CHECK(r.depth == r.n_hat + i);
    prev = r.residual;
  }
  CHECK_THROWS_AS(decomposition_check(p, 2, 0.3, 8, 1, 6, 2, 7), rejected_input);
  CHECK_THROWS_AS(decomposition_check(p, 1, 0.3, 40, 4, 6, 2, 7), rejected_input);
}

TEST_CASE("theta entropy table") {
  const auto& p = ref_params();
  const auto& cert = ref_certificate();
  const std::vector<int> ns{8, 10, 12, 14};
  const auto rows = theta_entropy_table(p, cert, ns, 1.8);
  REQUIRE(rows.size() == ns.size());
  for (const auto& r : rows) {
    const int words_exp = r.n_hat - cert.t;
    CHECK(r.words == (std::int64_t{1} << words_exp));
    CHECK(r.fine_entropy <= words_exp + 1e-9);
    CHECK(r.coarse_entropy <= r.fine_entropy + 1e-9);
    CHECK(r.fine_level == static_cast<int>(std::floor(1.8 * r.n)));
    // Equality with n_hat - t is exactly the event that all keys differ.
    std::set<PartitionKey> keys;
    theta_measure(p, cert.a, r.n).for_each(
        [&](const Word& w, double) { keys.insert(partition_key(p, w, r.fine_level, cert.x0, cert.h, cert.h_prime)); });
    CHECK(r.fine_separated == (keys.size() == static_cast<std::size_t>(r.words)));
  }
  const SystemParams z(2, 0.4, PeriodicFn{});
  for (const auto& r : theta_entropy_table(z, cert, ns, 1.8)) CHECK(r.coarse_entropy == 0.0);
  CHECK_THROWS_AS(theta_entropy_table(p, cert, ns, 0.0), rejected_input);
  const std::vector<int> deep{26};
  const auto capped = theta_entropy_table(p, cert, deep, 3.0);
  CHECK(capped[0].fine_level_capped);
  CHECK(capped[0].fine_level + scale_floor(capped[0].n_hat, 2, 0.4) <= max_key_level(2));
}

TEST_CASE("scan-derived C clears every scanned gap") {
  const auto& p = ref_params();
  std::vector<int> ns{10, 12, 14};
  const auto scan = exp_separation_scan(p, 0.3, 2, 0.1, ns);
  const double C = scan_derived_C(scan, 2, 1.0);
  for (std::size_t i = 0; i < ns.size(); ++i) CHECK(scan.min_gaps[i] >= std::pow(2.0, -C * ns[i]) * (1 - 1e-12));
  CHECK(scan_derived_C(scan, 2) == Approx(1.05 * C));
}
