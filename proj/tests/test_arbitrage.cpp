#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "dnt/arbitrage.hpp"
#include "dnt/hedging.hpp"
#include "doctest.h"

using namespace dnt;

namespace {

CallQuoteSet make_quotes(std::vector<double> ks, std::vector<double> ps,
                         double s0 = 2.0) {
  CallQuoteSet q;
  q.spot = s0;
  q.strikes = std::move(ks);
  q.prices = std::move(ps);
  return q;
}

// Two-sample path ending at sT; enough to exercise option legs and
// forwards triggered at the start.
Path terminal_path(double s0, double sT) {
  Path p;
  p.times = {0.0, 1.0};
  p.values = {s0, sT};
  return p;
}

// Every unconditional witness must cost strictly less than its worst-case
// payoff: for our constructions, cost < 0 with payoff >= 0 everywhere, or
// cost <= 0 with payoff >= 0 and positive somewhere.
void check_model_free_witness(const ArbitrageReport& rep,
                              const CallQuoteSet& quotes,
                              const DigitalQuotes& digitals = {}) {
  REQUIRE(rep.verdict == Verdict::MODEL_FREE);
  REQUIRE(!rep.witnesses.empty());
  PricingSource src(quotes, digitals);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> sT(0.0, 2.0 * quotes.strikes.back());
  for (const auto& w : rep.witnesses) {
    REQUIRE(w.condition == "always");
    double cost = src.cost(w.portfolio);
    CHECK(cost <= 1e-9);
    double best_payoff = -1.0;
    for (int t = 0; t < 10000; ++t) {
      double payoff = evaluate_on_path(w.portfolio,
                                       terminal_path(quotes.spot, sT(rng)));
      CHECK(payoff >= -1e-9);
      best_payoff = std::max(best_payoff, payoff);
    }
    // strictly profitable: either free money up front or a free option
    CHECK((cost < -1e-9 || best_payoff > 1e-9));
  }
}

ImpliedMeasure random_measure(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> natoms(2, 6);
  std::uniform_real_distribution<double> loc(0.5, 3.5), wt(0.1, 1.0);
  ImpliedMeasure mu;
  int n = natoms(rng);
  std::vector<double> xs;
  while (static_cast<int>(xs.size()) < n) {
    double x = loc(rng);
    bool ok = true;
    for (double y : xs)
      if (std::abs(x - y) < 1e-2) ok = false;
    if (ok) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  double total = 0.0;
  std::vector<double> ps;
  for (int i = 0; i < n; ++i) {
    ps.push_back(wt(rng));
    total += ps.back();
  }
  for (int i = 0; i < n; ++i) {
    mu.x.push_back(xs[i]);
    mu.p.push_back(ps[i] / total);
  }
  return mu;
}

}  // namespace

TEST_CASE("consistent quotes pass") {
  auto q = make_quotes({0, 1, 1.8, 2.2, 3}, {2, 1, 0.28, 0.08, 0});
  auto rep = check_quotes(q);
  CHECK(rep.verdict == Verdict::NONE);
  CHECK(rep.witnesses.empty());
}

TEST_CASE("shape violations are model-free arbitrages with witnesses") {
  SUBCASE("broken butterfly") {
    auto q = make_quotes({0, 1, 2, 3}, {2, 1, 0.6, 0});
    auto rep = check_quotes(q);
    check_model_free_witness(rep, q);
    CHECK(rep.explanation.find("convexity") != std::string::npos);
  }
  SUBCASE("increasing prices") {
    auto q = make_quotes({0, 1, 2, 3}, {2, 1, 0.1, 0.2});
    check_model_free_witness(check_quotes(q), q);
  }
  SUBCASE("initial slope below -1") {
    auto q = make_quotes({0, 1}, {2, 0.9});
    check_model_free_witness(check_quotes(q), q);
  }
  SUBCASE("negative price") {
    auto q = make_quotes({0, 1, 2}, {2, 1, -0.05});
    check_model_free_witness(check_quotes(q), q);
  }
}

TEST_CASE("flat positive tail: weak for quotes, free lunch for the curve") {
  auto q = make_quotes({0, 1, 2, 3}, {2, 1, 0.2, 0.2});
  auto rep = check_quotes(q);
  CHECK(rep.verdict == Verdict::WEAK);
  // the two-case witness pair: one portfolio per model family
  REQUIRE(rep.witnesses.size() == 2);
  CHECK(rep.witnesses[0].condition != "always");
  CHECK(rep.witnesses[1].condition != "always");
  CHECK(rep.witnesses[0].condition != rep.witnesses[1].condition);

  auto curve_rep = check_curve(CallCurve({0, 1, 2}, {2, 1, 0.2}));
  CHECK(curve_rep.verdict == Verdict::WFLVR);
  CHECK(curve_rep.verdict != Verdict::MODEL_FREE);
  CHECK(!curve_rep.witnesses.empty());

  auto good = check_curve(CallCurve({0, 1, 2, 3}, {2, 1, 0.25, 0}));
  CHECK(good.verdict == Verdict::NONE);
}

TEST_CASE("digitals at a quoted barrier: the full band and its edges") {
  // quotes collinear through (1.8, 2.2, 3): the barrier call sits on the
  // right secant, so every interior digital price is only approachable
  auto q = make_quotes({0, 1, 1.8, 2.2, 3}, {2, 1, 0.24, 0.16, 0});
  Barriers b{1.8, 2.6};
  auto dig = [](double p) {
    DigitalQuotes d;
    d.lower = DigitalQuote{1.8, p};
    return d;
  };
  CHECK(check_digitals(q, dig(0.5), b).verdict == Verdict::WEAK);
  CHECK(check_digitals(q, dig(0.95), b).verdict == Verdict::WEAK);
  CHECK(check_digitals(q, dig(0.2), b).verdict == Verdict::NONE);
  check_model_free_witness(check_digitals(q, dig(0.97), b), q, dig(0.97));
  check_model_free_witness(check_digitals(q, dig(0.10), b), q, dig(0.10));

  // strictly convex quotes: the band boundaries are attained
  auto q2 = make_quotes({0, 1, 1.8, 2.2, 3}, {2, 1, 0.28, 0.08, 0});
  CHECK(check_digitals(q2, dig(0.9), b).verdict == Verdict::NONE);
  CHECK(check_digitals(q2, dig(0.5), b).verdict == Verdict::NONE);
  CHECK(check_digitals(q2, dig(0.4), b).verdict == Verdict::MODEL_FREE);
}

TEST_CASE("digital at an unquoted barrier with pinned synthetic price") {
  // the synthetic barrier call at 1.7 sits on the back-extrapolated
  // right secant; only the extreme digital price 0.975 is weak
  auto q = make_quotes({0, 1, 1.8, 2.2, 3}, {2, 1, 0.28, 0.13, 0});
  Barriers b{1.7, 2.6};
  auto dig = [](double p) {
    DigitalQuotes d;
    d.lower = DigitalQuote{1.7, p};
    return d;
  };
  CHECK(check_digitals(q, dig(0.6), b).verdict == Verdict::NONE);
  CHECK(check_digitals(q, dig(0.375), b).verdict == Verdict::NONE);
  auto weak = check_digitals(q, dig(0.975), b);
  CHECK(weak.verdict == Verdict::WEAK);
  CHECK(weak.explanation.find("boundary") != std::string::npos);
  CHECK(!weak.witnesses.empty());
  check_model_free_witness(check_digitals(q, dig(0.30), b), q, dig(0.30));
  check_model_free_witness(check_digitals(q, dig(0.99), b), q, dig(0.99));
}

TEST_CASE("upper digital mirror cases") {
  // (1.4, 1.8) secant extended to the quoted barrier 2.2
  auto q = make_quotes({0, 1, 1.4, 1.8, 2.2, 3},
                       {1.5, 0.62, 0.42, 0.22, 0.02, 0.005}, 1.5);
  Barriers b{1.1, 2.2};
  auto dig = [](double p) {
    DigitalQuotes d;
    d.upper = DigitalQuote{2.2, p};
    return d;
  };
  CHECK(check_digitals(q, dig(0.30), b).verdict == Verdict::WEAK);
  CHECK(check_digitals(q, dig(0.01875), b).verdict == Verdict::WEAK);
  CHECK(check_digitals(q, dig(0.50), b).verdict == Verdict::NONE);
  check_model_free_witness(check_digitals(q, dig(0.60), b), q, dig(0.60));
}

TEST_CASE("perturbation repairs weak arbitrage but not model-free") {
  auto q = make_quotes({0, 1, 1.8, 2.2, 3}, {2, 1, 0.24, 0.16, 0});
  Barriers b{1.8, 2.6};
  DigitalQuotes d;
  d.lower = DigitalQuote{1.8, 0.5};
  REQUIRE(check_digitals(q, d, b).verdict == Verdict::WEAK);
  double eps = 1e-6;
  auto fixed = perturb_to_consistent(q, d, b, eps);
  CHECK(check_digitals(fixed.quotes, fixed.digitals, b).verdict ==
        Verdict::NONE);
  for (std::size_t i = 0; i < q.size(); ++i)
    CHECK(std::abs(fixed.quotes.prices[i] - q.prices[i]) < eps);
  CHECK(std::abs(fixed.digitals.lower->price - d.lower->price) < eps);

  DigitalQuotes bad;
  bad.lower = DigitalQuote{1.8, 0.99};
  CHECK_THROWS(perturb_to_consistent(q, bad, b, eps));
}

TEST_CASE("random consistent markets always pass; corrupted ones fail") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    auto mu = random_measure(rng);
    std::vector<double> ks = mu.x;
    auto q = quotes_from_measure(mu, ks);
    CHECK(check_quotes(q).verdict == Verdict::NONE);
    // push one interior price above the secant through its neighbours
    auto broken = q;
    std::size_t m = 1 + rng() % (broken.size() - 2);
    if (m + 1 < broken.size()) {
      double secant = 0.5 * (broken.prices[m - 1] + broken.prices[m + 1]) +
                      0.5 * (broken.strikes[m + 1] - broken.strikes[m - 1]);
      broken.prices[m] = secant;  // far above: convexity broken
      CHECK(check_quotes(broken).verdict == Verdict::MODEL_FREE);
    }
  }
}

TEST_CASE("barrier layout errors are named") {
  auto q = make_quotes({0, 1, 1.8, 2.2, 3}, {2, 1, 0.28, 0.08, 0});
  DigitalQuotes d;
  d.lower = DigitalQuote{0.5, 0.9};
  CHECK_THROWS_WITH_AS(check_digitals(q, d, Barriers{0.5, 2.6}),
                       doctest::Contains("lower barrier"),
                       std::runtime_error);
}

TEST_CASE("report serialization names the verdict and witnesses") {
  auto q = make_quotes({0, 1, 2, 3}, {2, 1, 0.2, 0.2});
  auto rep = check_quotes(q);
  auto text = rep.serialize();
  CHECK(text.find("WEAK") != std::string::npos);
  CHECK(text.find("witness if") != std::string::npos);
}
