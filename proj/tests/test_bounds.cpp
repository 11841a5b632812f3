#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <random>

#include "dnt/bounds.hpp"
#include "dnt/market.hpp"
#include "doctest.h"

using namespace dnt;

namespace {

// Atoms (1, .1), (1.8, .4), (2.2, .4), (3, .1), mean 2: the exact lower
// bound for barriers (1.2, 2.8) is 1 - 0.08/0.6 - 0.08/0.6 = 11/15.
ImpliedMeasure four_atom() {
  ImpliedMeasure mu;
  mu.x = {1.0, 1.8, 2.2, 3.0};
  mu.p = {0.1, 0.4, 0.4, 0.1};
  return mu;
}

ImpliedMeasure random_measure(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> natoms(3, 7);
  std::uniform_real_distribution<double> loc(0.5, 3.5), wt(0.1, 1.0);
  ImpliedMeasure mu;
  int n = natoms(rng);
  std::vector<double> xs;
  while (static_cast<int>(xs.size()) < n) {
    double x = loc(rng);
    bool ok = true;
    for (double y : xs)
      if (std::abs(x - y) < 5e-2) ok = false;
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

double pick_between(const ImpliedMeasure& mu, double a, double b, double frac) {
  double x = a + frac * (b - a);
  for (double atom : mu.x)
    if (std::abs(x - atom) < 1e-3) x += 2e-3;
  return x;
}

// The finite-strike lower bound computed the slow, obvious way: max over
// quoted pairs lo < K1 <= K2 < hi of 1 - C(K2)/(hi-K2) - P(K1)/(K1-lo).
double brute_lower(const CallQuoteSet& q, const Barriers& b) {
  double best = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    double k1 = q.strikes[i];
    if (k1 <= b.lo || k1 >= b.hi) continue;
    double put1 = q.prices[i] + k1 - q.spot;
    for (std::size_t j = i; j < q.size(); ++j) {
      double k2 = q.strikes[j];
      if (k2 >= b.hi) break;
      double v = 1.0 - q.prices[j] / (b.hi - k2) - put1 / (k1 - b.lo);
      best = std::max(best, v);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("finite lower bound on the four-atom fixture is exactly 11/15") {
  auto q = quotes_from_measure(four_atom(), {1.0, 1.8, 2.2, 3.0});
  auto r = lower_bound_finite(q, Barriers{1.2, 2.8});
  CHECK(std::abs(r.lower - 11.0 / 15.0) < 1e-12);
  REQUIRE(r.lower_strikes.has_value());
  CHECK(r.lower_strikes->first == doctest::Approx(1.8));
  CHECK(r.lower_strikes->second == doctest::Approx(2.2));
  CHECK(!r.hedges.empty());
}

TEST_CASE("finite lower bound matches an exhaustive pair search") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.2, 0.8);
  int active = 0;
  for (int trial = 0; trial < 80; ++trial) {
    auto mu = random_measure(rng);
    // quote the atoms plus midpoints so the search space is non-trivial
    std::vector<double> ks = mu.x;
    for (std::size_t i = 0; i + 1 < mu.x.size(); ++i)
      ks.push_back(0.5 * (mu.x[i] + mu.x[i + 1]));
    std::sort(ks.begin(), ks.end());
    auto q = quotes_from_measure(mu, ks);
    double m = mu.mean();
    Barriers b{pick_between(mu, mu.support_lo(), m, u(rng)),
               pick_between(mu, m, mu.support_hi(), u(rng))};
    if (b.lo <= q.strikes[1] || b.hi <= b.lo + 0.1) continue;
    bool interior = false;
    for (double k : q.strikes)
      if (k > b.lo && k < b.hi) interior = true;
    if (!interior) {
      CHECK_THROWS(lower_bound_finite(q, b));
      continue;
    }
    auto r = lower_bound_finite(q, b);
    CHECK(r.lower == doctest::Approx(brute_lower(q, b)).epsilon(1e-12));
    if (r.lower > 1e-9) ++active;
  }
  CHECK(active > 10);
}

TEST_CASE("continuum bounds on small closed-form laws") {
  // three atoms (1, 1/4), (2, 1/2), (3, 1/4)
  CallCurve curve({0, 1, 2, 3}, {2, 1, 0.25, 0});
  auto up = upper_bound_continuum(curve, Barriers{1.5, 2.5});
  CHECK(up.upper == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(*up.upper_term == UpperTerm::I);
  auto lo = lower_bound_continuum(curve, Barriers{1.5, 2.5});
  CHECK(lo.lower == doctest::Approx(0.0));

  // two-point law: every path must leave (1.5, 2.5)
  CallCurve two({0, 1, 3}, {2, 1, 0});
  CHECK(upper_bound_continuum(two, Barriers{1.5, 2.5}).upper ==
        doctest::Approx(0.0));

  // point mass at the spot never moves: both bounds are 1
  ImpliedMeasure point;
  point.x = {2.0};
  point.p = {1.0};
  auto q = quotes_from_measure(point, {1.0, 2.0, 3.0});
  CHECK(lower_bound_finite(q, Barriers{1.5, 2.5}).lower ==
        doctest::Approx(1.0));
  CHECK(upper_bound_continuum(curve_from_measure(point), Barriers{1.5, 2.5})
            .upper == doctest::Approx(1.0));
}

TEST_CASE("finite upper bound: attainable and boundary cases") {
  CallQuoteSet q;
  q.spot = 2.0;
  q.strikes = {0, 1, 1.8, 2.2, 3};
  q.prices = {2, 1, 0.28, 0.08, 0};

  // wide barriers: a consistent law fits inside, so the bound is 1
  auto wide = upper_bound_finite(q, Barriers{1.2, 2.8});
  CHECK(wide.upper == doctest::Approx(1.0));
  CHECK(wide.attained);

  // barriers crowding the interior strikes: the optimal mass wants to sit
  // just inside the upper barrier and the bound is a limit, not a price
  auto edge = upper_bound_finite(q, Barriers{1.79, 2.21});
  CHECK(edge.upper == doctest::Approx(0.810126582).epsilon(1e-6));
  CHECK(!edge.attained);
  CHECK(edge.notes.find("sequence of models") != std::string::npos);

  CHECK_THROWS_WITH_AS(upper_bound_finite(q, Barriers{1.81, 2.19}),
                       doctest::Contains("fewer than two quoted strikes"),
                       std::runtime_error);
}

TEST_CASE("quoting every atom and both barriers recovers the continuum") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.2, 0.8);
  int lower_active = 0;
  for (int trial = 0; trial < 40; ++trial) {
    auto mu = random_measure(rng);
    double m = mu.mean();
    Barriers b{pick_between(mu, mu.support_lo(), m, u(rng)),
               pick_between(mu, m, mu.support_hi(), u(rng))};
    if (b.lo <= mu.x.front() || b.hi <= b.lo + 0.1) continue;
    auto curve = curve_from_measure(mu);
    std::vector<double> ks = mu.x;
    ks.push_back(b.lo);
    ks.push_back(b.hi);
    std::sort(ks.begin(), ks.end());
    auto q = quotes_from_measure(mu, ks);
    DigitalQuotes d;
    d.lower = DigitalQuote{b.lo, curve.digital_gt(b.lo)};
    d.upper = DigitalQuote{b.hi, curve.digital_ge(b.hi)};

    auto fin = upper_bound_finite_digitals(q, d, b);
    auto cont = upper_bound_continuum(curve, b);
    CHECK(fin.upper == doctest::Approx(cont.upper).epsilon(1e-9));

    auto fin_lo = lower_bound_finite(q, b);
    auto cont_lo = lower_bound_continuum(curve, b);
    CHECK(fin_lo.lower == doctest::Approx(cont_lo.lower).epsilon(1e-9));
    if (cont_lo.lower > 1e-9) ++lower_active;

    // a digital above 1 is free money; the bound must refuse to price it
    DigitalQuotes bad = d;
    bad.lower->price = 1.2;
    CHECK_THROWS(upper_bound_finite_digitals(q, bad, b));
  }
  CHECK(lower_active > 5);
}

TEST_CASE("bound surfaces over a barrier grid") {
  auto mu = four_atom();
  std::vector<double> lo_grid, hi_grid;
  for (int i = 0; i <= 30; ++i) {
    lo_grid.push_back(0.5 + 1.5 * i / 30.0);  // up to the spot
    hi_grid.push_back(2.0 + 1.5 * i / 30.0);  // from the spot
  }
  auto s = p_surface(mu, lo_grid, hi_grid);
  REQUIRE(s.lower.size() == lo_grid.size());
  REQUIRE(s.upper.size() == lo_grid.size());
  for (std::size_t i = 0; i < lo_grid.size(); ++i) {
    REQUIRE(s.lower[i].size() == hi_grid.size());
    for (std::size_t j = 0; j < hi_grid.size(); ++j) {
      double lo = s.lower[i][j], up = s.upper[i][j];
      CHECK(lo >= 0.0);
      CHECK(up <= 1.0);
      CHECK(lo <= up + 1e-9);
      // widening the corridor can only raise the no-touch probability
      if (i > 0) {
        CHECK(lo <= s.lower[i - 1][j] + 1e-9);
        CHECK(up <= s.upper[i - 1][j] + 1e-9);
      }
      if (j > 0) {
        CHECK(lo >= s.lower[i][j - 1] - 1e-9);
        CHECK(up >= s.upper[i][j - 1] - 1e-9);
      }
      // a barrier at the spot knocks out immediately
      if (lo_grid[i] == 2.0 || hi_grid[j] == 2.0) {
        CHECK(lo == doctest::Approx(0.0));
        CHECK(up == doctest::Approx(0.0));
      }
      // both barriers outside the support: never touched
      if (lo_grid[i] < 1.0 && hi_grid[j] > 3.0) {
        CHECK(lo == doctest::Approx(1.0));
        CHECK(up == doctest::Approx(1.0));
      }
    }
  }
  // spot checks against hand-computed values
  auto at = [&](double lo, double hi, bool upper) {
    std::size_t i = 0, j = 0;
    for (std::size_t k = 0; k < lo_grid.size(); ++k)
      if (std::abs(lo_grid[k] - lo) < 1e-12) i = k;
    for (std::size_t k = 0; k < hi_grid.size(); ++k)
      if (std::abs(hi_grid[k] - hi) < 1e-12) j = k;
    return upper ? s.upper[i][j] : s.lower[i][j];
  };
  CHECK(at(1.2, 2.8, false) == doctest::Approx(11.0 / 15.0).epsilon(1e-12));
  CHECK(at(1.2, 2.8, true) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(at(0.5, 2.8, false) == doctest::Approx(13.0 / 15.0).epsilon(1e-12));
  CHECK(at(0.5, 2.8, true) == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("bound reports serialize with their key fields") {
  auto q = quotes_from_measure(four_atom(), {1.0, 1.8, 2.2, 3.0});
  auto r = lower_bound_finite(q, Barriers{1.2, 2.8});
  auto text = r.serialize();
  CHECK(text.find("lower") != std::string::npos);
  CHECK(text.find("upper") != std::string::npos);
}
