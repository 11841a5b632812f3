#include "dnt/arbitrage.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dnt {

namespace {

double tol_for(double spot) { return 1e-9 * spot; }

void add_call_leg(HedgePortfolio& h, double k, double qty) {
  h.options.push_back({LegKind::Call, k, 0.0, qty});
}

HedgePortfolio call_spread(const std::string& label, double k1, double k2,
                           double qty) {
  HedgePortfolio h;
  h.label = label;
  add_call_leg(h, k1, qty);
  add_call_leg(h, k2, -qty);
  return h;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::NONE: return "NONE";
    case Verdict::WFLVR: return "WFLVR";
    case Verdict::WEAK: return "WEAK";
    case Verdict::MODEL_FREE: return "MODEL_FREE";
  }
  return "?";
}

std::string ArbitrageReport::serialize() const {
  std::ostringstream os;
  os << "verdict " << to_string(verdict) << "\n";
  if (!explanation.empty()) os << "violated " << explanation << "\n";
  for (const auto& w : witnesses) {
    os << "witness if " << w.condition << "\n";
    std::istringstream body(w.portfolio.serialize());
    std::string line;
    while (std::getline(body, line)) os << "  " << line << "\n";
  }
  return os.str();
}

ArbitrageReport check_curve(const CallCurve& curve) {
  ArbitrageReport rep;
  const auto& k = curve.knots();
  const auto& v = curve.values();
  double s0 = curve.spot();
  double tol = tol_for(s0);
  // non-negativity
  for (std::size_t m = 0; m < k.size(); ++m) {
    if (v[m] < -tol) {
      rep.verdict = Verdict::MODEL_FREE;
      rep.explanation = "negative call value at K=" + std::to_string(k[m]);
      HedgePortfolio h;
      h.label = "buy-negative-call";
      add_call_leg(h, k[m], 1.0);
      rep.witnesses.push_back({"always", h});
      return rep;
    }
  }
  // decreasing
  for (std::size_t m = 1; m < k.size(); ++m) {
    if (v[m] > v[m - 1] + tol) {
      rep.verdict = Verdict::MODEL_FREE;
      rep.explanation = "call values increase on [" + std::to_string(k[m - 1]) +
                        "," + std::to_string(k[m]) + "]";
      rep.witnesses.push_back(
          {"always", call_spread("call-spread", k[m - 1], k[m], 1.0)});
      return rep;
    }
  }
  // initial slope >= -1: calls dominate the discounted forward
  if (curve.slope_right(0.0) < -1.0 - tol) {
    rep.verdict = Verdict::MODEL_FREE;
    rep.explanation = "initial call slope below -1";
    HedgePortfolio h;
    h.label = "call-plus-cash-vs-forward";
    h.cash = k[1] - s0;  // self-financing: cost = C(K1) - (S0 - K1) < 0
    add_call_leg(h, k[1], 1.0);
    h.forwards.push_back({s0, std::nullopt, -1.0});
    rep.witnesses.push_back({"always", h});
    return rep;
  }
  // convexity at each interior knot
  for (std::size_t m = 1; m + 1 < k.size(); ++m) {
    double sl = (v[m] - v[m - 1]) / (k[m] - k[m - 1]);
    double sr = (v[m + 1] - v[m]) / (k[m + 1] - k[m]);
    if (sr < sl - tol) {
      rep.verdict = Verdict::MODEL_FREE;
      rep.explanation = "convexity fails at K=" + std::to_string(k[m]);
      double lam = (k[m + 1] - k[m]) / (k[m + 1] - k[m - 1]);
      HedgePortfolio h;
      h.label = "butterfly";
      add_call_leg(h, k[m - 1], lam);
      add_call_leg(h, k[m + 1], 1.0 - lam);
      add_call_leg(h, k[m], -1.0);
      rep.witnesses.push_back({"always", h});
      return rep;
    }
  }
  // tail (flat beyond the last knot by construction)
  if (curve.last_value() > tol) {
    rep.verdict = Verdict::WFLVR;
    rep.explanation = "tail value does not vanish: C(K) -> " +
                      std::to_string(curve.last_value());
    HedgePortfolio h;
    h.label = "-(S_T - n)^+ as n -> infinity";
    add_call_leg(h, k.back() + 1.0, -1.0);  // representative element
    rep.witnesses.push_back({"limit of the sequence, n -> infinity", h});
    return rep;
  }
  return rep;
}

ArbitrageReport check_quotes(const CallQuoteSet& quotes) {
  quotes.validate();
  ArbitrageReport rep;
  const auto& k = quotes.strikes;
  const auto& v = quotes.prices;
  double tol = tol_for(quotes.spot);
  for (std::size_t m = 0; m < k.size(); ++m) {
    if (v[m] < -tol) {
      rep.verdict = Verdict::MODEL_FREE;
      rep.explanation = "negative call price at K=" + std::to_string(k[m]);
      HedgePortfolio h;
      h.label = "buy-negative-call";
      add_call_leg(h, k[m], 1.0);
      rep.witnesses.push_back({"always", h});
      return rep;
    }
  }
  for (std::size_t m = 1; m < k.size(); ++m) {
    if (v[m] > v[m - 1] + tol) {
      rep.verdict = Verdict::MODEL_FREE;
      rep.explanation = "monotonicity on [" + std::to_string(k[m - 1]) + "," +
                        std::to_string(k[m]) + "]";
      rep.witnesses.push_back(
          {"always", call_spread("call-spread", k[m - 1], k[m], 1.0)});
      return rep;
    }
  }
  if ((v[1] - v[0]) / (k[1] - k[0]) < -1.0 - tol) {
    rep.verdict = Verdict::MODEL_FREE;
    rep.explanation = "initial slope below -1";
    HedgePortfolio h;
    h.label = "call-plus-cash-vs-forward";
    h.cash = k[1] - quotes.spot;  // self-financing as in the curve case
    add_call_leg(h, k[1], 1.0);
    h.forwards.push_back({quotes.spot, std::nullopt, -1.0});
    rep.witnesses.push_back({"always", h});
    return rep;
  }
  for (std::size_t m = 1; m + 1 < k.size(); ++m) {
    double sl = (v[m] - v[m - 1]) / (k[m] - k[m - 1]);
    double sr = (v[m + 1] - v[m]) / (k[m + 1] - k[m]);
    if (sr < sl - tol) {
      rep.verdict = Verdict::MODEL_FREE;
      rep.explanation = "convexity at K=" + std::to_string(k[m]);
      double lam = (k[m + 1] - k[m]) / (k[m + 1] - k[m - 1]);
      HedgePortfolio h;
      h.label = "butterfly";
      add_call_leg(h, k[m - 1], lam);
      add_call_leg(h, k[m + 1], 1.0 - lam);
      add_call_leg(h, k[m], -1.0);
      rep.witnesses.push_back({"always", h});
      return rep;
    }
  }
  // A terminal flat run at a positive level cannot be extended to zero:
  // weak arbitrage with the two-case witness pair.
  std::size_t n = k.size() - 1;
  if (v[n] > tol) {
    std::size_t f = n;
    while (f > 0 && std::abs(v[f - 1] - v[n]) <= tol) --f;
    if (f < n) {
      rep.verdict = Verdict::WEAK;
      rep.explanation = "flat positive tail: C(" + std::to_string(k[f]) +
                        ") = C(" + std::to_string(k[f + 1]) +
                        ") = " + std::to_string(v[n]);
      rep.witnesses.push_back(
          {"P(S_T > " + std::to_string(k[f]) + ") > 0",
           call_spread("call-spread", k[f], k[f + 1], 1.0)});
      HedgePortfolio h2;
      h2.label = "cash-minus-call";
      h2.cash = v[n];
      add_call_leg(h2, k[f], -1.0);
      rep.witnesses.push_back(
          {"P(S_T > " + std::to_string(k[f]) + ") = 0", h2});
      return rep;
    }
  }
  return rep;
}

namespace {

// Quotes plus up to two zero-price knots past the last strike so that
// right-wing secants always exist.  The first extra knot is the terminal
// strike at which the linear extension reaches zero.
struct Augmented {
  std::vector<double> k, v;
  std::size_t n_real{};  // count of genuine quotes

  double price(std::size_t m) const { return v[m]; }
};

Augmented augment(const CallQuoteSet& q, double min_terminal) {
  Augmented a;
  a.k = q.strikes;
  a.v = q.prices;
  a.n_real = q.strikes.size();
  double tol = tol_for(q.spot);
  std::size_t n = a.k.size() - 1;
  if (a.v[n] > tol) {
    if (!(a.v[n - 1] > a.v[n] + tol))
      throw std::runtime_error("flat positive tail: no zero extension");
    double z = a.k[n] + a.v[n] * (a.k[n] - a.k[n - 1]) / (a.v[n - 1] - a.v[n]);
    a.k.push_back(std::max(z, min_terminal));
    a.v.push_back(0.0);
  }
  a.k.push_back(a.k.back() + 1.0);
  a.v.push_back(0.0);
  a.k.push_back(a.k.back() + 1.0);
  a.v.push_back(0.0);
  return a;
}

struct SideCheck {
  bool quoted{};
  double ratio1{}, ratio2{};
  double cb{};           // call value at the barrier (quoted or synthetic)
  bool wa_equality{};    // barrier call sits exactly on the critical secant
  std::size_t i{};       // index with K_i <= barrier < K_{i+1}
};

// Analysis around one barrier level. `lower` distinguishes the 1{S_T>b}
// digital from the 1{S_T>=bbar} one (the critical secants mirror).
SideCheck analyze_side(const Augmented& a, double level, bool lower,
                       double tol) {
  SideCheck s;
  std::size_t idx = a.k.size();
  for (std::size_t m = 0; m < a.n_real; ++m)
    if (std::abs(a.k[m] - level) <= tol) idx = m;
  auto secant = [&](std::size_t p, std::size_t q) {
    return (a.v[q] - a.v[p]) / (a.k[q] - a.k[p]);
  };
  if (idx != a.k.size()) {
    // barrier is a traded strike
    if (idx < 2 || idx + 2 >= a.k.size())
      throw std::runtime_error(
          "layout error: not enough strikes around the quoted barrier " +
          std::to_string(level));
    s.quoted = true;
    s.i = idx;
    s.cb = a.v[idx];
    s.ratio1 = (s.cb - a.v[idx + 1]) / (a.k[idx + 1] - level);
    s.ratio2 = (a.v[idx - 1] - s.cb) / (level - a.k[idx - 1]);
    if (lower) {
      // right secant through (K_{i+1}, K_{i+2}) back-extrapolated to b
      double line = a.v[idx + 1] - secant(idx + 1, idx + 2) *
                                       (a.k[idx + 1] - level);
      s.wa_equality = std::abs(s.cb - line) <= tol;
    } else {
      double line = a.v[idx - 1] + secant(idx - 2, idx - 1) *
                                       (level - a.k[idx - 1]);
      s.wa_equality = std::abs(s.cb - line) <= tol;
    }
    return s;
  }
  // barrier strictly between strikes
  std::size_t i = a.k.size();
  for (std::size_t m = 0; m + 1 < a.k.size(); ++m)
    if (a.k[m] < level && level < a.k[m + 1]) i = m;
  if (i == a.k.size() || i < 1 || i + 2 >= a.k.size())
    throw std::runtime_error(
        "layout error: barrier " + std::to_string(level) +
        " lacks neighbouring strikes");
  s.i = i;
  double c_le = a.v[i] + secant(i - 1, i) * (level - a.k[i]);
  double c_re = a.v[i + 1] - secant(i + 1, i + 2) * (a.k[i + 1] - level);
  s.cb = std::max(c_le, c_re);
  s.ratio1 = (s.cb - a.v[i + 1]) / (a.k[i + 1] - level);
  s.ratio2 = (a.v[i] - s.cb) / (level - a.k[i]);
  // the critical branch: right secant for the lower digital, left for
  // the upper one
  s.wa_equality = lower ? (c_re >= c_le - tol) : (c_le >= c_re - tol);
  return s;
}

// Superhedge of 1{S_T > level} (or 1{S_T >= level}); cheapest of the two
// traded shapes around an unquoted level, plain spread for a quoted one.
HedgePortfolio cheapest_digital_super(const Augmented& a, const SideCheck& s,
                                      double level) {
  if (s.quoted)
    return call_spread("digital-superhedge", a.k[s.i - 1], level,
                       1.0 / (level - a.k[s.i - 1]));
  std::size_t i = s.i;
  double c_le = a.v[i] + (a.v[i] - a.v[i - 1]) / (a.k[i] - a.k[i - 1]) *
                             (level - a.k[i]);
  if (s.cb <= c_le + kPriceTol) {  // left branch: plain spread
    return call_spread("digital-superhedge", a.k[i - 1], a.k[i],
                       1.0 / (a.k[i] - a.k[i - 1]));
  }
  HedgePortfolio h;  // capped spread through the two strikes above
  h.label = "digital-superhedge";
  double al = 1.0 / (level - a.k[i]);
  double d2 = a.k[i + 2] - a.k[i + 1];
  add_call_leg(h, a.k[i], al);
  add_call_leg(h, a.k[i + 1], -al * (a.k[i + 2] - level) / d2);
  add_call_leg(h, a.k[i + 2], al * (a.k[i + 1] - level) / d2);
  return h;
}

// Subhedge of the digital at `level`, most expensive traded shape.
HedgePortfolio dearest_digital_sub(const Augmented& a, const SideCheck& s,
                                   double level) {
  if (s.quoted)
    return call_spread("digital-subhedge", level, a.k[s.i + 1],
                       1.0 / (a.k[s.i + 1] - level));
  std::size_t i = s.i;
  double c_le = a.v[i] + (a.v[i] - a.v[i - 1]) / (a.k[i] - a.k[i - 1]) *
                             (level - a.k[i]);
  if (s.cb <= c_le + kPriceTol) {
    // left branch: kinked subhedge through K_{i-1}, K_i, K_{i+1}
    HedgePortfolio h;
    h.label = "digital-subhedge";
    double dj = a.k[i] - a.k[i - 1];
    double e = a.k[i + 1] - level;
    add_call_leg(h, a.k[i - 1], -(level - a.k[i]) / (dj * e));
    add_call_leg(h, a.k[i], (level - a.k[i - 1]) / (dj * e));
    add_call_leg(h, a.k[i + 1], -1.0 / e);
    return h;
  }
  return call_spread("digital-subhedge", a.k[i + 1], a.k[i + 2],
                     1.0 / (a.k[i + 2] - a.k[i + 1]));
}

HedgePortfolio digital_leg(double level, bool lower, double qty) {
  HedgePortfolio h;
  h.label = qty > 0 ? "digital" : "short-digital";
  h.options.push_back(
      {lower ? LegKind::DigitalGt : LegKind::DigitalGe, level, 0.0, qty});
  return h;
}

void merge(HedgePortfolio& dst, const HedgePortfolio& src, double f) {
  dst.cash += f * src.cash;
  for (auto o : src.options) {
    o.qty *= f;
    dst.options.push_back(o);
  }
  for (auto fw : src.forwards) {
    fw.qty *= f;
    dst.forwards.push_back(fw);
  }
}

}  // namespace

ArbitrageReport check_digitals(const CallQuoteSet& quotes,
                               const DigitalQuotes& digitals,
                               const Barriers& barriers) {
  quotes.validate();
  barriers.validate(quotes.spot);
  ArbitrageReport base = check_quotes(quotes);
  if (base.verdict == Verdict::MODEL_FREE) return base;
  double tol = tol_for(quotes.spot);
  // layout sanity shared by both sides
  if (!(barriers.lo > quotes.strikes[1]))
    throw std::runtime_error("layout error: lower barrier at or below K_1");
  if (!(barriers.hi < quotes.strikes.back()))
    throw std::runtime_error("layout error: upper barrier at or above K_N");
  Augmented a = augment(quotes, barriers.hi + 1.0);

  ArbitrageReport rep = base;  // may already be WEAK from the quotes

  auto run_side = [&](const DigitalQuote& dq, bool lower) {
    double level = dq.level;
    double price = dq.price;
    SideCheck s = analyze_side(a, level, lower, tol);
    const char* tag = lower ? "lo" : "hi";
    if (price < -tol || price > 1.0 + tol) {
      rep.verdict = Verdict::MODEL_FREE;
      rep.explanation = std::string("digital price outside [0,1] at ") + tag;
      HedgePortfolio h;
      if (price < 0) {
        h = digital_leg(level, lower, 1.0);
      } else {
        h.cash = 1.0;
        merge(h, digital_leg(level, lower, -1.0), 1.0);
      }
      h.label = "digital-range";
      rep.witnesses.assign({{"always", h}});
      return;
    }
    if (price > s.ratio2 + tol) {
      rep.verdict = Verdict::MODEL_FREE;
      rep.explanation = std::string("digital above its call-spread bound at ") + tag;
      HedgePortfolio h = cheapest_digital_super(a, s, level);
      merge(h, digital_leg(level, lower, -1.0), 1.0);
      h.label = "digital-vs-superhedge";
      rep.witnesses.assign({{"always", h}});
      return;
    }
    if (price < s.ratio1 - tol) {
      rep.verdict = Verdict::MODEL_FREE;
      rep.explanation = std::string("digital below its call-spread bound at ") + tag;
      HedgePortfolio h = digital_leg(level, lower, 1.0);
      merge(h, dearest_digital_sub(a, s, level), -1.0);
      h.label = "digital-vs-subhedge";
      rep.witnesses.assign({{"always", h}});
      return;
    }
    if (rep.verdict == Verdict::MODEL_FREE) return;
    // weak-arbitrage boundary cases (prices only approachable by a sequence of models)
    bool wa = false;
    std::vector<ConditionalWitness> wit;
    if (lower) {
      bool strict_inside = price > s.ratio1 + tol;
      if (s.quoted && s.wa_equality && strict_inside) {
        wa = true;
        std::size_t i = s.i;
        HedgePortfolio h1;
        h1.label = "short-digital-plus-spread";
        merge(h1, digital_leg(level, true, -1.0), 1.0);
        merge(h1,
              call_spread("", level, a.k[i + 1], 1.0 / (a.k[i + 1] - level)),
              1.0);
        wit.push_back({"P(S_T in (" + std::to_string(level) + "," +
                           std::to_string(a.k[i + 1]) + ")) = 0",
                       h1});
        HedgePortfolio h2;
        h2.label = "zero-cost-kink";
        double e1 = a.k[i + 1] - level, e2 = a.k[i + 2] - a.k[i + 1];
        add_call_leg(h2, level, 1.0 / e1);
        add_call_leg(h2, a.k[i + 1], -(1.0 / e1 + 1.0 / e2));
        add_call_leg(h2, a.k[i + 2], 1.0 / e2);
        wit.push_back({"P(S_T in (" + std::to_string(level) + "," +
                           std::to_string(a.k[i + 1]) + ")) > 0",
                       h2});
      } else if (!s.quoted && s.wa_equality && strict_inside &&
                 std::abs(price - s.ratio2) <= tol) {
        wa = true;
        HedgePortfolio h = cheapest_digital_super(a, s, level);
        merge(h, digital_leg(level, true, -1.0), 1.0);
        h.label = "zero-cost-digital-superhedge";
        wit.push_back(
            {"any model repricing the quotes (it must charge the kink)", h});
      }
      if (wa) {
        rep.verdict = Verdict::WEAK;
        rep.explanation = std::string("digital pinned at the secant boundary at lo");
        for (auto& w : wit) rep.witnesses.push_back(std::move(w));
      }
    } else {
      bool strict_inside = price < s.ratio2 - tol;
      if (s.quoted && s.wa_equality && strict_inside) {
        wa = true;
        std::size_t i = s.i;
        HedgePortfolio h1;
        h1.label = "digital-minus-spread";
        merge(h1, digital_leg(level, false, 1.0), 1.0);
        merge(h1,
              call_spread("", a.k[i - 1], level, 1.0 / (level - a.k[i - 1])),
              -1.0);
        wit.push_back({"P(S_T in (" + std::to_string(a.k[i - 1]) + "," +
                           std::to_string(level) + ")) = 0",
                       h1});
        HedgePortfolio h2;
        h2.label = "zero-cost-kink";
        double e1 = level - a.k[i - 1], e2 = a.k[i - 1] - a.k[i - 2];
        add_call_leg(h2, level, 1.0 / e1);
        add_call_leg(h2, a.k[i - 1], -(1.0 / e1 + 1.0 / e2));
        add_call_leg(h2, a.k[i - 2], 1.0 / e2);
        wit.push_back({"P(S_T in (" + std::to_string(a.k[i - 2]) + "," +
                           std::to_string(level) + ")) > 0",
                       h2});
      } else if (!s.quoted && s.wa_equality && strict_inside &&
                 std::abs(price - s.ratio1) <= tol) {
        wa = true;
        HedgePortfolio h = digital_leg(level, false, 1.0);
        merge(h, dearest_digital_sub(a, s, level), -1.0);
        h.label = "zero-cost-digital-subhedge";
        wit.push_back(
            {"any model repricing the quotes (it must charge the kink)", h});
      }
      if (wa) {
        rep.verdict = Verdict::WEAK;
        rep.explanation = std::string("digital pinned at the secant boundary at hi");
        for (auto& w : wit) rep.witnesses.push_back(std::move(w));
      }
    }
  };

  if (digitals.lower) {
    if (std::abs(digitals.lower->level - barriers.lo) > tol)
      throw std::invalid_argument("lower digital level != lower barrier");
    run_side(*digitals.lower, true);
  }
  if (rep.verdict != Verdict::MODEL_FREE && digitals.upper) {
    if (std::abs(digitals.upper->level - barriers.hi) > tol)
      throw std::invalid_argument("upper digital level != upper barrier");
    run_side(*digitals.upper, false);
  }
  // ordering between the two digitals
  if (rep.verdict != Verdict::MODEL_FREE && digitals.lower && digitals.upper &&
      digitals.lower->price < digitals.upper->price - tol) {
    rep.verdict = Verdict::MODEL_FREE;
    rep.explanation = "digital ordering: price(1{S>lo}) < price(1{S>=hi})";
    HedgePortfolio h;
    h.label = "digital-order";
    merge(h, digital_leg(barriers.lo, true, 1.0), 1.0);
    merge(h, digital_leg(barriers.hi, false, -1.0), 1.0);
    rep.witnesses.assign({{"always", h}});
  }
  return rep;
}

PerturbResult perturb_to_consistent(const CallQuoteSet& quotes,
                                    const DigitalQuotes& digitals,
                                    const Barriers& barriers, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
  ArbitrageReport rep = check_digitals(quotes, digitals, barriers);
  if (rep.verdict == Verdict::MODEL_FREE)
    throw std::runtime_error("cannot perturb a model-free arbitrage away");
  PerturbResult out{quotes, digitals};
  if (rep.verdict == Verdict::NONE) return out;
  double tol = tol_for(quotes.spot);

  // flat positive tail in the quotes: tilt the terminal run downwards
  {
    auto& v = out.quotes.prices;
    const auto& k = out.quotes.strikes;
    std::size_t n = k.size() - 1;
    if (v[n] > tol) {
      std::size_t f = n;
      while (f > 0 && std::abs(v[f - 1] - v[n]) <= tol) --f;
      if (f < n) {
        double d = std::min(eps / 2.0, v[n] / 2.0);
        if (f > 0) {
          double prev_slope = (v[f] - v[f - 1]) / (k[f] - k[f - 1]);
          d = std::min(d, -prev_slope * (k[n] - k[f]) / 2.0);
        }
        for (std::size_t m = f + 1; m <= n; ++m)
          v[m] -= d * (k[m] - k[f]) / (k[n] - k[f]);
      }
    }
  }

  // digital boundary cases: nudge prices off the critical secants
  Augmented a = augment(out.quotes, barriers.hi + 1.0);
  auto fix_side = [&](DigitalQuote& dq, bool lower) {
    SideCheck s = analyze_side(a, dq.level, lower, tol);
    if (lower) {
      bool strict_inside = dq.price > s.ratio1 + tol;
      if (s.quoted && s.wa_equality && strict_inside) {
        // lift the quoted barrier call off the right secant; keep the
        // digital inside the induced bracket
        std::size_t i = s.i;
        double room = (s.ratio2 - s.ratio1) * (a.k[i + 1] - dq.level);
        double d = std::min({eps / 2.0, room / 4.0});
        out.quotes.prices[i] += d;
        a.v[i] += d;
        double r1 = s.ratio1 + d / (a.k[i + 1] - dq.level);
        double r2 = s.ratio2 - d / (dq.level - a.k[i - 1]);
        double nudge = std::min(d / (a.k[i + 1] - dq.level), eps / 2.0);
        if (dq.price <= r1 + tol) dq.price = std::min(r1 + nudge, r2);
        if (dq.price > r2 + tol) dq.price = r2;
      } else if (!s.quoted && s.wa_equality &&
                 std::abs(dq.price - s.ratio2) <= tol && strict_inside) {
        dq.price -= std::min(eps / 2.0, (dq.price - s.ratio1) / 2.0);
      }
    } else {
      bool strict_inside = dq.price < s.ratio2 - tol;
      if (s.quoted && s.wa_equality && strict_inside) {
        std::size_t i = s.i;
        double room = (s.ratio2 - s.ratio1) * (dq.level - a.k[i - 1]);
        double d = std::min({eps / 2.0, room / 4.0});
        out.quotes.prices[i] += d;
        a.v[i] += d;
        double r1 = s.ratio1 + d / (a.k[i + 1] - dq.level);
        double r2 = s.ratio2 - d / (dq.level - a.k[i - 1]);
        double nudge = std::min(d / (dq.level - a.k[i - 1]), eps / 2.0);
        if (dq.price >= r2 - tol) dq.price = std::max(r2 - nudge, r1);
        if (dq.price < r1 - tol) dq.price = r1;
      } else if (!s.quoted && s.wa_equality &&
                 std::abs(dq.price - s.ratio1) <= tol && strict_inside) {
        dq.price += std::min(eps / 2.0, (s.ratio2 - dq.price) / 2.0);
      }
    }
  };
  if (out.digitals.lower) fix_side(*out.digitals.lower, true);
  if (out.digitals.upper) fix_side(*out.digitals.upper, false);

  ArbitrageReport after = check_digitals(out.quotes, out.digitals, barriers);
  if (after.verdict != Verdict::NONE)
    throw std::runtime_error("perturbation failed to reach NONE: " +
                             after.explanation);
  return out;
}

}  // namespace dnt
