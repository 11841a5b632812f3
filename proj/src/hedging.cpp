#include "dnt/hedging.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dnt {

namespace {
constexpr double kTol = 1e-12;

double leg_payoff(const OptionLeg& leg, double s) {
  switch (leg.kind) {
    case LegKind::Call:
      return leg.qty * std::max(s - leg.strike, 0.0);
    case LegKind::Put:
      return leg.qty * std::max(leg.strike - s, 0.0);
    case LegKind::DigitalGt:
      return leg.qty * (s > leg.strike ? 1.0 : 0.0);
    case LegKind::DigitalGe:
      return leg.qty * (s >= leg.strike ? 1.0 : 0.0);
    case LegKind::CorridorDigital:
      return leg.qty * (s > leg.strike && s < leg.strike2 ? 1.0 : 0.0);
  }
  return 0.0;
}

const char* kind_name(LegKind k) {
  switch (k) {
    case LegKind::Call: return "call";
    case LegKind::Put: return "put";
    case LegKind::DigitalGt: return "digital>";
    case LegKind::DigitalGe: return "digital>=";
    case LegKind::CorridorDigital: return "corridor";
  }
  return "?";
}

}  // namespace

std::string HedgePortfolio::serialize() const {
  std::ostringstream os;
  os << "portfolio " << label << "\n";
  os << "  cash " << cash << "\n";
  for (const auto& o : options) {
    os << "  " << kind_name(o.kind) << " K=" << o.strike;
    if (o.kind == LegKind::CorridorDigital) os << " K2=" << o.strike2;
    os << " qty=" << o.qty << "\n";
  }
  for (const auto& f : forwards) {
    os << "  forward@" << f.level << " qty=" << f.qty;
    if (f.unless_first) os << " unless-first@" << *f.unless_first;
    os << "\n";
  }
  return os.str();
}

double dnt_payoff(const Path& path, const Barriers& barriers) {
  for (double v : path.values)
    if (v <= barriers.lo + kTol || v >= barriers.hi - kTol) return 0.0;
  return 1.0;
}

double evaluate_on_path(const HedgePortfolio& h, const Path& path) {
  double st = path.terminal();
  double v = h.cash;
  for (const auto& o : h.options) v += leg_payoff(o, st);
  for (const auto& f : h.forwards) {
    auto t = path.hit_time(f.level);
    if (!t) continue;
    if (f.unless_first) {
      auto tu = path.hit_time(*f.unless_first);
      if (tu && (*tu < *t || (*tu == *t && *f.unless_first > f.level)))
        continue;
    }
    v += f.qty * (st - f.level);
  }
  return v;
}

PricingSource::PricingSource(const CallCurve& curve, DigitalQuotes digitals)
    : curve_(&curve), digitals_(std::move(digitals)) {}

PricingSource::PricingSource(const CallQuoteSet& quotes, DigitalQuotes digitals)
    : quotes_(&quotes), digitals_(std::move(digitals)) {}

double PricingSource::call(double k) const {
  if (curve_) return (*curve_)(k);
  return quotes_->call(k);
}

double PricingSource::put(double k) const {
  if (curve_) return curve_->put(k);
  return quotes_->put(k);
}

double PricingSource::digital_gt(double k) const {
  if (digitals_.lower &&
      std::abs(digitals_.lower->level - k) <= kTol * (1.0 + std::abs(k)))
    return digitals_.lower->price;
  if (curve_) return curve_->digital_gt(k);
  throw std::runtime_error("digital 1{S>" + std::to_string(k) + "} not priced");
}

double PricingSource::digital_ge(double k) const {
  if (digitals_.upper &&
      std::abs(digitals_.upper->level - k) <= kTol * (1.0 + std::abs(k)))
    return digitals_.upper->price;
  if (curve_) return curve_->digital_ge(k);
  throw std::runtime_error("digital 1{S>=" + std::to_string(k) + "} not priced");
}

double PricingSource::cost(const HedgePortfolio& h) const {
  double c = h.cash;
  for (const auto& o : h.options) {
    switch (o.kind) {
      case LegKind::Call:
        c += o.qty * call(o.strike);
        break;
      case LegKind::Put:
        c += o.qty * put(o.strike);
        break;
      case LegKind::DigitalGt:
        c += o.qty * digital_gt(o.strike);
        break;
      case LegKind::DigitalGe:
        c += o.qty * digital_ge(o.strike);
        break;
      case LegKind::CorridorDigital:
        c += o.qty * (digital_gt(o.strike) - digital_ge(o.strike2));
        break;
    }
  }
  return c;  // forwards are costless at inception
}

double portfolio_cost(const HedgePortfolio& h, const PricingSource& prices) {
  return prices.cost(h);
}

HedgePortfolio build_superhedge_I(const Barriers& b) {
  HedgePortfolio h;
  h.label = "uH1";
  h.options.push_back({LegKind::CorridorDigital, b.lo, b.hi, 1.0});
  return h;
}

HedgePortfolio build_superhedge_II(double k, const Barriers& b) {
  if (!(k > b.lo)) throw std::invalid_argument("superhedge II needs K > lo");
  double a = 1.0 / (k - b.lo);
  HedgePortfolio h;
  h.label = "uH2";
  h.options.push_back({LegKind::DigitalGt, b.lo, 0.0, 1.0});
  h.options.push_back({LegKind::Put, b.lo, 0.0, -a});
  h.options.push_back({LegKind::Call, k, 0.0, a});
  h.forwards.push_back({b.lo, std::nullopt, -a});
  return h;
}

HedgePortfolio build_superhedge_III(double k, const Barriers& b) {
  if (!(k < b.hi)) throw std::invalid_argument("superhedge III needs K < hi");
  double a = 1.0 / (b.hi - k);
  HedgePortfolio h;
  h.label = "uH3";
  h.cash = 1.0;
  h.options.push_back({LegKind::DigitalGe, b.hi, 0.0, -1.0});
  h.options.push_back({LegKind::Put, k, 0.0, a});
  h.options.push_back({LegKind::Call, b.hi, 0.0, -a});
  h.forwards.push_back({b.hi, std::nullopt, a});
  return h;
}

HedgePortfolio build_subhedge_I() {
  HedgePortfolio h;
  h.label = "lH1";
  return h;
}

HedgePortfolio build_subhedge_II(double k1, double k2, const Barriers& b) {
  if (!(b.lo < k1) || !(k1 <= k2) || !(k2 < b.hi))
    throw std::invalid_argument("subhedge II needs lo < K1 <= K2 < hi");
  double au = 1.0 / (b.hi - k2);
  double ad = 1.0 / (k1 - b.lo);
  HedgePortfolio h;
  h.label = "lH2";
  h.cash = 1.0;
  h.options.push_back({LegKind::Call, k2, 0.0, -au});
  h.options.push_back({LegKind::Put, k1, 0.0, -ad});
  h.forwards.push_back({b.hi, b.lo, au});
  h.forwards.push_back({b.lo, b.hi, -ad});
  return h;
}

namespace {

// Index i with K_i < level < K_{i+1}; throws if the level is quoted.
std::size_t straddle_index(const CallQuoteSet& q, double level) {
  if (q.has_strike(level))
    throw std::invalid_argument("level coincides with a quoted strike");
  for (std::size_t i = 0; i + 1 < q.size(); ++i)
    if (q.strikes[i] < level && level < q.strikes[i + 1]) return i;
  throw std::invalid_argument("level outside the quoted strike range");
}

void add_call(HedgePortfolio& h, double k, double qty) {
  h.options.push_back({LegKind::Call, k, 0.0, qty});
}

void add_put(HedgePortfolio& h, double k, double qty) {
  h.options.push_back({LegKind::Put, k, 0.0, qty});
}

}  // namespace

std::pair<HedgePortfolio, HedgePortfolio> build_digital_superhedges(
    const CallQuoteSet& quotes, double level) {
  quotes.validate();
  std::size_t i = straddle_index(quotes, level);
  if (i < 1 || i + 2 >= quotes.size())
    throw std::invalid_argument("too few strikes around the digital level");
  const auto& K = quotes.strikes;
  HedgePortfolio x1;
  x1.label = "X1";
  {
    double d = K[i] - K[i - 1];
    add_call(x1, K[i - 1], 1.0 / d);
    add_call(x1, K[i], -1.0 / d);
  }
  HedgePortfolio x2;
  x2.label = "X2";
  {
    double a = 1.0 / (level - K[i]);
    double d2 = K[i + 2] - K[i + 1];
    add_call(x2, K[i], a);
    add_call(x2, K[i + 1], -a * (K[i + 2] - level) / d2);
    add_call(x2, K[i + 2], a * (K[i + 1] - level) / d2);
  }
  return {x1, x2};
}

std::vector<HedgePortfolio> build_finite_superhedges(const CallQuoteSet& quotes,
                                                     const Barriers& b) {
  quotes.validate();
  b.validate(quotes.spot);
  const auto& K = quotes.strikes;
  std::size_t i = straddle_index(quotes, b.lo);
  std::size_t j = straddle_index(quotes, b.hi);
  // The X/Y digital hedges only need two quoted strikes on the far side
  // of their own barrier; the barriers may share a quote gap (i == j).
  if (i < 1 || i > j || i + 2 >= quotes.size() || j < 1 ||
      j + 2 >= quotes.size())
    throw std::invalid_argument("strike layout too sparse around the barriers");

  // Digital-at-lo superhedges and digital-at-hi subhedges, one per secant
  // branch of the synthetic barrier prices.
  auto [x1, x2] = build_digital_superhedges(quotes, b.lo);
  HedgePortfolio y1;  // <= 1{S_T >= hi}: call spread above the barrier
  {
    double d = K[j + 2] - K[j + 1];
    add_call(y1, K[j + 1], 1.0 / d);
    add_call(y1, K[j + 2], -1.0 / d);
  }
  HedgePortfolio y2;  // <= 1{S_T >= hi}: kinked through K_{j-1}, K_j, K_{j+1}
  {
    double dj = K[j] - K[j - 1];
    double e = K[j + 1] - b.hi;
    add_call(y2, K[j - 1], -(b.hi - K[j]) / (dj * e));
    add_call(y2, K[j], (b.hi - K[j - 1]) / (dj * e));
    add_call(y2, K[j + 1], -1.0 / e);
  }
  // Put-at-lo subhedges (<= (lo - S_T)^+) and call-at-hi subhedges
  // (<= (S_T - hi)^+), again one per branch.
  HedgePortfolio g1;
  {
    double d = K[i] - K[i - 1];
    add_put(g1, K[i], (b.lo - K[i - 1]) / d);
    add_put(g1, K[i - 1], -(b.lo - K[i]) / d);
  }
  HedgePortfolio g2;
  {
    double th = (K[i + 1] - b.lo) / (K[i + 2] - K[i + 1]);
    add_put(g2, K[i + 1], 1.0 + th);
    add_put(g2, K[i + 2], -th);
  }
  HedgePortfolio c1;  // left branch at hi
  {
    double ph = (b.hi - K[j]) / (K[j] - K[j - 1]);
    add_call(c1, K[j], 1.0 + ph);
    add_call(c1, K[j - 1], -ph);
  }
  HedgePortfolio c2;  // right branch at hi
  {
    double d = K[j + 2] - K[j + 1];
    add_call(c2, K[j + 1], (K[j + 2] - b.hi) / d);
    add_call(c2, K[j + 2], -(K[j + 1] - b.hi) / d);
  }

  auto scaled = [](HedgePortfolio& dst, const HedgePortfolio& src, double f) {
    for (auto o : src.options) {
      o.qty *= f;
      dst.options.push_back(o);
    }
    dst.cash += f * src.cash;
  };

  std::vector<HedgePortfolio> out;
  const HedgePortfolio* xs[2] = {&x1, &x2};
  const HedgePortfolio* ys[2] = {&y1, &y2};
  for (int m = 0; m < 2; ++m) {
    for (int n = 0; n < 2; ++n) {
      HedgePortfolio h;
      h.label = "HbarI_" + std::to_string(m + 1) + std::to_string(n + 1);
      scaled(h, *xs[m], 1.0);
      scaled(h, *ys[n], -1.0);
      out.push_back(std::move(h));
    }
  }
  const HedgePortfolio* gs[2] = {&g1, &g2};
  // branch-aligned digital/call pairs around hi: y2/c1 use the left
  // secant, y1/c2 the right one
  const HedgePortfolio* ysb[2] = {&y2, &y1};
  const HedgePortfolio* cs[2] = {&c1, &c2};
  for (std::size_t s = 0; s < quotes.size(); ++s) {
    double k = K[s];
    if (k > quotes.spot + kTol) {
      double a = 1.0 / (k - b.lo);
      for (int m = 0; m < 2; ++m) {
        HedgePortfolio h;
        h.label = "HbarII_" + std::to_string(m + 1) + "@" + std::to_string(k);
        scaled(h, *xs[m], 1.0);
        add_call(h, k, a);
        scaled(h, *gs[m], -a);
        h.forwards.push_back({b.lo, std::nullopt, -a});
        out.push_back(std::move(h));
      }
    }
    if (k < quotes.spot - kTol) {
      double a = 1.0 / (b.hi - k);
      for (int n = 0; n < 2; ++n) {
        HedgePortfolio h;
        h.label = "HbarIII_" + std::to_string(n + 1) + "@" + std::to_string(k);
        h.cash = 1.0;
        scaled(h, *ysb[n], -1.0);
        add_put(h, k, a);
        scaled(h, *cs[n], -a);
        h.forwards.push_back({b.hi, std::nullopt, a});
        out.push_back(std::move(h));
      }
    }
  }
  return out;
}

}  // namespace dnt
