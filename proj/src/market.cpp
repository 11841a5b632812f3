#include "dnt/market.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dnt {

namespace {

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Splits a csv line, dropping anything after '#'.
std::vector<std::string> fields(const std::string& raw) {
  std::string line = raw.substr(0, raw.find('#'));
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(strip(tok));
  while (!out.empty() && out.back().empty()) out.pop_back();
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

double parse_num(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("bad " + what + ": '" + s + "'");
  }
  if (pos != s.size()) throw std::runtime_error("bad " + what + ": '" + s + "'");
  if (!std::isfinite(v)) throw std::runtime_error("non-finite " + what);
  return v;
}

}  // namespace

void Barriers::validate(double spot) const {
  if (!(lo > 0.0) || !(lo < spot) || !(hi > spot))
    throw std::invalid_argument("barriers must satisfy 0 < lo < spot < hi");
}

bool CallQuoteSet::has_strike(double k) const {
  for (double s : strikes)
    if (std::abs(s - k) <= kPriceTol * (1.0 + std::abs(k))) return true;
  return false;
}

std::size_t CallQuoteSet::index_of(double k) const {
  for (std::size_t i = 0; i < strikes.size(); ++i)
    if (std::abs(strikes[i] - k) <= kPriceTol * (1.0 + std::abs(k))) return i;
  throw std::out_of_range("strike not quoted: " + std::to_string(k));
}

double CallQuoteSet::call(double k) const { return prices[index_of(k)]; }

double CallQuoteSet::put(double k) const { return k - spot + call(k); }

void CallQuoteSet::validate() const {
  if (strikes.size() != prices.size())
    throw std::invalid_argument("strike/price size mismatch");
  if (strikes.empty()) throw std::invalid_argument("no quotes");
  if (strikes.front() != 0.0)
    throw std::invalid_argument("first strike must be 0");
  if (!(spot > 0.0)) throw std::invalid_argument("spot must be positive");
  if (std::abs(prices.front() - spot) > kPriceTol * spot)
    throw std::invalid_argument("price at strike 0 must equal spot");
  for (std::size_t i = 1; i < strikes.size(); ++i)
    if (!(strikes[i] > strikes[i - 1]))
      throw std::invalid_argument("strikes must be strictly increasing");
  for (double p : prices)
    if (!std::isfinite(p)) throw std::invalid_argument("non-finite price");
}

CallQuoteSet load_quotes(std::istream& in) {
  CallQuoteSet q;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto f = fields(line);
    if (f.empty()) continue;
    if (!have_header) {
      if (f[0] != "spot" || f.size() < 2 || f.size() > 3)
        throw std::runtime_error("line " + std::to_string(lineno) +
                                 ": expected header 'spot,<S0>[,<T>]'");
      q.spot = parse_num(f[1], "spot");
      if (f.size() == 3) q.maturity = parse_num(f[2], "maturity");
      have_header = true;
      continue;
    }
    if (f.size() != 2)
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": expected 'strike,price'");
    q.strikes.push_back(parse_num(f[0], "strike"));
    q.prices.push_back(parse_num(f[1], "price"));
  }
  if (!have_header) throw std::runtime_error("missing 'spot' header");
  // Sort by strike, then prepend the trivial strike-0 quote if absent.
  std::vector<std::size_t> order(q.strikes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return q.strikes[a] < q.strikes[b]; });
  CallQuoteSet out;
  out.spot = q.spot;
  out.maturity = q.maturity;
  for (std::size_t i : order) {
    out.strikes.push_back(q.strikes[i]);
    out.prices.push_back(q.prices[i]);
  }
  if (out.strikes.empty() || out.strikes.front() != 0.0) {
    out.strikes.insert(out.strikes.begin(), 0.0);
    out.prices.insert(out.prices.begin(), out.spot);
  }
  out.validate();
  return out;
}

CallQuoteSet load_quotes_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open quotes file: " + path);
  return load_quotes(in);
}

DigitalQuotes load_digitals(std::istream& in) {
  DigitalQuotes d;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto f = fields(line);
    if (f.empty()) continue;
    if (f.size() != 3)
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": expected 'lower|upper,<level>,<price>'");
    DigitalQuote quote{parse_num(f[1], "level"), parse_num(f[2], "price")};
    if (f[0] == "lower")
      d.lower = quote;
    else if (f[0] == "upper")
      d.upper = quote;
    else
      throw std::runtime_error("line " + std::to_string(lineno) +
                               ": side must be 'lower' or 'upper'");
  }
  return d;
}

DigitalQuotes load_digitals_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open digitals file: " + path);
  return load_digitals(in);
}

CallCurve::CallCurve(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() != values_.size() || knots_.empty())
    throw std::invalid_argument("curve knot/value size mismatch");
  if (knots_.front() != 0.0) throw std::invalid_argument("first knot must be 0");
  if (!(values_.front() > 0.0)) throw std::invalid_argument("spot must be positive");
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (!(knots_[i] > knots_[i - 1]))
      throw std::invalid_argument("knots must be strictly increasing");
}

double CallCurve::operator()(double k) const {
  if (k < 0.0) throw std::domain_error("negative strike");
  if (k >= knots_.back()) return values_.back();
  auto it = std::upper_bound(knots_.begin(), knots_.end(), k);
  std::size_t i = static_cast<std::size_t>(it - knots_.begin());  // k < knots_[i]
  double w = (k - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
  return values_[i - 1] + w * (values_[i] - values_[i - 1]);
}

double CallCurve::put(double k) const { return k - spot() + (*this)(k); }

double CallCurve::slope_right(double k) const {
  if (k < 0.0) throw std::domain_error("negative strike");
  if (k >= knots_.back()) return 0.0;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), k);
  std::size_t i = static_cast<std::size_t>(it - knots_.begin());
  return (values_[i] - values_[i - 1]) / (knots_[i] - knots_[i - 1]);
}

double CallCurve::slope_left(double k) const {
  if (k <= 0.0) {
    if (k < 0.0) throw std::domain_error("negative strike");
    return -1.0;  // full digital below the support
  }
  if (k > knots_.back()) return 0.0;
  // first knot >= k; the segment ending there carries the left slope
  auto it = std::lower_bound(knots_.begin(), knots_.end(), k);
  std::size_t i = static_cast<std::size_t>(it - knots_.begin());
  return (values_[i] - values_[i - 1]) / (knots_[i] - knots_[i - 1]);
}

double ImpliedMeasure::mass() const {
  double m = 0;
  for (double w : p) m += w;
  return m;
}

double ImpliedMeasure::mean() const {
  double m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) m += x[i] * p[i];
  return m;
}

double ImpliedMeasure::call(double k) const {
  double v = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > k) v += p[i] * (x[i] - k);
  return v;
}

double ImpliedMeasure::put(double k) const {
  double v = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < k) v += p[i] * (k - x[i]);
  return v;
}

double ImpliedMeasure::cdf(double k) const {
  double v = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] <= k + kPriceTol * (1.0 + std::abs(k))) v += p[i];
  return v;
}

double ImpliedMeasure::tail_ge(double k) const {
  double v = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] >= k - kPriceTol * (1.0 + std::abs(k))) v += p[i];
  return v;
}

double ImpliedMeasure::tail_gt(double k) const {
  double v = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > k + kPriceTol * (1.0 + std::abs(k))) v += p[i];
  return v;
}

double ImpliedMeasure::mass_at(double k) const {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i] - k) <= kPriceTol * (1.0 + std::abs(k))) return p[i];
  return 0.0;
}

double ImpliedMeasure::open_interval(double a, double b) const {
  double v = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > a + kPriceTol * (1.0 + std::abs(a)) &&
        x[i] < b - kPriceTol * (1.0 + std::abs(b)))
      v += p[i];
  return v;
}

void ImpliedMeasure::validate() const {
  if (x.size() != p.size() || x.empty())
    throw std::invalid_argument("measure atom/mass size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(p[i] > 0.0)) throw std::invalid_argument("atom masses must be positive");
    if (x[i] < 0.0) throw std::invalid_argument("atoms must be non-negative");
    if (i > 0 && !(x[i] > x[i - 1]))
      throw std::invalid_argument("atoms must be strictly increasing");
  }
  if (std::abs(mass() - 1.0) > 1e-9)
    throw std::invalid_argument("measure mass must be 1");
}

ImpliedMeasure implied_measure(const CallCurve& curve) {
  if (curve.last_value() > kPriceTol * curve.spot())
    throw std::runtime_error(
        "call curve does not reach zero: no market model exists");
  const auto& ks = curve.knots();
  ImpliedMeasure mu;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    // jump of C' at the knot; C'_- at 0 is -1 by convention
    double m = curve.slope_right(ks[i]) - curve.slope_left(ks[i]);
    if (m > kPriceTol) {
      mu.x.push_back(ks[i]);
      mu.p.push_back(m);
    } else if (m < -kPriceTol) {
      throw std::runtime_error("call curve is not convex at knot " +
                               std::to_string(ks[i]));
    }
  }
  mu.validate();
  return mu;
}

CallCurve curve_from_measure(const ImpliedMeasure& mu) {
  mu.validate();
  std::vector<double> knots, values;
  if (mu.x.front() > 0.0) {
    knots.push_back(0.0);
    values.push_back(mu.mean());
  }
  for (double a : mu.x) {
    knots.push_back(a);
    values.push_back(mu.call(a));
  }
  return CallCurve(std::move(knots), std::move(values));
}

CallQuoteSet quotes_from_measure(const ImpliedMeasure& mu,
                                 std::vector<double> strikes, double maturity) {
  mu.validate();
  std::sort(strikes.begin(), strikes.end());
  if (strikes.empty() || strikes.front() != 0.0)
    strikes.insert(strikes.begin(), 0.0);
  CallQuoteSet q;
  q.spot = mu.mean();
  q.maturity = maturity;
  for (double k : strikes) {
    q.strikes.push_back(k);
    q.prices.push_back(mu.call(k));
  }
  q.validate();
  return q;
}

CallCurve extend_piecewise_linear(const CallQuoteSet& quotes,
                                  const std::vector<double>& extra_knots,
                                  double min_terminal,
                                  const std::vector<KnotOverride>& overrides) {
  quotes.validate();
  std::vector<double> ks = quotes.strikes;
  std::vector<double> vs = quotes.prices;
  // Quote-shape sanity; full taxonomy lives in the arbitrage module.
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (vs[i] > vs[i - 1] + kPriceTol * quotes.spot)
      throw std::runtime_error("quotes not decreasing: cannot extend");
  for (std::size_t i = 2; i < ks.size(); ++i) {
    double sl = (vs[i - 1] - vs[i - 2]) / (ks[i - 1] - ks[i - 2]);
    double sr = (vs[i] - vs[i - 1]) / (ks[i] - ks[i - 1]);
    if (sr < sl - kPriceTol) throw std::runtime_error("quotes not convex: cannot extend");
  }
  if ((vs[1] - vs[0]) / (ks[1] - ks[0]) < -1.0 - kPriceTol)
    throw std::runtime_error("initial slope below -1: cannot extend");
  std::size_t n = ks.size() - 1;
  if (vs[n] < -kPriceTol * quotes.spot)
    throw std::runtime_error("negative call price: cannot extend");
  if (vs[n] > kPriceTol * quotes.spot) {
    // extend along (at least) the last secant until the curve reaches zero
    if (n < 1 || !(vs[n - 1] > vs[n] + kPriceTol * quotes.spot))
      throw std::runtime_error("flat positive tail: cannot extend to zero");
    double secant_zero =
        ks[n] + vs[n] * (ks[n] - ks[n - 1]) / (vs[n - 1] - vs[n]);
    double terminal = std::max(secant_zero, min_terminal);
    ks.push_back(terminal);
    vs.push_back(0.0);
  }
  CallCurve base(ks, vs);
  if (extra_knots.empty() && overrides.empty()) return base;
  for (double k : extra_knots) {
    if (k <= 0.0 || k >= ks.back()) continue;
    bool present = false;
    for (double e : ks)
      if (std::abs(e - k) <= kPriceTol * (1.0 + k)) present = true;
    if (present) continue;
    ks.push_back(k);
    vs.push_back(base(k));
  }
  for (const auto& ov : overrides) {
    bool found = false;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (std::abs(ks[i] - ov.strike) <= kPriceTol * (1.0 + ov.strike)) {
        vs[i] = ov.value;
        found = true;
      }
    }
    if (!found) {
      ks.push_back(ov.strike);
      vs.push_back(ov.value);
    }
  }
  std::vector<std::size_t> order(ks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return ks[a] < ks[b]; });
  std::vector<double> ks2, vs2;
  for (std::size_t i : order) {
    ks2.push_back(ks[i]);
    vs2.push_back(vs[i]);
  }
  return CallCurve(std::move(ks2), std::move(vs2));
}

double put_price(const CallQuoteSet& quotes, double k) { return quotes.put(k); }

double put_price(const CallCurve& curve, double k) { return curve.put(k); }

}  // namespace dnt
