#pragma once

// Quote ingestion, convex piecewise-linear call curves and the implied
// terminal measure.  Everything downstream (arbitrage checks, bounds,
// hedges, simulators) works off these three representations.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dnt {

// Tolerance for exact-value comparisons on prices normalized by spot.
inline constexpr double kPriceTol = 1e-12;

struct Barriers {
  double lo{};
  double hi{};

  // Requires 0 < lo < spot < hi.
  void validate(double spot) const;
};

// Finite table of call quotes.  strikes[0] == 0 with price spot always
// (inserted by load_quotes if missing).  maturity is informational: the
// bound formulas are maturity-free.
struct CallQuoteSet {
  double spot{};
  double maturity{0.0};
  std::vector<double> strikes;
  std::vector<double> prices;

  std::size_t size() const { return strikes.size(); }
  bool has_strike(double k) const;
  std::size_t index_of(double k) const;  // throws if not quoted
  double call(double k) const;           // quoted strikes only
  double put(double k) const;            // parity: K - S0 + C(K)
  void validate() const;
};

// Digital quotes at the barriers: lower pays 1{S_T > b}, upper pays
// 1{S_T >= bbar}.
struct DigitalQuote {
  double level{};
  double price{};
};

struct DigitalQuotes {
  std::optional<DigitalQuote> lower;
  std::optional<DigitalQuote> upper;
};

// Continuous piecewise-linear call curve.  knots[0] == 0, values[0] == S0.
// Beyond the last knot the curve is constant (tail slope 0); a curve whose
// last value is positive is representable but carries no market model.
class CallCurve {
 public:
  CallCurve() = default;
  CallCurve(std::vector<double> knots, std::vector<double> values);

  double spot() const { return values_.front(); }
  double operator()(double k) const;
  double put(double k) const;  // parity
  // One-sided derivatives; slope_left(0) = -1 by convention.
  double slope_right(double k) const;
  double slope_left(double k) const;
  // Digital prices implied by the slopes: delta(b) = -C'_+(b) prices
  // 1{S_T > b}; digital_ge(b) = -C'_-(b) prices 1{S_T >= b}.
  double digital_gt(double k) const { return -slope_right(k); }
  double digital_ge(double k) const { return -slope_left(k); }

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double last_value() const { return values_.back(); }

 private:
  std::vector<double> knots_{0.0};
  std::vector<double> values_{0.0};
};

// Purely atomic terminal law: one atom per kink of the call curve.
struct ImpliedMeasure {
  std::vector<double> x;  // locations, strictly increasing
  std::vector<double> p;  // masses, positive

  double mass() const;
  double mean() const;
  double call(double k) const;  // E (S-K)^+
  double put(double k) const;   // E (K-S)^+
  double cdf(double k) const;       // mu([0, k])
  double tail_ge(double k) const;   // mu([k, inf))
  double tail_gt(double k) const;   // mu((k, inf))
  double mass_at(double k) const;
  double open_interval(double a, double b) const;  // mu((a, b))
  double support_lo() const { return x.front(); }
  double support_hi() const { return x.back(); }
  void validate() const;  // mass 1 within tolerance, layout sane
};

// Quote stream format: header "spot,<S0>[,<T>]", then "strike,price" rows;
// '#' starts a comment.  Malformed rows are rejected with their index.
CallQuoteSet load_quotes(std::istream& in);
CallQuoteSet load_quotes_file(const std::string& path);

// Digital stream format: lines "lower,<b>,<price>" / "upper,<bbar>,<price>".
DigitalQuotes load_digitals(std::istream& in);
DigitalQuotes load_digitals_file(const std::string& path);

// Breeden-Litzenberger: atom at each kink K with mass C'_+(K) - C'_-(K),
// atom at 0 with mass 1 + C'_+(0) if positive.  Requires the curve to reach
// zero (tail value 0); otherwise no market model exists and this throws.
ImpliedMeasure implied_measure(const CallCurve& curve);

// Exact inverse of implied_measure: curve with knots at the atoms.
CallCurve curve_from_measure(const ImpliedMeasure& mu);

// Reprice a strike table from an atomic law (strike 0 added if absent).
CallQuoteSet quotes_from_measure(const ImpliedMeasure& mu,
                                 std::vector<double> strikes,
                                 double maturity = 0.0);

// Knot-value override for extend_piecewise_linear.
struct KnotOverride {
  double strike{};
  double value{};
};

// Convex piecewise-linear interpolation through the quotes, linearly
// extended to a terminal knot K_{N+1} >= max(secant zero, min_terminal)
// where the curve reaches 0.  extra_knots get the interpolated value
// unless overridden.  Throws if the quotes are not convex/decreasing.
CallCurve extend_piecewise_linear(const CallQuoteSet& quotes,
                                  const std::vector<double>& extra_knots = {},
                                  double min_terminal = 0.0,
                                  const std::vector<KnotOverride>& overrides = {});

double put_price(const CallQuoteSet& quotes, double k);
double put_price(const CallCurve& curve, double k);

}  // namespace dnt
