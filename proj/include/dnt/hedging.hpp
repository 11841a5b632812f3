#pragma once

// Semi-static portfolios: vanilla/digital legs held to maturity plus
// forward positions entered the first time the path touches a trigger
// level.  These realize the super-/sub-hedges whose costs equal the
// model-free double-no-touch bounds.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dnt/embedding.hpp"
#include "dnt/market.hpp"

namespace dnt {

enum class LegKind {
  Call,            // (S_T - K)^+
  Put,             // (K - S_T)^+
  DigitalGt,       // 1{S_T > K}
  DigitalGe,       // 1{S_T >= K}
  CorridorDigital  // 1{K < S_T < K2}
};

struct OptionLeg {
  LegKind kind{};
  double strike{};
  double strike2{};  // corridor upper level; unused otherwise
  double qty{};
};

// Forward entered at the first touch of `level`, held to maturity, paying
// qty * (S_T - level).  If `unless_first` is set the trade is cancelled
// when that level is touched strictly earlier (the "whichever barrier is
// hit first" clauses); simultaneous interpolated touches resolve in favor
// of the higher level.
struct ForwardTrigger {
  double level{};
  std::optional<double> unless_first;
  double qty{};
};

struct HedgePortfolio {
  std::string label;
  double cash{};
  std::vector<OptionLeg> options;
  std::vector<ForwardTrigger> forwards;
  std::string serialize() const;
};

// Double-no-touch payoff on a sampled path: 1 if the path stays strictly
// inside (lo, hi) at every sample, else 0 (touch counts as a knock-out).
double dnt_payoff(const Path& path, const Barriers& barriers);

// Terminal value of the portfolio along the path.
double evaluate_on_path(const HedgePortfolio& h, const Path& path);

// Price source for portfolio costs: a curve prices everything; a quote set
// prices only its own strikes (digitals at the barrier levels may be
// supplied explicitly and take precedence).  Unpriceable legs throw.
class PricingSource {
 public:
  explicit PricingSource(const CallCurve& curve, DigitalQuotes digitals = {});
  explicit PricingSource(const CallQuoteSet& quotes, DigitalQuotes digitals = {});

  double call(double k) const;
  double put(double k) const;
  double digital_gt(double k) const;
  double digital_ge(double k) const;
  double cost(const HedgePortfolio& h) const;  // forwards cost nothing

 private:
  const CallCurve* curve_{};
  const CallQuoteSet* quotes_{};
  DigitalQuotes digitals_;
};

double portfolio_cost(const HedgePortfolio& h, const PricingSource& prices);

// Continuum-market hedges (digitals priced off the curve slopes).
// Superhedge I: corridor digital 1{lo < S_T < hi}.
HedgePortfolio build_superhedge_I(const Barriers& barriers);
// Superhedge II, strike K in (lo, hi): digital + call spread versus a put
// at the lower barrier, with a forward sold at the first touch of lo.
HedgePortfolio build_superhedge_II(double k, const Barriers& barriers);
// Superhedge III, mirror of II around the upper barrier.
HedgePortfolio build_superhedge_III(double k, const Barriers& barriers);
// Subhedge I: the zero portfolio.
HedgePortfolio build_subhedge_I();
// Subhedge II, strikes lo < k1 <= k2 < hi: cash 1 minus wing calls/puts,
// with forwards unwound at whichever barrier is touched first.
HedgePortfolio build_subhedge_II(double k1, double k2, const Barriers& barriers);

// Finite-strike superhedges of the one-sided digital 1{S_T > level} built
// from quoted strikes only (level between two quotes).  Two shapes: the
// secant call-spread below and the convex cap through the two strikes
// above; min cost equals the synthetic digital price.
std::pair<HedgePortfolio, HedgePortfolio> build_digital_superhedges(
    const CallQuoteSet& quotes, double level);

// The finite-strike family for barriers strictly between quotes: the
// corridor variants (I), the call-side variants (II) for every quoted
// K > S0 and the put-side variants (III) for every quoted K < S0.  Each
// uses quoted strikes only; min cost over a variant group reproduces the
// matching term of the finite-strike upper bound.
std::vector<HedgePortfolio> build_finite_superhedges(const CallQuoteSet& quotes,
                                                     const Barriers& barriers);

}  // namespace dnt
