#pragma once

// Sharp model-free price bounds for the double no-touch payoff
// 1{min S > lo, max S < hi}, in the four market regimes: full call
// curve, finite strikes (lower bound), finite strikes with barrier
// digitals quoted, and finite strikes alone.  Every bound is the
// optimal super-/sub-hedge cost and carries the attaining strikes.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dnt/market.hpp"

namespace dnt {

// Which superhedge shape attains the upper bound: I = corridor digital,
// II = digital at the lower barrier plus a call spread, III = mirror
// around the upper barrier.
enum class UpperTerm { I, II, III };

std::string to_string(UpperTerm t);

struct BoundResult {
  double lower{0.0};
  double upper{1.0};
  // Filled by the upper-bound routines.
  std::optional<UpperTerm> upper_term;
  std::optional<double> upper_strike;  // minimizing strike for II/III
  // Filled by the lower-bound routines: (K1, K2) of the subhedge.
  std::optional<std::pair<double, double>> lower_strikes;
  // Labels of the hedge constructions whose cost equals the bound.
  std::vector<std::string> hedges;
  // False when the bound is only approximated by a sequence of models.
  bool attained{true};
  std::string notes;

  std::string serialize() const;
};

// Upper bound from a full call curve (digitals priced off its slopes):
// min of  delta(lo) - D(hi),
//         delta(lo) + inf_{K in (S0,hi)} (C(K) - P(lo)) / (K - lo),
//         1 - D(hi)  + inf_{K in (lo,S0)} (P(K) - C(hi)) / (hi - K),
// where delta = -C'_+ and D = -C'_-.  The infima are attained at curve
// knots (or interval ends) and searched exactly.
BoundResult upper_bound_continuum(const CallCurve& curve,
                                  const Barriers& barriers);

// Lower bound from a full call curve:
// [1 - C(P2)/(hi - P2) - P(P1)/(P1 - lo)] v 0 at the inverse
// barycentres P1 = Theta^{-1}(lo), P2 = Psi^{-1}(hi).
BoundResult lower_bound_continuum(const CallCurve& curve,
                                  const Barriers& barriers);

// Lower bound from finite quotes: max over quoted pairs
// lo <= K1 <= K2 <= hi of [1 - C(K2)/(hi - K2) - P(K1)/(K1 - lo)] v 0.
BoundResult lower_bound_finite(const CallQuoteSet& quotes,
                               const Barriers& barriers);

// Upper bound when both barriers are traded strikes and digitals at the
// barriers are quoted.  Three-term minimum with the infima restricted
// to quoted strikes in (S0, hi] and [lo, S0).  Refuses (throws) when
// the joint prices admit an arbitrage.  `attained` is false in the
// boundary case where the optimal mass wants to sit just inside a
// barrier and the bound is only approached by a sequence of models.
BoundResult upper_bound_finite_digitals(const CallQuoteSet& quotes,
                                        const DigitalQuotes& digitals,
                                        const Barriers& barriers);

// Upper bound when the barriers are not traded strikes and no digitals
// trade: the barrier call prices are synthesized as the smallest convex
// values (max of the neighbouring secants) and the digitals as the
// matching one-sided slopes; the three-term minimum then runs over
// quoted strikes in (S0, inf) and [0, S0).  The attainability analysis
// (including the adjusted barrier call price C* when the minimum sits
// at the barrier itself) is reported through `attained` and `notes`.
BoundResult upper_bound_finite(const CallQuoteSet& quotes,
                               const Barriers& barriers);

// Bound surfaces over a barrier grid: surface[i][j] is the bound for
// barriers (lo_grid[i], hi_grid[j]).  Boundary conventions: value 0
// when a barrier sits at the spot, value 1 when both barriers are
// strictly outside the support of the law.
struct SurfacePair {
  std::vector<double> lo_grid;
  std::vector<double> hi_grid;
  std::vector<std::vector<double>> lower;
  std::vector<std::vector<double>> upper;
};

SurfacePair p_surface(const ImpliedMeasure& mu,
                      const std::vector<double>& lo_grid,
                      const std::vector<double>& hi_grid);

}  // namespace dnt
