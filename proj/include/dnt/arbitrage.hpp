#pragma once

// Arbitrage taxonomy for call quotes with optional barrier digitals:
// NONE (a market model exists), WEAK (prices admit no model-free
// arbitrage yet every model loses), WFLVR (free lunch with vanishing
// risk via a sequence), MODEL_FREE (a static portfolio wins on every
// path).  Witnesses are explicit portfolios, possibly conditional on a
// property of the model.

#include <string>
#include <vector>

#include "dnt/hedging.hpp"
#include "dnt/market.hpp"

namespace dnt {

enum class Verdict { NONE, WFLVR, WEAK, MODEL_FREE };

std::string to_string(Verdict v);

// A witness portfolio valid under models satisfying `condition`
// ("always" for unconditional model-free witnesses).
struct ConditionalWitness {
  std::string condition;
  HedgePortfolio portfolio;
};

struct ArbitrageReport {
  Verdict verdict{Verdict::NONE};
  std::string explanation;  // names the violated inequality
  std::vector<ConditionalWitness> witnesses;
  std::string serialize() const;
};

// Full-curve criteria: convex/decreasing/non-negative with initial slope
// >= -1, and vanishing tail for model existence.
ArbitrageReport check_curve(const CallCurve& curve);

// Finite quotes: NONE iff a convex decreasing extension reaching zero
// exists; a flat positive tail yields WEAK with the two-case witness
// pair; shape violations yield MODEL_FREE with the spread/butterfly.
ArbitrageReport check_quotes(const CallQuoteSet& quotes);

// Quotes plus digitals at the barriers.  For an unquoted barrier the
// digital is tested against the synthetic secant prices; for a quoted
// barrier against the one-sided secant slopes.  Boundary equalities that
// force an unattainable digital price yield WEAK.
ArbitrageReport check_digitals(const CallQuoteSet& quotes,
                               const DigitalQuotes& digitals,
                               const Barriers& barriers);

struct PerturbResult {
  CallQuoteSet quotes;
  DigitalQuotes digitals;
};

// Moves every price by less than eps so that check_digitals returns NONE.
// Input verdict MODEL_FREE cannot be repaired and throws.
PerturbResult perturb_to_consistent(const CallQuoteSet& quotes,
                                    const DigitalQuotes& digitals,
                                    const Barriers& barriers, double eps);

}  // namespace dnt
