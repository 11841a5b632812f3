#pragma once

// Barycentre functions of the implied law, their generalized inverses,
// the Perkins stopping boundaries and the tilted-Jacka two-stage rule.
// These are the extremal constructions that attain the price bounds.

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "dnt/market.hpp"

namespace dnt {

// A continuous path sampled on a time grid.  Between samples the path is
// treated as linear for crossing detection.
struct Path {
  std::vector<double> times;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double terminal() const { return values.back(); }
  // First index i with values[i] <= level (resp. >= level); size() if none.
  std::size_t first_at_or_below(double level) const;
  std::size_t first_at_or_above(double level) const;
  // Interpolated first crossing time of the level, if hit.
  std::optional<double> hit_time(double level) const;
};

// Psi(K): mean of the law restricted to [K, inf); Theta(K): mean on
// (-inf, K].  Step functions, evaluated with the sup/inf conventions of
// the inverse definitions.  Outside the support Psi = +inf / Theta = -inf
// on the empty side and both equal the overall mean at the ends.
class BarycentreFns {
 public:
  explicit BarycentreFns(ImpliedMeasure mu);

  double psi(double k) const;
  double theta(double k) const;
  // theta_inv(z) = sup{w : Theta(w) <= z}; psi_inv(z) = inf{w : Psi(w) >= z}.
  // Both return atoms of the law (or the support edge).
  double theta_inv(double z) const;
  double psi_inv(double z) const;

  const ImpliedMeasure& measure() const { return mu_; }
  double mean() const { return mean_; }

 private:
  ImpliedMeasure mu_;
  double mean_{};
  std::vector<double> tail_mass_;  // mass of atoms >= x_i
  std::vector<double> tail_mom_;   // first moment of atoms >= x_i
  std::vector<double> head_mass_;  // mass of atoms <= x_i
  std::vector<double> head_mom_;
};

BarycentreFns barycentres(const ImpliedMeasure& mu);

// (Theta^{-1}(lo), Psi^{-1}(hi)) for the barrier pair.
std::pair<double, double> inverse_barycentres(const BarycentreFns& fns,
                                              const Barriers& barriers);

// Perkins boundaries.  gamma_plus(x) for x >= mean: largest lower atom y
// such that the mass on (0, y) u (x, inf) has non-negative mean gap to x;
// gamma_minus(y) mirror.  Evaluated with one-sided-limit conventions so a
// path started at an atom of the law does not stop immediately.
class GammaCurves {
 public:
  explicit GammaCurves(ImpliedMeasure mu);

  // x is the running maximum (>= start); returns the lower stopping level,
  // or -inf if the path cannot yet stop below.
  double gamma_plus(double x) const;
  // y is the running minimum (<= start); upper stopping level, +inf if none.
  double gamma_minus(double y) const;

  double start() const { return mean_; }
  const ImpliedMeasure& measure() const { return mu_; }

 private:
  ImpliedMeasure mu_;
  double mean_{};
  std::vector<double> lo_;  // atoms strictly below the mean
  std::vector<double> lo_p_;
  std::vector<double> hi_;  // atoms strictly above the mean
  std::vector<double> hi_p_;
};

// Throws for a degenerate (single-atom) law.
GammaCurves gamma_curves(const ImpliedMeasure& mu);

enum class KCase { INSIDE, OUTSIDE };

struct KSelection {
  double k{};
  KCase kcase{};
};

// Splitting point for the tilted-Jacka construction (relative to the
// barrier pair): inside the inverse-barycentre interval when it is
// non-empty, otherwise at/beyond its collapse point.
KSelection select_K(const BarycentreFns& fns, const Barriers& barriers);

// Two-stage tilted-Jacka rule: run to the exit of (Theta(K), Psi(K)),
// then on the upper (lower) branch stop when the path falls to the
// largest atom whose upper (lower) barycentre the running extreme has
// reached.  An atom at K is split half/half between the branches.
class TiltedJackaRule {
 public:
  TiltedJackaRule(ImpliedMeasure mu, double k);

  double stage1_lo() const { return lo1_; }
  double stage1_hi() const { return hi1_; }
  bool degenerate() const { return degenerate_; }
  // Stop level on the upper branch given the running max since stage 1,
  // or -inf if no stop is possible yet.
  double upper_stop_level(double running_max) const;
  double lower_stop_level(double running_min) const;

 private:
  ImpliedMeasure mu_;
  bool degenerate_{false};
  double lo1_{}, hi1_{};
  // branch atoms with their (normalized) branch barycentre thresholds
  std::vector<double> up_atom_, up_thresh_;   // Psi_{mu+} at each upper atom
  std::vector<double> dn_atom_, dn_thresh_;   // Theta_{mu-} at each lower atom
};

// Index into the path grid at which each rule stops; path.size() if the
// rule never triggers on the sampled path.  The stopped value should be
// read as the rule's boundary level, not the raw sample.
std::size_t perkins_stop(const Path& path, const GammaCurves& curves);
std::size_t tilted_jacka_stop(const Path& path, const BarycentreFns& fns,
                              double k);

}  // namespace dnt
