#include "dnt/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "dnt/arbitrage.hpp"
#include "dnt/embedding.hpp"

namespace dnt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double tol_for(double spot) { return 1e-9 * spot; }

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

// price / gap with the degenerate-gap convention: a zero-width option
// position costs nothing when the option is worthless, and is
// inadmissible (infinite) otherwise.
double over_gap(double price, double gap, double tol) {
  if (gap <= tol) return price <= tol ? 0.0 : kInf;
  return price / gap;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------
// continuum internals (no barrier validation; p_surface reuses them)

struct ContinuumUpper {
  double value{};
  UpperTerm term{};
  double strike{};  // meaningful for II/III
};

ContinuumUpper upper_continuum_impl(const CallCurve& curve, double lo,
                                    double hi) {
  double s0 = curve.spot();
  double tol = tol_for(s0);
  double delta = lo <= 0.0 ? 1.0 : curve.digital_gt(lo);
  double dbar = curve.digital_ge(hi);
  double plo = lo <= 0.0 ? 0.0 : curve.put(lo);
  double chi = curve(hi);

  double term1 = delta - dbar;

  // candidates: curve knots in the open interval plus its closure ends
  // (the piecewise-linear ratio attains its infimum there)
  auto candidates = [&](double a, double b) {
    std::vector<double> ks{a, b};
    for (double k : curve.knots())
      if (k > a + tol && k < b - tol) ks.push_back(k);
    return ks;
  };

  double term2 = kInf, k2 = s0;
  for (double k : candidates(s0, hi)) {
    double r = (curve(k) - plo) / (k - lo);
    if (r < term2 - tol) {
      term2 = r;
      k2 = k;
    }
  }
  term2 += delta;

  double term3 = kInf, k3 = s0;
  for (double k : candidates(std::max(lo, 0.0), s0)) {
    double pk = k <= 0.0 ? 0.0 : curve.put(k);
    double r = (pk - chi) / (hi - k);
    if (r < term3 - tol) {
      term3 = r;
      k3 = k;
    }
  }
  term3 += 1.0 - dbar;

  ContinuumUpper out;
  if (term1 <= term2 + tol && term1 <= term3 + tol) {
    out.value = term1;
    out.term = UpperTerm::I;
  } else if (term2 <= term3 + tol) {
    out.value = term2;
    out.term = UpperTerm::II;
    out.strike = k2;
  } else {
    out.value = term3;
    out.term = UpperTerm::III;
    out.strike = k3;
  }
  out.value = clamp01(out.value);
  return out;
}

struct ContinuumLower {
  double value{};
  double k1{}, k2{};  // Theta^{-1}(lo), Psi^{-1}(hi)
};

ContinuumLower lower_continuum_impl(const CallCurve& curve,
                                    const BarycentreFns& fns, double lo,
                                    double hi) {
  double tol = tol_for(curve.spot());
  ContinuumLower out;
  out.k1 = fns.theta_inv(lo);
  out.k2 = fns.psi_inv(hi);
  double pk1 = out.k1 <= 0.0 ? 0.0 : curve.put(out.k1);
  double cterm = over_gap(curve(out.k2), hi - out.k2, tol);
  double pterm = over_gap(pk1, out.k1 - lo, tol);
  out.value = clamp01(1.0 - cterm - pterm);
  return out;
}

}  // namespace

std::string to_string(UpperTerm t) {
  switch (t) {
    case UpperTerm::I:
      return "I";
    case UpperTerm::II:
      return "II";
    case UpperTerm::III:
      return "III";
  }
  return "?";
}

std::string BoundResult::serialize() const {
  std::ostringstream os;
  os << "lower " << lower << "\n";
  os << "upper " << upper << "\n";
  if (upper_term) {
    os << "upper-term " << to_string(*upper_term);
    if (upper_strike) os << " K=" << *upper_strike;
    os << "\n";
  }
  if (lower_strikes)
    os << "lower-strikes " << lower_strikes->first << " "
       << lower_strikes->second << "\n";
  for (const auto& h : hedges) os << "hedge " << h << "\n";
  os << "attained " << (attained ? "yes" : "approximated-by-sequence")
     << "\n";
  if (!notes.empty()) os << "notes " << notes << "\n";
  return os.str();
}

BoundResult upper_bound_continuum(const CallCurve& curve,
                                  const Barriers& barriers) {
  barriers.validate(curve.spot());
  ContinuumUpper u = upper_continuum_impl(curve, barriers.lo, barriers.hi);
  BoundResult r;
  r.upper = u.value;
  r.upper_term = u.term;
  switch (u.term) {
    case UpperTerm::I:
      r.hedges.push_back("superhedge I (corridor digital)");
      break;
    case UpperTerm::II:
      r.upper_strike = u.strike;
      r.hedges.push_back("superhedge II at K=" + fmt(u.strike));
      break;
    case UpperTerm::III:
      r.upper_strike = u.strike;
      r.hedges.push_back("superhedge III at K=" + fmt(u.strike));
      break;
  }
  return r;
}

BoundResult lower_bound_continuum(const CallCurve& curve,
                                  const Barriers& barriers) {
  barriers.validate(curve.spot());
  BarycentreFns fns(implied_measure(curve));
  ContinuumLower l =
      lower_continuum_impl(curve, fns, barriers.lo, barriers.hi);
  BoundResult r;
  r.lower = l.value;
  r.lower_strikes = {l.k1, l.k2};
  if (l.value > 0.0)
    r.hedges.push_back("subhedge II (K1=" + fmt(l.k1) + ", K2=" + fmt(l.k2) +
                       ")");
  else
    r.hedges.push_back("subhedge I (zero portfolio)");
  return r;
}

BoundResult lower_bound_finite(const CallQuoteSet& quotes,
                               const Barriers& barriers) {
  quotes.validate();
  barriers.validate(quotes.spot);
  double tol = tol_for(quotes.spot);
  std::vector<std::size_t> inside;
  for (std::size_t m = 0; m < quotes.size(); ++m)
    if (quotes.strikes[m] >= barriers.lo - tol &&
        quotes.strikes[m] <= barriers.hi + tol)
      inside.push_back(m);
  if (inside.empty())
    throw std::runtime_error(
        "layout error: no quoted strikes between the barriers");

  BoundResult r;
  r.lower = 0.0;
  double best = 0.0;
  std::optional<std::pair<double, double>> best_pair;
  for (std::size_t a : inside) {
    double k1 = quotes.strikes[a];
    double pterm = over_gap(quotes.put(k1), k1 - barriers.lo, tol);
    if (pterm == kInf) continue;
    for (std::size_t b : inside) {
      double k2 = quotes.strikes[b];
      if (k2 < k1) continue;
      double cterm = over_gap(quotes.prices[b], barriers.hi - k2, tol);
      if (cterm == kInf) continue;
      double v = 1.0 - cterm - pterm;
      if (v > best + tol) {
        best = v;
        best_pair = {k1, k2};
      }
    }
  }
  r.lower = clamp01(best);
  if (best_pair) {
    r.lower_strikes = best_pair;
    r.hedges.push_back("subhedge II (K1=" + fmt(best_pair->first) +
                       ", K2=" + fmt(best_pair->second) + ")");
  } else {
    r.hedges.push_back("subhedge I (zero portfolio)");
  }
  return r;
}

BoundResult upper_bound_finite_digitals(const CallQuoteSet& quotes,
                                        const DigitalQuotes& digitals,
                                        const Barriers& barriers) {
  quotes.validate();
  barriers.validate(quotes.spot);
  if (!quotes.has_strike(barriers.lo) || !quotes.has_strike(barriers.hi))
    throw std::runtime_error(
        "both barriers must be traded strikes for the digital-quote bound");
  if (!digitals.lower || !digitals.upper)
    throw std::runtime_error("digital quotes at both barriers are required");
  ArbitrageReport rep = check_digitals(quotes, digitals, barriers);
  if (rep.verdict != Verdict::NONE) {
    std::string msg = "arbitrage in the joint prices (" +
                      to_string(rep.verdict) + "): " + rep.explanation;
    for (const auto& w : rep.witnesses)
      msg += "\n" + w.condition + ":\n" + w.portfolio.serialize();
    throw std::runtime_error(msg);
  }

  double s0 = quotes.spot;
  double tol = tol_for(s0);
  double lo = barriers.lo, hi = barriers.hi;
  double delta = digitals.lower->price;
  double dbar = digitals.upper->price;
  double plo = quotes.put(lo);
  double chi = quotes.call(hi);

  double term1 = delta - dbar;

  double term2 = kInf, k2 = hi;
  for (std::size_t m = 0; m < quotes.size(); ++m) {
    double k = quotes.strikes[m];
    if (k <= s0 + tol || k > hi + tol) continue;
    double r = (quotes.prices[m] - plo) / (k - lo);
    if (r < term2 - tol) {
      term2 = r;
      k2 = k;
    }
  }
  double f_at_hi = (chi - plo) / (hi - lo);
  term2 += delta;

  double term3 = kInf, k3 = lo;
  for (std::size_t m = 0; m < quotes.size(); ++m) {
    double k = quotes.strikes[m];
    if (k < lo - tol || k >= s0 - tol) continue;
    double r = (quotes.put(k) - chi) / (hi - k);
    if (r < term3 - tol) {
      term3 = r;
      k3 = k;
    }
  }
  double g_at_lo = (plo - chi) / (hi - lo);
  term3 += 1.0 - dbar;

  BoundResult r;
  if (term1 <= term2 + tol && term1 <= term3 + tol) {
    r.upper = term1;
    r.upper_term = UpperTerm::I;
    r.hedges.push_back("finite superhedge I (digital spread)");
  } else if (term2 <= term3 + tol) {
    r.upper = term2;
    r.upper_term = UpperTerm::II;
    r.upper_strike = k2;
    r.hedges.push_back("finite superhedge II at K=" + fmt(k2));
  } else {
    r.upper = term3;
    r.upper_term = UpperTerm::III;
    r.upper_strike = k3;
    r.hedges.push_back("finite superhedge III at K=" + fmt(k3));
  }
  r.upper = clamp01(r.upper);

  // Boundary cases: the optimal model wants an atom just inside a
  // barrier; the bound is then only approximated by a sequence.
  bool strict2 = term2 < term1 - tol && term2 < term3 - tol;
  bool strict3 = term3 < term1 - tol && term3 < term2 - tol;
  if (strict2 && std::abs(k2 - hi) <= tol && f_at_hi < -dbar - tol) {
    r.attained = false;
    r.notes =
        "minimum at the upper barrier with (C(hi)-P(lo))/(hi-lo) < -D(hi): "
        "approximated by models with mass just below the upper barrier";
  } else if (strict3 && std::abs(k3 - lo) <= tol &&
             g_at_lo < -(1.0 - delta) - tol) {
    r.attained = false;
    r.notes =
        "minimum at the lower barrier with (P(lo)-C(hi))/(hi-lo) < "
        "-(1-delta(lo)): approximated by models with mass just above the "
        "lower barrier";
  }
  return r;
}

namespace {

// Quotes with up to three zero-price knots appended past the last
// strike (terminal knot where the linear extension reaches zero, then
// two spacers) so that every right-wing secant needed below exists.
struct ZeroTail {
  std::vector<double> k, v;
  std::size_t n_real{};
};

ZeroTail zero_tail(const CallQuoteSet& q, double min_terminal) {
  ZeroTail a;
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

// Quote set with an extra strike inserted (or an existing price
// replaced).
CallQuoteSet with_strike(const CallQuoteSet& q, double k, double price) {
  CallQuoteSet out = q;
  double tol = tol_for(q.spot);
  for (std::size_t m = 0; m < out.size(); ++m) {
    if (std::abs(out.strikes[m] - k) <= tol) {
      out.prices[m] = price;
      return out;
    }
  }
  auto it = std::upper_bound(out.strikes.begin(), out.strikes.end(), k);
  std::size_t pos = static_cast<std::size_t>(it - out.strikes.begin());
  out.strikes.insert(out.strikes.begin() + pos, k);
  out.prices.insert(out.prices.begin() + pos, price);
  return out;
}

}  // namespace

BoundResult upper_bound_finite(const CallQuoteSet& quotes,
                               const Barriers& barriers) {
  quotes.validate();
  barriers.validate(quotes.spot);
  double s0 = quotes.spot;
  double tol = tol_for(s0);
  double lo = barriers.lo, hi = barriers.hi;
  if (quotes.has_strike(lo) || quotes.has_strike(hi))
    throw std::runtime_error(
        "a barrier is a traded strike: use the digital-quote bound");
  ArbitrageReport pre = check_quotes(quotes);
  if (pre.verdict != Verdict::NONE)
    throw std::runtime_error("arbitrage in the call quotes (" +
                             to_string(pre.verdict) + "): " + pre.explanation);

  ZeroTail a = zero_tail(quotes, hi + 1.0);
  auto straddle = [&](double level) {
    for (std::size_t m = 0; m + 1 < a.k.size(); ++m)
      if (a.k[m] < level && level < a.k[m + 1]) return m;
    throw std::runtime_error("barrier outside the quoted range");
  };
  std::size_t i = straddle(lo), j = straddle(hi);
  if (i < 1 || i + 2 >= a.k.size() || j < 1 || j + 2 >= a.k.size())
    throw std::runtime_error("layout error: barrier lacks neighbouring "
                             "strikes");
  std::size_t interior = 0;
  for (std::size_t m = 0; m < a.n_real; ++m)
    if (a.k[m] > lo + tol && a.k[m] < hi - tol) ++interior;
  if (interior < 2)
    throw std::runtime_error(
        "layout error: fewer than two quoted strikes between the barriers");

  auto line = [&](std::size_t p, std::size_t q, double x) {
    return a.v[p] + (a.v[q] - a.v[p]) / (a.k[q] - a.k[p]) * (x - a.k[p]);
  };
  // smallest convex call values at the barriers and the matching
  // one-sided digital slopes
  double cb = std::max(line(i - 1, i, lo), line(i + 1, i + 2, lo));
  double delta = (a.v[i] - cb) / (lo - a.k[i]);
  double chat = std::max(line(j - 1, j, hi), line(j + 1, j + 2, hi));
  double dbar = (chat - a.v[j + 1]) / (a.k[j + 1] - hi);
  double plo = cb + lo - s0;  // parity at the synthetic barrier price

  double term1 = delta - dbar;
  // quoted strikes only; the zero-tail knots are not traded
  double inf2 = kInf, k2 = hi;
  for (std::size_t m = 0; m < a.n_real; ++m) {
    double k = a.k[m];
    if (k <= s0 + tol) continue;
    double r = (a.v[m] - plo) / (k - lo);
    if (r < inf2 - tol) {
      inf2 = r;
      k2 = k;
    }
  }
  double term2 = delta + inf2;
  double inf3 = kInf, k3 = lo;
  for (std::size_t m = 0; m < a.n_real; ++m) {
    double k = a.k[m];
    if (k >= s0 - tol) continue;
    double pk = quotes.put(k);
    double r = (pk - chat) / (hi - k);
    if (r < inf3 - tol) {
      inf3 = r;
      k3 = k;
    }
  }
  double term3 = (1.0 - dbar) + inf3;

  BoundResult r;
  if (term1 <= term2 + tol && term1 <= term3 + tol) {
    r.upper = term1;
    r.upper_term = UpperTerm::I;
    r.hedges.push_back("finite superhedge family I");
  } else if (term2 <= term3 + tol) {
    r.upper = term2;
    r.upper_term = UpperTerm::II;
    r.upper_strike = k2;
    r.hedges.push_back("finite superhedge family II at K=" + fmt(k2));
  } else {
    r.upper = term3;
    r.upper_term = UpperTerm::III;
    r.upper_strike = k3;
    r.hedges.push_back("finite superhedge family III at K=" + fmt(k3));
  }
  r.upper = clamp01(r.upper);

  // ------------------------------------------------------------------
  // Attainability: extend the quotes with the synthetic barrier prices
  // and re-run the three-term minimum with the barriers as candidate
  // strikes.  If the strict minimum then sits at a barrier itself, the
  // barrier call price is re-chosen (the C* adjustment) so that the
  // extended minimum matches the quoted-strike bound; the extension
  // attains the bound iff it is free of weak arbitrage.
  CallQuoteSet ext = with_strike(with_strike(quotes, lo, cb), hi, chat);
  double f_at_hi = (chat - plo) / (hi - lo);
  double g_at_lo = (plo - chat) / (hi - lo);
  double inf2_ext = std::min(inf2, f_at_hi);
  double inf3_ext = std::min(inf3, g_at_lo);
  double t2_ext = delta + inf2_ext;
  double t3_ext = (1.0 - dbar) + inf3_ext;
  bool hi_boundary = t2_ext < term1 - tol && t2_ext < t3_ext - tol &&
                     f_at_hi < inf2 - tol;
  bool lo_boundary = t3_ext < term1 - tol && t3_ext < t2_ext - tol &&
                     g_at_lo < inf3 - tol;

  std::ostringstream notes;
  DigitalQuotes dq;
  dq.lower = DigitalQuote{lo, delta};
  dq.upper = DigitalQuote{hi, dbar};
  CallQuoteSet check_set = ext;

  if (hi_boundary) {
    // line through (lo, P(lo)) and each neighbour of hi, taken at hi
    double up1 = a.v[j + 1] -
                 (a.v[j + 1] - plo) / (a.k[j + 1] - lo) * (a.k[j + 1] - hi);
    double up2 = a.v[j] + (hi - a.k[j]) * (a.v[j] - plo) / (a.k[j] - lo);
    double cstar = std::min(up1, up2);
    double dstar = (cstar - a.v[j + 1]) / (a.k[j + 1] - hi);
    double interp = ((a.k[j + 1] - hi) * a.v[j] + (hi - a.k[j]) * a.v[j + 1]) /
                    (a.k[j + 1] - a.k[j]);
    bool ok_range = cstar >= chat - tol && cstar <= interp + tol;
    double fstar = (cstar - plo) / (hi - lo);
    bool ok_inf = std::abs(fstar - inf2) <= tol;
    bool ok_order1 = fstar <= -dstar + tol && -dstar <= -dbar + tol;
    double inf_cs2 = (plo - cstar) / (hi - lo);
    for (std::size_t m = 0; m < ext.size(); ++m) {
      double k = ext.strikes[m];
      if (k < lo - tol || k >= hi - tol) continue;
      inf_cs2 = std::min(inf_cs2, (ext.put(k) - cstar) / (hi - k));
    }
    bool ok_order2 = delta <= 1.0 + inf_cs2 + tol;
    notes << "C* adjustment at the upper barrier: C*=" << cstar
          << " D*=" << dstar << "; range " << (ok_range ? "ok" : "violated")
          << ", infimum match " << (ok_inf ? "ok" : "violated")
          << ", term ordering "
          << (ok_order1 && ok_order2 ? "ok" : "violated") << ". ";
    check_set = with_strike(ext, hi, cstar);
    dq.upper = DigitalQuote{hi, dstar};
    if (!(ok_range && ok_inf && ok_order1 && ok_order2)) r.attained = false;
  } else if (lo_boundary) {
    // mirror: line through (hi, C(hi)) and each neighbour of lo, taken
    // at lo, in put terms
    double pk_i = a.v[i] + a.k[i] - s0;
    double pk_i1 = a.v[i + 1] + a.k[i + 1] - s0;
    double dn1 = pk_i + (lo - a.k[i]) * (chat - pk_i) / (hi - a.k[i]);
    double dn2 = pk_i1 + (lo - a.k[i + 1]) * (chat - pk_i1) / (hi - a.k[i + 1]);
    double pstar = std::min(dn1, dn2);
    double cstar = pstar + s0 - lo;
    double dstar = (a.v[i] - cstar) / (lo - a.k[i]);
    double interp = ((a.k[i + 1] - lo) * a.v[i] + (lo - a.k[i]) * a.v[i + 1]) /
                    (a.k[i + 1] - a.k[i]);
    bool ok_range = cstar >= cb - tol && cstar <= interp + tol;
    double gstar = (pstar - chat) / (hi - lo);
    bool ok_inf = std::abs(gstar - inf3) <= tol;
    bool ok_order1 =
        gstar <= -(1.0 - dstar) + tol && -(1.0 - dstar) <= -(1.0 - delta) + tol;
    double inf_cs2 = (cstar - chat) / (hi - lo);
    for (std::size_t m = 0; m < ext.size(); ++m) {
      double k = ext.strikes[m];
      if (k <= lo + tol || k > hi + tol) continue;
      inf_cs2 = std::min(inf_cs2, (ext.call(k) - pstar) / (k - lo));
    }
    bool ok_order2 = -dbar <= inf_cs2 + tol;
    notes << "C* adjustment at the lower barrier: C*=" << cstar
          << " delta*=" << dstar << "; range "
          << (ok_range ? "ok" : "violated") << ", infimum match "
          << (ok_inf ? "ok" : "violated") << ", term ordering "
          << (ok_order1 && ok_order2 ? "ok" : "violated") << ". ";
    check_set = with_strike(ext, lo, cstar);
    dq.lower = DigitalQuote{lo, dstar};
    if (!(ok_range && ok_inf && ok_order1 && ok_order2)) r.attained = false;
  }

  if (r.attained) {
    try {
      ArbitrageReport wa = check_digitals(check_set, dq, barriers);
      if (wa.verdict == Verdict::WEAK) {
        r.attained = false;
        notes << "extremal extension admits a weak arbitrage: "
              << wa.explanation
              << "; the bound is approximated by a sequence of models.";
      } else if (wa.verdict != Verdict::NONE) {
        r.attained = false;
        notes << "extremal extension inconsistent (" << to_string(wa.verdict)
              << "): " << wa.explanation;
      }
    } catch (const std::exception& e) {
      r.attained = false;
      notes << "extremal extension could not be classified: " << e.what();
    }
  }
  r.notes = notes.str();
  return r;
}

SurfacePair p_surface(const ImpliedMeasure& mu,
                      const std::vector<double>& lo_grid,
                      const std::vector<double>& hi_grid) {
  mu.validate();
  CallCurve curve = curve_from_measure(mu);
  BarycentreFns fns(mu);
  double s0 = curve.spot();
  double tol = tol_for(s0);
  double a_mu = mu.support_lo(), b_mu = mu.support_hi();

  SurfacePair out;
  out.lo_grid = lo_grid;
  out.hi_grid = hi_grid;
  out.lower.assign(lo_grid.size(),
                   std::vector<double>(hi_grid.size(), 0.0));
  out.upper = out.lower;
  for (std::size_t ii = 0; ii < lo_grid.size(); ++ii) {
    for (std::size_t jj = 0; jj < hi_grid.size(); ++jj) {
      double lo = lo_grid[ii], hi = hi_grid[jj];
      double& lw = out.lower[ii][jj];
      double& up = out.upper[ii][jj];
      if (std::abs(lo - s0) <= tol || std::abs(hi - s0) <= tol) {
        lw = up = 0.0;  // a barrier at the spot is touched at once
        continue;
      }
      if (lo < a_mu - tol && hi > b_mu + tol) {
        lw = up = 1.0;  // both barriers outside the support
        continue;
      }
      up = upper_continuum_impl(curve, lo, hi).value;
      lw = lower_continuum_impl(curve, fns, lo, hi).value;
      lw = std::min(lw, up);
    }
  }
  return out;
}

}  // namespace dnt
