#include "dnt/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dnt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTol = 1e-12;
}  // namespace

std::size_t Path::first_at_or_below(double level) const {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] <= level + kTol) return i;
  return values.size();
}

std::size_t Path::first_at_or_above(double level) const {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] >= level - kTol) return i;
  return values.size();
}

std::optional<double> Path::hit_time(double level) const {
  if (values.empty()) return std::nullopt;
  if (std::abs(values[0] - level) <= kTol) return times[0];
  for (std::size_t i = 1; i < values.size(); ++i) {
    double a = values[i - 1], b = values[i];
    if ((a < level && b >= level) || (a > level && b <= level)) {
      double w = (level - a) / (b - a);
      return times[i - 1] + w * (times[i] - times[i - 1]);
    }
  }
  return std::nullopt;
}

BarycentreFns::BarycentreFns(ImpliedMeasure mu) : mu_(std::move(mu)) {
  mu_.validate();
  mean_ = mu_.mean();
  std::size_t n = mu_.x.size();
  tail_mass_.assign(n, 0.0);
  tail_mom_.assign(n, 0.0);
  head_mass_.assign(n, 0.0);
  head_mom_.assign(n, 0.0);
  double m = 0, s = 0;
  for (std::size_t i = n; i-- > 0;) {
    m += mu_.p[i];
    s += mu_.p[i] * mu_.x[i];
    tail_mass_[i] = m;
    tail_mom_[i] = s;
  }
  m = s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m += mu_.p[i];
    s += mu_.p[i] * mu_.x[i];
    head_mass_[i] = m;
    head_mom_[i] = s;
  }
}

double BarycentreFns::psi(double k) const {
  // mean of mu restricted to [k, inf); constant on (x_{i-1}, x_i]
  auto it = std::lower_bound(mu_.x.begin(), mu_.x.end(), k - kTol);
  std::size_t i = static_cast<std::size_t>(it - mu_.x.begin());
  if (i >= mu_.x.size()) return kInf;
  return tail_mom_[i] / tail_mass_[i];
}

double BarycentreFns::theta(double k) const {
  // mean of mu restricted to (-inf, k]; constant on [x_i, x_{i+1})
  auto it = std::upper_bound(mu_.x.begin(), mu_.x.end(), k + kTol);
  if (it == mu_.x.begin()) return -kInf;
  std::size_t i = static_cast<std::size_t>(it - mu_.x.begin()) - 1;
  return head_mom_[i] / head_mass_[i];
}

double BarycentreFns::theta_inv(double z) const {
  // sup{w : Theta(w) <= z}: the first atom whose head-mean exceeds z.
  for (std::size_t i = 0; i < mu_.x.size(); ++i)
    if (head_mom_[i] / head_mass_[i] > z + kTol) return mu_.x[i];
  return mu_.x.back();
}

double BarycentreFns::psi_inv(double z) const {
  // inf{w : Psi(w) >= z}: one atom below the first tail whose mean reaches z.
  for (std::size_t i = 0; i < mu_.x.size(); ++i) {
    if (tail_mom_[i] / tail_mass_[i] >= z - kTol)
      return i == 0 ? mu_.x.front() : mu_.x[i - 1];
  }
  return mu_.x.back();
}

BarycentreFns barycentres(const ImpliedMeasure& mu) { return BarycentreFns(mu); }

std::pair<double, double> inverse_barycentres(const BarycentreFns& fns,
                                              const Barriers& barriers) {
  barriers.validate(fns.mean());
  return {fns.theta_inv(barriers.lo), fns.psi_inv(barriers.hi)};
}

GammaCurves::GammaCurves(ImpliedMeasure mu) : mu_(std::move(mu)) {
  mu_.validate();
  mean_ = mu_.mean();
  for (std::size_t i = 0; i < mu_.x.size(); ++i) {
    if (mu_.x[i] < mean_ - kTol) {
      lo_.push_back(mu_.x[i]);
      lo_p_.push_back(mu_.p[i]);
    } else if (mu_.x[i] > mean_ + kTol) {
      hi_.push_back(mu_.x[i]);
      hi_p_.push_back(mu_.p[i]);
    }
    // an atom exactly at the mean never enters the stopping regions
  }
  if (lo_.empty() || hi_.empty())
    throw std::runtime_error("degenerate law: stopping boundaries undefined");
}

double GammaCurves::gamma_plus(double x) const {
  // Largest k such that the mass on {a_1..a_k} u (x, inf) still has
  // non-negative mean gap to x, taken as a limit from the right in x so a
  // fresh maximum at an atom does not trigger a stop by itself.
  double up_gap = 0, region_mass = 0;
  for (std::size_t i = 0; i < hi_.size(); ++i) {
    if (hi_[i] > x + kTol) {
      up_gap += hi_p_[i] * (hi_[i] - x);
      region_mass += hi_p_[i];
    }
  }
  double g = up_gap;
  std::size_t accepted = 0;  // number of lower atoms admitted
  for (std::size_t k = 0; k < lo_.size(); ++k) {
    double g_next = g + lo_p_[k] * (lo_[k] - x);
    double mass_next = region_mass + lo_p_[k];
    if (g_next > kTol || (std::abs(g_next) <= kTol && mass_next <= kTol)) {
      g = g_next;
      region_mass = mass_next;
      accepted = k + 1;
    } else {
      break;
    }
  }
  if (accepted >= lo_.size()) {
    // all lower mass admitted: only possible for a degenerate law, which
    // the constructor rejects; keep a defensive boundary at the start
    return mean_;
  }
  return lo_[accepted];
}

double GammaCurves::gamma_minus(double y) const {
  // Smallest upper atom b_{j-1} such that restricting the upper region to
  // (b_{j-1}, inf) makes the mean gap to y non-positive, taken as a limit
  // from the left in y (mirror of gamma_plus).
  double dn_gap = 0, region_mass = 0;
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (lo_[i] < y - kTol) {
      dn_gap += lo_p_[i] * (lo_[i] - y);
      region_mass += lo_p_[i];
    }
  }
  // h_j = gap with upper atoms b_j.. included; scan j from the top down
  double h = dn_gap;
  double mass = region_mass;
  std::size_t j = hi_.size();  // upper region currently empty
  while (j > 0) {
    double h_next = h + hi_p_[j - 1] * (hi_[j - 1] - y);
    double mass_next = mass + hi_p_[j - 1];
    if (h_next < -kTol || (std::abs(h_next) <= kTol && mass_next <= kTol)) {
      h = h_next;
      mass = mass_next;
      --j;
    } else {
      break;
    }
  }
  if (j == 0) return mean_;  // defensive, as in gamma_plus
  return hi_[j - 1];
}

GammaCurves gamma_curves(const ImpliedMeasure& mu) { return GammaCurves(mu); }

KSelection select_K(const BarycentreFns& fns, const Barriers& barriers) {
  auto [ti, pi] = inverse_barycentres(fns, barriers);
  KSelection sel;
  if (ti >= pi - kTol) {
    sel.kcase = KCase::OUTSIDE;
    sel.k = (pi < ti - kTol) ? 0.5 * (pi + ti) : ti;
  } else {
    sel.kcase = KCase::INSIDE;
    sel.k = 0.5 * (ti + pi);
  }
  return sel;
}

TiltedJackaRule::TiltedJackaRule(ImpliedMeasure mu, double k)
    : mu_(std::move(mu)) {
  mu_.validate();
  if (mu_.x.size() == 1) {
    degenerate_ = true;
    lo1_ = hi1_ = mu_.x.front();
    return;
  }
  // Split at k; an atom at k is shared half/half between the branches.
  std::vector<double> dx, dp, ux, up;
  for (std::size_t i = 0; i < mu_.x.size(); ++i) {
    double at = mu_.x[i], m = mu_.p[i];
    if (std::abs(at - k) <= kTol * (1.0 + std::abs(k))) {
      dx.push_back(at);
      dp.push_back(0.5 * m);
      ux.push_back(at);
      up.push_back(0.5 * m);
    } else if (at < k) {
      dx.push_back(at);
      dp.push_back(m);
    } else {
      ux.push_back(at);
      up.push_back(m);
    }
  }
  if (dx.empty() || ux.empty())
    throw std::runtime_error("split point leaves a branch empty");
  auto branch_mean = [](const std::vector<double>& xs,
                        const std::vector<double>& ps) {
    double m = 0, s = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      m += ps[i];
      s += ps[i] * xs[i];
    }
    return s / m;
  };
  lo1_ = branch_mean(dx, dp);
  hi1_ = branch_mean(ux, up);
  // Upper-branch thresholds: Psi of the normalized upper branch at each of
  // its atoms; the path stops at the highest atom whose threshold the
  // running maximum has reached.
  up_atom_ = ux;
  up_thresh_.resize(ux.size());
  {
    double m = 0, s = 0;
    for (std::size_t i = ux.size(); i-- > 0;) {
      m += up[i];
      s += up[i] * ux[i];
      up_thresh_[i] = s / m;
    }
  }
  dn_atom_ = dx;
  dn_thresh_.resize(dx.size());
  {
    double m = 0, s = 0;
    for (std::size_t i = 0; i < dx.size(); ++i) {
      m += dp[i];
      s += dp[i] * dx[i];
      dn_thresh_[i] = s / m;
    }
  }
}

double TiltedJackaRule::upper_stop_level(double running_max) const {
  double level = -kInf;
  for (std::size_t i = 0; i < up_atom_.size(); ++i)
    if (up_thresh_[i] <= running_max + kTol) level = up_atom_[i];
  return level;
}

double TiltedJackaRule::lower_stop_level(double running_min) const {
  double level = kInf;
  for (std::size_t i = dn_atom_.size(); i-- > 0;)
    if (dn_thresh_[i] >= running_min - kTol) level = dn_atom_[i];
  return level;
}

std::size_t perkins_stop(const Path& path, const GammaCurves& curves) {
  if (path.values.empty()) return 0;
  double curmax = path.values[0], curmin = path.values[0];
  for (std::size_t i = 0; i < path.values.size(); ++i) {
    double v = path.values[i];
    curmax = std::max(curmax, v);
    curmin = std::min(curmin, v);
    if (v <= curves.gamma_plus(curmax) + kTol) return i;
    if (v >= curves.gamma_minus(curmin) - kTol) return i;
  }
  return path.values.size();
}

std::size_t tilted_jacka_stop(const Path& path, const BarycentreFns& fns,
                              double k) {
  TiltedJackaRule rule(fns.measure(), k);
  if (path.values.empty()) return 0;
  if (rule.degenerate()) return 0;
  std::size_t i = 0;
  // stage 1: exit the interval between the branch means
  for (; i < path.values.size(); ++i) {
    if (path.values[i] <= rule.stage1_lo() + kTol ||
        path.values[i] >= rule.stage1_hi() - kTol)
      break;
  }
  if (i == path.values.size()) return i;
  bool upper = path.values[i] >= rule.stage1_hi() - kTol;
  double ext = path.values[i];
  for (; i < path.values.size(); ++i) {
    double v = path.values[i];
    if (upper) {
      ext = std::max(ext, v);
      if (v <= rule.upper_stop_level(ext) + kTol) return i;
    } else {
      ext = std::min(ext, v);
      if (v >= rule.lower_stop_level(ext) - kTol) return i;
    }
  }
  return path.values.size();
}

}  // namespace dnt
