#include "dnt/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <future>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dnt {

namespace {

constexpr double kTol = 1e-12;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq ss{static_cast<std::uint32_t>(seed),
                   static_cast<std::uint32_t>(seed >> 32),
                   static_cast<std::uint32_t>(index),
                   static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(ss);
}

// Runs fn(begin, end) over [0, n) in parallel chunks.  Per-path work
// must depend only on the global path index, so the chunking does not
// affect results.
template <typename F>
void parallel_ranges(std::size_t n, F&& fn) {
  std::size_t hw = std::thread::hardware_concurrency();
  std::size_t nw = std::min<std::size_t>(hw == 0 ? 1 : hw, 8);
  if (n < 2000 || nw == 1) {
    fn(0, n);
    return;
  }
  std::size_t chunk = (n + nw - 1) / nw;
  std::vector<std::future<void>> fs;
  for (std::size_t b = 0; b < n; b += chunk) {
    std::size_t e = std::min(n, b + chunk);
    fs.push_back(std::async(std::launch::async, [&fn, b, e] { fn(b, e); }));
  }
  for (auto& f : fs) f.get();
}

// Exact min / max of a Brownian bridge over one step with variance
// `var`, given the endpoints; u is uniform on (0, 1).
double bridge_min(double a, double b, double var, double u) {
  double c = -0.5 * var * std::log(u);
  double d = a - b;
  return 0.5 * (a + b - std::sqrt(d * d + 4.0 * c));
}

double bridge_max(double a, double b, double var, double u) {
  double c = -0.5 * var * std::log(u);
  double d = a - b;
  return 0.5 * (a + b + std::sqrt(d * d + 4.0 * c));
}

McEstimate binomial_estimate(double hits, std::size_t n) {
  McEstimate e;
  e.n = n;
  e.value = hits / static_cast<double>(n);
  e.se = std::sqrt(std::max(0.0, e.value * (1.0 - e.value)) /
                   static_cast<double>(n));
  return e;
}

struct StopOut {
  double stopped{};
  bool touched{};
  bool capped{};
};

struct EmbedEngines {
  double start{};
  double atom_at_start{};
  const GammaCurves* perkins{};
  const TiltedJackaRule* tj{};
};

StopOut run_perkins(std::mt19937_64& rng, const GammaCurves& g, double p0,
                    double start, double lo, double hi, double dt,
                    std::size_t max_steps) {
  std::uniform_real_distribution<double> U(
      std::numeric_limits<double>::min(), 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  StopOut out;
  if (p0 > 0.0 && U(rng) < p0) {
    out.stopped = start;
    out.touched = start <= lo || start >= hi;
    return out;
  }
  double sdt = std::sqrt(dt);
  double v = start, curmax = start, curmin = start;
  double gp = g.gamma_plus(curmax);
  double gm = g.gamma_minus(curmin);
  double pmin = start, pmax = start;
  for (std::size_t s = 0; s < max_steps; ++s) {
    double v1 = v + sdt * N(rng);
    double mn = bridge_min(v, v1, dt, U(rng));
    double mx = bridge_max(v, v1, dt, U(rng));
    bool dn = mn <= gp + kTol;
    bool up = mx >= gm - kTol;
    if (dn && up) {
      if (gp - mn >= mx - gm)
        up = false;
      else
        dn = false;
    }
    if (dn) {
      pmin = std::min(pmin, gp);
      pmax = std::max(pmax, mx);
      out.stopped = gp;
      out.touched = pmin <= lo || pmax >= hi;
      return out;
    }
    if (up) {
      pmax = std::max(pmax, gm);
      pmin = std::min(pmin, mn);
      out.stopped = gm;
      out.touched = pmin <= lo || pmax >= hi;
      return out;
    }
    pmin = std::min(pmin, mn);
    pmax = std::max(pmax, mx);
    v = v1;
    if (pmax > curmax) {
      curmax = pmax;
      gp = g.gamma_plus(curmax);
    }
    if (pmin < curmin) {
      curmin = pmin;
      gm = g.gamma_minus(curmin);
    }
  }
  out.stopped = v;
  out.touched = pmin <= lo || pmax >= hi;
  out.capped = true;
  return out;
}

StopOut run_tilted_jacka(std::mt19937_64& rng, const TiltedJackaRule& rule,
                         double start, double lo, double hi, double dt,
                         std::size_t max_steps) {
  StopOut out;
  if (rule.degenerate()) {
    out.stopped = start;
    out.touched = start <= lo || start >= hi;
    return out;
  }
  std::uniform_real_distribution<double> U(
      std::numeric_limits<double>::min(), 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  double sdt = std::sqrt(dt);
  double L = rule.stage1_lo(), H = rule.stage1_hi();
  double v = start, pmin = start, pmax = start;
  std::size_t s = 0;
  bool upper = false;
  bool exited = false;
  for (; s < max_steps; ++s) {
    double v1 = v + sdt * N(rng);
    double mn = bridge_min(v, v1, dt, U(rng));
    double mx = bridge_max(v, v1, dt, U(rng));
    bool dn = mn <= L + kTol;
    bool up = mx >= H - kTol;
    if (dn && up) {
      if (L - mn >= mx - H)
        up = false;
      else
        dn = false;
    }
    if (dn) {
      v = L;
      pmin = std::min(pmin, L);
      pmax = std::max(pmax, mx);
      upper = false;
      exited = true;
      ++s;
      break;
    }
    if (up) {
      v = H;
      pmax = std::max(pmax, H);
      pmin = std::min(pmin, mn);
      upper = true;
      exited = true;
      ++s;
      break;
    }
    pmin = std::min(pmin, mn);
    pmax = std::max(pmax, mx);
    v = v1;
  }
  if (!exited) {
    out.stopped = v;
    out.touched = pmin <= lo || pmax >= hi;
    out.capped = true;
    return out;
  }
  if (upper) {
    double ext = v;  // running max since the branch started
    double stopv = rule.upper_stop_level(ext);
    for (; s < max_steps; ++s) {
      double v1 = v + sdt * N(rng);
      double mn = bridge_min(v, v1, dt, U(rng));
      double mx = bridge_max(v, v1, dt, U(rng));
      if (mn <= stopv + kTol) {
        pmin = std::min(pmin, stopv);
        pmax = std::max(pmax, mx);
        out.stopped = stopv;
        out.touched = pmin <= lo || pmax >= hi;
        return out;
      }
      pmin = std::min(pmin, mn);
      pmax = std::max(pmax, mx);
      if (mx > ext) {
        ext = mx;
        stopv = rule.upper_stop_level(ext);
      }
      v = v1;
      if (v <= stopv + kTol) {
        out.stopped = stopv;
        out.touched = pmin <= lo || pmax >= hi;
        return out;
      }
    }
  } else {
    double ext = v;  // running min since the branch started
    double stopv = rule.lower_stop_level(ext);
    for (; s < max_steps; ++s) {
      double v1 = v + sdt * N(rng);
      double mn = bridge_min(v, v1, dt, U(rng));
      double mx = bridge_max(v, v1, dt, U(rng));
      if (mx >= stopv - kTol) {
        pmax = std::max(pmax, stopv);
        pmin = std::min(pmin, mn);
        out.stopped = stopv;
        out.touched = pmin <= lo || pmax >= hi;
        return out;
      }
      pmin = std::min(pmin, mn);
      pmax = std::max(pmax, mx);
      if (mn < ext) {
        ext = mn;
        stopv = rule.lower_stop_level(ext);
      }
      v = v1;
      if (v >= stopv - kTol) {
        out.stopped = stopv;
        out.touched = pmin <= lo || pmax >= hi;
        return out;
      }
    }
  }
  out.stopped = v;
  out.touched = pmin <= lo || pmax >= hi;
  out.capped = true;
  return out;
}

}  // namespace

std::vector<Path> brownian_paths(std::size_t n, double start, double dt,
                                 std::size_t cap, std::uint64_t seed) {
  if (n == 0 || cap == 0) throw std::invalid_argument("empty path request");
  std::vector<Path> out(n);
  double sdt = std::sqrt(dt);
  parallel_ranges(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto rng = make_rng(seed, i);
      std::normal_distribution<double> N(0.0, 1.0);
      Path& p = out[i];
      p.times.resize(cap + 1);
      p.values.resize(cap + 1);
      p.times[0] = 0.0;
      p.values[0] = start;
      for (std::size_t s = 1; s <= cap; ++s) {
        p.times[s] = s * dt;
        p.values[s] = p.values[s - 1] + sdt * N(rng);
      }
    }
  });
  return out;
}

EmbedResult realize_embedding(const ImpliedMeasure& mu,
                              const Barriers& barriers, StoppingRule rule,
                              const EmbedConfig& cfg) {
  mu.validate();
  double start = mu.mean();
  barriers.validate(start);
  if (cfg.paths == 0) throw std::invalid_argument("no paths requested");

  EmbedResult res;
  if (mu.x.size() == 1) {
    // degenerate law: every path stops at the start immediately
    res.no_touch = binomial_estimate(
        (barriers.lo < start && start < barriers.hi)
            ? static_cast<double>(cfg.paths)
            : 0.0,
        cfg.paths);
    res.stopped_mean = start;
    if (cfg.keep_stopped) res.stopped.assign(cfg.paths, start);
    return res;
  }

  double var = 0.0;
  for (std::size_t i = 0; i < mu.x.size(); ++i)
    var += mu.p[i] * (mu.x[i] - start) * (mu.x[i] - start);
  std::size_t max_steps = cfg.max_steps;
  if (max_steps == 0)
    max_steps = std::max<std::size_t>(
        10000, static_cast<std::size_t>(100.0 * var / cfg.dt));

  bool need_perkins =
      rule == StoppingRule::PERKINS || rule == StoppingRule::MIX;
  bool need_tj =
      rule == StoppingRule::TILTED_JACKA || rule == StoppingRule::MIX;
  std::optional<GammaCurves> curves;
  std::optional<TiltedJackaRule> tjrule;
  if (need_perkins) curves.emplace(mu);
  if (need_tj) {
    BarycentreFns fns(mu);
    KSelection sel = select_K(fns, barriers);
    tjrule.emplace(mu, sel.k);
  }
  double p0 = mu.mass_at(start);

  std::vector<double> stopped(cfg.paths);
  std::vector<unsigned char> touched(cfg.paths), capped(cfg.paths);
  parallel_ranges(cfg.paths, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto rng = make_rng(cfg.seed, i);
      bool use_perkins = rule == StoppingRule::PERKINS;
      if (rule == StoppingRule::MIX) {
        std::uniform_real_distribution<double> U(0.0, 1.0);
        use_perkins = U(rng) < cfg.mix_lambda;
      }
      StopOut o =
          use_perkins
              ? run_perkins(rng, *curves, p0, start, barriers.lo, barriers.hi,
                            cfg.dt, max_steps)
              : run_tilted_jacka(rng, *tjrule, start, barriers.lo, barriers.hi,
                                 cfg.dt, max_steps);
      stopped[i] = o.stopped;
      touched[i] = o.touched ? 1 : 0;
      capped[i] = o.capped ? 1 : 0;
    }
  });

  double hits = 0, sum = 0, ncap = 0;
  std::vector<double> atom_mass(mu.x.size(), 0.0);
  double off_atom = 0.0;
  for (std::size_t i = 0; i < cfg.paths; ++i) {
    if (!touched[i]) hits += 1.0;
    sum += stopped[i];
    if (capped[i]) ncap += 1.0;
    bool matched = false;
    for (std::size_t a = 0; a < mu.x.size(); ++a) {
      if (std::abs(stopped[i] - mu.x[a]) <= 1e-9 * (1.0 + std::abs(mu.x[a]))) {
        atom_mass[a] += 1.0;
        matched = true;
        break;
      }
    }
    if (!matched) off_atom += 1.0;
  }
  double n = static_cast<double>(cfg.paths);
  res.no_touch = binomial_estimate(hits, cfg.paths);
  res.stopped_mean = sum / n;
  res.capped_fraction = ncap / n;
  double tv = off_atom / n;
  for (std::size_t a = 0; a < mu.x.size(); ++a)
    tv += std::abs(atom_mass[a] / n - mu.p[a]);
  res.tv_distance = 0.5 * tv;
  if (res.capped_fraction > 0.001)
    res.warning = "cap bias: " + std::to_string(res.capped_fraction * 100.0) +
                  "% of paths hit the step cap";
  if (cfg.keep_stopped) res.stopped = std::move(stopped);
  return res;
}

void HestonParams::validate() const {
  if (!(s0 > 0) || !(v0 > 0) || !(kappa > 0) || !(theta > 0) || !(xi > 0))
    throw std::invalid_argument("heston parameters must be positive");
  if (!(rho >= -1.0 && rho <= 1.0))
    throw std::invalid_argument("heston correlation outside [-1, 1]");
}

std::vector<Path> heston_paths(const HestonParams& params, std::size_t n,
                               double dt, double horizon,
                               std::uint64_t seed) {
  params.validate();
  if (n == 0 || !(dt > 0) || !(horizon > 0))
    throw std::invalid_argument("empty path request");
  std::size_t steps = static_cast<std::size_t>(std::lround(horizon / dt));
  if (steps == 0) steps = 1;
  double h = horizon / static_cast<double>(steps);
  double sdt = std::sqrt(h);
  double sr = std::sqrt(1.0 - params.rho * params.rho);
  std::vector<Path> out(n);
  parallel_ranges(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto rng = make_rng(seed, i);
      std::normal_distribution<double> N(0.0, 1.0);
      Path& p = out[i];
      p.times.resize(steps + 1);
      p.values.resize(steps + 1);
      p.times[0] = 0.0;
      p.values[0] = params.s0;
      double s = params.s0, v = params.v0;
      for (std::size_t k = 1; k <= steps; ++k) {
        double vol = std::sqrt(std::max(v, 0.0));
        double z1 = N(rng);
        double z2 = params.rho * z1 + sr * N(rng);
        s += vol * s * sdt * z1;
        v += params.kappa * (params.theta - std::max(v, 0.0)) * h +
             params.xi * vol * sdt * z2;
        p.times[k] = k * h;
        p.values[k] = s;
      }
    }
  });
  return out;
}

McEstimate price_dnt_mc(const std::vector<Path>& paths,
                        const Barriers& barriers) {
  if (paths.empty()) throw std::invalid_argument("no paths");
  double hits = 0;
  for (const auto& p : paths) hits += dnt_payoff(p, barriers);
  return binomial_estimate(hits, paths.size());
}

McEstimate price_dnt_heston(const HestonParams& params, std::size_t n,
                            double dt, double horizon, std::uint64_t seed,
                            const Barriers& barriers) {
  params.validate();
  barriers.validate(params.s0);
  std::size_t steps = static_cast<std::size_t>(std::lround(horizon / dt));
  if (steps == 0) steps = 1;
  double h = horizon / static_cast<double>(steps);
  double sdt = std::sqrt(h);
  double sr = std::sqrt(1.0 - params.rho * params.rho);
  std::vector<unsigned char> alive(n, 0);
  parallel_ranges(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto rng = make_rng(seed, i);
      std::normal_distribution<double> N(0.0, 1.0);
      std::uniform_real_distribution<double> U(0.0, 1.0);
      double s = params.s0, v = params.v0;
      bool touched = false;
      for (std::size_t k = 0; k < steps && !touched; ++k) {
        double vol = std::sqrt(std::max(v, 0.0));
        double z1 = N(rng);
        double z2 = params.rho * z1 + sr * N(rng);
        double s1 = s + vol * s * sdt * z1;
        double var = vol * s * vol * s * h;
        if (s1 <= barriers.lo || s1 >= barriers.hi) {
          touched = true;
        } else if (var > 0.0) {
          // Brownian-bridge crossing probabilities for the unobserved
          // part of the step
          double a = (s - barriers.lo) * (s1 - barriers.lo);
          if (a < 10.0 * var && U(rng) < std::exp(-2.0 * a / var))
            touched = true;
          if (!touched) {
            double c = (barriers.hi - s) * (barriers.hi - s1);
            if (c < 10.0 * var && U(rng) < std::exp(-2.0 * c / var))
              touched = true;
          }
        }
        s = s1;
        v += params.kappa * (params.theta - std::max(v, 0.0)) * h +
             params.xi * vol * sdt * z2;
      }
      alive[i] = touched ? 0 : 1;
    }
  });
  double hits = 0;
  for (auto a : alive) hits += a;
  return binomial_estimate(hits, n);
}

// ---------------------------------------------------------------------
// Black-Scholes analytics

namespace {
double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}
}  // namespace

double bs_call(double s, double k, double sigma, double tau) {
  if (k <= 0.0) return s;
  if (tau <= 0.0 || sigma <= 0.0) return std::max(s - k, 0.0);
  double sv = sigma * std::sqrt(tau);
  double d1 = (std::log(s / k) + 0.5 * sv * sv) / sv;
  return s * norm_cdf(d1) - k * norm_cdf(d1 - sv);
}

double bs_implied_vol(double price, double s, double k, double tau) {
  if (!(price > std::max(s - k, 0.0) - 1e-12) || price >= s)
    throw std::invalid_argument("call price outside the arbitrage band");
  double lo = 1e-6, hi = 5.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (bs_call(s, k, mid, tau) < price)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double bs_dnt(double s, const Barriers& barriers, double sigma, double tau) {
  if (s <= barriers.lo || s >= barriers.hi) return 0.0;
  if (tau <= 0.0) return 1.0;
  if (sigma <= 0.0) return 1.0;
  // survival of x_t = log S_t in (log lo, log hi); x has drift
  // nu = -sigma^2/2, so with c = nu/sigma^2 = -1/2 the absorbed-density
  // eigenfunction expansion integrates in closed form.
  double L = std::log(barriers.hi / barriers.lo);
  double y = std::log(s / barriers.lo);
  double c = -0.5;
  double nu = c * sigma * sigma;
  double sum = 0.0;
  for (int k = 1; k <= 400; ++k) {
    double kpl = k * M_PI / L;
    double lambda =
        0.5 * sigma * sigma * kpl * kpl + 0.5 * nu * nu / (sigma * sigma);
    double decay = std::exp(-lambda * tau);
    if (decay < 1e-16 && k > 4) break;
    double integral = kpl * (1.0 - (k % 2 == 1 ? -1.0 : 1.0) * std::exp(c * L)) /
                      (c * c + kpl * kpl);
    sum += decay * std::sin(kpl * y) * integral;
  }
  double p = (2.0 / L) * std::exp(-c * y) * sum;
  return std::min(1.0, std::max(0.0, p));
}

// ---------------------------------------------------------------------
// Backtest

namespace {

struct SimPath {
  std::vector<double> day_times;
  std::vector<double> day_spots;
  double terminal{};
  std::optional<double> t_lo;  // first touch of the lower barrier
  std::optional<double> t_hi;
};

// One Heston path sampled at the rebalance dates, with bridge-corrected
// first-touch times of the barriers.
SimPath simulate_backtest_path(const BacktestConfig& cfg, std::uint64_t index,
                               std::size_t days, std::size_t steps_per_day,
                               double h) {
  auto rng = make_rng(cfg.seed, index);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const HestonParams& hp = cfg.heston;
  double sdt = std::sqrt(h);
  double sr = std::sqrt(1.0 - hp.rho * hp.rho);
  SimPath out;
  out.day_times.reserve(days + 1);
  out.day_spots.reserve(days + 1);
  out.day_times.push_back(0.0);
  out.day_spots.push_back(hp.s0);
  double s = hp.s0, v = hp.v0, t = 0.0;
  for (std::size_t d = 0; d < days; ++d) {
    for (std::size_t k = 0; k < steps_per_day; ++k) {
      double vol = std::sqrt(std::max(v, 0.0));
      double z1 = N(rng);
      double z2 = hp.rho * z1 + sr * N(rng);
      double s1 = s + vol * s * sdt * z1;
      double var = vol * s * vol * s * h;
      double tmid = t + 0.5 * h;
      if (!out.t_lo) {
        if (s1 <= cfg.barriers.lo) {
          out.t_lo = t + h;
        } else if (var > 0.0) {
          double a = (s - cfg.barriers.lo) * (s1 - cfg.barriers.lo);
          if (a < 10.0 * var && U(rng) < std::exp(-2.0 * a / var))
            out.t_lo = tmid;
        }
      }
      if (!out.t_hi) {
        if (s1 >= cfg.barriers.hi) {
          out.t_hi = t + h;
        } else if (var > 0.0) {
          double c = (cfg.barriers.hi - s) * (cfg.barriers.hi - s1);
          if (c < 10.0 * var && U(rng) < std::exp(-2.0 * c / var))
            out.t_hi = tmid;
        }
      }
      s = s1;
      v += hp.kappa * (hp.theta - std::max(v, 0.0)) * h + hp.xi * vol * sdt * z2;
      t += h;
    }
    out.day_times.push_back(t);
    out.day_spots.push_back(s);
  }
  out.terminal = s;
  return out;
}

// Path with the exact barrier-touch samples spliced in, so that the
// hedge evaluator and the payoff see the touches.
Path to_eval_path(const SimPath& sp, const Barriers& barriers) {
  Path p;
  std::vector<std::pair<double, double>> touches;
  if (sp.t_lo) touches.push_back({*sp.t_lo, barriers.lo});
  if (sp.t_hi) touches.push_back({*sp.t_hi, barriers.hi});
  std::sort(touches.begin(), touches.end());
  std::size_t ti = 0;
  for (std::size_t d = 0; d < sp.day_times.size(); ++d) {
    while (ti < touches.size() && touches[ti].first <= sp.day_times[d]) {
      p.times.push_back(touches[ti].first);
      p.values.push_back(touches[ti].second);
      ++ti;
    }
    p.times.push_back(sp.day_times[d]);
    p.values.push_back(sp.day_spots[d]);
  }
  while (ti < touches.size()) {
    p.times.push_back(touches[ti].first);
    p.values.push_back(touches[ti].second);
    ++ti;
  }
  return p;
}

void summarize(StrategyReport& r, double alpha) {
  r.mean = 0.0;
  r.min = r.errors.empty() ? 0.0 : r.errors.front();
  r.max = r.min;
  double usum = 0.0;
  for (double e : r.errors) {
    r.mean += e;
    r.min = std::min(r.min, e);
    r.max = std::max(r.max, e);
    usum += -std::exp(-alpha * e);
  }
  double n = static_cast<double>(r.errors.size());
  r.mean /= n;
  r.utility = usum / n;
  std::vector<double> sorted = r.errors;
  std::sort(sorted.begin(), sorted.end());
  const int kPoints = 81;
  r.cdf.clear();
  for (int i = 0; i < kPoints; ++i) {
    double x = r.min + (r.max - r.min) * i / double(kPoints - 1);
    auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    r.cdf.push_back({x, static_cast<double>(it - sorted.begin()) / n});
  }
}

}  // namespace

BacktestConfig default_backtest_config() {
  BacktestConfig cfg;
  cfg.heston = HestonParams{2.006, 0.00169, 0.559, 0.001352, 0.0676, 0.076};
  cfg.maturity = 0.5;
  cfg.barriers = Barriers{1.95, 2.05};
  cfg.strike_grid = {0.0, 1.70, 1.81, 1.9364, 2.0636, 2.19, 2.30};
  cfg.paths = 10000;
  cfg.dt = 1e-3;
  cfg.rebalances_per_year = 252;
  cfg.seed = 20260824;
  return cfg;
}

BacktestConfig parse_backtest_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto ltrim = line.find_first_not_of(" \t\r");
    if (ltrim == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line without '=': " + line);
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  const std::vector<std::string> known = {
      "s0",       "v0",         "kappa",       "theta",
      "xi",       "rho",        "maturity",    "barrier_lo",
      "barrier_hi", "strikes",  "paths",       "dt",
      "rebalances_per_year",    "seed",        "option_cost_rate",
      "spot_cost_rate",         "stop_cost",   "utility_alpha"};
  for (const auto& [key, val] : kv)
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::runtime_error("unknown config key: " + key);
  auto require = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end())
      throw std::runtime_error("missing config key: " + key);
    return it->second;
  };
  auto num = [](const std::string& v, const std::string& key) {
    try {
      std::size_t pos = 0;
      double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (...) {
      throw std::runtime_error("bad numeric value for " + key + ": " + v);
    }
  };
  BacktestConfig cfg = default_backtest_config();
  cfg.heston.s0 = num(require("s0"), "s0");
  cfg.heston.v0 = num(require("v0"), "v0");
  cfg.heston.kappa = num(require("kappa"), "kappa");
  cfg.heston.theta = num(require("theta"), "theta");
  cfg.heston.xi = num(require("xi"), "xi");
  cfg.heston.rho = num(require("rho"), "rho");
  cfg.maturity = num(require("maturity"), "maturity");
  cfg.barriers.lo = num(require("barrier_lo"), "barrier_lo");
  cfg.barriers.hi = num(require("barrier_hi"), "barrier_hi");
  cfg.paths = static_cast<std::size_t>(num(require("paths"), "paths"));
  cfg.seed = static_cast<std::uint64_t>(num(require("seed"), "seed"));
  {
    cfg.strike_grid.clear();
    std::istringstream ss(require("strikes"));
    std::string tok;
    while (std::getline(ss, tok, ','))
      cfg.strike_grid.push_back(num(tok, "strikes"));
  }
  if (kv.count("dt")) cfg.dt = num(kv["dt"], "dt");
  if (kv.count("rebalances_per_year"))
    cfg.rebalances_per_year =
        static_cast<std::size_t>(num(kv["rebalances_per_year"], "rebalances_per_year"));
  if (kv.count("option_cost_rate"))
    cfg.option_cost_rate = num(kv["option_cost_rate"], "option_cost_rate");
  if (kv.count("spot_cost_rate"))
    cfg.spot_cost_rate = num(kv["spot_cost_rate"], "spot_cost_rate");
  if (kv.count("stop_cost")) cfg.stop_cost = num(kv["stop_cost"], "stop_cost");
  if (kv.count("utility_alpha"))
    cfg.utility_alpha = num(kv["utility_alpha"], "utility_alpha");
  return cfg;
}

std::string BacktestReport::serialize() const {
  std::ostringstream os;
  os.precision(12);
  os << "dnt-price " << dnt_price << "\n";
  os << "robust-superhedge " << robust_label << " premium " << robust_premium
     << "\n";
  for (const StrategyReport* r : {&robust, &delta_vega}) {
    os << "strategy " << r->name << " mean " << r->mean << " min " << r->min
       << " max " << r->max << " avg-txn-cost " << r->avg_txn_cost
       << " utility " << r->utility << "\n";
  }
  os << "dominance-violations " << dominance_violations << "\n";
  return os.str();
}

BacktestReport backtest(const BacktestConfig& cfg) {
  cfg.heston.validate();
  cfg.barriers.validate(cfg.heston.s0);
  if (cfg.strike_grid.empty())
    throw std::runtime_error("backtest requires a strike grid");
  if (cfg.paths == 0) throw std::runtime_error("backtest requires paths");

  // --- the model's vanilla quotes on the strike grid (terminal law MC)
  std::vector<double> strikes = cfg.strike_grid;
  std::sort(strikes.begin(), strikes.end());
  if (strikes.front() != 0.0) strikes.insert(strikes.begin(), 0.0);
  std::vector<double> prices(strikes.size(), 0.0);
  {
    std::size_t nq = std::max<std::size_t>(cfg.paths, 20000);
    std::size_t steps =
        static_cast<std::size_t>(std::lround(cfg.maturity / cfg.dt));
    if (steps == 0) steps = 1;
    double h = cfg.maturity / static_cast<double>(steps);
    double sdt = std::sqrt(h);
    double sr = std::sqrt(1.0 - cfg.heston.rho * cfg.heston.rho);
    std::vector<double> partial(strikes.size(), 0.0);
    std::mutex mtx;
    parallel_ranges(nq, [&](std::size_t b, std::size_t e) {
      std::vector<double> local(strikes.size(), 0.0);
      for (std::size_t i = b; i < e; ++i) {
        auto rng = make_rng(cfg.seed + 1, i);
        std::normal_distribution<double> N(0.0, 1.0);
        double s = cfg.heston.s0, v = cfg.heston.v0;
        for (std::size_t k = 0; k < steps; ++k) {
          double vol = std::sqrt(std::max(v, 0.0));
          double z1 = N(rng);
          double z2 = cfg.heston.rho * z1 + sr * N(rng);
          s += vol * s * sdt * z1;
          v += cfg.heston.kappa * (cfg.heston.theta - std::max(v, 0.0)) * h +
               cfg.heston.xi * vol * sdt * z2;
        }
        for (std::size_t m = 0; m < strikes.size(); ++m)
          local[m] += std::max(s - strikes[m], 0.0);
      }
      std::lock_guard<std::mutex> lock(mtx);
      for (std::size_t m = 0; m < strikes.size(); ++m)
        partial[m] += local[m];
    });
    for (std::size_t m = 0; m < strikes.size(); ++m)
      prices[m] = partial[m] / static_cast<double>(nq);
    prices[0] = cfg.heston.s0;  // strike zero is the forward
  }
  CallQuoteSet quotes;
  quotes.spot = cfg.heston.s0;
  quotes.maturity = cfg.maturity;
  quotes.strikes = strikes;
  quotes.prices = prices;
  quotes.validate();

  BacktestReport rep;
  rep.dnt_price = price_dnt_heston(cfg.heston, cfg.paths, cfg.dt, cfg.maturity,
                                   cfg.seed + 2, cfg.barriers)
                      .value;

  // --- cheapest superhedge from the traded strikes
  PricingSource src(quotes);
  std::vector<HedgePortfolio> family =
      build_finite_superhedges(quotes, cfg.barriers);
  std::size_t best = 0;
  double best_cost = src.cost(family[0]);
  for (std::size_t m = 1; m < family.size(); ++m) {
    double c = src.cost(family[m]);
    if (c < best_cost - 1e-12) {
      best_cost = c;
      best = m;
    }
  }
  const HedgePortfolio& hedge = family[best];
  rep.robust_premium = best_cost;
  rep.robust_label = hedge.label;

  // initial option transaction cost of the superhedge
  double robust_setup_cost = 0.0;
  for (const auto& leg : hedge.options) {
    double unit = 0.0;
    switch (leg.kind) {
      case LegKind::Call:
        unit = src.call(leg.strike);
        break;
      case LegKind::Put:
        unit = src.put(leg.strike);
        break;
      default:
        unit = 0.0;
        break;
    }
    robust_setup_cost += cfg.option_cost_rate * std::abs(leg.qty) * unit;
  }

  // --- implied volatility for the delta/vega hedger
  std::size_t atm = 1;
  for (std::size_t m = 1; m < strikes.size(); ++m)
    if (std::abs(strikes[m] - cfg.heston.s0) <
        std::abs(strikes[atm] - cfg.heston.s0))
      atm = m;
  double sigma_imp = bs_implied_vol(prices[atm], cfg.heston.s0, strikes[atm],
                                    cfg.maturity);
  // vega instrument: straddle struck at the spot
  double k0 = cfg.heston.s0;

  // --- per-path simulation
  std::size_t days = static_cast<std::size_t>(
      std::lround(cfg.maturity * cfg.rebalances_per_year));
  if (days == 0) days = 1;
  double rdt = cfg.maturity / static_cast<double>(days);
  std::size_t steps_per_day =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(rdt / cfg.dt)));
  double h = rdt / static_cast<double>(steps_per_day);

  std::vector<double> rerr(cfg.paths), rtxn(cfg.paths);
  std::vector<double> derr(cfg.paths), dtxn(cfg.paths);
  std::vector<unsigned char> viol(cfg.paths, 0);
  double p = rep.dnt_price;

  parallel_ranges(cfg.paths, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      SimPath sp = simulate_backtest_path(cfg, i, days, steps_per_day, h);
      Path path = to_eval_path(sp, cfg.barriers);
      double payoff = dnt_payoff(path, cfg.barriers);

      // robust strategy: static superhedge plus its barrier forwards
      double hedge_terminal = evaluate_on_path(hedge, path);
      double fwd_cost = 0.0;
      for (const auto& f : hedge.forwards) {
        auto t = path.hit_time(f.level);
        if (!t) continue;
        if (f.unless_first) {
          auto tu = path.hit_time(*f.unless_first);
          if (tu && (*tu < *t ||
                     (*tu == *t && *f.unless_first > f.level)))
            continue;
        }
        fwd_cost += cfg.spot_cost_rate * std::abs(f.qty) * f.level;
      }
      double gross = p - rep.robust_premium + hedge_terminal - payoff;
      double txn = robust_setup_cost + fwd_cost;
      rerr[i] = gross - txn;
      rtxn[i] = txn;
      if (gross < p - rep.robust_premium - 1e-9) viol[i] = 1;

      // delta/vega strategy
      double cash = 0.0, n_sp = 0.0, n_st = 0.0, txn_dv = 0.0;
      bool stopped = false;
      double dead_at = std::numeric_limits<double>::infinity();
      if (sp.t_lo) dead_at = std::min(dead_at, *sp.t_lo);
      if (sp.t_hi) dead_at = std::min(dead_at, *sp.t_hi);
      for (std::size_t d = 0; d < days && !stopped; ++d) {
        double t = sp.day_times[d];
        double tau = cfg.maturity - t;
        if (tau <= 1e-12) break;
        double s = sp.day_spots[d];
        bool alive = t < dead_at;
        double tgt_st = 0.0, tgt_sp = 0.0;
        double sv = sigma_imp * std::sqrt(tau);
        double d1 = (std::log(s / k0) + 0.5 * sv * sv) / sv;
        double st_price = 2.0 * bs_call(s, k0, sigma_imp, tau) + k0 - s;
        double st_delta = 2.0 * norm_cdf(d1) - 1.0;
        double st_vega = 2.0 * s * norm_pdf(d1) * std::sqrt(tau);
        if (alive) {
          double hs = 1e-4 * s;
          double dnt_up = bs_dnt(s + hs, cfg.barriers, sigma_imp, tau);
          double dnt_dn = bs_dnt(s - hs, cfg.barriers, sigma_imp, tau);
          double hv = 1e-4;
          double dnt_vu = bs_dnt(s, cfg.barriers, sigma_imp + hv, tau);
          double dnt_vd = bs_dnt(s, cfg.barriers, sigma_imp - hv, tau);
          double delta = (dnt_up - dnt_dn) / (2.0 * hs);
          double vega = (dnt_vu - dnt_vd) / (2.0 * hv);
          tgt_st = st_vega > 1e-10 ? vega / st_vega : 0.0;
          tgt_sp = delta - tgt_st * st_delta;
        }
        double dst = tgt_st - n_st;
        double dsp = tgt_sp - n_sp;
        double cost = cfg.option_cost_rate * std::abs(dst) * st_price +
                      cfg.spot_cost_rate * std::abs(dsp) * s;
        if (cost > cfg.stop_cost) {
          stopped = true;  // deltas too large: hedging halts for good
          break;
        }
        if (cost > 0.0) {
          cash -= dst * st_price + dsp * s + cost;
          txn_dv += cost;
          n_st = tgt_st;
          n_sp = tgt_sp;
        }
      }
      double st_payoff = std::abs(sp.terminal - k0);
      derr[i] = p + cash + n_sp * sp.terminal + n_st * st_payoff - payoff;
      dtxn[i] = txn_dv;
    }
  });

  rep.robust.name = "robust";
  rep.robust.errors = std::move(rerr);
  rep.delta_vega.name = "delta-vega";
  rep.delta_vega.errors = std::move(derr);
  double rt = 0, dt_sum = 0;
  for (double v : rtxn) rt += v;
  for (double v : dtxn) dt_sum += v;
  rep.robust.avg_txn_cost = rt / static_cast<double>(cfg.paths);
  rep.delta_vega.avg_txn_cost = dt_sum / static_cast<double>(cfg.paths);
  summarize(rep.robust, cfg.utility_alpha);
  summarize(rep.delta_vega, cfg.utility_alpha);
  rep.dominance_violations = 0;
  for (auto v : viol) rep.dominance_violations += v;
  return rep;
}

}  // namespace dnt
