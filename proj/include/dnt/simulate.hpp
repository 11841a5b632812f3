#pragma once

// Monte Carlo engines: Brownian paths stopped by the extremal embedding
// rules (verifying that the price bounds are attained), a Heston
// simulator with double no-touch pricing, Black-Scholes double-barrier
// analytics, and the hedging backtest comparing the robust superhedge
// with a delta/vega hedger under transaction costs.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dnt/embedding.hpp"
#include "dnt/hedging.hpp"
#include "dnt/market.hpp"

namespace dnt {

struct McEstimate {
  double value{};
  double se{};
  std::size_t n{};
};

// ---------------------------------------------------------------------
// Brownian paths and embedding realization

// n independent Brownian paths started at `start`, steps of size dt,
// `cap` steps each.  Path i is a deterministic function of (seed, i).
std::vector<Path> brownian_paths(std::size_t n, double start, double dt,
                                 std::size_t cap, std::uint64_t seed);

enum class StoppingRule { PERKINS, TILTED_JACKA, MIX };

struct EmbedConfig {
  std::size_t paths{100000};
  double dt{1e-4};
  std::size_t max_steps{0};   // 0: derived from the law's variance
  std::uint64_t seed{20260824};
  double mix_lambda{0.5};     // MIX: probability of the Perkins rule
  bool keep_stopped{false};   // retain the stopped values
};

struct EmbedResult {
  McEstimate no_touch;        // P(min > lo, max < hi)
  double stopped_mean{};      // should equal S0 (uniform integrability)
  double tv_distance{};       // empirical stopped law vs target
  double capped_fraction{};   // paths cut off at the step cap
  std::string warning;        // non-empty when the cap bias is material
  std::vector<double> stopped;
};

// Runs the chosen stopping rule on Brownian paths from the mean of mu.
// Steps use exact Brownian-bridge minima/maxima so level crossings
// between grid points are detected; stopped values are clipped to the
// rule's boundary level (an atom of mu).
EmbedResult realize_embedding(const ImpliedMeasure& mu,
                              const Barriers& barriers, StoppingRule rule,
                              const EmbedConfig& cfg);

// ---------------------------------------------------------------------
// Heston

struct HestonParams {
  double s0{};
  double v0{};     // initial variance
  double kappa{};  // mean-reversion rate
  double theta{};  // long-run variance
  double xi{};     // volatility of variance
  double rho{};    // correlation of the two drivers

  void validate() const;
};

// n paths on the grid {0, dt, ..., T}; full-truncation Euler (the
// variance is clamped at zero inside drift and diffusion).  Path i is a
// deterministic function of (seed, i).
std::vector<Path> heston_paths(const HestonParams& params, std::size_t n,
                               double dt, double horizon, std::uint64_t seed);

// Empirical double no-touch price over stored paths (sample-based
// crossing detection only).
McEstimate price_dnt_mc(const std::vector<Path>& paths,
                        const Barriers& barriers);

// Streaming variant: simulates n Heston paths without storing them and
// detects barrier touches with per-step Brownian-bridge crossing
// probabilities, removing the leading discrete-monitoring bias.
McEstimate price_dnt_heston(const HestonParams& params, std::size_t n,
                            double dt, double horizon, std::uint64_t seed,
                            const Barriers& barriers);

// ---------------------------------------------------------------------
// Black-Scholes analytics (zero rates)

double bs_call(double s, double k, double sigma, double tau);
// Implied volatility of a call quote; throws if the price is outside
// the arbitrage band.
double bs_implied_vol(double price, double s, double k, double tau);
// Double no-touch price (survival probability of the log-price in the
// band) by eigenfunction expansion.
double bs_dnt(double s, const Barriers& barriers, double sigma, double tau);

// ---------------------------------------------------------------------
// Backtest

struct BacktestConfig {
  HestonParams heston;
  double maturity{0.5};
  Barriers barriers{1.95, 2.05};
  std::vector<double> strike_grid;  // vanilla quotes available to hedgers
  std::size_t paths{10000};
  double dt{1e-3};
  std::size_t rebalances_per_year{252};
  std::uint64_t seed{20260824};
  double option_cost_rate{0.01};
  double spot_cost_rate{0.0002};
  double stop_cost{0.02};     // absolute cost per rebalance that halts hedging
  double utility_alpha{1.0};  // exponential utility coefficient
};

struct StrategyReport {
  std::string name;
  std::vector<double> errors;  // per-path hedging error net of costs
  double mean{};
  double min{};
  double max{};
  double avg_txn_cost{};
  double utility{};  // E[-exp(-alpha * error)]
  // empirical CDF sampled on a fixed grid: (error level, probability)
  std::vector<std::pair<double, double>> cdf;
};

struct BacktestReport {
  double dnt_price{};        // model price of the double no-touch
  double robust_premium{};   // cost of the selected superhedge
  std::string robust_label;  // which superhedge was cheapest
  StrategyReport robust;
  StrategyReport delta_vega;
  // paths where the robust error gross of costs fell below
  // dnt_price - robust_premium (must be zero: superhedge property)
  std::size_t dominance_violations{};
  std::string serialize() const;
};

// Simulates the Heston market, builds the model's vanilla quotes on the
// strike grid, selects the cheapest finite-strike superhedge, and runs
// both hedging strategies over the same paths.
BacktestReport backtest(const BacktestConfig& cfg);

// Default configuration reproducing the benchmark study: barriers
// (1.95, 2.05), six-month maturity, and the quoted-strike grid with
// corridor strikes (1.9364, 2.0636).
BacktestConfig default_backtest_config();

// key=value config parser ('#' comments); unknown keys are rejected and
// every field must be present except those with defaults.
BacktestConfig parse_backtest_config(const std::string& text);

}  // namespace dnt
