// Command-line front end: arbitrage checks, price bounds, Monte Carlo
// verification of bound attainment, the hedging backtest and the
// barrier-surface dump.  Exit codes for `check`/`bounds`: 0 = consistent,
// 2 = weak arbitrage / free lunch, 3 = model-free arbitrage; other
// commands use 0 = success, 1 = failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dnt/arbitrage.hpp"
#include "dnt/bounds.hpp"
#include "dnt/market.hpp"
#include "dnt/simulate.hpp"

namespace {

int verdict_exit_code(dnt::Verdict v) {
  switch (v) {
    case dnt::Verdict::NONE:
      return 0;
    case dnt::Verdict::WFLVR:
    case dnt::Verdict::WEAK:
      return 2;
    case dnt::Verdict::MODEL_FREE:
      return 3;
  }
  return 1;
}

// Prints to stdout and, when requested, to a file.
void emit(const std::string& text, const std::string& out_path) {
  std::cout << text;
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_bounds(const dnt::BoundResult& lower,
                          const dnt::BoundResult& upper) {
  std::ostringstream os;
  os.precision(12);
  os << "lower " << lower.lower;
  if (lower.lower_strikes)
    os << " strikes " << lower.lower_strikes->first << " "
       << lower.lower_strikes->second;
  os << "\n";
  os << "upper " << upper.upper;
  if (upper.upper_term) os << " term " << dnt::to_string(*upper.upper_term);
  if (upper.upper_strike) os << " strike " << *upper.upper_strike;
  os << "\n";
  os << "attained " << (upper.attained ? "yes" : "no") << "\n";
  for (const auto& h : lower.hedges) os << "hedge " << h << "\n";
  for (const auto& h : upper.hedges) os << "hedge " << h << "\n";
  if (!upper.notes.empty()) os << "notes " << upper.notes << "\n";
  return os.str();
}

std::string cdf_table(const dnt::BacktestReport& rep) {
  std::ostringstream os;
  os.precision(12);
  os << "error\trobust\tdelta_vega\n";
  // the two CDFs are sampled on their own grids; emit both
  for (std::size_t i = 0; i < rep.robust.cdf.size(); ++i) {
    os << rep.robust.cdf[i].first << "\t" << rep.robust.cdf[i].second << "\t";
    if (i < rep.delta_vega.cdf.size())
      os << rep.delta_vega.cdf[i].first << "\t"
         << rep.delta_vega.cdf[i].second;
    os << "\n";
  }
  return os.str();
}

std::string cdf_svg(const dnt::BacktestReport& rep) {
  const double w = 640, h = 420, ml = 60, mr = 20, mt = 20, mb = 40;
  double xmin = std::min(rep.robust.min, rep.delta_vega.min);
  double xmax = std::max(rep.robust.max, rep.delta_vega.max);
  if (xmax <= xmin) xmax = xmin + 1.0;
  auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr);
  };
  auto py = [&](double p) { return h - mb - p * (h - mt - mb); };
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w
     << "' height='" << h << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr
     << "' y2='" << h - mb << "' stroke='black'/>\n";
  os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='"
     << h - mb << "' stroke='black'/>\n";
  const dnt::StrategyReport* strategies[2] = {&rep.robust, &rep.delta_vega};
  const char* colors[2] = {"#1f77b4", "#d62728"};
  for (int s = 0; s < 2; ++s) {
    os << "<polyline fill='none' stroke='" << colors[s]
       << "' stroke-width='1.5' points='";
    for (const auto& [x, p] : strategies[s]->cdf)
      os << px(x) << "," << py(p) << " ";
    os << "'/>\n";
    os << "<text x='" << w - 180 << "' y='" << mt + 20 + 18 * s
       << "' fill='" << colors[s] << "'>" << strategies[s]->name
       << "</text>\n";
  }
  os << "<text x='" << w / 2 << "' y='" << h - 8
     << "' text-anchor='middle'>hedging error</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"double no-touch toolkit: arbitrage checks, model-free "
               "bounds, embeddings and hedging backtests"};
  app.require_subcommand(1);
  std::cout.precision(12);

  std::string quotes_path, digitals_path, out_path, config_path;
  double lo = 0.0, hi = 0.0;
  bool continuum = false, want_svg = false;
  std::size_t paths = 100000;
  double dt = 1e-4, lambda = 0.5;
  std::uint64_t seed = 20260824;
  std::size_t nodes = 21;

  auto* c_check = app.add_subcommand("check", "arbitrage taxonomy of quotes");
  c_check->add_option("quotes", quotes_path, "call quote file")->required();
  c_check->add_option("--digitals", digitals_path, "digital quote file");
  c_check->add_option("--lo", lo, "lower barrier (with --digitals)");
  c_check->add_option("--hi", hi, "upper barrier (with --digitals)");
  c_check->add_option("--out", out_path, "write the report here too");

  auto* c_bounds = app.add_subcommand("bounds", "model-free no-touch bounds");
  c_bounds->add_option("quotes", quotes_path)->required();
  c_bounds->add_option("--lo", lo, "lower barrier")->required();
  c_bounds->add_option("--hi", hi, "upper barrier")->required();
  c_bounds->add_option("--digitals", digitals_path);
  c_bounds->add_flag("--continuum", continuum,
                     "treat the quotes as a full curve");
  c_bounds->add_option("--out", out_path);

  auto* c_verify = app.add_subcommand(
      "verify", "Monte Carlo attainment of the bounds via embeddings");
  c_verify->add_option("quotes", quotes_path)->required();
  c_verify->add_option("--lo", lo)->required();
  c_verify->add_option("--hi", hi)->required();
  c_verify->add_option("--paths", paths);
  c_verify->add_option("--dt", dt);
  c_verify->add_option("--seed", seed);
  c_verify->add_option("--lambda", lambda, "mixture weight (reported run)");
  c_verify->add_option("--out", out_path);

  auto* c_back = app.add_subcommand("backtest", "hedging backtest");
  c_back->add_option("config", config_path,
                     "key=value config (omit for the benchmark defaults)");
  c_back->add_option("--out", out_path, "output directory");
  c_back->add_flag("--svg", want_svg, "also write a CDF plot");
  c_back->add_option("--seed", seed, "override the seed");
  bool seed_given = false;
  c_back->callback([&] { seed_given = c_back->count("--seed") > 0; });

  auto* c_surf = app.add_subcommand("surface", "bound surfaces over barriers");
  c_surf->add_option("quotes", quotes_path)->required();
  c_surf->add_option("--nodes", nodes, "grid nodes per axis");
  c_surf->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_check) {
      auto quotes = dnt::load_quotes_file(quotes_path);
      dnt::ArbitrageReport rep;
      if (!digitals_path.empty()) {
        auto digitals = dnt::load_digitals_file(digitals_path);
        rep = dnt::check_digitals(quotes, digitals, dnt::Barriers{lo, hi});
      } else {
        rep = dnt::check_quotes(quotes);
      }
      emit(rep.serialize(), out_path);
      return verdict_exit_code(rep.verdict);
    }

    if (*c_bounds) {
      auto quotes = dnt::load_quotes_file(quotes_path);
      dnt::Barriers barriers{lo, hi};
      if (continuum) {
        auto curve = dnt::extend_piecewise_linear(quotes);
        auto check = dnt::check_curve(curve);
        if (check.verdict != dnt::Verdict::NONE) {
          emit(check.serialize(), out_path);
          return verdict_exit_code(check.verdict);
        }
        emit(format_bounds(dnt::lower_bound_continuum(curve, barriers),
                           dnt::upper_bound_continuum(curve, barriers)),
             out_path);
        return 0;
      }
      dnt::DigitalQuotes digitals;
      if (!digitals_path.empty())
        digitals = dnt::load_digitals_file(digitals_path);
      bool quoted_barriers =
          quotes.has_strike(lo) && quotes.has_strike(hi) &&
          (digitals.lower || digitals.upper);
      auto check = quoted_barriers
                       ? dnt::check_digitals(quotes, digitals, barriers)
                       : dnt::check_quotes(quotes);
      if (check.verdict != dnt::Verdict::NONE) {
        emit(check.serialize(), out_path);
        return verdict_exit_code(check.verdict);
      }
      auto lower = dnt::lower_bound_finite(quotes, barriers);
      auto upper =
          quoted_barriers
              ? dnt::upper_bound_finite_digitals(quotes, digitals, barriers)
              : dnt::upper_bound_finite(quotes, barriers);
      emit(format_bounds(lower, upper), out_path);
      return 0;
    }

    if (*c_verify) {
      auto quotes = dnt::load_quotes_file(quotes_path);
      dnt::Barriers barriers{lo, hi};
      auto curve = dnt::extend_piecewise_linear(quotes);
      auto mu = dnt::implied_measure(curve);
      auto lower = dnt::lower_bound_continuum(curve, barriers);
      auto upper = dnt::upper_bound_continuum(curve, barriers);
      dnt::EmbedConfig cfg;
      cfg.paths = paths;
      cfg.dt = dt;
      cfg.seed = seed;
      cfg.mix_lambda = lambda;
      auto pk =
          dnt::realize_embedding(mu, barriers, dnt::StoppingRule::PERKINS, cfg);
      auto tj = dnt::realize_embedding(mu, barriers,
                                       dnt::StoppingRule::TILTED_JACKA, cfg);
      std::ostringstream os;
      os.precision(12);
      os << "upper-analytic " << upper.upper << " mc " << pk.no_touch.value
         << " se " << pk.no_touch.se << "\n";
      os << "lower-analytic " << lower.lower << " mc " << tj.no_touch.value
         << " se " << tj.no_touch.se << "\n";
      bool ok_up =
          std::abs(pk.no_touch.value - upper.upper) <= 3.0 * pk.no_touch.se;
      bool ok_lo =
          std::abs(tj.no_touch.value - lower.lower) <= 3.0 * tj.no_touch.se;
      os << "upper-within-3se " << (ok_up ? "yes" : "no") << "\n";
      os << "lower-within-3se " << (ok_lo ? "yes" : "no") << "\n";
      if (!pk.warning.empty()) os << "warning " << pk.warning << "\n";
      if (!tj.warning.empty()) os << "warning " << tj.warning << "\n";
      emit(os.str(), out_path);
      return ok_up && ok_lo ? 0 : 1;
    }

    if (*c_back) {
      dnt::BacktestConfig cfg = config_path.empty()
                                    ? dnt::default_backtest_config()
                                    : dnt::parse_backtest_config(
                                          read_file(config_path));
      if (seed_given) cfg.seed = seed;
      auto rep = dnt::backtest(cfg);
      std::filesystem::path dir = out_path.empty() ? "." : out_path;
      std::filesystem::create_directories(dir);
      std::string report = rep.serialize();
      std::cout << report;
      {
        std::ofstream out(dir / "report.txt");
        out << report;
      }
      {
        std::ofstream out(dir / "cdf.tsv");
        out << cdf_table(rep);
      }
      if (want_svg) {
        std::ofstream out(dir / "cdf.svg");
        out << cdf_svg(rep);
      }
      return 0;
    }

    if (*c_surf) {
      auto quotes = dnt::load_quotes_file(quotes_path);
      auto curve = dnt::extend_piecewise_linear(quotes);
      auto mu = dnt::implied_measure(curve);
      double spot = curve.spot();
      double span = mu.support_hi() - mu.support_lo();
      if (span <= 0.0) span = spot;
      std::vector<double> lo_grid, hi_grid;
      double lo0 = std::max(1e-9, mu.support_lo() - 0.05 * span);
      double hi1 = mu.support_hi() + 0.05 * span;
      for (std::size_t i = 0; i < nodes; ++i) {
        double t = static_cast<double>(i) / static_cast<double>(nodes - 1);
        lo_grid.push_back(lo0 + t * (spot - lo0));
        hi_grid.push_back(spot + t * (hi1 - spot));
      }
      auto surf = dnt::p_surface(mu, lo_grid, hi_grid);
      std::ostringstream os;
      os.precision(12);
      os << "lo\thi\tlower\tupper\n";
      for (std::size_t i = 0; i < lo_grid.size(); ++i)
        for (std::size_t j = 0; j < hi_grid.size(); ++j)
          os << lo_grid[i] << "\t" << hi_grid[j] << "\t" << surf.lower[i][j]
             << "\t" << surf.upper[i][j] << "\n";
      emit(os.str(), out_path);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
