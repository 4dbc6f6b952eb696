#pragma once

// Command-line driver. Six subcommands over the library:
//
//   xi       spectral shift on a lambda grid           -> CSV
//   trace    pointwise reconstruction from xi           -> JSON
//   bands    periodic band edges, mu, gap partial sums  -> CSV + JSON
//   scatter  reflection data and the scattering xi      -> CSV
//   am       almost-Mathieu measure table               -> CSV
//   borg     even-potential eigenvalue-only demo        -> JSON
//
// All floats are emitted through the fixed 12-significant-digit formatter,
// sweeps are parallelized by index (XITRACE_THREADS caps the pool) and
// assembled in order, so identical inputs give byte-identical output.
// Exit codes: 0 success, 2 descriptor/config problems, 3 quality failures.

#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "xitrace/config.hpp"
#include "xitrace/experiments.hpp"
#include "xitrace/jacobi.hpp"
#include "xitrace/parallel.hpp"
#include "xitrace/periodic.hpp"
#include "xitrace/scattering.hpp"
#include "xitrace/schrodinger.hpp"
#include "xitrace/trace.hpp"

namespace xitrace {
namespace cli {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// emission helpers
// ---------------------------------------------------------------------------

// JSON numbers are rounded through the same 12-digit formatter the CSV uses;
// serialization of the re-parsed double is then reproducible.
inline double j12(double x) { return std::strtod(format_g12(x).c_str(), nullptr); }

inline ordered_json j12_list(const std::vector<double>& xs) {
  ordered_json a = ordered_json::array();
  for (double x : xs) a.push_back(j12(x));
  return a;
}

inline ordered_json config_echo(const Config& cfg) {
  ordered_json j = ordered_json::object();
  for (const auto& [key, value] : cfg.resolved()) j[key] = value;
  return j;
}

inline void csv_preamble(std::ostream& out, const std::string& sub,
                         const Config& cfg) {
  out << "# xitrace " << sub << " v1\n";
  for (const auto& [key, value] : cfg.resolved())
    out << "# config: " << key << " = " << value << "\n";
}

inline void csv_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i)
    out << (i ? "," : "") << cells[i];
  out << "\n";
}

struct Emitter {
  std::string out_prefix;  // empty: stdout

  void write(const std::string& ext, const std::string& payload) const {
    if (out_prefix.empty()) {
      std::cout << payload;
      return;
    }
    const std::string path = out_prefix + "." + ext;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open output file: " + path);
    f << payload;
  }
};

inline std::string dump_json(const ordered_json& j) { return j.dump(2) + "\n"; }

// Per-point quality failures degrade that row; anything else thrown by the
// body (bad descriptor, admission failure) must not escape a worker thread,
// so it is captured and rethrown on the calling thread after the sweep.
template <class Fn>
inline void point_sweep(std::size_t n, std::vector<std::string>& errors,
                        Fn&& body) {
  std::vector<std::string> fatal(n);
  parallel_for(n, [&](std::size_t i) {
    try {
      body(i);
    } catch (const quality_error& e) {
      errors[i] = e.what();
    } catch (const std::exception& e) {
      fatal[i] = e.what();
    }
  });
  for (const auto& msg : fatal)
    if (!msg.empty()) throw std::invalid_argument(msg);
}

// ---------------------------------------------------------------------------
// operator descriptors ([operator] section)
// ---------------------------------------------------------------------------

// the two families share one kind namespace; names do not collide
inline bool is_jacobi_kind(const std::string& kind) {
  return kind == "constant" || kind == "periodic" || kind == "almost_mathieu" ||
         kind == "finite";
}

inline JacobiOperator jacobi_from_config(const Config& cfg) {
  const std::string kind = cfg.require_string("operator", "kind");
  if (kind == "constant")
    return JacobiOperator::constant(cfg.require_double("operator", "value"));
  if (kind == "periodic")
    return JacobiOperator::periodic(cfg.get_list("operator", "values", {}));
  if (kind == "almost_mathieu")
    return JacobiOperator::almost_mathieu(
        cfg.require_double("operator", "coupling"),
        cfg.require_int("operator", "p"), cfg.require_int("operator", "q"),
        cfg.get_double("operator", "theta", 0.0));
  if (kind == "finite")
    return JacobiOperator::finite(cfg.get_list("operator", "values", {}),
                                  cfg.get_int("operator", "first_index", 0));
  throw config_error("not a Jacobi descriptor kind: '" + kind + "'");
}

inline Potential potential_from_config(const Config& cfg) {
  const std::string kind = cfg.require_string("operator", "kind");
  if (kind == "zero") return Potential::zero();
  if (kind == "harmonic")
    return Potential::harmonic(cfg.get_double("operator", "a", 1.0),
                               cfg.get_double("operator", "b", 0.0));
  if (kind == "mathieu")
    return Potential::mathieu(cfg.require_double("operator", "amplitude"));
  if (kind == "square_well")
    return Potential::square_well(cfg.require_double("operator", "depth"),
                                  cfg.require_double("operator", "width"));
  if (kind == "sampled")
    return Potential::sampled_from_file(cfg.require_string("operator", "file"));
  throw config_error("not a potential kind: '" + kind + "'");
}

inline std::vector<double> lambda_grid(const Config& cfg,
                                       const std::string& sec) {
  const double lo = cfg.require_double(sec, "lambda_min");
  const double hi = cfg.require_double(sec, "lambda_max");
  const std::int64_t n = cfg.get_int(sec, "points", 201);
  if (!(lo < hi)) throw config_error("[" + sec + "] needs lambda_min < lambda_max");
  if (n < 2) throw config_error("[" + sec + "] needs points >= 2");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < g.size(); ++i)
    g[i] = lo + (hi - lo) * double(i) / double(n - 1);
  return g;
}

// ---------------------------------------------------------------------------
// xi: spectral shift on a lambda grid -> CSV (lambda, xi, flagged, uncertainty)
// ---------------------------------------------------------------------------

inline int run_xi(const Config& cfg, const Emitter& em) {
  const std::string kind = cfg.require_string("operator", "kind");
  const auto grid = lambda_grid(cfg, "xi");
  const auto eps = cfg.get_list("tolerances", "eps", default_eps_schedule());

  std::vector<XiPoint> pts(grid.size());
  std::vector<std::string> errors(grid.size());
  if (is_jacobi_kind(kind)) {
    const JacobiOperator h = jacobi_from_config(cfg);
    const std::int64_t site = cfg.get_int("xi", "site", 0);
    point_sweep(grid.size(), errors,
                [&](std::size_t i) { pts[i] = xi_arg(h, site, grid[i], eps); });
  } else {
    const Potential V = potential_from_config(cfg);
    const double x = cfg.get_double("xi", "x", 0.0);
    const double ode_tol = cfg.get_double("tolerances", "ode_tol", 1e-11);
    point_sweep(grid.size(), errors, [&](std::size_t i) {
      pts[i] = xi_schrodinger(V, x, grid[i], eps, ode_tol);
    });
  }
  cfg.check_consumed({"operator", "xi", "tolerances"});

  std::ostringstream csv;
  csv_preamble(csv, "xi", cfg);
  csv << "lambda,xi,flagged,uncertainty\n";
  int failures = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!errors[i].empty()) {
      ++failures;
      csv_row(csv, {format_g12(grid[i]), "nan", "1", "nan"});
    } else {
      csv_row(csv, {format_g12(grid[i]), format_g12(pts[i].value),
                    pts[i].flagged ? "1" : "0", format_g12(pts[i].uncertainty)});
    }
  }
  em.write("csv", csv.str());
  if (failures) {
    std::cerr << "xi: " << failures << " of " << grid.size()
              << " points failed to settle; rows marked nan\n";
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// trace: reconstruct v(site) / V(x) from the shift function -> JSON
// ---------------------------------------------------------------------------

inline int run_trace(const Config& cfg, const Emitter& em) {
  const std::string kind = cfg.require_string("operator", "kind");
  ordered_json rep;
  rep["schema_version"] = "1";
  rep["subcommand"] = "trace";

  if (is_jacobi_kind(kind)) {
    const JacobiOperator h = jacobi_from_config(cfg);
    const std::int64_t site = cfg.get_int("trace", "site", 0);
    // defaults give a window well clear of the site for finite descriptors
    const std::int64_t first = cfg.get_int("trace", "first", site - 12);
    const std::int64_t last = cfg.get_int("trace", "last", site + 12);
    const TruncatedJacobi t = truncate(h, first, last);
    const DirichletSite ds{site};
    const XiGrid xi = xi_counting_grid(t, ds);
    const auto [e_minus, e_plus] = spectral_enclosure(t, ds);
    const double value = trace_formula_jacobi(xi, e_minus, e_plus);
    cfg.check_consumed({"operator", "trace", "tolerances"});

    rep["config"] = config_echo(cfg);
    rep["result"] = {{"family", "jacobi"},
                     {"site", site},
                     {"window", {first, last}},
                     {"value", j12(value)},
                     {"true_value", j12(h.v(site))},
                     {"enclosure", {j12(e_minus), j12(e_plus)}},
                     {"xi_jumps", xi.jump_points().size()},
                     {"method", "counting (exact identity)"}};
    em.write("json", dump_json(rep));
    return 0;
  }

  // continuum route: spectral data at a base point, Abel-regularized limit
  const Potential V = potential_from_config(cfg);
  const double x = cfg.get_double("trace", "x", 0.0);
  const double root_tol = cfg.get_double("tolerances", "root_tol", 1e-10);
  const double ode_tol = cfg.get_double("tolerances", "ode_tol", 1e-11);
  const double lambda_max =
      cfg.get_double("trace", "lambda_max", V.lower_bound() + 80.0);

  const XiGrid xi = xi_confining(V, x, lambda_max, root_tol, ode_tol);
  const double e0 = xi.jump_points().front();
  const double covered = xi.cover_hi() - e0;
  const double auto_alpha = std::log(1e8) / covered;
  const std::vector<double> alphas = cfg.get_list(
      "trace", "alphas", {4.0 * auto_alpha, 2.0 * auto_alpha, auto_alpha});
  const double cutoff =
      cfg.get_double("trace", "cutoff", e0 + covered * (1.0 - 1e-9));
  const AbelSchedule schedule{alphas, cutoff};
  schedule.validate();
  const ReconstructionResult rec = reconstruct_V(xi, e0, schedule);
  cfg.check_consumed({"operator", "trace", "tolerances"});

  rep["config"] = config_echo(cfg);
  rep["result"] = {{"family", "schrodinger"},
                   {"x", j12(x)},
                   {"value", j12(rec.value)},
                   {"true_value", j12(V(x))},
                   {"e0", j12(rec.e0)},
                   {"xi_jumps", xi.jump_points().size()},
                   {"abel",
                    {{"alphas", j12_list(alphas)},
                     {"cutoff", j12(cutoff)},
                     {"raw", j12_list(rec.abel.raw)},
                     {"extrapolants", j12_list(rec.abel.extrapolants)},
                     {"converged", rec.abel.converged}}},
                   {"summable", rec.summable},
                   {"summability_mass", j12(rec.summability_mass)}};
  em.write("json", dump_json(rep));
  return 0;
}

// ---------------------------------------------------------------------------
// bands: periodic band structure -> CSV table + JSON report
// ---------------------------------------------------------------------------

inline int run_bands(const Config& cfg, const Emitter& em) {
  const Potential V = potential_from_config(cfg);
  const auto count = cfg.get_int("bands", "count", 8);
  const double x = cfg.get_double("bands", "x", 0.0);
  const double ode_tol = cfg.get_double("tolerances", "ode_tol", 1e-12);
  const double root_tol = cfg.get_double("tolerances", "root_tol", 1e-10);
  const double xtol = cfg.get_double("tolerances", "xtol", 1e-12);
  if (count < 2) throw config_error("[bands] count must be >= 2");

  const BandStructure bs =
      band_edges(V, static_cast<int>(count), ode_tol, xtol);
  const auto mu = dirichlet_mu(V, x, static_cast<int>(count) - 1, &bs,
                               root_tol, ode_tol);
  const PeriodicReconstruction rec = reconstruct_V_periodic(bs, mu);
  cfg.check_consumed({"operator", "bands", "tolerances"});

  std::ostringstream csv;
  csv_preamble(csv, "bands", cfg);
  csv << "band,lower,upper,length,gap_after,mu_in_gap_after\n";
  for (std::size_t b = 0; b < bs.band_count(); ++b) {
    const bool has_gap = 2 * b + 2 < bs.edges.size();
    csv_row(csv,
            {std::to_string(b), format_g12(bs.edges[2 * b]),
             format_g12(bs.edges[2 * b + 1]),
             format_g12(bs.edges[2 * b + 1] - bs.edges[2 * b]),
             has_gap ? format_g12(bs.gap_lengths[b]) : "",
             (has_gap && b < mu.size()) ? format_g12(mu[b]) : ""});
  }
  em.write("csv", csv.str());

  ordered_json rep;
  rep["schema_version"] = "1";
  rep["subcommand"] = "bands";
  rep["config"] = config_echo(cfg);
  rep["result"] = {{"period", j12(bs.period)},
                   {"edges", j12_list(bs.edges)},
                   {"gap_lengths", j12_list(bs.gap_lengths)},
                   {"mu", j12_list(mu)},
                   {"reconstruction",
                    {{"x", j12(x)},
                     {"value", j12(rec.value)},
                     {"true_value", j12(V(x))},
                     {"e0", j12(rec.e0)},
                     {"terms", j12_list(rec.terms)},
                     {"partial_sums", j12_list(rec.partial_sums)},
                     {"tail_bound", j12(rec.tail_bound)}}}};
  em.write("json", dump_json(rep));
  return 0;
}

// ---------------------------------------------------------------------------
// scatter: R, T, and the scattering-representation xi -> CSV
// ---------------------------------------------------------------------------

inline int run_scatter(const Config& cfg, const Emitter& em) {
  const Potential V = potential_from_config(cfg);
  const auto grid = lambda_grid(cfg, "scatter");
  const double x = cfg.get_double("scatter", "x", 0.0);
  const double cutoff = cfg.get_double("scatter", "cutoff", -1.0);
  const double ode_tol = cfg.get_double("tolerances", "ode_tol", 1e-12);
  if (grid.front() <= 0.0)
    throw config_error("[scatter] lambda_min must be > 0 (scattering energies)");

  std::vector<XiScatteringPoint> pts(grid.size());
  std::vector<std::string> errors(grid.size());
  point_sweep(grid.size(), errors, [&](std::size_t i) {
    pts[i] = xi_scattering(V, x, grid[i], cutoff, ode_tol);
  });
  cfg.check_consumed({"operator", "scatter", "tolerances"});

  std::ostringstream csv;
  csv_preamble(csv, "scatter", cfg);
  csv << "lambda,k,re_r,im_r,abs_r,re_t,im_t,unitarity_defect,xi,"
         "half_r_bound,bound_ok\n";
  int failures = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!errors[i].empty()) {
      ++failures;
      csv_row(csv, {format_g12(grid[i]), "nan", "nan", "nan", "nan", "nan",
                    "nan", "nan", "nan", "nan", "0"});
      continue;
    }
    const ScatteringData& d = pts[i].data;
    const bool ok =
        std::abs(pts[i].value - 0.5) <= pts[i].half_r_bound + 1e-12;
    csv_row(csv, {format_g12(grid[i]), format_g12(d.k),
                  format_g12(d.reflection.real()),
                  format_g12(d.reflection.imag()),
                  format_g12(std::abs(d.reflection)),
                  format_g12(d.transmission.real()),
                  format_g12(d.transmission.imag()),
                  format_g12(d.unitarity_defect), format_g12(pts[i].value),
                  format_g12(pts[i].half_r_bound), ok ? "1" : "0"});
  }
  em.write("csv", csv.str());
  if (failures) {
    std::cerr << "scatter: " << failures << " of " << grid.size()
              << " points failed; rows marked nan\n";
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// am: almost-Mathieu measure table -> CSV
// ---------------------------------------------------------------------------

inline int run_am(const Config& cfg, const Emitter& em) {
  const double coupling = cfg.require_double("am", "coupling");
  const double theta = cfg.get_double("am", "theta", 0.0);

  std::vector<std::pair<std::int64_t, std::int64_t>> pq;
  if (cfg.has("am", "rationals")) {
    // "1/2, 1/3, 2/5" style
    std::string raw = cfg.require_string("am", "rationals");
    for (char& ch : raw)
      if (ch == ',') ch = ' ';
    std::istringstream in(raw);
    std::string tok;
    while (in >> tok) {
      const auto slash = tok.find('/');
      long long p, q;
      if (slash == std::string::npos ||
          !detail::parse_int_strict(tok.substr(0, slash), &p) ||
          !detail::parse_int_strict(tok.substr(slash + 1), &q))
        throw config_error("[am] rationals: expected p/q, got '" + tok + "'");
      pq.push_back({p, q});
    }
    if (pq.empty()) throw config_error("[am] rationals is empty");
  } else {
    // every p/q in lowest terms with 0 <= p/q <= 1 and q <= max_q
    const auto max_q = cfg.get_int("am", "max_q", 8);
    if (max_q < 1) throw config_error("[am] max_q must be >= 1");
    pq.push_back({0, 1});
    pq.push_back({1, 1});
    for (std::int64_t q = 2; q <= max_q; ++q)
      for (std::int64_t p = 1; p < q; ++p)
        if (std::gcd(p, q) == 1) pq.push_back({p, q});
    std::sort(pq.begin(), pq.end(), [](const auto& a, const auto& b) {
      return a.first * b.second < b.first * a.second;  // by value of p/q
    });
  }
  cfg.check_consumed({"am"});

  std::ostringstream csv;
  csv_preamble(csv, "am", cfg);
  csv << "p,q,alpha,period,bands,measure,lower_bound,excess\n";
  for (const auto& [p, q] : pq) {
    const auto s = almost_mathieu_spectrum(coupling, p, q, theta);
    csv_row(csv, {std::to_string(p), std::to_string(q),
                  format_g12(double(p) / double(q)), std::to_string(s.period),
                  std::to_string(s.bands.size()), format_g12(s.measure),
                  format_g12(s.lower_bound),
                  format_g12(s.measure - s.lower_bound)});
  }
  em.write("csv", csv.str());
  return 0;
}

// ---------------------------------------------------------------------------
// borg: even confining potential from eigenvalues alone -> JSON
// ---------------------------------------------------------------------------

inline int run_borg(const Config& cfg, const Emitter& em) {
  const Potential V = potential_from_config(cfg);
  const auto n_levels = cfg.get_int("borg", "n_levels", 24);
  const double root_tol = cfg.get_double("tolerances", "root_tol", 1e-10);
  const double ode_tol = cfg.get_double("tolerances", "ode_tol", 1e-11);
  const BorgReport rep =
      borg_demo(V, static_cast<int>(n_levels), root_tol, ode_tol);
  cfg.check_consumed({"operator", "borg", "tolerances"});

  ordered_json j;
  j["schema_version"] = "1";
  j["subcommand"] = "borg";
  j["config"] = config_echo(cfg);
  j["result"] = {{"eigenvalues", j12_list(rep.eigenvalues)},
                 {"v0_reconstructed", j12(rep.v0_reconstructed)},
                 {"v0_true", j12(rep.v0_true)},
                 {"abs_error", j12(rep.abs_error)},
                 {"low_confidence", rep.low_confidence},
                 {"xi_cover_hi", j12(rep.xi0.cover_hi())},
                 {"abel",
                  {{"raw", j12_list(rep.reconstruction.abel.raw)},
                   {"extrapolants", j12_list(rep.reconstruction.abel.extrapolants)},
                   {"converged", rep.reconstruction.abel.converged}}},
                 {"summable", rep.reconstruction.summable}};
  em.write("json", dump_json(j));
  return 0;
}

// ---------------------------------------------------------------------------
// driver
// ---------------------------------------------------------------------------

struct SubArgs {
  std::string config_path;
  std::string out_prefix;
  std::vector<std::string> overrides;
};

inline int dispatch(const std::string& name, const SubArgs& args) {
  Config cfg = Config::from_file(args.config_path);
  for (const auto& o : args.overrides) cfg.set_override(o);
  const Emitter em{args.out_prefix};
  if (name == "xi") return run_xi(cfg, em);
  if (name == "trace") return run_trace(cfg, em);
  if (name == "bands") return run_bands(cfg, em);
  if (name == "scatter") return run_scatter(cfg, em);
  if (name == "am") return run_am(cfg, em);
  if (name == "borg") return run_borg(cfg, em);
  throw config_error("unknown subcommand: " + name);  // unreachable via CLI11
}

inline int run(int argc, const char* const* argv) {
  CLI::App app{
      "xitrace: spectral shift functions for 1-D Schrodinger and Jacobi "
      "operators.\n"
      "Config files are INI-style ([section], key = value, # comments); every "
      "emitted\nreport embeds the resolved configuration. Floats are printed "
      "with 12\nsignificant digits; reruns are byte-identical. "
      "XITRACE_THREADS caps the sweep\npool."};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* cmd;
    SubArgs args;
  };
  std::map<std::string, Sub> subs;
  auto add = [&](const std::string& name, const std::string& what) {
    CLI::App* c = app.add_subcommand(name, what);
    auto& s = subs[name];
    s.cmd = c;
    c->add_option("-c,--config", s.args.config_path, "problem description file")
        ->required();
    c->add_option("-o,--out", s.args.out_prefix,
                  "output file prefix (default: stdout)");
    c->add_option("--set", s.args.overrides,
                  "override a config value, section.key=value (repeatable)");
  };
  add("xi",
      "spectral shift on a lambda grid -> CSV: lambda, xi, flagged, "
      "uncertainty.\nSections: [operator], [xi] lambda_min/lambda_max/points "
      "+ site (Jacobi) or x\n(potential), [tolerances] eps list, ode_tol");
  add("trace",
      "reconstruct v(site) or V(x) from the shift function -> JSON.\n"
      "Jacobi: exact counting identity over [trace] first/last window.\n"
      "Potential (confining): shift data up to [trace] lambda_max, Abel limit\n"
      "with [trace] alphas/cutoff (default: derived from coverage)");
  add("bands",
      "periodic band structure -> CSV: band, lower, upper, length, gap_after,"
      "\nmu_in_gap_after; plus a JSON report with the gap partial sums at "
      "[bands] x.\nSections: [operator] (periodic), [bands] count/x");
  add("scatter",
      "reflection data on a lambda grid -> CSV: lambda, k, re_r, im_r, abs_r,"
      "\nre_t, im_t, unitarity_defect, xi, half_r_bound, bound_ok.\nSections: "
      "[operator] (decaying), [scatter] lambda_min/lambda_max/points/x");
  add("am",
      "almost-Mathieu measure table -> CSV: p, q, alpha, period, bands, "
      "measure,\nlower_bound, excess. Sections: [am] coupling, theta, and "
      "rationals (p/q list)\nor max_q");
  add("borg",
      "even confining potential from its eigenvalues alone -> JSON.\n"
      "Sections: [operator], [borg] n_levels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad usage is a descriptor problem
  }

  try {
    for (auto& [name, sub] : subs)
      if (sub.cmd->parsed()) return dispatch(name, sub.args);
    return 2;
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const quality_error& e) {
    std::cerr << "quality error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace cli
}  // namespace xitrace
