#pragma once

// Experiment layer shared by the command-line driver and the test suite:
// a flag-level configuration record with per-experiment validation and
// defaults, config-file merging (explicit flags win), dispatch into the
// library, and deterministic CSV / JSON-sidecar emission.
//
// Experiments:
//   teb-scan     entropy/bond trace of the environment-growing iteration
//                (seeded per --boundary; "lcga" records the growth route)
//   lcga-build   entropy/bond trace of the light-cone growth route
//   dynamics     single-site polarization series from influence-matrix pairs
//   autocorr     infinite-temperature autocorrelator from IM pairs
//   tebd         finite-chain brickwork baseline for either series
//   qp-predict   quasiparticle entropy-curve prediction s(xi)
//   oracle-check fidelity of both IM routes against the dense environment

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lcim/engine.hpp"
#include "lcim/observe.hpp"
#include "lcim/oracle.hpp"
#include "lcim/qp.hpp"
#include "lcim/tebd.hpp"

namespace lcim {

// ---------------------------------------------------------------------------
// Enumerations and their command-line spellings.
// ---------------------------------------------------------------------------

enum class Experiment {
  teb_scan,
  lcga_build,
  dynamics,
  autocorr,
  tebd,
  qp_predict,
  oracle_check,
};

inline const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::teb_scan: return "teb-scan";
    case Experiment::lcga_build: return "lcga-build";
    case Experiment::dynamics: return "dynamics";
    case Experiment::autocorr: return "autocorr";
    case Experiment::tebd: return "tebd";
    case Experiment::qp_predict: return "qp-predict";
    case Experiment::oracle_check:
    default: return "oracle-check";
  }
}

inline Experiment experiment_from_name(const std::string& s) {
  for (Experiment e : {Experiment::teb_scan, Experiment::lcga_build, Experiment::dynamics,
                       Experiment::autocorr, Experiment::tebd, Experiment::qp_predict,
                       Experiment::oracle_check})
    if (s == experiment_name(e)) return e;
  throw ConfigError("unknown experiment \"" + s + "\"");
}

enum class BoundaryKind { obc, pd, lcga };

inline const char* boundary_name(BoundaryKind b) {
  switch (b) {
    case BoundaryKind::obc: return "obc";
    case BoundaryKind::pd: return "pd";
    case BoundaryKind::lcga:
    default: return "lcga";
  }
}

inline BoundaryKind boundary_from_name(const std::string& s) {
  if (s == "obc") return BoundaryKind::obc;
  if (s == "pd") return BoundaryKind::pd;
  if (s == "lcga") return BoundaryKind::lcga;
  throw ConfigError("unknown boundary \"" + s + "\" (expected obc, pd, or lcga)");
}

// Initial product state of every chain site (and the embedded site).
enum class StateKind { inftemp, xplus, yplus, zup, zdown };

inline const char* state_name(StateKind s) {
  switch (s) {
    case StateKind::inftemp: return "inftemp";
    case StateKind::xplus: return "xplus";
    case StateKind::yplus: return "yplus";
    case StateKind::zup: return "zup";
    case StateKind::zdown:
    default: return "zdown";
  }
}

inline StateKind state_from_name(const std::string& s) {
  for (StateKind k : {StateKind::inftemp, StateKind::xplus, StateKind::yplus, StateKind::zup,
                      StateKind::zdown})
    if (s == state_name(k)) return k;
  throw ConfigError("unknown state \"" + s +
                    "\" (expected inftemp, xplus, yplus, zup, or zdown)");
}

inline Mat2 state_rho(StateKind s) {
  switch (s) {
    case StateKind::inftemp: return 0.5 * Mat2::Identity();
    case StateKind::xplus: return 0.5 * (Mat2::Identity() + pauli_x());
    case StateKind::yplus: return 0.5 * (Mat2::Identity() + pauli_y());
    case StateKind::zup: return 0.5 * (Mat2::Identity() + pauli_z());
    case StateKind::zdown:
    default: return 0.5 * (Mat2::Identity() - pauli_z());
  }
}

inline const char* axis_name(Axis a) {
  switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z:
    default: return "z";
  }
}

inline Axis axis_from_name(const std::string& s) {
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  if (s == "z") return Axis::Z;
  throw ConfigError("unknown axis/op \"" + s + "\" (expected x, y, or z)");
}

// ---------------------------------------------------------------------------
// Configuration record.  Every user-settable field is optional so that the
// merge order (explicit flags, then config file, then defaults) is explicit;
// finalize_config fills defaults and enforces per-experiment requirements.
// ---------------------------------------------------------------------------

struct RunConfig {
  Experiment experiment = Experiment::teb_scan;
  std::optional<double> g, J, h;
  std::optional<std::size_t> T;          // period count (T_max for growth runs)
  std::optional<std::size_t> chi;        // bond-dimension cap
  std::optional<double> tol;             // relative truncation tolerance
  std::optional<BoundaryKind> boundary;  // seed / construction route
  std::optional<StateKind> state;        // initial product state
  std::optional<Axis> axis;              // measured polarization axis
  std::optional<Axis> op;                // autocorrelated Pauli operator
  std::optional<std::size_t> L;          // chain length (tebd) / env size (oracle-check)
  std::optional<std::size_t> steps;      // transfer applications per iteration run
  std::optional<double> xi_min, xi_max;  // s(xi) grid range
  std::optional<std::size_t> xi_points;  // s(xi) grid size
  std::optional<double> w;               // constant pair weight (nats)
  std::optional<std::size_t> n_k;        // momentum samples for the dispersion
  std::optional<std::size_t> seed;       // recorded for randomized harnesses
  std::optional<std::string> out;        // CSV path; sidecar derived from it
};

namespace detail {

template <typename T>
inline void take_if_unset(std::optional<T>& dst, const std::optional<T>& src) {
  if (!dst.has_value() && src.has_value()) dst = src;
}

inline double json_number(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number())
    throw ConfigError("config file: key \"" + key + "\" must be a number");
  return v.get<double>();
}

inline std::size_t json_unsigned(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<double>() < 0)
    throw ConfigError("config file: key \"" + key + "\" must be a nonnegative integer");
  return v.get<std::size_t>();
}

inline std::string json_string(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string())
    throw ConfigError("config file: key \"" + key + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace detail

// Merge a parsed JSON config object into c.  Fields already set (from
// explicit flags) win; unknown keys are rejected by name.
inline void apply_config_file(RunConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config file: top level must be a JSON object");
  using detail::json_number;
  using detail::json_string;
  using detail::json_unsigned;
  for (const auto& [key, val] : j.items()) {
    auto set_d = [&](std::optional<double>& f) {
      if (!f) f = json_number(val, key);
    };
    auto set_u = [&](std::optional<std::size_t>& f) {
      if (!f) f = json_unsigned(val, key);
    };
    if (key == "g") set_d(c.g);
    else if (key == "J") set_d(c.J);
    else if (key == "h") set_d(c.h);
    else if (key == "T") set_u(c.T);
    else if (key == "chi") set_u(c.chi);
    else if (key == "tol") set_d(c.tol);
    else if (key == "boundary") {
      if (!c.boundary) c.boundary = boundary_from_name(json_string(val, key));
    } else if (key == "state") {
      if (!c.state) c.state = state_from_name(json_string(val, key));
    } else if (key == "axis") {
      if (!c.axis) c.axis = axis_from_name(json_string(val, key));
    } else if (key == "op") {
      if (!c.op) c.op = axis_from_name(json_string(val, key));
    } else if (key == "L") set_u(c.L);
    else if (key == "steps") set_u(c.steps);
    else if (key == "xi_min") set_d(c.xi_min);
    else if (key == "xi_max") set_d(c.xi_max);
    else if (key == "xi_points") set_u(c.xi_points);
    else if (key == "w") set_d(c.w);
    else if (key == "nk") set_u(c.n_k);
    else if (key == "seed") set_u(c.seed);
    else if (key == "out") {
      if (!c.out) c.out = json_string(val, key);
    } else {
      throw ConfigError("config file: unknown key \"" + key + "\"");
    }
  }
}

namespace detail {

template <typename T>
inline const T& require_flag(const std::optional<T>& f, const char* flag) {
  if (!f.has_value())
    throw ConfigError(std::string("missing required flag --") + flag);
  return *f;
}

}  // namespace detail

// Fill defaults and enforce per-experiment requirements and numeric ranges.
// Throws ConfigError naming the offending flag.
inline void finalize_config(RunConfig& c) {
  using detail::require_flag;
  const Experiment e = c.experiment;
  const bool is_im_series = e == Experiment::dynamics || e == Experiment::autocorr;
  const bool needs_circuit = e != Experiment::qp_predict;

  // Required physics fields.  --out is optional everywhere: without it the
  // CSV body goes to stdout and no sidecar is written.
  require_flag(c.g, "g");
  require_flag(c.J, "J");
  if (needs_circuit) require_flag(c.h, "h");
  if (needs_circuit && e != Experiment::oracle_check) require_flag(c.T, "T");

  // Defaults.
  if (e == Experiment::oracle_check) {
    if (!c.T) c.T = 3;
    if (!c.L) c.L = 6;
    if (!c.chi) c.chi = 4096;
  }
  if (!c.chi) c.chi = 128;
  if (!c.tol) c.tol = 0.0;
  if (!c.seed) c.seed = 0;
  if (!c.boundary)
    c.boundary = (e == Experiment::teb_scan) ? BoundaryKind::obc : BoundaryKind::lcga;
  if (e == Experiment::lcga_build) c.boundary = BoundaryKind::lcga;
  if (!c.state) {
    if (e == Experiment::dynamics || e == Experiment::tebd) c.state = StateKind::xplus;
    else c.state = StateKind::inftemp;
  }
  if (!c.axis) c.axis = Axis::X;
  if (!c.op) c.op = Axis::X;
  if (e == Experiment::teb_scan && !c.steps) c.steps = 2 * *c.T + 4;
  if (e == Experiment::tebd && !c.L) c.L = 2 * *c.T + 4;
  if (e == Experiment::qp_predict) {
    if (!c.h) c.h = 0.0;
    if (!c.xi_min) c.xi_min = 0.0;
    if (!c.xi_max) c.xi_max = 0.5;
    if (!c.xi_points) c.xi_points = 100;
    if (!c.w) c.w = PairWeight::default_weight();
    if (!c.n_k) c.n_k = 4096;
  }

  // Ranges and cross-field rules.
  if (needs_circuit && *c.T < 1) throw ConfigError("--T must be >= 1");
  if (*c.chi < 1) throw ConfigError("--chi must be >= 1");
  if (*c.tol < 0.0 || *c.tol >= 1.0) throw ConfigError("--tol must lie in [0, 1)");
  if (c.steps && *c.steps < 1) throw ConfigError("--steps must be >= 1");
  if (e == Experiment::autocorr && *c.state != StateKind::inftemp)
    throw ConfigError("autocorr is defined at infinite temperature; drop --state");
  if (e == Experiment::qp_predict) {
    if (std::abs(*c.h) > 0.0)
      throw ConfigError("qp-predict models the free (h = 0) band; drop --h");
    if (*c.xi_points < 2) throw ConfigError("--xi-points must be >= 2");
    if (*c.xi_min < 0.0) throw ConfigError("--xi-min must be >= 0");
    if (!(*c.xi_max > *c.xi_min)) throw ConfigError("--xi-max must exceed --xi-min");
    if (*c.n_k < 64 || *c.n_k % 2 != 0) throw ConfigError("--nk must be even and >= 64");
    if (*c.w < 0.0 || *c.w > PairWeight::max_weight())
      throw ConfigError("--w must lie in [0, 2 ln 2]");
  }
  if (e == Experiment::oracle_check && (*c.L < 2 || *c.L % 2 != 0))
    throw ConfigError("--L must be even and >= 2");
}

// Circuit parameters implied by a finalized config.
inline CircuitParams circuit_of(const RunConfig& c) {
  CircuitParams p;
  p.g = *c.g;
  p.J = *c.J;
  p.h = c.h.value_or(0.0);
  p.T = *c.T;
  if (*c.state == StateKind::inftemp) {
    p.initial_state = InitialStateKind::infinite_temperature;
  } else {
    p.initial_state = InitialStateKind::product_pure;
    p.rho0 = state_rho(*c.state);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Result record and deterministic emission.
// ---------------------------------------------------------------------------

struct RunResult {
  std::string csv_header;             // comma-joined column names, no newline
  std::vector<std::string> csv_rows;  // one formatted line per grid point
  nlohmann::json parameters;          // resolved config echo (+ derived values)
  double total_discarded_weight = 0.0;
  std::vector<std::string> info_lines;  // human-readable stdout summary
  bool checks_passed = true;            // false when a built-in check failed
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_size(std::size_t v) { return std::to_string(v); }

// Resolved-config echo for the metadata sidecar.
inline nlohmann::json config_json(const RunConfig& c) {
  nlohmann::json j;
  j["experiment"] = experiment_name(c.experiment);
  if (c.g) j["g"] = *c.g;
  if (c.J) j["J"] = *c.J;
  if (c.h) j["h"] = *c.h;
  if (c.T) j["T"] = *c.T;
  if (c.chi) j["chi"] = *c.chi;
  if (c.tol) j["tol"] = *c.tol;
  if (c.boundary) j["boundary"] = boundary_name(*c.boundary);
  if (c.state) j["state"] = state_name(*c.state);
  if (c.axis) j["axis"] = axis_name(*c.axis);
  if (c.op) j["op"] = axis_name(*c.op);
  if (c.L) j["L"] = *c.L;
  if (c.steps) j["steps"] = *c.steps;
  if (c.xi_min) j["xi_min"] = *c.xi_min;
  if (c.xi_max) j["xi_max"] = *c.xi_max;
  if (c.xi_points) j["xi_points"] = *c.xi_points;
  if (c.w) j["w"] = *c.w;
  if (c.n_k) j["nk"] = *c.n_k;
  if (c.seed) j["seed"] = *c.seed;
  if (c.out) j["out"] = *c.out;
  return j;
}

inline void emit_trace_rows(const IMTrace& trace, RunResult& r) {
  r.csv_header = "step,cut,entropy_nats,max_bond_dim,discarded_weight";
  for (const IMStepRecord& rec : trace.steps)
    for (std::size_t b = 0; b < rec.entropy_profile.size(); ++b)
      r.csv_rows.push_back(fmt_size(rec.step) + "," + fmt_size(b) + "," +
                           fmt_double(rec.entropy_profile[b]) + "," +
                           fmt_size(rec.max_bond_dim) + "," +
                           fmt_double(rec.discarded_weight));
  if (!trace.steps.empty()) r.total_discarded_weight = trace.steps.back().discarded_weight;
}

// Per-period influence-matrix pairs (left, right) for t = 1..T, plus the
// per-t cumulative discarded weight of the states actually used at t and the
// experiment-wide total.
struct ImSeriesInputs {
  std::vector<TemporalMPS> left, right;  // slot 0 unused
  std::vector<double> discarded_at_t;    // index t, slot 0 = 0
  double total_discarded = 0.0;
};

inline ImSeriesInputs build_im_series_inputs(const RunConfig& c) {
  const CircuitParams p = circuit_of(c);
  ImSeriesInputs out;
  out.discarded_at_t.assign(*c.T + 1, 0.0);
  if (*c.boundary == BoundaryKind::lcga) {
    auto [ims_r, tr_r] = lcga_build(p, *c.T, *c.chi, *c.tol, EnvSide::right);
    auto [ims_l, tr_l] = lcga_build(p, *c.T, *c.chi, *c.tol, EnvSide::left);
    out.right = std::move(ims_r);
    out.left = std::move(ims_l);
    for (std::size_t t = 1; t <= *c.T; ++t)
      out.discarded_at_t[t] =
          tr_r.steps[t - 1].discarded_weight + tr_l.steps[t - 1].discarded_weight;
    out.total_discarded = out.discarded_at_t[*c.T];
  } else {
    out.right.resize(*c.T + 1);
    out.left.resize(*c.T + 1);
    for (std::size_t t = 1; t <= *c.T; ++t) {
      CircuitParams pt = p;
      pt.T = t;
      const std::size_t n_steps = 2 * t + 4;
      double run_disc = 0.0;
      for (EnvSide side : {EnvSide::right, EnvSide::left}) {
        const TemporalMPS seed = (*c.boundary == BoundaryKind::obc)
                                     ? build_obc_im(t)
                                     : build_pd_im(pt, side);
        auto [state, tr] = iterate_im(seed, pt, n_steps, *c.chi, *c.tol, side);
        run_disc += tr.steps.empty() ? 0.0 : tr.steps.back().discarded_weight;
        (side == EnvSide::right ? out.right : out.left)[t] = std::move(state);
      }
      out.discarded_at_t[t] = run_disc;
      out.total_discarded += run_disc;
    }
  }
  return out;
}

inline void emit_series_rows(const std::vector<std::pair<std::size_t, double>>& series,
                             const std::vector<double>& discarded_at_t, RunResult& r) {
  r.csv_header = "t,value_real,value_imag,discarded_weight";
  for (const auto& [t, v] : series)
    r.csv_rows.push_back(fmt_size(t) + "," + fmt_double(v) + ",0," +
                         fmt_double(t < discarded_at_t.size() ? discarded_at_t[t] : 0.0));
}

}  // namespace detail

// Dispatch a finalized config.  Throws the library error taxonomy on
// failure; check failures are reported via RunResult::checks_passed.
inline RunResult run_experiment(const RunConfig& c) {
  using namespace detail;
  RunResult r;
  r.parameters = config_json(c);

  switch (c.experiment) {
    case Experiment::teb_scan:
    case Experiment::lcga_build: {
      const CircuitParams p = circuit_of(c);
      IMTrace trace;
      if (*c.boundary == BoundaryKind::lcga) {
        auto [ims, tr] = lcga_build(p, *c.T, *c.chi, *c.tol);
        (void)ims;
        trace = std::move(tr);
      } else {
        const TemporalMPS seed =
            (*c.boundary == BoundaryKind::obc) ? build_obc_im(p.T) : build_pd_im(p);
        auto [fin, tr] = iterate_im(seed, p, *c.steps, *c.chi, *c.tol);
        (void)fin;
        trace = std::move(tr);
      }
      emit_trace_rows(trace, r);
      r.parameters["realized_steps"] = trace.steps.size();
      break;
    }

    case Experiment::dynamics: {
      const ImSeriesInputs in = build_im_series_inputs(c);
      const auto series = polarization_series(in.left, in.right, circuit_of(c), *c.axis);
      emit_series_rows(series, in.discarded_at_t, r);
      r.total_discarded_weight = in.total_discarded;
      break;
    }

    case Experiment::autocorr: {
      const ImSeriesInputs in = build_im_series_inputs(c);
      const auto series =
          autocorrelator_series(in.left, in.right, circuit_of(c), axis_matrix(*c.op));
      emit_series_rows(series, in.discarded_at_t, r);
      r.total_discarded_weight = in.total_discarded;
      break;
    }

    case Experiment::tebd: {
      const CircuitParams p = circuit_of(c);
      std::vector<TebdPoint> pts;
      if (*c.state == StateKind::inftemp)
        pts = tebd_autocorr(p, *c.L, *c.chi, *c.T, axis_matrix(*c.op), *c.tol);
      else
        pts = tebd_quench(p, *c.L, *c.chi, *c.T, *c.axis, *c.tol);
      r.csv_header = "t,value_real,value_imag,discarded_weight";
      for (const TebdPoint& pt : pts)
        r.csv_rows.push_back(fmt_size(pt.t) + "," + fmt_double(pt.value) + ",0," +
                             fmt_double(pt.discarded));
      r.total_discarded_weight = pts.empty() ? 0.0 : pts.back().discarded;
      break;
    }

    case Experiment::qp_predict: {
      const Dispersion d = kic_dispersion(*c.g, *c.J, *c.n_k);
      const PairWeight wt = PairWeight::constant(*c.w);
      std::vector<double> grid(*c.xi_points);
      const double span = *c.xi_max - *c.xi_min;
      for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = *c.xi_min + span * static_cast<double>(i) /
                                  static_cast<double>(grid.size() - 1);
      const auto curve = s_curve(d, wt, grid);
      r.csv_header = "xi,entropy_nats";
      for (const auto& [xi, s] : curve)
        r.csv_rows.push_back(fmt_double(xi) + "," + fmt_double(s));
      nlohmann::json derived;
      derived["omega_min"] = d.omega_min;
      derived["omega_max"] = d.omega_max;
      derived["flat_band"] = d.flat_band;
      if (!d.flat_band) derived["v_te"] = v_te(d, wt);
      r.parameters["derived"] = derived;
      break;
    }

    case Experiment::oracle_check: {
      const CircuitParams p = circuit_of(c);
      const TemporalMPS oracle = mps_from_dense(exact_im(p, *c.L));
      auto [iter_state, iter_tr] = iterate_im(build_obc_im(p.T), p, *c.L / 2, *c.chi, 0.0);
      auto [ims, lcga_tr] = lcga_build(p, p.T, *c.chi, 0.0);
      (void)iter_tr;
      (void)lcga_tr;
      const double fid_iter = im_fidelity(iter_state, oracle);
      const double fid_lcga = im_fidelity(ims[p.T], oracle);
      r.csv_header = "L,T,fidelity_iteration,fidelity_lcga";
      r.csv_rows.push_back(fmt_size(*c.L) + "," + fmt_size(p.T) + "," +
                           fmt_double(fid_iter) + "," + fmt_double(fid_lcga));
      r.info_lines.push_back("fidelity_iteration = " + fmt_double(fid_iter));
      r.info_lines.push_back("fidelity_lcga = " + fmt_double(fid_lcga));
      const double floor = 1.0 - 1e-10;
      r.checks_passed = fid_iter >= floor && fid_lcga >= floor;
      r.info_lines.push_back(std::string("oracle-check: ") +
                             (r.checks_passed ? "ok" : "FAILED (fidelity below 1 - 1e-10)"));
      break;
    }
  }

  r.parameters["csv_rows"] = r.csv_rows.size();
  return r;
}

// Full CSV file body (header plus rows, trailing newline).  Bitwise
// deterministic for identical configs.
inline std::string csv_text(const RunResult& r) {
  std::string out = r.csv_header + "\n";
  for (const std::string& row : r.csv_rows) {
    out += row;
    out += '\n';
  }
  return out;
}

// Metadata sidecar.  Keys: parameters, version, runtime_seconds,
// total_discarded_weight.  Only runtime_seconds varies between identical runs.
inline std::string sidecar_text(const RunResult& r, double runtime_seconds) {
  nlohmann::json j;
  j["parameters"] = r.parameters;
  j["version"] = library_version;
  j["runtime_seconds"] = runtime_seconds;
  j["total_discarded_weight"] = r.total_discarded_weight;
  return j.dump(2) + "\n";
}

// teb.csv -> teb.json; extensionless paths get .json appended.
inline std::string sidecar_path_for(const std::string& out_path) {
  const std::size_t slash = out_path.find_last_of('/');
  const std::size_t dot = out_path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return out_path + ".json";
  return out_path.substr(0, dot) + ".json";
}

}  // namespace lcim
