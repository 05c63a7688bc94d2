// Command-line driver for the influence-matrix library.  Each subcommand
// maps onto one experiment in lcim/run.hpp; flags override config-file
// values, and results are written as a CSV file plus a JSON metadata
// sidecar (or the CSV body to stdout when --out is omitted).
//
// Exit codes: 0 success, 1 built-in check failed, 2 configuration error,
// 3 instance exceeds a hard size cap, 4 SVD failure.

#include <chrono>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcim/run.hpp"

namespace {

// Staging area: enum-valued flags arrive as strings and are converted after
// parsing so that error messages name the offending value.
struct RawFlags {
  lcim::RunConfig cfg;
  std::optional<std::string> boundary, state, axis, op, config_path;
};

void add_output_flags(CLI::App* sub, RawFlags& r) {
  sub->add_option("--out", r.cfg.out, "CSV output path (sidecar: same name, .json)");
  sub->add_option("--config", r.config_path, "JSON config file; explicit flags win");
  sub->add_option("--seed", r.cfg.seed, "seed recorded for randomized harnesses");
}

void add_circuit_flags(CLI::App* sub, RawFlags& r) {
  sub->add_option("--g", r.cfg.g, "transverse kick angle (radians)");
  sub->add_option("--J", r.cfg.J, "Ising coupling angle (radians)");
  sub->add_option("--h", r.cfg.h, "longitudinal field angle (radians)");
  sub->add_option("--T", r.cfg.T, "number of Floquet periods");
  sub->add_option("--chi", r.cfg.chi, "bond-dimension cap");
  sub->add_option("--tol", r.cfg.tol, "relative truncation tolerance");
}

void add_state_flag(CLI::App* sub, RawFlags& r) {
  sub->add_option("--state", r.state,
                  "initial product state: inftemp, xplus, yplus, zup, zdown");
}

int execute(lcim::Experiment e, RawFlags& raw) {
  lcim::RunConfig& c = raw.cfg;
  c.experiment = e;
  if (raw.boundary) c.boundary = lcim::boundary_from_name(*raw.boundary);
  if (raw.state) c.state = lcim::state_from_name(*raw.state);
  if (raw.axis) c.axis = lcim::axis_from_name(*raw.axis);
  if (raw.op) c.op = lcim::axis_from_name(*raw.op);
  if (raw.config_path) {
    std::ifstream in(*raw.config_path);
    if (!in) throw lcim::ConfigError("cannot open config file \"" + *raw.config_path + "\"");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& ex) {
      throw lcim::ConfigError(std::string("config file: ") + ex.what());
    }
    lcim::apply_config_file(c, j);
  }
  lcim::finalize_config(c);

  const auto t0 = std::chrono::steady_clock::now();
  const lcim::RunResult res = lcim::run_experiment(c);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (c.out) {
    std::ofstream csv(*c.out, std::ios::binary);
    csv << lcim::csv_text(res);
    if (!csv) throw lcim::ConfigError("cannot write output file \"" + *c.out + "\"");
    const std::string meta_path = lcim::sidecar_path_for(*c.out);
    std::ofstream meta(meta_path, std::ios::binary);
    meta << lcim::sidecar_text(res, secs);
    if (!meta) throw lcim::ConfigError("cannot write sidecar file \"" + meta_path + "\"");
  } else {
    std::cout << lcim::csv_text(res);
  }
  for (const std::string& line : res.info_lines) std::cout << line << "\n";
  return res.checks_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Influence matrices of the kicked Ising chain as temporal MPS:\n"
               "environment iteration, light-cone growth, local dynamics, a TEBD\n"
               "baseline, quasiparticle entropy predictions, and dense-oracle checks."};
  // The physics flag --h forbids CLI11's default -h short help name.
  app.set_help_flag("--help", "print help and exit");
  app.set_version_flag("--version", lcim::library_version);
  app.require_subcommand(1);

  RawFlags raw;
  auto add_subcommand = [&app](const char* name, const char* desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->set_help_flag("--help", "print help and exit");
    return sub;
  };

  CLI::App* teb = add_subcommand(
      "teb-scan", "Entropy/bond trace of environment iteration (or growth with "
                  "--boundary lcga)");
  add_circuit_flags(teb, raw);
  teb->add_option("--boundary", raw.boundary, "seed/route: obc, pd, or lcga");
  teb->add_option("--steps", raw.cfg.steps, "max transfer applications (default 2T+4)");
  add_state_flag(teb, raw);
  add_output_flags(teb, raw);

  CLI::App* lcga = add_subcommand(
      "lcga-build", "Entropy/bond trace of the light-cone growth route up to --T");
  add_circuit_flags(lcga, raw);
  add_state_flag(lcga, raw);
  add_output_flags(lcga, raw);

  CLI::App* dyn = add_subcommand(
      "dynamics", "Single-site polarization series from influence-matrix pairs");
  add_circuit_flags(dyn, raw);
  dyn->add_option("--boundary", raw.boundary, "IM construction route: obc, pd, or lcga");
  add_state_flag(dyn, raw);
  dyn->add_option("--axis", raw.axis, "measured polarization axis: x, y, or z");
  add_output_flags(dyn, raw);

  CLI::App* ac = add_subcommand(
      "autocorr", "Infinite-temperature autocorrelator from influence-matrix pairs");
  add_circuit_flags(ac, raw);
  ac->add_option("--boundary", raw.boundary, "IM construction route: obc, pd, or lcga");
  ac->add_option("--op", raw.op, "autocorrelated Pauli operator: x, y, or z");
  add_output_flags(ac, raw);

  CLI::App* tb = add_subcommand(
      "tebd", "Finite-chain brickwork baseline (quench for pure --state, "
              "autocorrelator for inftemp)");
  add_circuit_flags(tb, raw);
  tb->add_option("--L", raw.cfg.L, "chain length (default 2T+4)");
  add_state_flag(tb, raw);
  tb->add_option("--axis", raw.axis, "measured polarization axis: x, y, or z");
  tb->add_option("--op", raw.op, "autocorrelated Pauli operator: x, y, or z");
  add_output_flags(tb, raw);

  CLI::App* qp = add_subcommand(
      "qp-predict", "Quasiparticle prediction of the entropy curve s(xi)");
  qp->add_option("--g", raw.cfg.g, "transverse kick angle (radians)");
  qp->add_option("--J", raw.cfg.J, "Ising coupling angle (radians)");
  qp->add_option("--h", raw.cfg.h, "must be 0 if given (free band only)");
  qp->add_option("--w", raw.cfg.w, "constant pair weight in nats (default 0.93 ln 2)");
  qp->add_option("--xi-min", raw.cfg.xi_min, "first xi grid point (default 0)");
  qp->add_option("--xi-max", raw.cfg.xi_max, "last xi grid point (default 0.5)");
  qp->add_option("--xi-points", raw.cfg.xi_points, "xi grid size (default 100)");
  qp->add_option("--nk", raw.cfg.n_k, "momentum samples, even (default 4096)");
  add_output_flags(qp, raw);

  CLI::App* oc = add_subcommand(
      "oracle-check", "Fidelity of iteration and growth against the dense "
                      "environment (default L=6, T=3)");
  add_circuit_flags(oc, raw);
  oc->add_option("--L", raw.cfg.L, "environment sites for the dense oracle (even)");
  add_output_flags(oc, raw);

  const std::vector<std::pair<CLI::App*, lcim::Experiment>> dispatch = {
      {teb, lcim::Experiment::teb_scan},   {lcga, lcim::Experiment::lcga_build},
      {dyn, lcim::Experiment::dynamics},   {ac, lcim::Experiment::autocorr},
      {tb, lcim::Experiment::tebd},        {qp, lcim::Experiment::qp_predict},
      {oc, lcim::Experiment::oracle_check}};

  // Name an unrecognized experiment explicitly (CLI11 would only report that
  // a subcommand is required).
  if (argc >= 2 && argv[1][0] != '-') {
    try {
      lcim::experiment_from_name(argv[1]);
    } catch (const lcim::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
  }

  try {
    app.parse(argc, argv);
    for (const auto& [sub, e] : dispatch)
      if (app.got_subcommand(sub)) return execute(e, raw);
    return 2;  // unreachable with require_subcommand(1)
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help/version or the parse error
    return code == 0 ? 0 : 2;
  } catch (const lcim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const lcim::SizeCapError& e) {
    std::cerr << "size-cap error: " << e.what() << "\n";
    return 3;
  } catch (const lcim::SvdError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
