// Command-line front end: turnstile FCS sweeps, exclusion-process
// benchmarks, curve comparison, and config validation.
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qturn/runner.hpp"
#include "qturn/ssep.hpp"

namespace {

using nlohmann::json;

struct FcsCli {
  std::string config_path;
  std::string initial, mode, backend, noise_kind, placement, cadence, out;
  int n = 0, central = 0, cycles = 0, grid_m = 0, fit_order = 0, max_bond = 0;
  double theta = 0.0, phi = 0.0, mu = 0.0, fit_window = 0.0, trunc_tol = 0.0;
  double gamma = 0.0, budget = 0.0;
  std::vector<double> values, p_occ;
  std::uint64_t seed = 0;
  bool on_ancilla = false, leading = false, checkpoints = false;
};

void add_fcs_options(CLI::App* cmd, FcsCli& f, bool xxz) {
  cmd->add_option("--config", f.config_path, "JSON config file");
  if (xxz) {
    cmd->add_option("--theta", f.theta, "hopping angle");
    cmd->add_option("--phi", f.phi, "interaction phase");
  }
  cmd->add_option("--n", f.n, "data chain length");
  cmd->add_option("--central", f.central, "central site index");
  cmd->add_option("--cycles", f.cycles, "turnstile cycles");
  cmd->add_option("--initial", f.initial,
                  "neel | domain_wall | polarized_domain_wall | custom");
  cmd->add_option("--mu", f.mu, "domain-wall bias");
  cmd->add_option("--p", f.p_occ, "custom per-site occupations")
      ->delimiter(',');
  cmd->add_option("--lambda-mode", f.mode,
                  "cumulant | distribution | explicit");
  cmd->add_option("--lambda", f.values, "counting-field values")
      ->delimiter(',');
  cmd->add_option("--grid-m", f.grid_m, "distribution grid size (even)");
  cmd->add_option("--fit-order", f.fit_order, "cumulant fit order");
  cmd->add_option("--fit-window", f.fit_window, "cumulant fit window");
  cmd->add_option("--backend", f.backend, "exact | tebd | dmt");
  cmd->add_option("--max-bond", f.max_bond, "bond dimension cap");
  cmd->add_option("--trunc-tol", f.trunc_tol, "relative singular value cutoff");
  cmd->add_option("--dmt-cadence", f.cadence, "sublayer | gate");
  cmd->add_option("--budget", f.budget, "discarded weight budget");
  cmd->add_option("--noise", f.noise_kind,
                  "none | depolarizing | amplitude_damping");
  cmd->add_option("--gamma", f.gamma, "noise strength");
  cmd->add_option("--noise-placement", f.placement, "cycle_end | sublayer_end");
  cmd->add_flag("--noise-on-ancilla", f.on_ancilla, "apply noise to the ancilla");
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_flag("--leading-turnstile", f.leading,
                "emit an extra conjugate turnstile before cycle 1");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_flag("--checkpoints", f.checkpoints, "save final tensor states");
}

json load_config_json(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return json::parse(os.str());
}

int run_fcs(CLI::App* cmd, const FcsCli& f, bool xxz) {
  json j = load_config_json(f.config_path);
  if (!j.is_object()) throw std::runtime_error("config root must be an object");
  j["model"]["kind"] = xxz ? "xxz" : "random_circuit";
  if (xxz && cmd->count("--theta")) j["model"]["theta"] = f.theta;
  if (xxz && cmd->count("--phi")) j["model"]["phi"] = f.phi;
  if (cmd->count("--n")) j["chain"]["n_sites"] = f.n;
  if (cmd->count("--central")) j["chain"]["central"] = f.central;
  if (cmd->count("--cycles")) j["cycles"] = f.cycles;
  if (cmd->count("--initial")) j["initial"]["kind"] = f.initial;
  if (cmd->count("--mu")) j["initial"]["mu"] = f.mu;
  if (cmd->count("--p")) j["initial"]["p_occupied"] = f.p_occ;
  if (cmd->count("--lambda-mode")) j["lambda"]["mode"] = f.mode;
  if (cmd->count("--lambda")) j["lambda"]["values"] = f.values;
  if (cmd->count("--grid-m")) j["lambda"]["m"] = f.grid_m;
  if (cmd->count("--fit-order")) j["lambda"]["fit_order"] = f.fit_order;
  if (cmd->count("--fit-window")) j["lambda"]["fit_window"] = f.fit_window;
  if (cmd->count("--backend")) j["backend"]["kind"] = f.backend;
  if (cmd->count("--max-bond")) j["backend"]["max_bond"] = f.max_bond;
  if (cmd->count("--trunc-tol")) j["backend"]["trunc_tol"] = f.trunc_tol;
  if (cmd->count("--dmt-cadence")) j["backend"]["dmt_cadence"] = f.cadence;
  if (cmd->count("--budget"))
    j["backend"]["discarded_weight_budget"] = f.budget;
  if (cmd->count("--noise")) j["noise"]["kind"] = f.noise_kind;
  if (cmd->count("--gamma")) j["noise"]["gamma"] = f.gamma;
  if (cmd->count("--noise-placement")) j["noise"]["placement"] = f.placement;
  if (cmd->count("--noise-on-ancilla")) j["noise"]["on_ancilla"] = true;
  if (cmd->count("--seed")) j["seed"] = f.seed;
  if (cmd->count("--leading-turnstile")) j["with_leading_turnstile"] = true;
  if (cmd->count("--out")) j["output_dir"] = f.out;
  if (cmd->count("--checkpoints")) j["write_checkpoints"] = true;

  const qturn::ExperimentConfig cfg = qturn::config_from_json(j.dump());
  const qturn::RunBundle b = qturn::run_experiment(cfg);
  const std::string dir = qturn::output_directory(cfg);
  qturn::write_bundle(b, dir);

  std::printf("wrote %s/{gf.csv,pq.csv,cumulants.csv,meta.json}\n",
              dir.c_str());
  std::printf("  %zu counting fields, %zu recorded cycles, %.2f s\n",
              b.run_lambdas.size(), b.cycles.size(), b.wall_seconds);
  for (const auto& r : b.reports)
    if (r.aborted)
      std::printf("  warning: run aborted at cycle %d (discarded weight "
                  "budget)\n", r.aborted_cycle);
  if (!b.cumulant_note.empty())
    std::printf("  note: %s\n", b.cumulant_note.c_str());
  return 0;
}

struct SsepCli {
  int n = 20;
  std::string initial = "neel";
  double mu = 0.0;
  std::vector<double> p_occ;
  std::vector<double> times;
  double t_max = 25.0, dt = 1.0, hop_rate = 1.0;
  int trajectories = 100000;
  std::uint64_t seed = 1;
  std::string out = "ssep.csv";
};

int run_ssep(const SsepCli& s) {
  qturn::InitialStateSpec init;
  if (s.initial == "neel") {
    init = qturn::InitialStateSpec::neel();
  } else if (s.initial == "domain_wall") {
    init = qturn::InitialStateSpec::domain_wall(s.mu);
  } else if (s.initial == "polarized_domain_wall") {
    init = qturn::InitialStateSpec::polarized_domain_wall();
  } else if (s.initial == "custom") {
    init = qturn::InitialStateSpec::custom(s.p_occ);
  } else {
    throw std::runtime_error("unknown --initial '" + s.initial + "'");
  }
  qturn::SsepParams p;
  p.n_sites = s.n;
  p.hop_rate = s.hop_rate;
  p.p_init = init.site_probabilities(s.n);
  std::vector<double> times = s.times;
  if (times.empty()) {
    if (!(s.dt > 0.0) || !(s.t_max >= s.dt))
      throw std::runtime_error("need --dt > 0 and --t-max >= --dt");
    for (double t = s.dt; t <= s.t_max + 1e-9; t += s.dt) times.push_back(t);
  }
  const qturn::SsepSeries series =
      qturn::ssep_sample(p, times, s.trajectories, s.seed);
  qturn::write_ssep_csv(series, p, s.seed, s.out);
  std::printf("wrote %s (%lld trajectories, %zu times)\n", s.out.c_str(),
              static_cast<long long>(series.trajectories),
              series.times.size());
  return 0;
}

struct CompareCli {
  std::string circuit, ssep, rescale = "fitted", out = "compare.csv";
  int window_lo = 0, window_hi = 1 << 30;
};

int run_compare(const CompareCli& c) {
  std::string cum_path = c.circuit;
  if (cum_path.find(".csv") == std::string::npos)
    cum_path += "/cumulants.csv";
  const auto rows = qturn::read_cumulants_csv(cum_path);
  std::vector<double> cycles, var;
  for (const auto& r : rows) {
    if (r.cycle < c.window_lo || r.cycle > c.window_hi) continue;
    cycles.push_back(static_cast<double>(r.cycle));
    var.push_back(r.c.variance);
  }
  if (cycles.empty())
    throw std::runtime_error("no cumulant rows inside the cycle window");
  const qturn::SsepSeries series = qturn::read_ssep_csv(c.ssep);

  bool fitted = c.rescale == "fitted";
  double fixed = 1.0;
  if (!fitted) {
    try {
      fixed = std::stod(c.rescale);
    } catch (const std::exception&) {
      throw std::runtime_error("--rescale expects 'fitted' or a number");
    }
  }
  const qturn::SsepComparison cmp =
      qturn::compare_to_ssep(cycles, var, series, fitted, fixed);
  qturn::write_comparison_csv(cmp, c.out);
  std::printf("rescale %.6g (%s), max rel discrepancy %.6g, rms %.6g\n",
              cmp.rescale, fitted ? "fitted" : "fixed",
              cmp.max_rel_discrepancy, cmp.rms_rel_discrepancy);
  std::printf("wrote %s\n", c.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"turnstile full-counting-statistics toolkit"};
  app.require_subcommand(1);

  FcsCli fx, fr;
  CLI::App* xxz = app.add_subcommand("xxz-fcs", "XXZ circuit counting sweep");
  add_fcs_options(xxz, fx, true);
  CLI::App* rnd =
      app.add_subcommand("random-fcs", "random-circuit counting sweep");
  add_fcs_options(rnd, fr, false);

  SsepCli sc;
  CLI::App* ssep =
      app.add_subcommand("ssep", "sample the classical exclusion process");
  ssep->add_option("--n", sc.n, "number of sites");
  ssep->add_option("--initial", sc.initial,
                   "neel | domain_wall | polarized_domain_wall | custom");
  ssep->add_option("--mu", sc.mu, "domain-wall bias");
  ssep->add_option("--p", sc.p_occ, "custom per-site occupations")
      ->delimiter(',');
  ssep->add_option("--times", sc.times, "explicit sample times")
      ->delimiter(',');
  ssep->add_option("--t-max", sc.t_max, "last sample time");
  ssep->add_option("--dt", sc.dt, "sample spacing");
  ssep->add_option("--hop-rate", sc.hop_rate, "hop rate per bond");
  ssep->add_option("--trajectories", sc.trajectories, "trajectory count");
  ssep->add_option("--seed", sc.seed, "RNG seed");
  ssep->add_option("--out", sc.out, "output CSV path");

  CompareCli cc;
  CLI::App* cmp = app.add_subcommand(
      "compare", "match a circuit variance curve to an ssep benchmark");
  cmp->add_option("--circuit", cc.circuit,
                  "bundle directory or cumulants.csv path")
      ->required();
  cmp->add_option("--ssep", cc.ssep, "ssep CSV path")->required();
  cmp->add_option("--rescale", cc.rescale, "'fitted' or a fixed factor");
  cmp->add_option("--window-lo", cc.window_lo, "first cycle compared");
  cmp->add_option("--window-hi", cc.window_hi, "last cycle compared");
  cmp->add_option("--out", cc.out, "output CSV path");

  std::string vc_path;
  CLI::App* vc = app.add_subcommand("validate-config", "check a config file");
  vc->add_option("--config", vc_path, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (xxz->parsed()) return run_fcs(xxz, fx, true);
    if (rnd->parsed()) return run_fcs(rnd, fr, false);
    if (ssep->parsed()) return run_ssep(sc);
    if (cmp->parsed()) return run_compare(cc);
    if (vc->parsed()) {
      qturn::config_from_file(vc_path);
      std::printf("ok\n");
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
