// Experiment configuration, the counting-field sweep driver, output
// serialization, and the stochastic-benchmark comparison used by the CLI.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qturn/channels.hpp"
#include "qturn/fcs.hpp"
#include "qturn/gates.hpp"
#include "qturn/ssep.hpp"
#include "qturn/state_spec.hpp"
#include "qturn/truncation.hpp"

namespace qturn {

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr double kPi = 3.14159265358979323846;

struct ModelSpec {
  enum class Kind { xxz, random_circuit };
  Kind kind = Kind::xxz;
  double theta = 0.4 * kPi;  // xxz only
  double phi = 0.8 * kPi;
};

struct LambdaSpec {
  // cumulant_grid: a few small fields, cumulants from a log-f fit.
  // distribution_grid: m uniform points on (-pi, pi], p_Q by inversion.
  // explicit_list: simulate exactly the given values.
  enum class Mode { cumulant_grid, distribution_grid, explicit_list };
  Mode mode = Mode::cumulant_grid;
  std::vector<double> values;  // explicit_list, or cumulant_grid override
  int grid_m = 64;             // distribution_grid, even
  int fit_order = 4;
  double fit_window = 0.21;
};

struct BackendSpec {
  enum class Kind { exact, tebd, dmt };
  Kind kind = Kind::exact;
  int max_bond = 256;
  double trunc_tol = 1e-12;
  DmtCadence cadence = DmtCadence::sublayer;
  double discarded_weight_budget = 1e300;
};

struct ExperimentConfig {
  ModelSpec model;
  ChainSpec chain = ChainSpec::standard(8);
  InitialStateSpec initial;  // defaults to neel
  LambdaSpec lambda;
  int cycles = 10;
  BackendSpec backend;
  NoiseSpec noise;
  std::uint64_t seed = 1;
  bool with_leading_turnstile = false;
  std::string output_dir = "out";
  bool write_checkpoints = false;

  // Sorted-key JSON echo of the physics fields (output settings excluded);
  // the basis for hashing and rerun identity.
  std::string canonical_json() const;
  std::string config_hash() const;  // "fnv1a-" + 16 hex digits
};

// Parse / validate. Messages carry dotted field paths
// ("backend.max_bond: ..."). config_from_json throws std::invalid_argument
// listing every problem found; validate_config returns the list instead.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig config_from_file(const std::string& path);
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

struct RunBundle {
  ExperimentConfig config;
  std::vector<int> cycles;  // recorded cycle indices, starting at 0
  GFSamples gf;             // full counting-field grid per recorded cycle
  // Per recorded cycle; pq only in distribution_grid mode.
  std::vector<ChargeDistribution> pq;
  std::vector<CumulantSet> cumulants;
  std::string cumulant_note;  // set when cumulant extraction was refused
  std::vector<double> run_lambdas;  // fields actually simulated
  std::vector<TruncationReport> reports;  // per simulated field, tensor backends
  std::vector<double> lambda_wall_seconds;
  double wall_seconds = 0.0;
};

// Simulates every required counting field (independent runs, thread pool
// capped by QTURN_THREADS), assembles f(lambda) per cycle, and runs the
// requested analysis. Backend failures are rethrown with the offending
// (lambda, cycle) prefixed.
RunBundle run_experiment(const ExperimentConfig& cfg);

// Writes gf.csv, pq.csv, cumulants.csv, meta.json into dir (created if
// missing). CSVs carry provenance comment lines and 17-significant-digit
// floats; rows are deterministic for a fixed config + seed. Wall-clock
// times live only in meta.json. All files are written via a temp file and
// an atomic rename.
void write_bundle(const RunBundle& b, const std::string& dir);

// config.output_dir unless QTURN_OUTPUT_DIR is set.
std::string output_directory(const ExperimentConfig& cfg);
// Sweep worker cap: QTURN_THREADS if set, else hardware concurrency.
int thread_cap();

struct SsepComparison {
  double rescale = 1.0;  // circuit cycle -> benchmark time factor
  bool fitted = false;
  std::vector<double> cycle_times;  // circuit cycles compared
  std::vector<double> circuit_var;
  std::vector<double> ssep_var;  // interpolated at rescale * cycle
  std::vector<double> ssep_se;
  double max_rel_discrepancy = 0.0;
  double rms_rel_discrepancy = 0.0;
  double objective = 0.0;  // sum of squared differences at the chosen rescale
};

// Matches a circuit variance curve against a sampled exclusion-process
// variance curve, optionally fitting a time rescale on [0.5, 2]. Rescaled
// cycles must fall inside the sampled time range. Identical curves give
// rescale 1 and zero discrepancy.
SsepComparison compare_to_ssep(const std::vector<double>& cycle_times,
                               const std::vector<double>& circuit_var,
                               const SsepSeries& ssep, bool fit_rescale,
                               double fixed_rescale = 1.0);

// Throws unless the circuit initial occupation profile equals the
// exclusion-process one site by site.
void check_comparable(const InitialStateSpec& init, const ChainSpec& chain,
                      const SsepParams& ssep);

// CSV helpers shared with the CLI. Readers skip '#' comment lines and
// require the exact column header the writers emit.
void write_ssep_csv(const SsepSeries& s, const SsepParams& p,
                    std::uint64_t seed, const std::string& path);
SsepSeries read_ssep_csv(const std::string& path);

struct CumulantRow {
  int cycle = 0;
  CumulantSet c;
};
std::vector<CumulantRow> read_cumulants_csv(const std::string& path);
void write_comparison_csv(const SsepComparison& c, const std::string& path);

// Writes content to path via "path.tmp" + rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace qturn
