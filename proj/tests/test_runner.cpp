#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "qturn/runner.hpp"

using namespace qturn;
namespace fs = std::filesystem;

namespace {
std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

bool mentions(const std::string& msg, const std::string& needle) {
  return msg.find(needle) != std::string::npos;
}
}  // namespace

TEST_CASE("config defaults and round trip") {
  const ExperimentConfig cfg = config_from_json("{}");
  CHECK(cfg.chain.n_sites == 8);
  CHECK(cfg.chain.central == 3);
  CHECK(cfg.cycles == 10);
  CHECK(cfg.backend.kind == BackendSpec::Kind::exact);
  CHECK(cfg.lambda.mode == LambdaSpec::Mode::cumulant_grid);
  CHECK(validate_config(cfg).empty());

  // the canonical echo re-parses to the same hash
  const ExperimentConfig again = config_from_json(cfg.canonical_json());
  CHECK(again.config_hash() == cfg.config_hash());

  ExperimentConfig other = cfg;
  other.seed = cfg.seed + 1;
  CHECK(other.config_hash() != cfg.config_hash());
}

TEST_CASE("config errors carry field paths") {
  try {
    config_from_json(R"({"model":{"kind":"ising"},
                         "noise":{"kind":"depolarizing","gamma":1.5},
                         "lambda":{"mode":"explicit","values":[3.2]},
                         "bogus":1})");
    FAIL("expected a validation throw");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(mentions(msg, "model.kind"));
    CHECK(mentions(msg, "noise.gamma"));
    CHECK(mentions(msg, "lambda.values"));
    CHECK(mentions(msg, "bogus"));
  }

  // dense density-matrix evolution is capped
  try {
    config_from_json(R"({"chain":{"n_sites":16},
                         "backend":{"kind":"exact"},
                         "noise":{"kind":"depolarizing","gamma":0.1}})");
    FAIL("expected a cap throw");
  } catch (const std::invalid_argument& e) {
    CHECK(mentions(e.what(), "13"));
  }

  CHECK_THROWS_AS(config_from_json("not json"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_file("/nonexistent/config.json"),
                  std::invalid_argument);
}

TEST_CASE("explicit counting fields that cannot support a fit are refused") {
  ExperimentConfig cfg = config_from_json(R"({
    "chain": {"n_sites": 4},
    "cycles": 2,
    "lambda": {"mode": "explicit", "values": [0.0]}
  })");
  const RunBundle b = run_experiment(cfg);
  CHECK(b.cumulants.empty());
  CHECK(!b.cumulant_note.empty());
  CHECK(mentions(b.cumulant_note, "refused"));
  // f(0) = 1 is still recorded for every cycle
  REQUIRE(b.gf.n_lambdas() == 1);
  for (const auto& row : b.gf.values) {
    CHECK(row[0].real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(row[0].imag() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("distribution sweep produces normalized charge statistics") {
  ExperimentConfig cfg = config_from_json(R"({
    "chain": {"n_sites": 4},
    "cycles": 2,
    "lambda": {"mode": "distribution", "m": 16}
  })");
  const RunBundle b = run_experiment(cfg);
  CHECK(b.run_lambdas.size() == 8);  // positive half only
  REQUIRE(b.gf.n_lambdas() == 16);
  CHECK(b.gf.lambdas[7] == 0.0);
  REQUIRE(b.pq.size() == 3);  // cycles 0..2
  CHECK(b.pq[0].probability(0) == doctest::Approx(1.0).epsilon(1e-10));
  for (const auto& d : b.pq)
    CHECK(d.total() == doctest::Approx(1.0).epsilon(1e-10));
  REQUIRE(b.cumulants.size() == 3);
  CHECK(b.cumulants[0].variance == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("bundles rewrite byte for byte") {
  ExperimentConfig cfg = config_from_json(R"({
    "chain": {"n_sites": 4},
    "cycles": 2,
    "seed": 9,
    "lambda": {"mode": "distribution", "m": 8}
  })");
  const fs::path dir1 = "runner_test_out/a";
  const fs::path dir2 = "runner_test_out/b";
  fs::remove_all("runner_test_out");

  write_bundle(run_experiment(cfg), dir1.string());
  write_bundle(run_experiment(cfg), dir2.string());
  for (const char* f : {"gf.csv", "pq.csv", "cumulants.csv"}) {
    const std::string a = slurp((dir1 / f).string());
    const std::string b = slurp((dir2 / f).string());
    CHECK(a == b);
    CHECK(!a.empty());
  }
  // no temp files left behind
  for (const auto& e : fs::directory_iterator(dir1))
    CHECK(e.path().extension() != ".tmp");

  // provenance comments match the config hash
  CHECK(mentions(slurp((dir1 / "gf.csv").string()), cfg.config_hash()));
  CHECK(mentions(slurp((dir1 / "meta.json").string()), cfg.config_hash()));

  const auto rows = read_cumulants_csv((dir1 / "cumulants.csv").string());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].cycle == 0);
  CHECK(rows[2].cycle == 2);
  fs::remove_all("runner_test_out");
}

TEST_CASE("environment overrides") {
  ExperimentConfig cfg;
  cfg.output_dir = "from_config";
  unsetenv("QTURN_OUTPUT_DIR");
  CHECK(output_directory(cfg) == "from_config");
  setenv("QTURN_OUTPUT_DIR", "from_env", 1);
  CHECK(output_directory(cfg) == "from_env");
  unsetenv("QTURN_OUTPUT_DIR");

  setenv("QTURN_THREADS", "3", 1);
  CHECK(thread_cap() == 3);
  setenv("QTURN_THREADS", "junk", 1);
  CHECK(thread_cap() >= 1);
  unsetenv("QTURN_THREADS");
  CHECK(thread_cap() >= 1);
}

TEST_CASE("benchmark comparison fits the time rescale") {
  SsepSeries s;
  for (int t = 0; t <= 40; ++t) {
    s.times.push_back(0.5 * t);
    s.var_q.push_back(0.1 * std::sqrt(0.5 * t));
    s.mean_q.push_back(0.0);
    s.se_mean.push_back(1e-3);
    s.se_var.push_back(1e-3);
  }

  SUBCASE("identical curves give unit rescale and zero discrepancy") {
    std::vector<double> cyc, var;
    for (int t = 4; t <= 16; ++t) {
      cyc.push_back(0.5 * t);
      var.push_back(0.1 * std::sqrt(0.5 * t));
    }
    const SsepComparison c = compare_to_ssep(cyc, var, s, true);
    CHECK(c.rescale == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.max_rel_discrepancy < 1e-12);
  }

  SUBCASE("a known stretch is recovered") {
    std::vector<double> cyc, var;
    for (int t = 2; t <= 10; ++t) {
      cyc.push_back(t);
      var.push_back(0.1 * std::sqrt(1.3 * t));  // circuit runs 1.3x faster
    }
    const SsepComparison c = compare_to_ssep(cyc, var, s, true);
    CHECK(c.rescale == doctest::Approx(1.3).epsilon(0.02));
    CHECK(c.max_rel_discrepancy < 0.02);
  }

  SUBCASE("fixed rescale and range errors") {
    const SsepComparison c =
        compare_to_ssep({1.0, 2.0}, {0.1, 0.14}, s, false, 1.0);
    CHECK(c.rescale == 1.0);
    CHECK(!c.fitted);
    // cycles beyond the sampled window are rejected
    CHECK_THROWS(compare_to_ssep({100.0}, {0.5}, s, true));
    CHECK_THROWS(compare_to_ssep({1.0}, {0.5}, s, false, -2.0));
    CHECK_THROWS(compare_to_ssep({1.0, 2.0}, {0.5}, s, true));
  }
}

TEST_CASE("initial-state compatibility check") {
  const ChainSpec chain = ChainSpec::standard(6);
  SsepParams p;
  p.n_sites = 6;
  p.p_init = InitialStateSpec::neel().site_probabilities(6);
  CHECK_NOTHROW(check_comparable(InitialStateSpec::neel(), chain, p));

  SsepParams wrong = p;
  wrong.p_init[2] = 0.4;
  try {
    check_comparable(InitialStateSpec::neel(), chain, wrong);
    FAIL("expected mismatch throw");
  } catch (const std::invalid_argument& e) {
    CHECK(mentions(e.what(), "site 2"));
  }

  SsepParams short_p;
  short_p.n_sites = 4;
  short_p.p_init.assign(4, 0.5);
  CHECK_THROWS(check_comparable(InitialStateSpec::neel(), chain, short_p));
}

TEST_CASE("ssep csv round trip") {
  SsepParams p;
  p.n_sites = 4;
  p.p_init = {1.0, 1.0, 0.0, 0.0};
  SsepSeries s;
  s.times = {0.25, 0.5};
  s.mean_q = {0.11, 0.19};
  s.var_q = {0.09, 0.15};
  s.se_mean = {0.001, 0.002};
  s.se_var = {0.003, 0.004};
  s.trajectories = 1234;

  fs::create_directories("runner_test_out");
  const std::string path = "runner_test_out/ssep_roundtrip.csv";
  write_ssep_csv(s, p, 77, path);
  const SsepSeries back = read_ssep_csv(path);
  CHECK(back.times == s.times);
  CHECK(back.mean_q == s.mean_q);
  CHECK(back.var_q == s.var_q);
  CHECK(back.se_mean == s.se_mean);
  CHECK(back.se_var == s.se_var);
  fs::remove_all("runner_test_out");
}
