#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "dtnlab/experiments.hpp"

using namespace dtnlab;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("fit_modulus on synthetic curves") {
  // error = |ln D|^(-1/30): the fitted exponent recovers 1/30
  std::vector<std::pair<double, double>> curve;
  for (double d = 1e-9; d < std::exp(-2.0); d *= 7.0)
    curve.emplace_back(d, std::pow(std::abs(std::log(d)), -1.0 / 30.0));
  const FitResult log_fit = fit_modulus(curve);
  CHECK(log_fit.theta == doctest::Approx(1.0 / 30.0).epsilon(0.05));
  CHECK(log_fit.branch == "log");
  CHECK(log_fit.r2 >= 0.99);

  // constant curve: theta ~ 0, flagged no-degradation
  curve.clear();
  for (double d = 1e-9; d < std::exp(-2.0); d *= 7.0) curve.emplace_back(d, 0.42);
  const FitResult flat = fit_modulus(curve);
  CHECK(std::abs(flat.theta) < 0.02);
  CHECK(flat.branch == "no-degradation");

  // error = D: linear regime, poor log fit, t-branch selected
  curve.clear();
  for (double d = 1e-9; d < std::exp(-2.0); d *= 7.0) curve.emplace_back(d, d);
  const FitResult lin = fit_modulus(curve);
  CHECK(lin.theta > 1.0);
  CHECK(lin.branch == "t");
  CHECK(lin.linear_r2 > lin.r2);

  CHECK_THROWS_AS(fit_modulus({{1e-3, 0.1}, {1e-4, 0.05}}), InsufficientData);
}

TEST_CASE("spearman rank correlation") {
  CHECK(spearman({1, 2, 3, 4, 5}, {2, 4, 6, 8, 10}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4, 5}, {10, 8, 6, 4, 2}) == doctest::Approx(-1.0));
  // one adjacent swap in five points
  CHECK(spearman({1, 2, 3, 4, 5}, {1, 2, 4, 3, 5}) == doctest::Approx(0.9));
  // ties get average ranks
  CHECK(spearman({1, 1, 2, 3}, {1, 1, 2, 3}) == doctest::Approx(1.0));
}

TEST_CASE("forward-convergence kind: pass and byte-identical reruns") {
  const std::string cfg = R"({
    "kind": "forward-convergence",
    "levels": [17, 33, 65],
    "seed": 7,
    "out": "test_out/fc1"
  })";
  const RunResult r1 = run_experiment_json(cfg);
  CHECK(r1.exit_code == 0);
  CHECK(r1.pass);
  CHECK(r1.summary_json.find("\"harmonic_extension_order\"") != std::string::npos);

  RunOverrides ov;
  ov.out_dir = "test_out/fc2";
  const RunResult r2 = run_experiment_json(cfg, ov);
  CHECK(slurp("test_out/fc1/convergence.csv") == slurp("test_out/fc2/convergence.csv"));
  const std::string s1 = slurp("test_out/fc1/summary.json");
  std::string s2 = slurp("test_out/fc2/summary.json");
  // identical up to the differing out dir name is not recorded in the summary
  CHECK(s1 == s2);
}

TEST_CASE("linearization kind on the small grid") {
  const std::string cfg = R"({
    "kind": "linearization-check",
    "grid": {"n": 2, "N": 17},
    "linearization": {"scale": 0.5, "epsilons": [1e-1, 1e-2, 1e-3]},
    "seed": 3,
    "out": "test_out/lin"
  })";
  const RunResult r = run_experiment_json(cfg);
  CHECK(r.exit_code == 0);
  CHECK(r.summary_json.find("frechet_residual_slope") != std::string::npos);
}

TEST_CASE("reconstruct kind smoke on the coarse grid") {
  const std::string cfg = R"({
    "kind": "reconstruct",
    "target": "potential",
    "grid": {"n": 3, "N": 17},
    "potentials": {"background": 0.1, "amplitude": 0.1, "mode": [1, 0, 0]},
    "reconstruction": {"k_max": 1, "c_omega_est": 6.0, "kappa_est": 1.0},
    "check_tolerance": 0.35,
    "seed": 5,
    "out": "test_out/rec"
  })";
  const RunResult r = run_experiment_json(cfg);
  CHECK(r.exit_code == 0);
  CHECK(std::filesystem::exists("test_out/rec/modes.csv"));
  CHECK(std::filesystem::exists("test_out/rec/field.csv"));
  const std::string modes = slurp("test_out/rec/modes.csv");
  CHECK(modes.find("z1,z2,z3,gated") == 0);
}

TEST_CASE("stability kind smoke on the coarse grid") {
  const std::string cfg = R"({
    "kind": "stability-curve",
    "grid": {"n": 3, "N": 17},
    "pair": {"a": {"family": "linear", "p0": 0.3}, "b": {"family": "linear", "p0": 0.35}},
    "lambda": {"max": 1.0, "count": 3},
    "noise": {"deltas": [1e-3, 1e-2, 1e-1], "eta_seed": 11},
    "dictionary": {"levels": [-1.0, 0.5, 1.0], "k_b": 1},
    "reconstruction": {"k_max": 1, "c_omega_est": 6.0, "kappa_est": 1.0},
    "seed": 9,
    "out": "test_out/stab"
  })";
  const RunResult r = run_experiment_json(cfg);
  CHECK(r.exit_code != 1);  // full pass/fail judged by the acceptance suite
  CHECK(std::filesystem::exists("test_out/stab/curve.csv"));
  const std::string curve = slurp("test_out/stab/curve.csv");
  CHECK(curve.find("delta,discrepancy,rho,saturated,sup_error,psi") == 0);
}

TEST_CASE("invalid config reports a structured error") {
  const RunResult r = run_experiment_json(R"({"kind": "unknown-kind"})");
  CHECK(r.exit_code == 1);
  CHECK(r.summary_json.find("\"error\"") != std::string::npos);
}
