#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dtnlab/reconstruct.hpp"

namespace dtnlab {

/// Least-squares fit of ln(error) against ln|ln D| over the small-discrepancy
/// points (D < e^-2). theta is the fitted modulus exponent; the competing
/// straight fit in ln D decides the branch when the log model is poor.
struct FitResult {
  double theta = 0.0;
  double theta_stderr = 0.0;
  double r2 = 0.0;
  double linear_r2 = 0.0;
  std::string branch;  // "log" | "t" | "no-degradation"
  int points_used = 0;
};

FitResult fit_modulus(const std::vector<std::pair<double, double>>& curve);

/// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct RunOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

struct RunResult {
  int exit_code = 0;  // 0 pass, 1 error, 2 invariant failure
  bool pass = false;
  std::string summary_json;
  std::string out_dir;
};

/// Executes one experiment described by a JSON config (see configs/ for the
/// schema) and persists summary.json plus per-kind CSV tables. Deterministic:
/// identical config and seed give byte-identical outputs.
RunResult run_experiment_json(const std::string& config_text, const RunOverrides& overrides = {});
RunResult run_experiment_file(const std::string& config_path, const RunOverrides& overrides = {});

/// Smooth random potential bounded by `bound` in sup norm (low-order cosine
/// modes, grid-transferable).
Field random_smooth_potential(const Grid& g, double bound, std::uint64_t seed);

/// Smooth random boundary data built from low-order cosine products.
BoundaryField random_smooth_boundary(const Grid& g, double amplitude, std::uint64_t seed);

}  // namespace dtnlab
