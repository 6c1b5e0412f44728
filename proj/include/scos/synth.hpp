#ifndef SCOS_SYNTH_HPP
#define SCOS_SYNTH_HPP

#include "scos/types.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <utility>
#include <vector>

namespace scos::synth {

struct ScenarioConfig {
  Index n_ambient = 200;   // N
  Index n_views = 40;      // K
  Index n_clusters = 3;    // R
  Index subspace_dim = 4;  // L, shared across clusters
  Index view_cols = 10;    // M, columns per view
  // Target signal-to-interference-plus-noise ratio in dB; +inf means both
  // interference and noise are zeroed (requires inr == 0).
  double sinr_db = std::numeric_limits<double>::infinity();
  double inr = 0.0;  // linear interference-to-noise ratio
  std::uint64_t seed = 1;
};

// The three additive pieces of one view; their sum is the view matrix.
struct ViewTerms {
  Matrix signal;
  Matrix interference;
  Matrix noise;
};

struct Scenario {
  ScenarioConfig config;
  std::vector<Matrix> views;        // X_k, N x M each
  std::vector<int> labels;          // 1-based cluster per view
  std::vector<Matrix> true_bases;   // G_r, N x L each
  std::vector<Matrix> interferers;  // H_k, N x (M-L) each
  std::vector<ViewTerms> terms;     // empty after load_scenario

  bool has_ground_truth_terms() const { return !terms.empty(); }
};

// Draws a scenario with exact-orthonormal ground truth blocks and exact
// ratio targets. Deterministic in config.seed.
Scenario generate(const ScenarioConfig& config);

// (sinr, inr) recomputed from stored terms; a zero denominator yields the
// +inf sentinel.
std::pair<double, double> measure_sinr(const ViewTerms& terms);

// Orthonormal basis per view, truncated to numerical rank (noiseless views
// have rank L < M).
ViewList view_bases(const Scenario& scenario);

// Directory layout: view_%04d.mat, labels.csv, scenario.toml and
// gt_basis_%03d.mat. Ground-truth term matrices are not serialized.
void save_scenario(const Scenario& scenario,
                   const std::filesystem::path& dir);
Scenario load_scenario(const std::filesystem::path& dir);

}  // namespace scos::synth

#endif
