#ifndef SCOS_EVAL_HPP
#define SCOS_EVAL_HPP

#include "scos/solver.hpp"
#include "scos/synth.hpp"
#include "scos/types.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace scos::eval {

// Clustering quality of one predicted labeling against ground truth. All
// scores are invariant to relabeling of the predicted cluster ids.
struct MetricsReport {
  double acc = 0.0;  // fraction matched under optimal one-to-one assignment
  double ari = 0.0;  // pair-counting index, adjusted for chance
  double nmi = 0.0;  // mutual information over the mean of the entropies
  double apr = 0.0;  // average per-class recall
  std::vector<double> per_class_recall;  // sorted-unique truth-label order
  double wall_seconds = 0.0;             // filled by callers that time a fit
};

// Each metric accepts arbitrary integer ids of equal length; LengthMismatch
// otherwise. Identical degenerate pairs (both one cluster, or both all
// singletons) score 1 by convention; mismatched degenerate pairs score 0.
double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);
double ari(const std::vector<int>& pred, const std::vector<int>& truth);
double nmi(const std::vector<int>& pred, const std::vector<int>& truth);
std::vector<double> per_class_recall(const std::vector<int>& pred,
                                     const std::vector<int>& truth);

// All of the above from one contingency pass; wall_seconds stays 0.
MetricsReport compute_metrics(const std::vector<int>& pred,
                              const std::vector<int>& truth);

// Benchmark sweep over an (inr, sinr_db) grid. Run i regenerates the
// scenario and reseeds the solver with master_seed + i, so tables are
// reproducible bit for bit; wall time is the only nondeterministic column.
struct MonteCarloConfig {
  synth::ScenarioConfig base;  // sizes shared by every grid point
  std::vector<double> inr_grid{0.5};
  std::vector<double> sinr_db_grid{0.0};
  int runs = 100;
  std::uint64_t master_seed = 1;
  int threads = 0;  // 0 picks the hardware concurrency
  solver::SolverConfig solver;
};

struct MonteCarloRow {
  double inr = 0.0;
  double sinr_db = 0.0;
  int run = 0;
  std::uint64_t seed = 0;
  double acc = 0.0;
  double ari = 0.0;
  double nmi = 0.0;
  double wall_s = 0.0;
};

struct GridAggregate {
  double inr = 0.0;
  double sinr_db = 0.0;
  int runs = 0;
  double acc_mean = 0.0, acc_std = 0.0;
  double ari_mean = 0.0, ari_std = 0.0;
  double nmi_mean = 0.0, nmi_std = 0.0;
  double wall_s_mean = 0.0, wall_s_std = 0.0;
};

struct MonteCarloTable {
  std::vector<MonteCarloRow> rows;  // grid-major, run-minor order
  std::vector<GridAggregate> aggregates;
};

// Distributes runs over a worker pool; rows land in their index slot, so
// the table is identical regardless of scheduling.
MonteCarloTable monte_carlo(const MonteCarloConfig& config);

// CSV exports. mask_walltime writes 0 for the wall columns so repeated
// invocations with the same master seed produce byte-identical files.
void write_runs_csv(const std::filesystem::path& path,
                    const MonteCarloTable& table, bool mask_walltime);
void write_aggregate_csv(const std::filesystem::path& path,
                         const MonteCarloTable& table, bool mask_walltime);

}  // namespace scos::eval

#endif
