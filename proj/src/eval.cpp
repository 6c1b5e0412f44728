#include "scos/eval.hpp"

#include "scos/io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

namespace scos::eval {

namespace {

struct Contingency {
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> counts;  // pred x truth
  std::vector<long long> pred_sizes;
  std::vector<long long> truth_sizes;
  long long total = 0;
};

Contingency build_contingency(const std::vector<int>& pred,
                              const std::vector<int>& truth) {
  require(pred.size() == truth.size(), ErrorCode::LengthMismatch,
          "label vectors differ in length");
  require(!pred.empty(), ErrorCode::InvalidArgument, "empty label vectors");

  std::map<int, Index> pmap, tmap;
  for (int v : pred) pmap.emplace(v, 0);
  for (int v : truth) tmap.emplace(v, 0);
  Index next = 0;
  for (auto& [v, i] : pmap) i = next++;
  next = 0;
  for (auto& [v, i] : tmap) i = next++;

  Contingency c;
  c.counts.setZero(static_cast<Index>(pmap.size()),
                   static_cast<Index>(tmap.size()));
  for (std::size_t k = 0; k < pred.size(); ++k)
    ++c.counts(pmap.at(pred[k]), tmap.at(truth[k]));
  c.pred_sizes.resize(pmap.size());
  c.truth_sizes.resize(tmap.size());
  for (Index i = 0; i < c.counts.rows(); ++i)
    c.pred_sizes[static_cast<std::size_t>(i)] = c.counts.row(i).sum();
  for (Index j = 0; j < c.counts.cols(); ++j)
    c.truth_sizes[static_cast<std::size_t>(j)] = c.counts.col(j).sum();
  c.total = static_cast<long long>(pred.size());
  return c;
}

// Square minimum-cost assignment by shortest augmenting paths with
// potentials; O(n^3). Returns the column matched to each row.
std::vector<Index> assignment_min(const Matrix& cost) {
  const Index n = cost.rows();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<Index> match(static_cast<std::size_t>(n) + 1, 0);
  std::vector<Index> way(static_cast<std::size_t>(n) + 1, 0);
  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1,
                             std::numeric_limits<double>::infinity());
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      Index i0 = match[static_cast<std::size_t>(j0)], j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                     v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] +=
              delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      Index j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> row_to_col(static_cast<std::size_t>(n), -1);
  for (Index j = 1; j <= n; ++j)
    if (match[static_cast<std::size_t>(j)] != 0)
      row_to_col[static_cast<std::size_t>(
          match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return row_to_col;
}

// Pred cluster -> truth class under the count-maximizing one-to-one
// matching; unmatched (padded) columns come back as -1.
std::vector<Index> best_matching(const Contingency& c) {
  const Index rows = c.counts.rows(), cols = c.counts.cols();
  const Index side = std::max(rows, cols);
  Matrix cost = Matrix::Zero(side, side);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      cost(i, j) = -static_cast<double>(c.counts(i, j));
  auto row_to_col = assignment_min(cost);
  row_to_col.resize(static_cast<std::size_t>(rows));
  for (auto& j : row_to_col)
    if (j >= cols) j = -1;  // matched a padding column
  return row_to_col;
}

long long pairs2(long long n) { return n * (n - 1) / 2; }

double std_dev(double sq_sum, double sum, int n) {
  double mean = sum / n;
  return std::sqrt(std::max(0.0, sq_sum / n - mean * mean));
}

std::string csv_double(double value, bool mask) {
  return io::format_double(mask ? 0.0 : value);
}

}  // namespace

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  auto c = build_contingency(pred, truth);
  auto row_to_col = best_matching(c);
  long long matched = 0;
  for (Index i = 0; i < c.counts.rows(); ++i) {
    Index j = row_to_col[static_cast<std::size_t>(i)];
    if (j >= 0) matched += c.counts(i, j);
  }
  return static_cast<double>(matched) / static_cast<double>(c.total);
}

double ari(const std::vector<int>& pred, const std::vector<int>& truth) {
  auto c = build_contingency(pred, truth);
  long long s_cells = 0;
  for (Index i = 0; i < c.counts.rows(); ++i)
    for (Index j = 0; j < c.counts.cols(); ++j)
      s_cells += pairs2(c.counts(i, j));
  long long s_pred = 0, s_truth = 0;
  for (long long n : c.pred_sizes) s_pred += pairs2(n);
  for (long long n : c.truth_sizes) s_truth += pairs2(n);
  const long long all = pairs2(c.total);

  // Exact integer numerator/denominator (both scaled by 2*all); wide
  // products so pixel-scale inputs cannot overflow.
  using Wide = __int128;
  Wide num = Wide(2) * Wide(all) * s_cells - Wide(2) * Wide(s_pred) * s_truth;
  Wide den =
      Wide(all) * (Wide(s_pred) + s_truth) - Wide(2) * Wide(s_pred) * s_truth;
  if (den == 0) return 1.0;  // both partitions degenerate and identical
  return static_cast<double>(num) / static_cast<double>(den);
}

double nmi(const std::vector<int>& pred, const std::vector<int>& truth) {
  auto c = build_contingency(pred, truth);
  if (c.counts.rows() == 1 && c.counts.cols() == 1) return 1.0;
  const double n = static_cast<double>(c.total);
  auto entropy = [&](const std::vector<long long>& sizes) {
    double h = 0.0;
    for (long long cnt : sizes) {
      if (cnt == 0) continue;
      double p = static_cast<double>(cnt) / n;
      h -= p * std::log(p);
    }
    return h;
  };
  double mi = 0.0;
  for (Index i = 0; i < c.counts.rows(); ++i)
    for (Index j = 0; j < c.counts.cols(); ++j) {
      long long cnt = c.counts(i, j);
      if (cnt == 0) continue;
      double pij = static_cast<double>(cnt) / n;
      mi += pij *
            std::log(static_cast<double>(cnt) * n /
                     (static_cast<double>(
                          c.pred_sizes[static_cast<std::size_t>(i)]) *
                      static_cast<double>(
                          c.truth_sizes[static_cast<std::size_t>(j)])));
    }
  double norm =
      0.5 * (entropy(c.pred_sizes) + entropy(c.truth_sizes));
  if (norm <= 0.0) return 0.0;  // one side trivial, the other not
  return std::clamp(mi / norm, 0.0, 1.0);
}

std::vector<double> per_class_recall(const std::vector<int>& pred,
                                     const std::vector<int>& truth) {
  auto c = build_contingency(pred, truth);
  auto row_to_col = best_matching(c);
  std::vector<double> recalls(static_cast<std::size_t>(c.counts.cols()), 0.0);
  for (Index i = 0; i < c.counts.rows(); ++i) {
    Index j = row_to_col[static_cast<std::size_t>(i)];
    if (j >= 0)
      recalls[static_cast<std::size_t>(j)] =
          static_cast<double>(c.counts(i, j)) /
          static_cast<double>(c.truth_sizes[static_cast<std::size_t>(j)]);
  }
  return recalls;
}

MetricsReport compute_metrics(const std::vector<int>& pred,
                              const std::vector<int>& truth) {
  MetricsReport report;
  report.acc = accuracy(pred, truth);
  report.ari = ari(pred, truth);
  report.nmi = nmi(pred, truth);
  report.per_class_recall = per_class_recall(pred, truth);
  double sum = 0.0;
  for (double r : report.per_class_recall) sum += r;
  report.apr = report.per_class_recall.empty()
                   ? 0.0
                   : sum / static_cast<double>(report.per_class_recall.size());
  return report;
}

MonteCarloTable monte_carlo(const MonteCarloConfig& config) {
  require(config.runs >= 1, ErrorCode::InvalidArgument, "runs must be >= 1");
  require(!config.inr_grid.empty() && !config.sinr_db_grid.empty(),
          ErrorCode::InvalidArgument, "empty sweep grid");

  const std::size_t per_point = static_cast<std::size_t>(config.runs);
  const std::size_t total =
      config.inr_grid.size() * config.sinr_db_grid.size() * per_point;
  MonteCarloTable table;
  table.rows.resize(total);

  auto run_one = [&config](std::size_t flat) {
    const std::size_t per_sinr =
        config.sinr_db_grid.size() * static_cast<std::size_t>(config.runs);
    const std::size_t gi = flat / per_sinr;
    const std::size_t si =
        (flat % per_sinr) / static_cast<std::size_t>(config.runs);
    const int run = static_cast<int>(flat % static_cast<std::size_t>(config.runs));

    MonteCarloRow row;
    row.inr = config.inr_grid[gi];
    row.sinr_db = config.sinr_db_grid[si];
    row.run = run;
    row.seed = config.master_seed + static_cast<std::uint64_t>(run);

    synth::ScenarioConfig scenario = config.base;
    scenario.inr = row.inr;
    scenario.sinr_db = row.sinr_db;
    scenario.seed = row.seed;
    auto sc = synth::generate(scenario);
    auto views = synth::view_bases(sc);
    std::vector<Index> dims(static_cast<std::size_t>(scenario.n_clusters),
                            scenario.subspace_dim);
    solver::SolverConfig fit_config = config.solver;
    fit_config.seed = row.seed;

    auto t0 = std::chrono::steady_clock::now();
    auto result =
        solver::fit(views, scenario.n_clusters, dims, fit_config);
    auto labels = solver::assign_labels(result.model.c);
    row.wall_s = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0)
                     .count();

    auto metrics = compute_metrics(labels, sc.labels);
    row.acc = metrics.acc;
    row.ari = metrics.ari;
    row.nmi = metrics.nmi;
    return row;
  };

  int threads = config.threads > 0
                    ? config.threads
                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, static_cast<int>(total));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t flat;
         !failed.load() && (flat = next.fetch_add(1)) < total;) {
      try {
        table.rows[flat] = run_one(flat);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  for (double inr : config.inr_grid)
    for (double sinr : config.sinr_db_grid) {
      GridAggregate agg;
      agg.inr = inr;
      agg.sinr_db = sinr;
      agg.runs = config.runs;
      double acc = 0, acc2 = 0, ari_s = 0, ari2 = 0, nmi_s = 0, nmi2 = 0,
             wall = 0, wall2 = 0;
      for (const auto& row : table.rows) {
        if (row.inr != inr || row.sinr_db != sinr) continue;
        acc += row.acc;
        acc2 += row.acc * row.acc;
        ari_s += row.ari;
        ari2 += row.ari * row.ari;
        nmi_s += row.nmi;
        nmi2 += row.nmi * row.nmi;
        wall += row.wall_s;
        wall2 += row.wall_s * row.wall_s;
      }
      agg.acc_mean = acc / config.runs;
      agg.acc_std = std_dev(acc2, acc, config.runs);
      agg.ari_mean = ari_s / config.runs;
      agg.ari_std = std_dev(ari2, ari_s, config.runs);
      agg.nmi_mean = nmi_s / config.runs;
      agg.nmi_std = std_dev(nmi2, nmi_s, config.runs);
      agg.wall_s_mean = wall / config.runs;
      agg.wall_s_std = std_dev(wall2, wall, config.runs);
      table.aggregates.push_back(agg);
    }
  return table;
}

void write_runs_csv(const std::filesystem::path& path,
                    const MonteCarloTable& table, bool mask_walltime) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoError,
          "cannot open " + path.string() + " for writing");
  out << "inr,sinr_db,run,acc,ari,nmi,wall_s,seed\n";
  for (const auto& row : table.rows) {
    out << io::format_double(row.inr) << ',' << io::format_double(row.sinr_db)
        << ',' << row.run << ',' << io::format_double(row.acc) << ','
        << io::format_double(row.ari) << ',' << io::format_double(row.nmi)
        << ',' << csv_double(row.wall_s, mask_walltime) << ',' << row.seed
        << '\n';
  }
  require(out.good(), ErrorCode::IoError, "write failed: " + path.string());
}

void write_aggregate_csv(const std::filesystem::path& path,
                         const MonteCarloTable& table, bool mask_walltime) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoError,
          "cannot open " + path.string() + " for writing");
  out << "inr,sinr_db,runs,acc_mean,acc_std,ari_mean,ari_std,nmi_mean,"
         "nmi_std,wall_s_mean,wall_s_std\n";
  for (const auto& agg : table.aggregates) {
    out << io::format_double(agg.inr) << ','
        << io::format_double(agg.sinr_db) << ',' << agg.runs << ','
        << io::format_double(agg.acc_mean) << ','
        << io::format_double(agg.acc_std) << ','
        << io::format_double(agg.ari_mean) << ','
        << io::format_double(agg.ari_std) << ','
        << io::format_double(agg.nmi_mean) << ','
        << io::format_double(agg.nmi_std) << ','
        << csv_double(agg.wall_s_mean, mask_walltime) << ','
        << csv_double(agg.wall_s_std, mask_walltime) << '\n';
  }
  require(out.good(), ErrorCode::IoError, "write failed: " + path.string());
}

}  // namespace scos::eval
