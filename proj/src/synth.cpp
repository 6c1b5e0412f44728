#include "scos/synth.hpp"

#include "scos/io.hpp"
#include "scos/rng.hpp"
#include "scos/subspace.hpp"

#include <Eigen/QR>

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace scos::synth {

namespace {

Matrix thin_q(const Matrix& x) {
  Eigen::HouseholderQR<Matrix> qr(x);
  return qr.householderQ() * Matrix::Identity(x.rows(), x.cols());
}

void validate(const ScenarioConfig& c) {
  require(c.n_ambient >= 1 && c.n_views >= 1 && c.n_clusters >= 1 &&
              c.subspace_dim >= 1 && c.view_cols >= 1,
          ErrorCode::InvalidArgument, "scenario dimensions must be positive");
  require(c.n_clusters <= c.n_views, ErrorCode::InvalidArgument,
          "need at least one view per cluster (K >= R)");
  require(c.subspace_dim <= c.view_cols, ErrorCode::InvalidArgument,
          "common dimension exceeds view columns (L > M)");
  require(c.view_cols < c.n_ambient, ErrorCode::InvalidArgument,
          "views must be tall (M < N)");
  require(std::isfinite(c.inr) && c.inr >= 0.0, ErrorCode::InvalidArgument,
          "inr must be a finite nonnegative ratio");
  require(std::isfinite(c.sinr_db) ||
              c.sinr_db == std::numeric_limits<double>::infinity(),
          ErrorCode::InvalidArgument, "sinr_db must be finite or +inf");
  require(c.n_clusters * c.subspace_dim + (c.view_cols - c.subspace_dim) <=
              c.n_ambient,
          ErrorCode::InfeasibleConfig,
          "R*L + (M-L) exceeds the ambient dimension");
  if (std::isinf(c.sinr_db))
    require(c.inr == 0.0, ErrorCode::InfeasibleConfig,
            "infinite SINR requires zero interference (inr = 0)");
  if (c.inr > 0.0)
    require(c.view_cols > c.subspace_dim, ErrorCode::InfeasibleConfig,
            "interference needs M > L");
}

}  // namespace

Scenario generate(const ScenarioConfig& config) {
  validate(config);
  const Index n = config.n_ambient;
  const Index k_views = config.n_views;
  const Index r_clusters = config.n_clusters;
  const Index l = config.subspace_dim;
  const Index m = config.view_cols;
  const Index h_cols = m - l;

  Scenario sc;
  sc.config = config;

  Philox label_rng(config.seed, 0);
  sc.labels.resize(static_cast<std::size_t>(k_views));
  for (auto& lab : sc.labels)
    lab = 1 + static_cast<int>(label_rng.uniform_index(
                  static_cast<std::uint64_t>(r_clusters)));

  // All blocks carved from one jointly orthonormalized draw when they fit;
  // otherwise each interferer is drawn in the complement of the G blocks.
  Philox basis_rng(config.seed, 1);
  sc.true_bases.reserve(static_cast<std::size_t>(r_clusters));
  sc.interferers.reserve(static_cast<std::size_t>(k_views));
  const Index total = r_clusters * l + k_views * h_cols;
  if (total <= n) {
    Matrix joint = thin_q(basis_rng.gaussian_matrix(n, total));
    for (Index r = 0; r < r_clusters; ++r)
      sc.true_bases.push_back(joint.middleCols(r * l, l));
    for (Index k = 0; k < k_views; ++k)
      sc.interferers.push_back(
          joint.middleCols(r_clusters * l + k * h_cols, h_cols));
  } else {
    Matrix g_all = thin_q(basis_rng.gaussian_matrix(n, r_clusters * l));
    for (Index r = 0; r < r_clusters; ++r)
      sc.true_bases.push_back(g_all.middleCols(r * l, l));
    for (Index k = 0; k < k_views; ++k) {
      Matrix raw = basis_rng.gaussian_matrix(n, h_cols);
      raw -= g_all * (g_all.transpose() * raw);
      sc.interferers.push_back(thin_q(raw));
    }
  }

  const double sinr_target =
      std::isinf(config.sinr_db) ? 0.0 : std::pow(10.0, config.sinr_db / 10.0);
  sc.views.reserve(static_cast<std::size_t>(k_views));
  sc.terms.reserve(static_cast<std::size_t>(k_views));
  for (Index k = 0; k < k_views; ++k) {
    Philox term_rng(config.seed, 2 + static_cast<std::uint64_t>(k));
    const Matrix& g = sc.true_bases[static_cast<std::size_t>(
        sc.labels[static_cast<std::size_t>(k)] - 1)];
    ViewTerms t;
    t.signal = g * term_rng.gaussian_matrix(l, m);
    t.interference = h_cols > 0 ? Matrix(sc.interferers[static_cast<std::size_t>(
                                             k)] *
                                         term_rng.gaussian_matrix(h_cols, m))
                                : Matrix::Zero(n, m);
    t.noise = term_rng.gaussian_matrix(n, m);
    if (std::isinf(config.sinr_db)) {
      t.interference.setZero();
      t.noise.setZero();
    } else {
      if (config.inr == 0.0) {
        t.interference.setZero();
      } else {
        // Noise rescaled so the interference-to-noise ratio is exact.
        t.noise *= std::sqrt(t.interference.squaredNorm() /
                             (config.inr * t.noise.squaredNorm()));
      }
      double denom = (t.interference + t.noise).squaredNorm();
      t.signal *= std::sqrt(sinr_target * denom / t.signal.squaredNorm());
    }
    sc.views.push_back(t.signal + t.interference + t.noise);
    sc.terms.push_back(std::move(t));
  }
  return sc;
}

std::pair<double, double> measure_sinr(const ViewTerms& terms) {
  const double inf = std::numeric_limits<double>::infinity();
  double sig = terms.signal.squaredNorm();
  double itf = terms.interference.squaredNorm();
  double noi = terms.noise.squaredNorm();
  double den = (terms.interference + terms.noise).squaredNorm();
  double sinr = den > 0.0 ? sig / den : inf;
  double inr = noi > 0.0 ? itf / noi : inf;
  return {sinr, inr};
}

ViewList view_bases(const Scenario& scenario) {
  ViewList bases;
  bases.reserve(scenario.views.size());
  for (const Matrix& x : scenario.views)
    bases.push_back(truncated_basis(x, 1e-10));
  return bases;
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  char name[48];
  for (std::size_t k = 0; k < scenario.views.size(); ++k) {
    std::snprintf(name, sizeof(name), "view_%04zu.mat", k);
    io::write_matrix(dir / name, scenario.views[k]);
  }
  io::write_labels_csv(dir / "labels.csv", scenario.labels);
  for (std::size_t r = 0; r < scenario.true_bases.size(); ++r) {
    std::snprintf(name, sizeof(name), "gt_basis_%03zu.mat", r);
    io::write_matrix(dir / name, scenario.true_bases[r]);
  }
  const ScenarioConfig& c = scenario.config;
  io::write_kv(dir / "scenario.toml",
               {{"n_ambient", std::to_string(c.n_ambient)},
                {"n_views", std::to_string(c.n_views)},
                {"n_clusters", std::to_string(c.n_clusters)},
                {"subspace_dim", std::to_string(c.subspace_dim)},
                {"view_cols", std::to_string(c.view_cols)},
                {"sinr_db", io::format_double(c.sinr_db)},
                {"inr", io::format_double(c.inr)},
                {"seed", std::to_string(c.seed)}});
}

Scenario load_scenario(const std::filesystem::path& dir) {
  Scenario sc;
  auto kv = io::read_kv(dir / "scenario.toml");
  for (const auto& [key, value] : kv) {
    if (key == "n_ambient") sc.config.n_ambient = std::atoll(value.c_str());
    else if (key == "n_views") sc.config.n_views = std::atoll(value.c_str());
    else if (key == "n_clusters") sc.config.n_clusters = std::atoll(value.c_str());
    else if (key == "subspace_dim") sc.config.subspace_dim = std::atoll(value.c_str());
    else if (key == "view_cols") sc.config.view_cols = std::atoll(value.c_str());
    else if (key == "sinr_db") sc.config.sinr_db = io::parse_double(value);
    else if (key == "inr") sc.config.inr = io::parse_double(value);
    else if (key == "seed") sc.config.seed = std::strtoull(value.c_str(), nullptr, 10);
    else raise(ErrorCode::FormatError, "unknown scenario key: " + key);
  }
  sc.labels = io::read_labels_csv(dir / "labels.csv");
  require(sc.labels.size() == static_cast<std::size_t>(sc.config.n_views),
          ErrorCode::LengthMismatch, "labels.csv length != n_views");
  char name[48];
  for (Index k = 0; k < sc.config.n_views; ++k) {
    std::snprintf(name, sizeof(name), "view_%04lld.mat",
                  static_cast<long long>(k));
    Matrix x = io::read_matrix(dir / name);
    require(x.rows() == sc.config.n_ambient && x.cols() == sc.config.view_cols,
            ErrorCode::ShapeMismatch, std::string(name) + " has wrong shape");
    sc.views.push_back(std::move(x));
  }
  for (Index r = 0; r < sc.config.n_clusters; ++r) {
    std::snprintf(name, sizeof(name), "gt_basis_%03lld.mat",
                  static_cast<long long>(r));
    if (!std::filesystem::exists(dir / name)) break;
    sc.true_bases.push_back(io::read_matrix(dir / name));
  }
  return sc;
}

}  // namespace scos::synth
