#include "scos/hsi.hpp"

#include "scos/io.hpp"
#include "scos/rng.hpp"
#include "scos/subspace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace scos::hsi {

namespace {

constexpr double kNormClamp = 1e-14;

void check_cube(const HyperCube& cube) {
  require(cube.height >= 1 && cube.width >= 1 && cube.bands >= 1,
          ErrorCode::InvalidArgument, "cube dimensions must be positive");
  require(cube.data.rows() == cube.bands &&
              cube.data.cols() == cube.n_pixels(),
          ErrorCode::DimensionMismatch,
          "cube data must be bands x (height * width)");
  require(cube.labels.empty() ||
              static_cast<Index>(cube.labels.size()) == cube.n_pixels(),
          ErrorCode::LengthMismatch,
          "cube labels must have one entry per pixel");
}

// Window of pixel (r, c) clipped to the image, pixels in row-major order.
template <typename Fn>
void for_window(Index height, Index width, Index r, Index c, Index half,
                Fn&& fn) {
  for (Index rr = std::max<Index>(0, r - half);
       rr <= std::min<Index>(height - 1, r + half); ++rr)
    for (Index cc = std::max<Index>(0, c - half);
         cc <= std::min<Index>(width - 1, c + half); ++cc)
      fn(rr * width + cc);
}

void check_reg_inputs(const Matrix& c, const SpatialAdjacency& adjacency,
                      const HsiDual& dual, const HsiRegConfig& config) {
  Index k = c.rows();
  Index r = c.cols();
  require(k >= 1 && r >= 1, ErrorCode::InvalidArgument,
          "C must have at least one pixel and one cluster");
  require(adjacency.w_norm.rows() == k && adjacency.w_norm.cols() == k,
          ErrorCode::DimensionMismatch, "adjacency must be K x K");
  require(std::isfinite(dual.rho) && dual.rho >= 0.0 &&
              std::isfinite(dual.nu) && dual.nu >= 0.0,
          ErrorCode::InvalidArgument, "penalty weights must be finite and >= 0");
  if (config.psi_smoothed) {
    require(config.epsilon_psi > 0.0, ErrorCode::InvalidArgument,
            "epsilon_psi must be positive");
    require(dual.lambda.size() == 0 ||
                (dual.lambda.rows() == r && dual.lambda.cols() == r),
            ErrorCode::DimensionMismatch, "lambda must be R x R");
  }
  if (config.h_constraint)
    require(dual.lambda_h.size() == 0 ||
                (dual.lambda_h.rows() == k && dual.lambda_h.cols() == r),
            ErrorCode::DimensionMismatch, "lambda_h must be K x R");
}

Matrix normalized_with_norms(const Matrix& c, Vector& norms) {
  Matrix cn(c.rows(), c.cols());
  norms.resize(c.cols());
  for (Index j = 0; j < c.cols(); ++j) {
    norms(j) = c.col(j).norm();
    cn.col(j) = c.col(j) / std::max(norms(j), kNormClamp);
  }
  return cn;
}

}  // namespace

SpatialAdjacency build_adjacency(Index height, Index width, Index s_a) {
  require(height >= 1 && width >= 1, ErrorCode::InvalidArgument,
          "image dimensions must be positive");
  require(s_a >= 3 && s_a % 2 == 1, ErrorCode::InvalidArgument,
          "adjacency window side must be odd and >= 3");
  Index k = height * width;
  Index half = s_a / 2;

  std::vector<Eigen::Triplet<double>> ones, weights;
  ones.reserve(static_cast<std::size_t>(k * s_a * s_a));
  weights.reserve(static_cast<std::size_t>(k * s_a * s_a));
  for (Index j = 0; j < k; ++j) {
    std::vector<Index> members;
    for_window(height, width, j / width, j % width, half,
               [&](Index i) { members.push_back(i); });
    double share = 1.0 / static_cast<double>(members.size());
    for (Index i : members) {
      ones.emplace_back(i, j, 1.0);
      weights.emplace_back(i, j, share);
    }
  }

  SpatialAdjacency adjacency;
  adjacency.height = height;
  adjacency.width = width;
  adjacency.w_adj.resize(k, k);
  adjacency.w_adj.setFromTriplets(ones.begin(), ones.end());
  adjacency.w_norm.resize(k, k);
  adjacency.w_norm.setFromTriplets(weights.begin(), weights.end());
  return adjacency;
}

std::pair<double, Matrix> hsi_regularizers(const Matrix& c,
                                           const SpatialAdjacency& adjacency,
                                           const HsiDual& dual,
                                           const HsiRegConfig& config) {
  check_reg_inputs(c, adjacency, dual, config);
  Index k = c.rows();
  Index r = c.cols();
  Vector norms;
  Matrix cn = normalized_with_norms(c, norms);

  const Eigen::SparseMatrix<double>& w = adjacency.w_norm;
  Matrix wt_cn = w.transpose() * cn;

  double value = 0.0;
  Matrix grad_cn = Matrix::Zero(k, r);

  if (config.trace_penalty || config.psi_smoothed) {
    Matrix a_cn = w * wt_cn;  // (W_norm W_norm^T) C_norm, sparse products only
    Matrix m = cn.transpose() * a_cn;
    if (config.trace_penalty) {
      value += 0.5 * dual.rho * (m.sum() - m.trace());
      Vector total = a_cn.rowwise().sum();
      for (Index j = 0; j < r; ++j)
        grad_cn.col(j) += dual.rho * (total - a_cn.col(j));
    }
    if (config.psi_smoothed) {
      Matrix lambda = dual.lambda.size() ? dual.lambda : Matrix::Zero(r, r);
      Matrix psi = (m.array() + config.epsilon_psi).sqrt().matrix();
      Matrix psi_off = psi;
      psi_off.diagonal().setZero();
      value += lambda.cwiseProduct(psi).sum() +
               0.5 * dual.rho * psi_off.squaredNorm();
      // d(phi)/d(M) through the elementwise square root.
      Matrix mid = (lambda + dual.rho * psi_off).cwiseQuotient(2.0 * psi);
      grad_cn.noalias() += a_cn * (mid + mid.transpose());
    }
  }

  if (config.h_constraint) {
    Matrix lambda_h =
        dual.lambda_h.size() ? dual.lambda_h : Matrix::Zero(k, r);
    Matrix e = cn - wt_cn;
    value += lambda_h.cwiseProduct(e).sum() + 0.5 * dual.nu * e.squaredNorm();
    Matrix t = lambda_h + dual.nu * e;
    grad_cn += t;
    grad_cn.noalias() -= w * t;  // (I - W_norm) t
  }

  // Chain through the column normalization: project out the radial
  // direction and divide by the column norm, clamped like the solver.
  Matrix grad(k, r);
  for (Index j = 0; j < r; ++j) {
    if (norms(j) > kNormClamp) {
      Vector gj = grad_cn.col(j);
      grad.col(j) = (gj - cn.col(j) * cn.col(j).dot(gj)) / norms(j);
    } else {
      grad.col(j) = grad_cn.col(j) / kNormClamp;
    }
  }
  return {value, grad};
}

void hsi_dual_update(const Matrix& c, const SpatialAdjacency& adjacency,
                     HsiDual& dual, const HsiRegConfig& config, double alpha) {
  check_reg_inputs(c, adjacency, dual, config);
  require(alpha >= 1.0, ErrorCode::InvalidArgument, "alpha must be >= 1");
  Index k = c.rows();
  Index r = c.cols();
  Vector norms;
  Matrix cn = normalized_with_norms(c, norms);
  const Eigen::SparseMatrix<double>& w = adjacency.w_norm;
  Matrix wt_cn = w.transpose() * cn;

  if (config.psi_smoothed) {
    if (dual.lambda.size() == 0) dual.lambda = Matrix::Zero(r, r);
    Matrix a_cn = w * wt_cn;
    Matrix m = cn.transpose() * a_cn;
    Matrix psi_off = (m.array() + config.epsilon_psi).sqrt().matrix();
    psi_off.diagonal().setZero();
    dual.lambda += dual.rho * psi_off;
  }
  if (config.h_constraint) {
    if (dual.lambda_h.size() == 0) dual.lambda_h = Matrix::Zero(k, r);
    dual.lambda_h += dual.nu * (cn - wt_cn);
  }
  dual.rho *= alpha;
  dual.nu *= alpha;
}

SpatialRegularizer::SpatialRegularizer(const SpatialAdjacency& adjacency,
                                       const HsiRegConfig& config,
                                       Index n_clusters, double rho0,
                                       double nu0, double alpha,
                                       solver::DualState* mirror)
    : adjacency_(adjacency),
      config_(config),
      alpha_(alpha),
      mirror_(mirror) {
  require(n_clusters >= 1, ErrorCode::InvalidArgument,
          "need at least one cluster");
  require(std::isfinite(rho0) && rho0 > 0.0 && std::isfinite(nu0) && nu0 >= 0.0,
          ErrorCode::InvalidArgument, "penalty weights must be positive");
  require(alpha >= 1.0, ErrorCode::InvalidArgument, "alpha must be >= 1");
  Index k = adjacency.w_norm.rows();
  dual_.lambda = Matrix::Zero(n_clusters, n_clusters);
  dual_.lambda_h = Matrix::Zero(k, n_clusters);
  dual_.rho = rho0;
  dual_.nu = nu0;

  // ||W||_2^2 <= ||W||_1 ||W||_inf with unit column sums, so the largest
  // row sum bounds the gain of W_norm W_norm^T.
  Vector row_sums = Vector::Zero(k);
  for (Index j = 0; j < adjacency_.w_norm.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(adjacency_.w_norm, j);
         it; ++it)
      row_sums(it.row()) += it.value();
  gain_bound_ = std::max(1.0, row_sums.maxCoeff());

  if (mirror_) {
    mirror_->lambda = dual_.lambda;
    mirror_->rho = dual_.rho;
  }
}

std::pair<double, Matrix> SpatialRegularizer::value_and_grad(
    const Matrix& c) const {
  return hsi_regularizers(c, adjacency_, dual_, config_);
}

void SpatialRegularizer::dual_step(const Matrix& c) {
  hsi_dual_update(c, adjacency_, dual_, config_, alpha_);
  if (mirror_) {
    mirror_->lambda = dual_.lambda;
    mirror_->rho = dual_.rho;
  }
}

double SpatialRegularizer::curvature_hint(const Matrix& c) const {
  (void)c;  // the bound below does not sharpen with the iterate
  double r = static_cast<double>(dual_.lambda.cols());
  double hint = 1.0;
  if (config_.trace_penalty) hint += dual_.rho * r * gain_bound_;
  if (config_.psi_smoothed)
    hint += (dual_.lambda.norm() + dual_.rho * r) * gain_bound_;
  if (config_.h_constraint)
    hint += (dual_.lambda_h.norm() + dual_.nu * std::sqrt(r)) *
            (1.0 + gain_bound_);
  return hint;
}

ViewList pixel_views(const HyperCube& cube, Index s_r, Index* truncated) {
  check_cube(cube);
  require(s_r >= 1 && s_r % 2 == 1, ErrorCode::InvalidArgument,
          "view window side must be odd and >= 1");
  require(s_r * s_r < cube.bands, ErrorCode::InvalidArgument,
          "view window must have fewer pixels than bands");
  require(cube.data.allFinite(), ErrorCode::NonFiniteValue,
          "cube data must be finite");

  Index k = cube.n_pixels();
  Index half = s_r / 2;
  ViewList views;
  views.reserve(static_cast<std::size_t>(k));
  Index short_rank = 0;
  // Pure per-pixel work in row-major pixel order.
  for (Index p = 0; p < k; ++p) {
    std::vector<Index> members;
    for_window(cube.height, cube.width, p / cube.width, p % cube.width, half,
               [&](Index i) { members.push_back(i); });
    Matrix window(cube.bands, static_cast<Index>(members.size()));
    for (std::size_t j = 0; j < members.size(); ++j)
      window.col(static_cast<Index>(j)) = cube.data.col(members[j]);
    Index rank = 0;
    Matrix basis = truncated_basis(window, 1e-10, &rank);
    if (rank < std::min(cube.bands, window.cols())) ++short_rank;
    views.push_back(std::move(basis));
  }
  if (truncated) *truncated = short_rank;
  return views;
}

HsiFitResult fit_hsi(const HyperCube& cube, Index n_clusters,
                     const std::vector<Index>& dims, Index s_r, Index s_a,
                     const HsiFitConfig& config) {
  Index truncated = 0;
  ViewList views = pixel_views(cube, s_r, &truncated);
  SpatialAdjacency adjacency = build_adjacency(cube.height, cube.width, s_a);

  solver::SolverConfig solver_config = config.solver;
  solver_config.formulation = solver::Formulation::AugLagPsi;

  // The window-average constraint shares the growth factor and starts at
  // the same weight as the coupling penalty.
  solver::DualState shared;
  SpatialRegularizer reg(adjacency, config.reg, n_clusters, solver_config.rho0,
                         solver_config.rho0, solver_config.alpha, &shared);

  HsiFitResult out;
  out.fit = solver::fit(views, n_clusters, dims, solver_config, nullptr, &reg,
                        &shared);
  out.truncated_views = truncated;
  out.label_grid = solver::assign_labels(out.fit.model.c);
  return out;
}

HyperCube synth_cube(Index height, Index width, const std::vector<int>& class_map,
                     Index endmembers_per_class, Index bands, double noise_db,
                     std::uint64_t seed) {
  require(height >= 1 && width >= 1, ErrorCode::InvalidArgument,
          "cube dimensions must be positive");
  require(static_cast<Index>(class_map.size()) == height * width,
          ErrorCode::LengthMismatch,
          "class map must have height * width entries");
  require(endmembers_per_class >= 1, ErrorCode::InvalidArgument,
          "need at least one endmember per class");
  require(!std::isnan(noise_db) &&
              (std::isfinite(noise_db) ||
               noise_db == std::numeric_limits<double>::infinity()),
          ErrorCode::InvalidArgument, "noise level must be finite or +inf");
  int n_classes = 0;
  for (int label : class_map) {
    require(label >= 1, ErrorCode::InvalidArgument,
            "class labels are 1-based; every pixel needs a class");
    n_classes = std::max(n_classes, label);
  }
  Index slots = static_cast<Index>(n_classes) * endmembers_per_class;
  require(bands >= 2 * slots, ErrorCode::InvalidArgument,
          "need at least two bands per endmember slot");

  // Spectra and abundances live on dyadic grids coarse enough that every
  // mixture value is a float32-representable sum, so the on-disk format is
  // lossless for generated cubes.
  const double spectrum_grid = 4096.0;  // 2^12
  Index abundance_bits = 12;
  while ((Index{1} << (12 - abundance_bits)) < endmembers_per_class)
    --abundance_bits;
  const double abundance_grid =
      static_cast<double>(Index{1} << abundance_bits);

  double slot_width = static_cast<double>(bands) / static_cast<double>(slots);
  double sigma = std::max(0.8, 0.35 * slot_width);
  Philox endmember_rng(seed, 0);
  std::vector<Matrix> endmembers(static_cast<std::size_t>(n_classes));
  for (int cls = 0; cls < n_classes; ++cls) {
    Matrix& m = endmembers[static_cast<std::size_t>(cls)];
    m.resize(bands, endmembers_per_class);
    for (Index e = 0; e < endmembers_per_class; ++e) {
      Index slot = static_cast<Index>(cls) * endmembers_per_class + e;
      double center =
          slot_width * (static_cast<double>(slot) + 0.5) +
          (endmember_rng.uniform() - 0.5) * 0.3 * slot_width;
      for (Index b = 0; b < bands; ++b) {
        double z = (static_cast<double>(b) - center) / sigma;
        double bump = std::exp(-0.5 * z * z);
        m(b, e) = std::round(bump * spectrum_grid) / spectrum_grid;
      }
      require(m.col(e).maxCoeff() > 0.0, ErrorCode::Internal,
              "endmember spectrum must not vanish");
    }
  }

  HyperCube cube;
  cube.height = height;
  cube.width = width;
  cube.bands = bands;
  cube.labels = class_map;
  cube.data.resize(bands, height * width);

  Philox abundance_rng(seed, 1);
  for (Index p = 0; p < height * width; ++p) {
    const Matrix& m =
        endmembers[static_cast<std::size_t>(class_map[static_cast<std::size_t>(p)] - 1)];
    Vector x = Vector::Zero(bands);
    for (Index e = 0; e < endmembers_per_class; ++e) {
      double raw = 0.1 + 0.9 * abundance_rng.uniform();
      double weight =
          std::max(1.0, std::round(raw * abundance_grid)) / abundance_grid;
      x += weight * m.col(e);
    }
    cube.data.col(p) = x;
  }

  if (std::isfinite(noise_db)) {
    Philox noise_rng(seed, 2);
    double gain = std::pow(10.0, -noise_db / 20.0);
    for (Index p = 0; p < height * width; ++p) {
      Vector g = noise_rng.gaussian_matrix(bands, 1);
      double g_norm = std::max(g.norm(), 1e-300);
      cube.data.col(p) += g * (cube.data.col(p).norm() / g_norm * gain);
    }
  }

  for (Index i = 0; i < cube.data.size(); ++i)
    cube.data.data()[i] =
        static_cast<double>(static_cast<float>(cube.data.data()[i]));
  return cube;
}

HyperCube load_cube(const std::filesystem::path& header_path) {
  auto kv = io::read_kv(header_path);
  auto find = [&](const std::string& key) -> const std::string* {
    for (const auto& [k, v] : kv)
      if (k == key) return &v;
    return nullptr;
  };
  auto parse_dim = [&](const std::string& key) {
    const std::string* text = find(key);
    require(text != nullptr, ErrorCode::FormatError,
            header_path.string() + ": missing " + key);
    long long value = 0;
    auto [end, ec] =
        std::from_chars(text->data(), text->data() + text->size(), value);
    require(ec == std::errc{} && end == text->data() + text->size() &&
                value >= 1 && value <= 1000000,
            ErrorCode::FormatError,
            header_path.string() + ": bad " + key + " '" + *text + "'");
    return static_cast<Index>(value);
  };

  HyperCube cube;
  cube.height = parse_dim("height");
  cube.width = parse_dim("width");
  cube.bands = parse_dim("bands");

  const std::string* dtype = find("dtype");
  require(dtype && *dtype == "f32le", ErrorCode::FormatError,
          header_path.string() + ": dtype must be f32le");
  const std::string* layout = find("layout");
  require(layout && *layout == "pixel-interleaved", ErrorCode::FormatError,
          header_path.string() + ": layout must be pixel-interleaved");
  const std::string* data_name = find("data");
  require(data_name != nullptr, ErrorCode::FormatError,
          header_path.string() + ": missing data");

  auto raw_path = header_path.parent_path() / *data_name;
  require(std::filesystem::exists(raw_path), ErrorCode::FileNotFound,
          raw_path.string());
  std::uintmax_t expected = static_cast<std::uintmax_t>(cube.height) *
                            static_cast<std::uintmax_t>(cube.width) *
                            static_cast<std::uintmax_t>(cube.bands) * 4u;
  std::uintmax_t actual = std::filesystem::file_size(raw_path);
  require(actual == expected, ErrorCode::FormatError,
          raw_path.string() + ": expected " + std::to_string(expected) +
              " payload bytes, found " + std::to_string(actual));

  std::ifstream raw(raw_path, std::ios::binary);
  require(raw.good(), ErrorCode::IoError, "cannot open " + raw_path.string());
  std::vector<float> buffer(static_cast<std::size_t>(expected / 4u));
  raw.read(reinterpret_cast<char*>(buffer.data()),
           static_cast<std::streamsize>(expected));
  require(raw.gcount() == static_cast<std::streamsize>(expected),
          ErrorCode::IoError, "short read from " + raw_path.string());

  cube.data.resize(cube.bands, cube.height * cube.width);
  for (Index i = 0; i < cube.data.size(); ++i)
    cube.data.data()[i] = static_cast<double>(buffer[static_cast<std::size_t>(i)]);
  for (Index i = 0; i < cube.data.size(); ++i)
    require(std::isfinite(cube.data.data()[i]), ErrorCode::FormatError,
            raw_path.string() + ": non-finite value at byte offset " +
                std::to_string(4 * i));

  if (const std::string* labels_name = find("labels")) {
    auto labels_path = header_path.parent_path() / *labels_name;
    cube.labels =
        io::read_int_grid_csv(labels_path, cube.height, cube.width);
    for (int label : cube.labels)
      require(label >= 0, ErrorCode::FormatError,
              labels_path.string() + ": labels must be >= 0");
  }
  return cube;
}

void save_cube(const HyperCube& cube, const std::filesystem::path& header_path) {
  check_cube(cube);
  require(cube.data.allFinite(), ErrorCode::InvalidArgument,
          "cube data must be finite");

  std::string stem = header_path.stem().string();
  std::string raw_name = stem + ".raw";
  std::string labels_name = stem + "_labels.csv";
  auto dir = header_path.parent_path();

  std::vector<std::pair<std::string, std::string>> kv = {
      {"height", std::to_string(cube.height)},
      {"width", std::to_string(cube.width)},
      {"bands", std::to_string(cube.bands)},
      {"dtype", "f32le"},
      {"layout", "pixel-interleaved"},
      {"data", raw_name},
  };
  if (!cube.labels.empty()) kv.emplace_back("labels", labels_name);
  io::write_kv(header_path, kv);

  std::ofstream raw(dir / raw_name, std::ios::binary | std::ios::trunc);
  require(raw.good(), ErrorCode::IoError,
          "cannot open " + (dir / raw_name).string());
  std::vector<float> buffer(static_cast<std::size_t>(cube.data.size()));
  for (Index i = 0; i < cube.data.size(); ++i)
    buffer[static_cast<std::size_t>(i)] =
        static_cast<float>(cube.data.data()[i]);
  raw.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * 4));
  raw.flush();
  require(raw.good(), ErrorCode::IoError,
          "failed writing " + (dir / raw_name).string());

  if (!cube.labels.empty())
    io::write_int_grid_csv(dir / labels_name, cube.labels, cube.height,
                           cube.width);
}

eval::MetricsReport masked_metrics(const std::vector<int>& pred,
                                   const std::vector<int>& truth) {
  require(pred.size() == truth.size(), ErrorCode::LengthMismatch,
          "prediction and truth must have equal length");
  std::vector<int> kept_pred, kept_truth;
  kept_pred.reserve(pred.size());
  kept_truth.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0) continue;
    kept_pred.push_back(pred[i]);
    kept_truth.push_back(truth[i]);
  }
  require(!kept_truth.empty(), ErrorCode::InvalidArgument,
          "every pixel is unlabeled");
  return eval::compute_metrics(kept_pred, kept_truth);
}

const std::vector<Rgb>& default_palette() {
  static const std::vector<Rgb> palette = {
      {0, 0, 0},       {230, 25, 75},   {60, 180, 75},   {255, 225, 25},
      {0, 130, 200},   {245, 130, 48},  {145, 30, 180},  {70, 240, 240},
      {240, 50, 230},  {210, 245, 60},  {250, 190, 212}, {0, 128, 128},
      {220, 190, 255}, {170, 110, 40},  {255, 250, 200}, {128, 0, 0},
      {170, 255, 195},
  };
  return palette;
}

void render_map(const std::filesystem::path& path,
                const std::vector<int>& labels, Index height, Index width,
                const std::vector<Rgb>& palette) {
  require(height >= 1 && width >= 1, ErrorCode::InvalidArgument,
          "map dimensions must be positive");
  require(static_cast<Index>(labels.size()) == height * width,
          ErrorCode::LengthMismatch, "label grid must have height * width entries");
  require(!palette.empty(), ErrorCode::InvalidArgument, "palette is empty");
  for (int label : labels)
    require(label >= 0 && label < static_cast<int>(palette.size()),
            ErrorCode::InvalidArgument,
            "label " + std::to_string(label) + " has no palette entry");

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), ErrorCode::IoError, "cannot open " + path.string());
  f << "P6\n" << width << " " << height << "\n255\n";
  std::vector<std::uint8_t> row;
  row.reserve(static_cast<std::size_t>(width) * 3);
  for (Index r = 0; r < height; ++r) {
    row.clear();
    for (Index c = 0; c < width; ++c) {
      const Rgb& rgb =
          palette[static_cast<std::size_t>(labels[static_cast<std::size_t>(r * width + c)])];
      row.insert(row.end(), rgb.begin(), rgb.end());
    }
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size()));
  }
  f.flush();
  require(f.good(), ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace scos::hsi
