#include "doctest.h"

#include "scos/hsi.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include "scos/eval.hpp"
#include "scos/io.hpp"
#include "scos/rng.hpp"
#include "scos/solver.hpp"
#include "scos/subspace.hpp"
#include "scos/types.hpp"
#include "support/oracles.hpp"

namespace {

using scos::ErrorCode;
using scos::Index;
using scos::Matrix;
using scos::Vector;

ErrorCode thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const scos::Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Left/right split class map: columns [0, split) are class 1, the rest 2.
std::vector<int> two_band_map(Index height, Index width, Index split) {
  std::vector<int> map(static_cast<std::size_t>(height * width));
  for (Index r = 0; r < height; ++r)
    for (Index c = 0; c < width; ++c)
      map[static_cast<std::size_t>(r * width + c)] = c < split ? 1 : 2;
  return map;
}

// Window of pixel (r, c) clipped to the image, matching the row-major
// neighbor order the library promises.
std::vector<Index> window_pixels(Index height, Index width, Index r, Index c,
                                 Index side) {
  Index h = side / 2;
  std::vector<Index> out;
  for (Index rr = std::max<Index>(0, r - h);
       rr <= std::min<Index>(height - 1, r + h); ++rr)
    for (Index cc = std::max<Index>(0, c - h);
         cc <= std::min<Index>(width - 1, c + h); ++cc)
      out.push_back(rr * width + cc);
  return out;
}

// Dense reference for the three coupling terms, written directly from their
// definitions on the normalized columns.
double dense_reg_value(const Matrix& c, const Matrix& w_norm,
                       const scos::hsi::HsiDual& dual,
                       const scos::hsi::HsiRegConfig& config) {
  Matrix cn = scos::solver::normalize_columns(c);
  Matrix a = w_norm * w_norm.transpose();
  Matrix m = cn.transpose() * a * cn;
  double value = 0.0;
  if (config.trace_penalty) value += 0.5 * dual.rho * (m.sum() - m.trace());
  if (config.psi_smoothed) {
    Matrix psi = (m.array() + config.epsilon_psi).sqrt().matrix();
    Matrix psi_off = psi;
    psi_off.diagonal().setZero();
    value += dual.lambda.cwiseProduct(psi).sum() +
             0.5 * dual.rho * psi_off.squaredNorm();
  }
  if (config.h_constraint) {
    Matrix e = cn - w_norm.transpose() * cn;
    value += dual.lambda_h.cwiseProduct(e).sum() + 0.5 * dual.nu * e.squaredNorm();
  }
  return value;
}

scos::hsi::HsiDual random_dual(scos::Philox& rng, Index k, Index r) {
  scos::hsi::HsiDual dual;
  Matrix l = rng.gaussian_matrix(r, r).cwiseAbs();
  dual.lambda = 0.5 * (l + l.transpose());
  dual.rho = 0.3 + rng.uniform();
  dual.lambda_h = 0.1 * rng.gaussian_matrix(k, r);
  dual.nu = 0.2 + rng.uniform();
  return dual;
}

}  // namespace

TEST_CASE("hsi: adjacency window counts on a 3x3 image") {
  scos::hsi::SpatialAdjacency adj = scos::hsi::build_adjacency(3, 3, 3);
  REQUIRE(adj.w_adj.rows() == 9);
  REQUIRE(adj.w_adj.cols() == 9);
  Matrix dense = Matrix(adj.w_adj);
  // Center sees all nine pixels, corners four, edges six; self included.
  CHECK(dense.col(4).sum() == 9.0);
  CHECK(dense.col(0).sum() == 4.0);
  CHECK(dense.col(1).sum() == 6.0);
  CHECK(dense(0, 0) == 1.0);
  for (Index j = 0; j < 9; ++j) {
    auto pixels = window_pixels(3, 3, j / 3, j % 3, 3);
    for (Index i = 0; i < 9; ++i) {
      bool member =
          std::find(pixels.begin(), pixels.end(), i) != pixels.end();
      CHECK(dense(i, j) == (member ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("hsi: adjacency is symmetric and column-stochastic") {
  const std::tuple<Index, Index, Index> shapes[] = {
      {5, 7, 3}, {4, 4, 5}, {1, 6, 3}, {9, 2, 3}};
  for (auto [h, w, s] : shapes) {
    scos::hsi::SpatialAdjacency adj = scos::hsi::build_adjacency(h, w, s);
    Index k = h * w;
    REQUIRE(adj.w_norm.rows() == k);
    Matrix dense = Matrix(adj.w_adj);
    CHECK((dense - dense.transpose()).norm() == 0.0);
    CHECK(adj.w_adj.nonZeros() <= k * s * s);
    Vector col_sums = Matrix(adj.w_norm).colwise().sum().transpose();
    for (Index j = 0; j < k; ++j)
      CHECK(col_sums(j) == doctest::Approx(1.0).epsilon(1e-12));
    // Normalized entries are uniform over each window.
    Matrix wn = Matrix(adj.w_norm);
    for (Index j = 0; j < k; ++j) {
      double size = dense.col(j).sum();
      for (Index i = 0; i < k; ++i) {
        if (dense(i, j) == 1.0)
          CHECK(wn(i, j) == doctest::Approx(1.0 / size).epsilon(1e-15));
        else
          CHECK(wn(i, j) == 0.0);
      }
    }
  }
  CHECK(thrown_code([] { scos::hsi::build_adjacency(3, 3, 4); }) ==
        ErrorCode::InvalidArgument);
  CHECK(thrown_code([] { scos::hsi::build_adjacency(3, 3, 1); }) ==
        ErrorCode::InvalidArgument);
  CHECK(thrown_code([] { scos::hsi::build_adjacency(0, 3, 3); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("hsi: window-average constraint vanishes on constant columns") {
  scos::hsi::SpatialAdjacency adj = scos::hsi::build_adjacency(4, 5, 3);
  Matrix c(20, 2);
  c.col(0).setConstant(0.7);
  c.col(1).setConstant(2.5);
  scos::hsi::HsiRegConfig config;
  config.trace_penalty = false;
  config.psi_smoothed = false;
  config.h_constraint = true;
  scos::hsi::HsiDual dual;
  dual.lambda = Matrix::Zero(2, 2);
  dual.rho = 1.0;
  dual.nu = 3.0;

  dual.lambda_h = Matrix::Zero(20, 2);
  auto [v0, g0] = scos::hsi::hsi_regularizers(c, adj, dual, config);
  CHECK(std::abs(v0) <= 1e-12);

  scos::Philox rng(5, 0);
  dual.lambda_h = rng.gaussian_matrix(20, 2);
  auto [v1, g1] = scos::hsi::hsi_regularizers(c, adj, dual, config);
  CHECK(std::abs(v1) <= 1e-12);
  (void)g0;
  (void)g1;
}

TEST_CASE("hsi: coupling trace is zero iff no window straddles clusters") {
  // Hand-built adjacency of two disconnected 2-pixel components.
  scos::hsi::SpatialAdjacency block;
  block.height = 1;
  block.width = 4;
  Eigen::SparseMatrix<double> w_adj(4, 4), w_norm(4, 4);
  std::vector<Eigen::Triplet<double>> ones, halves;
  for (Index a : {0, 1})
    for (Index b : {0, 1}) {
      ones.emplace_back(a, b, 1.0);
      ones.emplace_back(2 + a, 2 + b, 1.0);
      halves.emplace_back(a, b, 0.5);
      halves.emplace_back(2 + a, 2 + b, 0.5);
    }
  w_adj.setFromTriplets(ones.begin(), ones.end());
  w_norm.setFromTriplets(halves.begin(), halves.end());
  block.w_adj = w_adj;
  block.w_norm = w_norm;

  Matrix c(4, 2);
  c << 1, 0, 1, 0, 0, 1, 0, 1;
  scos::hsi::HsiRegConfig config;
  config.trace_penalty = true;
  config.psi_smoothed = false;
  config.h_constraint = false;
  scos::hsi::HsiDual dual;
  dual.lambda = Matrix::Zero(2, 2);
  dual.lambda_h = Matrix::Zero(4, 2);
  dual.rho = 2.0;
  dual.nu = 2.0;

  auto [v_block, g_block] = scos::hsi::hsi_regularizers(c, block, dual, config);
  CHECK(v_block == 0.0);
  (void)g_block;

  // The same labeling on a connected 1x4 strip has straddling windows.
  scos::hsi::SpatialAdjacency strip = scos::hsi::build_adjacency(1, 4, 3);
  auto [v_strip, g_strip] = scos::hsi::hsi_regularizers(c, strip, dual, config);
  CHECK(v_strip > 1e-3);
  (void)g_strip;
}

TEST_CASE("hsi: regularizer value and gradient match dense references") {
  scos::hsi::SpatialAdjacency adj = scos::hsi::build_adjacency(5, 6, 3);
  Matrix w_dense = Matrix(adj.w_norm);
  scos::Philox rng(11, 0);
  const Index k = 30, r = 3;

  for (int term = 0; term < 4; ++term) {
    scos::hsi::HsiRegConfig config;
    config.trace_penalty = term == 0 || term == 3;
    config.psi_smoothed = term == 1 || term == 3;
    config.h_constraint = term == 2 || term == 3;
    for (int trial = 0; trial < 5; ++trial) {
      Matrix c = rng.gaussian_matrix(k, r).cwiseAbs().array() + 0.2;
      scos::hsi::HsiDual dual = random_dual(rng, k, r);
      auto [value, grad] = scos::hsi::hsi_regularizers(c, adj, dual, config);
      CHECK(value ==
            doctest::Approx(dense_reg_value(c, w_dense, dual, config))
                .epsilon(1e-12));
      double err = oracle::fd_gradient_error(
          [&](const Matrix& p) {
            return scos::hsi::hsi_regularizers(p, adj, dual, config).first;
          },
          c, grad);
      CHECK(err < 1e-6);
    }
  }
}

TEST_CASE("hsi: regularizer value ignores positive column rescaling") {
  scos::hsi::SpatialAdjacency adj = scos::hsi::build_adjacency(4, 6, 3);
  scos::Philox rng(13, 0);
  Matrix c = rng.gaussian_matrix(24, 3).cwiseAbs().array() + 0.1;
  scos::hsi::HsiRegConfig config;
  config.trace_penalty = true;
  config.psi_smoothed = true;
  config.h_constraint = true;
  scos::hsi::HsiDual dual = random_dual(rng, 24, 3);

  double base = scos::hsi::hsi_regularizers(c, adj, dual, config).first;
  Matrix scaled = c;
  scaled.col(0) *= 7.5;
  scaled.col(1) *= 1e-3;
  scaled.col(2) *= 42.0;
  double rescaled = scos::hsi::hsi_regularizers(scaled, adj, dual, config).first;
  CHECK(std::abs(base - rescaled) <= 1e-12 * std::max(1.0, std::abs(base)));
}

TEST_CASE("hsi: dual update accumulates both multipliers and grows both penalties") {
  scos::hsi::SpatialAdjacency adj = scos::hsi::build_adjacency(3, 4, 3);
  scos::Philox rng(17, 0);
  Matrix c = rng.gaussian_matrix(12, 2).cwiseAbs().array() + 0.1;
  scos::hsi::HsiRegConfig config;
  scos::hsi::HsiDual dual;
  dual.lambda = Matrix::Zero(2, 2);
  dual.lambda_h = Matrix::Zero(12, 2);
  dual.rho = 0.5;
  dual.nu = 0.25;

  Matrix cn = scos::solver::normalize_columns(c);
  Matrix w_dense = Matrix(adj.w_norm);
  Matrix m = cn.transpose() * w_dense * w_dense.transpose() * cn;
  Matrix psi_off = (m.array() + config.epsilon_psi).sqrt().matrix();
  psi_off.diagonal().setZero();
  Matrix e = cn - w_dense.transpose() * cn;

  scos::hsi::hsi_dual_update(c, adj, dual, config, 1.1);
  CHECK((dual.lambda - 0.5 * psi_off).norm() <= 1e-12);
  CHECK((dual.lambda_h - 0.25 * e).norm() <= 1e-12);
  CHECK(dual.rho == doctest::Approx(0.55).epsilon(1e-15));
  CHECK(dual.nu == doctest::Approx(0.275).epsilon(1e-15));
}

TEST_CASE("hsi: synthetic cube is seeded, labeled, and hits its target snr") {
  std::vector<int> map = two_band_map(6, 6, 3);
  scos::hsi::HyperCube clean = scos::hsi::synth_cube(
      6, 6, map, 2, 20, std::numeric_limits<double>::infinity(), 99);
  REQUIRE(clean.height == 6);
  REQUIRE(clean.width == 6);
  REQUIRE(clean.bands == 20);
  REQUIRE(clean.data.rows() == 20);
  REQUIRE(clean.data.cols() == 36);
  CHECK(clean.labels == map);
  CHECK(clean.data.allFinite());
  CHECK(clean.data.minCoeff() >= 0.0);
  for (Index p = 0; p < 36; ++p) CHECK(clean.data.col(p).norm() > 0.0);

  // Values survive the single-precision storage format exactly.
  for (Index i = 0; i < clean.data.size(); ++i) {
    double v = clean.data.data()[i];
    CHECK(static_cast<double>(static_cast<float>(v)) == v);
  }

  scos::hsi::HyperCube again = scos::hsi::synth_cube(
      6, 6, map, 2, 20, std::numeric_limits<double>::infinity(), 99);
  CHECK(again.data == clean.data);

  scos::hsi::HyperCube other = scos::hsi::synth_cube(
      6, 6, map, 2, 20, std::numeric_limits<double>::infinity(), 100);
  CHECK(other.data != clean.data);

  // Same seed, finite snr: the residual against the clean cube measures the
  // injected noise, pixel by pixel.
  scos::hsi::HyperCube noisy = scos::hsi::synth_cube(6, 6, map, 2, 20, 20.0, 99);
  double total_err = 0.0;
  for (Index p = 0; p < 36; ++p) {
    Vector noise = noisy.data.col(p) - clean.data.col(p);
    REQUIRE(noise.norm() > 0.0);
    double snr = 10.0 * std::log10(clean.data.col(p).squaredNorm() /
                                   noise.squaredNorm());
    total_err += std::abs(snr - 20.0);
  }
  CHECK(total_err / 36.0 < 0.1);
}

TEST_CASE("hsi: one endmember per class makes class pixels parallel") {
  std::vector<int> map = two_band_map(4, 4, 2);
  scos::hsi::HyperCube cube = scos::hsi::synth_cube(
      4, 4, map, 1, 16, std::numeric_limits<double>::infinity(), 3);
  for (Index p = 0; p < 16; ++p)
    for (Index q = p + 1; q < 16; ++q) {
      double cosine = cube.data.col(p).normalized().dot(
          cube.data.col(q).normalized());
      if (map[static_cast<std::size_t>(p)] == map[static_cast<std::size_t>(q)])
        CHECK(cosine == doctest::Approx(1.0).epsilon(1e-12));
      else
        CHECK(cosine < 0.9);
    }
}

TEST_CASE("hsi: synthetic cube rejects malformed requests") {
  std::vector<int> map = two_band_map(4, 4, 2);
  CHECK(thrown_code([&] { scos::hsi::synth_cube(4, 4, {1, 2}, 2, 20, 20.0, 1); }) ==
        ErrorCode::LengthMismatch);
  std::vector<int> holed = map;
  holed[3] = 0;
  CHECK(thrown_code([&] { scos::hsi::synth_cube(4, 4, holed, 2, 20, 20.0, 1); }) ==
        ErrorCode::InvalidArgument);
  CHECK(thrown_code([&] { scos::hsi::synth_cube(4, 4, map, 0, 20, 20.0, 1); }) ==
        ErrorCode::InvalidArgument);
  // Two classes of four endmembers need at least 16 bands.
  CHECK(thrown_code([&] { scos::hsi::synth_cube(4, 4, map, 4, 10, 20.0, 1); }) ==
        ErrorCode::InvalidArgument);
  CHECK(thrown_code([&] {
          scos::hsi::synth_cube(4, 4, map, 2, 20,
                                std::numeric_limits<double>::quiet_NaN(), 1);
        }) == ErrorCode::InvalidArgument);
  CHECK(thrown_code([&] {
          scos::hsi::synth_cube(4, 4, map, 2, 20,
                                -std::numeric_limits<double>::infinity(), 1);
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("hsi: cube files round-trip exactly") {
  auto dir = fresh_dir("scos_hsi_cube_rt");

  scos::hsi::HyperCube cube;
  cube.height = 2;
  cube.width = 2;
  cube.bands = 3;
  cube.data.resize(3, 4);
  for (Index p = 0; p < 4; ++p)
    for (Index b = 0; b < 3; ++b)
      cube.data(b, p) = static_cast<double>(p) + 0.25 * (static_cast<double>(b) + 1.0);
  cube.labels = {1, 2, 3, 4};

  auto header = dir / "tiny.hdr";
  scos::hsi::save_cube(cube, header);
  CHECK(std::filesystem::exists(dir / "tiny.raw"));
  CHECK(std::filesystem::exists(dir / "tiny_labels.csv"));

  scos::hsi::HyperCube back = scos::hsi::load_cube(header);
  CHECK(back.height == 2);
  CHECK(back.width == 2);
  CHECK(back.bands == 3);
  CHECK(back.data == cube.data);
  CHECK(back.labels == cube.labels);

  // A generated cube survives the single-precision format bit for bit.
  std::vector<int> map = two_band_map(5, 4, 2);
  scos::hsi::HyperCube synth = scos::hsi::synth_cube(5, 4, map, 2, 18, 25.0, 7);
  auto header2 = dir / "synth.hdr";
  scos::hsi::save_cube(synth, header2);
  scos::hsi::HyperCube synth_back = scos::hsi::load_cube(header2);
  CHECK(synth_back.data == synth.data);
  CHECK(synth_back.labels == synth.labels);

  // Unlabeled cube: no labels line, loads with empty labels.
  scos::hsi::HyperCube bare = cube;
  bare.labels.clear();
  auto header3 = dir / "bare.hdr";
  scos::hsi::save_cube(bare, header3);
  scos::hsi::HyperCube bare_back = scos::hsi::load_cube(header3);
  CHECK(bare_back.labels.empty());
  CHECK(bare_back.data == cube.data);
}

TEST_CASE("hsi: cube loader rejects inconsistent files") {
  auto dir = fresh_dir("scos_hsi_cube_bad");
  std::vector<int> map = two_band_map(3, 3, 1);
  scos::hsi::HyperCube cube = scos::hsi::synth_cube(3, 3, map, 1, 12, 30.0, 1);
  auto header = dir / "cube.hdr";
  scos::hsi::save_cube(cube, header);

  auto rewrite_key = [&](const std::string& key, const std::string& value) {
    auto kv = scos::io::read_kv(header);
    for (auto& [k, v] : kv)
      if (k == key) v = value;
    scos::io::write_kv(header, kv);
  };

  SUBCASE("header claims more pixels than the raw file holds") {
    rewrite_key("height", "4");
    CHECK(thrown_code([&] { scos::hsi::load_cube(header); }) ==
          ErrorCode::FormatError);
  }
  SUBCASE("unsupported element type") {
    rewrite_key("dtype", "f64le");
    CHECK(thrown_code([&] { scos::hsi::load_cube(header); }) ==
          ErrorCode::FormatError);
  }
  SUBCASE("unsupported layout") {
    rewrite_key("layout", "band-sequential");
    CHECK(thrown_code([&] { scos::hsi::load_cube(header); }) ==
          ErrorCode::FormatError);
  }
  SUBCASE("missing raw payload") {
    std::filesystem::remove(dir / "cube.raw");
    CHECK(thrown_code([&] { scos::hsi::load_cube(header); }) ==
          ErrorCode::FileNotFound);
  }
  SUBCASE("missing header") {
    CHECK(thrown_code([&] { scos::hsi::load_cube(dir / "absent.hdr"); }) ==
          ErrorCode::FileNotFound);
  }
  SUBCASE("label grid shaped wrong") {
    scos::io::write_int_grid_csv(dir / "cube_labels.csv", {1, 2, 3}, 1, 3);
    CHECK(thrown_code([&] { scos::hsi::load_cube(header); }) ==
          ErrorCode::ShapeMismatch);
  }
  SUBCASE("non-finite payload value") {
    std::fstream raw(dir / "cube.raw",
                     std::ios::in | std::ios::out | std::ios::binary);
    REQUIRE(raw.good());
    const std::uint32_t nan_bits = 0x7fc00000u;
    raw.write(reinterpret_cast<const char*>(&nan_bits), 4);
    raw.close();
    CHECK(thrown_code([&] { scos::hsi::load_cube(header); }) ==
          ErrorCode::FormatError);
  }
  SUBCASE("garbled dimension text") {
    rewrite_key("width", "three");
    CHECK(thrown_code([&] { scos::hsi::load_cube(header); }) ==
          ErrorCode::FormatError);
  }
}

TEST_CASE("hsi: pixel views cover every pixel in row-major order") {
  std::vector<int> map = two_band_map(5, 6, 3);
  scos::hsi::HyperCube cube = scos::hsi::synth_cube(
      5, 6, map, 2, 20, std::numeric_limits<double>::infinity(), 21);

  Index truncated = 0;
  scos::ViewList views = scos::hsi::pixel_views(cube, 3, &truncated);
  REQUIRE(views.size() == 30);
  // Noiseless two-endmember windows have rank exactly two, below the window
  // column count everywhere, so every view reports a truncation.
  CHECK(truncated == 30);

  for (Index p = 0; p < 30; ++p) {
    const Matrix& u = views[static_cast<std::size_t>(p)];
    REQUIRE(u.rows() == 20);
    // Windows centered on columns 2 and 3 straddle the class split and pick
    // up both planes; all others stay inside one two-dimensional class plane.
    Index col = p % 6;
    Index expect = (col == 2 || col == 3) ? 4 : 2;
    REQUIRE(u.cols() == expect);
    CHECK((u.transpose() * u - Matrix::Identity(expect, expect))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
    // Each view spans the same space as the raw window spectra it came from.
    auto pixels = window_pixels(5, 6, p / 6, p % 6, 3);
    Matrix raw(20, static_cast<Index>(pixels.size()));
    for (std::size_t j = 0; j < pixels.size(); ++j)
      raw.col(static_cast<Index>(j)) = cube.data.col(pixels[j]);
    Matrix q = scos::truncated_basis(raw);
    REQUIRE(q.cols() == expect);
    CHECK(scos::chordal_sq_distance(u, q) <= 1e-12);
  }

  // Interior views of one class agree; views across classes do not. The
  // interior columns 1 and 4 keep their windows inside one class each.
  std::vector<Index> left, right;
  for (Index r = 1; r < 4; ++r) {
    left.push_back(r * 6 + 1);
    right.push_back(r * 6 + 4);
  }
  for (Index a : left)
    for (Index b : left)
      CHECK(scos::chordal_sq_distance(views[static_cast<std::size_t>(a)],
                                      views[static_cast<std::size_t>(b)]) <
            1e-8);
  for (Index a : left)
    for (Index b : right)
      CHECK(scos::chordal_sq_distance(views[static_cast<std::size_t>(a)],
                                      views[static_cast<std::size_t>(b)]) >
            0.5);
}

TEST_CASE("hsi: degenerate pixel views") {
  scos::hsi::HyperCube flat;
  flat.height = 3;
  flat.width = 4;
  flat.bands = 10;
  flat.data = Matrix::Zero(10, 12);
  Vector spectrum = Vector::LinSpaced(10, 1.0, 2.0);
  for (Index p = 0; p < 12; ++p) flat.data.col(p) = 2.5 * spectrum;

  Index truncated = 0;
  scos::ViewList views = scos::hsi::pixel_views(flat, 3, &truncated);
  REQUIRE(views.size() == 12);
  CHECK(truncated == 12);
  for (const Matrix& u : views) {
    REQUIRE(u.cols() == 1);
    CHECK((u.col(0) - spectrum.normalized()).cwiseAbs().maxCoeff() <= 1e-12);
  }

  // Window side one: each view is its own normalized spectrum, full rank.
  scos::hsi::HyperCube solo;
  solo.height = 2;
  solo.width = 2;
  solo.bands = 6;
  scos::Philox rng(31, 0);
  solo.data = rng.gaussian_matrix(6, 4).cwiseAbs();
  scos::ViewList singles = scos::hsi::pixel_views(solo, 1, &truncated);
  REQUIRE(singles.size() == 4);
  CHECK(truncated == 0);
  for (Index p = 0; p < 4; ++p)
    CHECK((singles[static_cast<std::size_t>(p)].col(0) -
           solo.data.col(p).normalized())
              .cwiseAbs()
              .maxCoeff() <= 1e-12);

  CHECK(thrown_code([&] { scos::hsi::pixel_views(solo, 2); }) ==
        ErrorCode::InvalidArgument);
  CHECK(thrown_code([&] { scos::hsi::pixel_views(solo, 3); }) ==
        ErrorCode::InvalidArgument);  // 9 >= 6 bands
  scos::hsi::HyperCube empty;
  CHECK(thrown_code([&] { scos::hsi::pixel_views(empty, 1); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("hsi: spatial regularizer plugs into the solver contract") {
  scos::hsi::SpatialAdjacency adj = scos::hsi::build_adjacency(3, 4, 3);
  scos::Philox rng(41, 0);
  Matrix c = rng.gaussian_matrix(12, 2).cwiseAbs().array() + 0.1;

  scos::hsi::HsiRegConfig config;
  scos::solver::DualState mirror;
  scos::hsi::SpatialRegularizer reg(adj, config, 2, 0.5, 0.5, 1.2, &mirror);

  scos::hsi::HsiDual expect;
  expect.lambda = Matrix::Zero(2, 2);
  expect.lambda_h = Matrix::Zero(12, 2);
  expect.rho = 0.5;
  expect.nu = 0.5;
  auto [v_reg, g_reg] = reg.value_and_grad(c);
  auto [v_free, g_free] = scos::hsi::hsi_regularizers(c, adj, expect, config);
  CHECK(v_reg == v_free);
  CHECK((g_reg - g_free).norm() == 0.0);
  CHECK(reg.curvature_hint(c) > 0.0);

  reg.dual_step(c);
  scos::hsi::hsi_dual_update(c, adj, expect, config, 1.2);
  CHECK((reg.dual().lambda - expect.lambda).norm() == 0.0);
  CHECK((reg.dual().lambda_h - expect.lambda_h).norm() == 0.0);
  CHECK(reg.dual().rho == expect.rho);
  CHECK(reg.dual().nu == expect.nu);
  // The mirror exposes the shared multiplier pair to the solver's trace.
  CHECK((mirror.lambda - expect.lambda).norm() == 0.0);
  CHECK(mirror.rho == expect.rho);
}

TEST_CASE("hsi: noiseless two-class cube segments perfectly") {
  std::vector<int> map = two_band_map(10, 10, 5);
  scos::hsi::HyperCube cube = scos::hsi::synth_cube(
      10, 10, map, 2, 20, std::numeric_limits<double>::infinity(), 1);

  // Boundary windows straddle both class planes, so their rows are decided by
  // the spatial disagreement pull; the faster schedule lets that pull win
  // before the overlap multipliers freeze the contested rows.
  scos::hsi::HsiFitConfig config;
  config.solver.seed = 1;
  config.solver.alpha = 1.1;
  config.solver.max_outer = 90;
  scos::hsi::HsiFitResult result =
      scos::hsi::fit_hsi(cube, 2, {2, 2}, 3, 3, config);

  REQUIRE(result.label_grid.size() == 100);
  CHECK(result.truncated_views == 100);
  CHECK(scos::eval::accuracy(result.label_grid, map) == 1.0);
  CHECK(result.fit.model.formulation == scos::solver::Formulation::AugLagPsi);

  // The solver trace reports the advancing shared penalty weight.
  REQUIRE(result.fit.trace.rows.size() >= 2);
  double rho0 = config.solver.rho0;
  for (std::size_t i = 0; i < result.fit.trace.rows.size(); ++i) {
    double expect = rho0 * std::pow(config.solver.alpha, static_cast<double>(i));
    CHECK(result.fit.trace.rows[i].rho ==
          doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("hsi: single cluster labels every pixel the same") {
  std::vector<int> map = two_band_map(6, 6, 3);
  scos::hsi::HyperCube cube = scos::hsi::synth_cube(
      6, 6, map, 2, 16, std::numeric_limits<double>::infinity(), 5);
  scos::hsi::HsiFitConfig config;
  scos::hsi::HsiFitResult result =
      scos::hsi::fit_hsi(cube, 1, {2}, 3, 3, config);
  for (int label : result.label_grid) CHECK(label == 1);
}

TEST_CASE("hsi: segmentation is invariant to global cube scaling") {
  std::vector<int> map = two_band_map(8, 8, 4);
  scos::hsi::HyperCube cube = scos::hsi::synth_cube(
      8, 8, map, 2, 20, std::numeric_limits<double>::infinity(), 9);

  scos::hsi::HsiFitConfig config;
  config.solver.alpha = 1.1;
  config.solver.max_outer = 90;
  scos::hsi::HsiFitResult base = scos::hsi::fit_hsi(cube, 2, {2, 2}, 3, 3, config);

  scos::hsi::HyperCube scaled = cube;
  scaled.data *= 37.5;
  scos::hsi::HsiFitResult big = scos::hsi::fit_hsi(scaled, 2, {2, 2}, 3, 3, config);

  CHECK(scos::eval::accuracy(base.label_grid, big.label_grid) == 1.0);
}

TEST_CASE("hsi: noisy cubes still segment well across seeds") {
  std::vector<int> map = two_band_map(8, 8, 4);
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    scos::hsi::HyperCube cube =
        scos::hsi::synth_cube(8, 8, map, 2, 20, 20.0, seed);
    scos::hsi::HsiFitConfig config;
    config.solver.seed = seed;
    config.solver.alpha = 1.1;
    config.solver.max_outer = 90;
    scos::hsi::HsiFitResult result =
        scos::hsi::fit_hsi(cube, 2, {2, 2}, 3, 3, config);
    total += scos::eval::accuracy(result.label_grid, map);
  }
  CHECK(total / 5.0 >= 0.95);
}

TEST_CASE("hsi: masked metrics ignore unlabeled pixels") {
  std::vector<int> truth = {0, 1, 1, 2, 2, 0, 2};
  std::vector<int> pred = {9, 7, 7, 9, 9, 7, 5};

  scos::eval::MetricsReport masked = scos::hsi::masked_metrics(pred, truth);
  scos::eval::MetricsReport direct =
      scos::eval::compute_metrics({7, 7, 9, 9, 5}, {1, 1, 2, 2, 2});
  CHECK(masked.acc == direct.acc);
  CHECK(masked.ari == direct.ari);
  CHECK(masked.nmi == direct.nmi);
  CHECK(masked.apr == direct.apr);
  CHECK(masked.acc == doctest::Approx(0.8));

  std::vector<int> all_on = {1, 1, 2};
  CHECK(scos::hsi::masked_metrics({1, 1, 2}, all_on).acc == 1.0);

  CHECK(thrown_code([&] { scos::hsi::masked_metrics({1, 2}, {1, 2, 3}); }) ==
        ErrorCode::LengthMismatch);
  CHECK(thrown_code([&] { scos::hsi::masked_metrics({1, 2}, {0, 0}); }) ==
        ErrorCode::InvalidArgument);
}

namespace {

// Minimal binary-pixmap reader for the round-trip checks.
std::vector<std::array<std::uint8_t, 3>> parse_p6(
    const std::filesystem::path& path, Index& height, Index& width) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::string magic;
  long long w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  REQUIRE(magic == "P6");
  REQUIRE(maxval == 255);
  f.get();  // single whitespace after the header
  width = static_cast<Index>(w);
  height = static_cast<Index>(h);
  std::vector<std::array<std::uint8_t, 3>> pixels(
      static_cast<std::size_t>(w * h));
  f.read(reinterpret_cast<char*>(pixels.data()),
         static_cast<std::streamsize>(pixels.size() * 3));
  REQUIRE(f.gcount() == static_cast<std::streamsize>(pixels.size() * 3));
  return pixels;
}

}  // namespace

TEST_CASE("hsi: rendered maps use the palette and round-trip") {
  auto dir = fresh_dir("scos_hsi_render");
  const auto& palette = scos::hsi::default_palette();
  REQUIRE(palette.size() >= 17);
  CHECK(palette[0] == scos::hsi::Rgb{0, 0, 0});
  for (std::size_t a = 0; a < palette.size(); ++a)
    for (std::size_t b = a + 1; b < palette.size(); ++b)
      CHECK(palette[a] != palette[b]);

  SUBCASE("single pixel") {
    scos::hsi::render_map(dir / "one.ppm", {1}, 1, 1);
    Index h = 0, w = 0;
    auto pixels = parse_p6(dir / "one.ppm", h, w);
    REQUIRE(h == 1);
    REQUIRE(w == 1);
    CHECK(pixels[0] == palette[1]);
  }

  SUBCASE("all palette entries round-trip") {
    std::vector<int> labels(17);
    for (int i = 0; i < 17; ++i) labels[static_cast<std::size_t>(i)] = i;
    scos::hsi::render_map(dir / "all.ppm", labels, 1, 17);
    Index h = 0, w = 0;
    auto pixels = parse_p6(dir / "all.ppm", h, w);
    REQUIRE(w == 17);
    for (std::size_t p = 0; p < 17; ++p) {
      std::size_t found = palette.size();
      for (std::size_t q = 0; q < palette.size(); ++q)
        if (palette[q] == pixels[p]) found = q;
      CHECK(found == static_cast<std::size_t>(labels[p]));
    }
  }

  SUBCASE("permuting labels permutes colors only") {
    scos::hsi::render_map(dir / "ab.ppm", {1, 2}, 1, 2);
    scos::hsi::render_map(dir / "ba.ppm", {2, 1}, 1, 2);
    Index h = 0, w = 0;
    auto ab = parse_p6(dir / "ab.ppm", h, w);
    auto ba = parse_p6(dir / "ba.ppm", h, w);
    CHECK(ab[0] == ba[1]);
    CHECK(ab[1] == ba[0]);
  }

  SUBCASE("identical labelings produce identical bytes") {
    scos::hsi::render_map(dir / "x1.ppm", {0, 3, 5, 2}, 2, 2);
    scos::hsi::render_map(dir / "x2.ppm", {0, 3, 5, 2}, 2, 2);
    std::ifstream f1(dir / "x1.ppm", std::ios::binary);
    std::ifstream f2(dir / "x2.ppm", std::ios::binary);
    std::string s1((std::istreambuf_iterator<char>(f1)), {});
    std::string s2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(s1 == s2);
    CHECK(!s1.empty());
  }

  SUBCASE("guards") {
    CHECK(thrown_code([&] { scos::hsi::render_map(dir / "bad.ppm", {1, 2}, 1, 3); }) ==
          ErrorCode::LengthMismatch);
    CHECK(thrown_code([&] { scos::hsi::render_map(dir / "bad.ppm", {-1}, 1, 1); }) ==
          ErrorCode::InvalidArgument);
    CHECK(thrown_code([&] {
            scos::hsi::render_map(dir / "bad.ppm",
                                  {static_cast<int>(palette.size())}, 1, 1);
          }) == ErrorCode::InvalidArgument);
    CHECK(thrown_code([&] {
            scos::hsi::render_map(dir / "no_dir" / "deep" / "bad.ppm", {1}, 1, 1);
          }) == ErrorCode::IoError);
  }
}
