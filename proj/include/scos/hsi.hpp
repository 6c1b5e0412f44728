#ifndef SCOS_HSI_HPP
#define SCOS_HSI_HPP

#include "scos/eval.hpp"
#include "scos/solver.hpp"
#include "scos/types.hpp"

#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

namespace scos::hsi {

// Hyperspectral image: one length-N spectrum per pixel, pixels stored as
// columns in row-major pixel order. labels holds one integer per pixel
// (0 = unlabeled) or stays empty when no ground truth exists.
struct HyperCube {
  Index height = 0;
  Index width = 0;
  Index bands = 0;
  Matrix data;              // bands x (height * width), all values finite
  std::vector<int> labels;  // height * width entries or empty

  Index n_pixels() const { return height * width; }
};

// Cube files: a key=value text header next to a little-endian float32 raw
// payload (pixel-interleaved: all bands of pixel (0,0), then (0,1), ...)
// and an optional labels CSV (height rows of width integers). save_cube
// writes <stem>.raw and <stem>_labels.csv beside the header.
HyperCube load_cube(const std::filesystem::path& header_path);
void save_cube(const HyperCube& cube, const std::filesystem::path& header_path);

// One view per pixel: orthonormal basis of the spectra in the pixel's
// s_r x s_r window, clipped at the image border, truncated to numerical
// rank. Views come back in row-major pixel order; *truncated (optional)
// counts the views whose rank fell below min(bands, window size) — flat
// regions are legitimate, so this is a diagnostic, not an error.
ViewList pixel_views(const HyperCube& cube, Index s_r,
                     Index* truncated = nullptr);

// Window co-membership graph over pixels: w_adj(i, j) = 1 when pixels i and
// j lie in a common s_a x s_a window (self included), w_norm is the
// column-stochastic normalization. Both are K x K sparse with at most
// s_a * s_a nonzeros per column.
struct SpatialAdjacency {
  Index height = 0;
  Index width = 0;
  Eigen::SparseMatrix<double> w_adj;
  Eigen::SparseMatrix<double> w_norm;
};

SpatialAdjacency build_adjacency(Index height, Index width, Index s_a);

// Which spatial coupling terms are active and the smoothing floor for the
// square root. Defaults match fit_hsi: smoothed coupling plus the
// window-average constraint.
struct HsiRegConfig {
  bool trace_penalty = false;
  bool psi_smoothed = true;
  bool h_constraint = true;
  double epsilon_psi = 1e-8;
};

// Multipliers and penalty weights for the spatial terms: (lambda, rho) pair
// with the smoothed coupling, (lambda_h, nu) with the window-average
// constraint.
struct HsiDual {
  Matrix lambda;    // R x R
  double rho = 0.0;
  Matrix lambda_h;  // K x R
  double nu = 0.0;
};

// Value and C-gradient of the selected spatial terms at C (K x R, C >= 0).
// All terms act on the column-normalized copy of C, so the value is
// invariant to positive column rescaling. Cost is O(K * s_a^2 * R): only
// sparse products with w_norm, never a dense K x K matrix.
std::pair<double, Matrix> hsi_regularizers(const Matrix& c,
                                           const SpatialAdjacency& adjacency,
                                           const HsiDual& dual,
                                           const HsiRegConfig& config);

// Multiplier accumulation for the active terms followed by the shared
// growth step rho *= alpha, nu *= alpha.
void hsi_dual_update(const Matrix& c, const SpatialAdjacency& adjacency,
                     HsiDual& dual, const HsiRegConfig& config, double alpha);

// Solver plug-in wrapping hsi_regularizers. Owns its dual state; when a
// mirror is given, dual_step copies (lambda, rho) into it so the solver's
// trace reports the advancing penalty weight.
class SpatialRegularizer final : public solver::Regularizer {
 public:
  SpatialRegularizer(const SpatialAdjacency& adjacency,
                     const HsiRegConfig& config, Index n_clusters, double rho0,
                     double nu0, double alpha,
                     solver::DualState* mirror = nullptr);

  std::pair<double, Matrix> value_and_grad(const Matrix& c) const override;
  void dual_step(const Matrix& c) override;
  double curvature_hint(const Matrix& c) const override;

  const HsiDual& dual() const { return dual_; }

 private:
  const SpatialAdjacency& adjacency_;
  HsiRegConfig config_;
  HsiDual dual_;
  double alpha_;
  double gain_bound_;  // spectral bound for w_norm * w_norm^T
  solver::DualState* mirror_;
};

struct HsiFitConfig {
  solver::SolverConfig solver;
  HsiRegConfig reg;
};

struct HsiFitResult {
  solver::FitResult fit;
  std::vector<int> label_grid;  // height * width labels in 1..R, row-major
  Index truncated_views = 0;
};

// Pixel clustering: neighborhood views + spatially smoothed coupling under
// the unconstrained-update formulation, labels by row argmax of C. s_r is
// the view window, s_a the adjacency window.
HsiFitResult fit_hsi(const HyperCube& cube, Index n_clusters,
                     const std::vector<Index>& dims, Index s_r, Index s_a,
                     const HsiFitConfig& config);

// Linear-mixture test cube: every class draws endmembers_per_class smooth
// spectral bumps in its own band range, each pixel mixes its class's
// endmembers with random positive abundances, then white noise lands at
// noise_db (per-pixel SNR in dB; +inf = noiseless). Values are chosen so
// the float32 file format stores them exactly. class_map entries are 1-based
// and every pixel must be labeled.
HyperCube synth_cube(Index height, Index width, const std::vector<int>& class_map,
                     Index endmembers_per_class, Index bands, double noise_db,
                     std::uint64_t seed);

// Clustering metrics with unlabeled (truth = 0) pixels removed first.
eval::MetricsReport masked_metrics(const std::vector<int>& pred,
                                   const std::vector<int>& truth);

using Rgb = std::array<std::uint8_t, 3>;

// Fixed 17-color map palette: entry 0 is black (unlabeled), entries 1..16
// are mutually distinct saturated colors.
const std::vector<Rgb>& default_palette();

// Binary pixmap (P6) of a row-major label grid; labels index the palette,
// so identical labelings produce identical bytes.
void render_map(const std::filesystem::path& path,
                const std::vector<int>& labels, Index height, Index width,
                const std::vector<Rgb>& palette = default_palette());

}  // namespace scos::hsi

#endif
