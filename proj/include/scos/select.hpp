#ifndef SCOS_SELECT_HPP
#define SCOS_SELECT_HPP

#include "scos/solver.hpp"
#include "scos/types.hpp"

#include <cstdint>
#include <vector>

namespace scos::select {

struct FitQuality {
  Vector phi_per_view;  // K entries in [0, 1]
  double phi_bar;       // mean of phi_per_view
};

enum class DimCriterion { AIC, MDL, EigenGap };

enum class SpectrumBranch { Auto, SvdStack, DenseEig };

struct ClusterSpectrum {
  Vector eigenvalues;   // nonincreasing, in [0, |members|]
  Matrix eigenvectors;  // one column per eigenvalue
};

struct SelectConfig {
  // Relative drop of phi_bar below which adding a cluster is not worth it.
  double tau = 0.1;
  solver::SolverConfig solver;
};

struct OrderSelection {
  Index r_star;
  std::vector<double> curve;  // phi_bar for R = 1..R_max
  solver::Model model;        // fitted model at R = r_star
};

struct DimensionEstimate {
  std::vector<Index> per_cluster_dim;
  std::vector<Matrix> per_cluster_basis;
  DimCriterion criterion;
  std::vector<Vector> eigenvalues;
  // Set when a cluster's positive spectrum is flat, so the criterion cannot
  // discriminate and the dimension falls back to the numerical rank.
  std::vector<std::uint8_t> degenerate;
};

// Per-view misfit under the model's row-argmax assignment and its mean.
FitQuality phi_metrics(const ViewList& views, const solver::Model& model);

// Sweeps R = 1..r_max with a uniform cluster dimension, warm-starting each
// fit from the previous one (new cluster seeded at the worst-fitting view)
// and keeping the better of warm and fresh candidates. r_star is the
// smallest R whose successor improves phi_bar by less than tau relatively.
OrderSelection select_num_clusters(const ViewList& views, Index r_max,
                                   Index uniform_dim,
                                   const SelectConfig& config);

// Spectrum of the summed view projectors of one cluster. The stack branch
// works on the N x S_r concatenated basis and never forms an N x N matrix;
// the dense branch materializes the projector sum. Auto picks the stack
// branch when N > S_r^2.
ClusterSpectrum cluster_spectrum(const ViewList& views,
                                 const std::vector<Index>& members,
                                 SpectrumBranch branch = SpectrumBranch::Auto);

// Per-cluster dimension and basis from the cluster spectrum under the
// chosen information criterion. Labels are 1-based and every cluster up to
// the maximum label must be nonempty.
DimensionEstimate estimate_dims(const ViewList& views,
                                const std::vector<int>& labels,
                                DimCriterion criterion);

}  // namespace scos::select

#endif
