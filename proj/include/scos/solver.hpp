#ifndef SCOS_SOLVER_HPP
#define SCOS_SOLVER_HPP

#include "scos/types.hpp"

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace scos::solver {

enum class Formulation { Penalty, AugLag, AugLagPsi };

enum class GUpdate { Auto, Eig, OrthIter };

struct SolverConfig {
  Formulation formulation = Formulation::AugLag;
  double rho0 = 1e-3;
  double alpha = 1.05;
  double epsilon_psi = 1e-8;
  int max_outer = 200;
  int max_inner = 300;
  double tol_rel = 1e-6;
  int orthiter_steps = 50;
  GUpdate g_update = GUpdate::Auto;
  std::uint64_t seed = 1;
};

struct DualState {
  Matrix lambda;  // R x R symmetric, zero diagonal
  double rho = 0.0;
};

struct Model {
  std::vector<Matrix> bases;  // G_r, N x L_r
  Matrix c;                   // K x R, nonnegative
  Formulation formulation = Formulation::AugLag;
};

struct TraceRow {
  int outer_iter;
  double rho;
  double objective;  // composite under this iteration's dual state
  double constraint_violation;
  double wall_ms;
};

struct FitTrace {
  std::vector<TraceRow> rows;
  // Composite after every factor round, grouped per outer iteration; the
  // dual state is fixed inside one group, so each group is non-increasing.
  std::vector<std::vector<double>> round_composites;
  // (outer_iter, cluster) pairs for every dead-cluster restart.
  std::vector<std::pair<int, int>> restarts;
};

struct FitResult {
  Model model;
  FitTrace trace;
};

// Data-fidelity objective: half the squared distance between the stacked
// view projectors and the model's weighted sum of basis projectors,
// evaluated through Gram matrices (no N x N intermediate).
double objective(const ViewList& views, const Model& model);

// (r, s) entry is |G_r^T G_s|_F^2: the Gram of the vectorized basis
// projectors.
Matrix gram_btb(const Model& model);

// (k, r) entry is |U_k^T G_r|_F^2.
Matrix gram_pb(const ViewList& views, const Model& model);

// Exact basis update for cluster r: top-L_r eigenvectors of the weighted
// projector sum deflated by the other clusters. Dense eigensolve.
Matrix update_g_eig(const ViewList& views, const Model& model, Index r);

// Matrix-free variant: shifted orthogonal iteration warm-started from the
// current basis, finished with a Rayleigh-Ritz rotation.
Matrix update_g_orthiter(const ViewList& views, const Model& model, Index r,
                         int steps);

// Gradient of the data objective in G_r for the unconstrained formulation.
Matrix grad_g(const ViewList& views, const Model& model, Index r);

// Value and gradient in C of the coupling regularizer for the chosen
// formulation (penalty trace, augmented-Lagrangian Gram, or the smoothed
// normalized-Gram variant).
std::pair<double, Matrix> reg_value_and_grad(const Matrix& c,
                                             const DualState& dual,
                                             Formulation formulation,
                                             const SolverConfig& config);

// Column-normalized copy of C (norms clamped at 1e-14).
Matrix normalize_columns(const Matrix& c);

// |(C_norm^T C_norm) * Q|_F: off-diagonal mass of the normalized Gram.
double constraint_violation(const Matrix& c);

// Row-wise argmax of C, ties resolved to the lowest index. 1-based labels.
std::vector<int> assign_labels(const Matrix& c);

// Pluggable C-regularizer so pipelines can add structured coupling terms;
// the solver owns the data term and nonnegativity.
class Regularizer {
 public:
  virtual ~Regularizer() = default;
  virtual std::pair<double, Matrix> value_and_grad(const Matrix& c) const = 0;
  virtual void dual_step(const Matrix& c) = 0;
  virtual double curvature_hint(const Matrix& c) const = 0;
};

// Standard regularizer bound to a DualState for the given formulation.
std::unique_ptr<Regularizer> make_regularizer(Formulation formulation,
                                              DualState& dual,
                                              const SolverConfig& config);

// Accelerated projected-gradient step on C >= 0 for the composite
// objective. Never returns a worse composite than the input.
Matrix update_c(const ViewList& views, const Model& model,
                const DualState& dual, const SolverConfig& config);
Matrix update_c(const ViewList& views, const Model& model,
                const Regularizer& reg, const SolverConfig& config);

// Lambda accumulation for the chosen formulation followed by the penalty
// growth step rho *= alpha.
void dual_update(const Matrix& c, DualState& dual, Formulation formulation,
                 const SolverConfig& config);

// Per-view misfit phi_k = 1 - |U_k^T G_{r_k}|_F^2 / L_{r_k} under the row
// argmax assignment; bases are re-orthonormalized first when needed.
Vector view_fit_phi(const ViewList& views, const Model& model);

// Keeps each basis's dominant directions: singular vectors of G_r whose
// squared singular value exceeds half the largest. Output is orthonormal.
Model extract_orthonormal(const Model& model);

FitResult fit(const ViewList& views, Index n_clusters,
              const std::vector<Index>& dims, const SolverConfig& config,
              const Model* init = nullptr, Regularizer* custom_reg = nullptr,
              DualState* custom_dual = nullptr);

}  // namespace scos::solver

#endif
