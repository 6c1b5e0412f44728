#include "scos/solver.hpp"

#include "scos/rng.hpp"
#include "scos/subspace.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

namespace scos::solver {

namespace {

constexpr double kDeadColumnNorm = 1e-14;
constexpr double kNormClamp = 1e-14;
constexpr int kMaxRoundsPerSubproblem = 20;
constexpr Index kOrthIterAutoCutoff = 400;
constexpr int kUnconstrainedBasisSteps = 4;

void check_views(const ViewList& views) {
  require(!views.empty(), ErrorCode::InvalidArgument, "no views given");
  Index n = views[0].rows();
  for (const Matrix& u : views) {
    require(u.rows() == n, ErrorCode::DimensionMismatch,
            "views disagree on the ambient dimension");
    require(u.cols() >= 1 && u.cols() <= n, ErrorCode::InvalidArgument,
            "view basis must be tall and nonempty");
  }
}

void check_model(const ViewList& views, const Model& model) {
  Index n = views[0].rows();
  Index k = static_cast<Index>(views.size());
  Index r = static_cast<Index>(model.bases.size());
  require(r >= 1, ErrorCode::InvalidArgument, "model has no clusters");
  require(model.c.rows() == k && model.c.cols() == r,
          ErrorCode::DimensionMismatch, "C must be n_views x n_clusters");
  for (const Matrix& g : model.bases)
    require(g.rows() == n && g.cols() >= 1, ErrorCode::DimensionMismatch,
            "basis block has wrong ambient dimension");
}

struct Grams {
  Matrix btb;      // R x R
  Matrix pb;       // K x R
  double constant; // half the total view dimension
};

Grams compute_grams(const ViewList& views, const Model& model) {
  Grams g;
  g.btb = gram_btb(model);
  g.pb = gram_pb(views, model);
  g.constant = 0.0;
  for (const Matrix& u : views) g.constant += 0.5 * static_cast<double>(u.cols());
  return g;
}

double fdata_from(const Grams& grams, const Matrix& c) {
  Matrix ctc = c.transpose() * c;
  return grams.constant - c.cwiseProduct(grams.pb).sum() +
         0.5 * ctc.cwiseProduct(grams.btb).sum();
}

double lambda_max_estimate(const Matrix& s) {
  Index n = s.rows();
  Vector x = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  for (int it = 0; it < 60; ++it) {
    Vector y = s.selfadjointView<Eigen::Lower>() * x;
    double nrm = y.norm();
    if (nrm <= 0.0) return 0.0;
    x = y / nrm;
  }
  return x.dot(s.selfadjointView<Eigen::Lower>() * x);
}

// Weights of the cluster-r basis subproblem. The view weights scale the
// projector sum; the deflation weights subtract the other clusters.
struct SubproblemWeights {
  Vector view_w;     // K
  Vector deflate_w;  // R, entry r unused
};

SubproblemWeights subproblem_weights(const Model& model, Index r) {
  double nrm2 = model.c.col(r).squaredNorm();
  require(std::sqrt(nrm2) >= kDeadColumnNorm, ErrorCode::EmptyCluster,
          "cluster weight column is numerically zero");
  SubproblemWeights w;
  w.view_w = model.c.col(r) / nrm2;
  w.deflate_w = (model.c.transpose() * model.c.col(r)) / nrm2;
  return w;
}

// Views stacked side by side; one wide product then replaces K narrow ones,
// which is what makes the orthogonal-iteration path viable at large N.
struct StackedViews {
  Matrix u;                   // N x sum_k M_k
  std::vector<Index> offset;  // K+1 column offsets
};

StackedViews stack_views(const ViewList& views) {
  StackedViews s;
  Index total = 0;
  for (const Matrix& v : views) total += v.cols();
  s.u.resize(views[0].rows(), total);
  s.offset.reserve(views.size() + 1);
  Index at = 0;
  for (const Matrix& v : views) {
    s.offset.push_back(at);
    s.u.middleCols(at, v.cols()) = v;
    at += v.cols();
  }
  s.offset.push_back(at);
  return s;
}

// out += sum_k w_k U_k U_k^T a. The stacked path gives up skipping zero
// weights in exchange for one wide product, so take it only while most
// weights are active.
void add_weighted_projector_product(const StackedViews* stack,
                                    const ViewList& views, const Vector& w,
                                    const Matrix& a, Matrix& out) {
  Index k = static_cast<Index>(views.size());
  if (stack) {
    Index active = 0;
    for (Index i = 0; i < k; ++i) active += w(i) != 0.0 ? 1 : 0;
    if (2 * active >= k) {
      Matrix t = stack->u.transpose() * a;
      for (Index i = 0; i < k; ++i)
        t.middleRows(stack->offset[static_cast<std::size_t>(i)],
                     views[static_cast<std::size_t>(i)].cols()) *= w(i);
      out.noalias() += stack->u * t;
      return;
    }
  }
  for (Index i = 0; i < k; ++i) {
    if (w(i) == 0.0) continue;
    const Matrix& u = views[static_cast<std::size_t>(i)];
    out.noalias() += w(i) * (u * (u.transpose() * a));
  }
}

Matrix update_g_orthiter_impl(const StackedViews* stack, const ViewList& views,
                              const Model& model, Index r, int steps) {
  SubproblemWeights w = subproblem_weights(model, r);
  const Matrix& g0 = model.bases[static_cast<std::size_t>(r)];
  Index n = g0.rows();
  Index l = g0.cols();

  // The deflated operator can be indefinite; the shift keeps it positive
  // semidefinite so subspace iteration targets the algebraically largest
  // eigenvalues and its Rayleigh trace is monotone. Spectral norms of the
  // deflation blocks give the tightest cheap bound.
  double shift = 0.0;
  for (Index s = 0; s < static_cast<Index>(model.bases.size()); ++s) {
    if (s == r) continue;
    double vs = w.deflate_w(s);
    if (vs > 0.0) {
      const Matrix& g_s = model.bases[static_cast<std::size_t>(s)];
      Eigen::SelfAdjointEigenSolver<Matrix> gram(g_s.transpose() * g_s,
                                                 Eigen::EigenvaluesOnly);
      shift += vs * gram.eigenvalues().maxCoeff();
    }
  }

  auto apply = [&](const Matrix& a) {
    Matrix out = shift * a;
    add_weighted_projector_product(stack, views, w.view_w, a, out);
    for (Index s = 0; s < static_cast<Index>(model.bases.size()); ++s) {
      if (s == r) continue;
      double vs = w.deflate_w(s);
      if (vs != 0.0)
        out.noalias() -= vs * (model.bases[static_cast<std::size_t>(s)] *
                               (model.bases[static_cast<std::size_t>(s)]
                                    .transpose() *
                                a));
    }
    return out;
  };

  // Guard vectors past the wanted block let the iteration converge through
  // clustered eigenvalues, and applying the operator twice per
  // orthogonalization squares the convergence ratio. The starting block
  // contains the warm start, so the extracted Rayleigh trace can only
  // improve on it. A capped guard keeps the per-step cost near-linear in l
  // for wide blocks.
  Index block = std::min<Index>(l + std::min<Index>(l, 8), n);
  Matrix a(n, block);
  a.leftCols(l) = g0;
  if (block > l) a.rightCols(block - l) = apply(g0).leftCols(block - l);
  {
    Eigen::HouseholderQR<Matrix> qr(a);
    a = qr.householderQ() * Matrix::Identity(n, block);
  }
  for (int step = 0; step < steps; ++step) {
    Matrix b = apply(apply(a));
    Eigen::HouseholderQR<Matrix> qr(b);
    Matrix a_next = qr.householderQ() * Matrix::Identity(n, block);
    double change =
        static_cast<double>(block) - (a_next.transpose() * a).squaredNorm();
    a = a_next;
    if (change < 1e-12) break;
  }
  // Rayleigh-Ritz rotation: align the frame with the Ritz vectors so the
  // leading columns come out in descending eigenvalue order.
  Matrix wa = apply(a);
  Matrix t = a.transpose() * wa;
  t = 0.5 * (t + t.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(t);
  Matrix rot(block, l);
  for (Index j = 0; j < l; ++j)
    rot.col(j) = eig.eigenvectors().col(block - 1 - j);
  Matrix out = a * rot;
  fix_basis_signs(out);
  return out;
}

constexpr double kDuplicateOverlap = 0.99;

// Index of the weaker member of the most-overlapping near-duplicate basis
// pair (normalized subspace overlap >= kDuplicateOverlap), or -1 when all
// pairs are distinct. "Weaker" = smaller weight-column norm, ties to the
// higher index, so the choice is invariant under cluster relabeling except
// on exact norm ties.
Index duplicate_twin(const Model& model) {
  Index n_clusters = static_cast<Index>(model.bases.size());
  if (n_clusters < 2) return -1;
  std::vector<Matrix> q;
  q.reserve(static_cast<std::size_t>(n_clusters));
  for (const Matrix& b : model.bases) {
    Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU);
    q.push_back(svd.matrixU());
  }
  double best_overlap = kDuplicateOverlap;
  Index twin = -1;
  for (Index r = 0; r < n_clusters; ++r) {
    for (Index s = r + 1; s < n_clusters; ++s) {
      double denom = static_cast<double>(
          std::min(q[static_cast<std::size_t>(r)].cols(),
                   q[static_cast<std::size_t>(s)].cols()));
      double overlap = (q[static_cast<std::size_t>(r)].transpose() *
                        q[static_cast<std::size_t>(s)])
                           .squaredNorm() /
                       denom;
      if (overlap < best_overlap) continue;
      best_overlap = overlap;
      double nr = model.c.col(r).norm();
      double ns = model.c.col(s).norm();
      twin = ns <= nr ? s : r;
    }
  }
  return twin;
}

}  // namespace

Matrix gram_btb(const Model& model) {
  Index r = static_cast<Index>(model.bases.size());
  Matrix btb(r, r);
  for (Index i = 0; i < r; ++i) {
    for (Index j = i; j < r; ++j) {
      double v = (model.bases[static_cast<std::size_t>(i)].transpose() *
                  model.bases[static_cast<std::size_t>(j)])
                     .squaredNorm();
      btb(i, j) = v;
      btb(j, i) = v;
    }
  }
  return btb;
}

Matrix gram_pb(const ViewList& views, const Model& model) {
  Index k = static_cast<Index>(views.size());
  Index r = static_cast<Index>(model.bases.size());
  Matrix pb(k, r);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < r; ++j)
      pb(i, j) = (views[static_cast<std::size_t>(i)].transpose() *
                  model.bases[static_cast<std::size_t>(j)])
                     .squaredNorm();
  return pb;
}

double objective(const ViewList& views, const Model& model) {
  check_views(views);
  check_model(views, model);
  Grams grams = compute_grams(views, model);
  return fdata_from(grams, model.c);
}

Matrix update_g_eig(const ViewList& views, const Model& model, Index r) {
  check_views(views);
  check_model(views, model);
  SubproblemWeights w = subproblem_weights(model, r);
  Index n = views[0].rows();
  Index l = model.bases[static_cast<std::size_t>(r)].cols();
  Matrix work = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < views.size(); ++k) {
    double wk = w.view_w(static_cast<Index>(k));
    if (wk != 0.0)
      work.selfadjointView<Eigen::Lower>().rankUpdate(views[k], wk);
  }
  for (Index s = 0; s < static_cast<Index>(model.bases.size()); ++s) {
    if (s == r) continue;
    double vs = w.deflate_w(s);
    if (vs != 0.0)
      work.selfadjointView<Eigen::Lower>().rankUpdate(
          model.bases[static_cast<std::size_t>(s)], -vs);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(work);
  require(eig.info() == Eigen::Success, ErrorCode::Internal,
          "eigendecomposition failed");
  Matrix out(n, l);
  for (Index j = 0; j < l; ++j) out.col(j) = eig.eigenvectors().col(n - 1 - j);
  fix_basis_signs(out);
  return out;
}

Matrix update_g_orthiter(const ViewList& views, const Model& model, Index r,
                         int steps) {
  check_views(views);
  check_model(views, model);
  require(steps >= 1, ErrorCode::InvalidArgument, "steps must be positive");
  return update_g_orthiter_impl(nullptr, views, model, r, steps);
}

Matrix grad_g(const ViewList& views, const Model& model, Index r) {
  check_views(views);
  check_model(views, model);
  const Matrix& g_r = model.bases[static_cast<std::size_t>(r)];
  Matrix out = Matrix::Zero(g_r.rows(), g_r.cols());
  Vector cross = model.c.transpose() * model.c.col(r);
  for (Index s = 0; s < static_cast<Index>(model.bases.size()); ++s) {
    if (cross(s) == 0.0) continue;
    const Matrix& g_s = model.bases[static_cast<std::size_t>(s)];
    out.noalias() += cross(s) * (g_s * (g_s.transpose() * g_r));
  }
  for (std::size_t k = 0; k < views.size(); ++k) {
    double ck = model.c(static_cast<Index>(k), r);
    if (ck == 0.0) continue;
    out.noalias() -= ck * (views[k] * (views[k].transpose() * g_r));
  }
  return 2.0 * out;
}

Matrix normalize_columns(const Matrix& c) {
  Matrix out = c;
  for (Index j = 0; j < c.cols(); ++j) {
    double nrm = c.col(j).norm();
    out.col(j) /= std::max(nrm, kNormClamp);
  }
  return out;
}

double constraint_violation(const Matrix& c) {
  Matrix cn = normalize_columns(c);
  Matrix s = cn.transpose() * cn;
  s.diagonal().setZero();
  return s.norm();
}

std::vector<int> assign_labels(const Matrix& c) {
  std::vector<int> labels(static_cast<std::size_t>(c.rows()));
  for (Index i = 0; i < c.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < c.cols(); ++j)
      if (c(i, j) > c(i, best)) best = j;
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
  }
  return labels;
}

std::pair<double, Matrix> reg_value_and_grad(const Matrix& c,
                                             const DualState& dual,
                                             Formulation formulation,
                                             const SolverConfig& config) {
  Index r = c.cols();
  if (formulation != Formulation::Penalty) {
    require(dual.lambda.rows() == r && dual.lambda.cols() == r,
            ErrorCode::DimensionMismatch, "lambda must be R x R");
  }
  require(dual.rho >= 0.0 && std::isfinite(dual.rho),
          ErrorCode::InvalidArgument, "rho must be finite and nonnegative");

  switch (formulation) {
    case Formulation::Penalty: {
      Matrix s = c.transpose() * c;
      double value = 0.5 * dual.rho * (s.sum() - s.trace());
      Vector row_total = c.rowwise().sum();
      Matrix grad(c.rows(), r);
      for (Index j = 0; j < r; ++j)
        grad.col(j) = dual.rho * (row_total - c.col(j));
      return {value, grad};
    }
    case Formulation::AugLag: {
      Matrix s = c.transpose() * c;
      Matrix s_off = s;
      s_off.diagonal().setZero();
      double value = dual.lambda.cwiseProduct(s).sum() +
                     0.5 * dual.rho * s_off.squaredNorm();
      Matrix grad = 2.0 * c * dual.lambda + 2.0 * dual.rho * (c * s_off);
      return {value, grad};
    }
    case Formulation::AugLagPsi: {
      Matrix cn(c.rows(), r);
      Vector norms(r);
      for (Index j = 0; j < r; ++j) {
        norms(j) = c.col(j).norm();
        cn.col(j) = c.col(j) / std::max(norms(j), kNormClamp);
      }
      Matrix s = cn.transpose() * cn;
      Matrix psi = (s.array() + config.epsilon_psi).sqrt().matrix();
      Matrix psi_off = psi;
      psi_off.diagonal().setZero();
      double value = dual.lambda.cwiseProduct(psi).sum() +
                     0.5 * dual.rho * psi_off.squaredNorm();
      // d(phi)/d(S) through the elementwise square root.
      Matrix mid =
          (dual.lambda + dual.rho * psi_off).cwiseQuotient(2.0 * psi);
      Matrix grad_cn = 2.0 * cn * mid;
      Matrix grad(c.rows(), r);
      for (Index j = 0; j < r; ++j) {
        if (norms(j) > kNormClamp) {
          Vector gj = grad_cn.col(j);
          grad.col(j) =
              (gj - cn.col(j) * cn.col(j).dot(gj)) / norms(j);
        } else {
          grad.col(j) = grad_cn.col(j) / kNormClamp;
        }
      }
      return {value, grad};
    }
  }
  raise(ErrorCode::Internal, "unknown formulation");
}

void dual_update(const Matrix& c, DualState& dual, Formulation formulation,
                 const SolverConfig& config) {
  Index r = c.cols();
  if (dual.lambda.size() == 0) dual.lambda = Matrix::Zero(r, r);
  require(dual.lambda.rows() == r && dual.lambda.cols() == r,
          ErrorCode::DimensionMismatch, "lambda must be R x R");
  switch (formulation) {
    case Formulation::Penalty:
      break;
    case Formulation::AugLag: {
      Matrix s = c.transpose() * c;
      s.diagonal().setZero();
      dual.lambda += dual.rho * s;
      break;
    }
    case Formulation::AugLagPsi: {
      Matrix cn = normalize_columns(c);
      Matrix psi =
          ((cn.transpose() * cn).array() + config.epsilon_psi).sqrt().matrix();
      psi.diagonal().setZero();
      dual.lambda += dual.rho * psi;
      break;
    }
  }
  dual.rho *= config.alpha;
}

namespace {

class StandardRegularizer : public Regularizer {
 public:
  StandardRegularizer(Formulation formulation, DualState& dual,
                      const SolverConfig& config)
      : formulation_(formulation), dual_(dual), config_(config) {}

  std::pair<double, Matrix> value_and_grad(const Matrix& c) const override {
    return reg_value_and_grad(c, dual_, formulation_, config_);
  }

  void dual_step(const Matrix& c) override {
    dual_update(c, dual_, formulation_, config_);
  }

  double curvature_hint(const Matrix& c) const override {
    Index r = c.cols();
    switch (formulation_) {
      case Formulation::Penalty:
        return dual_.rho * static_cast<double>(r - 1);
      case Formulation::AugLag: {
        Matrix s = c.transpose() * c;
        s.diagonal().setZero();
        return 2.0 * dual_.lambda.norm() +
               2.0 * dual_.rho * (s.norm() + 2.0 * c.squaredNorm());
      }
      case Formulation::AugLagPsi:
        return dual_.lambda.norm() + dual_.rho * static_cast<double>(r) + 1.0;
    }
    return 1.0;
  }

 private:
  Formulation formulation_;
  DualState& dual_;
  const SolverConfig& config_;
};

Matrix update_c_impl(const Grams& grams, const Matrix& c_init,
                     const Regularizer& reg, const SolverConfig& config) {
  auto composite = [&](const Matrix& c) {
    return fdata_from(grams, c) + reg.value_and_grad(c).first;
  };
  auto gradient = [&](const Matrix& c) {
    Matrix g = c * grams.btb - grams.pb;
    g += reg.value_and_grad(c).second;
    return g;
  };

  double lip = lambda_max_estimate(grams.btb) + reg.curvature_hint(c_init);
  lip = std::max(lip, 1e-12);

  Matrix c_best = c_init;
  double f_best = composite(c_init);
  require(std::isfinite(f_best), ErrorCode::NonFiniteValue,
          "composite objective is not finite at the input");
  Matrix c_prev = c_init;
  Matrix y = c_init;
  double t = 1.0;
  double f_accept = f_best;
  const double stop_tol = std::max(1e-14, 0.01 * config.tol_rel);

  for (int it = 0; it < config.max_inner; ++it) {
    Matrix g = gradient(y);
    require(g.allFinite(), ErrorCode::NonFiniteValue,
            "gradient is not finite");
    Matrix cand = (y - g / lip).cwiseMax(0.0);
    double f_cand = composite(cand);
    if (!std::isfinite(f_cand) ||
        f_cand > f_accept + 1e-12 * std::max(1.0, std::abs(f_accept))) {
      // Objective increase: restart momentum from the best point and take
      // more conservative steps.
      lip *= 2.0;
      if (lip > 1e30) break;
      y = c_best;
      c_prev = c_best;
      t = 1.0;
      continue;
    }
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    // Projected extrapolation: the smoothed coupling term is only defined
    // on the nonnegative orthant.
    y = (cand + ((t - 1.0) / t_next) * (cand - c_prev)).cwiseMax(0.0);
    c_prev = cand;
    t = t_next;
    if (f_cand < f_best) {
      f_best = f_cand;
      c_best = cand;
    }
    if (std::abs(f_accept - f_cand) <=
        stop_tol * std::max(1.0, std::abs(f_cand))) {
      break;
    }
    f_accept = f_cand;
  }
  return c_best;
}

}  // namespace

std::unique_ptr<Regularizer> make_regularizer(Formulation formulation,
                                              DualState& dual,
                                              const SolverConfig& config) {
  return std::make_unique<StandardRegularizer>(formulation, dual, config);
}

Matrix update_c(const ViewList& views, const Model& model,
                const Regularizer& reg, const SolverConfig& config) {
  check_views(views);
  check_model(views, model);
  Grams grams = compute_grams(views, model);
  return update_c_impl(grams, model.c, reg, config);
}

Matrix update_c(const ViewList& views, const Model& model,
                const DualState& dual, const SolverConfig& config) {
  DualState scratch = dual;
  StandardRegularizer reg(config.formulation, scratch, config);
  return update_c(views, model, reg, config);
}

Vector view_fit_phi(const ViewList& views, const Model& model) {
  Model ortho = model.formulation == Formulation::AugLagPsi
                    ? extract_orthonormal(model)
                    : model;
  std::vector<int> labels = assign_labels(ortho.c);
  Vector phi(static_cast<Index>(views.size()));
  for (std::size_t k = 0; k < views.size(); ++k) {
    const Matrix& g =
        ortho.bases[static_cast<std::size_t>(labels[k] - 1)];
    double fit = (views[k].transpose() * g).squaredNorm() /
                 static_cast<double>(g.cols());
    phi(static_cast<Index>(k)) = std::clamp(1.0 - fit, 0.0, 1.0);
  }
  return phi;
}

Model extract_orthonormal(const Model& model) {
  Model out;
  out.c = model.c;
  out.formulation = model.formulation;
  for (const Matrix& g : model.bases) {
    Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeThinU);
    const Vector& s = svd.singularValues();
    double gate = 0.5 * s(0) * s(0);
    Index keep = 0;
    while (keep < s.size() && s(keep) * s(keep) > gate) ++keep;
    keep = std::max<Index>(keep, 1);
    Matrix q = svd.matrixU().leftCols(keep);
    fix_basis_signs(q);
    out.bases.push_back(std::move(q));
  }
  return out;
}

namespace {

// Cluster processing order determined by content, not index, so permuting
// cluster indices permutes the whole fit exactly.
std::vector<Index> content_order(const Matrix& c) {
  std::vector<Index> order(static_cast<std::size_t>(c.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<double> norms(order.size());
  for (std::size_t j = 0; j < order.size(); ++j)
    norms[j] = c.col(static_cast<Index>(j)).norm();
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    double na = norms[static_cast<std::size_t>(a)];
    double nb = norms[static_cast<std::size_t>(b)];
    if (na != nb) return na > nb;
    for (Index i = 0; i < c.rows(); ++i)
      if (c(i, a) != c(i, b)) return c(i, a) > c(i, b);
    return a < b;
  });
  return order;
}

void check_config(const SolverConfig& config) {
  require(config.rho0 >= 1e-6 && config.rho0 <= 1.0, ErrorCode::InvalidArgument,
          "rho0 must lie in [1e-6, 1]");
  require(config.alpha >= 1.0, ErrorCode::InvalidArgument,
          "alpha must be >= 1");
  require(config.epsilon_psi > 0.0, ErrorCode::InvalidArgument,
          "epsilon_psi must be positive");
  require(config.max_outer >= 1 && config.max_inner >= 1,
          ErrorCode::InvalidArgument, "iteration caps must be positive");
  require(config.tol_rel > 0.0, ErrorCode::InvalidArgument,
          "tol_rel must be positive");
  require(config.orthiter_steps >= 1, ErrorCode::InvalidArgument,
          "orthiter_steps must be positive");
}

// A few monotone backtracking descent steps on the basis of cluster r for
// the unconstrained formulation.
void descend_basis(const ViewList& views, Model& model, Index r,
                   const Grams* grams_hint) {
  (void)grams_hint;
  for (int step = 0; step < kUnconstrainedBasisSteps; ++step) {
    Matrix grad = grad_g(views, model, r);
    double g2 = grad.squaredNorm();
    if (g2 <= 1e-28) return;
    Vector cross = model.c.transpose() * model.c.col(r);
    double lip = 1e-12;
    for (Index s = 0; s < static_cast<Index>(model.bases.size()); ++s)
      lip += 2.0 * std::abs(cross(s)) *
             model.bases[static_cast<std::size_t>(s)].squaredNorm();
    lip += 2.0 * model.c.col(r).cwiseAbs().sum();
    double step_size = 1.0 / lip;
    double f0 = objective(views, model);
    Matrix g_old = model.bases[static_cast<std::size_t>(r)];
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      model.bases[static_cast<std::size_t>(r)] = g_old - step_size * grad;
      double f1 = objective(views, model);
      if (f1 <= f0 - 1e-4 * step_size * g2) {
        accepted = true;
        break;
      }
      step_size *= 0.5;
    }
    if (!accepted) {
      model.bases[static_cast<std::size_t>(r)] = g_old;
      return;
    }
  }
}

}  // namespace

FitResult fit(const ViewList& views, Index n_clusters,
              const std::vector<Index>& dims, const SolverConfig& config,
              const Model* init, Regularizer* custom_reg,
              DualState* custom_dual) {
  check_views(views);
  check_config(config);
  require(n_clusters >= 1, ErrorCode::InvalidArgument,
          "need at least one cluster");
  require(static_cast<Index>(dims.size()) == n_clusters,
          ErrorCode::LengthMismatch, "dims must have one entry per cluster");
  Index n = views[0].rows();
  Index k = static_cast<Index>(views.size());
  Index min_m = views[0].cols();
  for (const Matrix& u : views) {
    min_m = std::min(min_m, u.cols());
    require((u.transpose() * u - Matrix::Identity(u.cols(), u.cols()))
                    .cwiseAbs()
                    .maxCoeff() <= 1e-8,
            ErrorCode::InvalidArgument, "view bases must be orthonormal");
  }
  for (Index l : dims)
    require(l >= 1 && l <= min_m, ErrorCode::InvalidArgument,
            "cluster dimension must satisfy 1 <= L_r <= min_k M_k");

  Model model;
  model.formulation = config.formulation;
  if (init) {
    require(static_cast<Index>(init->bases.size()) == n_clusters &&
                init->c.rows() == k && init->c.cols() == n_clusters,
            ErrorCode::DimensionMismatch, "init model has wrong shape");
    for (Index r = 0; r < n_clusters; ++r)
      require(init->bases[static_cast<std::size_t>(r)].rows() == n &&
                  init->bases[static_cast<std::size_t>(r)].cols() ==
                      dims[static_cast<std::size_t>(r)],
              ErrorCode::DimensionMismatch, "init basis has wrong shape");
    require(init->c.minCoeff() >= 0.0, ErrorCode::InvalidArgument,
            "init C must be nonnegative");
    model.bases = init->bases;
    model.c = init->c;
  } else {
    Philox rng(config.seed);
    std::vector<Index> pool(static_cast<std::size_t>(k));
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index r = 0; r < n_clusters; ++r) {
      std::size_t j = static_cast<std::size_t>(r) +
                      static_cast<std::size_t>(rng.uniform_index(
                          static_cast<std::uint64_t>(k - r)));
      std::swap(pool[static_cast<std::size_t>(r)], pool[j]);
      model.bases.push_back(
          views[static_cast<std::size_t>(pool[static_cast<std::size_t>(r)])]
              .leftCols(dims[static_cast<std::size_t>(r)]));
    }
    model.c = rng.gaussian_matrix(k, n_clusters).cwiseAbs();
    for (Index j = 0; j < n_clusters; ++j) model.c.col(j).normalize();
  }

  DualState local_dual;
  local_dual.lambda = Matrix::Zero(n_clusters, n_clusters);
  local_dual.rho = config.rho0;
  DualState& dual = custom_dual ? *custom_dual : local_dual;
  if (custom_dual && dual.lambda.size() == 0) {
    dual.lambda = Matrix::Zero(n_clusters, n_clusters);
    dual.rho = config.rho0;
  }
  std::unique_ptr<Regularizer> standard;
  Regularizer* reg = custom_reg;
  if (!reg) {
    standard = make_regularizer(config.formulation, dual, config);
    reg = standard.get();
  }

  bool gradient_basis = config.formulation == Formulation::AugLagPsi;
  bool use_orthiter = config.g_update == GUpdate::OrthIter ||
                      (config.g_update == GUpdate::Auto &&
                       n > kOrthIterAutoCutoff);
  std::optional<StackedViews> stacked;
  if (!gradient_basis && use_orthiter) stacked = stack_views(views);

  FitTrace trace;
  double prev_fdata = std::numeric_limits<double>::infinity();
  Matrix prev_c = model.c;
  std::vector<Matrix> prev_bases = model.bases;
  bool have_prev = false;

  // Reseeds cluster r on the view with the worst fit under the current model.
  auto seed_from_worst = [&](Index r) {
    Vector phi = view_fit_phi(views, model);
    Index worst = 0;
    for (Index i = 1; i < k; ++i)
      if (phi(i) > phi(worst)) worst = i;
    model.c.col(r).setZero();
    model.c(worst, r) = 1.0;
    model.bases[static_cast<std::size_t>(r)] =
        views[static_cast<std::size_t>(worst)].leftCols(
            dims[static_cast<std::size_t>(r)]);
  };

  for (int outer = 1; outer <= config.max_outer; ++outer) {
    auto outer_start = std::chrono::steady_clock::now();
    std::vector<double> composites;
    Grams grams = compute_grams(views, model);
    composites.push_back(fdata_from(grams, model.c) +
                         reg->value_and_grad(model.c).first);

    // Alternating rounds of the current penalty subproblem; returns the final
    // composite. Dead-column reseeds break the descent chain, so each closes
    // the running monotone segment before continuing.
    auto solve_rounds = [&]() {
      double round_prev = composites.back();
      for (int round = 0; round < kMaxRoundsPerSubproblem; ++round) {
        bool restarted = false;
        for (Index r = 0; r < n_clusters; ++r) {
          if (model.c.col(r).norm() >= kDeadColumnNorm) continue;
          seed_from_worst(r);
          trace.restarts.emplace_back(outer, static_cast<int>(r));
          restarted = true;
        }
        if (restarted) {
          trace.round_composites.push_back(std::move(composites));
          composites.clear();
          Grams g2 = compute_grams(views, model);
          composites.push_back(fdata_from(g2, model.c) +
                               reg->value_and_grad(model.c).first);
          round_prev = composites.back();
        }

        std::vector<Index> order = content_order(model.c);
        for (Index r : order) {
          if (gradient_basis) {
            descend_basis(views, model, r, nullptr);
          } else if (use_orthiter) {
            model.bases[static_cast<std::size_t>(r)] = update_g_orthiter_impl(
                stacked ? &*stacked : nullptr, views, model, r,
                config.orthiter_steps);
          } else {
            model.bases[static_cast<std::size_t>(r)] =
                update_g_eig(views, model, r);
          }
        }
        grams = compute_grams(views, model);
        model.c = update_c_impl(grams, model.c, *reg, config);
        double comp = fdata_from(grams, model.c) +
                      reg->value_and_grad(model.c).first;
        composites.push_back(comp);
        double rel = std::abs(round_prev - comp) /
                     std::max(1.0, std::abs(round_prev));
        round_prev = comp;
        if (rel < config.tol_rel) break;
      }
      return round_prev;
    };

    double end_comp = solve_rounds();

    // Two basis blocks that collapse onto one subspace can lock the
    // alternation into a merged stationary point that strands every view of
    // an unclaimed cluster (their weight rows vanish, so no column ever goes
    // dead). Reseeding the weaker twin from the worst-fit view escapes that
    // trap; the reseed is kept only when the re-solved subproblem strictly
    // improves the composite, so benign overlap (e.g. over-modeled sweeps)
    // is left alone.
    Index twin = duplicate_twin(model);
    if (twin >= 0) {
      Model snapshot = model;
      Grams snap_grams = grams;
      std::vector<double> snap_composites = composites;
      std::size_t snap_restarts = trace.restarts.size();
      std::size_t snap_segments = trace.round_composites.size();
      seed_from_worst(twin);
      trace.round_composites.push_back(std::move(composites));
      composites.clear();
      grams = compute_grams(views, model);
      composites.push_back(fdata_from(grams, model.c) +
                           reg->value_and_grad(model.c).first);
      double cand = solve_rounds();
      if (cand < end_comp - 1e-12 * std::max(1.0, std::abs(end_comp))) {
        trace.restarts.insert(
            trace.restarts.begin() + static_cast<std::ptrdiff_t>(snap_restarts),
            {outer, static_cast<int>(twin)});
        end_comp = cand;
      } else {
        model = std::move(snapshot);
        grams = std::move(snap_grams);
        composites = std::move(snap_composites);
        trace.restarts.resize(snap_restarts);
        trace.round_composites.resize(snap_segments);
      }
    }

    double fdata_now = fdata_from(grams, model.c);
    double violation = constraint_violation(model.c);
    auto outer_end = std::chrono::steady_clock::now();
    double wall_ms =
        std::chrono::duration<double, std::milli>(outer_end - outer_start)
            .count();
    trace.rows.push_back({outer, dual.rho, end_comp, violation, wall_ms});
    trace.round_composites.push_back(std::move(composites));

    reg->dual_step(model.c);

    double factor_change = (model.c - prev_c).norm() / (1.0 + prev_c.norm());
    for (Index r = 0; r < n_clusters; ++r) {
      const Matrix& cur = model.bases[static_cast<std::size_t>(r)];
      const Matrix& old = prev_bases[static_cast<std::size_t>(r)];
      factor_change = std::max(
          factor_change, (cur - old).norm() / (1.0 + old.norm()));
    }
    double fdata_change = std::abs(fdata_now - prev_fdata) /
                          std::max(1.0, std::abs(prev_fdata));
    if (have_prev && fdata_change < config.tol_rel &&
        factor_change < config.tol_rel)
      break;
    prev_fdata = fdata_now;
    prev_c = model.c;
    prev_bases = model.bases;
    have_prev = true;
  }

  FitResult result;
  result.model = std::move(model);
  result.trace = std::move(trace);
  return result;
}

}  // namespace scos::solver
