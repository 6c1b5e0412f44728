#include "scos/select.hpp"

#include "scos/subspace.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace scos::select {

namespace {

constexpr double kEigenvalueFloorRel = 1e-12;
constexpr double kFlatSpectrumRel = 1e-9;
constexpr double kCurveFloor = 1e-8;

double wax_kailath_score(const Vector& lam, Index k, Index p, double n_snap,
                         double floor_value, bool mdl) {
  // Geometric and arithmetic means of the tail lam[k..p-1], floored so the
  // log stays finite on rank-deficient spectra.
  Index tail = p - k;
  double log_geo = 0.0;
  double arith = 0.0;
  for (Index i = k; i < p; ++i) {
    double v = std::max(lam(i), floor_value);
    log_geo += std::log(v);
    arith += v;
  }
  log_geo /= static_cast<double>(tail);
  arith /= static_cast<double>(tail);
  double log_ratio = std::log(arith) - log_geo;  // >= 0
  double kk = static_cast<double>(k);
  double pp = static_cast<double>(p);
  if (mdl)
    return n_snap * static_cast<double>(tail) * log_ratio +
           0.5 * kk * (2.0 * pp - kk) * std::log(std::max(n_snap, 2.0));
  return 2.0 * n_snap * static_cast<double>(tail) * log_ratio +
         2.0 * kk * (2.0 * pp - kk);
}

}  // namespace

FitQuality phi_metrics(const ViewList& views, const solver::Model& model) {
  FitQuality q;
  q.phi_per_view = solver::view_fit_phi(views, model);
  q.phi_bar = q.phi_per_view.mean();
  return q;
}

ClusterSpectrum cluster_spectrum(const ViewList& views,
                                 const std::vector<Index>& members,
                                 SpectrumBranch branch) {
  require(!members.empty(), ErrorCode::EmptyCluster,
          "cluster has no member views");
  require(!views.empty(), ErrorCode::InvalidArgument, "no views given");
  Index n = views[0].rows();
  Index stack_cols = 0;
  for (Index k : members) {
    require(k >= 0 && k < static_cast<Index>(views.size()),
            ErrorCode::InvalidArgument, "member index out of range");
    require(views[static_cast<std::size_t>(k)].rows() == n,
            ErrorCode::DimensionMismatch,
            "views disagree on the ambient dimension");
    stack_cols += views[static_cast<std::size_t>(k)].cols();
  }

  if (branch == SpectrumBranch::Auto)
    branch = (n > stack_cols * stack_cols) ? SpectrumBranch::SvdStack
                                           : SpectrumBranch::DenseEig;

  ClusterSpectrum out;
  if (branch == SpectrumBranch::SvdStack) {
    Matrix stack(n, stack_cols);
    Index at = 0;
    for (Index k : members) {
      const Matrix& u = views[static_cast<std::size_t>(k)];
      stack.middleCols(at, u.cols()) = u;
      at += u.cols();
    }
    Eigen::BDCSVD<Matrix> svd(stack, Eigen::ComputeThinU);
    out.eigenvalues = svd.singularValues().array().square().matrix();
    out.eigenvectors = svd.matrixU();
  } else {
    Matrix t = Matrix::Zero(n, n);
    for (Index k : members)
      t.selfadjointView<Eigen::Lower>().rankUpdate(
          views[static_cast<std::size_t>(k)], 1.0);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(t);
    require(eig.info() == Eigen::Success, ErrorCode::Internal,
            "eigendecomposition failed");
    out.eigenvalues = eig.eigenvalues().reverse();
    out.eigenvectors = eig.eigenvectors().rowwise().reverse();
  }
  out.eigenvalues = out.eigenvalues.cwiseMax(0.0);
  fix_basis_signs(out.eigenvectors);
  return out;
}

DimensionEstimate estimate_dims(const ViewList& views,
                                const std::vector<int>& labels,
                                DimCriterion criterion) {
  require(labels.size() == views.size(), ErrorCode::LengthMismatch,
          "one label per view required");
  int r_max = 0;
  for (int l : labels) {
    require(l >= 1, ErrorCode::InvalidArgument, "labels are 1-based");
    r_max = std::max(r_max, l);
  }
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(r_max));
  for (std::size_t k = 0; k < labels.size(); ++k)
    members[static_cast<std::size_t>(labels[k] - 1)].push_back(
        static_cast<Index>(k));
  for (const auto& m : members)
    require(!m.empty(), ErrorCode::EmptyCluster,
            "a cluster in 1..max(label) has no members");

  DimensionEstimate est;
  est.criterion = criterion;
  for (const auto& m : members) {
    ClusterSpectrum spec = cluster_spectrum(views, m);
    const Vector& lam = spec.eigenvalues;
    double floor_value = lam(0) * kEigenvalueFloorRel;
    Index p = 0;
    while (p < lam.size() && lam(p) > floor_value) ++p;
    require(p >= 1, ErrorCode::Internal, "cluster spectrum is all zero");

    Index dim = 0;
    bool flat = (lam(0) - lam(p - 1)) <= kFlatSpectrumRel * lam(0);
    if (flat || p == 1) {
      // No usable structure inside the positive support: fall back to the
      // numerical rank.
      dim = p;
    } else if (criterion == DimCriterion::EigenGap) {
      Index last = std::min(p + 1, lam.size());
      Index best = 1;
      double best_gap = -1.0;
      for (Index i = 1; i < last; ++i) {
        double gap = lam(i - 1) - lam(i);
        if (gap > best_gap) {
          best_gap = gap;
          best = i;
        }
      }
      dim = best;
    } else {
      // Snapshot count for the information criteria: every stacked basis
      // column is one observation of the cluster subspace.
      Index stack_cols = 0;
      for (Index k : m) stack_cols += views[static_cast<std::size_t>(k)].cols();
      double n_snap = static_cast<double>(stack_cols);
      bool mdl = criterion == DimCriterion::MDL;
      double best_score = std::numeric_limits<double>::infinity();
      for (Index k = 1; k < p; ++k) {
        double score = wax_kailath_score(lam, k, p, n_snap, floor_value, mdl);
        if (score < best_score) {
          best_score = score;
          dim = k;
        }
      }
    }
    est.per_cluster_dim.push_back(dim);
    est.per_cluster_basis.push_back(spec.eigenvectors.leftCols(dim));
    est.eigenvalues.push_back(lam);
    est.degenerate.push_back(flat || p == 1 ? 1 : 0);
  }
  return est;
}

OrderSelection select_num_clusters(const ViewList& views, Index r_max,
                                   Index uniform_dim,
                                   const SelectConfig& config) {
  require(r_max >= 2, ErrorCode::InvalidArgument, "r_max must be at least 2");
  require(!views.empty(), ErrorCode::InvalidArgument, "no views given");
  Index min_m = views[0].cols();
  for (const Matrix& u : views) min_m = std::min(min_m, u.cols());
  require(uniform_dim >= 1 && uniform_dim <= min_m, ErrorCode::InvalidArgument,
          "uniform dimension must satisfy 1 <= L <= min_k M_k");
  require(config.tau > 0.0 && config.tau < 1.0, ErrorCode::InvalidArgument,
          "tau must lie in (0, 1)");

  std::vector<double> curve;
  std::vector<solver::Model> models;
  for (Index r = 1; r <= r_max; ++r) {
    std::vector<Index> dims(static_cast<std::size_t>(r), uniform_dim);
    solver::FitResult fresh =
        solver::fit(views, r, dims, config.solver);
    double fresh_phi = phi_metrics(views, fresh.model).phi_bar;
    solver::Model chosen = std::move(fresh.model);
    double chosen_phi = fresh_phi;

    if (r >= 2) {
      // Warm candidate: previous solution plus one cluster seeded at the
      // worst-fitting view, with enough weight to claim it immediately.
      const solver::Model& prev = models.back();
      Vector phi = solver::view_fit_phi(views, prev);
      Index worst = 0;
      for (Index i = 1; i < phi.size(); ++i)
        if (phi(i) > phi(worst)) worst = i;
      solver::Model init;
      init.formulation = config.solver.formulation;
      init.bases = prev.bases;
      init.bases.push_back(
          views[static_cast<std::size_t>(worst)].leftCols(uniform_dim));
      init.c = Matrix::Zero(static_cast<Index>(views.size()), r);
      init.c.leftCols(r - 1) = prev.c;
      init.c(worst, r - 1) = 2.0 * prev.c.row(worst).maxCoeff() + 1.0;
      solver::FitResult warm =
          solver::fit(views, r, dims, config.solver, &init);
      double warm_phi = phi_metrics(views, warm.model).phi_bar;
      if (warm_phi < chosen_phi) {
        chosen = std::move(warm.model);
        chosen_phi = warm_phi;
      }
    }
    curve.push_back(chosen_phi);
    models.push_back(std::move(chosen));
  }

  Index r_star = r_max;
  for (Index r = 1; r < r_max; ++r) {
    double before = curve[static_cast<std::size_t>(r - 1)];
    double after = curve[static_cast<std::size_t>(r)];
    double drop = (before - after) / std::max(before, kCurveFloor);
    if (drop < config.tau) {
      r_star = r;
      break;
    }
  }

  OrderSelection out;
  out.r_star = r_star;
  out.curve = std::move(curve);
  out.model = std::move(models[static_cast<std::size_t>(r_star - 1)]);
  return out;
}

}  // namespace scos::select
