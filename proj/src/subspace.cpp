#include "scos/subspace.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace scos {

void fix_basis_signs(Matrix& q) {
  for (Index j = 0; j < q.cols(); ++j) {
    Index lead = -1;
    for (Index i = 0; i < q.rows(); ++i) {
      if (std::abs(q(i, j)) > 1e-12) {
        lead = i;
        break;
      }
    }
    if (lead < 0) {
      Index dummy = 0;
      q.col(j).cwiseAbs().maxCoeff(&lead, &dummy);
    }
    if (q(lead, j) < 0) q.col(j) = -q.col(j);
  }
}

Matrix orthonormal_basis(const Matrix& x, double rank_tol) {
  require(x.rows() > 0 && x.cols() > 0, ErrorCode::InvalidArgument,
          "orthonormal_basis needs a nonempty matrix");
  require(x.cols() <= x.rows(), ErrorCode::InvalidArgument,
          "orthonormal_basis needs rows >= cols");
  require(x.allFinite(), ErrorCode::NonFiniteValue,
          "orthonormal_basis input has nonfinite entries");
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  double smax = s(0);
  require(smax > 0.0 && s(x.cols() - 1) > rank_tol * smax,
          ErrorCode::RankDeficient,
          "column rank below requested width");
  Matrix q = svd.matrixU();
  fix_basis_signs(q);
  return q;
}

Matrix truncated_basis(const Matrix& x, double rank_tol, Index* rank) {
  require(x.rows() > 0 && x.cols() > 0, ErrorCode::InvalidArgument,
          "truncated_basis needs a nonempty matrix");
  require(x.allFinite(), ErrorCode::NonFiniteValue,
          "truncated_basis input has nonfinite entries");
  Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  double smax = s(0);
  Index r = 0;
  while (r < s.size() && s(r) > rank_tol * smax) ++r;
  require(r > 0, ErrorCode::RankDeficient, "input has numerical rank zero");
  Matrix q = svd.matrixU().leftCols(r);
  fix_basis_signs(q);
  if (rank) *rank = r;
  return q;
}

Vector principal_angles(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), ErrorCode::DimensionMismatch,
          "bases live in different ambient dimensions");
  Matrix cross = a.transpose() * b;
  Eigen::JacobiSVD<Matrix> svd(cross);
  Vector s = svd.singularValues();
  Vector angles(s.size());
  for (Index i = 0; i < s.size(); ++i)
    angles[i] = std::acos(std::clamp(s[i], 0.0, 1.0));
  return angles;
}

double chordal_sq_distance(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), ErrorCode::DimensionMismatch,
          "bases live in different ambient dimensions");
  double p1 = static_cast<double>(std::min(a.cols(), b.cols()));
  double p2 = static_cast<double>(std::max(a.cols(), b.cols()));
  double cross = (a.transpose() * b).squaredNorm();
  return std::max(0.0, 0.5 * (p1 + p2) - cross);
}

}  // namespace scos
