#ifndef SCOS_SUBSPACE_HPP
#define SCOS_SUBSPACE_HPP

#include "scos/types.hpp"

namespace scos {

// Orthonormal basis of col(X) via SVD. X must have full column rank: every
// singular value must exceed rank_tol times the largest. Column signs are
// fixed so the first entry of magnitude > 1e-12 in each column is positive.
Matrix orthonormal_basis(const Matrix& x, double rank_tol = 1e-10);

// In-place column sign fix shared by every routine that emits a basis.
void fix_basis_signs(Matrix& q);

// Orthonormal basis truncated to the numerical rank instead of erroring on
// rank deficiency (pipelines feed noiseless or flat inputs through this).
Matrix truncated_basis(const Matrix& x, double rank_tol = 1e-10,
                       Index* rank = nullptr);

// Principal angles between col(A) and col(B), both orthonormal. Returns
// min(cols(A), cols(B)) angles in [0, pi/2], non-decreasing. Cosines are the
// singular values of A^T B clamped to [0, 1].
Vector principal_angles(const Matrix& a, const Matrix& b);

// Squared chordal distance (p2 - p1)/2 + sum_i sin^2(theta_i) with
// p1 <= p2; equals half the squared Frobenius distance of the projectors.
double chordal_sq_distance(const Matrix& a, const Matrix& b);

}  // namespace scos

#endif
