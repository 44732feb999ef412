#pragma once

#include <cstdint>
#include <vector>

#include "core/matrix.hpp"

namespace frugal {

// Tall matrix with orthonormal columns, max |Q^T Q - I| <= 1e-10.
// Construction validates the invariant.
class OrthoBasis {
public:
    explicit OrthoBasis(Matrix q);

    long ambient_dim() const { return q_.rows(); }
    long rank() const { return q_.cols(); }
    const Matrix& matrix() const { return q_; }

private:
    Matrix q_;
};

struct SvdTruncation {
    OrthoBasis u;                 // n x r
    std::vector<double> values;   // r singular values, non-increasing, >= 0
    OrthoBasis v;                 // m x r
};

double ortho_defect(const Matrix& q);

// Rank-r truncated SVD by one-sided Jacobi on the smaller Gram side.
// Rank-deficient inputs are padded with standard basis vectors orthogonal
// to the computed range; each U column has its largest-magnitude entry
// forced non-negative.
SvdTruncation truncated_svd(const Matrix& a, long r);

// Deterministic random semi-orthogonal basis: Gaussian fill from `seed`,
// then Gram-Schmidt with a re-orthogonalization pass.
OrthoBasis random_semi_orthogonal(std::uint64_t seed, long n, long r);

// Cosines of the principal angles between the column spans: the singular
// values of P^T Q, sorted non-increasing, length min(rank(P), rank(Q)).
std::vector<double> principal_angle_cosines(const OrthoBasis& p, const OrthoBasis& q);

// Singular values of an arbitrary matrix, non-increasing.
std::vector<double> singular_values(const Matrix& a);

}  // namespace frugal
