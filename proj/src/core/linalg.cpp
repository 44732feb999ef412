#include "core/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace frugal {

namespace {

constexpr double kOrthoTol = 1e-10;

// One-sided Jacobi: rotates column pairs of W until all pairs are
// numerically orthogonal, accumulating the rotations in V. On return the
// columns of W are S_j * u_j and V holds right singular vectors. W must
// have rows >= cols.
void one_sided_jacobi(Matrix& w, Matrix& v) {
    const long n = w.cols();
    const long m = w.rows();
    const double eps = 1e-15;
    const int max_sweeps = 60;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool converged = true;
        for (long p = 0; p < n; ++p) {
            for (long q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (long i = 0; i < m; ++i) {
                    app += w(i, p) * w(i, p);
                    aqq += w(i, q) * w(i, q);
                    apq += w(i, p) * w(i, q);
                }
                if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
                converged = false;
                double tau = (aqq - app) / (2.0 * apq);
                double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = t * c;
                for (long i = 0; i < m; ++i) {
                    double wp = w(i, p), wq = w(i, q);
                    w(i, p) = c * wp - s * wq;
                    w(i, q) = s * wp + c * wq;
                }
                for (long i = 0; i < n; ++i) {
                    double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (converged) break;
    }
}

struct ThinSvd {
    Matrix u;  // rows x k
    std::vector<double> s;
    Matrix v;  // cols x k
};

// Appends standard basis vectors orthogonal to the existing columns of q
// until q has `want` columns. Used for rank-deficient inputs.
void pad_with_standard_basis(Matrix& q, long want) {
    const long n = q.rows();
    long have = q.cols();
    if (have >= want) return;
    Matrix out(n, want);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < have; ++j) out(i, j) = q(i, j);
    for (long e = 0; e < n && have < want; ++e) {
        std::vector<double> cand(static_cast<std::size_t>(n), 0.0);
        cand[static_cast<std::size_t>(e)] = 1.0;
        // Project out the accepted columns, twice for accuracy.
        for (int pass = 0; pass < 2; ++pass) {
            for (long j = 0; j < have; ++j) {
                double proj = 0.0;
                for (long i = 0; i < n; ++i) proj += out(i, j) * cand[static_cast<std::size_t>(i)];
                for (long i = 0; i < n; ++i) cand[static_cast<std::size_t>(i)] -= proj * out(i, j);
            }
        }
        double norm = 0.0;
        for (double x : cand) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 0.5) continue;  // e_i already (nearly) in the span
        for (long i = 0; i < n; ++i) out(i, have) = cand[static_cast<std::size_t>(i)] / norm;
        ++have;
    }
    if (have < want) throw ParameterError("svd padding failed to complete a basis");
    q = std::move(out);
}

ThinSvd thin_svd(const Matrix& a) {
    const bool transposed = a.rows() < a.cols();
    Matrix w = transposed ? a.transposed() : a;
    const long m = w.rows();
    const long n = w.cols();
    Matrix v = Matrix::identity(n);
    one_sided_jacobi(w, v);

    std::vector<double> s(static_cast<std::size_t>(n));
    for (long j = 0; j < n; ++j) {
        double norm = 0.0;
        for (long i = 0; i < m; ++i) norm += w(i, j) * w(i, j);
        s[static_cast<std::size_t>(j)] = std::sqrt(norm);
    }

    std::vector<long> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](long i, long j) { return s[static_cast<std::size_t>(i)] > s[static_cast<std::size_t>(j)]; });

    // Scale cutoff below which a column is treated as numerically zero.
    double smax = s.empty() ? 0.0 : s[static_cast<std::size_t>(order[0])];
    double cutoff = smax * 1e-13;

    Matrix u_full(m, n);
    Matrix v_full(n, n);
    std::vector<double> s_sorted(static_cast<std::size_t>(n));
    long valid = 0;
    for (long j = 0; j < n; ++j) {
        long src = order[static_cast<std::size_t>(j)];
        double sj = s[static_cast<std::size_t>(src)];
        s_sorted[static_cast<std::size_t>(j)] = sj;
        for (long i = 0; i < n; ++i) v_full(i, j) = v(i, src);
        if (sj > cutoff && sj > 0.0) {
            for (long i = 0; i < m; ++i) u_full(i, j) = w(i, src) / sj;
            ++valid;
        } else {
            s_sorted[static_cast<std::size_t>(j)] = 0.0;
        }
    }

    if (valid < n) {
        // Keep the valid left singular vectors; complete with standard basis.
        Matrix u_valid(m, valid);
        for (long i = 0; i < m; ++i)
            for (long j = 0; j < valid; ++j) u_valid(i, j) = u_full(i, j);
        pad_with_standard_basis(u_valid, n);
        u_full = std::move(u_valid);
    }

    ThinSvd out{std::move(u_full), std::move(s_sorted), std::move(v_full)};
    if (transposed) std::swap(out.u, out.v);
    return out;
}

// Largest-magnitude entry of each U column made non-negative (ties by
// first index); V flips along to keep A = U S V^T.
void fix_signs(Matrix& u, Matrix& v) {
    for (long j = 0; j < u.cols(); ++j) {
        long arg = 0;
        double best = -1.0;
        for (long i = 0; i < u.rows(); ++i) {
            double a = std::abs(u(i, j));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (u(arg, j) < 0.0) {
            for (long i = 0; i < u.rows(); ++i) u(i, j) = -u(i, j);
            if (j < v.cols())
                for (long i = 0; i < v.rows(); ++i) v(i, j) = -v(i, j);
        }
    }
}

}  // namespace

OrthoBasis::OrthoBasis(Matrix q) : q_(std::move(q)) {
    if (q_.cols() > q_.rows()) throw ParameterError("OrthoBasis: rank exceeds ambient dimension");
    require_finite(q_, "OrthoBasis");
    if (ortho_defect(q_) > kOrthoTol) throw ParameterError("OrthoBasis: columns not orthonormal");
}

double ortho_defect(const Matrix& q) {
    Matrix gram = matmul_at_b(q, q);
    for (long i = 0; i < gram.rows(); ++i) gram(i, i) -= 1.0;
    return max_abs(gram);
}

SvdTruncation truncated_svd(const Matrix& a, long r) {
    if (r < 1 || r > std::min(a.rows(), a.cols())) throw ParameterError("truncated_svd: rank out of range");
    require_finite(a, "truncated_svd");

    ThinSvd full = thin_svd(a);
    fix_signs(full.u, full.v);

    Matrix u(a.rows(), r);
    Matrix v(a.cols(), r);
    std::vector<double> s(static_cast<std::size_t>(r));
    for (long j = 0; j < r; ++j) {
        s[static_cast<std::size_t>(j)] = full.s[static_cast<std::size_t>(j)];
        for (long i = 0; i < a.rows(); ++i) u(i, j) = full.u(i, j);
        for (long i = 0; i < a.cols(); ++i) v(i, j) = full.v(i, j);
    }
    return SvdTruncation{OrthoBasis(std::move(u)), std::move(s), OrthoBasis(std::move(v))};
}

OrthoBasis random_semi_orthogonal(std::uint64_t seed, long n, long r) {
    if (r < 1 || r > n) throw ParameterError("random_semi_orthogonal: rank out of range");
    Rng rng(seed);
    Matrix q(n, r);
    for (long j = 0; j < r; ++j) {
        for (long i = 0; i < n; ++i) q(i, j) = rng.normal();
        // Modified Gram-Schmidt with one re-orthogonalization pass.
        for (int pass = 0; pass < 2; ++pass) {
            for (long k = 0; k < j; ++k) {
                double proj = 0.0;
                for (long i = 0; i < n; ++i) proj += q(i, k) * q(i, j);
                for (long i = 0; i < n; ++i) q(i, j) -= proj * q(i, k);
            }
        }
        double norm = 0.0;
        for (long i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
        norm = std::sqrt(norm);
        if (norm < 1e-8) {
            // Degenerate draw; redraw this column deterministically.
            --j;
            continue;
        }
        for (long i = 0; i < n; ++i) q(i, j) /= norm;
    }
    return OrthoBasis(std::move(q));
}

std::vector<double> principal_angle_cosines(const OrthoBasis& p, const OrthoBasis& q) {
    if (p.ambient_dim() != q.ambient_dim())
        throw ParameterError("principal_angle_cosines: ambient dimensions differ");
    Matrix overlap = matmul_at_b(p.matrix(), q.matrix());
    return singular_values(overlap);
}

std::vector<double> singular_values(const Matrix& a) {
    require_finite(a, "singular_values");
    if (a.empty()) return {};
    ThinSvd full = thin_svd(a);
    return full.s;
}

}  // namespace frugal
