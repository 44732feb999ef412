#include "core/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "core/errors.hpp"

namespace frugal {

Matrix::Matrix(long rows, long cols) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0) throw ParameterError("Matrix: negative dimension");
    data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
}

Matrix::Matrix(long rows, long cols, std::vector<double> data) : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows < 0 || cols < 0) throw ParameterError("Matrix: negative dimension");
    if (data_.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
        throw ParameterError("Matrix: data length does not match rows*cols");
}

Matrix Matrix::identity(long n) {
    Matrix m(n, n);
    for (long i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return Matrix();
    long r = static_cast<long>(rows.size());
    long c = static_cast<long>(rows.front().size());
    Matrix m(r, c);
    for (long i = 0; i < r; ++i) {
        if (static_cast<long>(rows[static_cast<std::size_t>(i)].size()) != c)
            throw ParameterError("Matrix::from_rows: ragged rows");
        for (long j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return m;
}

Matrix Matrix::column(const std::vector<double>& values) {
    Matrix m(static_cast<long>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) m.at_flat(i) = values[i];
    return m;
}

bool Matrix::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (long i = 0; i < rows_; ++i)
        for (long j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "operator+");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.at_flat(i) += b.at_flat(i);
    return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "operator-");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.at_flat(i) -= b.at_flat(i);
    return out;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.at_flat(i) *= s;
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ParameterError("matmul: inner dimensions differ");
    Matrix out(a.rows(), b.cols());
    for (long i = 0; i < a.rows(); ++i)
        for (long k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (long j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    return out;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ParameterError("matmul_at_b: row counts differ");
    Matrix out(a.cols(), b.cols());
    for (long k = 0; k < a.rows(); ++k)
        for (long i = 0; i < a.cols(); ++i) {
            double aki = a(k, i);
            if (aki == 0.0) continue;
            for (long j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
        }
    return out;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw ParameterError("matmul_a_bt: column counts differ");
    Matrix out(a.rows(), b.rows());
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < b.rows(); ++j) {
            double s = 0.0;
            for (long k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
            out(i, j) = s;
        }
    return out;
}

double dot(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.at_flat(i) * b.at_flat(i);
    return s;
}

double frobenius_norm(const Matrix& a) { return std::sqrt(dot(a, a)); }

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.at_flat(i)));
    return m;
}

void require_same_shape(const Matrix& a, const Matrix& b, const std::string& what) {
    if (!a.same_shape(b))
        throw ParameterError(what + ": shape mismatch (" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
}

void require_finite(const Matrix& a, const std::string& what) {
    if (!a.all_finite()) throw DataError(what + ": non-finite entries");
}

}  // namespace frugal
