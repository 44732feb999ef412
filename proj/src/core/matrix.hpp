#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace frugal {

// Dense row-major matrix of doubles. The one tensor type used for
// parameters, gradients and projector bases. Empty (0x0) matrices are
// legal and stand for "no coordinates", e.g. the projected gradient of an
// empty projector.
class Matrix {
public:
    Matrix() = default;
    Matrix(long rows, long cols);
    Matrix(long rows, long cols, std::vector<double> data);

    static Matrix zeros(long rows, long cols) { return Matrix(rows, cols); }
    static Matrix identity(long n);
    static Matrix from_rows(const std::vector<std::vector<double>>& rows);
    static Matrix column(const std::vector<double>& values);

    long rows() const { return rows_; }
    long cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(long r, long c) { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
    double operator()(long r, long c) const { return data_[static_cast<std::size_t>(r * cols_ + c)]; }
    double& at_flat(std::size_t i) { return data_[i]; }
    double at_flat(std::size_t i) const { return data_[i]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }
    bool all_finite() const;

    Matrix transposed() const;

private:
    long rows_ = 0;
    long cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b without forming the transpose.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
// a * b^T without forming the transpose.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

double dot(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);

// Throws ParameterError on shape mismatch, with `what` in the message.
void require_same_shape(const Matrix& a, const Matrix& b, const std::string& what);
// Throws DataError if any entry is NaN/Inf.
void require_finite(const Matrix& a, const std::string& what);

}  // namespace frugal
