#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace mirrorsym {

// Dense row-major matrix of doubles. Small sizes only (desk scale, <= a few
// thousand rows); no attempt at blocking or vectorization beyond what the
// compiler does on its own.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& entries() const { return data_; }

    std::vector<double> col(std::size_t j) const;
    void set_col(std::size_t j, const std::vector<double>& v);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
std::vector<double> operator*(const Matrix& a, const std::vector<double>& v);

Matrix transpose(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool all_finite(const Matrix& a);

// Full-precision decimal form of a double (%.17g); round-trips exactly.
// All text output in the project goes through this so files are byte-stable.
std::string g17(double v);

// Text form used for inspection dumps: one row per line, space-separated
// decimals with full double precision.
std::string matrix_to_text(const Matrix& a);
Matrix matrix_from_text(const std::string& text);

}  // namespace mirrorsym
