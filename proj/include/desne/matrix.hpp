#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace desne {

// Dense row-major matrix of doubles. Rows are samples unless stated
// otherwise. Deliberately minimal: the pipeline needs contiguous storage,
// row views and equality, nothing more.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        Matrix m;
        m.rows_ = rows.size();
        m.cols_ = rows.size() ? rows.begin()->size() : 0;
        m.v_.reserve(m.rows_ * m.cols_);
        for (const auto& r : rows) {
            for (double x : r) m.v_.push_back(x);
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return v_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return v_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return v_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {v_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {v_.data() + i * cols_, cols_}; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    const std::vector<double>& values() const { return v_; }

    bool all_finite() const {
        for (double x : v_) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> v_;
};

} // namespace desne
