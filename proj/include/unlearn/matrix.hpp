#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace unlearn {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) {
        assert(r < rows && c < cols);
        return data[r * cols + c];
    }
    double operator()(std::size_t r, std::size_t c) const {
        assert(r < rows && c < cols);
        return data[r * cols + c];
    }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool empty() const noexcept { return rows == 0; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Gathers the listed rows of `m` into a new matrix.
inline Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), m.cols);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        auto src = m.row(idx[i]);
        auto dst = out.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) dst[j] = src[j];
    }
    return out;
}

}  // namespace unlearn
