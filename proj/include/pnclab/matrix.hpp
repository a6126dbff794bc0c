#pragma once

#include <vector>

namespace pnclab {

// Dense 2-D array of doubles, row-major. Rows are samples of a batch,
// columns are features. This is the one tensor type of the whole engine.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0);

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return data.size(); }
    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }

    bool all_finite() const;
};

Matrix matmul(const Matrix& a, const Matrix& b);     // a (m x k) * b (k x n)
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T (k x m)^T * b -> (k-cols of a) x n
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T

Matrix add(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
void add_in_place(Matrix& a, const Matrix& b);
void axpy_in_place(Matrix& a, double s, const Matrix& b);  // a += s*b

// Sum of entrywise products (Frobenius inner product).
double dot(const Matrix& a, const Matrix& b);

// Mean over rows of the per-row squared norm.
double mean_row_power(const Matrix& m);

// dst[:, dst_col .. dst_col+src.cols) = src
void copy_block(Matrix& dst, int dst_col, const Matrix& src);
// Extract src[:, col .. col+width) as its own matrix.
Matrix take_block(const Matrix& src, int col, int width);
// dst += src[:, col .. col+width), shapes checked.
void add_block_into(Matrix& dst, const Matrix& src, int col, int width);

Matrix vstack(const Matrix& top, const Matrix& bottom);

}  // namespace pnclab
