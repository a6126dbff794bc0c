#include "pnclab/matrix.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "pnclab/errors.hpp"

namespace pnclab {

namespace {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenRowMajor>;
using MutMap = Eigen::Map<EigenRowMajor>;

ConstMap map_of(const Matrix& m) { return ConstMap(m.data.data(), m.rows, m.cols); }

void require_shape_match(const Matrix& a, const Matrix& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ConfigError(std::string(what) + ": shape mismatch (" +
                          std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                          " vs " + std::to_string(b.rows) + "x" +
                          std::to_string(b.cols) + ")");
    }
}

}  // namespace

Matrix::Matrix(int r, int c, double fill) : rows(r), cols(c) {
    if (r < 0 || c < 0) throw ConfigError("matrix dimensions must be non-negative");
    data.assign(static_cast<size_t>(r) * c, fill);
}

bool Matrix::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw ConfigError("matmul: inner dimensions differ (" + std::to_string(a.cols) +
                          " vs " + std::to_string(b.rows) + ")");
    }
    Matrix out(a.rows, b.cols);
    MutMap(out.data.data(), out.rows, out.cols).noalias() = map_of(a) * map_of(b);
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows) {
        throw ConfigError("matmul_tn: row counts differ");
    }
    Matrix out(a.cols, b.cols);
    MutMap(out.data.data(), out.rows, out.cols).noalias() =
        map_of(a).transpose() * map_of(b);
    return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols) {
        throw ConfigError("matmul_nt: column counts differ");
    }
    Matrix out(a.rows, b.rows);
    MutMap(out.data.data(), out.rows, out.cols).noalias() =
        map_of(a) * map_of(b).transpose();
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_shape_match(a, b, "add");
    Matrix out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Matrix scale(const Matrix& a, double s) {
    Matrix out = a;
    for (double& v : out.data) v *= s;
    return out;
}

void add_in_place(Matrix& a, const Matrix& b) {
    require_shape_match(a, b, "add_in_place");
    for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void axpy_in_place(Matrix& a, double s, const Matrix& b) {
    require_shape_match(a, b, "axpy_in_place");
    for (size_t i = 0; i < a.data.size(); ++i) a.data[i] += s * b.data[i];
}

double dot(const Matrix& a, const Matrix& b) {
    require_shape_match(a, b, "dot");
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
    return acc;
}

double mean_row_power(const Matrix& m) {
    if (m.rows == 0) throw ConfigError("mean_row_power: empty matrix");
    double acc = 0.0;
    for (double v : m.data) acc += v * v;
    return acc / m.rows;
}

void copy_block(Matrix& dst, int dst_col, const Matrix& src) {
    if (dst.rows != src.rows || dst_col + src.cols > dst.cols) {
        throw ConfigError("copy_block: block does not fit");
    }
    for (int r = 0; r < src.rows; ++r) {
        for (int c = 0; c < src.cols; ++c) {
            dst.at(r, dst_col + c) = src.at(r, c);
        }
    }
}

Matrix take_block(const Matrix& src, int col, int width) {
    if (col < 0 || col + width > src.cols) {
        throw ConfigError("take_block: block out of range");
    }
    Matrix out(src.rows, width);
    for (int r = 0; r < src.rows; ++r) {
        for (int c = 0; c < width; ++c) {
            out.at(r, c) = src.at(r, col + c);
        }
    }
    return out;
}

void add_block_into(Matrix& dst, const Matrix& src, int col, int width) {
    if (dst.rows != src.rows || dst.cols != width || col + width > src.cols) {
        throw ConfigError("add_block_into: block does not fit");
    }
    for (int r = 0; r < src.rows; ++r) {
        for (int c = 0; c < width; ++c) {
            dst.at(r, c) += src.at(r, col + c);
        }
    }
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
    if (top.cols != bottom.cols) throw ConfigError("vstack: column counts differ");
    Matrix out(top.rows + bottom.rows, top.cols);
    std::copy(top.data.begin(), top.data.end(), out.data.begin());
    std::copy(bottom.data.begin(), bottom.data.end(),
              out.data.begin() + static_cast<long>(top.data.size()));
    return out;
}

}  // namespace pnclab
