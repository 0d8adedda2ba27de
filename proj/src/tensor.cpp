#include "operon/tensor.hpp"

#include <cblas.h>

#include <cmath>
#include <stdexcept>

namespace operon {

Tensor2 Tensor2::identity(std::size_t n) {
    Tensor2 t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

Tensor2 Tensor2::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r > 0 ? rows.begin()->size() : 0;
    Tensor2 t(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw std::invalid_argument("ragged initializer for Tensor2");
        std::size_t j = 0;
        for (double v : row) t(i, j++) = v;
        ++i;
    }
    return t;
}

void Tensor2::fill(double v) {
    for (double& x : data_) x = v;
}

bool Tensor2::all_finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string Tensor2::shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

namespace {

void check_inner(const Tensor2& a, const Tensor2& b, std::size_t ak, std::size_t bk,
                 const char* what) {
    if (ak != bk) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch " +
                                    a.shape_string() + " vs " + b.shape_string());
    }
}

void dgemm(bool trans_a, bool trans_b, const Tensor2& a, const Tensor2& b, Tensor2& c,
           double beta) {
    const std::size_t m = c.rows();
    const std::size_t n = c.cols();
    const std::size_t k = trans_a ? a.rows() : a.cols();
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
                trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), 1.0, a.data(), static_cast<int>(a.cols()), b.data(),
                static_cast<int>(b.cols()), beta, c.data(), static_cast<int>(c.cols()));
}

}  // namespace

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
    check_inner(a, b, a.cols(), b.rows(), "matmul");
    Tensor2 c(a.rows(), b.cols());
    if (c.size() != 0 && a.cols() != 0) dgemm(false, false, a, b, c, 0.0);
    return c;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
    check_inner(a, b, a.cols(), b.cols(), "matmul_nt");
    Tensor2 c(a.rows(), b.rows());
    if (c.size() != 0 && a.cols() != 0) dgemm(false, true, a, b, c, 0.0);
    return c;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
    check_inner(a, b, a.rows(), b.rows(), "matmul_tn");
    Tensor2 c(a.cols(), b.cols());
    if (c.size() != 0 && a.rows() != 0) dgemm(true, false, a, b, c, 0.0);
    return c;
}

void matmul_accumulate(const Tensor2& a, const Tensor2& b, Tensor2& c) {
    check_inner(a, b, a.cols(), b.rows(), "matmul_accumulate");
    if (c.rows() != a.rows() || c.cols() != b.cols()) {
        throw std::invalid_argument("matmul_accumulate: output shape " + c.shape_string() +
                                    " does not match " + a.shape_string() + " * " +
                                    b.shape_string());
    }
    if (c.size() != 0 && a.cols() != 0) dgemm(false, false, a, b, c, 1.0);
}

Tensor2 hstack(const std::vector<const Tensor2*>& parts) {
    if (parts.empty()) return {};
    const std::size_t rows = parts.front()->rows();
    std::size_t cols = 0;
    for (const Tensor2* p : parts) {
        if (p->rows() != rows) {
            throw std::invalid_argument("hstack: row count mismatch " + p->shape_string());
        }
        cols += p->cols();
    }
    Tensor2 out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        double* dst = out.row(i);
        for (const Tensor2* p : parts) {
            const double* src = p->row(i);
            for (std::size_t j = 0; j < p->cols(); ++j) *dst++ = src[j];
        }
    }
    return out;
}

}  // namespace operon
