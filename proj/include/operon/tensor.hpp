#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace operon {

/// Dense row-major matrix of doubles. The single numeric carrier for
/// network weights, activations and batched data.
class Tensor2 {
  public:
    Tensor2() = default;
    Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Tensor2 identity(std::size_t n);
    static Tensor2 from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    void fill(double v);
    void set_zero() { fill(0.0); }
    bool all_finite() const;
    std::string shape_string() const;

    bool operator==(const Tensor2& other) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// a (r×k) times b (k×c); throws std::invalid_argument on shape mismatch.
Tensor2 matmul(const Tensor2& a, const Tensor2& b);
/// a (r×k) times b^T where b is (c×k).
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
/// a^T (k×r -> r×k) times b (k×c) -> (r_a_cols × c).
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);

/// c += a * b without allocating.
void matmul_accumulate(const Tensor2& a, const Tensor2& b, Tensor2& c);

Tensor2 hstack(const std::vector<const Tensor2*>& parts);

}  // namespace operon
