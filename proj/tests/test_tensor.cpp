#include <doctest.h>

#include <limits>
#include <random>
#include <stdexcept>

#include "operon/tensor.hpp"

using operon::Tensor2;

namespace {

// naive triple-loop reference, kept independent of the library path
Tensor2 matmul_reference(const Tensor2& a, const Tensor2& b) {
    Tensor2 c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    }
    return c;
}

Tensor2 random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Tensor2 t(rows, cols);
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
    return t;
}

Tensor2 transpose(const Tensor2& a) {
    Tensor2 t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    }
    return t;
}

}  // namespace

TEST_CASE("matmul identity") {
    const Tensor2 a = Tensor2::from_rows({{1, 2}, {3, 4}});
    const Tensor2 c = matmul(a, Tensor2::identity(2));
    CHECK(c == a);
}

TEST_CASE("matmul hand arithmetic") {
    const Tensor2 a = Tensor2::from_rows({{1, 2}});
    const Tensor2 b = Tensor2::from_rows({{3}, {4}});
    const Tensor2 c = matmul(a, b);
    CHECK(c.rows() == 1);
    CHECK(c.cols() == 1);
    CHECK(c(0, 0) == 11.0);
}

TEST_CASE("matmul matches triple-loop reference") {
    std::mt19937_64 rng(42);
    const Tensor2 a = random_tensor(7, 5, rng);
    const Tensor2 b = random_tensor(5, 3, rng);
    const Tensor2 c = matmul(a, b);
    const Tensor2 ref = matmul_reference(a, b);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(std::abs(c.data()[i] - ref.data()[i]) < 1e-12);
    }
}

TEST_CASE("matmul shape mismatch reports both shapes") {
    const Tensor2 a(2, 3);
    const Tensor2 b(4, 2);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("4x2"), std::invalid_argument);
}

TEST_CASE("matmul associativity on random 4x4") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor2 a = random_tensor(4, 4, rng);
        const Tensor2 b = random_tensor(4, 4, rng);
        const Tensor2 c = random_tensor(4, 4, rng);
        const Tensor2 left = matmul(matmul(a, b), c);
        const Tensor2 right = matmul(a, matmul(b, c));
        for (std::size_t i = 0; i < left.size(); ++i) {
            CHECK(std::abs(left.data()[i] - right.data()[i]) < 1e-10);
        }
    }
}

TEST_CASE("matmul_nt matches reference against explicit transpose") {
    std::mt19937_64 rng(3);
    const Tensor2 a = random_tensor(6, 4, rng);
    const Tensor2 b = random_tensor(5, 4, rng);
    const Tensor2 nt = matmul_nt(a, b);
    const Tensor2 ref = matmul_reference(a, transpose(b));
    REQUIRE(nt.rows() == 6);
    REQUIRE(nt.cols() == 5);
    for (std::size_t i = 0; i < nt.size(); ++i) {
        CHECK(std::abs(nt.data()[i] - ref.data()[i]) < 1e-12);
    }
}

TEST_CASE("matmul_tn matches reference against explicit transpose") {
    std::mt19937_64 rng(11);
    const Tensor2 a = random_tensor(4, 6, rng);
    const Tensor2 b = random_tensor(4, 3, rng);
    const Tensor2 tn = matmul_tn(a, b);
    const Tensor2 ref = matmul_reference(transpose(a), b);
    REQUIRE(tn.rows() == 6);
    REQUIRE(tn.cols() == 3);
    for (std::size_t i = 0; i < tn.size(); ++i) {
        CHECK(std::abs(tn.data()[i] - ref.data()[i]) < 1e-12);
    }
}

TEST_CASE("matmul_accumulate adds into the output") {
    std::mt19937_64 rng(5);
    const Tensor2 a = random_tensor(3, 4, rng);
    const Tensor2 b = random_tensor(4, 2, rng);
    Tensor2 c(3, 2, 1.0);
    matmul_accumulate(a, b, c);
    const Tensor2 ref = matmul_reference(a, b);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(std::abs(c.data()[i] - (ref.data()[i] + 1.0)) < 1e-12);
    }
}

TEST_CASE("hstack concatenates columns") {
    const Tensor2 a = Tensor2::from_rows({{1, 2}, {3, 4}});
    const Tensor2 b = Tensor2::from_rows({{5}, {6}});
    const Tensor2 c = operon::hstack({&a, &b});
    CHECK(c.rows() == 2);
    CHECK(c.cols() == 3);
    CHECK(c(0, 2) == 5);
    CHECK(c(1, 0) == 3);
    const Tensor2 bad(3, 1);
    CHECK_THROWS_AS(operon::hstack({&a, &bad}), std::invalid_argument);
}

TEST_CASE("all_finite flags NaN and Inf") {
    Tensor2 t(2, 2, 1.0);
    CHECK(t.all_finite());
    t(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(t.all_finite());
    t(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_FALSE(t.all_finite());
}
