#include "plastica/metrics.hpp"
#include "plastica/seed.hpp"

#include <doctest.h>

#include <Eigen/QR>

#include <cmath>
#include <random>

using namespace plastica;
using namespace plastica::metrics;

TEST_CASE("binary entropy values") {
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(binary_entropy(0.5) == 1.0);
    // -0.25 log2 0.25 - 0.75 log2 0.75
    const double expected = 0.25 * 2.0 + 0.75 * std::log2(4.0 / 3.0);
    CHECK(binary_entropy(0.25) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(binary_entropy(0.25) == doctest::Approx(0.811278).epsilon(1e-6));
}

TEST_CASE("binary entropy is exactly symmetric") {
    // over every p whose complement is itself exact in floating point
    int checked = 0;
    for (int k = 0; k <= 1000; ++k) {
        const double p = k / 1000.0;
        if (1.0 - (1.0 - p) != p) continue;
        CAPTURE(p);
        CHECK(binary_entropy(p) == binary_entropy(1.0 - p));
        ++checked;
    }
    CHECK(checked > 500);
    for (int k = 0; k <= 256; ++k) CHECK(binary_entropy(k / 256.0) == binary_entropy((256 - k) / 256.0));
}

TEST_CASE("unit sign entropy per column") {
    // column 0 always positive, column 1 positive on half, column 2 all zero
    const Tensor h = Tensor::matrix(4, 3, {1, 1, 0, 2, -1, 0, 3, 2, 0, 4, 0, 0});
    const auto s = unit_sign_entropy(h);
    CHECK(s.positive_fraction == std::vector<double>{1.0, 0.5, 0.0});
    CHECK(s.entropy == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(s.mean_entropy() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("minimum singular value of small matrices") {
    CHECK(min_singular_value(Tensor::identity(3)) == doctest::Approx(1.0));
    CHECK(min_singular_value(Tensor::matrix(2, 2, {2, 0, 0, 0})) == 0.0);
    CHECK(min_singular_value(Tensor::matrix(2, 2, {-3, 0, 0, 0.5})) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(max_singular_value(Tensor::matrix(2, 2, {-3, 0, 0, 0.5})) == doctest::Approx(3.0).epsilon(1e-14));
    // rectangular: min(rows, cols) values
    CHECK(singular_values(Tensor({3, 5}, 1.0)).size() == 3);
}

TEST_CASE("minimum singular value of a rotated diagonal") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n;
    const int d = 6;
    auto random_orthogonal = [&] {
        Eigen::MatrixXd a(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) a(i, j) = n(rng);
        return Eigen::MatrixXd(Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ());
    };
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::VectorXd diag(d);
        for (int i = 0; i < d; ++i) diag(i) = n(rng);
        const Eigen::MatrixXd m = random_orthogonal() * diag.asDiagonal() * random_orthogonal().transpose();
        Tensor t({static_cast<std::size_t>(d), static_cast<std::size_t>(d)});
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) t(i, j) = m(i, j);
        CHECK(std::abs(min_singular_value(t) - diag.cwiseAbs().minCoeff()) <= 1e-9);
    }
}

TEST_CASE("accuracy with ties and mistakes") {
    const std::vector<int> y{0, 1, 2};
    CHECK(accuracy(Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}), y) == 1.0);
    CHECK(accuracy(Tensor::matrix(1, 2, {0.0, 1.0}), std::vector<int>{0}) == 0.0);
    CHECK(argmax(std::vector<double>{2.0, 5.0, 5.0}) == 1);

    // all-zero logits predict class 0 everywhere
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> cls(0, 9);
    std::vector<int> labels(5000);
    std::size_t zeros = 0;
    for (int& l : labels) {
        l = cls(rng);
        zeros += l == 0;
    }
    const double acc = accuracy(Tensor({5000, 10}), labels);
    CHECK(acc == static_cast<double>(zeros) / 5000.0);
    CHECK(std::abs(acc - 0.1) < 0.02);

    CHECK_THROWS(accuracy(Tensor({2, 3}), std::vector<int>{0}));
}
