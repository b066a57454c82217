#include "plastica/metrics.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace plastica::metrics {

double binary_entropy(double p) {
    auto term = [](double q) { return q > 0.0 ? -q * std::log2(q) : 0.0; };
    // fold onto [0, 0.5] so that H(p) and H(1 - p) evaluate identical operands
    const double lo = p > 0.5 ? 1.0 - p : p;
    return term(lo) + term(1.0 - lo);
}

double SignEntropy::mean_entropy() const {
    if (entropy.empty()) return 0.0;
    return std::accumulate(entropy.begin(), entropy.end(), 0.0) / static_cast<double>(entropy.size());
}

SignEntropy unit_sign_entropy(const Tensor& h_batch) {
    if (h_batch.empty() || h_batch.rank() != 2) throw std::invalid_argument("sign entropy needs a non-empty (M, units) batch");
    const std::size_t m = h_batch.rows(), n = h_batch.cols();
    std::vector<std::size_t> positive(n, 0);
    for (std::size_t r = 0; r < m; ++r) {
        auto row = h_batch.row(r);
        for (std::size_t i = 0; i < n; ++i) positive[i] += row[i] > 0.0 ? 1 : 0;
    }
    SignEntropy out;
    out.positive_fraction.resize(n);
    out.entropy.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // count the non-positive side separately so H(p) == H(1-p) bit for bit
        const double p = static_cast<double>(positive[i]) / static_cast<double>(m);
        const double q = static_cast<double>(m - positive[i]) / static_cast<double>(m);
        out.positive_fraction[i] = p;
        auto term = [](double x) { return x > 0.0 ? -x * std::log2(x) : 0.0; };
        out.entropy[i] = term(p) + term(q);
    }
    return out;
}

std::vector<double> singular_values(const Tensor& m) {
    if (m.rank() != 2) throw std::invalid_argument("singular values need a 2-D tensor, got " + m.shape_string());
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajor> a(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    return {s.data(), s.data() + s.size()};
}

double min_singular_value(const Tensor& m) { return singular_values(m).back(); }

double max_singular_value(const Tensor& m) { return singular_values(m).front(); }

std::size_t argmax(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

double accuracy(const Tensor& logits, std::span<const int> labels) {
    if (labels.size() != logits.rows()) throw std::invalid_argument("accuracy: label count does not match logits");
    if (labels.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t r = 0; r < labels.size(); ++r)
        if (static_cast<int>(argmax(logits.row(r))) == labels[r]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace plastica::metrics
