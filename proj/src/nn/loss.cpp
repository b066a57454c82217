#include "plastica/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace plastica::nn {

LossResult squared_error(const Tensor& logits, const Tensor& targets) {
    if (!logits.same_shape(targets))
        throw LossError("squared error shapes differ: " + logits.shape_string() + " vs " + targets.shape_string());
    const double inv_m = 1.0 / static_cast<double>(logits.rows());
    LossResult r{0.0, Tensor(logits.shape())};
    auto f = logits.values();
    auto y = targets.values();
    auto g = r.grad_logits.values();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double d = f[i] - y[i];
        r.loss += d * d;
        g[i] = 2.0 * d * inv_m;
    }
    r.loss *= inv_m;
    return r;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels) {
    const std::size_t m = logits.rows(), k = logits.cols();
    if (labels.size() != m)
        throw LossError("label count " + std::to_string(labels.size()) + " does not match batch " + std::to_string(m));
    const double inv_m = 1.0 / static_cast<double>(m);
    LossResult r{0.0, Tensor({m, k})};
    for (std::size_t row = 0; row < m; ++row) {
        const int y = labels[row];
        if (y < 0 || static_cast<std::size_t>(y) >= k)
            throw LossError("class index " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
        auto f = logits.row(row);
        auto g = r.grad_logits.row(row);
        const double mx = *std::max_element(f.begin(), f.end());
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            g[j] = std::exp(f[j] - mx);
            z += g[j];
        }
        r.loss += std::log(z) - (f[y] - mx);
        for (std::size_t j = 0; j < k; ++j) g[j] = g[j] / z * inv_m;
        g[y] -= inv_m;
    }
    r.loss *= inv_m;
    return r;
}

}  // namespace plastica::nn
