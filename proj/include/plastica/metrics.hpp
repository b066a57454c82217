#pragma once

#include "plastica/tensor.hpp"

#include <span>
#include <vector>

namespace plastica::metrics {

/// -p log2 p - (1-p) log2 (1-p), with 0 log 0 = 0.
double binary_entropy(double p);

struct SignEntropy {
    std::vector<double> positive_fraction;  // p_i = P(h_i > 0); exact zeros count as non-positive
    std::vector<double> entropy;            // binary entropy of p_i, in [0, 1]

    double mean_entropy() const;
};

/// Per-unit sign statistics of one layer's outputs, h_batch of shape (M, units).
SignEntropy unit_sign_entropy(const Tensor& h_batch);

/// Singular values in descending order.
std::vector<double> singular_values(const Tensor& m);
double min_singular_value(const Tensor& m);
double max_singular_value(const Tensor& m);

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
double accuracy(const Tensor& logits, std::span<const int> labels);

std::size_t argmax(std::span<const double> row);

}  // namespace plastica::metrics
