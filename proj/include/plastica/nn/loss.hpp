#pragma once

#include "plastica/tensor.hpp"

#include <span>
#include <stdexcept>

namespace plastica::nn {

class LossError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct LossResult {
    double loss = 0.0;    // mean over the batch
    Tensor grad_logits;   // d loss / d logits
};

/// mean_i sum_j (logit_ij - target_ij)^2
LossResult squared_error(const Tensor& logits, const Tensor& targets);

/// Max-subtracted softmax cross-entropy against class indices.
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

}  // namespace plastica::nn
