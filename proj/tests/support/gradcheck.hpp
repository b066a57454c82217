#pragma once

// Central-difference gradient checks shared by the unit and acceptance suites.

#include "plastica/nn/loss.hpp"
#include "plastica/nn/network.hpp"
#include "plastica/optim.hpp"
#include "plastica/seed.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace plastica::testing {

enum class LossChoice { CrossEntropy, SquaredError };

struct Objective {
    LossChoice loss = LossChoice::CrossEntropy;
    Tensor x;
    std::vector<int> labels;  // cross-entropy
    Tensor targets;           // squared error
    optim::InterventionConfig reg = optim::NoIntervention{};
};

/// Plain re-implementation of the forward pass. Layers using the linearized
/// norm divide by the frozen per-example inverse std when one is supplied, so
/// that finite differences see the stop-gradient surrogate.
inline Tensor reference_forward(const nn::Network& net, const Tensor& x,
                                const std::vector<std::vector<double>>* frozen_inv_std = nullptr) {
    Tensor h = x;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const auto& spec = net.layers()[l];
        const auto& p = net.params()[l];
        Tensor z({h.rows(), spec.pre_dim});
        for (std::size_t r = 0; r < h.rows(); ++r)
            for (std::size_t i = 0; i < spec.pre_dim; ++i) {
                double acc = spec.use_bias ? p.bias[i] : 0.0;
                for (std::size_t j = 0; j < spec.in_dim; ++j) acc += p.weight(i, j) * h(r, j);
                z(r, i) = acc;
            }
        if (spec.norm != nn::Norm::None) {
            for (std::size_t r = 0; r < z.rows(); ++r) {
                auto row = z.row(r);
                double mean = 0.0;
                for (double v : row) mean += v;
                mean /= static_cast<double>(row.size());
                double var = 0.0;
                for (double v : row) var += (v - mean) * (v - mean);
                var /= static_cast<double>(row.size());
                double inv = 1.0 / std::sqrt(var + nn::kLayerNormEps);
                if (spec.norm == nn::Norm::LinearizedLayerNorm && frozen_inv_std) inv = (*frozen_inv_std)[l][r];
                for (double& v : row) v = (v - mean) * inv;
            }
        }
        h = nn::apply_activation(spec.activation, z);
    }
    return h;
}

inline std::vector<std::vector<double>> inverse_stds(const nn::Network& net, const Tensor& x) {
    const auto trace = nn::forward(net, x);
    std::vector<std::vector<double>> out;
    for (const auto& l : trace.layers) out.push_back(l.inv_std);
    return out;
}

inline double objective_value(const nn::Network& net, const Objective& obj,
                              const std::vector<std::vector<double>>* frozen = nullptr) {
    const Tensor logits = reference_forward(net, obj.x, frozen);
    const double data = obj.loss == LossChoice::CrossEntropy ? nn::softmax_cross_entropy(logits, obj.labels).loss
                                                             : nn::squared_error(logits, obj.targets).loss;
    return data + optim::regularizer_penalty(net, obj.reg);
}

inline nn::Gradients analytic_gradient(const nn::Network& net, const Objective& obj) {
    const auto trace = nn::forward(net, obj.x);
    const auto res = obj.loss == LossChoice::CrossEntropy ? nn::softmax_cross_entropy(trace.logits(), obj.labels)
                                                          : nn::squared_error(trace.logits(), obj.targets);
    auto g = nn::backward(net, trace, res.grad_logits);
    if (!std::holds_alternative<optim::NoIntervention>(obj.reg)) nn::add_scaled(g, optim::regularizer_grad(net, obj.reg), 1.0);
    return g;
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::string worst;
};

/// Relative error ||a - n|| / max(||a||, ||n||) per parameter tensor; tensors
/// whose gradients are both below `floor` in norm compare by absolute error.
inline GradCheck check_gradients(nn::Network& net, const Objective& obj, double h = 1e-5, double floor = 1e-7) {
    const nn::Gradients analytic = analytic_gradient(net, obj);
    const auto frozen = inverse_stds(net, obj.x);
    GradCheck out;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        for (bool bias : {false, true}) {
            if (bias && !net.layers()[l].use_bias) continue;
            auto values = bias ? net.params()[l].bias.values() : net.params()[l].weight.values();
            auto a = bias ? analytic[l].bias.values() : analytic[l].weight.values();
            double diff = 0.0, na = 0.0, nn_ = 0.0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                const double saved = values[i];
                values[i] = saved + h;
                const double plus = objective_value(net, obj, &frozen);
                values[i] = saved - h;
                const double minus = objective_value(net, obj, &frozen);
                values[i] = saved;
                const double numeric = (plus - minus) / (2.0 * h);
                diff += (numeric - a[i]) * (numeric - a[i]);
                na += a[i] * a[i];
                nn_ += numeric * numeric;
            }
            const double scale = std::max(std::sqrt(na), std::sqrt(nn_));
            const double err = scale > floor ? std::sqrt(diff) / scale : std::sqrt(diff);
            if (err > out.max_rel_error || out.worst.empty()) {
                out.max_rel_error = err;
                out.worst = nn::parameter_name(l, bias);
            }
        }
    }
    return out;
}

/// Smallest |pre-activation| feeding a piecewise-linear kink, +inf if none.
inline double kink_distance(const nn::Network& net, const Tensor& x) {
    const auto trace = nn::forward(net, x);
    double best = INFINITY;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const auto& act = net.layers()[l].activation;
        const std::string name = act.name();
        const bool kinked = name.find("relu") != std::string::npos;
        if (!kinked) continue;
        const Tensor& z = net.layers()[l].norm == nn::Norm::None ? trace.layers[l].pre : trace.layers[l].normalized;
        for (double v : z.values()) best = std::min(best, std::abs(v));
    }
    return best;
}

inline Tensor random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Tensor t({rows, cols});
    for (double& v : t.values()) v = dist(rng);
    return t;
}

}  // namespace plastica::testing
