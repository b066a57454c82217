#pragma once

#include "plastica/nn/activation.hpp"
#include "plastica/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace plastica::nn {

enum class Norm {
    None,
    LayerNorm,
    /// Same forward pass as LayerNorm; backward treats the per-example
    /// standard deviation as a constant.
    LinearizedLayerNorm,
};

inline constexpr double kLayerNormEps = 1e-5;

std::string to_string(Norm norm);
Norm parse_norm(std::string_view text);

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t pre_dim = 0;  // rows of W
    Activation activation;
    bool use_bias = true;
    Norm norm = Norm::None;  // applied to the pre-activation, before phi

    std::size_t out_dim() const noexcept { return activation.output_width(pre_dim); }
};

struct LayerParams {
    Tensor weight;  // (pre_dim, in_dim)
    Tensor bias;    // (pre_dim)
};

/// One entry per layer, shaped like the network parameters.
using Gradients = std::vector<LayerParams>;

/// Builds an MLP of `depth` weight layers. Hidden layers have effective width
/// `width`: width-doubling activations get pre_dim = width / 2. The output
/// layer is linear. `first_hidden` overrides the activation of the first
/// hidden layer (shallow Fourier features).
std::vector<LayerSpec> mlp_spec(std::size_t input_dim, std::size_t output_dim, std::size_t depth,
                                std::size_t width, const Activation& hidden,
                                Norm norm = Norm::None,
                                std::optional<Activation> first_hidden = std::nullopt);

class Network {
public:
    /// Glorot-uniform weights, zero biases. Throws ShapeError if the layer
    /// dimensions do not chain.
    Network(std::vector<LayerSpec> layers, std::uint64_t seed);

    const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
    std::size_t depth() const noexcept { return layers_.size(); }
    std::size_t input_dim() const noexcept { return layers_.front().in_dim; }
    std::size_t output_dim() const noexcept { return layers_.back().out_dim(); }
    std::size_t num_parameters() const noexcept;

    std::vector<LayerParams>& params() noexcept { return params_; }
    const std::vector<LayerParams>& params() const noexcept { return params_; }
    const std::vector<LayerParams>& init_snapshot() const noexcept { return init_snapshot_; }

    /// Zero-valued gradient buffers shaped like params().
    Gradients zero_gradients() const;

    static double glorot_bound(std::size_t in_dim, std::size_t pre_dim);

private:
    std::vector<LayerSpec> layers_;
    std::vector<LayerParams> params_;
    std::vector<LayerParams> init_snapshot_;
};

inline Network init_network(std::vector<LayerSpec> spec, std::uint64_t seed) {
    return Network(std::move(spec), seed);
}

struct LayerTrace {
    Tensor pre;         // z = W h_prev + b, (M, pre_dim)
    Tensor normalized;  // LayerNorm(z) when the layer has a norm, else empty
    std::vector<double> inv_std;  // per example, LayerNorm only
    Tensor out;         // h = phi(normalized or z)
};

struct ForwardTrace {
    Tensor input;
    std::vector<LayerTrace> layers;

    const Tensor& logits() const { return layers.back().out; }
    std::size_t batch_size() const { return input.rows(); }
};

ForwardTrace forward(const Network& net, const Tensor& x_batch);

/// Logits only, without keeping intermediate activations.
Tensor predict(const Network& net, const Tensor& x_batch);

Gradients backward(const Network& net, const ForwardTrace& trace, const Tensor& grad_logits);

/// W_L ... W_1 for an all-identity network. Biases are ignored.
Tensor product_matrix(const Network& net);

// Parameter-set arithmetic shared by optimizers and interventions.
void add_scaled(Gradients& into, const Gradients& other, double scale);
double squared_norm(const std::vector<LayerParams>& params);
std::string parameter_name(std::size_t layer, bool bias);

}  // namespace plastica::nn
