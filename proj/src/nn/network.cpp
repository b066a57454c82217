#include "plastica/nn/network.hpp"

#include "plastica/seed.hpp"

#include <cmath>
#include <random>

namespace plastica::nn {

std::string to_string(Norm norm) {
    switch (norm) {
        case Norm::None: return "none";
        case Norm::LayerNorm: return "layernorm";
        case Norm::LinearizedLayerNorm: return "linear_layernorm";
    }
    return "none";
}

Norm parse_norm(std::string_view text) {
    if (text == "none" || text.empty()) return Norm::None;
    if (text == "layernorm") return Norm::LayerNorm;
    if (text == "linear_layernorm") return Norm::LinearizedLayerNorm;
    throw std::invalid_argument("unknown norm '" + std::string(text) + "'");
}

std::vector<LayerSpec> mlp_spec(std::size_t input_dim, std::size_t output_dim, std::size_t depth,
                                std::size_t width, const Activation& hidden, Norm norm,
                                std::optional<Activation> first_hidden) {
    if (depth == 0) throw ShapeError("network depth must be at least 1");
    std::vector<LayerSpec> spec;
    std::size_t in = input_dim;
    for (std::size_t l = 0; l + 1 < depth; ++l) {
        const Activation& act = (l == 0 && first_hidden) ? *first_hidden : hidden;
        const std::size_t pre = act.width_doubling() ? width / 2 : width;
        if (pre == 0) throw ShapeError("effective width too small for a width-doubling activation");
        spec.push_back({in, pre, act, true, norm});
        in = spec.back().out_dim();
    }
    spec.push_back({in, output_dim, Activation::identity(), true, Norm::None});
    return spec;
}

double Network::glorot_bound(std::size_t in_dim, std::size_t pre_dim) {
    return std::sqrt(6.0 / static_cast<double>(in_dim + pre_dim));
}

Network::Network(std::vector<LayerSpec> layers, std::uint64_t seed) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ShapeError("network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& s = layers_[l];
        if (s.in_dim == 0 || s.pre_dim == 0)
            throw ShapeError("layer " + std::to_string(l) + " has a zero dimension");
        if (l > 0 && s.in_dim != layers_[l - 1].out_dim())
            throw ShapeError("layer " + std::to_string(l) + " in_dim " + std::to_string(s.in_dim) +
                             " does not match previous out_dim " + std::to_string(layers_[l - 1].out_dim()));
    }
    Rng rng(derive_seed(seed, {stream_tag::kInit}));
    for (const auto& s : layers_) {
        LayerParams p{Tensor({s.pre_dim, s.in_dim}), Tensor({s.pre_dim})};
        const double bound = glorot_bound(s.in_dim, s.pre_dim);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& w : p.weight.values()) w = dist(rng);
        params_.push_back(std::move(p));
    }
    init_snapshot_ = params_;
}

std::size_t Network::num_parameters() const noexcept {
    std::size_t n = 0;
    for (std::size_t l = 0; l < params_.size(); ++l)
        n += params_[l].weight.size() + (layers_[l].use_bias ? params_[l].bias.size() : 0);
    return n;
}

Gradients Network::zero_gradients() const {
    Gradients g;
    g.reserve(params_.size());
    for (const auto& p : params_) g.push_back({Tensor(p.weight.shape()), Tensor(p.bias.shape())});
    return g;
}

namespace {

Tensor affine(const LayerSpec& spec, const LayerParams& p, const Tensor& h) {
    Tensor z = matmul_nt(h, p.weight);
    if (spec.use_bias) {
        for (std::size_t r = 0; r < z.rows(); ++r) {
            auto row = z.row(r);
            for (std::size_t i = 0; i < row.size(); ++i) row[i] += p.bias[i];
        }
    }
    return z;
}

void layer_norm(const Tensor& z, Tensor& normalized, std::vector<double>& inv_std) {
    const std::size_t m = z.rows(), n = z.cols();
    normalized = Tensor({m, n});
    inv_std.assign(m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        auto in = z.row(r);
        auto out = normalized.row(r);
        double mean = 0.0;
        for (double v : in) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : in) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        const double s = 1.0 / std::sqrt(var + kLayerNormEps);
        inv_std[r] = s;
        for (std::size_t i = 0; i < n; ++i) out[i] = (in[i] - mean) * s;
    }
}

Tensor layer_norm_backward(Norm norm, const Tensor& normalized, const std::vector<double>& inv_std,
                           const Tensor& grad_out) {
    const std::size_t m = normalized.rows(), n = normalized.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    Tensor grad({m, n});
    for (std::size_t r = 0; r < m; ++r) {
        auto xhat = normalized.row(r);
        auto g = grad_out.row(r);
        auto out = grad.row(r);
        double g_mean = 0.0, gx_mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            g_mean += g[i];
            gx_mean += g[i] * xhat[i];
        }
        g_mean *= inv_n;
        gx_mean *= inv_n;
        // the linearized variant drops the xhat * mean(g * xhat) term that
        // flows through the standard deviation
        const double std_term = norm == Norm::LayerNorm ? gx_mean : 0.0;
        for (std::size_t i = 0; i < n; ++i) out[i] = inv_std[r] * (g[i] - g_mean - xhat[i] * std_term);
    }
    return grad;
}

}  // namespace

ForwardTrace forward(const Network& net, const Tensor& x_batch) {
    if (x_batch.rank() != 2 || x_batch.cols() != net.input_dim())
        throw ShapeError("input batch " + x_batch.shape_string() + " does not match network input dim " +
                         std::to_string(net.input_dim()));
    ForwardTrace trace;
    trace.input = x_batch;
    trace.layers.reserve(net.depth());
    const Tensor* h = &trace.input;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const auto& spec = net.layers()[l];
        LayerTrace lt;
        lt.pre = affine(spec, net.params()[l], *h);
        if (spec.norm != Norm::None) {
            layer_norm(lt.pre, lt.normalized, lt.inv_std);
            lt.out = apply_activation(spec.activation, lt.normalized);
        } else {
            lt.out = apply_activation(spec.activation, lt.pre);
        }
        lt.out.require_finite("layer " + std::to_string(l) + " output");
        trace.layers.push_back(std::move(lt));
        h = &trace.layers.back().out;
    }
    return trace;
}

Tensor predict(const Network& net, const Tensor& x_batch) {
    if (x_batch.rank() != 2 || x_batch.cols() != net.input_dim())
        throw ShapeError("input batch " + x_batch.shape_string() + " does not match network input dim " +
                         std::to_string(net.input_dim()));
    Tensor h = x_batch;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const auto& spec = net.layers()[l];
        Tensor z = affine(spec, net.params()[l], h);
        if (spec.norm != Norm::None) {
            Tensor normalized;
            std::vector<double> inv_std;
            layer_norm(z, normalized, inv_std);
            z = std::move(normalized);
        }
        h = apply_activation(spec.activation, z);
    }
    h.require_finite("network output");
    return h;
}

Gradients backward(const Network& net, const ForwardTrace& trace, const Tensor& grad_logits) {
    if (trace.layers.size() != net.depth()) throw ShapeError("stale trace: depth differs from network");
    const std::size_t m = trace.batch_size();
    if (grad_logits.rows() != m || grad_logits.cols() != net.output_dim())
        throw ShapeError("logit gradient " + grad_logits.shape_string() + " does not match trace");

    Gradients grads = net.zero_gradients();
    Tensor g = grad_logits;
    for (std::size_t l = net.depth(); l-- > 0;) {
        const auto& spec = net.layers()[l];
        const auto& lt = trace.layers[l];
        const auto& p = net.params()[l];
        if (lt.pre.rows() != m || lt.pre.cols() != spec.pre_dim || lt.out.cols() != spec.out_dim())
            throw ShapeError("stale trace: layer " + std::to_string(l) + " shapes drifted");
        const Tensor& h_prev = l == 0 ? trace.input : trace.layers[l - 1].out;
        if (h_prev.cols() != spec.in_dim) throw ShapeError("stale trace: input width drifted");

        Tensor grad_pre;
        if (spec.norm != Norm::None) {
            Tensor grad_norm = activation_backward(spec.activation, lt.normalized, g);
            grad_pre = layer_norm_backward(spec.norm, lt.normalized, lt.inv_std, grad_norm);
        } else {
            grad_pre = activation_backward(spec.activation, lt.pre, g);
        }

        grads[l].weight = matmul_tn(grad_pre, h_prev);
        if (spec.use_bias) {
            auto& gb = grads[l].bias;
            for (std::size_t r = 0; r < m; ++r) {
                auto row = grad_pre.row(r);
                for (std::size_t i = 0; i < row.size(); ++i) gb[i] += row[i];
            }
        }
        if (l > 0) g = matmul(grad_pre, p.weight);
    }
    return grads;
}

Tensor product_matrix(const Network& net) {
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const auto& spec = net.layers()[l];
        if (!spec.activation.is_identity() || spec.norm != Norm::None)
            throw std::invalid_argument("product matrix requires identity activations without norms; layer " +
                                        std::to_string(l) + " uses " + spec.activation.name());
    }
    Tensor prod = net.params()[0].weight;
    for (std::size_t l = 1; l < net.depth(); ++l) prod = matmul(net.params()[l].weight, prod);
    return prod;
}

void add_scaled(Gradients& into, const Gradients& other, double scale) {
    if (into.size() != other.size()) throw ShapeError("gradient sets differ in depth");
    for (std::size_t l = 0; l < into.size(); ++l) {
        if (!into[l].weight.same_shape(other[l].weight) || !into[l].bias.same_shape(other[l].bias))
            throw ShapeError("gradient shapes differ at layer " + std::to_string(l));
        auto w = into[l].weight.values();
        auto ow = other[l].weight.values();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += scale * ow[i];
        auto b = into[l].bias.values();
        auto ob = other[l].bias.values();
        for (std::size_t i = 0; i < b.size(); ++i) b[i] += scale * ob[i];
    }
}

double squared_norm(const std::vector<LayerParams>& params) {
    double s = 0.0;
    for (const auto& p : params) s += plastica::squared_norm(p.weight.values()) + plastica::squared_norm(p.bias.values());
    return s;
}

std::string parameter_name(std::size_t layer, bool bias) {
    return "layer " + std::to_string(layer) + (bias ? " bias" : " weight");
}

}  // namespace plastica::nn
