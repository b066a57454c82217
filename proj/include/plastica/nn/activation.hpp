#pragma once

#include "plastica/tensor.hpp"

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace plastica::nn {

class ActivationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class Activation;

struct Identity {};
struct ReLU {};
struct LeakyReLU {
    double leak = 0.01;
};
struct Sin {};
/// [ReLU(z), ReLU(-z)]; doubles the layer width.
struct CReLU {};
/// [sin(z), cos(z)]; doubles the layer width.
struct Fourier {};
/// alpha * z + (1 - alpha) * base(z). The base must be width-preserving.
struct AlphaLinearized {
    std::shared_ptr<const Activation> base;
    double alpha = 0.0;
};

/// Element-wise activation. Width-doubling kinds map unit i of the
/// pre-activation to output units 2i and 2i+1.
class Activation {
public:
    using Kind = std::variant<Identity, ReLU, LeakyReLU, Sin, CReLU, Fourier, AlphaLinearized>;

    Activation() = default;
    Activation(Kind kind);  // NOLINT: implicit from any alternative

    static Activation identity() { return Activation(Kind{Identity{}}); }
    static Activation relu() { return Activation(Kind{ReLU{}}); }
    static Activation leaky_relu(double leak);
    static Activation sin() { return Activation(Kind{Sin{}}); }
    static Activation crelu() { return Activation(Kind{CReLU{}}); }
    static Activation fourier() { return Activation(Kind{Fourier{}}); }
    static Activation alpha_linearized(const Activation& base, double alpha);

    /// Accepts the names produced by name(): identity, relu, leaky_relu(0.1),
    /// sin, crelu, fourier, alpha(relu,0.5).
    static Activation parse(std::string_view text);

    const Kind& kind() const noexcept { return kind_; }
    bool width_doubling() const noexcept;
    bool is_identity() const noexcept { return std::holds_alternative<Identity>(kind_); }
    std::size_t output_width(std::size_t pre_dim) const noexcept {
        return width_doubling() ? 2 * pre_dim : pre_dim;
    }
    std::string name() const;

    /// Scalar value and derivative for width-preserving kinds.
    double value(double z) const;
    double derivative(double z) const;

private:
    Kind kind_ = Identity{};
};

/// h = phi(z) for a batch z of shape (M, n); output is (M, n) or (M, 2n).
Tensor apply_activation(const Activation& act, const Tensor& z);

/// dL/dz given z and dL/dh.
Tensor activation_backward(const Activation& act, const Tensor& z, const Tensor& grad_h);

}  // namespace plastica::nn
