#include "plastica/nn/activation.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace plastica::nn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate(const Activation& act) {
    if (const auto* lin = std::get_if<AlphaLinearized>(&act.kind())) {
        if (!lin->base) throw ActivationError("alpha-linearization without a base activation");
        if (lin->base->width_doubling())
            throw ActivationError("alpha-linearization cannot wrap width-doubling activation " +
                                  lin->base->name());
        if (!(lin->alpha >= 0.0 && lin->alpha <= 1.0))
            throw ActivationError("linearization alpha must lie in [0, 1]");
        validate(*lin->base);
    }
    if (const auto* leaky = std::get_if<LeakyReLU>(&act.kind())) {
        if (!(leaky->leak >= 0.0 && leaky->leak <= 1.0)) throw ActivationError("leak must lie in [0, 1]");
    }
}

// A width-preserving activation reduced to lin * z + scale * base(z), where
// base is one of identity, relu, leaky relu or sin. Nested alpha-linearizations
// collapse into the two coefficients.
struct ScalarForm {
    enum class Base { Identity, ReLU, Leaky, Sin } base = Base::Identity;
    double leak = 0.0;
    double lin = 0.0;
    double scale = 1.0;

    double value(double z) const {
        double b = z;
        switch (base) {
            case Base::Identity: b = z; break;
            case Base::ReLU: b = z > 0.0 ? z : 0.0; break;
            case Base::Leaky: b = z > 0.0 ? z : leak * z; break;
            case Base::Sin: b = std::sin(z); break;
        }
        return lin * z + scale * b;
    }
    double derivative(double z) const {
        double d = 1.0;
        switch (base) {
            case Base::Identity: d = 1.0; break;
            case Base::ReLU: d = z > 0.0 ? 1.0 : 0.0; break;
            case Base::Leaky: d = z > 0.0 ? 1.0 : leak; break;
            case Base::Sin: d = std::cos(z); break;
        }
        return lin + scale * d;
    }
};

ScalarForm scalar_form(const Activation& act) {
    ScalarForm f;
    const auto& k = act.kind();
    if (std::holds_alternative<Identity>(k)) {
        f.base = ScalarForm::Base::Identity;
    } else if (std::holds_alternative<ReLU>(k)) {
        f.base = ScalarForm::Base::ReLU;
    } else if (const auto* l = std::get_if<LeakyReLU>(&k)) {
        f.base = ScalarForm::Base::Leaky;
        f.leak = l->leak;
    } else if (std::holds_alternative<Sin>(k)) {
        f.base = ScalarForm::Base::Sin;
    } else if (const auto* a = std::get_if<AlphaLinearized>(&k)) {
        f = scalar_form(*a->base);
        f.lin = a->alpha + (1.0 - a->alpha) * f.lin;
        f.scale *= (1.0 - a->alpha);
    } else {
        throw ActivationError("scalar form undefined for width-doubling activation");
    }
    return f;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_real(std::string_view s) {
    s = trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ActivationError("bad number in activation spec: '" + std::string(s) + "'");
    return v;
}

}  // namespace

Activation::Activation(Kind kind) : kind_(std::move(kind)) {}

Activation Activation::leaky_relu(double leak) {
    Activation a{LeakyReLU{leak}};
    validate(a);
    return a;
}

Activation Activation::alpha_linearized(const Activation& base, double alpha) {
    Activation a{AlphaLinearized{std::make_shared<const Activation>(base), alpha}};
    validate(a);
    return a;
}

Activation Activation::parse(std::string_view text) {
    text = trim(text);
    if (text == "identity" || text == "linear") return identity();
    if (text == "relu") return relu();
    if (text == "sin") return sin();
    if (text == "crelu") return crelu();
    if (text == "fourier") return fourier();
    auto args_of = [&](std::string_view prefix) -> std::string_view {
        if (text.substr(0, prefix.size()) != prefix || text.back() != ')') return {};
        return text.substr(prefix.size(), text.size() - prefix.size() - 1);
    };
    if (auto args = args_of("leaky_relu("); !args.empty()) return leaky_relu(parse_real(args));
    if (auto args = args_of("alpha("); !args.empty()) {
        // the base may itself contain commas, so split on the last one
        auto comma = args.rfind(',');
        if (comma == std::string_view::npos) throw ActivationError("alpha(...) needs base and alpha");
        return alpha_linearized(parse(args.substr(0, comma)), parse_real(args.substr(comma + 1)));
    }
    throw ActivationError("unknown activation '" + std::string(text) + "'");
}

bool Activation::width_doubling() const noexcept {
    return std::holds_alternative<CReLU>(kind_) || std::holds_alternative<Fourier>(kind_);
}

std::string Activation::name() const {
    return std::visit(overloaded{
                          [](const Identity&) -> std::string { return "identity"; },
                          [](const ReLU&) -> std::string { return "relu"; },
                          [](const LeakyReLU& a) -> std::string {
                              std::ostringstream os;
                              os << "leaky_relu(" << a.leak << ')';
                              return os.str();
                          },
                          [](const Sin&) -> std::string { return "sin"; },
                          [](const CReLU&) -> std::string { return "crelu"; },
                          [](const Fourier&) -> std::string { return "fourier"; },
                          [](const AlphaLinearized& a) -> std::string {
                              std::ostringstream os;
                              os << "alpha(" << (a.base ? a.base->name() : "?") << ',' << a.alpha << ')';
                              return os.str();
                          },
                      },
                      kind_);
}

double Activation::value(double z) const {
    validate(*this);
    return scalar_form(*this).value(z);
}

double Activation::derivative(double z) const {
    validate(*this);
    return scalar_form(*this).derivative(z);
}

Tensor apply_activation(const Activation& act, const Tensor& z) {
    validate(act);
    const std::size_t m = z.rows(), n = z.cols();
    if (std::holds_alternative<Identity>(act.kind())) return z;
    if (act.width_doubling()) {
        const bool fourier = std::holds_alternative<Fourier>(act.kind());
        Tensor h({m, 2 * n});
        for (std::size_t r = 0; r < m; ++r) {
            auto in = z.row(r);
            auto out = h.row(r);
            for (std::size_t i = 0; i < n; ++i) {
                const double v = in[i];
                if (fourier) {
                    out[2 * i] = std::sin(v);
                    out[2 * i + 1] = std::cos(v);
                } else {
                    out[2 * i] = v > 0.0 ? v : 0.0;
                    out[2 * i + 1] = v < 0.0 ? -v : 0.0;
                }
            }
        }
        return h;
    }
    Tensor h({m, n});
    auto in = z.values();
    auto out = h.values();
    if (std::holds_alternative<ReLU>(act.kind())) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
    } else {
        const ScalarForm f = scalar_form(act);
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = f.value(in[i]);
    }
    return h;
}

Tensor activation_backward(const Activation& act, const Tensor& z, const Tensor& grad_h) {
    validate(act);
    const std::size_t m = z.rows(), n = z.cols();
    if (grad_h.rows() != m || grad_h.cols() != act.output_width(n))
        throw ShapeError("activation gradient shape " + grad_h.shape_string() +
                         " does not match pre-activation " + z.shape_string());
    if (std::holds_alternative<Identity>(act.kind())) return grad_h;
    Tensor grad_z({m, n});
    if (act.width_doubling()) {
        const bool fourier = std::holds_alternative<Fourier>(act.kind());
        for (std::size_t r = 0; r < m; ++r) {
            auto in = z.row(r);
            auto g = grad_h.row(r);
            auto out = grad_z.row(r);
            for (std::size_t i = 0; i < n; ++i) {
                const double v = in[i];
                if (fourier) {
                    out[i] = g[2 * i] * std::cos(v) - g[2 * i + 1] * std::sin(v);
                } else {
                    out[i] = (v > 0.0 ? g[2 * i] : 0.0) - (v < 0.0 ? g[2 * i + 1] : 0.0);
                }
            }
        }
        return grad_z;
    }
    auto in = z.values();
    auto g = grad_h.values();
    auto out = grad_z.values();
    const ScalarForm f = scalar_form(act);
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = g[i] * f.derivative(in[i]);
    return grad_z;
}

}  // namespace plastica::nn
