#include "plastica/optim.hpp"

#include "plastica/seed.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace plastica::optim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_grad(const Tensor& param, const Tensor& grad, std::size_t layer, bool bias) {
    if (!param.same_shape(grad))
        throw ShapeError("gradient for " + nn::parameter_name(layer, bias) + " has shape " + grad.shape_string() +
                         ", expected " + param.shape_string());
    if (!grad.all_finite()) throw NonFiniteError("non-finite gradient for " + nn::parameter_name(layer, bias));
}

void normalize(std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n == 0.0) return;
    for (double& x : v) x /= n;
}

}  // namespace

void OptimizerConfig::validate() const {
    if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw std::invalid_argument("Adam betas must lie in [0, 1)");
    if (!(adam_eps >= 0.0)) throw std::invalid_argument("Adam epsilon must be non-negative");
}

OptimizerState::OptimizerState(const nn::Network& net)
    : first_moment(net.zero_gradients()), second_moment(net.zero_gradients()) {}

void optimizer_step(nn::Network& net, OptimizerState& state, const nn::Gradients& grads, const OptimizerConfig& cfg) {
    cfg.validate();
    auto& params = net.params();
    if (grads.size() != params.size()) throw ShapeError("gradient set depth does not match network");
    for (std::size_t l = 0; l < params.size(); ++l) {
        check_grad(params[l].weight, grads[l].weight, l, false);
        check_grad(params[l].bias, grads[l].bias, l, true);
    }

    if (cfg.kind == OptimizerKind::SGD) {
        for (std::size_t l = 0; l < params.size(); ++l) {
            auto w = params[l].weight.values();
            auto gw = grads[l].weight.values();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.step_size * gw[i];
            if (!net.layers()[l].use_bias) continue;
            auto b = params[l].bias.values();
            auto gb = grads[l].bias.values();
            for (std::size_t i = 0; i < b.size(); ++i) b[i] -= cfg.step_size * gb[i];
        }
        ++state.step;
        return;
    }

    if (state.first_moment.size() != params.size()) throw ShapeError("optimizer state does not match network");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
    auto update = [&](std::span<double> p, std::span<const double> g, std::span<double> m, std::span<double> v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p[i] -= cfg.step_size * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        }
    };
    for (std::size_t l = 0; l < params.size(); ++l) {
        update(params[l].weight.values(), grads[l].weight.values(), state.first_moment[l].weight.values(),
               state.second_moment[l].weight.values());
        if (net.layers()[l].use_bias)
            update(params[l].bias.values(), grads[l].bias.values(), state.first_moment[l].bias.values(),
                   state.second_moment[l].bias.values());
    }
}

void validate(const InterventionConfig& cfg) {
    std::visit(overloaded{
                   [](const NoIntervention&) {},
                   [](const L2Zero& c) {
                       if (!(c.strength >= 0.0)) throw std::invalid_argument("l2 strength must be >= 0");
                   },
                   [](const L2Init& c) {
                       if (!(c.strength >= 0.0)) throw std::invalid_argument("l2-init strength must be >= 0");
                   },
                   [](const Spectral& c) {
                       if (!(c.strength >= 0.0)) throw std::invalid_argument("spectral strength must be >= 0");
                       if (c.power_iters < 1) throw std::invalid_argument("power_iters must be >= 1");
                   },
                   [](const ShrinkPerturb& c) {
                       if (!(c.shrink > 0.0 && c.shrink <= 1.0)) throw std::invalid_argument("shrink must lie in (0, 1]");
                       if (!(c.noise_std >= 0.0)) throw std::invalid_argument("noise_std must be >= 0");
                       if (c.every_n_tasks < 1) throw std::invalid_argument("every_n_tasks must be >= 1");
                   },
                   [](const ReDO& c) {
                       if (!(c.threshold >= 0.0)) throw std::invalid_argument("redo threshold must be >= 0");
                       if (c.every_n_tasks < 1) throw std::invalid_argument("every_n_tasks must be >= 1");
                   },
               },
               cfg);
}

std::string describe(const InterventionConfig& cfg) {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const NoIntervention&) { os << "none"; },
                   [&](const L2Zero& c) { os << "l2(" << c.strength << ')'; },
                   [&](const L2Init& c) { os << "l2_init(" << c.strength << ')'; },
                   [&](const Spectral& c) { os << "spectral(" << c.strength << ',' << c.power_iters << ')'; },
                   [&](const ShrinkPerturb& c) {
                       os << "shrink_perturb(" << c.shrink << ',' << c.noise_std << ',' << c.every_n_tasks << ')';
                   },
                   [&](const ReDO& c) { os << "redo(" << c.threshold << ',' << c.every_n_tasks << ')'; },
               },
               cfg);
    return os.str();
}

bool is_regularizer(const InterventionConfig& cfg) {
    return std::holds_alternative<NoIntervention>(cfg) || std::holds_alternative<L2Zero>(cfg) ||
           std::holds_alternative<L2Init>(cfg) || std::holds_alternative<Spectral>(cfg);
}

PowerIterationResult power_iteration(const Tensor& w, int iters, const std::vector<double>* v0) {
    const std::size_t rows = w.rows(), cols = w.cols();
    PowerIterationResult r;
    if (v0 && v0->size() == cols) {
        r.v = *v0;
    } else {
        // fixed pseudo-random start; a constant vector can be orthogonal to the top direction
        Rng rng(derive_seed(cols, {rows}));
        std::normal_distribution<double> dist;
        r.v.resize(cols);
        for (double& x : r.v) x = dist(rng);
    }
    normalize(r.v);
    r.u.assign(rows, 0.0);
    auto apply_w = [&] {
        for (std::size_t i = 0; i < rows; ++i) r.u[i] = dot(w.row(i), r.v);
    };
    for (int k = 0; k < iters; ++k) {
        apply_w();
        std::vector<double> next(cols, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            auto row = w.row(i);
            for (std::size_t j = 0; j < cols; ++j) next[j] += row[j] * r.u[i];
        }
        normalize(next);
        r.v = std::move(next);
    }
    apply_w();
    double s = 0.0;
    for (double x : r.u) s += x * x;
    r.sigma = std::sqrt(s);
    if (r.sigma > 0.0)
        for (double& x : r.u) x /= r.sigma;
    return r;
}

nn::Gradients regularizer_grad(const nn::Network& net, const InterventionConfig& cfg, SpectralState* state) {
    if (!is_regularizer(cfg)) throw std::invalid_argument("regularizer_grad called with reset-type intervention " + describe(cfg));
    validate(cfg);
    nn::Gradients g = net.zero_gradients();
    const auto& params = net.params();
    const auto& init = net.init_snapshot();

    auto l2 = [&](double strength, bool toward_init) {
        for (std::size_t l = 0; l < params.size(); ++l) {
            auto fill = [&](std::span<double> out, std::span<const double> p, std::span<const double> p0) {
                for (std::size_t i = 0; i < out.size(); ++i)
                    out[i] = 2.0 * strength * (toward_init ? p[i] - p0[i] : p[i]);
            };
            fill(g[l].weight.values(), params[l].weight.values(), init[l].weight.values());
            if (net.layers()[l].use_bias) fill(g[l].bias.values(), params[l].bias.values(), init[l].bias.values());
        }
    };

    std::visit(overloaded{
                   [](const NoIntervention&) {},
                   [&](const L2Zero& c) { l2(c.strength, false); },
                   [&](const L2Init& c) { l2(c.strength, true); },
                   [&](const Spectral& c) {
                       if (state && state->right_vectors.size() != params.size()) state->right_vectors.assign(params.size(), {});
                       for (std::size_t l = 0; l < params.size(); ++l) {
                           const auto* warm = state ? &state->right_vectors[l] : nullptr;
                           auto pi = power_iteration(params[l].weight, c.power_iters, warm);
                           const double coeff = 2.0 * c.strength * (pi.sigma - 1.0);
                           auto& gw = g[l].weight;
                           for (std::size_t i = 0; i < gw.rows(); ++i)
                               for (std::size_t j = 0; j < gw.cols(); ++j) gw(i, j) = coeff * pi.u[i] * pi.v[j];
                           if (state) state->right_vectors[l] = std::move(pi.v);
                       }
                   },
                   [](const auto&) {},
               },
               cfg);
    return g;
}

double regularizer_penalty(const nn::Network& net, const InterventionConfig& cfg) {
    if (!is_regularizer(cfg)) throw std::invalid_argument("regularizer_penalty called with reset-type intervention");
    const auto& params = net.params();
    const auto& init = net.init_snapshot();
    double total = 0.0;
    std::visit(overloaded{
                   [](const NoIntervention&) {},
                   [&](const L2Zero& c) {
                       for (std::size_t l = 0; l < params.size(); ++l) {
                           total += c.strength * squared_norm(params[l].weight.values());
                           if (net.layers()[l].use_bias) total += c.strength * squared_norm(params[l].bias.values());
                       }
                   },
                   [&](const L2Init& c) {
                       for (std::size_t l = 0; l < params.size(); ++l) {
                           auto acc = [&](std::span<const double> p, std::span<const double> p0) {
                               for (std::size_t i = 0; i < p.size(); ++i) total += c.strength * (p[i] - p0[i]) * (p[i] - p0[i]);
                           };
                           acc(params[l].weight.values(), init[l].weight.values());
                           if (net.layers()[l].use_bias) acc(params[l].bias.values(), init[l].bias.values());
                       }
                   },
                   [&](const Spectral& c) {
                       for (const auto& p : params) {
                           const double s = power_iteration(p.weight, c.power_iters).sigma;
                           total += c.strength * (s - 1.0) * (s - 1.0);
                       }
                   },
                   [](const auto&) {},
               },
               cfg);
    return total;
}

void shrink_and_perturb(nn::Network& net, double shrink, double noise_std, std::uint64_t seed) {
    validate(ShrinkPerturb{shrink, noise_std, 1});
    Rng rng(derive_seed(seed, {stream_tag::kShrinkPerturb}));
    std::normal_distribution<double> noise(0.0, noise_std > 0.0 ? noise_std : 1.0);
    auto perturb = [&](std::span<double> p) {
        for (double& x : p) x = shrink * x + (noise_std > 0.0 ? noise(rng) : 0.0);
    };
    for (std::size_t l = 0; l < net.depth(); ++l) {
        perturb(net.params()[l].weight.values());
        if (net.layers()[l].use_bias) perturb(net.params()[l].bias.values());
    }
}

RedoScores redo_scores(const nn::Network& net, const nn::ForwardTrace& trace) {
    if (trace.layers.size() != net.depth()) throw ShapeError("stale trace: depth differs from network");
    RedoScores scores;
    const double m = static_cast<double>(trace.batch_size());
    for (std::size_t l = 0; l + 1 < net.depth(); ++l) {
        const auto& spec = net.layers()[l];
        const Tensor& h = trace.layers[l].out;
        if (h.cols() != spec.out_dim()) throw ShapeError("stale trace: layer output width drifted");
        const std::size_t group = spec.activation.width_doubling() ? 2 : 1;
        std::vector<double> activity(spec.pre_dim, 0.0);
        for (std::size_t r = 0; r < h.rows(); ++r) {
            auto row = h.row(r);
            for (std::size_t j = 0; j < row.size(); ++j) activity[j / group] += std::abs(row[j]);
        }
        double layer_mean = 0.0;
        for (double& a : activity) {
            a /= m;
            layer_mean += a;
        }
        layer_mean /= static_cast<double>(activity.size());
        for (double& a : activity) a = layer_mean > 0.0 ? a / layer_mean : 0.0;
        scores.per_layer.push_back(std::move(activity));
    }
    return scores;
}

int redo_reset(nn::Network& net, const nn::ForwardTrace& trace, double threshold, std::uint64_t seed) {
    validate(ReDO{threshold, 1});
    const RedoScores scores = redo_scores(net, trace);
    Rng rng(derive_seed(seed, {stream_tag::kRedo}));
    int recycled = 0;
    for (std::size_t l = 0; l < scores.per_layer.size(); ++l) {
        const auto& spec = net.layers()[l];
        auto& p = net.params()[l];
        auto& next = net.params()[l + 1].weight;
        const std::size_t group = spec.activation.width_doubling() ? 2 : 1;
        std::uniform_real_distribution<double> dist(-nn::Network::glorot_bound(spec.in_dim, spec.pre_dim),
                                                    nn::Network::glorot_bound(spec.in_dim, spec.pre_dim));
        for (std::size_t i = 0; i < spec.pre_dim; ++i) {
            if (scores.per_layer[l][i] > threshold) continue;
            for (double& w : p.weight.row(i)) w = dist(rng);
            p.bias[i] = 0.0;
            for (std::size_t r = 0; r < next.rows(); ++r)
                for (std::size_t k = 0; k < group; ++k) next(r, group * i + k) = 0.0;
            ++recycled;
        }
    }
    return recycled;
}

}  // namespace plastica::optim
