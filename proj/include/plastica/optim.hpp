#pragma once

#include "plastica/nn/network.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace plastica::optim {

enum class OptimizerKind { SGD, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Adam;
    double step_size = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

struct OptimizerState {
    nn::Gradients first_moment;
    nn::Gradients second_moment;
    std::uint64_t step = 0;

    explicit OptimizerState(const nn::Network& net);
};

/// In-place update. Throws NonFiniteError naming the offending parameter.
void optimizer_step(nn::Network& net, OptimizerState& state, const nn::Gradients& grads,
                    const OptimizerConfig& cfg);

// ---------------------------------------------------------------------------
// Plasticity interventions

struct NoIntervention {};
struct L2Zero {
    double strength = 0.0;
};
struct L2Init {
    double strength = 0.0;
};
/// strength * sum_l (sigma_max(W_l) - 1)^2, sigma_max by power iteration.
struct Spectral {
    double strength = 0.0;
    int power_iters = 10;
};
struct ShrinkPerturb {
    double shrink = 0.8;
    double noise_std = 0.01;
    int every_n_tasks = 1;
};
struct ReDO {
    double threshold = 0.03;
    int every_n_tasks = 1;
};

using InterventionConfig = std::variant<NoIntervention, L2Zero, L2Init, Spectral, ShrinkPerturb, ReDO>;

void validate(const InterventionConfig& cfg);
std::string describe(const InterventionConfig& cfg);
bool is_regularizer(const InterventionConfig& cfg);

/// Warm-start cache of the leading right singular vector of each weight matrix.
struct SpectralState {
    std::vector<std::vector<double>> right_vectors;
};

struct PowerIterationResult {
    double sigma = 0.0;
    std::vector<double> u;  // left singular vector
    std::vector<double> v;  // right singular vector
};

/// Leading singular triple of w by `iters` rounds on W^T W. `v0` seeds the
/// iteration when it has the right length.
PowerIterationResult power_iteration(const Tensor& w, int iters, const std::vector<double>* v0 = nullptr);

/// Gradient of the regularizer penalty. Reset-type configs throw.
nn::Gradients regularizer_grad(const nn::Network& net, const InterventionConfig& cfg,
                               SpectralState* state = nullptr);

/// Penalty value matching regularizer_grad (spectral uses power iteration).
double regularizer_penalty(const nn::Network& net, const InterventionConfig& cfg);

/// theta <- shrink * theta + N(0, noise_std^2), deterministic in seed.
void shrink_and_perturb(nn::Network& net, double shrink, double noise_std, std::uint64_t seed);

struct RedoScores {
    std::vector<std::vector<double>> per_layer;  // hidden layers only, one score per pre-activation unit
};

/// Normalized mean |h| per hidden unit; (sin, cos) or (relu+, relu-) pairs
/// sharing a pre-activation are one unit.
RedoScores redo_scores(const nn::Network& net, const nn::ForwardTrace& trace);

/// Recycles hidden units whose score is <= threshold: fresh Glorot incoming
/// row, zero bias, zero outgoing column(s). Returns the recycled count.
int redo_reset(nn::Network& net, const nn::ForwardTrace& trace, double threshold, std::uint64_t seed);

}  // namespace plastica::optim
