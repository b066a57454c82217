#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace plastica::theory {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Relation { Less, LessEqual, GreaterEqual, Greater, Equal };

std::string to_string(Relation r);

struct ReportEntry {
    std::string label;
    double measured = 0.0;
    double bound = 0.0;
    Relation relation = Relation::Less;
    bool pass = false;
    double margin = 0.0;  // signed distance to the bound, positive when passing
};

struct VerificationReport {
    std::string check;
    std::vector<std::pair<std::string, std::string>> params;
    std::vector<ReportEntry> entries;
    bool pass = true;
    double worst_margin = 0.0;

    /// Appends an entry, comparing measured against bound with the given relation.
    ReportEntry& add(std::string label, double measured, Relation rel, double bound);
    /// Appends an entry whose verdict was decided elsewhere (e.g. in log space).
    ReportEntry& add_decided(std::string label, double measured, Relation rel, double bound, bool pass, double margin);

    /// key=value lines, one entry per block of keys.
    std::string serialize() const;
    void write(const std::filesystem::path& path) const;
};

// ---------------------------------------------------------------------------
// GD on a sequence of strongly convex quadratics

struct Thm1Config {
    std::size_t dim = 10;
    std::size_t num_tasks = 10;
    std::size_t iterations = 100;  // gradient steps per task
    double step_size = 0.1;
    double strong_convexity = 1.0;  // lower bound on the Hessian spectrum
    double param_bound = 1.0;       // optima lie in the ball of this radius
    std::uint64_t seed = 0;
    /// Hessian eigenvalues are drawn from [lo, hi]; defaults to [mu, 1/alpha].
    std::optional<std::pair<double, double>> hessian_range;

    void validate() const;
};

/// 2D(1-a m)^T / (a T (1 - (1-a m)^T)), evaluated in log space.
double theorem1_log_bound(double param_bound, double step_size, double strong_convexity, std::size_t iterations);
double theorem1_bound(double param_bound, double step_size, double strong_convexity, std::size_t iterations);

/// Single-task plain GD bound D^2 / (a T).
double gd_bound(double param_bound, double step_size, std::size_t iterations);

VerificationReport verify_theorem1(const Thm1Config& cfg);

// ---------------------------------------------------------------------------
// Deep diagonal linear networks

struct DiagonalDynamicsConfig {
    std::size_t depth = 2;
    std::size_t dim = 8;
    std::size_t steps = 5000;
    std::uint64_t seed = 0;
    std::size_t num_tasks = 10;
    double step_size = 0.02;
};

VerificationReport verify_lemma_equality(const DiagonalDynamicsConfig& cfg);
VerificationReport verify_lemma_nonzero(const DiagonalDynamicsConfig& cfg);

inline constexpr double kEqualityRelTol = 1e-10;
inline constexpr double kDistinctGapFloor = 1e-8;
inline constexpr double kZeroTol = 1e-12;
inline constexpr double kMinSingularFloor = 1e-8;

// ---------------------------------------------------------------------------
// [sin, cos] local linearity

struct FourierLinearityConfig {
    double grid_step = 0.01;
    double inner_step = 1e-3;
    double half_width = 0.785398163397448309616;  // pi / 4
    double threshold = 0.0;                       // 0 selects sqrt(2) pi^2 / 256 + 1e-6
};

double fourier_linearity_constant();

struct LineFitErrors {
    double taylor_sin = 0.0, taylor_cos = 0.0;
    double lsq_sin = 0.0, lsq_cos = 0.0;
};

/// Max abs errors of the tangent line at z and of the least-squares line on [z-h, z+h].
LineFitErrors fourier_line_errors(double z, double half_width, double inner_step);

VerificationReport verify_fourier_linearity(const FourierLinearityConfig& cfg = {});

}  // namespace plastica::theory
