#include "plastica/theory.hpp"

#include "plastica/metrics.hpp"
#include "plastica/seed.hpp"
#include "plastica/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace plastica::theory {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string to_string(Relation r) {
    switch (r) {
        case Relation::Less: return "<";
        case Relation::LessEqual: return "<=";
        case Relation::GreaterEqual: return ">=";
        case Relation::Greater: return ">";
        case Relation::Equal: return "==";
    }
    return "?";
}

ReportEntry& VerificationReport::add_decided(std::string label, double measured, Relation rel, double bound, bool ok,
                                             double margin) {
    entries.push_back({std::move(label), measured, bound, rel, ok, margin});
    if (entries.size() == 1 || margin < worst_margin) worst_margin = margin;
    pass = pass && ok;
    return entries.back();
}

ReportEntry& VerificationReport::add(std::string label, double measured, Relation rel, double bound) {
    bool ok = false;
    double margin = 0.0;
    switch (rel) {
        case Relation::Less: ok = measured < bound; margin = bound - measured; break;
        case Relation::LessEqual: ok = measured <= bound; margin = bound - measured; break;
        case Relation::Greater: ok = measured > bound; margin = measured - bound; break;
        case Relation::GreaterEqual: ok = measured >= bound; margin = measured - bound; break;
        case Relation::Equal: ok = measured == bound; margin = -std::abs(measured - bound); break;
    }
    if (std::isnan(measured)) ok = false;
    return add_decided(std::move(label), measured, rel, bound, ok, margin);
}

std::string VerificationReport::serialize() const {
    std::ostringstream os;
    os << "check=" << check << '\n';
    os << "pass=" << (pass ? "true" : "false") << '\n';
    os << "worst_margin=" << fmt(worst_margin) << '\n';
    os << "entries=" << entries.size() << '\n';
    for (const auto& [k, v] : params) os << "param." << k << '=' << v << '\n';
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        const std::string p = "entry." + std::to_string(i) + '.';
        os << p << "label=" << e.label << '\n'
           << p << "measured=" << fmt(e.measured) << '\n'
           << p << "relation=" << to_string(e.relation) << '\n'
           << p << "bound=" << fmt(e.bound) << '\n'
           << p << "margin=" << fmt(e.margin) << '\n'
           << p << "pass=" << (e.pass ? "true" : "false") << '\n';
    }
    return os.str();
}

void VerificationReport::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report " + path.string());
    out << serialize();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Quadratic task sequences

void Thm1Config::validate() const {
    if (dim == 0 || num_tasks == 0 || iterations == 0) throw ConfigError("dim, num_tasks and iterations must be positive");
    if (!(step_size > 0.0)) throw ConfigError("step_size must be positive");
    if (!(strong_convexity > 0.0)) throw ConfigError("strong_convexity must be positive");
    if (!(step_size * strong_convexity < 1.0)) throw ConfigError("step_size * strong_convexity must be below 1");
    if (!(param_bound > 0.0)) throw ConfigError("param_bound must be positive");
    if (hessian_range) {
        const auto [lo, hi] = *hessian_range;
        if (!(lo > 0.0 && hi >= lo)) throw ConfigError("hessian_range must satisfy 0 < lo <= hi");
    }
}

double theorem1_log_bound(double param_bound, double step_size, double strong_convexity, std::size_t iterations) {
    const double t = static_cast<double>(iterations);
    const double log_rate = std::log1p(-step_size * strong_convexity);
    const double log_rate_t = t * log_rate;
    return std::log(2.0 * param_bound) + log_rate_t - std::log(step_size * t) - std::log(-std::expm1(log_rate_t));
}

double theorem1_bound(double param_bound, double step_size, double strong_convexity, std::size_t iterations) {
    return std::exp(theorem1_log_bound(param_bound, step_size, strong_convexity, iterations));
}

double gd_bound(double param_bound, double step_size, std::size_t iterations) {
    return param_bound * param_bound / (step_size * static_cast<double>(iterations));
}

VerificationReport verify_theorem1(const Thm1Config& cfg) {
    cfg.validate();
    const auto d = static_cast<Eigen::Index>(cfg.dim);
    const Eigen::Index n = 2 * d;
    const double lo = cfg.hessian_range ? cfg.hessian_range->first : cfg.strong_convexity;
    const double hi = cfg.hessian_range ? cfg.hessian_range->second : 1.0 / cfg.step_size;

    Rng rng(derive_seed(cfg.seed, {stream_tag::kTheory, 1}));
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;
    auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal(rng);
        return m;
    };

    // X = U diag(s) V^T with orthonormal U (n x d), V (d x d); Hessian 2 X^T X / n has eigenvalues 2 s^2 / n.
    const Eigen::MatrixXd u = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(n, d)).householderQ() *
                              Eigen::MatrixXd::Identity(n, d);
    const Eigen::MatrixXd v = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(d, d)).householderQ() *
                              Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd s(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        double lam = lo + (hi - lo) * unif(rng);
        if (i == 0) lam = lo;
        if (i == d - 1 && d > 1) lam = hi;
        s(i) = std::sqrt(lam * static_cast<double>(n) / 2.0);
    }
    const Eigen::MatrixXd x = u * s.asDiagonal() * v.transpose();

    const Eigen::MatrixXd hessian = 2.0 * x.transpose() * x / static_cast<double>(n);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian, Eigen::EigenvaluesOnly);
    const double lam_min = eig.eigenvalues().minCoeff();
    const double lam_max = eig.eigenvalues().maxCoeff();
    if (lam_min < cfg.strong_convexity * (1.0 - 1e-9))
        throw ConfigError("constructed Hessian has smallest eigenvalue " + fmt(lam_min) + " below mu = " +
                          fmt(cfg.strong_convexity));
    if (cfg.step_size * lam_max > 1.0 + 1e-9)
        throw ConfigError("step_size * largest Hessian eigenvalue = " + fmt(cfg.step_size * lam_max) +
                          " exceeds 1");

    auto draw_optimum = [&] {
        Eigen::VectorXd dir(d);
        for (Eigen::Index i = 0; i < d; ++i) dir(i) = normal(rng);
        dir.normalize();
        const double radius = cfg.param_bound * std::pow(unif(rng), 1.0 / static_cast<double>(d));
        return Eigen::VectorXd(radius * dir);
    };

    VerificationReport report;
    report.check = "thm1";
    report.params = {{"dim", std::to_string(cfg.dim)},
                     {"num_tasks", std::to_string(cfg.num_tasks)},
                     {"iterations", std::to_string(cfg.iterations)},
                     {"step_size", fmt(cfg.step_size)},
                     {"strong_convexity", fmt(cfg.strong_convexity)},
                     {"param_bound", fmt(cfg.param_bound)},
                     {"seed", std::to_string(cfg.seed)},
                     {"hessian_min_eigenvalue", fmt(lam_min)},
                     {"hessian_max_eigenvalue", fmt(lam_max)}};

    const double log_bound = theorem1_log_bound(cfg.param_bound, cfg.step_size, cfg.strong_convexity, cfg.iterations);
    const double bound = std::exp(log_bound);
    const bool log_space = !(bound >= 1e-300);
    report.params.emplace_back("log_bound", fmt(log_bound));

    // The iterate is stored relative to the current optimum so that tiny gaps
    // are not lost to cancellation against the optimum's magnitude.
    Eigen::VectorXd optimum = draw_optimum();
    Eigen::VectorXd delta = -optimum;  // initial parameters are zero
    const double scale = 2.0 / static_cast<double>(n);
    for (std::size_t task = 0; task < cfg.num_tasks; ++task) {
        if (task > 0) {
            const Eigen::VectorXd next = draw_optimum();
            delta += optimum - next;
            optimum = next;
        }
        for (std::size_t t = 0; t < cfg.iterations; ++t) delta -= cfg.step_size * scale * (x.transpose() * (x * delta));
        const double gap = (x * delta).squaredNorm() / static_cast<double>(n);
        const std::string label = "task " + std::to_string(task) + " suboptimality gap";
        if (!std::isfinite(gap)) {
            report.add_decided(label, gap, Relation::Less, bound, false, -kInf);
        } else if (log_space) {
            const double log_gap = gap > 0.0 ? std::log(gap) : -kInf;
            report.add_decided(label, gap, Relation::Less, bound, log_gap < log_bound, bound - gap);
        } else {
            report.add(label, gap, Relation::Less, bound);
        }
        if (task == 0)
            report.add("task 0 plain gradient descent bound", gap, Relation::Less,
                       gd_bound(cfg.param_bound, cfg.step_size, cfg.iterations));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Deep diagonal linear networks

namespace {

// theta[l * dim + i] is layer l, coordinate i. The input covariance is the
// identity, so each coordinate's loss is (target_i - prod_l theta_{l,i})^2.
struct DiagonalNet {
    std::size_t depth, dim;
    std::vector<double> theta;

    double& at(std::size_t l, std::size_t i) { return theta[l * dim + i]; }
    double at(std::size_t l, std::size_t i) const { return theta[l * dim + i]; }

    double product(std::size_t i) const {
        double p = 1.0;
        for (std::size_t l = 0; l < depth; ++l) p *= at(l, i);
        return p;
    }

    void step(const std::vector<double>& target, double lr) {
        std::vector<double> grad(theta.size());
        for (std::size_t i = 0; i < dim; ++i) {
            const double resid = target[i] - product(i);
            for (std::size_t l = 0; l < depth; ++l) {
                double others = 1.0;
                for (std::size_t k = 0; k < depth; ++k)
                    if (k != l) others *= at(k, i);
                grad[l * dim + i] = -2.0 * resid * others;
            }
        }
        for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= lr * grad[j];
    }
};

void validate(const DiagonalDynamicsConfig& cfg) {
    if (cfg.depth == 0 || cfg.dim == 0) throw ConfigError("depth and dim must be positive");
    if (cfg.num_tasks == 0 || cfg.steps < cfg.num_tasks) throw ConfigError("need at least one step per task");
    if (!(cfg.step_size > 0.0)) throw ConfigError("step_size must be positive");
}

// Per coordinate, layer magnitudes in [0.5, 1.5] pairwise at least 1e-3 apart, random signs.
DiagonalNet random_diagonal_net(const DiagonalDynamicsConfig& cfg, Rng& rng) {
    std::uniform_real_distribution<double> mag(0.5, 1.5);
    std::bernoulli_distribution flip(0.5);
    DiagonalNet net{cfg.depth, cfg.dim, std::vector<double>(cfg.depth * cfg.dim)};
    for (std::size_t i = 0; i < cfg.dim; ++i) {
        std::vector<double> m(cfg.depth);
        for (std::size_t l = 0; l < cfg.depth; ++l) {
            for (;;) {
                m[l] = mag(rng);
                bool ok = true;
                for (std::size_t k = 0; k < l; ++k) ok = ok && std::abs(m[l] - m[k]) >= 1e-3;
                if (ok) break;
            }
            net.at(l, i) = flip(rng) ? -m[l] : m[l];
        }
    }
    return net;
}

std::vector<std::vector<double>> random_targets(const DiagonalDynamicsConfig& cfg, Rng& rng) {
    std::uniform_real_distribution<double> mag(0.5, 2.0);
    std::bernoulli_distribution flip(0.5);
    std::vector<std::vector<double>> out(cfg.num_tasks, std::vector<double>(cfg.dim));
    for (auto& task : out)
        for (double& s : task) {
            s = mag(rng);
            if (flip(rng)) s = -s;
        }
    return out;
}

std::size_t task_of_step(const DiagonalDynamicsConfig& cfg, std::size_t t) {
    return std::min(cfg.num_tasks - 1, t * cfg.num_tasks / cfg.steps);
}

std::vector<std::pair<std::string, std::string>> diag_params(const DiagonalDynamicsConfig& cfg) {
    return {{"depth", std::to_string(cfg.depth)},         {"dim", std::to_string(cfg.dim)},
            {"steps", std::to_string(cfg.steps)},         {"num_tasks", std::to_string(cfg.num_tasks)},
            {"step_size", fmt(cfg.step_size)},            {"seed", std::to_string(cfg.seed)}};
}

}  // namespace

VerificationReport verify_lemma_equality(const DiagonalDynamicsConfig& cfg) {
    validate(cfg);
    Rng rng(derive_seed(cfg.seed, {stream_tag::kTheory, 2, cfg.depth, cfg.dim}));
    DiagonalNet net = random_diagonal_net(cfg, rng);
    // duplicate layer 0 into layer 1 on even coordinates
    if (cfg.depth >= 2)
        for (std::size_t i = 0; i < cfg.dim; i += 2) net.at(1, i) = net.at(0, i);
    const auto targets = random_targets(cfg, rng);

    struct Pair {
        std::size_t a, b, i;
    };
    std::vector<Pair> equal_pairs, distinct_pairs;
    for (std::size_t i = 0; i < cfg.dim; ++i)
        for (std::size_t a = 0; a < cfg.depth; ++a)
            for (std::size_t b = a + 1; b < cfg.depth; ++b)
                (net.at(a, i) == net.at(b, i) ? equal_pairs : distinct_pairs).push_back({a, b, i});

    double worst_rel = 0.0;
    double min_gap = kInf;
    std::size_t non_finite = 0;
    auto inspect = [&] {
        for (const auto& p : equal_pairs) {
            const double x = net.at(p.a, p.i), y = net.at(p.b, p.i);
            const double scale = std::max(std::abs(x), std::abs(y));
            const double rel = scale > 0.0 ? std::abs(x - y) / scale : 0.0;
            worst_rel = std::max(worst_rel, rel);
        }
        for (const auto& p : distinct_pairs) min_gap = std::min(min_gap, std::abs(net.at(p.a, p.i) - net.at(p.b, p.i)));
        for (double v : net.theta)
            if (!std::isfinite(v)) ++non_finite;
    };
    inspect();
    for (std::size_t t = 0; t < cfg.steps; ++t) {
        net.step(targets[task_of_step(cfg, t)], cfg.step_size);
        inspect();
    }

    VerificationReport report;
    report.check = "lemma1";
    report.params = diag_params(cfg);
    report.params.emplace_back("equal_pairs", std::to_string(equal_pairs.size()));
    report.params.emplace_back("distinct_pairs", std::to_string(distinct_pairs.size()));
    report.add("equal-at-init pairs, max relative difference", worst_rel, Relation::LessEqual, kEqualityRelTol);
    report.add("distinct-at-init pairs, min absolute gap", min_gap, Relation::Greater, kDistinctGapFloor);
    report.add("non-finite parameter values", static_cast<double>(non_finite), Relation::Equal, 0.0);
    return report;
}

VerificationReport verify_lemma_nonzero(const DiagonalDynamicsConfig& cfg) {
    validate(cfg);
    Rng rng(derive_seed(cfg.seed, {stream_tag::kTheory, 3, cfg.depth, cfg.dim}));
    const DiagonalNet init = random_diagonal_net(cfg, rng);
    const auto targets = random_targets(cfg, rng);

    auto product_matrix = [](const DiagonalNet& n) {
        Tensor m({n.dim, n.dim});
        for (std::size_t i = 0; i < n.dim; ++i) m(i, i) = n.product(i);
        return m;
    };

    DiagonalNet net = init;
    std::vector<bool> was_zero(cfg.dim, false);
    for (std::size_t i = 0; i < cfg.dim; ++i) was_zero[i] = std::abs(net.product(i)) <= kZeroTol;
    std::size_t consecutive = 0, transient = 0;
    double min_end_sv = kInf;
    for (std::size_t t = 0; t < cfg.steps; ++t) {
        const std::size_t task = task_of_step(cfg, t);
        net.step(targets[task], cfg.step_size);
        for (std::size_t i = 0; i < cfg.dim; ++i) {
            const bool zero = !(std::abs(net.product(i)) > kZeroTol);
            if (zero && was_zero[i]) ++consecutive;
            if (zero) ++transient;
            was_zero[i] = zero;
        }
        if (t + 1 == cfg.steps || task_of_step(cfg, t + 1) != task)
            min_end_sv = std::min(min_end_sv, metrics::min_singular_value(product_matrix(net)));
    }

    VerificationReport report;
    report.check = "lemma2";
    report.params = diag_params(cfg);
    report.params.emplace_back("single_step_zero_events", std::to_string(transient));
    report.add("consecutive-step zero events", static_cast<double>(consecutive), Relation::Equal, 0.0);
    report.add("end-of-task min singular value of product", min_end_sv, Relation::GreaterEqual, kMinSingularFloor);

    // Two zeroed layers on coordinate 0 pin its product to zero.
    if (cfg.depth >= 2) {
        DiagonalNet pinned = init;
        pinned.at(0, 0) = 0.0;
        pinned.at(1, 0) = 0.0;
        double worst = 0.0;
        for (std::size_t t = 0; t < cfg.steps; ++t) {
            pinned.step(targets[task_of_step(cfg, t)], cfg.step_size);
            worst = std::max(worst, std::abs(pinned.product(0)));
        }
        report.add("two zeroed layers, max |product| afterwards", worst, Relation::Equal, 0.0);
    } else {
        report.params.emplace_back("two_zero_case", "not applicable at depth 1");
    }

    // One zeroed layer is revived by the next gradient step.
    DiagonalNet revived = init;
    revived.at(0, 0) = 0.0;
    revived.step(targets[0], cfg.step_size);
    report.add("one zeroed layer, |product| after one step", std::abs(revived.product(0)), Relation::Greater, kZeroTol);
    return report;
}

// ---------------------------------------------------------------------------
// [sin, cos] local linearity

double fourier_linearity_constant() { return std::numbers::sqrt2 * std::numbers::pi * std::numbers::pi / 256.0; }

LineFitErrors fourier_line_errors(double z, double half_width, double inner_step) {
    const auto count = static_cast<std::size_t>(std::ceil(2.0 * half_width / inner_step)) + 1;
    std::vector<double> xs(count);
    for (std::size_t k = 0; k < count; ++k)
        xs[k] = z - half_width + 2.0 * half_width * static_cast<double>(k) / static_cast<double>(count - 1);

    auto taylor_error = [&](auto f, double f0, double slope) {
        double worst = 0.0;
        for (double x : xs) worst = std::max(worst, std::abs(f(x) - (f0 + slope * (x - z))));
        return worst;
    };
    auto lsq_error = [&](auto f) {
        double mx = 0.0, my = 0.0;
        for (double x : xs) {
            mx += x;
            my += f(x);
        }
        mx /= static_cast<double>(count);
        my /= static_cast<double>(count);
        double sxy = 0.0, sxx = 0.0;
        for (double x : xs) {
            sxy += (x - mx) * (f(x) - my);
            sxx += (x - mx) * (x - mx);
        }
        const double slope = sxy / sxx;
        double worst = 0.0;
        for (double x : xs) worst = std::max(worst, std::abs(f(x) - (my + slope * (x - mx))));
        return worst;
    };
    auto sin_fn = [](double x) { return std::sin(x); };
    auto cos_fn = [](double x) { return std::cos(x); };
    return {taylor_error(sin_fn, std::sin(z), std::cos(z)), taylor_error(cos_fn, std::cos(z), -std::sin(z)),
            lsq_error(sin_fn), lsq_error(cos_fn)};
}

VerificationReport verify_fourier_linearity(const FourierLinearityConfig& cfg) {
    if (!(cfg.grid_step > 0.0) || !(cfg.inner_step > 0.0) || !(cfg.half_width > 0.0))
        throw ConfigError("grid_step, inner_step and half_width must be positive");
    const double threshold = cfg.threshold > 0.0 ? cfg.threshold : fourier_linearity_constant() + 1e-6;
    const double pi = std::numbers::pi;
    const auto points = static_cast<std::size_t>(std::floor(2.0 * pi / cfg.grid_step + 1e-9)) + 1;

    VerificationReport report;
    report.check = "prop1";
    report.params = {{"grid_step", fmt(cfg.grid_step)},
                     {"inner_step", fmt(cfg.inner_step)},
                     {"half_width", fmt(cfg.half_width)},
                     {"threshold", fmt(threshold)},
                     {"grid_points", std::to_string(points)}};

    double worst = -1.0, worst_z = 0.0, worst_lsq = 0.0;
    std::size_t lsq_above_taylor = 0;
    for (std::size_t k = 0; k < points; ++k) {
        const double z = -pi + cfg.grid_step * static_cast<double>(k);
        const LineFitErrors e = fourier_line_errors(z, cfg.half_width, cfg.inner_step);
        const double taylor = std::min(e.taylor_sin, e.taylor_cos);
        const double lsq = std::min(e.lsq_sin, e.lsq_cos);
        if (e.lsq_sin > e.taylor_sin || e.lsq_cos > e.taylor_cos) ++lsq_above_taylor;
        if (taylor > worst) {
            worst = taylor;
            worst_z = z;
        }
        worst_lsq = std::max(worst_lsq, lsq);
        report.add("z=" + fmt(z) + " min-pair tangent-line error", taylor, Relation::LessEqual, threshold);
    }
    report.params.emplace_back("worst_z", fmt(worst_z));
    report.params.emplace_back("worst_tangent_error", fmt(worst));
    report.params.emplace_back("worst_least_squares_error", fmt(worst_lsq));
    report.add("grid points where the least-squares line is worse than the tangent line",
               static_cast<double>(lsq_above_taylor), Relation::Equal, 0.0);
    return report;
}

}  // namespace plastica::theory
