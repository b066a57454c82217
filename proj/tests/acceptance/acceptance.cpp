// Acceptance suite: one numbered criterion per invocation (or all of them),
// one PASS/FAIL line each.

#include "plastica/metrics.hpp"
#include "plastica/nn/network.hpp"
#include "plastica/optim.hpp"
#include "plastica/runner/cli.hpp"
#include "plastica/runner/config.hpp"
#include "plastica/runner/experiment.hpp"
#include "plastica/runner/summary.hpp"
#include "plastica/streams/task_stream.hpp"
#include "plastica/theory.hpp"

#include "support/gradcheck.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace plastica;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        notes.push_back(std::string(ok ? "  ok    " : "  FAIL  ") + what);
    }
    void note(const std::string& what) { notes.push_back("        " + what); }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path g_out_root = "acceptance_runs";

// ---------------------------------------------------------------------------

Outcome quadratic_sequences() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const double bound = theory::theorem1_bound(1.0, 0.1, 1.0, 100);
    o.require(std::abs(bound - 5.313e-6) < 1e-9, fmt("canonical bound %.6e", bound));
    int failures = 0;
    double worst_ratio = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        theory::Thm1Config cfg;
        cfg.seed = seed;
        const auto report = theory::verify_theorem1(cfg);
        std::size_t tasks = 0;
        for (const auto& e : report.entries) {
            if (e.label.find("suboptimality gap") == std::string::npos) continue;
            ++tasks;
            if (!(e.measured < e.bound)) ++failures;
            worst_ratio = std::max(worst_ratio, e.measured / e.bound);
        }
        if (tasks != cfg.num_tasks || !report.pass) ++failures;
    }
    const double secs = seconds_since(t0);
    o.require(failures == 0, fmt("20 sequences x 10 tasks strictly below the bound (worst gap/bound %.3g)", worst_ratio));
    o.require(secs < 10.0, fmt("runtime %.2f s < 10 s", secs));
    return o;
}

Outcome diagonal_dynamics() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    int runs = 0, equality_violations = 0, zero_violations = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed)
        for (std::size_t depth : {2u, 3u, 4u})
            for (std::size_t dim : {2u, 8u, 32u}) {
                theory::DiagonalDynamicsConfig cfg;
                cfg.seed = seed;
                cfg.depth = depth;
                cfg.dim = dim;
                cfg.steps = 5000;
                cfg.num_tasks = 10;
                for (const auto& e : theory::verify_lemma_equality(cfg).entries) equality_violations += !e.pass;
                for (const auto& e : theory::verify_lemma_nonzero(cfg).entries) zero_violations += !e.pass;
                ++runs;
            }
    const double secs = seconds_since(t0);
    o.require(equality_violations == 0, fmt("equality preservation: %d violations over %d runs", equality_violations, runs));
    o.require(zero_violations == 0, fmt("no consecutive zeros: %d violations over %d runs", zero_violations, runs));
    o.require(secs < 30.0, fmt("runtime %.2f s < 30 s", secs));
    return o;
}

Outcome fourier_linearity() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    theory::FourierLinearityConfig cfg;
    cfg.grid_step = 0.01;
    cfg.threshold = 0.054555;
    const auto report = theory::verify_fourier_linearity(cfg);
    std::string worst_z, worst_tangent, worst_lsq;
    for (const auto& [k, v] : report.params) {
        if (k == "worst_z") worst_z = v;
        if (k == "worst_tangent_error") worst_tangent = v;
        if (k == "worst_least_squares_error") worst_lsq = v;
    }
    const double secs = seconds_since(t0);
    o.require(report.pass, "max over z of min(sin, cos) tangent-line error = " + worst_tangent + " at z = " + worst_z +
                               " (threshold 0.054555)");
    o.note("least-squares line worst error " + worst_lsq);
    o.require(secs < 5.0, fmt("runtime %.2f s < 5 s", secs));
    return o;
}

// ---------------------------------------------------------------------------
// Training experiments

struct VariantResult {
    std::string label;
    runner::ExperimentConfig config;
    runner::Summary summary;
    bool aborted = false;
};

std::vector<VariantResult> run_config(const std::string& file, const std::string& tag) {
    const fs::path path = fs::path(PLASTICA_CONFIG_DIR) / file;
    auto variants = runner::expand_sweep(runner::load_config_file(path), path.parent_path());
    std::vector<VariantResult> out;
    for (auto& v : variants) {
        v.config.validate(true);
        const auto t0 = std::chrono::steady_clock::now();
        const runner::RunLog log = runner::run_experiment(v.config);
        std::string dir_name = tag + "/" + v.label;
        std::replace(dir_name.begin(), dir_name.end(), ',', '_');
        runner::write_run(log, g_out_root / dir_name);
        VariantResult r{v.label, v.config, runner::aggregate({log}, v.label), log.aborted()};
        runner::write_summary_csv(r.summary, g_out_root / dir_name / "summary.csv");
        std::printf("        %s [%s]: %zu seeds in %.1f s\n", tag.c_str(), v.label.c_str(), v.config.seeds.size(),
                    seconds_since(t0));
        std::fflush(stdout);
        out.push_back(std::move(r));
    }
    std::vector<runner::Summary> summaries;
    for (const auto& r : out) summaries.push_back(r.summary);
    runner::emit_plots(summaries, g_out_root / tag / "plots");
    return out;
}

double end_of_task(const runner::Summary& s, std::size_t task, const std::string& metric) {
    return s.end_of_task_row(task).stats[s.metric_index(metric)].mean;
}

Outcome separable_random_labels() {
    Outcome o;
    const auto results = run_config("fig2_separable.toml", "fig2");
    for (const auto& r : results) {
        const auto& net = r.config.network;
        const std::size_t last = r.config.stream_params.num_tasks - 1;
        o.require(!r.aborted, r.label + ": no aborted seeds");
        const double first = end_of_task(r.summary, 0, "train_acc");
        const double final = end_of_task(r.summary, last, "train_acc");
        const std::string line = fmt("%s: task 1 %.4f, task %zu %.4f (change %+.4f)", r.label.c_str(), first, last + 1,
                                     final, final - first);
        if (net.activation == "identity") {
            o.require(final >= first - 0.02, line + ", needs >= -0.02");
        } else if (net.depth >= 2) {
            o.require(final <= first - 0.10, line + ", needs <= -0.10");
        } else {
            o.note(line + " (single layer, not checked)");
        }
    }
    return o;
}

Outcome alpha_linearization() {
    Outcome o;
    const auto results = run_config("fig3_alpha.toml", "fig3");
    std::vector<std::pair<double, const VariantResult*>> by_alpha;
    for (const auto& r : results) {
        o.require(!r.aborted, r.label + ": no aborted seeds");
        by_alpha.emplace_back(r.config.network.alpha.value_or(0.0), &r);
    }
    std::sort(by_alpha.begin(), by_alpha.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    constexpr std::size_t kTask = 19;
    std::vector<double> entropy, acc;
    for (const auto& [alpha, r] : by_alpha) {
        entropy.push_back(end_of_task(r->summary, kTask, "mean_sign_entropy"));
        acc.push_back(end_of_task(r->summary, kTask, "train_acc"));
        o.note(fmt("alpha %.1f: task-20 sign entropy %.4f, train accuracy %.4f", alpha, entropy.back(), acc.back()));
    }
    o.require(by_alpha.size() == 3 && by_alpha[0].first == 0.0 && by_alpha[1].first == 0.5 && by_alpha[2].first == 0.9,
              "variants alpha = 0.0, 0.5, 0.9");
    if (by_alpha.size() == 3) {
        o.require(entropy[0] < entropy[1] && entropy[1] < entropy[2], "sign entropy strictly increasing in alpha");
        o.require(acc[2] - acc[0] >= 0.05, fmt("accuracy(0.9) - accuracy(0.0) = %.4f >= 0.05", acc[2] - acc[0]));
    }
    return o;
}

Outcome deep_fourier() {
    Outcome o;
    auto results = run_config("fig4_activations.toml", "fig4");
    for (auto& r : run_config("fig4_shallow_fourier.toml", "fig4_shallow")) results.push_back(std::move(r));
    constexpr std::size_t kTask = 19;
    const VariantResult* fourier = nullptr;
    for (const auto& r : results) {
        o.require(!r.aborted, r.label + ": no aborted seeds");
        if (r.config.network.activation == "fourier" && r.config.network.first_activation.empty()) fourier = &r;
    }
    if (!fourier) {
        o.require(false, "deep Fourier variant present");
        return o;
    }
    const double ref = end_of_task(fourier->summary, kTask, "train_acc");
    o.note(fmt("deep fourier: task-20 train accuracy %.4f", ref));
    std::size_t baselines = 0;
    for (const auto& r : results) {
        if (&r == fourier) continue;
        const auto& net = r.config.network;
        const std::string name = net.first_activation.empty() ? net.activation : net.first_activation + "+" + net.activation;
        const double acc = end_of_task(r.summary, kTask, "train_acc");
        o.require(ref - acc >= 0.10, fmt("%s: task-20 train accuracy %.4f, margin %.4f >= 0.10", name.c_str(), acc, ref - acc));
        ++baselines;
    }
    o.require(baselines == 4, "four baselines (relu, crelu, sin, shallow fourier + relu)");
    return o;
}

// ---------------------------------------------------------------------------

Outcome gradient_fidelity() {
    Outcome o;
    using testing::LossChoice;
    const std::vector<std::string> kinds{"identity", "relu", "leaky_relu", "sin", "crelu", "fourier", "alpha_relu",
                                         "alpha_sin"};
    const nn::Norm norms[] = {nn::Norm::None, nn::Norm::LayerNorm, nn::Norm::LinearizedLayerNorm};
    Rng rng(2024);
    std::uniform_int_distribution<int> depth_dist(1, 3), width_dist(1, 4), dim_dist(2, 6), batch_dist(1, 5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::set<std::string> seen;
    double worst = 0.0;
    std::string worst_case;
    int failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::string& kind = kinds[trial % kinds.size()];
        const nn::Norm norm = norms[(trial / kinds.size()) % 3];
        const LossChoice loss = (trial / (3 * kinds.size())) % 2 ? LossChoice::SquaredError : LossChoice::CrossEntropy;
        nn::Activation act = nn::Activation::identity();
        if (kind == "relu") act = nn::Activation::relu();
        if (kind == "leaky_relu") act = nn::Activation::leaky_relu(0.01 + 0.3 * unit(rng));
        if (kind == "sin") act = nn::Activation::sin();
        if (kind == "crelu") act = nn::Activation::crelu();
        if (kind == "fourier") act = nn::Activation::fourier();
        if (kind == "alpha_relu") act = nn::Activation::alpha_linearized(nn::Activation::relu(), unit(rng));
        if (kind == "alpha_sin") act = nn::Activation::alpha_linearized(nn::Activation::sin(), unit(rng));

        const std::size_t depth = depth_dist(rng);
        const std::size_t width = 2 * width_dist(rng);  // even, so doubling kinds stay valid; <= 8
        const std::size_t in = dim_dist(rng), out = dim_dist(rng);
        const std::uint64_t seed = derive_seed(7, {static_cast<std::uint64_t>(trial)});
        nn::Network net(nn::mlp_spec(in, out, depth, width, act, norm), seed);
        for (auto& p : net.params())
            for (double& b : p.bias.values()) b = 0.2 * std::normal_distribution<double>()(rng);

        testing::Objective obj;
        obj.loss = loss;
        const std::size_t batch = batch_dist(rng);
        std::uniform_int_distribution<int> cls(0, static_cast<int>(out) - 1);
        do {
            obj.x = testing::random_matrix(batch, in, rng);
        } while (testing::kink_distance(net, obj.x) < 1e-3);
        obj.labels.clear();
        for (std::size_t i = 0; i < batch; ++i) obj.labels.push_back(cls(rng));
        obj.targets = testing::random_matrix(batch, out, rng);

        const auto check = testing::check_gradients(net, obj);
        const std::string label = act.name() + "/" + nn::to_string(norm) + "/" +
                                  (loss == LossChoice::CrossEntropy ? "cross_entropy" : "squared_error") +
                                  fmt("/depth %zu width %zu", depth, width);
        seen.insert(kind + "|" + nn::to_string(norm) + "|" + std::to_string(static_cast<int>(loss)));
        if (!(check.max_rel_error <= 1e-5)) {
            ++failures;
            o.note(fmt("trial %d %s: relative error %.3g at %s", trial, label.c_str(), check.max_rel_error,
                       check.worst.c_str()));
        }
        if (check.max_rel_error >= worst) {
            worst = check.max_rel_error;
            worst_case = label;
        }
    }
    o.require(failures == 0, fmt("100 random (architecture, activation, loss) triples, worst relative error %.3g (%s)",
                                 worst, worst_case.c_str()));
    o.require(seen.size() >= 40, fmt("%zu distinct activation/norm/loss combinations covered", seen.size()));

    // regularizer gradients against finite differences of the penalty
    int reg_failures = 0;
    double reg_worst = 0.0;
    int spectral_checked = 0;
    for (int trial = 0; trial < 30; ++trial) {
        nn::Network net(nn::mlp_spec(4, 3, 3, 6, nn::Activation::relu()), 500 + trial);
        for (auto& p : net.params()) {
            for (double& w : p.weight.values()) w += 0.3 * std::normal_distribution<double>()(rng);
            for (double& b : p.bias.values()) b = 0.2 * std::normal_distribution<double>()(rng);
        }
        const std::vector<optim::InterventionConfig> regs{optim::L2Zero{0.5 * unit(rng)}, optim::L2Init{unit(rng)},
                                                          optim::Spectral{unit(rng), 500}};
        for (const auto& reg : regs) {
            if (std::holds_alternative<optim::Spectral>(reg)) {
                // top singular gap of at least 10% on every layer
                bool gapped = true;
                for (const auto& p : net.params()) {
                    const auto sv = metrics::singular_values(p.weight);
                    if (sv.size() > 1 && sv[1] > 0.9 * sv[0]) gapped = false;
                }
                if (!gapped) continue;
                ++spectral_checked;
            }
            const auto g = optim::regularizer_grad(net, reg);
            const double h = 1e-5;
            for (std::size_t l = 0; l < net.depth(); ++l)
                for (bool bias : {false, true}) {
                    auto values = bias ? net.params()[l].bias.values() : net.params()[l].weight.values();
                    auto a = bias ? g[l].bias.values() : g[l].weight.values();
                    double diff = 0.0, na = 0.0, nn_ = 0.0;
                    for (std::size_t i = 0; i < values.size(); ++i) {
                        const double keep = values[i];
                        values[i] = keep + h;
                        const double plus = optim::regularizer_penalty(net, reg);
                        values[i] = keep - h;
                        const double minus = optim::regularizer_penalty(net, reg);
                        values[i] = keep;
                        const double numeric = (plus - minus) / (2 * h);
                        diff += (numeric - a[i]) * (numeric - a[i]);
                        na += a[i] * a[i];
                        nn_ += numeric * numeric;
                    }
                    const double scale = std::max(std::sqrt(na), std::sqrt(nn_));
                    const double err = scale > 1e-7 ? std::sqrt(diff) / scale : std::sqrt(diff);
                    reg_worst = std::max(reg_worst, err);
                    if (!(err <= 1e-5)) ++reg_failures;
                }
        }
    }
    o.require(reg_failures == 0, fmt("l2, l2-to-init and spectral penalties: worst relative error %.3g", reg_worst));
    o.require(spectral_checked >= 10, fmt("%d spectral cases with a 10%% gap", spectral_checked));

    // regularized training objective end to end
    testing::Objective obj;
    obj.x = testing::random_matrix(3, 4, rng);
    obj.labels = {0, 2, 1};
    obj.reg = optim::L2Init{0.3};
    nn::Network net(nn::mlp_spec(4, 3, 2, 6, nn::Activation::fourier(), nn::Norm::LayerNorm), 99);
    for (double& w : net.params()[0].weight.values()) w += 0.1;
    const auto combined = testing::check_gradients(net, obj);
    o.require(combined.max_rel_error <= 1e-5, fmt("loss + l2-to-init on a Fourier net: %.3g", combined.max_rel_error));
    return o;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream os;
        os << in.rdbuf();
        files[fs::relative(e.path(), dir).string()] = os.str();
    }
    return files;
}

Outcome determinism() {
    Outcome o;
    const fs::path dir = g_out_root / "determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "run.toml");
        cfg << "[experiment]\nname = \"determinism\"\nseeds = [3]\nthreads = 1\noutput_dir = \"out\"\n"
            << "[data]\ntrain_images = \"" << PLASTICA_DATA_DIR << "/mnist/train-images-idx3-ubyte.gz\"\n"
            << "train_labels = \"" << PLASTICA_DATA_DIR << "/mnist/train-labels-idx1-ubyte.gz\"\n"
            << "subset = 300\n"
            << "[stream]\nkind = \"pixel_permutation\"\nnum_tasks = 3\n"
            << "[network]\ndepth = 3\nwidth = 16\nactivation = \"fourier\"\nnorm = \"layernorm\"\n"
            << "[intervention]\nkind = \"shrink_perturb\"\n"
            << "[training]\nepochs_per_task = 2\nbatch_size = 32\n";
    }
    auto run_once = [&] {
        fs::remove_all(dir / "out");
        const std::string cfg = (dir / "run.toml").string();
        const char* argv[] = {"plastica", "run", "--config", cfg.c_str(), "--quiet"};
        std::ostringstream out, err;
        const int code = runner::cli_main(5, argv, out, err);
        if (code != 0) o.require(false, "run exited with " + std::to_string(code) + ": " + err.str());
        return snapshot(dir / "out");
    };
    const auto first = run_once();
    const auto second = run_once();
    std::size_t svgs = 0;
    for (const auto& [name, _] : first) svgs += name.ends_with(".svg");
    o.require(first.count("metrics.csv") == 1 && svgs > 0, fmt("outputs present (%zu files, %zu svg)", first.size(), svgs));
    bool same = first.size() == second.size();
    for (const auto& [name, bytes] : first) {
        auto it = second.find(name);
        const bool eq = it != second.end() && it->second == bytes;
        if (!eq) o.note("differs: " + name);
        same = same && eq;
    }
    o.require(same, "two single-seed runs give byte-identical CSV, config echo and SVG files");
    return o;
}

Outcome stream_properties() {
    Outcome o;
    const fs::path data = fs::path(PLASTICA_DATA_DIR) / "mnist";
    auto base = std::make_shared<const streams::Dataset>(
        streams::subsample(streams::load_idx(data / "train-images-idx3-ubyte.gz", data / "train-labels-idx1-ubyte.gz"), 3000, 0));
    auto test = std::make_shared<const streams::Dataset>(
        streams::load_idx(data / "t10k-images-idx3-ubyte.gz", data / "t10k-labels-idx1-ubyte.gz"));

    // label noise schedule
    const auto noise = streams::label_noise_stream(base, test, 10, 0.5, 4);
    bool schedule = true, counts = true, clean_eval = true;
    for (std::size_t tau = 0; tau < 10; ++tau) {
        const double expected = 0.5 * static_cast<double>(9 - tau) / 9.0;
        schedule = schedule && noise.noise_fraction(tau) == expected;
        const auto task = noise.task(tau);
        std::size_t changed = 0;
        for (std::size_t i = 0; i < base->size(); ++i) changed += task.train.labels[i] != base->labels[i];
        const double corrupted = std::round(expected * static_cast<double>(base->size()));
        // a resampled label keeps its value with probability 1/10
        counts = counts && changed <= corrupted && static_cast<double>(changed) >= 0.8 * corrupted;
        clean_eval = clean_eval && task.eval.labels == test->labels;
    }
    o.require(schedule && noise.noise_fraction(0) == 0.5 && noise.noise_fraction(9) == 0.0,
              "label-noise fractions 0.5, 0.444, ..., 0.0 across 10 tasks");
    o.require(counts, "corrupted-label counts match the schedule");
    o.require(clean_eval, "evaluation labels stay clean");

    // class-incremental monotonicity
    const auto inc = streams::class_incremental_stream(base, test, 2, 5);
    bool monotone = true, members = true;
    std::size_t prev_size = 0;
    for (std::size_t tau = 0; tau < inc.num_tasks(); ++tau) {
        const auto cls = inc.task_classes(tau);
        const std::set<int> now(cls.begin(), cls.end());
        if (tau > 0) {
            const auto before = inc.task_classes(tau - 1);
            for (int c : before) monotone = monotone && now.count(c);
            monotone = monotone && now.size() == before.size() + 2;
        }
        const auto task = inc.task(tau);
        for (int y : task.train.labels) members = members && now.count(y);
        monotone = monotone && task.train.size() > prev_size;
        prev_size = task.train.size();
    }
    o.require(monotone && inc.num_tasks() == 5 && prev_size == base->size(), "class pools only grow, ending at the full set");
    o.require(members, "every training label belongs to its task's pool");

    // pixel permutations
    const auto perm = streams::pixel_permutation_stream(base, test, 4, 6);
    bool multiset = perm.task(0).train.images == base->images;
    for (std::size_t tau = 1; tau < 4 && multiset; ++tau) {
        const auto task = perm.task(tau);
        for (const auto* pair : {&task.train, &task.eval}) {
            const auto& src = pair == &task.train ? *base : *test;
            for (std::size_t r = 0; r < src.size() && multiset; ++r) {
                std::vector<double> a(src.images.row(r).begin(), src.images.row(r).end());
                std::vector<double> b(pair->images.row(r).begin(), pair->images.row(r).end());
                std::sort(a.begin(), a.end());
                std::sort(b.begin(), b.end());
                multiset = a == b;
            }
        }
    }
    o.require(multiset, "pixel permutation preserves every image's value multiset; task 0 is the identity");

    // partition and determinism
    bool partition = true;
    for (std::size_t epoch = 0; epoch < 3; ++epoch) {
        std::vector<std::size_t> all;
        for (const auto& b : streams::batch_indices(9, 2, epoch, base->size(), 256)) all.insert(all.end(), b.begin(), b.end());
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < all.size(); ++i) partition = partition && all[i] == i;
        partition = partition && all.size() == base->size();
    }
    o.require(partition, "epoch batches partition the task");
    const auto again = streams::label_noise_stream(base, test, 10, 0.5, 4);
    const auto rl_a = streams::random_label_stream(base, 5, 8), rl_b = streams::random_label_stream(base, 5, 8);
    o.require(again.task(3).train.labels == noise.task(3).train.labels && rl_a.task(4).train.labels == rl_b.task(4).train.labels &&
                  streams::pixel_permutation_stream(base, test, 4, 6).task(2).train.images == perm.task(2).train.images,
              "regenerated tasks are bitwise identical");
    return o;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plastica acceptance suite"};
    int only = 0;
    std::string out_root = g_out_root.string();
    app.add_option("--criterion", only, "Run one criterion (1-9); default all");
    app.add_option("--out", out_root, "Directory for experiment artifacts");
    CLI11_PARSE(app, argc, argv);
    g_out_root = out_root;

    const std::vector<Criterion> criteria{
        {1, "gradient descent on strongly convex task sequences stays under the bound", quadratic_sequences},
        {2, "diagonal linear network invariants", diagonal_dynamics},
        {3, "local linearity of [sin, cos] units", fourier_linearity},
        {4, "linear vs relu trainability on separable random labels", separable_random_labels},
        {5, "alpha-linearized relu: sign entropy and accuracy", alpha_linearization},
        {6, "deep Fourier features vs nonlinear baselines", deep_fourier},
        {7, "gradient fidelity", gradient_fidelity},
        {8, "determinism of run outputs", determinism},
        {9, "task stream properties", stream_properties},
    };
    bool all_pass = true;
    bool ran = false;
    for (const auto& c : criteria) {
        if (only && c.id != only) continue;
        ran = true;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        for (const auto& n : o.notes) std::printf("%s\n", n.c_str());
        std::printf("%s criterion %d: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, seconds_since(t0));
        std::fflush(stdout);
        all_pass = all_pass && o.pass;
    }
    if (!ran) {
        std::fprintf(stderr, "unknown criterion %d\n", only);
        return 2;
    }
    return all_pass ? 0 : 1;
}
