#include "plastica/runner/cli.hpp"

#include "plastica/runner/config.hpp"
#include "plastica/runner/experiment.hpp"
#include "plastica/runner/summary.hpp"
#include "plastica/theory.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <mutex>

namespace plastica::runner {

namespace {

std::string safe_name(const std::string& label) {
    std::string out;
    for (char c : label) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '=' ? c : '_');
    return out;
}

ExperimentConfig load_with_overrides(const std::string& config_path, const std::string& out_dir,
                                     const std::string& seeds, std::size_t threads) {
    ExperimentConfig cfg = load_experiment(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (!seeds.empty()) cfg.seeds = parse_seed_list(seeds);
    if (threads) cfg.threads = threads;
    cfg.validate(true);
    return cfg;
}

int finish_run(const ExperimentConfig& cfg, const RunLog& log, const std::filesystem::path& dir, const std::string& label,
               std::vector<Summary>* collect, std::ostream& out, std::ostream& err) {
    write_run(log, dir);
    const Summary summary = aggregate({log}, label);
    write_summary_csv(summary, dir / "summary.csv");
    emit_plots({summary}, dir / "plots");
    if (collect) collect->push_back(summary);
    out << cfg.name << " [" << label << "]: " << log.rows.size() << " rows written to " << dir.string() << '\n';
    if (log.aborted()) {
        for (const auto& r : log.rows)
            if (r.status != "ok") err << "seed " << r.seed << ": " << r.status << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

ProgressFn progress_printer(std::ostream& err, std::size_t num_tasks, bool quiet) {
    if (quiet) return {};
    auto mutex = std::make_shared<std::mutex>();
    return [&err, num_tasks, mutex](std::uint64_t seed, std::size_t task) {
        std::lock_guard lock(*mutex);
        err << "seed " << seed << ": task " << task + 1 << "/" << num_tasks << " done\n";
    };
}

int cmd_run(const std::string& config, const std::string& out_dir, const std::string& seeds, std::size_t threads,
            bool quiet, std::ostream& out, std::ostream& err) {
    const ExperimentConfig cfg = load_with_overrides(config, out_dir, seeds, threads);
    const PreparedData data = prepare_data(cfg);
    const RunLog log = run_experiment(cfg, data, progress_printer(err, cfg.stream_params.num_tasks, quiet));
    return finish_run(cfg, log, cfg.output_dir, cfg.name, nullptr, out, err);
}

int cmd_sweep(const std::string& config, const std::string& out_dir, const std::string& seeds, std::size_t threads,
              bool quiet, std::ostream& out, std::ostream& err) {
    const std::filesystem::path path(config);
    auto variants = expand_sweep(load_config_file(path), path.parent_path());
    std::filesystem::path root;
    for (auto& v : variants) {
        if (!out_dir.empty()) v.config.output_dir = out_dir;
        if (!seeds.empty()) v.config.seeds = parse_seed_list(seeds);
        if (threads) v.config.threads = threads;
        v.config.validate(true);
        root = v.config.output_dir;
    }
    std::vector<Summary> summaries;
    int code = kExitOk;
    for (const auto& v : variants) {
        const PreparedData data = prepare_data(v.config);
        const RunLog log = run_experiment(v.config, data, progress_printer(err, v.config.stream_params.num_tasks, quiet));
        code = std::max(code, finish_run(v.config, log, v.config.output_dir / safe_name(v.label), v.label, &summaries,
                                         out, err));
    }
    emit_plots(summaries, root / "plots");
    return code;
}

int cmd_plot(const std::string& in_dir, const std::string& axis_name, std::ostream& out) {
    const std::filesystem::path dir(in_dir);
    if (!std::filesystem::is_directory(dir)) throw ConfigError("not a directory: " + in_dir);
    std::vector<std::filesystem::path> runs;
    if (std::filesystem::exists(dir / "metrics.csv")) {
        runs.push_back(dir);
    } else {
        for (const auto& entry : std::filesystem::directory_iterator(dir))
            if (entry.is_directory() && std::filesystem::exists(entry.path() / "metrics.csv")) runs.push_back(entry.path());
        std::sort(runs.begin(), runs.end());
    }
    if (runs.empty()) throw ConfigError("no metrics.csv under " + in_dir);
    const PlotAxis axis = axis_name == "iteration" ? PlotAxis::Iteration : PlotAxis::Task;
    std::vector<Summary> summaries;
    for (const auto& r : runs) summaries.push_back(aggregate({read_csv(r / "metrics.csv")}, r.filename().string()));
    if (runs.size() == 1) summaries.front().label = "run";
    const auto written = emit_plots(summaries, dir / "plots", axis);
    out << written.size() << " plots written to " << (dir / "plots").string() << '\n';
    return kExitOk;
}

// [verify] section values with defaults.
struct VerifySettings {
    const ConfigSection* sec = nullptr;

    const ConfigValue* get(const char* key) const { return sec ? sec->find(key) : nullptr; }
    double number(const char* key, double def) const {
        const auto* v = get(key);
        return v ? v->as_double(std::string("verify.") + key) : def;
    }
    std::size_t count(const char* key, std::size_t def) const {
        const auto* v = get(key);
        if (!v) return def;
        const auto i = v->as_int(std::string("verify.") + key);
        if (i < 0) throw ConfigError(std::string("verify.") + key + " must be non-negative");
        return static_cast<std::size_t>(i);
    }
    std::vector<std::size_t> list(const char* key, std::vector<std::size_t> def) const {
        const auto* v = get(key);
        if (!v) return def;
        std::vector<std::size_t> out;
        for (const auto& item : v->as_list(std::string("verify.") + key)) {
            const auto i = item.as_int(std::string("verify.") + key);
            if (i < 0) throw ConfigError(std::string("verify.") + key + " must be non-negative");
            out.push_back(static_cast<std::size_t>(i));
        }
        return out;
    }
};

std::vector<std::size_t> iota_list(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

int cmd_verify(const std::string& check, const std::string& config, const std::string& out_dir, std::ostream& out) {
    ConfigDocument doc;
    if (!config.empty()) doc = load_config_file(config);
    const VerifySettings s{doc.section("verify")};

    std::vector<theory::VerificationReport> reports;
    if (check == "thm1") {
        for (auto seed : s.list("seeds", iota_list(20))) {
            theory::Thm1Config c;
            c.dim = s.count("dim", c.dim);
            c.num_tasks = s.count("num_tasks", c.num_tasks);
            c.iterations = s.count("iterations", c.iterations);
            c.step_size = s.number("step_size", c.step_size);
            c.strong_convexity = s.number("strong_convexity", c.strong_convexity);
            c.param_bound = s.number("param_bound", c.param_bound);
            c.seed = seed;
            try {
                reports.push_back(theory::verify_theorem1(c));
            } catch (const theory::ConfigError& e) {
                throw ConfigError(e.what());
            }
        }
    } else if (check == "lemma1" || check == "lemma2") {
        for (auto seed : s.list("seeds", iota_list(50)))
            for (auto depth : s.list("depths", {2, 3, 4}))
                for (auto dim : s.list("dims", {2, 8, 32})) {
                    theory::DiagonalDynamicsConfig c;
                    c.depth = depth;
                    c.dim = dim;
                    c.seed = seed;
                    c.steps = s.count("steps", c.steps);
                    c.num_tasks = s.count("num_tasks", c.num_tasks);
                    c.step_size = s.number("step_size", c.step_size);
                    try {
                        reports.push_back(check == "lemma1" ? theory::verify_lemma_equality(c)
                                                            : theory::verify_lemma_nonzero(c));
                    } catch (const theory::ConfigError& e) {
                        throw ConfigError(e.what());
                    }
                }
    } else if (check == "prop1") {
        theory::FourierLinearityConfig c;
        c.grid_step = s.number("grid_step", c.grid_step);
        c.inner_step = s.number("inner_step", c.inner_step);
        c.half_width = s.number("half_width", c.half_width);
        c.threshold = s.number("threshold", c.threshold);
        try {
            reports.push_back(theory::verify_fourier_linearity(c));
        } catch (const theory::ConfigError& e) {
            throw ConfigError(e.what());
        }
    } else {
        throw ConfigError("unknown check '" + check + "'");
    }

    std::size_t failed = 0;
    double worst = INFINITY;
    for (const auto& r : reports) {
        if (!r.pass) ++failed;
        worst = std::min(worst, r.worst_margin);
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        for (std::size_t i = 0; i < reports.size(); ++i)
            reports[i].write(std::filesystem::path(out_dir) / (check + "-" + std::to_string(i) + ".txt"));
    }
    if (reports.size() == 1) {
        out << reports.front().serialize();
    } else {
        out << "check=" << check << "\nreports=" << reports.size() << "\nfailed=" << failed
            << "\nworst_margin=" << format_double(worst) << '\n';
        for (const auto& r : reports)
            if (!r.pass) {
                out << "--- failing report\n" << r.serialize();
                break;
            }
    }
    out << (failed == 0 ? "PASS" : "FAIL") << ' ' << check << '\n';
    return failed == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Continual-learning plasticity experiments and numerical checks", "plastica"};
    app.require_subcommand(1);

    std::string config, out_dir, seeds, check, in_dir, axis = "task";
    std::size_t threads = 0;
    bool quiet = false;

    auto* run = app.add_subcommand("run", "Train every seed of an experiment");
    run->add_option("--config", config, "Experiment config file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides the config)");
    run->add_option("--seeds", seeds, "Comma-separated seed list (overrides the config)");
    run->add_option("--threads", threads, "Seed-parallel worker count");
    run->add_flag("--quiet", quiet, "No progress output");

    auto* verify = app.add_subcommand("verify", "Run a numerical check");
    verify->add_option("--check", check, "Which check")->required()->check(CLI::IsMember({"thm1", "lemma1", "lemma2", "prop1"}));
    verify->add_option("--config", config, "Config file with a [verify] section");
    verify->add_option("--out", out_dir, "Directory for report files");

    auto* plot = app.add_subcommand("plot", "Render SVG plots from run directories");
    plot->add_option("--in", in_dir, "Run directory, or a directory of run directories")->required();
    plot->add_option("--axis", axis, "x axis")->check(CLI::IsMember({"task", "iteration"}));

    auto* sweep = app.add_subcommand("sweep", "Run the cartesian product of the [sweep] section");
    sweep->add_option("--config", config, "Experiment config file")->required();
    sweep->add_option("--out", out_dir, "Output directory (overrides the config)");
    sweep->add_option("--seeds", seeds, "Comma-separated seed list (overrides the config)");
    sweep->add_option("--threads", threads, "Seed-parallel worker count");
    sweep->add_flag("--quiet", quiet, "No progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*run) return cmd_run(config, out_dir, seeds, threads, quiet, out, err);
        if (*sweep) return cmd_sweep(config, out_dir, seeds, threads, quiet, out, err);
        if (*plot) return cmd_plot(in_dir, axis, out);
        if (*verify) return cmd_verify(check, config, out_dir, out);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const streams::IdxError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const streams::SeparabilityError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitValidation;
}

}  // namespace plastica::runner
