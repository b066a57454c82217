#include "plastica/runner/cli.hpp"
#include "plastica/runner/config.hpp"
#include "plastica/runner/experiment.hpp"
#include "plastica/runner/summary.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace plastica;
using namespace plastica::runner;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("plastica_runner_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Small 4x4 "image" dataset written next to the config.
void write_toy_data(const fs::path& dir) {
    streams::Dataset ds;
    ds.images = Tensor({60, 16});
    ds.num_classes = 3;
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> byte(0, 255);
    for (double& v : ds.images.values()) v = byte(rng) / 255.0;
    for (int i = 0; i < 60; ++i) ds.labels.push_back(i % 3);
    streams::write_idx(ds, dir / "img.gz", dir / "lbl.gz", 4, 4);
}

std::string toy_config(const std::string& extra = "") {
    return "[experiment]\n"
           "name = \"toy\"\n"
           "seeds = [0, 1]\n"
           "threads = 1\n"
           "output_dir = \"out\"\n"
           "[data]\n"
           "train_images = \"img.gz\"\n"
           "train_labels = \"lbl.gz\"\n"
           "[stream]\n"
           "kind = \"random_labels\"\n"
           "num_tasks = 2\n"
           "[network]\n"
           "depth = 2\n"
           "width = 8\n"
           "[training]\n"
           "epochs_per_task = 2\n"
           "batch_size = 16\n" +
           extra;
}

ExperimentConfig toy_experiment(const fs::path& dir, const std::string& extra = "") {
    return experiment_from_document(parse_config(toy_config(extra)), dir);
}

MetricsRecord row(std::uint64_t seed, std::size_t task, double acc) {
    MetricsRecord r;
    r.seed = seed;
    r.task = task;
    r.train_acc = acc;
    r.test_acc = acc;
    r.train_loss = 1.0 - acc;
    r.sign_entropy = {0.5};
    r.param_l2 = 2.0;
    r.end_of_task = true;
    return r;
}

RunLog log_of(std::vector<MetricsRecord> rows, const std::string& identity = "same") {
    RunLog log;
    log.rows = std::move(rows);
    log.identity = identity;
    log.hidden_layers = 1;
    return log;
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr) {
    std::vector<const char*> argv{"plastica"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str() + err.str();
    return code;
}

}  // namespace

TEST_CASE("config parser handles values, arrays and comments") {
    const auto doc = parse_config(
        "# top\n[a]\nx = 1\ny = -2.5e-3 # trailing\nz = \"s # not a comment\"\nb = true\n"
        "list = [1,\n  2, 3]\n[b]\nname = \"q\"\n");
    const auto* a = doc.section("a");
    REQUIRE(a);
    CHECK(a->find("x")->as_int("x") == 1);
    CHECK(a->find("y")->as_double("y") == -2.5e-3);
    CHECK(a->find("z")->as_string("z") == "s # not a comment");
    CHECK(a->find("b")->as_bool("b"));
    CHECK(a->find("list")->as_list("list").size() == 3);
    CHECK(a->find("x")->as_double("x") == 1.0);
    CHECK(doc.section("b")->find("name")->as_string("name") == "q");
}

TEST_CASE("config parse errors name the line") {
    for (const char* bad : {"[a\nx=1", "[a]\nx 1", "[a]\nx = [1, 2", "[a]\nx = \"open", "[a]\nx = 1\nx = 2"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(parse_config(bad), ConfigError);
    }
    try {
        parse_config("[a]\nok = 1\nbroken\n", "file.toml");
        FAIL("no error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("file.toml:3") != std::string::npos);
    }
}

TEST_CASE("experiment config rejects unknown keys and bad values") {
    CHECK_THROWS_AS(experiment_from_document(parse_config("[network]\ndepht = 3\n")), ConfigError);
    CHECK_THROWS_AS(experiment_from_document(parse_config("[galaxy]\nx = 1\n")), ConfigError);
    CHECK_THROWS_AS(experiment_from_document(parse_config("x = 1\n")), ConfigError);
    CHECK_THROWS_AS(experiment_from_document(parse_config("[network]\nactivation = \"swish\"\n")).validate(false),
                    std::exception);
    CHECK_THROWS_AS(experiment_from_document(parse_config("[training]\nbatch_size = 0\n")).validate(false),
                    ConfigError);
    CHECK_THROWS_AS(experiment_from_document(parse_config("[optimizer]\nkind = \"rmsprop\"\n")), ConfigError);
    const auto cfg = experiment_from_document(parse_config("[intervention]\nkind = \"shrink_perturb\"\nshrink = 0.7\n"));
    CHECK(std::get<optim::ShrinkPerturb>(cfg.intervention).shrink == 0.7);
}

TEST_CASE("resolved config round-trips through the parser") {
    TempDir tmp;
    auto cfg = toy_experiment(tmp.path, "[intervention]\nkind = \"spectral\"\nstrength = 0.01\n");
    cfg.network.alpha = 0.3;
    cfg.optimizer.step_size = 0.1 + 0.2;  // not exactly representable as short text
    const std::string text = cfg.resolved_text();
    const auto back = experiment_from_document(parse_config(text));
    CHECK(back.resolved_text() == text);
    CHECK(back.optimizer.step_size == cfg.optimizer.step_size);
    CHECK(back.data.train_images == tmp.path / "img.gz");
    // identity ignores the seed list
    auto other = cfg;
    other.seeds = {5};
    CHECK(other.identity_text() == cfg.identity_text());
    CHECK(other.resolved_text() != cfg.resolved_text());
    CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("seed lists and sweeps") {
    CHECK(parse_seed_list("0,3, 7") == std::vector<std::uint64_t>{0, 3, 7});
    CHECK_THROWS_AS(parse_seed_list("a"), ConfigError);

    const auto doc = parse_config(toy_config("[sweep]\n\"network.depth\" = [1, 3]\n\"network.activation\" = [\"relu\", \"sin\"]\n"));
    const auto variants = expand_sweep(doc);
    REQUIRE(variants.size() == 4);
    CHECK(variants[0].config.network.depth == 1);
    CHECK(variants[0].config.network.activation == "relu");
    CHECK(variants[3].config.network.depth == 3);
    CHECK(variants[3].config.network.activation == "sin");
    CHECK(variants[0].label != variants[1].label);
    CHECK_THROWS_AS(expand_sweep(parse_config("[sweep]\n\"network.nope\" = [1]\n")), ConfigError);
}

TEST_CASE("zero epochs gives a config echo and no rows") {
    TempDir tmp;
    write_toy_data(tmp.path);
    auto cfg = toy_experiment(tmp.path);
    cfg.training.epochs_per_task = 0;
    const RunLog log = run_experiment(cfg);
    CHECK(log.rows.empty());
    CHECK(log.resolved_config == cfg.resolved_text());
    CHECK(log.code_version == kCodeVersion);
}

TEST_CASE("training rows are ordered and flagged") {
    TempDir tmp;
    write_toy_data(tmp.path);
    const auto cfg = toy_experiment(tmp.path);
    const RunLog log = run_experiment(cfg);
    // 2 seeds x 2 tasks x 2 epochs
    REQUIRE(log.rows.size() == 8);
    CHECK(log.hidden_layers == 1);
    for (std::size_t i = 0; i < log.rows.size(); ++i) {
        const auto& r = log.rows[i];
        CHECK(r.seed == (i < 4 ? 0u : 1u));
        CHECK(r.end_of_task == (r.epoch == 1));
        CHECK(r.status == "ok");
        CHECK(r.train_acc.has_value());
        CHECK(r.sign_entropy.size() == 1);
        CHECK_FALSE(r.min_sv.has_value());
        if (i % 4) CHECK(r.iteration > log.rows[i - 1].iteration);
    }
    CHECK(log.rows[0].iteration == 4);  // ceil(60 / 16)
}

TEST_CASE("identity networks report the product's smallest singular value") {
    TempDir tmp;
    write_toy_data(tmp.path);
    auto cfg = toy_experiment(tmp.path, "");
    cfg.network.activation = "identity";
    cfg.seeds = {0};
    const RunLog log = run_experiment(cfg);
    for (const auto& r : log.rows) {
        REQUIRE(r.min_sv.has_value());
        CHECK(*r.min_sv >= 0.0);
    }
}

TEST_CASE("csv round-trip and fixed header") {
    TempDir tmp;
    write_toy_data(tmp.path);
    auto cfg = toy_experiment(tmp.path);
    cfg.seeds = {3};
    const RunLog log = run_experiment(cfg);
    write_run(log, tmp.path / "run");
    const RunLog back = read_csv(tmp.path / "run" / "metrics.csv");
    REQUIRE(back.rows.size() == log.rows.size());
    CHECK(format_csv(back) == format_csv(log));
    CHECK(back.identity == log.identity);
    CHECK(slurp(tmp.path / "run" / "config.resolved").rfind(std::string("# ") + kCodeVersion, 0) == 0);

    const auto header = csv_header(2);
    const std::vector<std::string> expected{"seed", "task", "epoch", "iteration", "train_loss", "train_acc",
                                            "test_acc", "mean_sign_entropy_l1", "mean_sign_entropy_l2", "min_sv",
                                            "param_l2", "end_of_task", "status"};
    CHECK(header == expected);
    // min_sv is absent for relu nets: empty field, column still present
    const std::string text = format_csv(log);
    const std::string first_row = text.substr(text.find('\n') + 1, text.find('\n', text.find('\n') + 1) - text.find('\n') - 1);
    CHECK(std::count(first_row.begin(), first_row.end(), ',') == 11);
    CHECK(first_row.find(",,") != std::string::npos);
}

TEST_CASE("single-seed runs are deterministic and seed-parallel safe") {
    TempDir tmp;
    write_toy_data(tmp.path);
    auto cfg = toy_experiment(tmp.path);
    cfg.seeds = {4};
    CHECK(format_csv(run_experiment(cfg)) == format_csv(run_experiment(cfg)));

    cfg.seeds = {1, 2, 3};
    cfg.threads = 1;
    const std::string serial = format_csv(run_experiment(cfg));
    cfg.threads = 3;
    CHECK(format_csv(run_experiment(cfg)) == serial);
}

TEST_CASE("aggregate computes mean and sample SEM") {
    const Summary s = aggregate({log_of({row(0, 0, 0.4)}), log_of({row(1, 0, 0.6)})});
    const auto& st = s.rows[0].stats[s.metric_index("train_acc")];
    CHECK(st.mean == doctest::Approx(0.5).epsilon(1e-15));
    // sample std 0.1414 / sqrt(2)
    CHECK(st.sem == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(st.n == 2);
    CHECK(s.num_seeds == 2);

    const Summary one = aggregate({log_of({row(0, 0, 0.4), row(0, 1, 0.7)})});
    for (const auto& r : one.rows)
        for (const auto& stat : r.stats) CHECK(stat.sem == 0.0);

    CHECK_THROWS(aggregate({}));
    CHECK_THROWS(aggregate({log_of({row(0, 0, 0.4)}, "a"), log_of({row(1, 0, 0.6)}, "b")}));
    // min_sv is never reported here
    CHECK(s.rows[0].stats[s.metric_index("min_sv")].n == 0);
    CHECK(mean_sem({1.0, 2.0, 3.0}).mean == 2.0);
}

TEST_CASE("aggregate skips rows of aborted seeds") {
    auto bad = row(1, 0, 0.9);
    bad.status = "aborted: non-finite loss";
    const Summary s = aggregate({log_of({row(0, 0, 0.4)}), log_of({bad})});
    CHECK(s.rows[0].stats[s.metric_index("train_acc")].n == 1);
}

TEST_CASE("svg rendering") {
    const Summary a = aggregate({log_of({row(0, 0, 0.4), row(0, 1, 0.5)}), log_of({row(1, 0, 0.6), row(1, 1, 0.5)})}, "alpha");
    const Summary b = aggregate({log_of({row(0, 0, 0.2), row(0, 1, 0.3)})}, "beta");
    const std::string svg = render_svg({a, b}, "train_acc", PlotAxis::Task);
    CHECK(svg.rfind("<svg", 0) == 0);
    std::size_t legends = 0;
    for (std::size_t p = svg.find("class=\"legend\""); p != std::string::npos; p = svg.find("class=\"legend\"", p + 1))
        ++legends;
    CHECK(legends == 2);
    CHECK(svg.find("alpha") != std::string::npos);
    CHECK(render_svg({a, b}, "train_acc", PlotAxis::Task) == svg);

    // constant metric: param_l2 is 2 everywhere with zero spread
    const std::string flat = render_svg({b}, "param_l2", PlotAxis::Iteration);
    CHECK(flat.find("<polyline") != std::string::npos);

    TempDir tmp;
    const auto files = emit_plots({a, b}, tmp.path / "plots");
    CHECK_FALSE(files.empty());
    for (const auto& f : files) CHECK(fs::exists(f));
    CHECK(slurp(files.front()) == slurp(emit_plots({a, b}, tmp.path / "plots2").front()));
    CHECK_THROWS(emit_plots({}, tmp.path / "plots3"));
}

TEST_CASE("cli exit codes") {
    TempDir tmp;
    write_toy_data(tmp.path);
    {
        std::ofstream(tmp.path / "toy.toml") << toy_config();
        std::ofstream(tmp.path / "broken.toml") << "[network\n";
        std::ofstream(tmp.path / "missing.toml") << "[data]\ntrain_images = \"nope.gz\"\n";
    }
    std::string text;
    CHECK(run_cli({"run", "--config", (tmp.path / "toy.toml").string(), "--seeds", "0", "--quiet"}, &text) == kExitOk);
    CHECK(fs::exists(tmp.path / "out" / "metrics.csv"));
    CHECK(fs::exists(tmp.path / "out" / "config.resolved"));
    CHECK(run_cli({"plot", "--in", (tmp.path / "out").string()}) == kExitOk);
    CHECK(fs::exists(tmp.path / "out" / "plots" / "train_acc.svg"));

    CHECK(run_cli({"run", "--config", (tmp.path / "broken.toml").string()}) == kExitValidation);
    CHECK(run_cli({"run", "--config", (tmp.path / "missing.toml").string()}) == kExitValidation);
    CHECK(run_cli({"run"}) == kExitValidation);
    CHECK(run_cli({"frobnicate"}) == kExitValidation);
    CHECK(run_cli({"verify", "--check", "nope"}) == kExitValidation);

    CHECK(run_cli({"verify", "--check", "thm1", "--out", (tmp.path / "reports").string()}, &text) == kExitOk);
    CHECK(text.find("PASS thm1") != std::string::npos);
    CHECK(fs::exists(tmp.path / "reports"));
}
