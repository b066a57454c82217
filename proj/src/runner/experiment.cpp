#include "plastica/runner/experiment.hpp"

#include "plastica/metrics.hpp"
#include "plastica/nn/loss.hpp"
#include "plastica/seed.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace plastica::runner {

bool RunLog::aborted() const {
    return std::any_of(rows.begin(), rows.end(), [](const MetricsRecord& r) { return r.status != "ok"; });
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
    cfg.validate(true);
    auto train = streams::load_idx(cfg.data.train_images, cfg.data.train_labels);
    if (cfg.data.subset > 0) {
        if (cfg.data.subset > train.size())
            throw ConfigError("data.subset = " + std::to_string(cfg.data.subset) + " exceeds the " +
                              std::to_string(train.size()) + " available training examples");
        train = cfg.data.separable
                    ? streams::make_linearly_separable_subset(train, cfg.data.subset, cfg.data.subset_seed).data
                    : streams::subsample(train, cfg.data.subset, cfg.data.subset_seed);
    }
    PreparedData out;
    if (!cfg.data.test_images.empty()) {
        auto test = streams::load_idx(cfg.data.test_images, cfg.data.test_labels);
        test.num_classes = std::max(test.num_classes, train.num_classes);
        train.num_classes = test.num_classes;
        out.test = std::make_shared<const streams::Dataset>(std::move(test));
    }
    out.train = std::make_shared<const streams::Dataset>(std::move(train));
    return out;
}

namespace {

struct Evaluation {
    double loss = 0.0;
    double accuracy = 0.0;
};

Tensor one_hot(std::span<const int> labels, std::size_t classes) {
    Tensor t({labels.size(), classes});
    for (std::size_t r = 0; r < labels.size(); ++r) t(r, static_cast<std::size_t>(labels[r])) = 1.0;
    return t;
}

nn::LossResult compute_loss(const Tensor& logits, std::span<const int> labels, LossKind kind) {
    if (kind == LossKind::CrossEntropy) return nn::softmax_cross_entropy(logits, labels);
    return nn::squared_error(logits, one_hot(labels, logits.cols()));
}

Evaluation evaluate(const nn::Network& net, const streams::Dataset& ds, LossKind kind) {
    constexpr std::size_t kChunk = 2048;
    Evaluation ev;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < ds.size(); start += kChunk) {
        const std::size_t stop = std::min(ds.size(), start + kChunk);
        std::vector<std::size_t> idx(stop - start);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
        const Tensor logits = nn::predict(net, ds.images.gather_rows(idx));
        const std::span<const int> labels(ds.labels.data() + start, idx.size());
        ev.loss += compute_loss(logits, labels, kind).loss * static_cast<double>(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r)
            if (static_cast<int>(metrics::argmax(logits.row(r))) == labels[r]) ++correct;
    }
    ev.loss /= static_cast<double>(ds.size());
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
    return ev;
}

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

bool all_identity(const nn::Network& net) {
    return std::all_of(net.layers().begin(), net.layers().end(), [](const nn::LayerSpec& l) {
        return l.activation.is_identity() && l.norm == nn::Norm::None;
    });
}

}  // namespace

std::vector<MetricsRecord> run_seed(const ExperimentConfig& cfg, const PreparedData& data, std::uint64_t seed,
                                    const ProgressFn& progress) {
    const streams::TaskStream stream(cfg.stream, data.train, data.test, cfg.stream_params, seed);
    nn::Network net(nn::mlp_spec(data.train->dim(), static_cast<std::size_t>(data.train->num_classes),
                                 cfg.network.depth, cfg.network.width, cfg.network.hidden(), cfg.network.norm,
                                 cfg.network.first_hidden()),
                    seed);
    optim::OptimizerState opt(net);
    optim::SpectralState spectral;
    const bool regularized = optim::is_regularizer(cfg.intervention);
    const bool linear = all_identity(net);
    const std::size_t hidden = net.depth() - 1;
    const std::size_t probe_rows = cfg.training.probe_batch ? cfg.training.probe_batch : cfg.training.batch_size;

    std::vector<MetricsRecord> rows;
    std::size_t iteration = 0;
    std::size_t task_index = 0, epoch_index = 0;
    auto abort_row = [&](const std::string& why) {
        MetricsRecord r;
        r.seed = seed;
        r.task = task_index;
        r.epoch = epoch_index;
        r.iteration = iteration;
        r.sign_entropy.assign(hidden, std::nullopt);
        r.status = sanitize("aborted: " + why);
        rows.push_back(std::move(r));
    };

    try {
        for (task_index = 0; task_index < stream.num_tasks(); ++task_index) {
            const std::size_t tau = task_index;
            const streams::Task task = stream.task(tau);
            if (tau > 0) {
                if (const auto* sp = std::get_if<optim::ShrinkPerturb>(&cfg.intervention);
                    sp && tau % static_cast<std::size_t>(sp->every_n_tasks) == 0)
                    optim::shrink_and_perturb(net, sp->shrink, sp->noise_std, derive_seed(seed, {tau}));
                if (const auto* redo = std::get_if<optim::ReDO>(&cfg.intervention);
                    redo && tau % static_cast<std::size_t>(redo->every_n_tasks) == 0) {
                    const auto first = streams::batch_indices(seed, tau, 0, task.train.size(), cfg.training.batch_size);
                    const auto trace = nn::forward(net, task.train.images.gather_rows(first.front()));
                    optim::redo_reset(net, trace, redo->threshold, derive_seed(seed, {tau}));
                }
            }
            std::vector<std::size_t> probe_idx(std::min(probe_rows, task.eval.size()));
            for (std::size_t i = 0; i < probe_idx.size(); ++i) probe_idx[i] = i;
            const Tensor probe = task.eval.images.gather_rows(probe_idx);

            for (epoch_index = 0; epoch_index < cfg.training.epochs_per_task; ++epoch_index) {
                for (const auto& batch : streams::batches(stream, task, epoch_index, cfg.training.batch_size)) {
                    const auto trace = nn::forward(net, batch.x);
                    const auto loss = compute_loss(trace.logits(), batch.y, cfg.training.loss);
                    if (!std::isfinite(loss.loss)) {
                        abort_row("non-finite training loss at iteration " + std::to_string(iteration));
                        return rows;
                    }
                    auto grads = nn::backward(net, trace, loss.grad_logits);
                    if (regularized) nn::add_scaled(grads, optim::regularizer_grad(net, cfg.intervention, &spectral), 1.0);
                    optim::optimizer_step(net, opt, grads, cfg.optimizer);
                    ++iteration;
                }

                MetricsRecord r;
                r.seed = seed;
                r.task = tau;
                r.epoch = epoch_index;
                r.iteration = iteration;
                const Evaluation train = evaluate(net, task.train, cfg.training.loss);
                if (!std::isfinite(train.loss)) {
                    abort_row("non-finite evaluation loss");
                    return rows;
                }
                r.train_loss = train.loss;
                r.train_acc = train.accuracy;
                r.test_acc = task.eval_is_train ? train.accuracy : evaluate(net, task.eval, cfg.training.loss).accuracy;
                if (hidden > 0) {
                    const auto trace = nn::forward(net, probe);
                    for (std::size_t l = 0; l < hidden; ++l)
                        r.sign_entropy.emplace_back(metrics::unit_sign_entropy(trace.layers[l].out).mean_entropy());
                }
                if (linear) r.min_sv = metrics::min_singular_value(nn::product_matrix(net));
                r.param_l2 = std::sqrt(nn::squared_norm(net.params()));
                r.end_of_task = epoch_index + 1 == cfg.training.epochs_per_task;
                rows.push_back(std::move(r));
            }
            if (progress) progress(seed, tau);
        }
    } catch (const NonFiniteError& e) {
        abort_row(e.what());
    }
    return rows;
}

RunLog run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
    return run_experiment(cfg, prepare_data(cfg), progress);
}

RunLog run_experiment(const ExperimentConfig& cfg, const PreparedData& data, const ProgressFn& progress) {
    cfg.validate(false);
    RunLog log;
    log.resolved_config = cfg.resolved_text();
    log.identity = cfg.identity_text();
    log.hidden_layers = cfg.network.depth - 1;

    std::vector<std::uint64_t> seeds = cfg.seeds;
    std::sort(seeds.begin(), seeds.end());
    std::vector<std::vector<MetricsRecord>> per_seed(seeds.size());

    std::size_t workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, seeds.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
            try {
                per_seed[i] = run_seed(cfg, data, seeds[i], progress);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    for (auto& rows : per_seed)
        for (auto& r : rows) log.rows.push_back(std::move(r));
    return log;
}

// ---------------------------------------------------------------------------
// CSV

std::vector<std::string> csv_header(std::size_t hidden_layers) {
    std::vector<std::string> h{"seed", "task", "epoch", "iteration", "train_loss", "train_acc", "test_acc"};
    for (std::size_t l = 1; l <= hidden_layers; ++l) h.push_back("mean_sign_entropy_l" + std::to_string(l));
    for (const char* c : {"min_sv", "param_l2", "end_of_task", "status"}) h.emplace_back(c);
    return h;
}

namespace {

std::string field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> parse_field(const std::string& s, const std::string& where) {
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw std::runtime_error(where + ": bad numeric field '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    for (;;) {
        const auto comma = line.find(',', pos);
        out.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

std::string format_csv(const RunLog& log) {
    std::string out;
    const auto header = csv_header(log.hidden_layers);
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += '\n';
    for (const auto& r : log.rows) {
        std::string line = std::to_string(r.seed) + ',' + std::to_string(r.task) + ',' + std::to_string(r.epoch) + ',' +
                           std::to_string(r.iteration) + ',' + field(r.train_loss) + ',' + field(r.train_acc) + ',' +
                           field(r.test_acc);
        for (std::size_t l = 0; l < log.hidden_layers; ++l)
            line += ',' + (l < r.sign_entropy.size() ? field(r.sign_entropy[l]) : std::string());
        line += ',' + field(r.min_sv) + ',' + field(r.param_l2) + ',' + (r.end_of_task ? "1" : "0") + ',' +
                sanitize(r.status);
        out += line + '\n';
    }
    return out;
}

void write_csv(const RunLog& log, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << format_csv(log);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

RunLog read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    const auto header = split(line);
    if (header.size() < 11) throw std::runtime_error(path.string() + ": unexpected header");
    RunLog log;
    log.hidden_layers = header.size() - 11;
    if (header != csv_header(log.hidden_layers)) throw std::runtime_error(path.string() + ": unexpected header");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        const auto f = split(line);
        if (f.size() != header.size()) throw std::runtime_error(where + ": wrong field count");
        MetricsRecord r;
        r.seed = std::stoull(f[0]);
        r.task = std::stoull(f[1]);
        r.epoch = std::stoull(f[2]);
        r.iteration = std::stoull(f[3]);
        r.train_loss = parse_field(f[4], where);
        r.train_acc = parse_field(f[5], where);
        r.test_acc = parse_field(f[6], where);
        for (std::size_t l = 0; l < log.hidden_layers; ++l) r.sign_entropy.push_back(parse_field(f[7 + l], where));
        const std::size_t k = 7 + log.hidden_layers;
        r.min_sv = parse_field(f[k], where);
        r.param_l2 = parse_field(f[k + 1], where);
        r.end_of_task = f[k + 2] == "1";
        r.status = f[k + 3];
        log.rows.push_back(std::move(r));
    }

    const auto resolved = path.parent_path() / "config.resolved";
    if (std::filesystem::exists(resolved)) {
        std::ifstream cfg_in(resolved, std::ios::binary);
        std::ostringstream ss;
        ss << cfg_in.rdbuf();
        log.resolved_config = ss.str();
        const auto cfg = experiment_from_document(parse_config(log.resolved_config, resolved.string()));
        log.identity = cfg.identity_text();
    }
    return log;
}

void write_run(const RunLog& log, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_csv(log, dir / "metrics.csv");
    std::ofstream out(dir / "config.resolved", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "config.resolved").string());
    out << "# " << log.code_version << '\n' << log.resolved_config;
}

}  // namespace plastica::runner
