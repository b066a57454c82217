#include "plastica/streams/task_stream.hpp"

#include "plastica/metrics.hpp"
#include "plastica/seed.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace plastica::streams {

// ---------------------------------------------------------------------------
// Linear probe

LinearProbe fit_linear_probe(const Dataset& ds, int max_steps) {
    ds.validate();
    const std::size_t n = ds.size(), d = ds.dim(), k = static_cast<std::size_t>(ds.num_classes);

    // augmented inputs [x, 1]
    Tensor x({n, d + 1});
    double max_sq = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        auto src = ds.images.row(r);
        auto dst = x.row(r);
        std::copy(src.begin(), src.end(), dst.begin());
        dst[d] = 1.0;
        max_sq = std::max(max_sq, squared_norm(dst));
    }
    // the mean cross-entropy is (max |x|^2 / 2)-smooth
    const double lr = 2.0 / max_sq;

    LinearProbe probe{Tensor({k, d + 1}), 0.0, 0};
    for (int step = 0;; ++step) {
        Tensor logits = matmul_nt(x, probe.weights);
        probe.train_accuracy = metrics::accuracy(logits, ds.labels);
        probe.steps = step;
        if (probe.train_accuracy == 1.0 || step == max_steps) break;
        // softmax gradient w.r.t. logits, averaged over the batch
        for (std::size_t r = 0; r < n; ++r) {
            auto f = logits.row(r);
            const double mx = *std::max_element(f.begin(), f.end());
            double z = 0.0;
            for (double& v : f) z += (v = std::exp(v - mx));
            for (double& v : f) v /= z * static_cast<double>(n);
            f[static_cast<std::size_t>(ds.labels[r])] -= 1.0 / static_cast<double>(n);
        }
        Tensor grad = matmul_tn(logits, x);
        auto w = probe.weights.values();
        auto g = grad.values();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
    }
    return probe;
}

SeparableSubset make_linearly_separable_subset(const Dataset& ds, std::size_t n, std::uint64_t seed,
                                               int max_probe_steps) {
    if (n == 0 || n > ds.size()) throw std::invalid_argument("separable subset size must lie in [1, N]");
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(seed, {stream_tag::kSubset, n}));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);

    SeparableSubset out;
    if (n == 1) {
        out.data = ds.select(idx);
        out.source_indices = idx;
        out.probe_accuracy = 1.0;
        return out;
    }
    for (;;) {
        Dataset current = ds.select(idx);
        const LinearProbe probe = fit_linear_probe(current, max_probe_steps);
        if (probe.train_accuracy == 1.0) {
            out.data = std::move(current);
            out.source_indices = std::move(idx);
            out.probe_accuracy = probe.train_accuracy;
            return out;
        }
        std::vector<std::size_t> survivors;
        {
            const std::size_t d = current.dim();
            for (std::size_t r = 0; r < current.size(); ++r) {
                auto xr = current.images.row(r);
                std::size_t best = 0;
                double best_v = -INFINITY;
                for (std::size_t c = 0; c < probe.weights.rows(); ++c) {
                    auto wc = probe.weights.row(c);
                    double v = wc[d];
                    for (std::size_t j = 0; j < d; ++j) v += wc[j] * xr[j];
                    if (v > best_v) {
                        best_v = v;
                        best = c;
                    }
                }
                if (static_cast<int>(best) == current.labels[r]) survivors.push_back(idx[r]);
            }
        }
        ++out.prune_rounds;
        if (2 * survivors.size() <= n)
            throw SeparabilityError("separable subset collapsed to " + std::to_string(survivors.size()) + " of " +
                                    std::to_string(n) + " examples; request a smaller subset");
        idx = std::move(survivors);
    }
}

// ---------------------------------------------------------------------------
// Task streams

std::string to_string(StreamKind kind) {
    switch (kind) {
        case StreamKind::RandomLabels: return "random_labels";
        case StreamKind::LabelNoise: return "label_noise";
        case StreamKind::ClassIncremental: return "class_incremental";
        case StreamKind::PixelPermutation: return "pixel_permutation";
    }
    return "random_labels";
}

StreamKind parse_stream_kind(std::string_view text) {
    if (text == "random_labels") return StreamKind::RandomLabels;
    if (text == "label_noise") return StreamKind::LabelNoise;
    if (text == "class_incremental") return StreamKind::ClassIncremental;
    if (text == "pixel_permutation") return StreamKind::PixelPermutation;
    throw std::invalid_argument("unknown stream kind '" + std::string(text) + "'");
}

TaskStream::TaskStream(StreamKind kind, std::shared_ptr<const Dataset> train, std::shared_ptr<const Dataset> test,
                       Params params, std::uint64_t seed)
    : kind_(kind), train_(std::move(train)), test_(std::move(test)), params_(params), seed_(seed) {
    if (!train_) throw std::invalid_argument("task stream needs a base dataset");
    train_->validate();
    if (test_) {
        test_->validate();
        if (test_->dim() != train_->dim()) throw std::invalid_argument("test split dimension differs from train");
    }
    if (params_.num_tasks == 0) throw std::invalid_argument("task stream needs at least one task");
    if (kind_ == StreamKind::LabelNoise) {
        if (params_.num_tasks < 2) throw std::invalid_argument("label-noise stream needs at least 2 tasks");
        if (!(params_.initial_noise >= 0.0 && params_.initial_noise <= 1.0))
            throw std::invalid_argument("initial_noise must lie in [0, 1]");
    }
    if (kind_ == StreamKind::ClassIncremental) {
        if (params_.classes_per_task == 0 || params_.classes_per_task > static_cast<std::size_t>(train_->num_classes))
            throw std::invalid_argument("classes_per_task must lie in [1, num_classes]");
    }
}

void TaskStream::check_task(std::size_t tau) const {
    if (tau >= params_.num_tasks)
        throw std::out_of_range("task " + std::to_string(tau) + " outside stream of " +
                                std::to_string(params_.num_tasks) + " tasks");
}

std::vector<int> TaskStream::random_labels(std::size_t tau) const {
    check_task(tau);
    Rng rng(derive_seed(seed_, {stream_tag::kRandomLabels, tau}));
    std::uniform_int_distribution<int> dist(0, train_->num_classes - 1);
    std::vector<int> labels(train_->size());
    for (int& y : labels) y = dist(rng);
    return labels;
}

double TaskStream::noise_fraction(std::size_t tau) const {
    check_task(tau);
    const double steps = static_cast<double>(params_.num_tasks - 1);
    return params_.initial_noise * static_cast<double>(params_.num_tasks - 1 - tau) / steps;
}

std::vector<int> TaskStream::noisy_labels(std::size_t tau) const {
    const double fraction = noise_fraction(tau);
    std::vector<int> labels = train_->labels;
    const std::size_t n = train_->size();
    const auto corrupted = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (corrupted == 0) return labels;
    Rng rng(derive_seed(seed_, {stream_tag::kLabelNoise, tau}));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::uniform_int_distribution<int> dist(0, train_->num_classes - 1);
    for (std::size_t i = 0; i < corrupted; ++i) labels[idx[i]] = dist(rng);
    return labels;
}

std::vector<int> TaskStream::class_order() const {
    std::vector<int> order(static_cast<std::size_t>(train_->num_classes));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed_, {stream_tag::kClassOrder}));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

std::vector<int> TaskStream::task_classes(std::size_t tau) const {
    check_task(tau);
    auto order = class_order();
    const std::size_t take = std::min(order.size(), (tau + 1) * params_.classes_per_task);
    order.resize(take);
    return order;
}

std::vector<std::size_t> TaskStream::permutation(std::size_t tau) const {
    check_task(tau);
    std::vector<std::size_t> perm(train_->dim());
    std::iota(perm.begin(), perm.end(), 0);
    if (tau == 0) return perm;
    Rng rng(derive_seed(seed_, {stream_tag::kPermutation, tau}));
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

namespace {

Dataset permute_pixels(const Dataset& ds, const std::vector<std::size_t>& perm) {
    Dataset out = ds;
    for (std::size_t r = 0; r < ds.size(); ++r) {
        auto src = ds.images.row(r);
        auto dst = out.images.row(r);
        for (std::size_t j = 0; j < perm.size(); ++j) dst[j] = src[perm[j]];
    }
    return out;
}

std::vector<std::size_t> all_rows(const Dataset& ds) {
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

}  // namespace

Task TaskStream::task(std::size_t tau) const {
    check_task(tau);
    Task t;
    t.index = tau;
    switch (kind_) {
        case StreamKind::RandomLabels:
            t.train = *train_;
            t.train.labels = random_labels(tau);
            t.eval = t.train;
            t.eval_is_train = true;
            break;
        case StreamKind::LabelNoise:
            t.train = *train_;
            t.train.labels = noisy_labels(tau);
            t.eval = test_ ? *test_ : *train_;
            break;
        case StreamKind::ClassIncremental: {
            const auto classes = task_classes(tau);
            std::vector<bool> active(static_cast<std::size_t>(train_->num_classes), false);
            for (int c : classes) active[static_cast<std::size_t>(c)] = true;
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < train_->size(); ++i)
                if (active[static_cast<std::size_t>(train_->labels[i])]) rows.push_back(i);
            t.train = train_->select(rows);
            t.eval = test_ ? *test_ : train_->select(all_rows(*train_));
            break;
        }
        case StreamKind::PixelPermutation: {
            const auto perm = permutation(tau);
            t.train = permute_pixels(*train_, perm);
            t.eval = test_ ? permute_pixels(*test_, perm) : t.train;
            t.eval_is_train = !test_;
            break;
        }
    }
    return t;
}

TaskStream random_label_stream(std::shared_ptr<const Dataset> ds, std::size_t num_tasks, std::uint64_t seed) {
    return TaskStream(StreamKind::RandomLabels, std::move(ds), nullptr, {num_tasks, 0.0, 1}, seed);
}

TaskStream label_noise_stream(std::shared_ptr<const Dataset> ds, std::shared_ptr<const Dataset> test,
                              std::size_t num_tasks, double initial_noise, std::uint64_t seed) {
    return TaskStream(StreamKind::LabelNoise, std::move(ds), std::move(test), {num_tasks, initial_noise, 1}, seed);
}

TaskStream class_incremental_stream(std::shared_ptr<const Dataset> ds, std::shared_ptr<const Dataset> test,
                                    std::size_t classes_per_task, std::uint64_t seed, std::size_t num_tasks) {
    if (!ds) throw std::invalid_argument("task stream needs a base dataset");
    if (classes_per_task == 0) throw std::invalid_argument("classes_per_task must be positive");
    if (num_tasks == 0) {
        const auto k = static_cast<std::size_t>(ds->num_classes);
        num_tasks = (k + classes_per_task - 1) / classes_per_task;
    }
    return TaskStream(StreamKind::ClassIncremental, std::move(ds), std::move(test), {num_tasks, 0.0, classes_per_task},
                      seed);
}

TaskStream pixel_permutation_stream(std::shared_ptr<const Dataset> ds, std::shared_ptr<const Dataset> test,
                                    std::size_t num_tasks, std::uint64_t seed) {
    return TaskStream(StreamKind::PixelPermutation, std::move(ds), std::move(test), {num_tasks, 0.0, 1}, seed);
}

std::vector<std::vector<std::size_t>> batch_indices(std::uint64_t seed, std::size_t task, std::size_t epoch,
                                                    std::size_t n, std::size_t batch_size) {
    if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, {stream_tag::kShuffle, task, epoch}));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size)
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch_size)));
    return out;
}

std::vector<Batch> batches(const TaskStream& stream, const Task& task, std::size_t epoch, std::size_t batch_size) {
    std::vector<Batch> out;
    for (const auto& idx : batch_indices(stream.seed(), task.index, epoch, task.train.size(), batch_size)) {
        Batch b;
        b.x = task.train.images.gather_rows(idx);
        b.y.reserve(idx.size());
        for (auto i : idx) b.y.push_back(task.train.labels[i]);
        b.task_id = task.index;
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace plastica::streams
