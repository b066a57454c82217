#pragma once

#include "plastica/streams/dataset.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace plastica::streams {

// ---------------------------------------------------------------------------
// Linearly separable subsets

struct LinearProbe {
    Tensor weights;  // (num_classes, d + 1); last column is the bias
    double train_accuracy = 0.0;
    int steps = 0;
};

/// Multinomial logistic regression fitted by full-batch gradient descent,
/// stopping early once every training example is classified correctly.
LinearProbe fit_linear_probe(const Dataset& ds, int max_steps = 5000);

struct SeparableSubset {
    Dataset data;
    std::vector<std::size_t> source_indices;  // rows of the base dataset
    double probe_accuracy = 0.0;              // certificate; always 1.0 on success
    int prune_rounds = 0;
};

class SeparabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Draws n examples, then alternates probe fitting and pruning misclassified
/// examples until the probe is perfect. Throws SeparabilityError when the
/// survivors fall to n/2 or fewer.
SeparableSubset make_linearly_separable_subset(const Dataset& ds, std::size_t n, std::uint64_t seed,
                                               int max_probe_steps = 5000);

// ---------------------------------------------------------------------------
// Task streams

enum class StreamKind { RandomLabels, LabelNoise, ClassIncremental, PixelPermutation };

std::string to_string(StreamKind kind);
StreamKind parse_stream_kind(std::string_view text);

struct Task {
    std::size_t index = 0;
    Dataset train;
    Dataset eval;
    bool eval_is_train = false;  // random-label streams evaluate on their own training data
};

struct Batch {
    Tensor x;
    std::vector<int> y;
    std::size_t task_id = 0;
};

/// A finite task sequence over a base dataset. Every task is a pure function
/// of (base, kind, seed, task index); nothing is cached between calls.
class TaskStream {
public:
    struct Params {
        std::size_t num_tasks = 10;
        double initial_noise = 0.5;      // LabelNoise
        std::size_t classes_per_task = 5;  // ClassIncremental
    };

    TaskStream(StreamKind kind, std::shared_ptr<const Dataset> train, std::shared_ptr<const Dataset> test,
               Params params, std::uint64_t seed);

    StreamKind kind() const noexcept { return kind_; }
    std::size_t num_tasks() const noexcept { return params_.num_tasks; }
    std::uint64_t seed() const noexcept { return seed_; }
    const Dataset& base() const noexcept { return *train_; }
    const Params& params() const noexcept { return params_; }

    Task task(std::size_t tau) const;

    // Derived per-task state.
    std::vector<int> random_labels(std::size_t tau) const;
    double noise_fraction(std::size_t tau) const;
    std::vector<int> noisy_labels(std::size_t tau) const;
    std::vector<int> class_order() const;
    std::vector<int> task_classes(std::size_t tau) const;
    std::vector<std::size_t> permutation(std::size_t tau) const;

private:
    void check_task(std::size_t tau) const;

    StreamKind kind_;
    std::shared_ptr<const Dataset> train_;
    std::shared_ptr<const Dataset> test_;
    Params params_;
    std::uint64_t seed_;
};

TaskStream random_label_stream(std::shared_ptr<const Dataset> ds, std::size_t num_tasks, std::uint64_t seed);
TaskStream label_noise_stream(std::shared_ptr<const Dataset> ds, std::shared_ptr<const Dataset> test,
                              std::size_t num_tasks, double initial_noise, std::uint64_t seed);
/// num_tasks = 0 means exactly enough tasks to cover every class.
TaskStream class_incremental_stream(std::shared_ptr<const Dataset> ds, std::shared_ptr<const Dataset> test,
                                    std::size_t classes_per_task, std::uint64_t seed, std::size_t num_tasks = 0);
TaskStream pixel_permutation_stream(std::shared_ptr<const Dataset> ds, std::shared_ptr<const Dataset> test,
                                    std::size_t num_tasks, std::uint64_t seed);

/// Index batches for one epoch of a task with n training examples. The
/// shuffle is derived from (seed, task, epoch).
std::vector<std::vector<std::size_t>> batch_indices(std::uint64_t seed, std::size_t task, std::size_t epoch,
                                                    std::size_t n, std::size_t batch_size);

std::vector<Batch> batches(const TaskStream& stream, const Task& task, std::size_t epoch, std::size_t batch_size);

}  // namespace plastica::streams
