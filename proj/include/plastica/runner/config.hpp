#pragma once

#include "plastica/nn/activation.hpp"
#include "plastica/nn/network.hpp"
#include "plastica/optim.hpp"
#include "plastica/streams/task_stream.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace plastica::runner {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Minimal TOML-style documents: [section] headers, key = value lines, values
// are strings, integers, floats, booleans or single-level arrays.

struct ConfigValue {
    using List = std::vector<ConfigValue>;
    std::variant<bool, std::int64_t, double, std::string, List> value;

    bool as_bool(const std::string& where) const;
    std::int64_t as_int(const std::string& where) const;
    double as_double(const std::string& where) const;
    const std::string& as_string(const std::string& where) const;
    const List& as_list(const std::string& where) const;
    bool is_list() const noexcept { return std::holds_alternative<List>(value); }

    /// Renders the value back in document syntax.
    std::string render() const;
};

struct ConfigSection {
    std::string name;
    std::vector<std::pair<std::string, ConfigValue>> entries;

    const ConfigValue* find(std::string_view key) const;
    void set(const std::string& key, ConfigValue v);
};

struct ConfigDocument {
    std::vector<ConfigSection> sections;

    const ConfigSection* section(std::string_view name) const;
    ConfigSection& section_or_add(const std::string& name);
};

ConfigDocument parse_config(std::string_view text, const std::string& origin = "<config>");
ConfigDocument load_config_file(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Experiment configuration

enum class LossKind { CrossEntropy, SquaredError };

struct DataConfig {
    std::filesystem::path train_images = "data/mnist/train-images-idx3-ubyte.gz";
    std::filesystem::path train_labels = "data/mnist/train-labels-idx1-ubyte.gz";
    std::filesystem::path test_images;  // empty: no separate test split
    std::filesystem::path test_labels;
    std::size_t subset = 0;  // 0 keeps the whole training split
    bool separable = false;  // probe-and-prune the subset to a linearly separable one
    std::uint64_t subset_seed = 0;
};

struct NetworkConfig {
    std::size_t depth = 4;
    std::size_t width = 64;
    std::string activation = "relu";
    std::string first_activation;  // optional override for the first hidden layer
    std::optional<double> alpha;   // wraps the hidden activation in an alpha blend
    nn::Norm norm = nn::Norm::None;

    nn::Activation hidden() const;
    std::optional<nn::Activation> first_hidden() const;
};

struct TrainingConfig {
    std::size_t epochs_per_task = 5;
    std::size_t batch_size = 256;
    LossKind loss = LossKind::CrossEntropy;
    std::size_t probe_batch = 0;  // rows of the eval split used for sign entropy; 0 = batch_size
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::vector<std::uint64_t> seeds{0};
    std::size_t threads = 0;  // 0 = hardware concurrency
    std::filesystem::path output_dir = "runs";
    DataConfig data;
    streams::StreamKind stream = streams::StreamKind::RandomLabels;
    streams::TaskStream::Params stream_params;
    NetworkConfig network;
    optim::OptimizerConfig optimizer;
    optim::InterventionConfig intervention = optim::NoIntervention{};
    TrainingConfig training;

    /// Static checks; with check_paths, also requires the data files to exist.
    void validate(bool check_paths = true) const;

    /// Fully populated document; sections in a fixed order.
    ConfigDocument to_document() const;
    std::string resolved_text() const;
    /// resolved_text() without the seed list, for comparing runs across seeds.
    std::string identity_text() const;
};

/// Relative data paths are resolved against base_dir.
ExperimentConfig experiment_from_document(const ConfigDocument& doc,
                                          const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Cartesian product over the [sweep] section ("section.key" = [values]).
/// Each variant is labelled by its overridden values.
struct SweepVariant {
    std::string label;
    ExperimentConfig config;
};
std::vector<SweepVariant> expand_sweep(const ConfigDocument& doc, const std::filesystem::path& base_dir = {});

std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace plastica::runner
