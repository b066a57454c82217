#pragma once

#include "plastica/runner/config.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace plastica::runner {

inline constexpr const char* kCodeVersion = "plastica 1.0.0";

/// One evaluation row, recorded at the end of every epoch.
struct MetricsRecord {
    std::uint64_t seed = 0;
    std::size_t task = 0;
    std::size_t epoch = 0;
    std::size_t iteration = 0;  // optimizer steps taken so far
    std::optional<double> train_loss;
    std::optional<double> train_acc;
    std::optional<double> test_acc;
    std::vector<std::optional<double>> sign_entropy;  // one per hidden layer
    std::optional<double> min_sv;                     // only for all-identity networks
    std::optional<double> param_l2;
    bool end_of_task = false;
    std::string status = "ok";
};

struct RunLog {
    std::vector<MetricsRecord> rows;
    std::string resolved_config;
    std::string identity;  // resolved config without seeds
    std::string code_version = kCodeVersion;
    std::size_t hidden_layers = 0;

    bool aborted() const;
};

class RunAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Base dataset the stream is built on, after subset selection.
struct PreparedData {
    std::shared_ptr<const streams::Dataset> train;
    std::shared_ptr<const streams::Dataset> test;  // may be null
};

PreparedData prepare_data(const ExperimentConfig& cfg);

using ProgressFn = std::function<void(std::uint64_t seed, std::size_t task)>;

/// Trains every seed (seed-parallel, cfg.threads workers) and returns rows
/// ordered by (seed, iteration).
RunLog run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});
RunLog run_experiment(const ExperimentConfig& cfg, const PreparedData& data, const ProgressFn& progress = {});

/// A single seed's rows; never throws on non-finite values, which end the
/// run with a diagnostic row instead.
std::vector<MetricsRecord> run_seed(const ExperimentConfig& cfg, const PreparedData& data, std::uint64_t seed,
                                    const ProgressFn& progress = {});

// CSV

std::vector<std::string> csv_header(std::size_t hidden_layers);
std::string format_csv(const RunLog& log);
void write_csv(const RunLog& log, const std::filesystem::path& path);
/// Reads rows back; the header fixes the number of hidden layers.
RunLog read_csv(const std::filesystem::path& path);

/// metrics.csv and config.resolved under dir.
void write_run(const RunLog& log, const std::filesystem::path& dir);

}  // namespace plastica::runner
