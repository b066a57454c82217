#pragma once

#include "plastica/runner/experiment.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace plastica::runner {

struct Stat {
    double mean = 0.0;
    double sem = 0.0;  // sample std / sqrt(n); 0 for a single seed
    std::size_t n = 0;
};

struct SummaryRow {
    std::size_t task = 0;
    std::size_t epoch = 0;
    double iteration = 0.0;  // seed mean
    bool end_of_task = false;
    std::vector<Stat> stats;  // parallel to Summary::metrics; n = 0 when no seed reported a value
};

struct Summary {
    std::string label;
    std::vector<std::string> metrics;
    std::vector<SummaryRow> rows;  // ordered by (task, epoch)
    std::size_t num_seeds = 0;

    /// Column index of a metric name; throws std::out_of_range when absent.
    std::size_t metric_index(const std::string& name) const;
    const SummaryRow& end_of_task_row(std::size_t task) const;
};

/// Mean and SEM across seeds per (task, epoch). All logs must share one
/// configuration apart from the seed list.
Summary aggregate(const std::vector<RunLog>& logs, const std::string& label = "run");

/// Numerically stable mean and SEM of a sample.
Stat mean_sem(const std::vector<double>& values);

void write_summary_csv(const Summary& summary, const std::filesystem::path& path);

enum class PlotAxis { Task, Iteration };

/// One SVG per metric with a mean line and a +-SEM band per summary. Returns
/// the written paths in metric order.
std::vector<std::filesystem::path> emit_plots(const std::vector<Summary>& summaries, const std::filesystem::path& out_dir,
                                              PlotAxis axis = PlotAxis::Task);

/// Renders one metric; exposed for tests.
std::string render_svg(const std::vector<Summary>& summaries, const std::string& metric, PlotAxis axis);

}  // namespace plastica::runner
