#include "plastica/runner/summary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

namespace plastica::runner {

std::size_t Summary::metric_index(const std::string& name) const {
    const auto it = std::find(metrics.begin(), metrics.end(), name);
    if (it == metrics.end()) throw std::out_of_range("summary has no metric '" + name + "'");
    return static_cast<std::size_t>(it - metrics.begin());
}

const SummaryRow& Summary::end_of_task_row(std::size_t task) const {
    for (const auto& r : rows)
        if (r.task == task && r.end_of_task) return r;
    throw std::out_of_range("summary has no end-of-task row for task " + std::to_string(task));
}

Stat mean_sem(const std::vector<double>& values) {
    Stat s;
    s.n = values.size();
    if (values.empty()) return s;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    s.mean = mean;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double n = static_cast<double>(values.size());
        s.sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return s;
}

Summary aggregate(const std::vector<RunLog>& logs, const std::string& label) {
    if (logs.empty()) throw std::invalid_argument("aggregate needs at least one run log");
    for (const auto& log : logs) {
        if (log.identity != logs.front().identity)
            throw std::invalid_argument("cannot aggregate runs with different configurations");
        if (log.hidden_layers != logs.front().hidden_layers)
            throw std::invalid_argument("cannot aggregate runs with different depths");
    }
    const std::size_t hidden = logs.front().hidden_layers;

    Summary s;
    s.label = label;
    s.metrics = {"train_loss", "train_acc", "test_acc"};
    for (std::size_t l = 1; l <= hidden; ++l) s.metrics.push_back("mean_sign_entropy_l" + std::to_string(l));
    s.metrics.push_back("mean_sign_entropy");
    s.metrics.push_back("min_sv");
    s.metrics.push_back("param_l2");

    struct Bucket {
        std::vector<std::vector<double>> values;
        std::vector<double> iterations;
        bool end_of_task = false;
    };
    std::map<std::pair<std::size_t, std::size_t>, Bucket> buckets;
    std::vector<std::uint64_t> seeds;
    for (const auto& log : logs) {
        for (const auto& r : log.rows) {
            if (r.status != "ok") continue;
            seeds.push_back(r.seed);
            auto& b = buckets[{r.task, r.epoch}];
            if (b.values.empty()) b.values.resize(s.metrics.size());
            b.iterations.push_back(static_cast<double>(r.iteration));
            b.end_of_task = b.end_of_task || r.end_of_task;
            auto put = [&](std::size_t k, const std::optional<double>& v) {
                if (v) b.values[k].push_back(*v);
            };
            put(0, r.train_loss);
            put(1, r.train_acc);
            put(2, r.test_acc);
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t l = 0; l < hidden; ++l) {
                const auto v = l < r.sign_entropy.size() ? r.sign_entropy[l] : std::nullopt;
                put(3 + l, v);
                if (v) {
                    sum += *v;
                    ++count;
                }
            }
            if (count) b.values[3 + hidden].push_back(sum / static_cast<double>(count));
            put(4 + hidden, r.min_sv);
            put(5 + hidden, r.param_l2);
        }
    }
    std::sort(seeds.begin(), seeds.end());
    s.num_seeds = static_cast<std::size_t>(std::unique(seeds.begin(), seeds.end()) - seeds.begin());

    for (auto& [key, b] : buckets) {
        SummaryRow row;
        row.task = key.first;
        row.epoch = key.second;
        row.iteration = mean_sem(b.iterations).mean;
        row.end_of_task = b.end_of_task;
        for (const auto& v : b.values) row.stats.push_back(mean_sem(v));
        s.rows.push_back(std::move(row));
    }
    return s;
}

namespace {

std::string num(double v) {
    if (!std::isfinite(v)) return "";
    return format_double(v);
}

}  // namespace

void write_summary_csv(const Summary& summary, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "task,epoch,iteration,end_of_task";
    for (const auto& m : summary.metrics) out << ',' << m << "_mean," << m << "_sem," << m << "_n";
    out << '\n';
    for (const auto& r : summary.rows) {
        out << r.task << ',' << r.epoch << ',' << num(r.iteration) << ',' << (r.end_of_task ? 1 : 0);
        for (const auto& st : r.stats) {
            if (st.n == 0)
                out << ",,,0";
            else
                out << ',' << num(st.mean) << ',' << num(st.sem) << ',' << st.n;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 70, kRight = 560, kTop = 40, kBottom = 390;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

struct Point {
    double x, mean, sem;
};

std::vector<Point> series(const Summary& s, std::size_t k, PlotAxis axis) {
    std::vector<Point> pts;
    for (const auto& r : s.rows) {
        if (axis == PlotAxis::Task && !r.end_of_task) continue;
        const Stat& st = r.stats[k];
        if (st.n == 0) continue;
        const double x = axis == PlotAxis::Task ? static_cast<double>(r.task + 1) : r.iteration;
        pts.push_back({x, st.mean, st.sem});
    }
    return pts;
}

}  // namespace

std::string render_svg(const std::vector<Summary>& summaries, const std::string& metric, PlotAxis axis) {
    std::vector<std::vector<Point>> all;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : summaries) {
        const auto it = std::find(s.metrics.begin(), s.metrics.end(), metric);
        all.push_back(it == s.metrics.end() ? std::vector<Point>{}
                                            : series(s, static_cast<std::size_t>(it - s.metrics.begin()), axis));
        for (const auto& p : all.back()) {
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.mean - p.sem);
            ymax = std::max(ymax, p.mean + p.sem);
        }
    }
    if (!(xmin <= xmax)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax - xmin < 1e-12) xmin -= 0.5, xmax += 0.5;
    if (ymax - ymin < 1e-12) {
        const double pad = std::max(0.5 * std::abs(ymin), 0.5);
        ymin -= pad;
        ymax += pad;
    } else {
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad;
        ymax += pad;
    }
    auto sx = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * (kRight - kLeft); };
    auto sy = [&](double y) { return kBottom - (y - ymin) / (ymax - ymin) * (kBottom - kTop); };

    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(kWidth) + "\" height=\"" + px(kHeight) +
         "\" viewBox=\"0 0 " + px(kWidth) + ' ' + px(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + px((kLeft + kRight) / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
         escape(metric) + "</text>\n";
    o += "<rect x=\"" + px(kLeft) + "\" y=\"" + px(kTop) + "\" width=\"" + px(kRight - kLeft) + "\" height=\"" +
         px(kBottom - kTop) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double y = ymin + (ymax - ymin) * i / 5.0;
        o += "<line x1=\"" + px(kLeft - 4) + "\" y1=\"" + px(sy(y)) + "\" x2=\"" + px(kLeft) + "\" y2=\"" + px(sy(y)) +
             "\" stroke=\"#444\"/>\n";
        o += "<text x=\"" + px(kLeft - 7) + "\" y=\"" + px(sy(y) + 4) + "\" text-anchor=\"end\">" + tick_label(y) +
             "</text>\n";
        const double x = xmin + (xmax - xmin) * i / 5.0;
        o += "<line x1=\"" + px(sx(x)) + "\" y1=\"" + px(kBottom) + "\" x2=\"" + px(sx(x)) + "\" y2=\"" +
             px(kBottom + 4) + "\" stroke=\"#444\"/>\n";
        o += "<text x=\"" + px(sx(x)) + "\" y=\"" + px(kBottom + 18) + "\" text-anchor=\"middle\">" + tick_label(x) +
             "</text>\n";
    }
    o += "<text x=\"" + px((kLeft + kRight) / 2) + "\" y=\"" + px(kHeight - 12) + "\" text-anchor=\"middle\">" +
         (axis == PlotAxis::Task ? "task" : "iteration") + "</text>\n";

    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto& pts = all[i];
        const std::string color = kPalette[i % std::size(kPalette)];
        if (!pts.empty()) {
            std::string band;
            for (const auto& p : pts) band += px(sx(p.x)) + ',' + px(sy(p.mean + p.sem)) + ' ';
            for (auto it = pts.rbegin(); it != pts.rend(); ++it)
                band += px(sx(it->x)) + ',' + px(sy(it->mean - it->sem)) + ' ';
            band.pop_back();
            o += "<polygon points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
            std::string line;
            for (const auto& p : pts) line += px(sx(p.x)) + ',' + px(sy(p.mean)) + ' ';
            line.pop_back();
            o += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        }
        const double ly = kTop + 10 + 20.0 * static_cast<double>(i);
        o += "<line x1=\"" + px(kRight + 15) + "\" y1=\"" + px(ly) + "\" x2=\"" + px(kRight + 40) + "\" y2=\"" + px(ly) +
             "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        o += "<text class=\"legend\" x=\"" + px(kRight + 46) + "\" y=\"" + px(ly + 4) + "\">" +
             escape(summaries[i].label) + "</text>\n";
    }
    o += "</svg>\n";
    return o;
}

std::vector<std::filesystem::path> emit_plots(const std::vector<Summary>& summaries, const std::filesystem::path& out_dir,
                                              PlotAxis axis) {
    if (summaries.empty()) throw std::invalid_argument("nothing to plot");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir))
        throw std::runtime_error("cannot create plot directory " + out_dir.string());

    std::vector<std::string> metrics;
    for (const auto& s : summaries)
        for (const auto& m : s.metrics)
            if (std::find(metrics.begin(), metrics.end(), m) == metrics.end()) metrics.push_back(m);

    std::vector<std::filesystem::path> written;
    for (const auto& m : metrics) {
        bool any = false;
        for (const auto& s : summaries) {
            const auto it = std::find(s.metrics.begin(), s.metrics.end(), m);
            if (it != s.metrics.end() && !series(s, static_cast<std::size_t>(it - s.metrics.begin()), axis).empty())
                any = true;
        }
        if (!any) continue;
        const auto path = out_dir / (m + (axis == PlotAxis::Task ? "" : "_by_iteration") + ".svg");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << render_svg(summaries, m, axis);
        if (!out) throw std::runtime_error("write failed for " + path.string());
        written.push_back(path);
    }
    return written;
}

}  // namespace plastica::runner
