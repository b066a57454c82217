#include "plastica/runner/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace plastica::runner {

namespace {

const char* type_name(const ConfigValue& v) {
    switch (v.value.index()) {
        case 0: return "boolean";
        case 1: return "integer";
        case 2: return "float";
        case 3: return "string";
        default: return "array";
    }
}

[[noreturn]] void type_error(const ConfigValue& v, const std::string& where, const char* wanted) {
    throw ConfigError(where + ": expected " + wanted + ", found " + type_name(v));
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

class ValueParser {
public:
    ValueParser(std::string_view text, std::string where) : s_(text), where_(std::move(where)) {}

    ConfigValue parse_all() {
        ConfigValue v = parse_value();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing text");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
            ++pos_;
    }

    ConfigValue parse_value() {
        skip_ws();
        if (pos_ >= s_.size()) fail("missing value");
        const char c = s_[pos_];
        if (c == '"') return {parse_string()};
        if (c == '[') return parse_array();
        return parse_bare();
    }

    std::string parse_string() {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c == '\\') {
                if (pos_ >= s_.size()) fail("unterminated escape");
                const char e = s_[pos_++];
                switch (e) {
                    case 'n': c = '\n'; break;
                    case 't': c = '\t'; break;
                    case '"': c = '"'; break;
                    case '\\': c = '\\'; break;
                    default: fail(std::string("unknown escape \\") + e);
                }
            }
            out.push_back(c);
        }
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    ConfigValue parse_array() {
        ++pos_;
        ConfigValue::List items;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
            ++pos_;
            return {items};
        }
        for (;;) {
            ConfigValue item = parse_value();
            if (item.is_list()) fail("nested arrays are not supported");
            items.push_back(std::move(item));
            skip_ws();
            if (pos_ >= s_.size()) fail("unterminated array");
            if (s_[pos_] == ',') {
                ++pos_;
                skip_ws();
                if (pos_ < s_.size() && s_[pos_] == ']') {
                    ++pos_;
                    break;
                }
                continue;
            }
            if (s_[pos_] == ']') {
                ++pos_;
                break;
            }
            fail("expected ',' or ']' in array");
        }
        return {items};
    }

    ConfigValue parse_bare() {
        const auto start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != ' ' && s_[pos_] != '\t') ++pos_;
        const std::string tok(s_.substr(start, pos_ - start));
        if (tok == "true") return {true};
        if (tok == "false") return {false};
        if (tok.empty()) fail("missing value");
        const bool is_float = tok.find_first_of(".eE") != std::string::npos || tok == "inf" || tok == "nan" ||
                              tok == "+inf" || tok == "-inf";
        if (!is_float) {
            std::int64_t v = 0;
            const char* b = tok.data();
            if (*b == '+') ++b;
            const auto [p, ec] = std::from_chars(b, tok.data() + tok.size(), v);
            if (ec == std::errc() && p == tok.data() + tok.size()) return {v};
            fail("cannot parse value '" + tok + "'");
        }
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size() || errno == ERANGE) fail("cannot parse number '" + tok + "'");
        return {v};
    }

    std::string_view s_;
    std::string where_;
    std::size_t pos_ = 0;
};

// Strips a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_str && c == '\\') {
            ++i;
            continue;
        }
        if (c == '"') in_str = !in_str;
        if (c == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

int bracket_balance(const std::string& s) {
    int depth = 0;
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_str && c == '\\') {
            ++i;
            continue;
        }
        if (c == '"') in_str = !in_str;
        if (!in_str && c == '[') ++depth;
        if (!in_str && c == ']') --depth;
    }
    return depth;
}

}  // namespace

bool ConfigValue::as_bool(const std::string& where) const {
    if (const auto* b = std::get_if<bool>(&value)) return *b;
    type_error(*this, where, "a boolean");
}

std::int64_t ConfigValue::as_int(const std::string& where) const {
    if (const auto* i = std::get_if<std::int64_t>(&value)) return *i;
    type_error(*this, where, "an integer");
}

double ConfigValue::as_double(const std::string& where) const {
    if (const auto* d = std::get_if<double>(&value)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&value)) return static_cast<double>(*i);
    type_error(*this, where, "a number");
}

const std::string& ConfigValue::as_string(const std::string& where) const {
    if (const auto* s = std::get_if<std::string>(&value)) return *s;
    type_error(*this, where, "a string");
}

const ConfigValue::List& ConfigValue::as_list(const std::string& where) const {
    if (const auto* l = std::get_if<List>(&value)) return *l;
    type_error(*this, where, "an array");
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string ConfigValue::render() const {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, bool>) {
                return v ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, double>) {
                std::string s = format_double(v);
                // keep floats recognizable as floats
                if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
                return s;
            } else if constexpr (std::is_same_v<T, std::string>) {
                std::string out = "\"";
                for (char c : v) {
                    if (c == '"' || c == '\\') out.push_back('\\');
                    if (c == '\n') {
                        out += "\\n";
                        continue;
                    }
                    out.push_back(c);
                }
                return out + "\"";
            } else {
                std::string out = "[";
                for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i].render();
                return out + "]";
            }
        },
        value);
}

const ConfigValue* ConfigSection::find(std::string_view key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return &v;
    return nullptr;
}

void ConfigSection::set(const std::string& key, ConfigValue v) {
    for (auto& [k, old] : entries)
        if (k == key) {
            old = std::move(v);
            return;
        }
    entries.emplace_back(key, std::move(v));
}

const ConfigSection* ConfigDocument::section(std::string_view name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

ConfigSection& ConfigDocument::section_or_add(const std::string& name) {
    for (auto& s : sections)
        if (s.name == name) return s;
    sections.push_back({name, {}});
    return sections.back();
}

ConfigDocument parse_config(std::string_view text, const std::string& origin) {
    ConfigDocument doc;
    ConfigSection* current = nullptr;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::size_t first_line = line_no;
        std::string line = strip_comment(raw);
        // arrays may continue over several lines
        while (bracket_balance(line) > 0 && line.find('=') != std::string::npos && std::getline(in, raw)) {
            ++line_no;
            line += '\n' + strip_comment(raw);
        }
        const std::string where = origin + ":" + std::to_string(first_line);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3) throw ConfigError(where + ": malformed section header");
            const std::string name = trim(std::string_view(t).substr(1, t.size() - 2));
            if (doc.section(name)) throw ConfigError(where + ": duplicate section [" + name + "]");
            current = &doc.section_or_add(name);
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.size() >= 2 && key.front() == '"' && key.back() == '"') key = key.substr(1, key.size() - 2);
        if (key.empty()) throw ConfigError(where + ": empty key");
        if (!current) current = &doc.section_or_add("");
        if (current->find(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
        current->entries.emplace_back(key, ValueParser(std::string_view(t).substr(eq + 1), where).parse_all());
    }
    return doc;
}

ConfigDocument load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

// ---------------------------------------------------------------------------
// Experiment configuration

nn::Activation NetworkConfig::hidden() const {
    nn::Activation act = nn::Activation::parse(activation);
    if (alpha) act = nn::Activation::alpha_linearized(act, *alpha);
    return act;
}

std::optional<nn::Activation> NetworkConfig::first_hidden() const {
    if (first_activation.empty()) return std::nullopt;
    return nn::Activation::parse(first_activation);
}

namespace {

std::string loss_name(LossKind k) { return k == LossKind::CrossEntropy ? "cross_entropy" : "squared_error"; }

LossKind parse_loss(const std::string& s, const std::string& where) {
    if (s == "cross_entropy") return LossKind::CrossEntropy;
    if (s == "squared_error") return LossKind::SquaredError;
    throw ConfigError(where + ": unknown loss '" + s + "'");
}

std::string intervention_name(const optim::InterventionConfig& c) {
    static constexpr const char* names[] = {"none", "l2", "l2_init", "spectral", "shrink_perturb", "redo"};
    return names[c.index()];
}

std::size_t to_size(const ConfigValue& v, const std::string& where) {
    const auto i = v.as_int(where);
    if (i < 0) throw ConfigError(where + ": must be non-negative");
    return static_cast<std::size_t>(i);
}

std::uint64_t to_seed(const ConfigValue& v, const std::string& where) {
    const auto i = v.as_int(where);
    if (i < 0) throw ConfigError(where + ": seeds must be non-negative");
    return static_cast<std::uint64_t>(i);
}

const std::set<std::string>& known_keys(const std::string& section) {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"experiment", {"name", "seeds", "threads", "output_dir"}},
        {"data", {"train_images", "train_labels", "test_images", "test_labels", "subset", "separable", "subset_seed"}},
        {"stream", {"kind", "num_tasks", "initial_noise", "classes_per_task"}},
        {"network", {"depth", "width", "activation", "first_activation", "alpha", "norm"}},
        {"optimizer", {"kind", "step_size", "beta1", "beta2", "eps"}},
        {"intervention", {"kind", "strength", "power_iters", "shrink", "noise_std", "threshold", "every_n_tasks"}},
        {"training", {"epochs_per_task", "batch_size", "loss", "probe_batch"}},
    };
    static const std::set<std::string> none;
    const auto it = keys.find(section);
    return it == keys.end() ? none : it->second;
}

}  // namespace

void ExperimentConfig::validate(bool check_paths) const {
    if (seeds.empty()) throw ConfigError("experiment.seeds must not be empty");
    {
        auto sorted = seeds;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw ConfigError("experiment.seeds contains duplicates");
    }
    if (network.depth == 0) throw ConfigError("network.depth must be positive");
    if (network.width == 0) throw ConfigError("network.width must be positive");
    try {
        const auto act = network.hidden();
        if (act.width_doubling() && network.width % 2 != 0)
            throw ConfigError("network.width must be even for width-doubling activations");
        if (const auto first = network.first_hidden(); first && first->width_doubling() && network.width % 2 != 0)
            throw ConfigError("network.width must be even for width-doubling activations");
    } catch (const nn::ActivationError& e) {
        throw ConfigError(std::string("network: ") + e.what());
    }
    if (training.batch_size == 0) throw ConfigError("training.batch_size must be positive");
    if (stream_params.num_tasks == 0) throw ConfigError("stream.num_tasks must be positive");
    if (stream == streams::StreamKind::LabelNoise && stream_params.num_tasks < 2)
        throw ConfigError("stream.num_tasks must be at least 2 for label_noise");
    if (!(stream_params.initial_noise >= 0.0 && stream_params.initial_noise <= 1.0))
        throw ConfigError("stream.initial_noise must lie in [0, 1]");
    if (stream_params.classes_per_task == 0) throw ConfigError("stream.classes_per_task must be positive");
    if (data.separable && data.subset == 0) throw ConfigError("data.separable requires data.subset > 0");
    if (data.test_images.empty() != data.test_labels.empty())
        throw ConfigError("data.test_images and data.test_labels must be given together");
    try {
        optimizer.validate();
        optim::validate(intervention);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (check_paths) {
        for (const auto* p : {&data.train_images, &data.train_labels, &data.test_images, &data.test_labels})
            if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError("data file not found: " + p->string());
    }
}

ConfigDocument ExperimentConfig::to_document() const {
    ConfigDocument doc;
    auto str = [](const std::string& s) { return ConfigValue{s}; };
    auto integer = [](std::size_t v) { return ConfigValue{static_cast<std::int64_t>(v)}; };
    auto real = [](double v) { return ConfigValue{v}; };

    auto& e = doc.section_or_add("experiment");
    e.set("name", str(name));
    ConfigValue::List seed_list;
    for (auto s : seeds) seed_list.push_back({static_cast<std::int64_t>(s)});
    e.set("seeds", {seed_list});
    e.set("threads", integer(threads));
    e.set("output_dir", str(output_dir.generic_string()));

    auto& d = doc.section_or_add("data");
    d.set("train_images", str(data.train_images.generic_string()));
    d.set("train_labels", str(data.train_labels.generic_string()));
    d.set("test_images", str(data.test_images.generic_string()));
    d.set("test_labels", str(data.test_labels.generic_string()));
    d.set("subset", integer(data.subset));
    d.set("separable", {data.separable});
    d.set("subset_seed", integer(data.subset_seed));

    auto& s = doc.section_or_add("stream");
    s.set("kind", str(streams::to_string(stream)));
    s.set("num_tasks", integer(stream_params.num_tasks));
    s.set("initial_noise", real(stream_params.initial_noise));
    s.set("classes_per_task", integer(stream_params.classes_per_task));

    auto& n = doc.section_or_add("network");
    n.set("depth", integer(network.depth));
    n.set("width", integer(network.width));
    n.set("activation", str(network.activation));
    n.set("first_activation", str(network.first_activation));
    if (network.alpha) n.set("alpha", real(*network.alpha));
    n.set("norm", str(nn::to_string(network.norm)));

    auto& o = doc.section_or_add("optimizer");
    o.set("kind", str(optimizer.kind == optim::OptimizerKind::Adam ? "adam" : "sgd"));
    o.set("step_size", real(optimizer.step_size));
    o.set("beta1", real(optimizer.adam_beta1));
    o.set("beta2", real(optimizer.adam_beta2));
    o.set("eps", real(optimizer.adam_eps));

    auto& iv = doc.section_or_add("intervention");
    iv.set("kind", str(intervention_name(intervention)));
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, optim::L2Zero> || std::is_same_v<T, optim::L2Init>) {
                iv.set("strength", real(c.strength));
            } else if constexpr (std::is_same_v<T, optim::Spectral>) {
                iv.set("strength", real(c.strength));
                iv.set("power_iters", integer(static_cast<std::size_t>(c.power_iters)));
            } else if constexpr (std::is_same_v<T, optim::ShrinkPerturb>) {
                iv.set("shrink", real(c.shrink));
                iv.set("noise_std", real(c.noise_std));
                iv.set("every_n_tasks", integer(static_cast<std::size_t>(c.every_n_tasks)));
            } else if constexpr (std::is_same_v<T, optim::ReDO>) {
                iv.set("threshold", real(c.threshold));
                iv.set("every_n_tasks", integer(static_cast<std::size_t>(c.every_n_tasks)));
            }
        },
        intervention);

    auto& t = doc.section_or_add("training");
    t.set("epochs_per_task", integer(training.epochs_per_task));
    t.set("batch_size", integer(training.batch_size));
    t.set("loss", str(loss_name(training.loss)));
    t.set("probe_batch", integer(training.probe_batch));
    return doc;
}

namespace {

std::string render_document(const ConfigDocument& doc, bool skip_seeds) {
    std::string out;
    for (const auto& sec : doc.sections) {
        if (!out.empty()) out += '\n';
        if (!sec.name.empty()) out += '[' + sec.name + "]\n";
        for (const auto& [k, v] : sec.entries) {
            if (skip_seeds && sec.name == "experiment" && (k == "seeds" || k == "threads")) continue;
            const bool bare = k.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789_") == std::string::npos;
            out += (bare ? k : '"' + k + '"') + " = " + v.render() + '\n';
        }
    }
    return out;
}

}  // namespace

std::string ExperimentConfig::resolved_text() const { return render_document(to_document(), false); }
std::string ExperimentConfig::identity_text() const { return render_document(to_document(), true); }

ExperimentConfig experiment_from_document(const ConfigDocument& doc, const std::filesystem::path& base_dir) {
    for (const auto& sec : doc.sections) {
        if (sec.name == "sweep" || sec.name == "verify") continue;
        const auto& keys = known_keys(sec.name);
        if (keys.empty()) throw ConfigError("unknown config section [" + sec.name + "]");
        for (const auto& [k, v] : sec.entries)
            if (!keys.count(k)) throw ConfigError("unknown key '" + k + "' in [" + sec.name + "]");
    }

    ExperimentConfig cfg;
    auto get = [&](const char* section, const char* key) -> const ConfigValue* {
        const auto* sec = doc.section(section);
        return sec ? sec->find(key) : nullptr;
    };
    auto where = [](const char* section, const char* key) { return std::string(section) + "." + key; };
    auto path = [&](const ConfigValue& v, const std::string& w) {
        std::filesystem::path p = v.as_string(w);
        if (!p.empty() && p.is_relative() && !base_dir.empty()) p = base_dir / p;
        return p.lexically_normal();
    };

    if (auto* v = get("experiment", "name")) cfg.name = v->as_string("experiment.name");
    if (auto* v = get("experiment", "seeds")) {
        cfg.seeds.clear();
        for (const auto& s : v->as_list("experiment.seeds")) cfg.seeds.push_back(to_seed(s, "experiment.seeds"));
    }
    if (auto* v = get("experiment", "threads")) cfg.threads = to_size(*v, "experiment.threads");
    if (auto* v = get("experiment", "output_dir")) cfg.output_dir = path(*v, "experiment.output_dir");

    if (auto* v = get("data", "train_images")) cfg.data.train_images = path(*v, where("data", "train_images"));
    if (auto* v = get("data", "train_labels")) cfg.data.train_labels = path(*v, where("data", "train_labels"));
    if (auto* v = get("data", "test_images")) cfg.data.test_images = path(*v, where("data", "test_images"));
    if (auto* v = get("data", "test_labels")) cfg.data.test_labels = path(*v, where("data", "test_labels"));
    if (!get("data", "train_images") && !base_dir.empty()) cfg.data.train_images = base_dir / cfg.data.train_images;
    if (!get("data", "train_labels") && !base_dir.empty()) cfg.data.train_labels = base_dir / cfg.data.train_labels;
    if (auto* v = get("data", "subset")) cfg.data.subset = to_size(*v, "data.subset");
    if (auto* v = get("data", "separable")) cfg.data.separable = v->as_bool("data.separable");
    if (auto* v = get("data", "subset_seed")) cfg.data.subset_seed = to_seed(*v, "data.subset_seed");

    try {
        if (auto* v = get("stream", "kind")) cfg.stream = streams::parse_stream_kind(v->as_string("stream.kind"));
        if (auto* v = get("network", "norm")) cfg.network.norm = nn::parse_norm(v->as_string("network.norm"));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (auto* v = get("stream", "num_tasks")) cfg.stream_params.num_tasks = to_size(*v, "stream.num_tasks");
    if (auto* v = get("stream", "initial_noise")) cfg.stream_params.initial_noise = v->as_double("stream.initial_noise");
    if (auto* v = get("stream", "classes_per_task"))
        cfg.stream_params.classes_per_task = to_size(*v, "stream.classes_per_task");

    if (auto* v = get("network", "depth")) cfg.network.depth = to_size(*v, "network.depth");
    if (auto* v = get("network", "width")) cfg.network.width = to_size(*v, "network.width");
    if (auto* v = get("network", "activation")) cfg.network.activation = v->as_string("network.activation");
    if (auto* v = get("network", "first_activation"))
        cfg.network.first_activation = v->as_string("network.first_activation");
    if (auto* v = get("network", "alpha")) cfg.network.alpha = v->as_double("network.alpha");

    if (auto* v = get("optimizer", "kind")) {
        const auto& k = v->as_string("optimizer.kind");
        if (k == "adam")
            cfg.optimizer.kind = optim::OptimizerKind::Adam;
        else if (k == "sgd")
            cfg.optimizer.kind = optim::OptimizerKind::SGD;
        else
            throw ConfigError("optimizer.kind: unknown optimizer '" + k + "'");
    }
    if (auto* v = get("optimizer", "step_size")) cfg.optimizer.step_size = v->as_double("optimizer.step_size");
    if (auto* v = get("optimizer", "beta1")) cfg.optimizer.adam_beta1 = v->as_double("optimizer.beta1");
    if (auto* v = get("optimizer", "beta2")) cfg.optimizer.adam_beta2 = v->as_double("optimizer.beta2");
    if (auto* v = get("optimizer", "eps")) cfg.optimizer.adam_eps = v->as_double("optimizer.eps");

    {
        const std::string kind = get("intervention", "kind") ? get("intervention", "kind")->as_string("intervention.kind")
                                                             : std::string("none");
        auto num = [&](const char* key, double def) {
            const auto* v = get("intervention", key);
            return v ? v->as_double(where("intervention", key)) : def;
        };
        auto count = [&](const char* key, int def) {
            const auto* v = get("intervention", key);
            return v ? static_cast<int>(v->as_int(where("intervention", key))) : def;
        };
        if (kind == "none")
            cfg.intervention = optim::NoIntervention{};
        else if (kind == "l2")
            cfg.intervention = optim::L2Zero{num("strength", 0.0)};
        else if (kind == "l2_init")
            cfg.intervention = optim::L2Init{num("strength", 0.0)};
        else if (kind == "spectral")
            cfg.intervention = optim::Spectral{num("strength", 0.0), count("power_iters", 10)};
        else if (kind == "shrink_perturb")
            cfg.intervention = optim::ShrinkPerturb{num("shrink", 0.8), num("noise_std", 0.01), count("every_n_tasks", 1)};
        else if (kind == "redo")
            cfg.intervention = optim::ReDO{num("threshold", 0.03), count("every_n_tasks", 1)};
        else
            throw ConfigError("intervention.kind: unknown intervention '" + kind + "'");
    }

    if (auto* v = get("training", "epochs_per_task")) cfg.training.epochs_per_task = to_size(*v, "training.epochs_per_task");
    if (auto* v = get("training", "batch_size")) cfg.training.batch_size = to_size(*v, "training.batch_size");
    if (auto* v = get("training", "loss")) cfg.training.loss = parse_loss(v->as_string("training.loss"), "training.loss");
    if (auto* v = get("training", "probe_batch")) cfg.training.probe_batch = to_size(*v, "training.probe_batch");

    cfg.validate(false);
    return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
    return experiment_from_document(load_config_file(path), path.parent_path());
}

std::vector<SweepVariant> expand_sweep(const ConfigDocument& doc, const std::filesystem::path& base_dir) {
    struct Axis {
        std::string section, key;
        ConfigValue::List values;
    };
    std::vector<Axis> axes;
    ConfigDocument base;
    for (const auto& sec : doc.sections)
        if (sec.name != "sweep") base.sections.push_back(sec);
    if (const auto* sweep = doc.section("sweep")) {
        for (const auto& [k, v] : sweep->entries) {
            const auto dot = k.find('.');
            if (dot == std::string::npos || dot == 0 || dot + 1 == k.size())
                throw ConfigError("sweep key '" + k + "' must have the form section.key");
            Axis a{k.substr(0, dot), k.substr(dot + 1), v.as_list("sweep." + k)};
            if (a.values.empty()) throw ConfigError("sweep." + k + " has no values");
            axes.push_back(std::move(a));
        }
    }

    std::vector<SweepVariant> out;
    std::vector<std::size_t> odometer(axes.size(), 0);
    for (;;) {
        ConfigDocument variant = base;
        std::string label;
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const auto& value = axes[a].values[odometer[a]];
            variant.section_or_add(axes[a].section).set(axes[a].key, value);
            std::string shown = value.render();
            if (shown.size() >= 2 && shown.front() == '"') shown = shown.substr(1, shown.size() - 2);
            label += (label.empty() ? "" : ",") + axes[a].key + "=" + shown;
        }
        out.push_back({label.empty() ? "base" : label, experiment_from_document(variant, base_dir)});
        std::size_t a = 0;
        while (a < axes.size() && ++odometer[a] == axes[a].values.size()) odometer[a++] = 0;
        if (a == axes.size()) break;
    }
    return out;
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    std::vector<std::uint64_t> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = std::min(text.find(',', pos), text.size());
        const std::string tok = trim(text.substr(pos, comma - pos));
        std::uint64_t v = 0;
        const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size())
            throw ConfigError("invalid seed '" + tok + "' in seed list");
        out.push_back(v);
        pos = comma + 1;
    }
    return out;
}

}  // namespace plastica::runner
