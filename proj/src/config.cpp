#include "selqa/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "selqa/error.hpp"

namespace selqa {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
    throw UsageError("config: " + key + "=" + value + " is not " + what);
}

}  // namespace

const std::vector<std::string>& Config::known_keys() {
    static const std::vector<std::string> keys = {
        "seed", "epochs", "batch_size", "learning_rate", "decay", "eps", "negatives_per_positive", "threshold",
        "max_len", "emb_dim", "filter_heights", "filters_per_height", "hidden_dim", "trainable_embeddings",
        "pooling", "hidden", "margin", "l2", "comparator", "metric", "threads", "k", "model", "task"};
    return keys;
}

void Config::merge_stream(std::istream& in, const std::string& origin) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(origin + ":" + std::to_string(line_no) + ": expected key=value");
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void Config::merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    merge_stream(in, path);
}

void Config::set(const std::string& key, std::string value) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw UsageError("config: unknown key " + key);
    values_[key] = std::move(value);
}

std::optional<std::string> Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size()) bad_value(key, *v, "a non-negative integer");
    return out;
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
    return static_cast<std::size_t>(get_u64(key, fallback));
}

double Config::get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "inf") return std::numeric_limits<double>::infinity();
    if (*v == "-inf") return -std::numeric_limits<double>::infinity();
    std::istringstream in(*v);
    double out = 0.0;
    if (!(in >> out) || !in.eof()) bad_value(key, *v, "a number");
    return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    bad_value(key, *v, "a boolean");
}

std::vector<std::size_t> Config::get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::vector<std::size_t> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        std::size_t x = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
        if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
            bad_value(key, *v, "a comma-separated integer list");
        out.push_back(x);
    }
    return out;
}

nlohmann::json Config::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
}

CnnConfig cnn_config(const Config& c) {
    CnnConfig out;
    out.max_len = c.get_size("max_len", out.max_len);
    out.emb_dim = c.get_size("emb_dim", out.emb_dim);
    out.filter_heights = c.get_sizes("filter_heights", out.filter_heights);
    out.filters_per_height = c.get_size("filters_per_height", out.filters_per_height);
    out.hidden_dim = c.get_size("hidden_dim", out.hidden_dim);
    out.trainable_embeddings = c.get_bool("trainable_embeddings", out.trainable_embeddings);
    const auto pooling = c.get_string("pooling", "max");
    if (pooling == "max") out.pooling = Pooling::Max;
    else if (pooling == "avg") out.pooling = Pooling::Avg;
    else throw UsageError("config: pooling must be max or avg");
    out.validate();
    return out;
}

GruConfig gru_config(const Config& c) {
    GruConfig out;
    out.hidden = c.get_size("hidden", out.hidden);
    out.emb_dim = c.get_size("emb_dim", out.emb_dim);
    out.margin = c.get_double("margin", out.margin);
    out.l2 = c.get_double("l2", out.l2);
    out.validate();
    return out;
}

TrainConfig train_config(const Config& c, ModelKind model) {
    TrainConfig out;
    const bool cnn = model == ModelKind::Cnn || model == ModelKind::CnnSubtree;
    out.epochs = c.get_size("epochs", out.epochs);
    out.batch_size = c.get_size("batch_size", out.batch_size);
    out.seed = c.get_u64("seed", out.seed);
    out.learning_rate = c.get_double("learning_rate", out.learning_rate);
    out.decay = c.get_double("decay", out.decay);
    out.eps = c.get_double("eps", out.eps);
    out.negatives_per_positive = c.get_size("negatives_per_positive", cnn ? 0 : 5);
    out.threshold = c.get_double("threshold", out.threshold);
    out.validate();
    return out;
}

SubtreeConfig subtree_config(const Config& c) {
    SubtreeConfig out;
    auto comp = parse_comparator(c.get_string("comparator", std::string(to_string(out.comparator))));
    auto metric = parse_metric(c.get_string("metric", std::string(to_string(out.metric))));
    if (!comp) throw UsageError("config: comparator must be form or embedding");
    if (!metric) throw UsageError("config: metric must be sum, avg or max");
    out.comparator = *comp;
    out.metric = *metric;
    return out;
}

}  // namespace selqa
