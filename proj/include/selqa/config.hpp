#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "selqa/features.hpp"
#include "selqa/models.hpp"

namespace selqa {

/// Flat key=value settings. File values are applied first and command-line
/// flags override them; the merged map is echoed into every artifact.
class Config {
  public:
    /// `#` starts a comment; blank lines are ignored; unknown keys are a UsageError.
    void merge_stream(std::istream& in, const std::string& origin);
    void merge_file(const std::string& path);
    void set(const std::string& key, std::string value);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::optional<std::string> get(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::size_t> get_sizes(const std::string& key, const std::vector<std::size_t>& fallback) const;

    nlohmann::json to_json() const;

    static const std::vector<std::string>& known_keys();

  private:
    std::map<std::string, std::string> values_;
};

CnnConfig cnn_config(const Config& c);
GruConfig gru_config(const Config& c);
/// `model` picks the negatives_per_positive default: all for CNN models, 5 otherwise.
TrainConfig train_config(const Config& c, ModelKind model);
SubtreeConfig subtree_config(const Config& c);

}  // namespace selqa
