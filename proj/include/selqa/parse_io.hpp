#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace selqa {

/// Head array of a dependency parse. heads[i] is the parent of token i, or
/// kRoot. Exactly one root, acyclic.
class DependencyTree {
  public:
    static constexpr int kRoot = -1;

    DependencyTree() = default;
    /// Validates the head array; throws DataError on a malformed tree.
    DependencyTree(std::vector<int> heads, std::vector<std::string> forms);

    std::size_t size() const { return heads_.size(); }
    int head(std::size_t i) const { return heads_.at(i); }
    const std::vector<int>& heads() const { return heads_; }
    /// Lower-cased forms, one per token.
    const std::vector<std::string>& forms() const { return forms_; }

    std::vector<std::size_t> children(std::size_t i) const;
    /// Other dependents of the same head; empty for the root.
    std::vector<std::size_t> siblings(std::size_t i) const;

  private:
    std::vector<int> heads_;
    std::vector<std::string> forms_;
};

/// Trees keyed either by question id or by (section_id, sent_index).
class ParseBank {
  public:
    void add_sentence(const std::string& section_id, std::size_t sent_index, DependencyTree tree);
    void add_question(const std::string& question_id, DependencyTree tree);

    const DependencyTree* sentence(const std::string& section_id, std::size_t sent_index) const;
    const DependencyTree* question(const std::string& question_id) const;

    std::size_t size() const { return trees_.size(); }

  private:
    std::unordered_map<std::string, DependencyTree> trees_;
};

/// Blocks of `# section_id sent_index` (or `# question_id`) followed by
/// `token_index<TAB>form<TAB>head_index` lines; head -1 is the root.
ParseBank parse_parses(std::istream& in);
ParseBank load_parses(const std::string& path);
void write_parse_block(std::ostream& out, const std::string& header, const DependencyTree& tree);

class EmbeddingTable {
  public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

    void add(const std::string& token, std::span<const float> vec);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return words_.size(); }

    /// Row of an exact form, falling back to its lower-cased form.
    std::optional<std::size_t> row(std::string_view form) const;
    std::span<const float> vector(std::size_t row) const;
    const std::vector<std::string>& words() const { return words_; }
    const std::vector<float>& data() const { return data_; }

  private:
    std::size_t dim_ = 0;
    std::vector<std::string> words_;
    std::vector<float> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// First line `V dim`, then `token v1 ... v_dim`.
EmbeddingTable parse_embeddings(std::istream& in);
EmbeddingTable load_embeddings(const std::string& path);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);

}  // namespace selqa
