#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "selqa/corpus.hpp"
#include "selqa/parse_io.hpp"

namespace selqa {

/// A word type shared by question and answer, anchored at its first
/// occurrence on each side.
struct CoWord {
    std::size_t q_index = 0;
    std::size_t a_index = 0;
    std::string form;  // lower-cased

    friend bool operator==(const CoWord&, const CoWord&) = default;
};

/// Shared lower-cased non-punctuation types, ordered by question position.
std::vector<CoWord> cooccurring(const Tokens& question, const Tokens& answer);

enum class Comparator { Form, Embedding };
enum class Metric { Sum, Avg, Max };

struct SubtreeConfig {
    Comparator comparator = Comparator::Form;
    Metric metric = Metric::Avg;
};

std::string_view to_string(Comparator c);
std::string_view to_string(Metric m);
std::optional<Comparator> parse_comparator(std::string_view s);
std::optional<Metric> parse_metric(std::string_view s);

/// Parent, sibling and child similarity totals.
struct SubtreeScore {
    double s_parent = 0.0;
    double s_sibling = 0.0;
    double s_child = 0.0;

    friend bool operator==(const SubtreeScore&, const SubtreeScore&) = default;
};

/// Reduces a value list; the empty list reduces to 0.
double reduce(const std::vector<double>& values, Metric metric);

/// Cosine of the embeddings of two forms; 0 when either is out of vocabulary
/// or has zero norm.
double embedding_cosine(const EmbeddingTable& emb, const std::string& x, const std::string& y);

/// For every co-occurring word: the parents are compared and added to
/// s_parent; all sibling cross-pairs are compared and reduced into
/// s_sibling; all child cross-pairs likewise into s_child. A root word's
/// parent is a virtual ROOT that matches only another ROOT.
SubtreeScore subtree_match(const DependencyTree& question_tree, const DependencyTree& answer_tree,
                           const std::vector<CoWord>& shared, const SubtreeConfig& config,
                           const EmbeddingTable* emb = nullptr);

/// Sentence-level IDF, idf(w) = ln((N_s + 1)/(df(w) + 1)) + 1.
class IdfTable {
  public:
    IdfTable() = default;
    IdfTable(std::size_t num_sentences, std::unordered_map<std::string, std::size_t> df)
        : n_(num_sentences), df_(std::move(df)) {}

    double idf(const std::string& lower) const;
    std::size_t num_sentences() const { return n_; }
    const std::unordered_map<std::string, std::size_t>& document_frequency() const { return df_; }

  private:
    std::size_t n_ = 0;
    std::unordered_map<std::string, std::size_t> df_;
};

IdfTable build_idf(const std::vector<const Tokens*>& sentences);

struct LexicalFeatures {
    double overlap_count = 0.0;
    double overlap_idf = 0.0;
    double q_len = 0.0;
};

/// overlap_idf is the IDF mass of the shared types over the IDF mass of the
/// question's types.
LexicalFeatures lexical_features(const Tokens& question, const Tokens& answer, const IdfTable& idf);

/// Input row of the logistic-regression stage; order is fixed.
struct FeatureVector {
    static constexpr std::size_t kArity = 7;

    double cnn_score = 0.0;
    double overlap_count = 0.0;
    double overlap_idf = 0.0;
    double q_len = 0.0;
    double s_parent = 0.0;
    double s_sibling = 0.0;
    double s_child = 0.0;

    std::array<double, kArity> values() const {
        return {cnn_score, overlap_count, overlap_idf, q_len, s_parent, s_sibling, s_child};
    }
};

}  // namespace selqa
