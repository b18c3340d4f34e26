#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "selqa/corpus.hpp"

namespace selqa {

inline constexpr char kIndexMagic[9] = "SELIDX01";

struct Posting {
    std::uint32_t doc = 0;  // ordinal into the section table
    std::uint32_t tf = 0;
};

/// Term → postings over sections, one section per document. Immutable once
/// built; safe for concurrent queries.
class InvertedIndex {
  public:
    static constexpr double kK1 = 1.2;
    static constexpr double kB = 0.75;

    std::size_t num_docs() const { return ids_.size(); }
    double avgdl() const { return avgdl_; }
    const std::vector<std::string>& section_ids() const { return ids_; }
    std::uint32_t doc_len(std::size_t doc) const { return doc_len_.at(doc); }
    std::uint32_t sentence_count(std::size_t doc) const { return sentences_.at(doc); }
    std::optional<std::size_t> ordinal(std::string_view section_id) const;
    /// nullptr for unindexed terms. Postings are sorted by doc ordinal.
    const std::vector<Posting>* postings(const std::string& term) const;
    std::size_t num_terms() const { return postings_.size(); }

    /// ln((N − df + 0.5)/(df + 0.5) + 1)
    double idf(std::size_t df) const;

    /// BM25 of one section for the distinct lower-cased query terms.
    double score(const Tokens& query, std::string_view section_id) const;

    /// Adds a document; used by build_index and the binary reader.
    void add_document(std::string section_id, std::uint32_t sentences, const std::map<std::string, std::uint32_t>& tf);
    void finalize();

    void write(std::ostream& out, const nlohmann::json& meta) const;
    static InvertedIndex read(std::istream& in, nlohmann::json* meta = nullptr);

  private:
    std::vector<std::string> ids_;
    std::vector<std::uint32_t> doc_len_;
    std::vector<std::uint32_t> sentences_;
    std::unordered_map<std::string, std::size_t> ordinals_;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
    double avgdl_ = 0.0;
};

/// Distinct lower-cased query terms in first-occurrence order.
std::vector<std::string> query_terms(const Tokens& query);

InvertedIndex build_index(const SectionStore& sections);
void save_index(const std::string& path, const InvertedIndex& index, const nlohmann::json& meta);
InvertedIndex load_index(const std::string& path, nlohmann::json* meta = nullptr);

struct Hit {
    std::string section_id;
    double score = 0.0;
};

struct RetrievalResult {
    std::string question_id;
    std::vector<Hit> hits;  // descending score, ties by ascending section_id
};

/// Top-k sections with a positive score.
RetrievalResult search(const InvertedIndex& index, const Tokens& query, std::size_t k);

/// Questions none of whose answer sections appear in the top-k hits.
std::set<std::string> flag_suspicious(const Dataset& ass, const InvertedIndex& index, std::size_t k = 5);

/// Every sentence of the top-k sections becomes a candidate, labelled an
/// answer iff it is an answer sentence of the question in the ASS source.
Dataset generate_triggering(const Dataset& ass, const InvertedIndex& index, std::size_t k = 5);

/// Fraction of questions with at least one answer candidate.
double answerable_fraction(const Dataset& dataset);

}  // namespace selqa
