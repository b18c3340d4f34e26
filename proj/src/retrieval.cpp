#include "selqa/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "selqa/binary_io.hpp"
#include "selqa/error.hpp"
#include "selqa/kernels.hpp"

namespace selqa {

using nlohmann::json;

namespace {

bool hit_before(const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.section_id < b.section_id;
}

}  // namespace

std::vector<std::string> query_terms(const Tokens& query) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& t : query) {
        if (seen.insert(t.lower).second) out.push_back(t.lower);
    }
    return out;
}

std::optional<std::size_t> InvertedIndex::ordinal(std::string_view section_id) const {
    auto it = ordinals_.find(std::string(section_id));
    if (it == ordinals_.end()) return std::nullopt;
    return it->second;
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

double InvertedIndex::idf(std::size_t df) const {
    const double n = static_cast<double>(num_docs());
    const double d = static_cast<double>(df);
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

namespace {

double term_weight(const InvertedIndex& index, std::size_t df, std::uint32_t tf, std::uint32_t len) {
    const double f = tf;
    const double norm = 1.0 - InvertedIndex::kB + InvertedIndex::kB * static_cast<double>(len) / index.avgdl();
    return index.idf(df) * (f * (InvertedIndex::kK1 + 1.0)) / (f + InvertedIndex::kK1 * norm);
}

}  // namespace

double InvertedIndex::score(const Tokens& query, std::string_view section_id) const {
    auto doc = ordinal(section_id);
    if (!doc) throw DataError("score: section \"" + std::string(section_id) + "\" is not indexed");
    double total = 0.0;
    for (const auto& term : query_terms(query)) {
        const auto* list = postings(term);
        if (!list) continue;
        auto it = std::lower_bound(list->begin(), list->end(), *doc,
                                   [](const Posting& p, std::size_t d) { return p.doc < d; });
        if (it == list->end() || it->doc != *doc) continue;
        total += term_weight(*this, list->size(), it->tf, doc_len_[*doc]);
    }
    return total;
}

void InvertedIndex::add_document(std::string section_id, std::uint32_t sentences,
                                 const std::map<std::string, std::uint32_t>& tf) {
    if (ordinals_.count(section_id)) throw DataError("index: duplicate section \"" + section_id + "\"");
    const auto doc = static_cast<std::uint32_t>(ids_.size());
    std::uint32_t len = 0;
    for (const auto& [term, count] : tf) {
        postings_[term].push_back({doc, count});
        len += count;
    }
    ordinals_.emplace(section_id, doc);
    ids_.push_back(std::move(section_id));
    doc_len_.push_back(len);
    sentences_.push_back(sentences);
}

void InvertedIndex::finalize() {
    if (ids_.empty()) throw DataError("index: no sections to index");
    const double total = std::accumulate(doc_len_.begin(), doc_len_.end(), 0.0);
    avgdl_ = total / static_cast<double>(ids_.size());
    if (avgdl_ <= 0.0) avgdl_ = 1.0;
}

InvertedIndex build_index(const SectionStore& sections) {
    if (sections.empty()) throw DataError("build_index: empty section store");
    const auto& list = sections.sections();
    // Term counting is partitioned per section; the merge below runs in section order.
    std::vector<std::map<std::string, std::uint32_t>> counts(list.size());
    kernels::parallel_for(list.size(), [&](std::size_t i) {
        auto& tf = counts[i];
        for (const auto& sent : list[i].sentences)
            for (const auto& tok : sent.tokens) ++tf[tok.lower];
    });
    InvertedIndex index;
    for (std::size_t i = 0; i < list.size(); ++i)
        index.add_document(list[i].section_id, static_cast<std::uint32_t>(list[i].sentences.size()), counts[i]);
    index.finalize();
    return index;
}

void InvertedIndex::write(std::ostream& out, const json& meta) const {
    binio::put_magic(out, kIndexMagic);
    binio::put_string(out, meta.is_null() ? std::string("{}") : meta.dump());
    binio::put_u32(out, static_cast<std::uint32_t>(ids_.size()));
    for (std::size_t d = 0; d < ids_.size(); ++d) {
        binio::put_string(out, ids_[d]);
        binio::put_u32(out, doc_len_[d]);
        binio::put_u32(out, sentences_[d]);
    }
    std::vector<const std::string*> terms;
    terms.reserve(postings_.size());
    for (const auto& [term, _] : postings_) terms.push_back(&term);
    std::sort(terms.begin(), terms.end(), [](const std::string* a, const std::string* b) { return *a < *b; });
    binio::put_u32(out, static_cast<std::uint32_t>(terms.size()));
    for (const auto* term : terms) {
        const auto& list = postings_.at(*term);
        binio::put_string(out, *term);
        binio::put_u32(out, static_cast<std::uint32_t>(list.size()));
        for (const auto& p : list) {
            binio::put_u32(out, p.doc);
            binio::put_u32(out, p.tf);
        }
    }
    if (!out) throw DataError("index: write failed");
}

InvertedIndex InvertedIndex::read(std::istream& in, json* meta) {
    binio::expect_magic(in, kIndexMagic, "index");
    std::string meta_text = binio::get_string(in);
    if (meta) {
        try {
            *meta = json::parse(meta_text);
        } catch (const json::parse_error& e) {
            throw DataError(std::string("index: corrupt metadata: ") + e.what());
        }
    }
    InvertedIndex index;
    const std::uint32_t n = binio::get_u32(in);
    for (std::uint32_t d = 0; d < n; ++d) {
        std::string id = binio::get_string(in);
        if (index.ordinals_.count(id)) throw DataError("index: duplicate section \"" + id + "\"");
        index.ordinals_.emplace(id, d);
        index.ids_.push_back(std::move(id));
        index.doc_len_.push_back(binio::get_u32(in));
        index.sentences_.push_back(binio::get_u32(in));
    }
    const std::uint32_t terms = binio::get_u32(in);
    for (std::uint32_t t = 0; t < terms; ++t) {
        std::string term = binio::get_string(in);
        const std::uint32_t count = binio::get_u32(in);
        std::vector<Posting> list(count);
        for (auto& p : list) {
            p.doc = binio::get_u32(in);
            p.tf = binio::get_u32(in);
            if (p.doc >= n) throw DataError("index: posting refers to unknown document");
        }
        index.postings_.emplace(std::move(term), std::move(list));
    }
    index.finalize();
    return index;
}

void save_index(const std::string& path, const InvertedIndex& index, const json& meta) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write index " + path);
    index.write(out, meta);
}

InvertedIndex load_index(const std::string& path, json* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open index " + path);
    return InvertedIndex::read(in, meta);
}

RetrievalResult search(const InvertedIndex& index, const Tokens& query, std::size_t k) {
    if (k == 0) throw UsageError("search: k must be at least 1");
    RetrievalResult result;
    std::vector<double> acc(index.num_docs(), 0.0);
    std::vector<std::uint32_t> touched;
    for (const auto& term : query_terms(query)) {
        const auto* list = index.postings(term);
        if (!list) continue;
        for (const auto& p : *list) {
            if (acc[p.doc] == 0.0) touched.push_back(p.doc);
            acc[p.doc] += term_weight(index, list->size(), p.tf, index.doc_len(p.doc));
        }
    }
    std::vector<Hit> hits;
    hits.reserve(touched.size());
    for (auto d : touched) {
        if (acc[d] > 0.0) hits.push_back({index.section_ids()[d], acc[d]});
    }
    const std::size_t keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), hit_before);
    hits.resize(keep);
    result.hits = std::move(hits);
    return result;
}

std::set<std::string> flag_suspicious(const Dataset& ass, const InvertedIndex& index, std::size_t k) {
    std::vector<char> flagged(ass.questions.size(), 0);
    kernels::parallel_for(ass.questions.size(), [&](std::size_t i) {
        const auto& q = ass.questions[i];
        std::unordered_set<std::string> answer_sections;
        for (const auto& c : ass.candidates_of(q.id)) {
            if (c.label) answer_sections.insert(c.section_id);
        }
        auto res = search(index, q.tokens, k);
        bool found = std::any_of(res.hits.begin(), res.hits.end(),
                                 [&](const Hit& h) { return answer_sections.count(h.section_id) > 0; });
        flagged[i] = found ? 0 : 1;
    });
    std::set<std::string> out;
    for (std::size_t i = 0; i < flagged.size(); ++i) {
        if (flagged[i]) out.insert(ass.questions[i].id);
    }
    return out;
}

Dataset generate_triggering(const Dataset& ass, const InvertedIndex& index, std::size_t k) {
    std::vector<std::vector<Candidate>> per_question(ass.questions.size());
    kernels::parallel_for(ass.questions.size(), [&](std::size_t i) {
        const auto& q = ass.questions[i];
        std::set<std::pair<std::string, std::size_t>> answers;
        for (const auto& c : ass.candidates_of(q.id)) {
            if (c.label) answers.emplace(c.section_id, c.sent_index);
        }
        auto res = search(index, q.tokens, k);
        auto& out = per_question[i];
        for (const auto& hit : res.hits) {
            const auto doc = *index.ordinal(hit.section_id);
            const std::uint32_t n = index.sentence_count(doc);
            for (std::size_t s = 0; s < n; ++s) {
                Candidate c;
                c.question_id = q.id;
                c.section_id = hit.section_id;
                c.sent_index = s;
                c.label = answers.count({hit.section_id, s}) > 0;
                out.push_back(std::move(c));
            }
        }
    });
    Dataset at;
    at.task = Task::AT;
    at.sections = ass.sections;
    at.questions = ass.questions;
    for (std::size_t i = 0; i < ass.questions.size(); ++i)
        at.candidates.emplace(ass.questions[i].id, std::move(per_question[i]));
    return at;
}

double answerable_fraction(const Dataset& dataset) {
    if (dataset.questions.empty()) return 0.0;
    std::size_t n = 0;
    for (const auto& q : dataset.questions) n += dataset.answerable(q.id) ? 1 : 0;
    return static_cast<double>(n) / static_cast<double>(dataset.questions.size());
}

}  // namespace selqa
