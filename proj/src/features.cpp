#include "selqa/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "selqa/error.hpp"

namespace selqa {

std::vector<CoWord> cooccurring(const Tokens& question, const Tokens& answer) {
    std::unordered_map<std::string, std::size_t> first_in_answer;
    for (const auto& t : answer) {
        if (!is_punctuation(t.form)) first_in_answer.try_emplace(t.lower, t.index);
    }
    std::vector<CoWord> out;
    std::unordered_set<std::string> seen;
    for (const auto& t : question) {
        if (is_punctuation(t.form) || !seen.insert(t.lower).second) continue;
        auto it = first_in_answer.find(t.lower);
        if (it != first_in_answer.end()) out.push_back({t.index, it->second, t.lower});
    }
    return out;
}

std::string_view to_string(Comparator c) { return c == Comparator::Form ? "form" : "embedding"; }

std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::Sum: return "sum";
        case Metric::Avg: return "avg";
        case Metric::Max: return "max";
    }
    return "avg";
}

std::optional<Comparator> parse_comparator(std::string_view s) {
    if (s == "form" || s == "word") return Comparator::Form;
    if (s == "embedding" || s == "emb") return Comparator::Embedding;
    return std::nullopt;
}

std::optional<Metric> parse_metric(std::string_view s) {
    if (s == "sum") return Metric::Sum;
    if (s == "avg") return Metric::Avg;
    if (s == "max") return Metric::Max;
    return std::nullopt;
}

double reduce(const std::vector<double>& values, Metric metric) {
    if (values.empty()) return 0.0;
    switch (metric) {
        case Metric::Sum: {
            double s = 0.0;
            for (double v : values) s += v;
            return s;
        }
        case Metric::Avg: {
            double s = 0.0;
            for (double v : values) s += v;
            return s / static_cast<double>(values.size());
        }
        case Metric::Max: return *std::max_element(values.begin(), values.end());
    }
    return 0.0;
}

double embedding_cosine(const EmbeddingTable& emb, const std::string& x, const std::string& y) {
    auto rx = emb.row(x);
    auto ry = emb.row(y);
    if (!rx || !ry) return 0.0;
    auto u = emb.vector(*rx);
    auto v = emb.vector(*ry);
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += static_cast<double>(u[i]) * v[i];
        nu += static_cast<double>(u[i]) * u[i];
        nv += static_cast<double>(v[i]) * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

namespace {

class NodeComparator {
  public:
    NodeComparator(const DependencyTree& q, const DependencyTree& a, const SubtreeConfig& cfg, const EmbeddingTable* emb)
        : q_(q), a_(a), cfg_(cfg), emb_(emb) {}

    // Either index may be DependencyTree::kRoot (the virtual ROOT node).
    double operator()(int qi, int ai) const {
        if (qi == DependencyTree::kRoot || ai == DependencyTree::kRoot)
            return qi == DependencyTree::kRoot && ai == DependencyTree::kRoot ? 1.0 : 0.0;
        const auto& x = q_.forms()[static_cast<std::size_t>(qi)];
        const auto& y = a_.forms()[static_cast<std::size_t>(ai)];
        if (cfg_.comparator == Comparator::Form) return x == y ? 1.0 : 0.0;
        return embedding_cosine(*emb_, x, y);
    }

  private:
    const DependencyTree& q_;
    const DependencyTree& a_;
    const SubtreeConfig& cfg_;
    const EmbeddingTable* emb_;
};

}  // namespace

SubtreeScore subtree_match(const DependencyTree& question_tree, const DependencyTree& answer_tree,
                           const std::vector<CoWord>& shared, const SubtreeConfig& config, const EmbeddingTable* emb) {
    if (config.comparator == Comparator::Embedding && !emb)
        throw UsageError("subtree_match: the embedding comparator needs an embedding table");
    NodeComparator compare(question_tree, answer_tree, config, emb);
    SubtreeScore score;
    std::vector<double> vals;
    for (const auto& w : shared) {
        if (w.q_index >= question_tree.size() || w.a_index >= answer_tree.size())
            throw DataError("subtree_match: co-occurring word \"" + w.form + "\" lies outside its dependency tree");

        score.s_parent += compare(question_tree.head(w.q_index), answer_tree.head(w.a_index));

        vals.clear();
        const auto sq = question_tree.siblings(w.q_index);
        const auto sa = answer_tree.siblings(w.a_index);
        for (auto j : sq)
            for (auto k : sa) vals.push_back(compare(static_cast<int>(j), static_cast<int>(k)));
        score.s_sibling += reduce(vals, config.metric);

        vals.clear();
        const auto cq = question_tree.children(w.q_index);
        const auto ca = answer_tree.children(w.a_index);
        for (auto j : cq)
            for (auto k : ca) vals.push_back(compare(static_cast<int>(j), static_cast<int>(k)));
        score.s_child += reduce(vals, config.metric);
    }
    return score;
}

double IdfTable::idf(const std::string& lower) const {
    auto it = df_.find(lower);
    const double df = it == df_.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((static_cast<double>(n_) + 1.0) / (df + 1.0)) + 1.0;
}

IdfTable build_idf(const std::vector<const Tokens*>& sentences) {
    if (sentences.empty()) throw DataError("build_idf: empty corpus");
    std::unordered_map<std::string, std::size_t> df;
    for (const auto* s : sentences) {
        std::set<std::string> types;
        for (const auto& t : *s) types.insert(t.lower);
        for (const auto& w : types) ++df[w];
    }
    return IdfTable(sentences.size(), std::move(df));
}

LexicalFeatures lexical_features(const Tokens& question, const Tokens& answer, const IdfTable& idf) {
    std::set<std::string> q_types, a_types;
    for (const auto& t : question) {
        if (!is_punctuation(t.form)) q_types.insert(t.lower);
    }
    for (const auto& t : answer) {
        if (!is_punctuation(t.form)) a_types.insert(t.lower);
    }
    LexicalFeatures f;
    f.q_len = static_cast<double>(question.size());
    double shared_mass = 0.0, q_mass = 0.0;
    for (const auto& w : q_types) {
        const double v = idf.idf(w);
        q_mass += v;
        if (a_types.count(w)) {
            shared_mass += v;
            f.overlap_count += 1.0;
        }
    }
    f.overlap_idf = q_mass > 0.0 ? shared_mass / q_mass : 0.0;
    return f;
}

}  // namespace selqa
