#pragma once

// Brute-force reference computations shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "selqa/corpus.hpp"
#include "selqa/eval.hpp"
#include "selqa/features.hpp"
#include "selqa/parse_io.hpp"

namespace oracle {

using namespace selqa;

// BM25 straight from the formula, counting terms by scanning the section text.
inline double bm25(const SectionStore& store, const Tokens& query, const std::string& section_id) {
    const double n = static_cast<double>(store.size());
    double total_len = 0.0;
    for (const auto& s : store.sections())
        for (const auto& st : s.sentences) total_len += static_cast<double>(st.tokens.size());
    const double avgdl = total_len / n;

    std::set<std::string> terms;
    for (const auto& t : query) terms.insert(t.lower);

    const Section& sec = store.at(section_id);
    double dl = 0.0;
    for (const auto& st : sec.sentences) dl += static_cast<double>(st.tokens.size());

    double score = 0.0;
    for (const auto& term : terms) {
        double tf = 0.0;
        for (const auto& st : sec.sentences)
            for (const auto& t : st.tokens) tf += t.lower == term ? 1.0 : 0.0;
        if (tf == 0.0) continue;
        double df = 0.0;
        for (const auto& s : store.sections()) {
            bool has = false;
            for (const auto& st : s.sentences)
                for (const auto& t : st.tokens) has = has || t.lower == term;
            df += has ? 1.0 : 0.0;
        }
        const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        score += idf * tf * (1.2 + 1.0) / (tf + 1.2 * (1.0 - 0.75 + 0.75 * dl / avgdl));
    }
    return score;
}

// Every section scored, positives sorted by (score desc, id asc), cut at k.
inline std::vector<std::pair<std::string, double>> top_k(const SectionStore& store, const Tokens& query,
                                                         std::size_t k) {
    std::vector<std::pair<std::string, double>> all;
    for (const auto& s : store.sections()) {
        double v = bm25(store, query, s.section_id);
        if (v > 0.0) all.emplace_back(s.section_id, v);
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

// ------------------------------------------------------------------ subtree

inline double compare(const std::string& x, const std::string& y, Comparator c, const EmbeddingTable* emb) {
    if (c == Comparator::Form) return x == y ? 1.0 : 0.0;
    if (x == "<ROOT>" || y == "<ROOT>") return x == y ? 1.0 : 0.0;
    auto rx = emb->row(x), ry = emb->row(y);
    if (!rx || !ry) return 0.0;
    auto a = emb->vector(*rx), b = emb->vector(*ry);
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += double(a[i]) * b[i];
        na += double(a[i]) * a[i];
        nb += double(b[i]) * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double reduce_values(const std::vector<double>& v, Metric m) {
    if (v.empty()) return 0.0;
    double s = 0.0, mx = v[0];
    for (double x : v) {
        s += x;
        mx = std::max(mx, x);
    }
    if (m == Metric::Sum) return s;
    if (m == Metric::Avg) return s / static_cast<double>(v.size());
    return mx;
}

// Relations recomputed from the raw head array, not the tree accessors.
inline SubtreeScore subtree(const std::vector<int>& hq, const std::vector<std::string>& fq, const std::vector<int>& ha,
                            const std::vector<std::string>& fa, const std::vector<CoWord>& shared, SubtreeConfig cfg,
                            const EmbeddingTable* emb) {
    auto parent_form = [](const std::vector<int>& h, const std::vector<std::string>& f, std::size_t i) {
        return h[i] < 0 ? std::string("<ROOT>") : f[static_cast<std::size_t>(h[i])];
    };
    auto sibs = [](const std::vector<int>& h, std::size_t i) {
        std::vector<std::size_t> out;
        if (h[i] < 0) return out;
        for (std::size_t j = 0; j < h.size(); ++j)
            if (j != i && h[j] == h[i]) out.push_back(j);
        return out;
    };
    auto kids = [](const std::vector<int>& h, std::size_t i) {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < h.size(); ++j)
            if (h[j] == static_cast<int>(i)) out.push_back(j);
        return out;
    };
    SubtreeScore s;
    for (const auto& w : shared) {
        s.s_parent += compare(parent_form(hq, fq, w.q_index), parent_form(ha, fa, w.a_index), cfg.comparator, emb);
        std::vector<double> vs, vc;
        for (auto i : sibs(hq, w.q_index))
            for (auto j : sibs(ha, w.a_index)) vs.push_back(compare(fq[i], fa[j], cfg.comparator, emb));
        for (auto i : kids(hq, w.q_index))
            for (auto j : kids(ha, w.a_index)) vc.push_back(compare(fq[i], fa[j], cfg.comparator, emb));
        s.s_sibling += reduce_values(vs, cfg.metric);
        s.s_child += reduce_values(vc, cfg.metric);
    }
    return s;
}

// ------------------------------------------------------------------ metrics

struct Item {
    double score;
    std::string sid;
    std::size_t idx;
    bool label;
};

// Rank of every candidate by counting how many beat it.
inline std::vector<std::size_t> ranks(const std::vector<Item>& items) {
    std::vector<std::size_t> r(items.size(), 1);
    for (std::size_t i = 0; i < items.size(); ++i)
        for (std::size_t j = 0; j < items.size(); ++j) {
            if (i == j) continue;
            const auto& a = items[j];
            const auto& b = items[i];
            bool before = a.score > b.score || (a.score == b.score && (a.sid < b.sid || (a.sid == b.sid && a.idx < b.idx)));
            r[i] += before ? 1 : 0;
        }
    return r;
}

inline double ap(const std::vector<Item>& items) {
    auto r = ranks(items);
    double total = 0.0;
    int npos = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!items[i].label) continue;
        ++npos;
        int above = 0;
        for (std::size_t j = 0; j < items.size(); ++j)
            if (items[j].label && r[j] <= r[i]) ++above;
        total += static_cast<double>(above) / static_cast<double>(r[i]);
    }
    return total / npos;
}

inline double rr(const std::vector<Item>& items) {
    auto r = ranks(items);
    std::size_t best = items.size() + 1;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].label) best = std::min(best, r[i]);
    return 1.0 / static_cast<double>(best);
}

struct Confusion {
    double p, r, f1, acc;
};

inline Confusion trigger(const std::vector<std::vector<Item>>& run, double threshold) {
    int fired = 0, correct = 0, answerable = 0, top_correct = 0;
    for (const auto& q : run) {
        bool has = std::any_of(q.begin(), q.end(), [](const Item& i) { return i.label; });
        answerable += has;
        if (q.empty()) continue;
        auto r = ranks(q);
        std::size_t top = std::find(r.begin(), r.end(), 1) - r.begin();
        if (has && q[top].label) ++top_correct;
        if (q[top].score > threshold) {
            ++fired;
            correct += q[top].label;
        }
    }
    Confusion c{};
    c.p = fired ? double(correct) / fired : 0.0;
    c.r = answerable ? double(correct) / answerable : 0.0;
    c.f1 = c.p + c.r > 0 ? 2 * c.p * c.r / (c.p + c.r) : 0.0;
    c.acc = answerable ? double(top_correct) / answerable : 0.0;
    return c;
}

inline Run to_run(const std::vector<std::vector<Item>>& items) {
    Run run;
    for (std::size_t q = 0; q < items.size(); ++q) {
        std::vector<ScoredCandidate> c;
        for (const auto& i : items[q]) c.push_back({i.sid, i.idx, i.score, i.label});
        run.push_back(make_ranked("q" + std::to_string(q), c));
    }
    return run;
}

}  // namespace oracle
