#include "selqa/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "selqa/error.hpp"
#include "selqa/optim.hpp"

namespace selqa {

using nlohmann::json;
namespace ad = selqa::ad;

// --- configs -------------------------------------------------------------------

namespace {

template <typename V>
void read_opt(const json& j, const char* key, V& out) {
    if (j.contains(key)) out = j.at(key).get<V>();
}

std::string_view pooling_name(Pooling p) { return p == Pooling::Max ? "max" : "avg"; }

}  // namespace

void CnnConfig::validate() const {
    if (max_len == 0) throw UsageError("cnn: max_len must be positive");
    if (emb_dim == 0) throw UsageError("cnn: emb_dim must be positive");
    if (filter_heights.empty()) throw UsageError("cnn: at least one filter height is required");
    for (auto h : filter_heights) {
        if (h == 0 || h > max_len) throw UsageError("cnn: filter height " + std::to_string(h) + " outside [1, max_len]");
    }
    if (filters_per_height == 0) throw UsageError("cnn: filters_per_height must be positive");
    if (hidden_dim == 0) throw UsageError("cnn: hidden_dim must be positive");
}

json CnnConfig::to_json() const {
    return json{{"max_len", max_len},
                {"emb_dim", emb_dim},
                {"filter_heights", filter_heights},
                {"filters_per_height", filters_per_height},
                {"hidden_dim", hidden_dim},
                {"trainable_embeddings", trainable_embeddings},
                {"pooling", pooling_name(pooling)}};
}

CnnConfig CnnConfig::from_json(const json& j) {
    CnnConfig c;
    read_opt(j, "max_len", c.max_len);
    read_opt(j, "emb_dim", c.emb_dim);
    read_opt(j, "filter_heights", c.filter_heights);
    read_opt(j, "filters_per_height", c.filters_per_height);
    read_opt(j, "hidden_dim", c.hidden_dim);
    read_opt(j, "trainable_embeddings", c.trainable_embeddings);
    if (j.contains("pooling")) {
        auto p = j.at("pooling").get<std::string>();
        if (p == "max") c.pooling = Pooling::Max;
        else if (p == "avg") c.pooling = Pooling::Avg;
        else throw UsageError("cnn: unknown pooling " + p);
    }
    return c;
}

void GruConfig::validate() const {
    if (hidden == 0) throw UsageError("gru: hidden must be positive");
    if (emb_dim == 0) throw UsageError("gru: emb_dim must be positive");
    if (!(margin > 0.0)) throw UsageError("gru: margin must be positive");
    if (!(l2 >= 0.0)) throw UsageError("gru: l2 must be non-negative");
}

json GruConfig::to_json() const {
    return json{{"hidden", hidden}, {"emb_dim", emb_dim}, {"margin", margin}, {"l2", l2}};
}

GruConfig GruConfig::from_json(const json& j) {
    GruConfig c;
    read_opt(j, "hidden", c.hidden);
    read_opt(j, "emb_dim", c.emb_dim);
    read_opt(j, "margin", c.margin);
    read_opt(j, "l2", c.l2);
    return c;
}

void TrainConfig::validate() const {
    if (epochs == 0) throw UsageError("train: epochs must be positive");
    if (batch_size == 0) throw UsageError("train: batch_size must be positive");
    if (!(learning_rate > 0.0)) throw UsageError("train: learning_rate must be positive");
    if (!(decay > 0.0 && decay < 1.0)) throw UsageError("train: decay must lie in (0, 1)");
    if (!(eps > 0.0)) throw UsageError("train: eps must be positive");
}

json TrainConfig::to_json() const {
    return json{{"epochs", epochs},
                {"batch_size", batch_size},
                {"seed", seed},
                {"learning_rate", learning_rate},
                {"decay", decay},
                {"eps", eps},
                {"negatives_per_positive", negatives_per_positive},
                {"threshold", threshold_to_json(threshold)}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    read_opt(j, "epochs", c.epochs);
    read_opt(j, "batch_size", c.batch_size);
    read_opt(j, "seed", c.seed);
    read_opt(j, "learning_rate", c.learning_rate);
    read_opt(j, "decay", c.decay);
    read_opt(j, "eps", c.eps);
    read_opt(j, "negatives_per_positive", c.negatives_per_positive);
    if (j.contains("threshold")) c.threshold = threshold_from_json(j.at("threshold"));
    return c;
}

// --- vocabulary ------------------------------------------------------------------

Vocabulary::Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
    for (std::size_t i = 0; i < words_.size(); ++i) {
        if (!index_.emplace(words_[i], static_cast<long>(i)).second)
            throw DataError("vocabulary: duplicate word " + words_[i]);
    }
}

long Vocabulary::id(std::string_view form) const {
    if (auto it = index_.find(std::string(form)); it != index_.end()) return it->second;
    if (auto it = index_.find(to_lower(form)); it != index_.end()) return it->second;
    return -1;
}

std::vector<long> Vocabulary::ids(const Tokens& tokens, std::size_t limit) const {
    std::vector<long> out;
    const std::size_t n = std::min(limit, tokens.size());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(id(tokens[i].form));
    return out;
}

ad::Tensor<float> embedding_matrix(const EmbeddingTable& table, std::size_t dim) {
    if (table.dim() != dim)
        throw UsageError("embedding dimension " + std::to_string(table.dim()) + " does not match configured " +
                         std::to_string(dim));
    return ad::Tensor<float>(table.size(), dim, table.data());
}

// --- CNN ---------------------------------------------------------------------------

namespace {

ad::Tensor<float> glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-limit, limit);
    ad::Tensor<float> t(rows, cols);
    for (auto& v : t.storage()) v = static_cast<float>(dist(rng));
    return t;
}

std::vector<long> padded(std::span<const long> ids, std::size_t len) {
    std::vector<long> out(len, -1);
    std::copy_n(ids.begin(), std::min(len, ids.size()), out.begin());
    return out;
}

template <typename T>
ad::Var<T> cnn_side(Binder<T>& b, const CnnConfig& config, std::span<const long> ids) {
    auto rows = padded(ids, config.max_len);
    auto image = b.lookup("emb", rows);
    std::vector<ad::Var<T>> pooled;
    for (auto h : config.filter_heights) {
        const auto key = "conv" + std::to_string(h);
        auto fmap = ad::tanh(ad::conv2d_valid(image, b(key + ".w"), b(key + ".b"), h));
        pooled.push_back(config.pooling == Pooling::Max ? ad::max(fmap, 0) : ad::mean(fmap, 0));
    }
    return pooled.size() == 1 ? pooled.front() : ad::concat(pooled, 1);
}

}  // namespace

ParamSet<float> init_cnn(const CnnConfig& config, const EmbeddingTable& table, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    ParamSet<float> p;
    p.add("emb", embedding_matrix(table, config.emb_dim), true, config.trainable_embeddings);
    const std::size_t f = config.filters_per_height;
    for (auto h : config.filter_heights) {
        const auto key = "conv" + std::to_string(h);
        p.add(key + ".w", glorot(f, h * config.emb_dim, rng));
        p.add(key + ".b", ad::Tensor<float>(1, f));
    }
    const std::size_t side = f * config.filter_heights.size();
    p.add("hidden.w", glorot(2 * side, config.hidden_dim, rng));
    p.add("hidden.b", ad::Tensor<float>(1, config.hidden_dim));
    p.add("out.w", glorot(config.hidden_dim, 1, rng));
    p.add("out.b", ad::Tensor<float>(1, 1));
    return p;
}

template <typename T>
ad::Var<T> cnn_logit(Binder<T>& b, const CnnConfig& config, std::span<const long> question,
                     std::span<const long> answer) {
    if (question.empty() || answer.empty()) throw DataError("cnn: empty question or answer");
    auto vq = cnn_side(b, config, question);
    auto va = cnn_side(b, config, answer);
    auto joint = ad::concat<T>({vq, va}, 1);
    auto hidden = ad::tanh(ad::add_row(ad::matmul(joint, b("hidden.w")), b("hidden.b")));
    return ad::add(ad::matmul(hidden, b("out.w")), b("out.b"));
}

template <typename T>
ad::Var<T> cnn_batch_loss(Binder<T>& b, const CnnConfig& config, std::span<const CnnExample> batch) {
    if (batch.empty()) throw UsageError("cnn: empty batch");
    std::optional<ad::Var<T>> total;
    for (const auto& ex : batch) {
        auto l = ad::bce_with_logits(cnn_logit(b, config, ex.question, ex.answer), static_cast<T>(ex.label));
        total = total ? ad::add(*total, l) : l;
    }
    return ad::scale(*total, T(1) / static_cast<T>(batch.size()));
}

// --- GRU and attention ---------------------------------------------------------------

namespace {

constexpr const char* kDirections[] = {"fw", "bw"};
constexpr const char* kGates[] = {"z", "r", "n"};

}  // namespace

ParamSet<float> init_attention(const GruConfig& config, const EmbeddingTable& table, std::uint64_t seed) {
    config.validate();
    ParamSet<float> p;
    p.add("emb", embedding_matrix(table, config.emb_dim), true, false);
    std::uint64_t s = seed;
    for (const char* dir : kDirections) {
        for (const char* g : kGates) p.add(std::string(dir) + ".W" + g, orthogonal_init(config.emb_dim, config.hidden, s++));
        for (const char* g : kGates) p.add(std::string(dir) + ".U" + g, orthogonal_init(config.hidden, config.hidden, s++));
        for (const char* g : kGates) p.add(std::string(dir) + ".b" + g, ad::Tensor<float>(1, config.hidden));
    }
    p.add("U", orthogonal_init(config.output_dim(), config.output_dim(), s++));
    return p;
}

namespace {

// States of one GRU direction, one [1,h] row per time step in processing order.
template <typename T>
std::vector<ad::Var<T>> gru_run(Binder<T>& b, const std::string& dir, ad::Var<T> x, std::size_t hidden, bool reverse) {
    auto& g = b.graph();
    auto xz = ad::add_row(ad::matmul(x, b(dir + ".Wz")), b(dir + ".bz"));
    auto xr = ad::add_row(ad::matmul(x, b(dir + ".Wr")), b(dir + ".br"));
    auto xn = ad::add_row(ad::matmul(x, b(dir + ".Wn")), b(dir + ".bn"));
    auto uz = b(dir + ".Uz");
    auto ur = b(dir + ".Ur");
    auto un = b(dir + ".Un");

    const std::size_t n = x.rows();
    std::vector<ad::Var<T>> states(n);
    ad::Var<T> h = g.constant(ad::Tensor<T>(1, hidden));
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t t = reverse ? n - 1 - step : step;
        auto z = ad::sigmoid(ad::add(ad::slice_rows(xz, t, t + 1), ad::matmul(h, uz)));
        auto r = ad::sigmoid(ad::add(ad::slice_rows(xr, t, t + 1), ad::matmul(h, ur)));
        auto cand = ad::tanh(ad::add(ad::slice_rows(xn, t, t + 1), ad::matmul(ad::mul(r, h), un)));
        h = ad::add(ad::mul(ad::one_minus(z), cand), ad::mul(z, h));
        states[t] = h;
    }
    return states;
}

}  // namespace

template <typename T>
ad::Var<T> encode(Binder<T>& b, const GruConfig& config, std::span<const long> ids) {
    if (ids.empty()) throw DataError("encode: empty token list");
    auto x = b.lookup("emb", ids);
    auto fw = gru_run(b, "fw", x, config.hidden, false);
    auto bw = gru_run(b, "bw", x, config.hidden, true);
    auto fw_m = fw.size() == 1 ? fw.front() : ad::concat(fw, 0);
    auto bw_m = bw.size() == 1 ? bw.front() : ad::concat(bw, 0);
    return ad::concat<T>({fw_m, bw_m}, 1);
}

template <typename T>
AttentionNodes<T> attentive_pooling(ad::Var<T> q, ad::Var<T> a, ad::Var<T> u) {
    AttentionNodes<T> n;
    n.two_way = true;
    auto h = ad::tanh(ad::matmul_nt(ad::matmul(q, u), a));  // [|q|, |a|]
    n.importance_q = ad::max(h, 1);                          // [|q|, 1]
    n.importance_a = ad::transpose(ad::max(h, 0));           // [|a|, 1]
    n.sigma_q = ad::softmax(n.importance_q, 0);
    n.sigma_a = ad::softmax(n.importance_a, 0);
    n.r_q = ad::matmul(ad::transpose(n.sigma_q), q);
    n.r_a = ad::matmul(ad::transpose(n.sigma_a), a);
    n.score = ad::cosine(n.r_q, n.r_a);
    return n;
}

template <typename T>
AttentionNodes<T> one_way_attention(ad::Var<T> q_last, ad::Var<T> a, ad::Var<T> u) {
    AttentionNodes<T> n;
    n.importance_a = ad::tanh(ad::matmul_nt(ad::matmul(a, u), q_last));  // [|a|, 1]
    n.sigma_a = ad::softmax(n.importance_a, 0);
    n.r_q = q_last;
    n.r_a = ad::matmul(ad::transpose(n.sigma_a), a);
    n.score = ad::cosine(n.r_q, n.r_a);
    return n;
}

template <typename T>
ad::Var<T> attention_score(Binder<T>& b, const GruConfig& config, AttentionVariant variant, ad::Var<T> encoded_q,
                           std::span<const long> answer) {
    auto a = encode(b, config, answer);
    if (variant == AttentionVariant::AttentivePooling) return ap_score(encoded_q, a, b("U"));
    const std::size_t m = encoded_q.rows();
    return oneway_score(ad::slice_rows(encoded_q, m - 1, m), a, b("U"));
}

double hinge_loss(double s_pos, double s_neg, double margin) { return std::max(0.0, margin - s_pos + s_neg); }

template <typename T>
ad::Var<T> hinge_loss(ad::Var<T> s_pos, ad::Var<T> s_neg, T margin) {
    auto m = s_pos.graph->constant(ad::Tensor<T>(1, 1, margin));
    return ad::relu(ad::add(ad::sub(s_neg, s_pos), m));
}

template <typename T>
ad::Var<T> attention_batch_loss(Binder<T>& b, const GruConfig& config, AttentionVariant variant,
                                std::span<const PairExample> batch) {
    if (batch.empty()) throw UsageError("attention: empty batch");
    std::map<std::vector<long>, ad::Var<T>> encoded;
    auto encode_q = [&](const std::vector<long>& ids) {
        auto it = encoded.find(ids);
        if (it == encoded.end()) it = encoded.emplace(ids, encode(b, config, ids)).first;
        return it->second;
    };
    std::optional<ad::Var<T>> total;
    for (const auto& ex : batch) {
        auto q = encode_q(ex.question);
        auto pos = attention_score(b, config, variant, q, ex.positive);
        auto neg = attention_score(b, config, variant, q, ex.negative);
        auto l = hinge_loss(pos, neg, static_cast<T>(config.margin));
        total = total ? ad::add(*total, l) : l;
    }
    return ad::scale(*total, T(1) / static_cast<T>(batch.size()));
}

#define SELQA_MODEL_INSTANTIATE(T)                                                                              \
    template ad::Var<T> cnn_logit<T>(Binder<T>&, const CnnConfig&, std::span<const long>, std::span<const long>); \
    template ad::Var<T> cnn_batch_loss<T>(Binder<T>&, const CnnConfig&, std::span<const CnnExample>);           \
    template ad::Var<T> encode<T>(Binder<T>&, const GruConfig&, std::span<const long>);                         \
    template AttentionNodes<T> attentive_pooling<T>(ad::Var<T>, ad::Var<T>, ad::Var<T>);                        \
    template AttentionNodes<T> one_way_attention<T>(ad::Var<T>, ad::Var<T>, ad::Var<T>);                        \
    template ad::Var<T> attention_score<T>(Binder<T>&, const GruConfig&, AttentionVariant, ad::Var<T>,          \
                                           std::span<const long>);                                              \
    template ad::Var<T> hinge_loss<T>(ad::Var<T>, ad::Var<T>, T);                                               \
    template ad::Var<T> attention_batch_loss<T>(Binder<T>&, const GruConfig&, AttentionVariant,                 \
                                                std::span<const PairExample>);

SELQA_MODEL_INSTANTIATE(float)
SELQA_MODEL_INSTANTIATE(double)

// --- logistic regression ---------------------------------------------------------------

namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

double LrModel::predict(const FeatureVector& x) const {
    const auto v = x.values();
    double z = bias;
    for (std::size_t i = 0; i < v.size(); ++i) z += weights[i] * v[i];
    return sigmoid(z);
}

json LrModel::to_json() const { return json{{"weights", weights}, {"bias", bias}}; }

LrModel LrModel::from_json(const json& j) {
    LrModel m;
    auto w = j.at("weights").get<std::vector<double>>();
    if (w.size() != m.weights.size()) throw DataError("lr: expected " + std::to_string(m.weights.size()) + " weights");
    std::copy(w.begin(), w.end(), m.weights.begin());
    m.bias = j.at("bias").get<double>();
    return m;
}

LrModel lr_train(std::span<const FeatureVector> features, std::span<const int> labels, const LrOptions& options) {
    constexpr std::size_t d = FeatureVector::kArity;
    if (features.size() != labels.size()) throw UsageError("lr: feature and label counts differ");
    if (features.empty()) throw DataError("lr: no training rows");
    const auto positives = std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; });
    if (positives == 0 || static_cast<std::size_t>(positives) == labels.size())
        throw DataError("lr: training labels contain a single class");

    const std::size_t n = features.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    std::array<double, d> mu{}, sd{};
    std::vector<std::array<double, d>> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = features[i].values();
        for (std::size_t k = 0; k < d; ++k) mu[k] += z[i][k] * inv_n;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) sd[k] += (z[i][k] - mu[k]) * (z[i][k] - mu[k]) * inv_n;
    for (auto& s : sd) s = s > 1e-24 ? std::sqrt(s) : 1.0;
    for (auto& row : z)
        for (std::size_t k = 0; k < d; ++k) row[k] = (row[k] - mu[k]) / sd[k];

    // Step 1/L with L bounding the curvature of the mean cross-entropy.
    const double step = 4.0 / static_cast<double>(d + 1);
    std::array<double, d> w{};
    double b = 0.0;
    for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
        std::array<double, d> gw{};
        double gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = b;
            for (std::size_t k = 0; k < d; ++k) s += w[k] * z[i][k];
            const double r = sigmoid(s) - (labels[i] != 0 ? 1.0 : 0.0);
            gb += r * inv_n;
            for (std::size_t k = 0; k < d; ++k) gw[k] += r * z[i][k] * inv_n;
        }
        double norm = gb * gb;
        for (auto g : gw) norm += g * g;
        if (std::sqrt(norm) < options.tol) break;
        b -= step * gb;
        for (std::size_t k = 0; k < d; ++k) w[k] -= step * gw[k];
    }

    LrModel m;
    m.bias = b;
    for (std::size_t k = 0; k < d; ++k) {
        m.weights[k] = w[k] / sd[k];
        m.bias -= w[k] * mu[k] / sd[k];
    }
    for (auto v : m.weights)
        if (!std::isfinite(v)) throw NumericError("lr: non-finite weight");
    if (!std::isfinite(m.bias)) throw NumericError("lr: non-finite bias");
    return m;
}

// --- ranker ------------------------------------------------------------------------------

std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Cnn: return "cnn";
        case ModelKind::CnnSubtree: return "cnn-subtree";
        case ModelKind::OneWay: return "oneway";
        case ModelKind::AttentivePooling: return "ap";
    }
    return "cnn";
}

std::optional<ModelKind> parse_model_kind(std::string_view s) {
    for (auto k : {ModelKind::Cnn, ModelKind::CnnSubtree, ModelKind::OneWay, ModelKind::AttentivePooling}) {
        if (s == to_string(k)) return k;
    }
    return std::nullopt;
}

double Ranker::cnn_score(const Tokens& question, const Tokens& answer) const {
    ad::Graph<float> g;
    Binder<float> b(g, params, true);
    auto q = vocab.ids(question, cnn.max_len);
    auto a = vocab.ids(answer, cnn.max_len);
    return static_cast<double>(ad::sigmoid(cnn_logit<float>(b, cnn, q, a)).scalar());
}

FeatureVector Ranker::features(const Tokens& question, const Tokens& answer, const DependencyTree* question_tree,
                               const DependencyTree* answer_tree) const {
    FeatureVector f;
    f.cnn_score = cnn_score(question, answer);
    auto lex = lexical_features(question, answer, idf);
    f.overlap_count = lex.overlap_count;
    f.overlap_idf = lex.overlap_idf;
    f.q_len = lex.q_len;
    if (kind == ModelKind::CnnSubtree) {
        if (!question_tree || !answer_tree) throw DataError("cnn-subtree: missing dependency parse");
        const EmbeddingTable* emb = subtree.comparator == Comparator::Embedding ? &embedding_table() : nullptr;
        auto s = subtree_match(*question_tree, *answer_tree, cooccurring(question, answer), subtree, emb);
        f.s_parent = s.s_parent;
        f.s_sibling = s.s_sibling;
        f.s_child = s.s_child;
    }
    return f;
}

std::vector<ScoredCandidate> Ranker::predict_run(const Dataset& data, const Question& question,
                                                 const ParseBank* parses) const {
    const auto& cands = data.candidates_of(question.id);
    std::vector<ScoredCandidate> out;
    out.reserve(cands.size());
    if (cands.empty()) return out;

    if (uses_lr()) {
        const DependencyTree* qtree = nullptr;
        if (kind == ModelKind::CnnSubtree) {
            if (!parses) throw DataError("cnn-subtree: dependency parses are required");
            qtree = parses->question(question.id);
            if (!qtree) throw DataError("cnn-subtree: no parse for question " + question.id);
        }
        for (const auto& c : cands) {
            const auto& s = data.sentence_of(c);
            const DependencyTree* atree = nullptr;
            if (qtree) {
                atree = parses->sentence(c.section_id, c.sent_index);
                if (!atree)
                    throw DataError("cnn-subtree: no parse for " + c.section_id + " " + std::to_string(c.sent_index));
            }
            out.push_back({c.section_id, c.sent_index, lr.predict(features(question.tokens, s.tokens, qtree, atree)),
                           c.label});
        }
        return out;
    }

    const auto variant = kind == ModelKind::OneWay ? AttentionVariant::OneWay : AttentionVariant::AttentivePooling;
    ad::Graph<float> g;
    Binder<float> b(g, params, true);
    auto qids = vocab.ids(question.tokens);
    auto q = encode<float>(b, gru, qids);
    for (const auto& c : cands) {
        auto aids = vocab.ids(data.sentence_of(c).tokens);
        double score = attention_score<float>(b, gru, variant, q, aids).scalar();
        out.push_back({c.section_id, c.sent_index, score, c.label});
    }
    return out;
}

std::optional<std::size_t> Ranker::decide(const std::vector<ScoredCandidate>& scored) const {
    if (scored.empty()) return std::nullopt;
    std::vector<std::size_t> order(scored.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto best = *std::min_element(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const auto& a = scored[x];
        const auto& b = scored[y];
        if (a.score != b.score) return a.score > b.score;
        if (a.section_id != b.section_id) return a.section_id < b.section_id;
        return a.sent_index < b.sent_index;
    });
    if (scored[best].score > threshold) return best;
    return std::nullopt;
}

const EmbeddingTable& Ranker::embedding_table() const {
    if (!emb_table_) {
        const auto& emb = params.at("emb").value;
        EmbeddingTable t(emb.cols());
        for (std::size_t i = 0; i < vocab.size(); ++i) t.add(vocab.words()[i], emb.row(i));
        emb_table_ = std::move(t);
    }
    return *emb_table_;
}

Checkpoint Ranker::to_checkpoint() const {
    json idf_json{{"num_sentences", idf.num_sentences()}};
    // Sorted for a byte-stable container.
    std::map<std::string, std::size_t> df(idf.document_frequency().begin(), idf.document_frequency().end());
    idf_json["df"] = df;
    json meta{{"kind", to_string(kind)},
              {"cnn", cnn.to_json()},
              {"gru", gru.to_json()},
              {"train", train.to_json()},
              {"subtree", {{"comparator", to_string(subtree.comparator)}, {"metric", to_string(subtree.metric)}}},
              {"vocabulary", vocab.words()},
              {"lr", lr.to_json()},
              {"idf", idf_json},
              {"threshold", threshold_to_json(threshold)},
              {"config", run_config}};
    return Checkpoint{std::move(meta), params};
}

Ranker Ranker::from_checkpoint(const Checkpoint& ckpt) {
    const auto& m = ckpt.meta;
    try {
        Ranker r;
        auto kind = parse_model_kind(m.at("kind").get<std::string>());
        if (!kind) throw DataError("checkpoint: unknown model kind");
        r.kind = *kind;
        r.cnn = CnnConfig::from_json(m.at("cnn"));
        r.gru = GruConfig::from_json(m.at("gru"));
        r.train = TrainConfig::from_json(m.at("train"));
        auto comp = parse_comparator(m.at("subtree").at("comparator").get<std::string>());
        auto metric = parse_metric(m.at("subtree").at("metric").get<std::string>());
        if (!comp || !metric) throw DataError("checkpoint: bad subtree configuration");
        r.subtree = {*comp, *metric};
        r.vocab = Vocabulary(m.at("vocabulary").get<std::vector<std::string>>());
        r.lr = LrModel::from_json(m.at("lr"));
        auto df = m.at("idf").at("df").get<std::map<std::string, std::size_t>>();
        r.idf = IdfTable(m.at("idf").at("num_sentences").get<std::size_t>(),
                         std::unordered_map<std::string, std::size_t>(df.begin(), df.end()));
        r.threshold = threshold_from_json(m.at("threshold"));
        if (m.contains("config")) r.run_config = m.at("config");
        r.params = ckpt.params;
        const auto* emb = r.params.find("emb");
        if (!emb || emb->value.rows() != r.vocab.size())
            throw DataError("checkpoint: embedding matrix does not match the vocabulary");
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint: malformed metadata: ") + e.what());
    }
}

}  // namespace selqa
