#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "selqa/checkpoint.hpp"
#include "selqa/corpus.hpp"
#include "selqa/eval.hpp"
#include "selqa/features.hpp"
#include "selqa/params.hpp"
#include "selqa/parse_io.hpp"
#include "selqa/tensor.hpp"

namespace selqa {

enum class Pooling { Max, Avg };

struct CnnConfig {
    std::size_t max_len = 40;  // rows per side of the 2·max_len image
    std::size_t emb_dim = 300;
    std::vector<std::size_t> filter_heights = {2, 3};
    std::size_t filters_per_height = 100;
    std::size_t hidden_dim = 200;
    bool trainable_embeddings = false;
    Pooling pooling = Pooling::Max;

    void validate() const;
    nlohmann::json to_json() const;
    static CnnConfig from_json(const nlohmann::json& j);
};

struct GruConfig {
    std::size_t hidden = 141;  // per direction
    std::size_t emb_dim = 300;
    double margin = 0.5;
    double l2 = 1e-5;

    std::size_t output_dim() const { return 2 * hidden; }
    void validate() const;
    nlohmann::json to_json() const;
    static GruConfig from_json(const nlohmann::json& j);
};

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 16;
    std::uint64_t seed = 1;
    double learning_rate = 1e-3;
    double decay = 0.9;
    double eps = 1e-8;
    /// 0 means every negative of the question.
    std::size_t negatives_per_positive = 0;
    double threshold = 0.5;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

/// Embedding vocabulary. Lookup tries the exact form, then the lower-cased one.
class Vocabulary {
  public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> words);

    /// -1 for out-of-vocabulary forms.
    long id(std::string_view form) const;
    /// At most `limit` leading tokens.
    std::vector<long> ids(const Tokens& tokens, std::size_t limit = static_cast<std::size_t>(-1)) const;
    const std::vector<std::string>& words() const { return words_; }
    std::size_t size() const { return words_.size(); }

  private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, long> index_;
};

/// Embedding parameter named "emb" built from a table, [V, dim].
ad::Tensor<float> embedding_matrix(const EmbeddingTable& table, std::size_t dim);

// --- CNN ----------------------------------------------------------------------

/// Parameters: emb, conv<h>.w [f, h·dim], conv<h>.b, hidden.w, hidden.b, out.w, out.b.
ParamSet<float> init_cnn(const CnnConfig& config, const EmbeddingTable& table, std::uint64_t seed);

/// Question ids fill rows [0, max_len) and answer ids rows [max_len, 2·max_len)
/// of a zero-padded image; longer sides are cut. Each side is convolved with
/// the shared full-width filters, tanh, pooled, then the two sentence vectors
/// feed a tanh hidden layer and a linear output. Returns the pre-sigmoid logit.
template <typename T>
ad::Var<T> cnn_logit(Binder<T>& b, const CnnConfig& config, std::span<const long> question, std::span<const long> answer);

struct CnnExample {
    std::vector<long> question;
    std::vector<long> answer;
    double label = 0.0;
};

/// Mean binary cross-entropy over the batch.
template <typename T>
ad::Var<T> cnn_batch_loss(Binder<T>& b, const CnnConfig& config, std::span<const CnnExample> batch);

// --- GRU encoder and attention scorers ---------------------------------------

enum class AttentionVariant { OneWay, AttentivePooling };

/// Parameters: emb, {fw,bw}.{Wz,Wr,Wn} [dim,h], {fw,bw}.{Uz,Ur,Un} [h,h],
/// {fw,bw}.{bz,br,bn} [1,h], U [c,c]. All but emb orthogonally initialised.
ParamSet<float> init_attention(const GruConfig& config, const EmbeddingTable& table, std::uint64_t seed);

/// Row i is the forward state at i concatenated with the backward state at i.
template <typename T>
ad::Var<T> encode(Binder<T>& b, const GruConfig& config, std::span<const long> ids);

template <typename T>
struct AttentionNodes {
    ad::Var<T> importance_q;  // [|q|,1] (attentive pooling only)
    ad::Var<T> importance_a;
    ad::Var<T> sigma_q;  // [|q|,1] (attentive pooling only)
    ad::Var<T> sigma_a;
    ad::Var<T> r_q;  // [1,c]
    ad::Var<T> r_a;
    ad::Var<T> score;  // [1,1]
    bool two_way = false;
};

/// H = tanh(Q·U·Aᵀ); row-wise and column-wise max pooling give the question
/// and answer importance vectors, softmax turns them into attention, and the
/// score is the cosine of the attended representations.
template <typename T>
AttentionNodes<T> attentive_pooling(ad::Var<T> q, ad::Var<T> a, ad::Var<T> u);

/// h = tanh(A·U·q_lastᵀ), σ = softmax(h), score = cos(q_last, Aᵀσ).
template <typename T>
AttentionNodes<T> one_way_attention(ad::Var<T> q_last, ad::Var<T> a, ad::Var<T> u);

template <typename T>
ad::Var<T> ap_score(ad::Var<T> q, ad::Var<T> a, ad::Var<T> u) {
    return attentive_pooling(q, a, u).score;
}

template <typename T>
ad::Var<T> oneway_score(ad::Var<T> q_last, ad::Var<T> a, ad::Var<T> u) {
    return one_way_attention(q_last, a, u).score;
}

/// Encodes both sides with the shared encoder and scores them.
template <typename T>
ad::Var<T> attention_score(Binder<T>& b, const GruConfig& config, AttentionVariant variant, ad::Var<T> encoded_q,
                           std::span<const long> answer);

double hinge_loss(double s_pos, double s_neg, double margin);

/// max(0, margin − s_pos + s_neg)
template <typename T>
ad::Var<T> hinge_loss(ad::Var<T> s_pos, ad::Var<T> s_neg, T margin);

struct PairExample {
    std::vector<long> question;
    std::vector<long> positive;
    std::vector<long> negative;
};

/// Mean pairwise hinge loss over the batch.
template <typename T>
ad::Var<T> attention_batch_loss(Binder<T>& b, const GruConfig& config, AttentionVariant variant,
                                std::span<const PairExample> batch);

// --- Logistic regression stage -------------------------------------------------

struct LrModel {
    std::array<double, FeatureVector::kArity> weights{};
    double bias = 0.0;

    double predict(const FeatureVector& x) const;
    nlohmann::json to_json() const;
    static LrModel from_json(const nlohmann::json& j);
};

struct LrOptions {
    std::size_t max_iter = 20000;
    double tol = 1e-10;  // stop once the gradient norm drops below
};

/// Full-batch gradient descent on the mean binary cross-entropy, run on
/// standardised features and folded back into raw-feature weights.
LrModel lr_train(std::span<const FeatureVector> features, std::span<const int> labels, const LrOptions& options = {});

// --- Training --------------------------------------------------------------------

struct TrainLog {
    double initial_loss = 0.0;
    std::vector<double> epoch_loss;
    std::size_t skipped_questions = 0;
};

std::vector<CnnExample> cnn_examples(const Dataset& data, const Vocabulary& vocab, std::size_t max_len);

/// Negatives per positive are sampled from the question's own pool with the
/// given seed. Questions lacking a positive or a negative are skipped.
std::vector<PairExample> pair_examples(const Dataset& data, const Vocabulary& vocab, std::size_t negatives_per_positive,
                                       std::uint64_t seed, std::size_t* skipped = nullptr);

/// Binary cross-entropy with RMSProp. Deterministic for a fixed seed.
void train_cnn(ParamSet<float>& params, const std::vector<CnnExample>& examples, const CnnConfig& config,
               const TrainConfig& train, TrainLog* log = nullptr);

/// Pairwise hinge loss with RMSProp and l2 on every non-embedding parameter.
void train_attention(ParamSet<float>& params, const Dataset& data, const Vocabulary& vocab, AttentionVariant variant,
                     const GruConfig& config, const TrainConfig& train, TrainLog* log = nullptr);

// --- Trained rankers ---------------------------------------------------------------

enum class ModelKind { Cnn, CnnSubtree, OneWay, AttentivePooling };

std::string_view to_string(ModelKind k);
std::optional<ModelKind> parse_model_kind(std::string_view s);

/// A trained model plus everything needed to score new pairs.
class Ranker {
  public:
    ModelKind kind = ModelKind::Cnn;
    CnnConfig cnn;
    GruConfig gru;
    TrainConfig train;
    SubtreeConfig subtree;
    Vocabulary vocab;
    ParamSet<float> params;
    LrModel lr;
    IdfTable idf;
    double threshold = 0.5;
    nlohmann::json run_config;  // effective configuration echoed into outputs

    bool uses_lr() const { return kind == ModelKind::Cnn || kind == ModelKind::CnnSubtree; }

    double cnn_score(const Tokens& question, const Tokens& answer) const;
    FeatureVector features(const Tokens& question, const Tokens& answer, const DependencyTree* question_tree,
                           const DependencyTree* answer_tree) const;

    /// One score per candidate, in candidate order, with gold labels attached.
    std::vector<ScoredCandidate> predict_run(const Dataset& data, const Question& question,
                                             const ParseBank* parses = nullptr) const;

    /// Index of the top candidate when its score exceeds the threshold.
    std::optional<std::size_t> decide(const std::vector<ScoredCandidate>& scored) const;

    Checkpoint to_checkpoint() const;
    static Ranker from_checkpoint(const Checkpoint& ckpt);

    /// Vocabulary rows of the "emb" parameter as a table. Built on first use;
    /// call once before sharing the ranker across threads.
    const EmbeddingTable& embedding_table() const;

  private:
    mutable std::optional<EmbeddingTable> emb_table_;
};

struct TrainSummary {
    TrainLog network;
    double dev_mrr = 0.0;
    bool threshold_tuned = false;
};

/// Trains on the TRN split; DEV, when present, tunes the decision threshold.
Ranker train_ranker(ModelKind kind, const Dataset& data, const EmbeddingTable& table, const ParseBank* parses,
                    const CnnConfig& cnn, const GruConfig& gru, const TrainConfig& train, const SubtreeConfig& subtree,
                    TrainSummary* summary = nullptr);

/// Scores every question of `data` in parallel; output order follows the questions.
Run score_dataset(const Ranker& ranker, const Dataset& data, const ParseBank* parses = nullptr);

}  // namespace selqa
