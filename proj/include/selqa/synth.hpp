#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

#include "selqa/corpus.hpp"
#include "selqa/models.hpp"
#include "selqa/optim.hpp"
#include "selqa/parse_io.hpp"

namespace selqa {

/// Planted-token corpus: every question carries one rare key token that also
/// appears in exactly one sentence of its section, the answer. Key tokens
/// share a common embedding component; fillers are isotropic noise.
struct SynthOptions {
    std::size_t questions = 50;
    std::size_t sentences_per_section = 5;
    std::size_t fillers = 80;
    std::size_t emb_dim = 16;
    double dev_fraction = 0.2;
    double tst_fraction = 0.2;
    std::uint64_t seed = 7;
};

struct SynthCorpus {
    std::shared_ptr<SectionStore> sections;
    Dataset dataset;  // ASS
    ParseBank parses;
    EmbeddingTable embeddings;
};

SynthCorpus make_synthetic(const SynthOptions& options);

/// Writes sections.jsonl, questions.jsonl, parses.txt and embeddings.txt into `dir`.
void write_synthetic(const SynthCorpus& corpus, const std::string& dir);

/// Random head array of `n` tokens with a single root.
DependencyTree random_tree(std::size_t n, const std::vector<std::string>& forms, std::uint64_t seed);

/// A seeded double-precision loss over small random inputs, for grad_check.
struct LossFixture {
    std::string name;
    ParamSet<double> params;
    LossFn loss;
};

/// Mean cross-entropy of a 3-example CNN batch with trainable embeddings.
LossFixture cnn_loss_fixture(std::uint64_t seed);
/// Mean hinge loss of a 3-pair batch; the margin is widened so every pair is active.
LossFixture attention_loss_fixture(AttentionVariant variant, std::uint64_t seed);

}  // namespace selqa
