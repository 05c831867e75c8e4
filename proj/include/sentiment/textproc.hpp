#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentiment/corpus.hpp"

namespace sentiment {

/// Frequency-ranked token map. Ids are dense 1..size(); 0 is the pad id
/// and is never assigned to a token. Immutable once built.
class Vocabulary {
public:
    static constexpr int pad_id = 0;

    Vocabulary() = default;

    std::optional<int> id_of(const std::string& token) const {
        auto it = token_to_id_.find(token);
        if (it == token_to_id_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const { return id_to_token_.size(); }

    /// Tokens in id order: tokens()[i] has id i+1.
    const std::vector<std::string>& tokens() const { return id_to_token_; }

    /// Reconstructs a vocabulary from an id-ordered token list (checkpoint load).
    static Vocabulary from_id_order(std::vector<std::string> tokens);

    friend Vocabulary build_vocabulary(const std::vector<CleanedDoc>& train_docs,
                                       std::size_t max_size);

private:
    std::unordered_map<std::string, int> token_to_id_;
    std::vector<std::string> id_to_token_;
};

struct EncodedSeq {
    std::vector<int32_t> ids;  // length exactly T; trailing zeros are padding
    int label = 0;
};

struct Batch {
    std::size_t size = 0;     // B
    std::size_t seq_len = 0;  // T
    std::vector<int32_t> ids;  // B*T, row major
    std::vector<int8_t> labels;
};

struct EmbeddingInit {
    enum class Source { random, pretrained };
    std::vector<float> matrix;  // (vocab+1) x dim, row 0 all zeros
    std::size_t rows = 0;
    std::size_t dim = 0;
    Source source = Source::random;
    double coverage = 0.0;  // fraction of vocabulary found in the file
};

/// Ranks tokens of the training fold by descending frequency, ties broken
/// lexicographically, and keeps the top max_size.
Vocabulary build_vocabulary(const std::vector<CleanedDoc>& train_docs, std::size_t max_size);

/// In-vocabulary tokens map to their ids in order; out-of-vocabulary
/// tokens are dropped.
std::vector<int32_t> encode(const std::vector<std::string>& tokens, const Vocabulary& vocab);

/// Right-zero pads short sequences, keeps the first T ids of long ones.
std::vector<int32_t> pad_truncate(const std::vector<int32_t>& ids, std::size_t max_len);

std::vector<EncodedSeq> encode_corpus(const std::vector<CleanedDoc>& docs, const Vocabulary& vocab,
                                      std::size_t max_len);

/// Chunks sequences into batches of batch_size (last may be short). With
/// shuffle, the order is a seeded deterministic permutation.
std::vector<Batch> make_batches(const std::vector<EncodedSeq>& seqs, std::size_t batch_size,
                                std::uint32_t seed, bool shuffle);

/// Text file with `word v1 ... vd` per line. Vocabulary words found in the
/// file get their vector; missing words get seeded uniform samples in
/// [-0.05, 0.05]. Row 0 stays zero.
EmbeddingInit load_pretrained_embeddings(const std::string& path, const Vocabulary& vocab,
                                         std::size_t dim, std::uint32_t seed);

/// Seeded uniform init in [-0.05, 0.05] with a zero pad row.
EmbeddingInit random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint32_t seed);

}  // namespace sentiment
