#include "sentiment/textproc.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sentiment/rng.hpp"

namespace sentiment {

Vocabulary Vocabulary::from_id_order(std::vector<std::string> tokens) {
    Vocabulary v;
    v.id_to_token_ = std::move(tokens);
    v.token_to_id_.reserve(v.id_to_token_.size());
    for (std::size_t i = 0; i < v.id_to_token_.size(); ++i)
        v.token_to_id_.emplace(v.id_to_token_[i], static_cast<int>(i + 1));
    return v;
}

Vocabulary build_vocabulary(const std::vector<CleanedDoc>& train_docs, std::size_t max_size) {
    if (max_size < 1) throw std::invalid_argument("vocabulary max_size must be >= 1");
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& doc : train_docs)
        for (const auto& tok : doc.tokens) ++counts[tok];
    if (counts.empty()) throw std::runtime_error("cannot build vocabulary: training corpus has no tokens");

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > max_size) ranked.resize(max_size);

    Vocabulary v;
    v.id_to_token_.reserve(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        v.id_to_token_.push_back(ranked[i].first);
        v.token_to_id_.emplace(ranked[i].first, static_cast<int>(i + 1));
    }
    return v;
}

std::vector<int32_t> encode(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
    std::vector<int32_t> ids;
    ids.reserve(tokens.size());
    for (const auto& tok : tokens)
        if (auto id = vocab.id_of(tok)) ids.push_back(*id);
    return ids;
}

std::vector<int32_t> pad_truncate(const std::vector<int32_t>& ids, std::size_t max_len) {
    if (max_len < 1) throw std::invalid_argument("pad_truncate: max_len must be >= 1");
    std::vector<int32_t> out(max_len, Vocabulary::pad_id);
    const std::size_t keep = std::min(ids.size(), max_len);
    std::copy(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(keep), out.begin());
    return out;
}

std::vector<EncodedSeq> encode_corpus(const std::vector<CleanedDoc>& docs, const Vocabulary& vocab,
                                      std::size_t max_len) {
    std::vector<EncodedSeq> seqs;
    seqs.reserve(docs.size());
    for (const auto& doc : docs)
        seqs.push_back({pad_truncate(encode(doc.tokens, vocab), max_len), doc.label});
    return seqs;
}

std::vector<Batch> make_batches(const std::vector<EncodedSeq>& seqs, std::size_t batch_size,
                                std::uint32_t seed, bool shuffle) {
    if (seqs.empty()) throw std::runtime_error("make_batches: no sequences");
    if (batch_size < 1) throw std::invalid_argument("make_batches: batch_size must be >= 1");

    std::vector<std::size_t> order(seqs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (shuffle) {
        std::mt19937 rng(seed);
        fisher_yates(order, rng);
    }

    const std::size_t seq_len = seqs.front().ids.size();
    std::vector<Batch> batches;
    batches.reserve((seqs.size() + batch_size - 1) / batch_size);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t b = std::min(batch_size, order.size() - start);
        Batch batch;
        batch.size = b;
        batch.seq_len = seq_len;
        batch.ids.reserve(b * seq_len);
        batch.labels.reserve(b);
        for (std::size_t i = 0; i < b; ++i) {
            const EncodedSeq& s = seqs[order[start + i]];
            if (s.ids.size() != seq_len)
                throw std::invalid_argument("make_batches: inconsistent sequence lengths");
            batch.ids.insert(batch.ids.end(), s.ids.begin(), s.ids.end());
            batch.labels.push_back(static_cast<int8_t>(s.label));
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

namespace {

EmbeddingInit blank_embeddings(const Vocabulary& vocab, std::size_t dim) {
    EmbeddingInit init;
    init.rows = vocab.size() + 1;
    init.dim = dim;
    init.matrix.assign(init.rows * dim, 0.0f);
    return init;
}

void fill_row_uniform(EmbeddingInit& init, std::size_t row, std::mt19937& rng) {
    for (std::size_t j = 0; j < init.dim; ++j)
        init.matrix[row * init.dim + j] = static_cast<float>(uniform_in(rng, -0.05, 0.05));
}

}  // namespace

EmbeddingInit random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint32_t seed) {
    EmbeddingInit init = blank_embeddings(vocab, dim);
    init.source = EmbeddingInit::Source::random;
    std::mt19937 rng(seed);
    for (std::size_t row = 1; row < init.rows; ++row) fill_row_uniform(init, row, rng);
    return init;
}

EmbeddingInit load_pretrained_embeddings(const std::string& path, const Vocabulary& vocab,
                                         std::size_t dim, std::uint32_t seed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embedding file: " + path);

    std::unordered_map<std::string, std::vector<float>> file_vectors;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        std::vector<float> vec;
        vec.reserve(dim);
        double v;
        while (ls >> v) vec.push_back(static_cast<float>(v));
        if (vec.size() != dim)
            throw std::runtime_error("embedding file line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(dim) + " values, got " + std::to_string(vec.size()));
        file_vectors[word] = std::move(vec);
    }

    EmbeddingInit init = blank_embeddings(vocab, dim);
    init.source = EmbeddingInit::Source::pretrained;
    std::mt19937 rng(seed);
    std::size_t found = 0;
    for (std::size_t row = 1; row < init.rows; ++row) {
        auto it = file_vectors.find(vocab.tokens()[row - 1]);
        if (it != file_vectors.end()) {
            std::copy(it->second.begin(), it->second.end(), init.matrix.begin() + static_cast<std::ptrdiff_t>(row * dim));
            ++found;
        } else {
            fill_row_uniform(init, row, rng);
        }
    }
    init.coverage = vocab.size() == 0 ? 0.0 : static_cast<double>(found) / static_cast<double>(vocab.size());
    return init;
}

}  // namespace sentiment
