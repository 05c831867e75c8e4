#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "sentiment/textproc.hpp"
#include "support/temp_dir.hpp"

using namespace sentiment;
using namespace testsupport;

namespace {

TempDir& tmp() {
    static TempDir dir("textproc");
    return dir;
}

CleanedDoc doc(std::vector<std::string> tokens, int label = 0) { return {std::move(tokens), label}; }

}  // namespace

TEST_CASE("build_vocabulary ranks by frequency then lexicographically") {
    // counts: good=5, bad=3, ok=3 -- tie broken "bad" < "ok"
    std::vector<CleanedDoc> docs{doc({"good", "good", "good", "bad", "ok"}),
                                 doc({"good", "good", "bad", "ok", "ok"}),
                                 doc({"bad"})};
    Vocabulary v = build_vocabulary(docs, 2);
    REQUIRE(v.size() == 2);
    CHECK(v.id_of("good") == 1);
    CHECK(v.id_of("bad") == 2);
    CHECK(!v.id_of("ok").has_value());

    SUBCASE("max_size one keeps only the most frequent token") {
        Vocabulary v1 = build_vocabulary(docs, 1);
        CHECK(v1.size() == 1);
        CHECK(v1.id_of("good") == 1);
    }
    SUBCASE("max_size beyond distinct count keeps everything") {
        Vocabulary vall = build_vocabulary(docs, 100);
        CHECK(vall.size() == 3);
        CHECK(vall.id_of("ok") == 3);
    }
}

TEST_CASE("build_vocabulary edge cases") {
    CHECK_THROWS_AS(build_vocabulary({}, 10), std::runtime_error);
    CHECK_THROWS_AS(build_vocabulary({doc({})}, 10), std::runtime_error);
    CHECK_THROWS_AS(build_vocabulary({doc({"a"})}, 0), std::invalid_argument);
}

TEST_CASE("build_vocabulary is pure") {
    std::mt19937 rng(7);
    std::vector<std::string> pool{"alpha", "beta", "gamma", "delta", "epsilon", "zeta"};
    std::vector<CleanedDoc> docs;
    for (int i = 0; i < 50; ++i) {
        std::vector<std::string> toks;
        for (std::size_t j = 0; j < 1 + rng() % 10; ++j) toks.push_back(pool[rng() % pool.size()]);
        docs.push_back(doc(std::move(toks)));
    }
    Vocabulary a = build_vocabulary(docs, 4);
    Vocabulary b = build_vocabulary(docs, 4);
    CHECK(a.tokens() == b.tokens());
    // ids are dense 1..size in rank order
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.id_of(a.tokens()[i]) == int(i + 1));
}

TEST_CASE("encode drops out-of-vocabulary tokens") {
    Vocabulary v = build_vocabulary({doc({"good", "good", "bad"})}, 10);
    CHECK(encode({"good", "zzzz", "bad"}, v) == std::vector<int32_t>{1, 2});
    CHECK(encode({}, v).empty());
    CHECK(encode({"x", "y"}, v).empty());
}

TEST_CASE("pad_truncate") {
    CHECK(pad_truncate({5, 9}, 4) == std::vector<int32_t>{5, 9, 0, 0});
    CHECK(pad_truncate({1, 2, 3, 4, 5}, 3) == std::vector<int32_t>{1, 2, 3});

    std::vector<int32_t> exact(1000);
    for (std::size_t i = 0; i < exact.size(); ++i) exact[i] = static_cast<int32_t>(i % 7 + 1);
    CHECK(pad_truncate(exact, 1000) == exact);

    CHECK_THROWS_AS(pad_truncate({1}, 0), std::invalid_argument);
}

TEST_CASE("encoded ids stay in range with pad only as a trailing run") {
    std::mt19937 rng(8);
    std::vector<std::string> pool{"one", "two", "three", "four", "five", "oov"};
    std::vector<CleanedDoc> docs;
    for (int i = 0; i < 60; ++i) {
        std::vector<std::string> toks;
        for (std::size_t j = 0; j < rng() % 30; ++j) toks.push_back(pool[rng() % pool.size()]);
        docs.push_back(doc(std::move(toks), int(i % 2)));
    }
    Vocabulary v = build_vocabulary(docs, 5);
    auto seqs = encode_corpus(docs, v, 12);
    for (const auto& s : seqs) {
        REQUIRE(s.ids.size() == 12);
        bool in_pad = false;
        for (int32_t id : s.ids) {
            CHECK(id >= 0);
            CHECK(id <= static_cast<int32_t>(v.size()));
            if (id == 0) in_pad = true;
            if (in_pad) CHECK(id == 0);
        }
    }
}

TEST_CASE("make_batches shapes and partition") {
    std::vector<EncodedSeq> seqs;
    for (int i = 0; i < 10; ++i) seqs.push_back({{int32_t(i + 1), 0, 0}, i % 2});

    SUBCASE("batch sizes 3,3,3,1") {
        auto batches = make_batches(seqs, 3, 1, false);
        REQUIRE(batches.size() == 4);
        CHECK(batches[0].size == 3);
        CHECK(batches[3].size == 1);
    }
    SUBCASE("batch size one yields one batch per sequence") {
        CHECK(make_batches(seqs, 1, 1, false).size() == 10);
    }
    SUBCASE("same seed gives identical order, every sequence exactly once") {
        auto a = make_batches(seqs, 4, 99, true);
        auto b = make_batches(seqs, 4, 99, true);
        REQUIRE(a.size() == b.size());
        std::multiset<int32_t> seen;
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].ids == b[i].ids);
            CHECK(a[i].labels == b[i].labels);
            for (std::size_t r = 0; r < a[i].size; ++r) seen.insert(a[i].ids[r * 3]);
        }
        std::multiset<int32_t> want;
        for (int i = 0; i < 10; ++i) want.insert(i + 1);
        CHECK(seen == want);
    }
    SUBCASE("different seeds usually permute differently") {
        auto a = make_batches(seqs, 10, 1, true);
        auto b = make_batches(seqs, 10, 2, true);
        CHECK(a[0].ids != b[0].ids);
    }
    SUBCASE("empty input rejected") {
        CHECK_THROWS_AS(make_batches({}, 3, 1, false), std::runtime_error);
    }
}

TEST_CASE("random embeddings are seeded with a zero pad row") {
    Vocabulary v = build_vocabulary({doc({"good", "bad", "ugly"})}, 10);
    EmbeddingInit a = random_embeddings(v, 4, 5);
    EmbeddingInit b = random_embeddings(v, 4, 5);
    EmbeddingInit c = random_embeddings(v, 4, 6);
    CHECK(a.matrix == b.matrix);
    CHECK(a.matrix != c.matrix);
    REQUIRE(a.rows == 4);
    for (std::size_t j = 0; j < a.dim; ++j) CHECK(a.matrix[j] == 0.0f);
    for (std::size_t i = a.dim; i < a.matrix.size(); ++i) {
        CHECK(a.matrix[i] >= -0.05f);
        CHECK(a.matrix[i] <= 0.05f);
    }
}

TEST_CASE("load_pretrained_embeddings") {
    Vocabulary v = build_vocabulary({doc({"good", "good", "bad"})}, 10);

    SUBCASE("file vectors land in the right rows") {
        auto path = tmp().path("vectors.txt");
        write_text(path, "good 0.1 0.2\nunrelated 0.9 0.9\n");
        EmbeddingInit init = load_pretrained_embeddings(path, v, 2, 3);
        CHECK(init.matrix[1 * 2 + 0] == doctest::Approx(0.1f));
        CHECK(init.matrix[1 * 2 + 1] == doctest::Approx(0.2f));
        CHECK(init.coverage == doctest::Approx(0.5));
        // pad row zero
        CHECK(init.matrix[0] == 0.0f);
        CHECK(init.matrix[1] == 0.0f);
        // missing word sampled in range, reproducibly
        EmbeddingInit again = load_pretrained_embeddings(path, v, 2, 3);
        CHECK(init.matrix == again.matrix);
        CHECK(init.matrix[2 * 2] >= -0.05f);
        CHECK(init.matrix[2 * 2] <= 0.05f);
    }

    SUBCASE("wrong vector width names the line") {
        auto path = tmp().path("vectors_bad.txt");
        write_text(path, "good 0.1 0.2\nbad 0.1 0.2 0.3\n");
        CHECK_THROWS_WITH_AS(load_pretrained_embeddings(path, v, 2, 3), doctest::Contains("line 2"),
                             std::runtime_error);
    }

    SUBCASE("unreadable file") {
        CHECK_THROWS_AS(load_pretrained_embeddings(tmp().path("nope.txt"), v, 2, 3),
                        std::runtime_error);
    }
}
