#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include "sentiment/checkpoint.hpp"
#include "sentiment/config_io.hpp"
#include "sentiment/trainer.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

using namespace sentiment;
using namespace testsupport;

namespace {

TempDir& tmp() {
    static TempDir dir("trainer");
    return dir;
}

TrainConfig toy_config(ModelKind kind) {
    TrainConfig cfg;
    cfg.model = kind;
    cfg.learning_rate = 0.01;
    cfg.batch_size = 8;
    cfg.epochs = 3;
    cfg.seed = 11;
    cfg.max_len = 16;
    cfg.vocab_size = 300;
    cfg.embedding_dim = 12;
    cfg.lstm_hidden = 16;
    cfg.fc_width = 12;
    cfg.dropout = 0.0;
    cfg.conv_filters = {8, 8, 8};
    cfg.kernel_width = 3;
    cfg.pool_window = 2;
    cfg.pool_stride = 2;
    return cfg;
}

CorpusSplit toy_split(std::size_t n, std::uint32_t seed) {
    auto docs = make_cleaned_docs(n, seed, {}, 5, 12);
    return split_corpus(std::move(docs));
}

std::vector<float> snapshot(const ClassifierModel& model) {
    std::vector<float> all;
    for (const auto& [name, p] : model_parameters(model))
        all.insert(all.end(), p.values().begin(), p.values().end());
    return all;
}

std::vector<Batch> encode_to_batches(const std::vector<CleanedDoc>& docs, const Vocabulary& vocab,
                                     const TrainConfig& cfg) {
    return make_batches(encode_corpus(docs, vocab, cfg.max_len), cfg.batch_size, 0, false);
}

}  // namespace

TEST_CASE("train_epoch with zero learning rate keeps parameters frozen") {
    TrainConfig cfg = toy_config(ModelKind::lstm);
    auto docs = make_cleaned_docs(16, 21, {}, 5, 12);
    Vocabulary vocab = build_vocabulary(docs, cfg.vocab_size);
    ClassifierModel model = build_model(cfg, random_embeddings(vocab, cfg.embedding_dim, cfg.seed));

    AdamConfig<float> acfg;
    acfg.learning_rate = 0.0f;
    Adam<float> adam(model_parameters(model), acfg);
    std::mt19937 rng(1);

    auto before = snapshot(model);
    auto batches = encode_to_batches(docs, vocab, cfg);
    std::get<LstmClassifier<float>>(model);
    std::visit([&](auto& m) { train_epoch(m, batches, adam, rng); }, model);
    CHECK(snapshot(model) == before);
}

TEST_CASE("train_epoch overfits a single example") {
    TrainConfig cfg = toy_config(ModelKind::lstm);
    std::vector<CleanedDoc> one{{{"great", "wonderful", "superb", "movie"}, 1}};
    Vocabulary vocab = build_vocabulary(one, cfg.vocab_size);
    ClassifierModel model = build_model(cfg, random_embeddings(vocab, cfg.embedding_dim, cfg.seed));

    AdamConfig<float> acfg;
    acfg.learning_rate = 0.01f;
    Adam<float> adam(model_parameters(model), acfg);
    std::mt19937 rng(2);
    auto batches = encode_to_batches(one, vocab, cfg);

    Metrics last;
    for (int epoch = 0; epoch < 200; ++epoch)
        last = std::visit([&](auto& m) { return train_epoch(m, batches, adam, rng); }, model);
    CHECK(last.accuracy == 1.0);
}

TEST_CASE("train_epoch metrics are reproducible under the seed") {
    TrainConfig cfg = toy_config(ModelKind::lstm);
    cfg.dropout = 0.4;  // exercise the dropout stream too
    CorpusSplit split = toy_split(40, 22);

    auto run = [&]() {
        Vocabulary vocab = build_vocabulary(split.train, cfg.vocab_size);
        ClassifierModel model =
            build_model(cfg, random_embeddings(vocab, cfg.embedding_dim, cfg.seed));
        AdamConfig<float> acfg;
        acfg.learning_rate = static_cast<float>(cfg.learning_rate);
        Adam<float> adam(model_parameters(model), acfg);
        std::mt19937 rng(cfg.seed);
        auto batches = encode_to_batches(split.train, vocab, cfg);
        std::vector<double> losses;
        for (int e = 0; e < 3; ++e)
            losses.push_back(
                std::visit([&](auto& m) { return train_epoch(m, batches, adam, rng); }, model).loss);
        return losses;
    };
    CHECK(run() == run());
}

TEST_CASE("evaluate") {
    TrainConfig cfg = toy_config(ModelKind::lstm);
    auto docs = make_cleaned_docs(240, 23, {}, 5, 12);
    Vocabulary vocab = build_vocabulary(docs, cfg.vocab_size);
    ClassifierModel model = build_model(cfg, random_embeddings(vocab, cfg.embedding_dim, cfg.seed));
    auto batches = encode_to_batches(docs, vocab, cfg);

    SUBCASE("is pure and repeatable") {
        auto before = snapshot(model);
        Metrics a = std::visit([&](const auto& m) { return evaluate(m, batches); }, model);
        Metrics b = std::visit([&](const auto& m) { return evaluate(m, batches); }, model);
        CHECK(a.loss == b.loss);
        CHECK(a.accuracy == b.accuracy);
        CHECK(a.count == 240);
        CHECK(snapshot(model) == before);
    }

    SUBCASE("untrained model sits near coin-flip accuracy on balanced data") {
        Metrics m = std::visit([&](const auto& mm) { return evaluate(mm, batches); }, model);
        CHECK(m.accuracy > 0.4);
        CHECK(m.accuracy < 0.6);
    }
}

TEST_CASE("fit produces one epoch row per epoch and a test score") {
    TrainConfig cfg = toy_config(ModelKind::lstm);
    cfg.epochs = 3;
    FitResult result = fit(cfg, toy_split(40, 24));
    CHECK(result.report.epochs.size() == 3);
    CHECK(result.report.test.count > 0);
    CHECK(result.report.seed == cfg.seed);
    for (const auto& e : result.report.epochs) {
        CHECK(std::isfinite(e.train_loss));
        CHECK(e.seconds >= 0.0);
    }
}

TEST_CASE("fit reaches full training accuracy on a 32-review toy corpus") {
    // capacity check for both stacks at desk scale
    auto docs = make_cleaned_docs(32, 25, {}, 5, 12);
    CorpusSplit split;
    split.train = docs;
    split.valid = {docs[0], docs[1]};
    split.test = {docs[2], docs[3]};

    for (ModelKind kind : {ModelKind::lstm, ModelKind::cnn}) {
        TrainConfig cfg = toy_config(kind);
        cfg.batch_size = 8;
        Vocabulary vocab = build_vocabulary(split.train, cfg.vocab_size);
        ClassifierModel model =
            build_model(cfg, random_embeddings(vocab, cfg.embedding_dim, cfg.seed));
        AdamConfig<float> acfg;
        acfg.learning_rate = static_cast<float>(cfg.learning_rate);
        Adam<float> adam(model_parameters(model), acfg);
        std::mt19937 rng(cfg.seed);
        auto batches = encode_to_batches(split.train, vocab, cfg);

        double best = 0.0;
        int epochs_used = 0;
        for (int e = 0; e < 300 && best < 1.0; ++e) {
            best = std::visit([&](auto& m) { return train_epoch(m, batches, adam, rng); }, model)
                       .accuracy;
            epochs_used = e + 1;
        }
        INFO(model_kind_name(kind) << " epochs used: " << epochs_used);
        CHECK(best == 1.0);
    }
}

TEST_CASE("fit train loss descends on a small corpus") {
    TrainConfig cfg = toy_config(ModelKind::lstm);
    cfg.epochs = 50;
    FitResult result = fit(cfg, toy_split(30, 26));
    CHECK(result.report.epochs.back().train_loss < result.report.epochs.front().train_loss);
}

TEST_CASE("fit is bitwise reproducible") {
    TrainConfig cfg = toy_config(ModelKind::lstm);
    cfg.dropout = 0.3;
    cfg.epochs = 2;
    CorpusSplit split = toy_split(40, 27);
    FitResult a = fit(cfg, split);
    FitResult b = fit(cfg, split);
    CHECK(snapshot(a.model) == snapshot(b.model));
    CHECK(report_csv(a.report) == report_csv(b.report));
}

TEST_CASE("fit can start from pretrained embedding vectors") {
    TrainConfig cfg = toy_config(ModelKind::lstm);
    cfg.epochs = 1;
    CorpusSplit split = toy_split(30, 28);
    Vocabulary vocab = build_vocabulary(split.train, cfg.vocab_size);

    // cover a couple of real vocabulary words, leave the rest to sampling
    std::string path = tmp().path("toy_vectors.txt");
    std::string file;
    for (std::size_t i = 0; i < std::min<std::size_t>(2, vocab.size()); ++i) {
        file += vocab.tokens()[i];
        for (std::size_t j = 0; j < cfg.embedding_dim; ++j) file += " 0.01";
        file += "\n";
    }
    write_text(path, file);

    cfg.pretrained_embeddings = path;
    FitResult result = fit(cfg, split);
    CHECK(result.report.epochs.size() == 1);
}

TEST_CASE("run_ablation") {
    TrainConfig base = toy_config(ModelKind::lstm);
    base.epochs = 1;
    CorpusSplit split = toy_split(30, 29);

    SUBCASE("activation axis yields one row per value") {
        AblationGrid grid;
        grid.activations = {Activation::relu, Activation::tanh, Activation::sigmoid};
        AblationReport report = run_ablation(base, grid, split);
        REQUIRE(report.rows.size() == 3);
        CHECK(report.rows[0].config_delta == "activation=relu");
        CHECK(report.rows[1].config_delta == "activation=tanh");
        CHECK(report.rows[2].config_delta == "activation=sigmoid");
        for (const auto& row : report.rows) {
            CHECK(row.seed == base.seed);
            CHECK(!row.diverged);
        }
    }

    SUBCASE("learning-rate and batch-size axes form a grid in order") {
        AblationGrid grid;
        grid.learning_rates = {0.1, 0.001};
        grid.batch_sizes = {1, 8};
        AblationReport report = run_ablation(base, grid, split);
        REQUIRE(report.rows.size() == 4);
        CHECK(report.rows[0].config_delta == "learning_rate=0.100000 batch_size=1");
        CHECK(report.rows[3].config_delta == "learning_rate=0.001000 batch_size=8");
    }

    SUBCASE("rows are pure functions of their grid point") {
        AblationGrid grid;
        grid.activations = {Activation::relu};
        AblationReport a = run_ablation(base, grid, split);
        AblationReport b = run_ablation(base, grid, split);
        CHECK(a.rows[0].valid_accuracy == b.rows[0].valid_accuracy);
        CHECK(a.rows[0].valid_loss == b.rows[0].valid_loss);
    }

    SUBCASE("empty grid rejected") {
        CHECK_THROWS_AS(run_ablation(base, AblationGrid{}, split), std::runtime_error);
    }

    SUBCASE("a divergent point is reported, not fatal") {
        TrainConfig cnn = toy_config(ModelKind::cnn);
        cnn.epochs = 2;
        AblationGrid grid;
        grid.learning_rates = {1e30, 0.01};
        AblationReport report = run_ablation(cnn, grid, split);
        REQUIRE(report.rows.size() == 2);
        CHECK(report.rows[0].diverged);
        CHECK(!report.rows[1].diverged);
        std::string csv = ablation_csv(report);
        CHECK(csv.find("diverged") != std::string::npos);
    }
}

TEST_CASE("checkpoint round trip") {
    TrainConfig cfg = toy_config(ModelKind::lstm);
    cfg.epochs = 1;
    FitResult result = fit(cfg, toy_split(30, 30));
    std::string path = tmp().path("round_trip.snt1");
    std::vector<std::string> stopwords{"a", "the"};
    save_checkpoint(result.model, result.vocab, result.config, stopwords, path);

    SUBCASE("file begins with the magic bytes") {
        std::string content = read_text(path);
        REQUIRE(content.size() > 4);
        CHECK(content.substr(0, 4) == "SNT1");
    }

    SUBCASE("parameters reload bitwise and predictions match") {
        CheckpointData loaded = load_checkpoint(path);
        CHECK(snapshot(loaded.model) == snapshot(result.model));
        CHECK(loaded.stopwords == stopwords);
        CHECK(loaded.vocab.tokens() == result.vocab.tokens());

        StopwordSet set(stopwords.begin(), stopwords.end());
        std::mt19937 rng(31);
        auto reviews = make_reviews(100, 32, 3, 20);
        for (const auto& r : reviews) {
            double a = predict_probability(result.model, result.vocab, result.config, set, r.text);
            double b = predict_probability(loaded.model, loaded.vocab, loaded.config, set, r.text);
            CHECK(a == b);
        }
    }

    SUBCASE("overwrite requires force") {
        CHECK_THROWS_AS(
            save_checkpoint(result.model, result.vocab, result.config, stopwords, path, false),
            std::runtime_error);
        save_checkpoint(result.model, result.vocab, result.config, stopwords, path, true);
    }

    SUBCASE("saving twice gives identical bytes") {
        std::string again = tmp().path("round_trip_2.snt1");
        save_checkpoint(result.model, result.vocab, result.config, stopwords, again);
        CHECK(read_text(path) == read_text(again));
    }
}

TEST_CASE("checkpoint corruption errors are distinct") {
    TrainConfig cfg = toy_config(ModelKind::lstm);
    cfg.epochs = 1;
    FitResult result = fit(cfg, toy_split(30, 33));
    std::string path = tmp().path("corrupt_base.snt1");
    save_checkpoint(result.model, result.vocab, result.config, {}, path);
    const std::string good = read_text(path);

    SUBCASE("bad magic") {
        std::string bad = good;
        bad[0] = 'X';
        std::string p = tmp().path("bad_magic.snt1");
        write_text(p, bad);
        CHECK_THROWS_WITH_AS(load_checkpoint(p), doctest::Contains("magic"), std::runtime_error);
    }

    SUBCASE("unsupported version names both versions") {
        std::string bad = good;
        bad[4] = 9;  // version low byte
        std::string p = tmp().path("bad_version.snt1");
        write_text(p, bad);
        CHECK_THROWS_WITH_AS(load_checkpoint(p), doctest::Contains("version 9"), std::runtime_error);
        try {
            load_checkpoint(p);
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("version 1") != std::string::npos);
        }
    }

    SUBCASE("truncated payload is a size mismatch, not a crash") {
        std::string bad = good.substr(0, good.size() - 64);
        std::string p = tmp().path("truncated.snt1");
        write_text(p, bad);
        CHECK_THROWS_WITH_AS(load_checkpoint(p), doctest::Contains("size mismatch"),
                             std::runtime_error);
    }

    SUBCASE("declared dims that disagree with the config are a shape mismatch") {
        // rewrite the metadata with a tampered dimension, keeping the
        // header length field consistent
        std::uint32_t meta_len = static_cast<std::uint32_t>(static_cast<unsigned char>(good[6])) |
                                 (static_cast<std::uint32_t>(static_cast<unsigned char>(good[7])) << 8) |
                                 (static_cast<std::uint32_t>(static_cast<unsigned char>(good[8])) << 16) |
                                 (static_cast<std::uint32_t>(static_cast<unsigned char>(good[9])) << 24);
        nlohmann::json meta = nlohmann::json::parse(good.substr(10, meta_len));
        meta["tensors"][1]["dims"][0] = 999;
        std::string meta_str = meta.dump();
        std::string bad = good.substr(0, 6);
        for (int i = 0; i < 4; ++i)
            bad += static_cast<char>((meta_str.size() >> (8 * i)) & 0xFF);
        bad += meta_str;
        bad += good.substr(10 + meta_len);
        std::string p = tmp().path("bad_shape.snt1");
        write_text(p, bad);
        CHECK_THROWS_WITH_AS(load_checkpoint(p), doctest::Contains("shape mismatch"),
                             std::runtime_error);
    }
}

TEST_CASE("score_docs and predict_probability agree with evaluate") {
    TrainConfig cfg = toy_config(ModelKind::cnn);
    cfg.epochs = 2;
    CorpusSplit split = toy_split(40, 34);
    FitResult result = fit(cfg, split);

    Metrics direct = score_docs(result.model, result.vocab, result.config, split.test);
    CHECK(direct.count == split.test.size());
    CHECK(direct.accuracy >= 0.0);
    CHECK(direct.accuracy <= 1.0);

    double p = predict_probability(result.model, result.vocab, result.config, {},
                                   "a wonderful delightful movie");
    CHECK(p > 0.0);
    CHECK(p < 1.0);
}

TEST_CASE("validate_config names the offending flag") {
    TrainConfig cfg = toy_config(ModelKind::lstm);
    cfg.learning_rate = -1.0;
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("--learning-rate"),
                         std::runtime_error);
    cfg = toy_config(ModelKind::lstm);
    cfg.kernel_width = 4;
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("--kernel-width"),
                         std::runtime_error);
    cfg = toy_config(ModelKind::lstm);
    cfg.dropout = 1.0;
    CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("--dropout"), std::runtime_error);
}

TEST_CASE("config json round trip") {
    TrainConfig cfg = toy_config(ModelKind::cnn);
    cfg.activation = Activation::tanh;
    cfg.pretrained_embeddings = "vectors.txt";
    TrainConfig back = config_from_json(config_to_json(cfg));
    CHECK(back.model == cfg.model);
    CHECK(back.activation == cfg.activation);
    CHECK(back.learning_rate == cfg.learning_rate);
    CHECK(back.conv_filters == cfg.conv_filters);
    CHECK(back.pretrained_embeddings == cfg.pretrained_embeddings);

    CHECK_THROWS_WITH_AS(config_from_json(nlohmann::json{{"unknown_key", 1}}),
                         doctest::Contains("unknown_key"), std::runtime_error);
}
