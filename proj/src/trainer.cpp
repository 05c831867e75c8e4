#include "sentiment/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sentiment/config_io.hpp"

namespace sentiment {

void validate_config(const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0.0)) throw std::runtime_error("--learning-rate must be > 0");
    if (cfg.batch_size < 1) throw std::runtime_error("--batch-size must be >= 1");
    if (cfg.epochs < 1) throw std::runtime_error("--epochs must be >= 1");
    if (cfg.max_len < 1) throw std::runtime_error("--max-len must be >= 1");
    if (cfg.vocab_size < 1) throw std::runtime_error("--vocab-size must be >= 1");
    if (cfg.embedding_dim < 1) throw std::runtime_error("--embedding-dim must be >= 1");
    if (cfg.lstm_hidden < 1) throw std::runtime_error("--lstm-hidden must be >= 1");
    if (cfg.fc_width < 1) throw std::runtime_error("--fc-width must be >= 1");
    if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw std::runtime_error("--dropout must be in [0, 1)");
    if (cfg.conv_filters.empty()) throw std::runtime_error("--conv-filters must name at least one stage");
    for (std::size_t f : cfg.conv_filters)
        if (f < 1) throw std::runtime_error("--conv-filters entries must be >= 1");
    if (cfg.kernel_width % 2 == 0 || cfg.kernel_width < 1)
        throw std::runtime_error("--kernel-width must be odd and >= 1");
    if (cfg.pool_window < 1) throw std::runtime_error("--pool-window must be >= 1");
    if (cfg.pool_stride < 1) throw std::runtime_error("--pool-stride must be >= 1");
}

ClassifierModel build_model(const TrainConfig& cfg, const EmbeddingInit& embedding) {
    std::mt19937 rng(cfg.seed + 1);
    if (cfg.model == ModelKind::lstm) {
        LstmClassifier<float> m;
        m.embedding = make_embedding<float>(embedding);
        m.lstm = make_lstm<float>(cfg.embedding_dim, cfg.lstm_hidden, rng);
        m.fc = make_dense<float>(cfg.lstm_hidden, cfg.fc_width, rng);
        m.hidden_activation = cfg.activation;
        m.dropout_rate = static_cast<float>(cfg.dropout);
        m.out = make_dense<float>(cfg.fc_width, 1, rng);
        return m;
    }
    CnnClassifier<float> m;
    m.embedding = make_embedding<float>(embedding);
    std::size_t channels = cfg.embedding_dim;
    for (std::size_t filters : cfg.conv_filters) {
        ConvStage<float> stage;
        stage.conv = make_conv1d<float>(filters, cfg.kernel_width, channels, rng);
        stage.pool_window = cfg.pool_window;
        stage.pool_stride = cfg.pool_stride;
        m.stages.push_back(std::move(stage));
        channels = filters;
    }
    // flatten width depends on how far the pools shrink the time axis
    std::size_t steps = cfg.max_len;
    for (std::size_t s = 0; s < cfg.conv_filters.size(); ++s) {
        if (cfg.pool_window > steps)
            throw std::runtime_error("cnn stage " + std::to_string(s + 1) + ": pool window " +
                                     std::to_string(cfg.pool_window) + " collapses time length " +
                                     std::to_string(steps));
        steps = (steps - cfg.pool_window) / cfg.pool_stride + 1;
    }
    m.dense1 = make_dense<float>(steps * channels, cfg.fc_width, rng);
    m.dense2 = make_dense<float>(cfg.fc_width, 1, rng);
    return m;
}

NamedParams<float> model_parameters(const ClassifierModel& model) {
    return std::visit([](const auto& m) { return named_parameters(m); }, model);
}

namespace {

EmbeddingInit make_embedding_init(const TrainConfig& cfg, const Vocabulary& vocab) {
    if (cfg.pretrained_embeddings.empty())
        return random_embeddings(vocab, cfg.embedding_dim, cfg.seed);
    return load_pretrained_embeddings(cfg.pretrained_embeddings, vocab, cfg.embedding_dim, cfg.seed);
}

}  // namespace

FitResult fit(const TrainConfig& cfg, const CorpusSplit& split) {
    validate_config(cfg);
    if (split.train.empty() || split.valid.empty() || split.test.empty())
        throw std::runtime_error("fit: all three corpus folds must be non-empty");

    Vocabulary vocab = build_vocabulary(split.train, cfg.vocab_size);
    std::vector<EncodedSeq> train_seqs = encode_corpus(split.train, vocab, cfg.max_len);
    std::vector<EncodedSeq> valid_seqs = encode_corpus(split.valid, vocab, cfg.max_len);
    std::vector<EncodedSeq> test_seqs = encode_corpus(split.test, vocab, cfg.max_len);

    ClassifierModel model = build_model(cfg, make_embedding_init(cfg, vocab));

    AdamConfig<float> adam_cfg;
    adam_cfg.learning_rate = static_cast<float>(cfg.learning_rate);
    Adam<float> adam(model_parameters(model), adam_cfg);

    std::mt19937 dropout_rng(cfg.seed + 2);
    std::vector<Batch> valid_batches = make_batches(valid_seqs, cfg.batch_size, 0, false);
    std::vector<Batch> test_batches = make_batches(test_seqs, cfg.batch_size, 0, false);

    TrainReport report;
    report.config = cfg;
    report.seed = cfg.seed;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        std::vector<Batch> train_batches =
            make_batches(train_seqs, cfg.batch_size, cfg.seed + 100 + static_cast<std::uint32_t>(epoch), true);
        Metrics train_m, valid_m;
        try {
            train_m = std::visit(
                [&](auto& m) { return train_epoch(m, train_batches, adam, dropout_rng); }, model);
        } catch (const TrainingDiverged& e) {
            throw TrainingDiverged(std::string(e.what()) + "; last good state: epoch " +
                                   std::to_string(epoch));
        }
        valid_m = std::visit([&](const auto& m) { return evaluate(m, valid_batches); }, model);
        auto t1 = std::chrono::steady_clock::now();
        EpochStats stats;
        stats.train_loss = train_m.loss;
        stats.train_accuracy = train_m.accuracy;
        stats.valid_loss = valid_m.loss;
        stats.valid_accuracy = valid_m.accuracy;
        stats.seconds = std::chrono::duration<double>(t1 - t0).count();
        report.epochs.push_back(stats);
    }

    report.test = std::visit([&](const auto& m) { return evaluate(m, test_batches); }, model);

    FitResult result;
    result.model = std::move(model);
    result.vocab = std::move(vocab);
    result.config = cfg;
    result.report = std::move(report);
    return result;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string delta_for(const char* axis, const std::string& value) {
    return std::string(axis) + "=" + value;
}

AblationRow run_point(const TrainConfig& cfg, std::string delta, const CorpusSplit& split) {
    AblationRow row;
    row.config_delta = std::move(delta);
    row.epochs = cfg.epochs;
    row.seed = cfg.seed;
    try {
        FitResult result = fit(cfg, split);
        row.valid_accuracy = result.report.epochs.back().valid_accuracy;
        row.valid_loss = result.report.epochs.back().valid_loss;
    } catch (const TrainingDiverged&) {
        row.diverged = true;
        row.valid_accuracy = std::nan("");
        row.valid_loss = std::nan("");
    }
    return row;
}

}  // namespace

AblationReport run_ablation(const TrainConfig& base, const AblationGrid& grid,
                            const CorpusSplit& split) {
    if (grid.activations.empty() && grid.learning_rates.empty() && grid.batch_sizes.empty())
        throw std::runtime_error("ablation grid has no axes");
    validate_config(base);

    // Cartesian product in fixed axis order; absent axes contribute the
    // base value. Every point shares the base seed for comparability.
    std::vector<Activation> acts = grid.activations.empty()
                                       ? std::vector<Activation>{base.activation}
                                       : grid.activations;
    std::vector<double> lrs = grid.learning_rates.empty() ? std::vector<double>{base.learning_rate}
                                                          : grid.learning_rates;
    std::vector<std::size_t> batches = grid.batch_sizes.empty()
                                           ? std::vector<std::size_t>{base.batch_size}
                                           : grid.batch_sizes;

    AblationReport report;
    report.base = base;
    for (Activation act : acts)
        for (double lr : lrs)
            for (std::size_t bs : batches) {
                TrainConfig cfg = base;
                cfg.activation = act;
                cfg.learning_rate = lr;
                cfg.batch_size = bs;
                std::vector<std::string> parts;
                if (!grid.activations.empty()) parts.push_back(delta_for("activation", activation_name(act)));
                if (!grid.learning_rates.empty()) parts.push_back(delta_for("learning_rate", format_double(lr)));
                if (!grid.batch_sizes.empty()) parts.push_back(delta_for("batch_size", std::to_string(bs)));
                std::string delta;
                for (std::size_t i = 0; i < parts.size(); ++i) {
                    if (i) delta += " ";
                    delta += parts[i];
                }
                report.rows.push_back(run_point(cfg, delta, split));
            }
    return report;
}

double predict_probability(const ClassifierModel& model, const Vocabulary& vocab,
                           const TrainConfig& cfg, const StopwordSet& stopwords,
                           const std::string& text) {
    CleanConfig clean_cfg;
    clean_cfg.strip_html_urls = cfg.strip_html_urls;
    clean_cfg.lowercase = cfg.lowercase;
    std::vector<std::string> tokens = filter_stopwords(tokenize(clean_text(text, clean_cfg)), stopwords);

    Batch batch;
    batch.size = 1;
    batch.seq_len = cfg.max_len;
    batch.ids = pad_truncate(encode(tokens, vocab), cfg.max_len);
    batch.labels = {0};

    std::mt19937 unused_rng(0);
    Tape<float> tape;
    tape.set_recording(false);
    Tensor<float> p = std::visit(
        [&](const auto& m) { return forward_probabilities(tape, m, batch, Mode::eval, unused_rng); },
        model);
    return static_cast<double>(p.values()[0]);
}

Metrics score_docs(const ClassifierModel& model, const Vocabulary& vocab, const TrainConfig& cfg,
                   const std::vector<CleanedDoc>& docs) {
    std::vector<EncodedSeq> seqs = encode_corpus(docs, vocab, cfg.max_len);
    std::vector<Batch> batches = make_batches(seqs, cfg.batch_size, 0, false);
    return std::visit([&](const auto& m) { return evaluate(m, batches); }, model);
}

std::string report_csv(const TrainReport& report) {
    std::ostringstream out;
    out << "epoch,train_loss,train_accuracy,valid_loss,valid_accuracy\n";
    for (std::size_t i = 0; i < report.epochs.size(); ++i) {
        const EpochStats& e = report.epochs[i];
        out << (i + 1) << "," << format_double(e.train_loss) << "," << format_double(e.train_accuracy)
            << "," << format_double(e.valid_loss) << "," << format_double(e.valid_accuracy) << "\n";
    }
    return out.str();
}

std::string report_json(const TrainReport& report) {
    nlohmann::json j;
    j["config"] = config_to_json(report.config);
    j["seed"] = report.seed;
    j["epochs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < report.epochs.size(); ++i) {
        const EpochStats& e = report.epochs[i];
        j["epochs"].push_back({{"epoch", i + 1},
                               {"train_loss", e.train_loss},
                               {"train_accuracy", e.train_accuracy},
                               {"valid_loss", e.valid_loss},
                               {"valid_accuracy", e.valid_accuracy},
                               {"seconds", e.seconds}});
    }
    j["test"] = {{"loss", report.test.loss}, {"accuracy", report.test.accuracy}, {"count", report.test.count}};
    return j.dump(2) + "\n";
}

std::string ablation_csv(const AblationReport& report) {
    std::ostringstream out;
    out << "config,valid_accuracy,valid_loss,epochs,seed,status\n";
    for (const AblationRow& row : report.rows) {
        out << row.config_delta << "," << format_double(row.valid_accuracy) << ","
            << format_double(row.valid_loss) << "," << row.epochs << "," << row.seed << ","
            << (row.diverged ? "diverged" : "ok") << "\n";
    }
    return out.str();
}

std::string ablation_json(const AblationReport& report) {
    nlohmann::json j;
    j["base_config"] = config_to_json(report.base);
    j["rows"] = nlohmann::json::array();
    for (const AblationRow& row : report.rows) {
        nlohmann::json r = {{"config", row.config_delta},
                            {"epochs", row.epochs},
                            {"seed", row.seed},
                            {"status", row.diverged ? "diverged" : "ok"}};
        if (row.diverged) {
            r["valid_accuracy"] = nullptr;
            r["valid_loss"] = nullptr;
        } else {
            r["valid_accuracy"] = row.valid_accuracy;
            r["valid_loss"] = row.valid_loss;
        }
        j["rows"].push_back(r);
    }
    return j.dump(2) + "\n";
}

nlohmann::json config_to_json(const TrainConfig& cfg) {
    return nlohmann::json{{"model", model_kind_name(cfg.model)},
                          {"activation", activation_name(cfg.activation)},
                          {"learning_rate", cfg.learning_rate},
                          {"batch_size", cfg.batch_size},
                          {"epochs", cfg.epochs},
                          {"seed", cfg.seed},
                          {"max_len", cfg.max_len},
                          {"vocab_size", cfg.vocab_size},
                          {"pretrained_embeddings", cfg.pretrained_embeddings},
                          {"embedding_dim", cfg.embedding_dim},
                          {"lstm_hidden", cfg.lstm_hidden},
                          {"fc_width", cfg.fc_width},
                          {"dropout", cfg.dropout},
                          {"conv_filters", cfg.conv_filters},
                          {"kernel_width", cfg.kernel_width},
                          {"pool_window", cfg.pool_window},
                          {"pool_stride", cfg.pool_stride},
                          {"strip_html_urls", cfg.strip_html_urls},
                          {"lowercase", cfg.lowercase},
                          {"stopword_path", cfg.stopword_path}};
}

TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base) {
    if (!j.is_object()) throw std::runtime_error("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "model") base.model = model_kind_from_name(value.get<std::string>());
        else if (key == "activation") base.activation = activation_from_name(value.get<std::string>());
        else if (key == "learning_rate") base.learning_rate = value.get<double>();
        else if (key == "batch_size") base.batch_size = value.get<std::size_t>();
        else if (key == "epochs") base.epochs = value.get<std::size_t>();
        else if (key == "seed") base.seed = value.get<std::uint32_t>();
        else if (key == "max_len") base.max_len = value.get<std::size_t>();
        else if (key == "vocab_size") base.vocab_size = value.get<std::size_t>();
        else if (key == "pretrained_embeddings") base.pretrained_embeddings = value.get<std::string>();
        else if (key == "embedding_dim") base.embedding_dim = value.get<std::size_t>();
        else if (key == "lstm_hidden") base.lstm_hidden = value.get<std::size_t>();
        else if (key == "fc_width") base.fc_width = value.get<std::size_t>();
        else if (key == "dropout") base.dropout = value.get<double>();
        else if (key == "conv_filters") base.conv_filters = value.get<std::vector<std::size_t>>();
        else if (key == "kernel_width") base.kernel_width = value.get<std::size_t>();
        else if (key == "pool_window") base.pool_window = value.get<std::size_t>();
        else if (key == "pool_stride") base.pool_stride = value.get<std::size_t>();
        else if (key == "strip_html_urls") base.strip_html_urls = value.get<bool>();
        else if (key == "lowercase") base.lowercase = value.get<bool>();
        else if (key == "stopword_path") base.stopword_path = value.get<std::string>();
        else throw std::runtime_error("unknown config key: " + key);
    }
    return base;
}

TrainConfig load_config_file(const std::string& path, TrainConfig base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("config file " + path + ": " + e.what());
    }
    return config_from_json(j, std::move(base));
}

}  // namespace sentiment
