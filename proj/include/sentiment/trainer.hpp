#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sentiment/corpus.hpp"
#include "sentiment/layers.hpp"
#include "sentiment/optim.hpp"
#include "sentiment/textproc.hpp"

namespace sentiment {

enum class ModelKind { lstm, cnn };

inline const char* model_kind_name(ModelKind k) { return k == ModelKind::lstm ? "lstm" : "cnn"; }

inline ModelKind model_kind_from_name(const std::string& name) {
    if (name == "lstm") return ModelKind::lstm;
    if (name == "cnn") return ModelKind::cnn;
    throw std::invalid_argument("unknown model kind: " + name);
}

struct TrainConfig {
    ModelKind model = ModelKind::lstm;
    Activation activation = Activation::relu;
    double learning_rate = 0.001;
    std::size_t batch_size = 32;
    std::size_t epochs = 5;
    std::uint32_t seed = 42;
    std::size_t max_len = 1000;    // T
    std::size_t vocab_size = 1000; // V
    std::string pretrained_embeddings;  // empty means random init
    std::size_t embedding_dim = 64;
    std::size_t lstm_hidden = 128;
    std::size_t fc_width = 64;
    double dropout = 0.3;
    std::vector<std::size_t> conv_filters = {128, 64, 32};
    std::size_t kernel_width = 3;
    std::size_t pool_window = 2;
    std::size_t pool_stride = 2;
    bool strip_html_urls = false;
    bool lowercase = true;
    std::string stopword_path;  // empty disables stopword filtering
};

/// Throws naming the offending field in flag form, e.g. "--learning-rate".
void validate_config(const TrainConfig& cfg);

struct EpochStats {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double valid_loss = 0.0;
    double valid_accuracy = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    TrainConfig config;  // effective merged config
    std::uint32_t seed = 0;
    std::vector<EpochStats> epochs;
    Metrics test;
};

struct AblationRow {
    std::string config_delta;
    double valid_accuracy = 0.0;
    double valid_loss = 0.0;
    std::size_t epochs = 0;
    std::uint32_t seed = 0;
    bool diverged = false;
};

struct AblationGrid {
    std::vector<Activation> activations;
    std::vector<double> learning_rates;
    std::vector<std::size_t> batch_sizes;
};

struct AblationReport {
    TrainConfig base;
    std::vector<AblationRow> rows;
};

using ClassifierModel = std::variant<LstmClassifier<float>, CnnClassifier<float>>;

struct FitResult {
    ClassifierModel model;
    Vocabulary vocab;
    TrainConfig config;
    TrainReport report;
};

/// One pass over the batches in order: forward, loss, backward, Adam
/// update. Dropout runs in train mode. Returns example-weighted mean loss
/// and accuracy. Throws TrainingDiverged on a non-finite loss or gradient.
template <typename Model>
Metrics train_epoch(Model& model, const std::vector<Batch>& batches, Adam<float>& adam,
                    std::mt19937& dropout_rng) {
    if (batches.empty()) throw std::invalid_argument("train_epoch: no batches");
    double loss_sum = 0.0, acc_sum = 0.0;
    std::size_t total = 0;
    for (const Batch& batch : batches) {
        Tape<float> tape;
        Tensor<float> p = forward_probabilities(tape, model, batch, Mode::train, dropout_rng);
        Tensor<float> loss = bce_loss(tape, p, batch.labels);
        if (!std::isfinite(loss.item()))
            throw TrainingDiverged("non-finite training loss after " +
                                   std::to_string(adam.step_count()) + " updates");
        adam.zero_grad();
        tape.backward(loss);
        adam.step();
        loss_sum += static_cast<double>(loss.item()) * static_cast<double>(batch.size);
        acc_sum += binary_accuracy<float>(p.values(), batch.labels) * static_cast<double>(batch.size);
        total += batch.size;
    }
    Metrics m;
    m.count = total;
    m.loss = loss_sum / static_cast<double>(total);
    m.accuracy = acc_sum / static_cast<double>(total);
    return m;
}

/// Scores batches without touching parameters; dropout in eval mode.
template <typename Model>
Metrics evaluate(const Model& model, const std::vector<Batch>& batches) {
    std::mt19937 unused_rng(0);
    double loss_sum = 0.0, acc_sum = 0.0;
    std::size_t total = 0;
    for (const Batch& batch : batches) {
        Tape<float> tape;
        tape.set_recording(false);
        Tensor<float> p = forward_probabilities(tape, model, batch, Mode::eval, unused_rng);
        Tape<float> loss_tape;
        loss_tape.set_recording(false);
        Tensor<float> loss = bce_loss(loss_tape, p, batch.labels);
        loss_sum += static_cast<double>(loss.item()) * static_cast<double>(batch.size);
        acc_sum += binary_accuracy<float>(p.values(), batch.labels) * static_cast<double>(batch.size);
        total += batch.size;
    }
    Metrics m;
    m.count = total;
    if (total) {
        m.loss = loss_sum / static_cast<double>(total);
        m.accuracy = acc_sum / static_cast<double>(total);
    }
    return m;
}

/// Builds a model skeleton with seeded random parameters and the given
/// embedding table.
ClassifierModel build_model(const TrainConfig& cfg, const EmbeddingInit& embedding);

NamedParams<float> model_parameters(const ClassifierModel& model);

/// Full training run: vocabulary from the train fold, encode and pad all
/// folds, epochs of train + validation scoring, one final test scoring.
/// Fully reproducible from (config, data, seed).
FitResult fit(const TrainConfig& cfg, const CorpusSplit& split);

/// Cartesian sweep over the non-empty grid axes, all points sharing the
/// base seed. Points that diverge are reported, not fatal.
AblationReport run_ablation(const TrainConfig& base, const AblationGrid& grid,
                            const CorpusSplit& split);

/// Probability of the positive class for one raw text.
double predict_probability(const ClassifierModel& model, const Vocabulary& vocab,
                           const TrainConfig& cfg, const StopwordSet& stopwords,
                           const std::string& text);

/// Scores already-cleaned documents with a trained model.
Metrics score_docs(const ClassifierModel& model, const Vocabulary& vocab, const TrainConfig& cfg,
                   const std::vector<CleanedDoc>& docs);

std::string report_csv(const TrainReport& report);
std::string report_json(const TrainReport& report);
std::string ablation_csv(const AblationReport& report);
std::string ablation_json(const AblationReport& report);

}  // namespace sentiment
