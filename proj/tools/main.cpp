// Batch CLI for the sentiment toolkit: prepare / train / evaluate /
// predict / ablate / inspect. Exit codes: 0 success, 1 data or config
// error, 2 usage error. Machine output goes to stdout, errors to stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "sentiment/checkpoint.hpp"
#include "sentiment/config_io.hpp"
#include "sentiment/corpus.hpp"
#include "sentiment/textproc.hpp"
#include "sentiment/trainer.hpp"

namespace {

using namespace sentiment;

struct CliOptions {
    std::string config_path;
    std::string data_path;
    std::string out_path;
    std::string model_path;
    std::string report_prefix;
    std::string text;
    bool force = false;
    bool text_given = false;

    // raw flag values; only applied when the flag was actually passed
    std::string model_kind, activation, pretrained, stopwords;
    double learning_rate = 0, dropout = 0;
    std::size_t batch_size = 0, epochs = 0, max_len = 0, vocab_size = 0;
    std::size_t embedding_dim = 0, lstm_hidden = 0, fc_width = 0;
    std::size_t kernel_width = 0, pool_window = 0, pool_stride = 0;
    std::uint32_t seed = 0;
    std::vector<std::size_t> conv_filters;
    bool strip_html_urls = false, no_lowercase = false;

    std::vector<std::string> grid_activations;
    std::vector<double> grid_learning_rates;
    std::vector<std::size_t> grid_batch_sizes;
};

void add_config_flags(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "JSON config file; flags override its fields");
    cmd->add_option("--model", opt.model_kind, "lstm or cnn");
    cmd->add_option("--activation", opt.activation, "hidden activation: relu, tanh or sigmoid");
    cmd->add_option("--learning-rate", opt.learning_rate, "Adam learning rate");
    cmd->add_option("--batch-size", opt.batch_size, "mini-batch size");
    cmd->add_option("--epochs", opt.epochs, "training epochs");
    cmd->add_option("--seed", opt.seed, "RNG seed for init, shuffling and dropout");
    cmd->add_option("--max-len", opt.max_len, "sequence length T (pad/truncate)");
    cmd->add_option("--vocab-size", opt.vocab_size, "vocabulary cap V");
    cmd->add_option("--pretrained-embeddings", opt.pretrained, "word-vector text file");
    cmd->add_option("--embedding-dim", opt.embedding_dim, "embedding dimension");
    cmd->add_option("--lstm-hidden", opt.lstm_hidden, "LSTM hidden size");
    cmd->add_option("--fc-width", opt.fc_width, "dense hidden width");
    cmd->add_option("--dropout", opt.dropout, "dropout rate in [0,1)");
    cmd->add_option("--conv-filters", opt.conv_filters, "CNN filters per stage")->delimiter(',');
    cmd->add_option("--kernel-width", opt.kernel_width, "CNN kernel width (odd)");
    cmd->add_option("--pool-window", opt.pool_window, "max-pool window");
    cmd->add_option("--pool-stride", opt.pool_stride, "max-pool stride");
    cmd->add_option("--stopwords", opt.stopwords, "stopword file; omit to skip filtering");
    cmd->add_flag("--strip-html-urls", opt.strip_html_urls, "delete <...> spans and http(s) URLs");
    cmd->add_flag("--no-lowercase", opt.no_lowercase, "keep the original letter case");
}

TrainConfig merge_config(const CLI::App* cmd, const CliOptions& opt) {
    TrainConfig cfg;
    if (!opt.config_path.empty()) cfg = load_config_file(opt.config_path, cfg);
    auto given = [&](const std::string& flag) { return cmd->count(flag) > 0; };
    if (given("--model")) cfg.model = model_kind_from_name(opt.model_kind);
    if (given("--activation")) cfg.activation = activation_from_name(opt.activation);
    if (given("--learning-rate")) cfg.learning_rate = opt.learning_rate;
    if (given("--batch-size")) cfg.batch_size = opt.batch_size;
    if (given("--epochs")) cfg.epochs = opt.epochs;
    if (given("--seed")) cfg.seed = opt.seed;
    if (given("--max-len")) cfg.max_len = opt.max_len;
    if (given("--vocab-size")) cfg.vocab_size = opt.vocab_size;
    if (given("--pretrained-embeddings")) cfg.pretrained_embeddings = opt.pretrained;
    if (given("--embedding-dim")) cfg.embedding_dim = opt.embedding_dim;
    if (given("--lstm-hidden")) cfg.lstm_hidden = opt.lstm_hidden;
    if (given("--fc-width")) cfg.fc_width = opt.fc_width;
    if (given("--dropout")) cfg.dropout = opt.dropout;
    if (given("--conv-filters")) cfg.conv_filters = opt.conv_filters;
    if (given("--kernel-width")) cfg.kernel_width = opt.kernel_width;
    if (given("--pool-window")) cfg.pool_window = opt.pool_window;
    if (given("--pool-stride")) cfg.pool_stride = opt.pool_stride;
    if (given("--stopwords")) cfg.stopword_path = opt.stopwords;
    if (given("--strip-html-urls")) cfg.strip_html_urls = opt.strip_html_urls;
    if (given("--no-lowercase")) cfg.lowercase = !opt.no_lowercase;
    return cfg;
}

StopwordSet resolve_stopwords(const TrainConfig& cfg) {
    if (cfg.stopword_path.empty()) return {};
    return load_stopwords(cfg.stopword_path);
}

CorpusSplit load_and_split(const std::string& data_path, const TrainConfig& cfg,
                           const StopwordSet& stopwords) {
    CleanConfig clean_cfg{cfg.strip_html_urls, cfg.lowercase, cfg.stopword_path};
    auto raws = load_corpus(data_path);
    return split_corpus(clean_corpus(raws, clean_cfg, stopwords));
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << content;
}

void write_reports(const std::string& prefix, const std::string& csv, const std::string& json) {
    write_file(prefix + ".csv", csv);
    write_file(prefix + ".json", json);
}

int cmd_prepare(const CLI::App* cmd, CliOptions& opt) {
    TrainConfig cfg = merge_config(cmd, opt);
    StopwordSet stopwords = resolve_stopwords(cfg);
    CleanConfig clean_cfg{cfg.strip_html_urls, cfg.lowercase, cfg.stopword_path};
    auto raws = load_corpus(opt.data_path);
    auto docs = clean_corpus(raws, clean_cfg, stopwords);
    CorpusSplit split = split_corpus(docs);

    std::size_t min_len = docs.empty() ? 0 : docs.front().tokens.size(), max_len = 0;
    double total = 0;
    for (const auto& d : docs) {
        min_len = std::min(min_len, d.tokens.size());
        max_len = std::max(max_len, d.tokens.size());
        total += static_cast<double>(d.tokens.size());
    }
    std::printf("rows=%zu\n", docs.size());
    std::printf("train=%zu valid=%zu test=%zu\n", split.train.size(), split.valid.size(),
                split.test.size());
    std::printf("token_count_min=%zu token_count_max=%zu token_count_mean=%.2f\n", min_len, max_len,
                docs.empty() ? 0.0 : total / static_cast<double>(docs.size()));
    return 0;
}

int cmd_train(const CLI::App* cmd, CliOptions& opt) {
    TrainConfig cfg = merge_config(cmd, opt);
    validate_config(cfg);
    StopwordSet stopwords = resolve_stopwords(cfg);
    CorpusSplit split = load_and_split(opt.data_path, cfg, stopwords);

    FitResult result = fit(cfg, split);

    std::vector<std::string> stopword_list(stopwords.begin(), stopwords.end());
    std::sort(stopword_list.begin(), stopword_list.end());
    save_checkpoint(result.model, result.vocab, result.config, stopword_list, opt.out_path, opt.force);

    std::string prefix = opt.report_prefix.empty() ? opt.out_path + ".report" : opt.report_prefix;
    write_reports(prefix, report_csv(result.report), report_json(result.report));

    const EpochStats& last = result.report.epochs.back();
    std::printf("trained model=%s epochs=%zu train_accuracy=%.4f valid_accuracy=%.4f test_accuracy=%.4f\n",
                model_kind_name(cfg.model), result.report.epochs.size(), last.train_accuracy,
                last.valid_accuracy, result.report.test.accuracy);
    std::printf("checkpoint=%s report=%s.csv\n", opt.out_path.c_str(), prefix.c_str());
    return 0;
}

int cmd_evaluate(const CLI::App*, CliOptions& opt) {
    CheckpointData ckpt = load_checkpoint(opt.model_path);
    StopwordSet stopwords(ckpt.stopwords.begin(), ckpt.stopwords.end());
    CleanConfig clean_cfg{ckpt.config.strip_html_urls, ckpt.config.lowercase, ""};
    auto docs = clean_corpus(load_corpus(opt.data_path), clean_cfg, stopwords);
    Metrics m = score_docs(ckpt.model, ckpt.vocab, ckpt.config, docs);
    std::printf("loss=%.6f accuracy=%.6f count=%zu\n", m.loss, m.accuracy, m.count);
    return 0;
}

int cmd_predict(const CLI::App*, CliOptions& opt) {
    CheckpointData ckpt = load_checkpoint(opt.model_path);
    StopwordSet stopwords(ckpt.stopwords.begin(), ckpt.stopwords.end());
    auto classify = [&](const std::string& line) {
        double p = predict_probability(ckpt.model, ckpt.vocab, ckpt.config, stopwords, line);
        std::printf("%s\t%.4f\n", p >= 0.5 ? "positive" : "negative", p);
    };
    if (opt.text_given) {
        classify(opt.text);
    } else {
        std::string line;
        while (std::getline(std::cin, line)) classify(line);
    }
    return 0;
}

int cmd_ablate(const CLI::App* cmd, CliOptions& opt) {
    TrainConfig base = merge_config(cmd, opt);
    validate_config(base);
    StopwordSet stopwords = resolve_stopwords(base);
    CorpusSplit split = load_and_split(opt.data_path, base, stopwords);

    AblationGrid grid;
    for (const auto& name : opt.grid_activations) grid.activations.push_back(activation_from_name(name));
    grid.learning_rates = opt.grid_learning_rates;
    for (std::size_t b : opt.grid_batch_sizes) grid.batch_sizes.push_back(b);

    AblationReport report = run_ablation(base, grid, split);
    std::string csv = ablation_csv(report);
    std::fputs(csv.c_str(), stdout);
    if (!opt.out_path.empty()) write_reports(opt.out_path, csv, ablation_json(report));
    return 0;
}

int cmd_inspect(const CLI::App*, CliOptions& opt) {
    std::ifstream in(opt.model_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + opt.model_path);
    CheckpointData ckpt = load_checkpoint(opt.model_path);

    nlohmann::json j;
    j["magic"] = "SNT1";
    j["format_version"] = 1;
    j["config"] = config_to_json(ckpt.config);
    j["vocabulary_size"] = ckpt.vocab.size();
    j["stopword_count"] = ckpt.stopwords.size();
    j["tensors"] = nlohmann::json::array();
    for (const auto& [name, p] : model_parameters(ckpt.model)) {
        std::vector<std::size_t> dims(p.shape().begin(), p.shape().end());
        j["tensors"].push_back({{"name", name}, {"dims", dims}, {"elements", p.numel()}});
    }
    std::printf("%s\n", j.dump(2).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IMDb-style binary sentiment classification: LSTM and Conv1D trained from scratch"};
    app.require_subcommand(1);
    CliOptions opt;

    CLI::App* prepare = app.add_subcommand("prepare", "validate a CSV and print fold/length statistics");
    prepare->add_option("--data", opt.data_path, "review CSV")->required();
    add_config_flags(prepare, opt);

    CLI::App* train = app.add_subcommand("train", "train a classifier and write checkpoint + report");
    train->add_option("--data", opt.data_path, "review CSV")->required();
    train->add_option("--out", opt.out_path, "checkpoint output path")->required();
    train->add_option("--report", opt.report_prefix, "report file prefix (default: <out>.report)");
    train->add_flag("--force", opt.force, "overwrite an existing checkpoint");
    add_config_flags(train, opt);

    CLI::App* evaluate = app.add_subcommand("evaluate", "score a CSV with a trained checkpoint");
    evaluate->add_option("--model", opt.model_path, "checkpoint path")->required();
    evaluate->add_option("--data", opt.data_path, "review CSV")->required();

    CLI::App* predict = app.add_subcommand("predict", "classify --text or stdin lines");
    predict->add_option("--model", opt.model_path, "checkpoint path")->required();
    predict->add_option("--text", opt.text, "single text to classify (otherwise stdin)");

    CLI::App* ablate = app.add_subcommand("ablate", "run a hyperparameter grid and report rows");
    ablate->add_option("--data", opt.data_path, "review CSV")->required();
    ablate->add_option("--out", opt.out_path, "report file prefix");
    ablate->add_option("--grid-activation", opt.grid_activations, "activation axis")->delimiter(',');
    ablate->add_option("--grid-learning-rate", opt.grid_learning_rates, "learning-rate axis")->delimiter(',');
    ablate->add_option("--grid-batch-size", opt.grid_batch_sizes, "batch-size axis")->delimiter(',');
    add_config_flags(ablate, opt);

    CLI::App* inspect = app.add_subcommand("inspect", "dump checkpoint metadata");
    inspect->add_option("--model", opt.model_path, "checkpoint path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // help text, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return 2;
    }

    opt.text_given = predict->count("--text") > 0;

    try {
        if (prepare->parsed()) return cmd_prepare(prepare, opt);
        if (train->parsed()) return cmd_train(train, opt);
        if (evaluate->parsed()) return cmd_evaluate(evaluate, opt);
        if (predict->parsed()) return cmd_predict(predict, opt);
        if (ablate->parsed()) return cmd_ablate(ablate, opt);
        if (inspect->parsed()) return cmd_inspect(inspect, opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
