#pragma once

#include <string>
#include <vector>

#include "sentiment/trainer.hpp"

namespace sentiment {

struct CheckpointData {
    ClassifierModel model;
    Vocabulary vocab;
    TrainConfig config;
    std::vector<std::string> stopwords;
};

/// Container layout, all integers little-endian:
///   magic "SNT1" | version u16 | metadata length u32 | metadata JSON |
///   tensor payload (raw float32, concatenated in index order).
/// The metadata carries the config, the vocabulary in id order, the
/// stopword list, and a tensor index of name/rank/dims/byte-offset.
void save_checkpoint(const ClassifierModel& model, const Vocabulary& vocab, const TrainConfig& cfg,
                     const std::vector<std::string>& stopwords, const std::string& path,
                     bool force = false);

/// Reconstructs exactly what was saved. Bad magic, an unsupported
/// version, a size mismatch and a shape mismatch each raise their own
/// error.
CheckpointData load_checkpoint(const std::string& path);

}  // namespace sentiment
