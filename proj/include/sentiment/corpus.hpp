#pragma once

#include <string>
#include <unordered_set>
#include <vector>

namespace sentiment {

enum class Label : int { negative = 0, positive = 1 };

struct RawReview {
    std::string text;
    Label label;
};

struct CleanConfig {
    bool strip_html_urls = false;
    bool lowercase = true;
    std::string stopword_path;  // empty disables stopword filtering
};

struct CleanedDoc {
    std::vector<std::string> tokens;
    int label = 0;  // negative=0, positive=1
};

struct CorpusSplit {
    std::vector<CleanedDoc> train;
    std::vector<CleanedDoc> valid;
    std::vector<CleanedDoc> test;
};

using StopwordSet = std::unordered_set<std::string>;

/// Reads a `review,sentiment` CSV (header required, case-insensitive,
/// standard quoting). Throws with the offending row number on a sentiment
/// value outside {positive, negative}.
std::vector<RawReview> load_corpus(const std::string& path);

/// One lowercase word per line; lines starting with '#' are skipped.
StopwordSet load_stopwords(const std::string& path);

/// Normalizes raw text to lowercase alphabetic words separated by single
/// spaces: optional HTML/URL strip, lowercase, non-word chars to space,
/// digits deleted, whitespace collapsed, ends trimmed. Idempotent.
std::string clean_text(const std::string& raw, const CleanConfig& cfg);

std::vector<std::string> tokenize(const std::string& cleaned);

std::vector<std::string> filter_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordSet& stopwords);

/// Full cleaning pipeline over a loaded corpus, order preserved.
std::vector<CleanedDoc> clean_corpus(const std::vector<RawReview>& raws, const CleanConfig& cfg,
                                     const StopwordSet& stopwords);

/// First 70% train; the remaining tail is halved in order, valid then test.
CorpusSplit split_corpus(std::vector<CleanedDoc> docs);

}  // namespace sentiment
