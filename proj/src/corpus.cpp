#include "sentiment/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sentiment {

namespace {

std::string ascii_lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim_ws(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// RFC-4180 style parser: quoted fields may hold commas, newlines and
// doubled quotes. Operates on the whole file content so multi-line rows
// work.
std::vector<std::vector<std::string>> parse_csv(const std::string& content) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;

    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
    };
    auto end_row = [&]() {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };

    for (std::size_t i = 0; i < content.size(); ++i) {
        char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_started = true;
                break;
            case ',':
                end_field();
                row_started = true;
                break;
            case '\r':
                break;  // swallowed; row ends at the \n
            case '\n':
                if (row_started || !field.empty() || !row.empty()) end_row();
                break;
            default:
                field += c;
                row_started = true;
                break;
        }
    }
    if (row_started || !field.empty() || !row.empty()) end_row();
    if (in_quotes) throw std::runtime_error("malformed CSV: unterminated quoted field");
    return rows;
}

}  // namespace

std::vector<RawReview> load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string content = buf.str();
    if (content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0) content.erase(0, 3);

    auto rows = parse_csv(content);
    if (rows.empty()) throw std::runtime_error("empty corpus file: " + path);

    const auto& header = rows.front();
    if (header.size() < 2 || ascii_lower(trim_ws(header[0])) != "review" ||
        ascii_lower(trim_ws(header[1])) != "sentiment")
        throw std::runtime_error("corpus header must be `review,sentiment`, got `" +
                                 (header.empty() ? std::string() : header[0]) +
                                 (header.size() > 1 ? "," + header[1] : std::string()) + "`");

    std::vector<RawReview> reviews;
    reviews.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        if (cells.size() < 2)
            throw std::runtime_error("corpus row " + std::to_string(r) + " has " +
                                     std::to_string(cells.size()) + " fields, expected 2");
        std::string sentiment = ascii_lower(trim_ws(cells[1]));
        Label label;
        if (sentiment == "positive")
            label = Label::positive;
        else if (sentiment == "negative")
            label = Label::negative;
        else
            throw std::runtime_error("corpus row " + std::to_string(r) +
                                     ": sentiment must be positive or negative, got `" + cells[1] + "`");
        reviews.push_back({cells[0], label});
    }
    return reviews;
}

StopwordSet load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open stopword file: " + path);
    StopwordSet set;
    std::string line;
    while (std::getline(in, line)) {
        line = trim_ws(line);
        if (line.empty() || line[0] == '#') continue;
        set.insert(line);
    }
    if (set.empty()) throw std::runtime_error("stopword file is empty: " + path);
    return set;
}

namespace {

bool is_url_start(const std::string& s, std::size_t i) {
    static const std::string http = "http://", https = "https://";
    return s.compare(i, http.size(), http) == 0 || s.compare(i, https.size(), https) == 0;
}

// Deletes <...> spans and http(s):// runs. An unclosed '<' is left for the
// non-word pass to turn into a space.
std::string strip_html_and_urls(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        if (s[i] == '<') {
            std::size_t close = s.find('>', i + 1);
            if (close != std::string::npos) {
                i = close + 1;
                continue;
            }
        }
        if (is_url_start(s, i)) {
            while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
            continue;
        }
        out += s[i++];
    }
    return out;
}

}  // namespace

std::string clean_text(const std::string& raw, const CleanConfig& cfg) {
    std::string s = cfg.strip_html_urls ? strip_html_and_urls(raw) : raw;

    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char raw_c : s) {
        unsigned char uc = static_cast<unsigned char>(raw_c);
        char c = cfg.lowercase ? static_cast<char>(std::tolower(uc)) : raw_c;
        uc = static_cast<unsigned char>(c);
        if (uc >= 'a' && uc <= 'z') {
            if (pending_space && !out.empty()) out += ' ';
            pending_space = false;
            out += c;
        } else if (!cfg.lowercase && uc >= 'A' && uc <= 'Z') {
            if (pending_space && !out.empty()) out += ' ';
            pending_space = false;
            out += c;
        } else if (uc >= '0' && uc <= '9') {
            // digits deleted outright, no space left behind
        } else {
            // every other character acts as a separator
            pending_space = true;
        }
    }
    return out;
}

std::vector<std::string> tokenize(const std::string& cleaned) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < cleaned.size()) {
        std::size_t sp = cleaned.find(' ', i);
        if (sp == std::string::npos) sp = cleaned.size();
        if (sp > i) tokens.push_back(cleaned.substr(i, sp - i));
        i = sp + 1;
    }
    return tokens;
}

std::vector<std::string> filter_stopwords(const std::vector<std::string>& tokens,
                                          const StopwordSet& stopwords) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens)
        if (!stopwords.count(t)) out.push_back(t);
    return out;
}

std::vector<CleanedDoc> clean_corpus(const std::vector<RawReview>& raws, const CleanConfig& cfg,
                                     const StopwordSet& stopwords) {
    std::vector<CleanedDoc> docs;
    docs.reserve(raws.size());
    for (const auto& raw : raws) {
        CleanedDoc doc;
        doc.tokens = filter_stopwords(tokenize(clean_text(raw.text, cfg)), stopwords);
        doc.label = static_cast<int>(raw.label);
        docs.push_back(std::move(doc));
    }
    return docs;
}

CorpusSplit split_corpus(std::vector<CleanedDoc> docs) {
    const std::size_t n = docs.size();
    if (n < 10)
        throw std::runtime_error("corpus too small to split: " + std::to_string(n) +
                                 " documents, need at least 10");
    const std::size_t n_train = (n * 7) / 10;
    const std::size_t tail = n - n_train;
    const std::size_t n_valid = tail / 2;

    CorpusSplit split;
    split.train.assign(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.valid.assign(docs.begin() + static_cast<std::ptrdiff_t>(n_train),
                       docs.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
    split.test.assign(docs.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), docs.end());
    return split;
}

}  // namespace sentiment
