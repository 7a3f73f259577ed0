#include "framing/features.hpp"

#include "framing/errors.hpp"
#include "framing/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace framing::features {

namespace {

// Decodes one code point; invalid bytes come back as U+FFFD and consume one byte.
char32_t next_code_point(std::string_view s, std::size_t& pos) {
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    unsigned char lead = byte(pos);
    if (lead < 0x80) {
        ++pos;
        return lead;
    }
    int extra = lead >= 0xF0 ? 3 : lead >= 0xE0 ? 2 : lead >= 0xC0 ? 1 : -1;
    if (extra < 0 || lead > 0xF4 || pos + static_cast<std::size_t>(extra) >= s.size()) {
        ++pos;
        return 0xFFFD;
    }
    char32_t cp = lead & (0x3F >> extra);
    for (int k = 1; k <= extra; ++k) {
        if ((byte(pos + k) & 0xC0) != 0x80) {
            ++pos;
            return 0xFFFD;
        }
        cp = (cp << 6) | (byte(pos + k) & 0x3F);
    }
    pos += static_cast<std::size_t>(extra) + 1;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Without a Unicode database, non-ASCII code points count as word characters
// unless they fall in a punctuation, symbol, or space block.
bool is_word_char(char32_t cp) {
    if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    if (cp <= 0xBF) return cp == 0xAA || cp == 0xB2 || cp == 0xB3 || cp == 0xB5 || cp == 0xB9 || cp == 0xBA;
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows, box drawing
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE6F) return false;
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
    if (cp >= 0xFF1A && cp <= 0xFF20) return false;
    if (cp >= 0xFF3B && cp <= 0xFF40) return false;
    if (cp >= 0xFF5B && cp <= 0xFF65) return false;
    if (cp == 0xFFFD || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;  // emoji and pictographs
    return true;
}

char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp < 0x80) return cp;
    if ((cp >= 0xC0 && cp <= 0xDE && cp != 0xD7)) return cp + 32;
    if (cp >= 0x100 && cp <= 0x17F && cp != 0x130 && cp != 0x131 && cp != 0x138 && cp != 0x149 && cp != 0x17F) {
        // Latin Extended-A alternates upper/lower, with the parity flipping at U+0139..U+0148 and U+0179..U+017E.
        bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
        bool is_upper = odd_upper ? (cp % 2 == 1) : (cp % 2 == 0);
        return is_upper ? cp + 1 : cp;
    }
    if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;  // Greek
    if (cp >= 0x410 && cp <= 0x42F) return cp + 32;                  // Cyrillic
    if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
    return cp;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t pos = 0;
    while (pos < text.size()) {
        char32_t cp = next_code_point(text, pos);
        if (is_word_char(cp)) {
            append_utf8(current, to_lower(cp));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens) {
    std::vector<std::string> out(tokens);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) out.push_back(tokens[i] + "_" + tokens[i + 1]);
    return out;
}

Vocabulary::Vocabulary(TermMap terms, std::size_t n_docs)
    : terms_(std::move(terms)), n_docs_(n_docs) {
    idf_.assign(terms_.size(), 0.0);
    std::vector<bool> seen(terms_.size(), false);
    for (const auto& [term, info] : terms_) {
        if (info.index >= terms_.size() || seen[info.index])
            throw ValidationError("term_to_index", "vocabulary indices must be dense and unique");
        if (info.doc_freq < 1) throw ValidationError("doc_freq", "doc_freq must be at least 1 for " + term);
        seen[info.index] = true;
        idf_[info.index] = std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + static_cast<double>(info.doc_freq))) + 1.0;
    }
}

long Vocabulary::index_of(std::string_view term) const {
    auto it = terms_.find(term);
    return it == terms_.end() ? -1 : static_cast<long>(it->second.index);
}

std::string Vocabulary::to_json() const {
    nlohmann::json j;
    j["n_docs"] = n_docs_;
    nlohmann::json terms = nlohmann::json::object();
    for (const auto& [term, info] : terms_) terms[term] = {{"index", info.index}, {"doc_freq", info.doc_freq}};
    j["terms"] = std::move(terms);
    return j.dump();
}

Vocabulary Vocabulary::from_json(std::string_view text) {
    try {
        auto j = nlohmann::json::parse(text);
        TermMap terms;
        for (const auto& [term, info] : j.at("terms").items())
            terms.emplace(term, TermInfo{info.at("index").get<std::size_t>(), info.at("doc_freq").get<std::size_t>()});
        return Vocabulary(std::move(terms), j.at("n_docs").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("vocabulary: ") + e.what());
    }
}

std::string Vocabulary::hash() const { return fnv1a_hex(to_json()); }

void Vocabulary::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_json() << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

Vocabulary fit_vocabulary(const std::vector<std::string>& texts, const FitOptions& options,
                          std::vector<std::string>* warnings) {
    if (texts.empty()) throw Error("cannot fit a vocabulary on an empty corpus");
    std::map<std::string, std::size_t> df;
    for (const auto& text : texts) {
        auto grams = ngrams(tokenize(text));
        std::set<std::string> unique(grams.begin(), grams.end());
        for (const auto& g : unique) ++df[g];
    }
    TermMap terms;
    std::size_t next = 0;
    for (const auto& [term, count] : df)
        if (count >= options.min_df) terms.emplace(term, TermInfo{next++, count});
    if (terms.empty()) {
        if (options.strict_empty) throw Error("vocabulary is empty after fitting");
        if (warnings) warnings->push_back("fitted vocabulary is empty");
    }
    return Vocabulary(std::move(terms), texts.size());
}

void FeatureMatrix::add_row(std::span<const std::size_t> cols, std::span<const double> values) {
    if (cols.size() != values.size()) throw ShapeError("row index/value length mismatch");
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] >= cols_) throw ShapeError("column index out of range");
        if (i > 0 && cols[i] <= cols[i - 1]) throw ShapeError("row indices must be strictly ascending");
        if (!std::isfinite(values[i])) throw ShapeError("feature weights must be finite");
    }
    indices_.insert(indices_.end(), cols.begin(), cols.end());
    values_.insert(values_.end(), values.begin(), values.end());
    row_start_.push_back(values_.size());
}

void FeatureMatrix::add_dense_row(std::span<const double> values) {
    if (values.size() != cols_) throw ShapeError("dense row width does not match the matrix");
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    for (std::size_t c = 0; c < values.size(); ++c) {
        if (values[c] != 0.0) {
            cols.push_back(c);
            vals.push_back(values[c]);
        }
    }
    add_row(cols, vals);
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
    FeatureMatrix out(cols_);
    for (std::size_t r : rows) {
        if (r >= this->rows()) throw ShapeError("row index out of range");
        out.indices_.insert(out.indices_.end(), row_indices(r).begin(), row_indices(r).end());
        out.values_.insert(out.values_.end(), row_values(r).begin(), row_values(r).end());
        out.row_start_.push_back(out.values_.size());
    }
    return out;
}

std::vector<double> FeatureMatrix::dense_row(std::size_t r) const {
    std::vector<double> out(cols_, 0.0);
    auto idx = row_indices(r);
    auto val = row_values(r);
    for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = val[i];
    return out;
}

FeatureMatrix transform(const Vocabulary& vocab, const std::vector<std::string>& texts) {
    FeatureMatrix m(vocab.size());
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    for (const auto& text : texts) {
        std::map<std::size_t, double> counts;
        for (const auto& g : ngrams(tokenize(text)))
            if (long idx = vocab.index_of(g); idx >= 0) counts[static_cast<std::size_t>(idx)] += 1.0;
        cols.clear();
        vals.clear();
        double norm2 = 0.0;
        for (const auto& [col, tf] : counts) {
            double w = tf * vocab.idf(col);
            cols.push_back(col);
            vals.push_back(w);
            norm2 += w * w;
        }
        if (norm2 > 0.0) {
            double inv = 1.0 / std::sqrt(norm2);
            for (double& v : vals) v *= inv;
        }
        m.add_row(cols, vals);
    }
    return m;
}


EmbeddingTable::EmbeddingTable(std::map<std::string, std::vector<double>, std::less<>> vectors)
    : vectors_(std::move(vectors)) {
    for (const auto& [id, v] : vectors_) {
        if (dim_ == 0) dim_ = v.size();
        if (v.size() != dim_ || dim_ == 0) throw ValidationError("vector", "embedding for " + id + " has the wrong width");
        for (double x : v)
            if (!std::isfinite(x)) throw ValidationError("vector", "embedding for " + id + " is not finite");
    }
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::map<std::string, std::vector<double>, std::less<>> vectors;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            auto id = j.at("id").get<std::string>();
            if (!vectors.emplace(id, j.at("vector").get<std::vector<double>>()).second)
                throw ValidationError("id", "duplicate embedding id " + id);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return EmbeddingTable(std::move(vectors));
}

std::string EmbeddingTable::hash() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, v] : vectors_) j[id] = v;
    return fnv1a_hex(j.dump());
}

FeatureMatrix EmbeddingTable::rows(const std::vector<std::string>& ids) const {
    FeatureMatrix m(dim_);
    for (const auto& id : ids) {
        auto it = vectors_.find(id);
        if (it == vectors_.end()) throw ValidationError("id", "no embedding for headline " + id);
        m.add_dense_row(it->second);
    }
    return m;
}

}  // namespace framing::features
