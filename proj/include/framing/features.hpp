#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace framing::features {

// Lowercases and splits on runs of non-alphanumeric code points (UTF-8 aware).
std::vector<std::string> tokenize(std::string_view text);

// Unigrams plus adjacent bigrams joined with '_'.
std::vector<std::string> ngrams(const std::vector<std::string>& tokens);

struct TermInfo {
    std::size_t index = 0;
    std::size_t doc_freq = 0;

    friend bool operator==(const TermInfo&, const TermInfo&) = default;
};

using TermMap = std::map<std::string, TermInfo, std::less<>>;

class Vocabulary {
public:
    Vocabulary() = default;
    Vocabulary(TermMap terms, std::size_t n_docs);

    std::size_t size() const { return terms_.size(); }
    std::size_t n_docs() const { return n_docs_; }
    const TermMap& terms() const { return terms_; }
    // -1 for out-of-vocabulary terms.
    long index_of(std::string_view term) const;
    double idf(std::size_t index) const { return idf_[index]; }

    // Digest of the canonical JSON form; model checkpoints store it.
    std::string hash() const;

    void save(const std::filesystem::path& path) const;
    static Vocabulary load(const std::filesystem::path& path);
    std::string to_json() const;
    static Vocabulary from_json(std::string_view text);

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.n_docs_ == b.n_docs_ && a.terms_ == b.terms_;
    }

private:
    TermMap terms_;
    std::vector<double> idf_;
    std::size_t n_docs_ = 0;
};

struct FitOptions {
    std::size_t min_df = 1;
    // An all-empty corpus yields an empty vocabulary (with a warning) unless strict.
    bool strict_empty = false;
};

// Throws Error on an empty corpus.
Vocabulary fit_vocabulary(const std::vector<std::string>& texts, const FitOptions& options = {},
                          std::vector<std::string>* warnings = nullptr);

// Row-compressed sparse matrix; column indices within a row are ascending.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}

    std::size_t rows() const { return row_start_.size() - 1; }
    std::size_t cols() const { return cols_; }
    std::size_t nonzeros() const { return values_.size(); }

    void add_row(std::span<const std::size_t> cols, std::span<const double> values);
    void add_dense_row(std::span<const double> values);

    std::span<const std::size_t> row_indices(std::size_t r) const {
        return {indices_.data() + row_start_[r], row_start_[r + 1] - row_start_[r]};
    }
    std::span<const double> row_values(std::size_t r) const {
        return {values_.data() + row_start_[r], row_start_[r + 1] - row_start_[r]};
    }

    FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
    std::vector<double> dense_row(std::size_t r) const;

private:
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_start_{0};
    std::vector<std::size_t> indices_;
    std::vector<double> values_;
};

// tf * idf with raw counts and idf = ln((1+N)/(1+df)) + 1, rows L2-normalised.
FeatureMatrix transform(const Vocabulary& vocab, const std::vector<std::string>& texts);

// Precomputed per-headline vectors (e.g. transformer sentence embeddings
// produced offline). File format: JSONL with {"id": ..., "vector": [...]}.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::map<std::string, std::vector<double>, std::less<>> vectors);

    static EmbeddingTable load(const std::filesystem::path& path);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    bool contains(std::string_view id) const { return vectors_.find(id) != vectors_.end(); }
    std::string hash() const;

    // Dense rows in the order of ids. Throws ValidationError for unknown ids.
    FeatureMatrix rows(const std::vector<std::string>& ids) const;

private:
    std::map<std::string, std::vector<double>, std::less<>> vectors_;
    std::size_t dim_ = 0;
};

}  // namespace framing::features
