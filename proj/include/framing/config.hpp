#pragma once

#include "framing/analysis.hpp"
#include "framing/ingest.hpp"
#include "framing/training.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace framing::cli {

struct PathsConfig {
    // Inputs; relative paths resolve against the config file's directory.
    std::optional<std::filesystem::path> corpus;          // headlines to analyze (default <out>/corpus.jsonl)
    std::optional<std::filesystem::path> labeled_corpus;  // annotated corpus for prepare/train/evaluate
    std::optional<std::filesystem::path> eval_corpus;     // evaluate target (default labeled_corpus)
    std::optional<std::filesystem::path> split_plan;
    std::optional<std::filesystem::path> site_map;        // default: built-in assignments
    std::optional<std::filesystem::path> embeddings;
    std::optional<std::filesystem::path> checkpoint;      // default <out>/model.json
    std::optional<std::filesystem::path> vocab;           // default <out>/vocab.json
};

struct ScrapeConfig {
    std::vector<std::string> keywords{"cycling", "cyclist", "bike", "motorcycling", "motorcycle"};
    std::string base_url = std::string(ingest::kGoogleNewsTemplate);
    std::size_t max_items = 100;
    std::int64_t politeness_delay_ms = 1000;
    int max_retries = 3;
    std::int64_t initial_backoff_ms = 500;
    std::size_t max_in_flight = 4;
    std::optional<std::filesystem::path> fixtures;
};

struct SampleConfig {
    std::size_t size = 0;  // 0 disables the annotation subsample
    std::vector<std::string> keywords = ingest::kAccidentKeywords;
    ingest::KeywordMatch match = ingest::KeywordMatch::Prefix;
};

struct SplitConfig {
    std::size_t folds = 5;
    double test_fraction = 0.2;
    double dev_fraction = 0.1;
};

struct SvmConfig {
    std::vector<double> c_grid;
    double tolerance = 1e-3;
    std::size_t max_passes = 1000;
};

struct RunConfig {
    std::uint64_t seed = 13;
    std::size_t threads = 1;
    PathsConfig paths;
    ScrapeConfig scrape;
    SampleConfig sample;
    SplitConfig split;
    std::size_t min_df = 1;
    std::vector<std::string> models{"uniform", "stratified", "svm", "mt", "mtlpt", "mt_mtlpt"};
    SvmConfig svm;
    models::TrainConfig network;
    std::string final_model = "mt_mtlpt";
    analysis::CaseStudyConfig analysis;

    nlohmann::json to_json() const;
};

// Unknown keys, wrong types and invalid values throw ConfigError. Relative
// input paths are resolved against base_dir.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace framing::cli
