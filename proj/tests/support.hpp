#pragma once

#include "framing/corpus.hpp"
#include "framing/ingest.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace framing::testing {

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

// Cue words planted per class; a headline carries one cue for each task.
const std::vector<std::vector<std::string>>& perception_cues();
const std::vector<std::vector<std::string>>& accident_cues();
const std::vector<std::string>& filler_words();

struct SyntheticOptions {
    std::size_t n = 200;
    std::uint64_t seed = 1;
    double perception_cue_prob = 1.0;  // chance the perception cue is present
    double accident_cue_prob = 1.0;    // chance the accident cue is present
    // Probability that the accident label follows the perception label
    // (negative -> cyclist fault, neutral -> not accident, positive -> other fault).
    double correlation = 0.0;
    std::size_t min_fillers = 2;
    std::size_t max_fillers = 5;
    bool annotators = false;  // add two annotator label sets (the second disagrees sometimes)
};

std::vector<corpus::AnnotatedHeadline> synthetic_corpus(const SyntheticOptions& options);

// Two-proportion tail oracle: 2 * (1/2 - integral_0^|z| phi), by adaptive Gauss-Kronrod in long double.
long double two_sided_p_oracle(long double z);

// Planted case-study corpus. Every (site, subject) cell gets `per_cell`
// headlines, of which round(rate * per_cell) are predicted as accidents.
struct PlantedCell {
    std::string domain;
    corpus::Subject subject = corpus::Subject::Cyclist;
    std::size_t n = 0;
    std::size_t accidents = 0;
    std::size_t other_fault = 0;  // among accidents
    std::size_t cyclist_fault = 0;
    std::size_t male = 0;          // headlines carrying "he"
    std::size_t female = 0;        // headlines carrying "she"
    std::size_t male_accidents = 0;
    std::size_t female_accidents = 0;
    std::size_t male_other_fault = 0;
    std::size_t female_other_fault = 0;
};

struct PlantedScrape {
    std::vector<corpus::Headline> headlines;
    std::map<std::string, corpus::LabelSet> predictions;
};

PlantedScrape planted_scrape(const std::vector<PlantedCell>& cells, std::uint64_t seed);

// RSS items for a keyword, titled "<text> - <Publisher>" with a <source url>.
std::vector<ingest::RawItem> fixture_items(const std::string& keyword, std::size_t n, std::uint64_t seed,
                                           const std::vector<std::string>& domains);

// Inputs for a full CLI run: fixture feeds for every default keyword, a
// synthetic labelled corpus and a small, fast config referencing both.
struct PipelineInputs {
    std::filesystem::path config;
    std::filesystem::path fixtures;
    std::filesystem::path labeled;
};

PipelineInputs write_pipeline_inputs(const std::filesystem::path& dir, std::size_t labeled_n = 300);

// Runs the framing binary with the given arguments; returns its exit code.
// stdout and stderr go to the files when given.
int run_cli(const std::string& args, const std::filesystem::path& stdout_file = {},
            const std::filesystem::path& stderr_file = {});

}  // namespace framing::testing
