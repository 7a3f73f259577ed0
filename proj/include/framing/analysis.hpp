#pragma once

#include "framing/corpus.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace framing::analysis {

enum class SiteCategory { DomainSpecific, GeneralNews };
std::string_view to_string(SiteCategory c);
SiteCategory site_category_from_string(std::string_view s);

struct SiteEntry {
    SiteCategory category = SiteCategory::GeneralNews;
    std::string note;
};

// domain -> category. Text format: one "domain<TAB>category[<TAB>note]" per
// line, '#' starts a comment, category is domain_specific or general_news.
class SiteCategoryMap {
public:
    static SiteCategoryMap load(const std::filesystem::path& path);
    static SiteCategoryMap parse(std::string_view text);
    // Assignments for the outlets named as examples in the source study.
    static SiteCategoryMap builtin();

    void set(std::string domain, SiteEntry entry);
    const SiteEntry* find(std::string_view domain) const;
    const std::map<std::string, SiteEntry, std::less<>>& entries() const { return entries_; }
    std::string to_text() const;

private:
    std::map<std::string, SiteEntry, std::less<>> entries_;
};

enum class GenderBucket { Male, Female, Both, None };
std::string_view to_string(GenderBucket g);

// Case-insensitive whole-word match against he/his/him and she/her/hers.
GenderBucket classify_gender(std::string_view text);

struct Proportion {
    double value = 0.0;
    std::size_t count = 0;  // numerator
    std::size_t n = 0;      // denominator
};

// Fraction of the group predicted as any accident class. Throws Error on an
// empty group or when the two lists differ in length.
Proportion accident_proportion(const std::vector<corpus::Headline>& headlines,
                               const std::vector<corpus::LabelSet>& predictions);

// Among accident-predicted headlines, the fraction predicted OtherFault.
Proportion not_at_fault_proportion(const std::vector<corpus::Headline>& headlines,
                                   const std::vector<corpus::LabelSet>& predictions);

// Upper tail of the standard normal, P(Z > x).
double normal_sf(double x);

struct ZTest {
    double z = 0.0;
    double p_value = 1.0;  // two-sided
};

// Pooled two-proportion test. Throws Error when a pooled proportion of 0 or 1
// leaves no variance, or on invalid inputs.
ZTest two_proportion_z_test(double p1, std::size_t n1, double p2, std::size_t n2);

// Domains whose headline count is strictly greater than min_count in every
// required subject group (both groups when require_both, else either). Sorted.
std::vector<std::string> site_frequency_filter(const std::vector<corpus::Headline>& headlines, std::size_t min_count,
                                               bool require_both);

struct CaseStudyConfig {
    std::size_t category_min_count = 100;
    std::size_t site_min_count = 30;
    double significance = 0.05;

    nlohmann::json to_json() const;
};

struct GroupRow {
    std::string group;  // site category or gender bucket
    corpus::Subject subject = corpus::Subject::Cyclist;
    std::size_t n = 0;
    std::size_t accident = 0;
    std::size_t cyclist_fault = 0;
    std::size_t unknown_fault = 0;
    std::size_t other_fault = 0;
    std::optional<double> accident_proportion;       // accident / n
    std::optional<double> not_accident_proportion;   // 1 - accident_proportion
    std::optional<double> at_fault_proportion;       // cyclist_fault / accident
    std::optional<double> not_at_fault_proportion;   // other_fault / accident
    bool empty() const { return n == 0; }
};

struct Comparison {
    std::string measure;
    std::string group1, group2;
    double p1 = 0.0, p2 = 0.0;
    std::size_t n1 = 0, n2 = 0;
    std::optional<ZTest> test;  // nullopt when a group is empty or the variance degenerates
    std::string note;
};

struct SiteRow {
    std::string domain;
    std::size_t n_cyclist = 0, n_motorcyclist = 0;
    double p_cyclist = 0.0, p_motorcyclist = 0.0;
    std::optional<ZTest> test;
    bool significant = false;
};

struct GenderSummary {
    corpus::Subject subject = corpus::Subject::Cyclist;
    std::map<GenderBucket, std::size_t> counts;
    std::optional<double> female_to_male_ratio;
    std::size_t excluded_both = 0;
};

struct CaseStudyReport {
    CaseStudyConfig config;
    std::vector<std::string> category_domains;
    std::vector<GroupRow> category_rows;     // accident and fault proportions by category x subject
    std::vector<Comparison> category_tests;
    std::vector<SiteRow> site_rows;          // sorted by ascending p-value
    std::vector<GroupRow> gender_rows;       // Male / Female by subject
    std::vector<Comparison> gender_tests;
    std::vector<GenderSummary> gender_summary;

    nlohmann::json to_json() const;
};

// predictions maps headline id -> predicted labels and must cover every headline.
// Throws ValidationError("site_map", ...) listing domains that pass the category
// filter but have no site-map entry.
CaseStudyReport build_case_study_report(const std::vector<corpus::Headline>& headlines,
                                        const std::map<std::string, corpus::LabelSet>& predictions,
                                        const SiteCategoryMap& site_map, const CaseStudyConfig& config);

// Writes report.json and the per-figure CSV files under dir/case_study and SVG
// charts under dir/charts. Returns the paths written, in a fixed order.
std::vector<std::filesystem::path> write_case_study(const CaseStudyReport& report, const std::filesystem::path& dir,
                                                    const nlohmann::json& run_config);

// Predictions JSONL: {"id", "perception", "accident"} per line.
void save_predictions(const std::vector<std::string>& ids, const std::vector<corpus::LabelSet>& labels,
                      const std::filesystem::path& path);
std::map<std::string, corpus::LabelSet> load_predictions(const std::filesystem::path& path);

}  // namespace framing::analysis
