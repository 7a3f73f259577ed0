#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace framing::corpus {

enum class Subject { Cyclist, Motorcyclist };
enum class Perception { Negative, Neutral, Positive };
enum class Accident { NotAccident, CyclistFault, UnknownFault, OtherFault };
// Annotation-level fault, only meaningful when the headline is accident related.
enum class Fault { Cyclist, Unknown, Other };

inline constexpr std::size_t kPerceptionClasses = 3;
inline constexpr std::size_t kAccidentClasses = 4;

std::string_view to_string(Subject s);
std::string_view to_string(Perception p);
std::string_view to_string(Accident a);
std::string_view to_string(Fault f);
Subject subject_from_string(std::string_view s);
Perception perception_from_string(std::string_view s);
Accident accident_from_string(std::string_view s);
Fault fault_from_string(std::string_view s);

// Display names used in report columns.
std::string_view display_name(Perception p);
std::string_view display_name(Accident a);

struct Headline {
    std::string id;
    std::string text;
    std::string source_domain;
    Subject subject = Subject::Cyclist;
    std::string query_keyword;
    std::optional<std::string> published;

    friend bool operator==(const Headline&, const Headline&) = default;
};

struct LabelSet {
    Perception perception = Perception::Neutral;
    Accident accident = Accident::NotAccident;

    friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

// (Related, Fault) <-> 4-class accident. related == false requires no fault.
Accident accident_from_annotation(bool related, std::optional<Fault> fault);
std::pair<bool, std::optional<Fault>> annotation_from_accident(Accident a);

struct AnnotatedHeadline {
    Headline headline;
    LabelSet gold;
    std::optional<std::vector<LabelSet>> annotator_labels;

    friend bool operator==(const AnnotatedHeadline&, const AnnotatedHeadline&) = default;
};

// Throws ValidationError naming the offending field.
void validate(const Headline& h);
// Also checks id uniqueness across the list.
void validate(const std::vector<Headline>& headlines);
void validate(const std::vector<AnnotatedHeadline>& records);

// Labelled corpus I/O. Each line is one JSON object; see README for the schema.
std::vector<AnnotatedHeadline> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::vector<AnnotatedHeadline>& records, const std::filesystem::path& path);

// Unlabelled variant: same schema with perception/accident null. Labels present
// in the file are ignored.
std::vector<Headline> load_headlines(const std::filesystem::path& path);
void save_headlines(const std::vector<Headline>& headlines, const std::filesystem::path& path);

std::string to_json_line(const AnnotatedHeadline& record);
std::string to_json_line(const Headline& headline);
AnnotatedHeadline annotated_from_json_line(std::string_view line);

struct SplitFold {
    std::vector<std::string> train;
    std::vector<std::string> dev;
    std::vector<std::string> test;

    friend bool operator==(const SplitFold&, const SplitFold&) = default;
};

struct SplitPlan {
    std::vector<SplitFold> folds;
    std::uint64_t seed = 0;
    std::size_t n_folds = 0;
    double test_fraction = 0.2;
    double dev_fraction = 0.1;

    friend bool operator==(const SplitPlan&, const SplitPlan&) = default;
};

// Shuffle-split: every fold independently reshuffles all ids.
SplitPlan make_split_plan(const std::vector<std::string>& ids, std::size_t n_folds,
                          double test_fraction, double dev_fraction, std::uint64_t seed);

void save_split_plan(const SplitPlan& plan, const std::filesystem::path& path);
SplitPlan load_split_plan(const std::filesystem::path& path);

struct SubjectCounts {
    std::array<std::size_t, kPerceptionClasses> perception{};
    std::array<std::size_t, kAccidentClasses> accident{};
    std::size_t records = 0;

    std::size_t related_yes() const { return records - accident[0]; }
    std::size_t related_no() const { return accident[0]; }
    std::size_t fault_total() const { return accident[1] + accident[2] + accident[3]; }
};

struct SchemaCounts {
    SubjectCounts cyclist;
    SubjectCounts motorcyclist;
    SubjectCounts total;
};

SchemaCounts schema_counts(const std::vector<AnnotatedHeadline>& records);

// Consistency of a count table: fault classes must sum to the related=yes
// total and perception classes to the record count. Returns the list of
// violated checks (empty when consistent).
std::vector<std::string> check_counts(const SubjectCounts& counts);

}  // namespace framing::corpus
