#include "framing/corpus.hpp"

#include "framing/errors.hpp"
#include "framing/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

namespace framing::corpus {

using nlohmann::json;

namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(std::string_view s, const std::array<std::string_view, N>& names, const char* field) {
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == s) return static_cast<Enum>(i);
    throw ValidationError(field, std::string("invalid value '") + std::string(s) + "' for field " + field);
}

constexpr std::array<std::string_view, 2> kSubjectNames{"cyclist", "motorcyclist"};
constexpr std::array<std::string_view, 3> kPerceptionNames{"negative", "neutral", "positive"};
constexpr std::array<std::string_view, 4> kAccidentNames{"not_accident", "cyclist_fault", "unknown_fault",
                                                         "other_fault"};
constexpr std::array<std::string_view, 3> kFaultNames{"cyclist", "unknown", "other"};

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string required_string(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || !it->is_string())
        throw ValidationError(field, std::string("missing or non-string field ") + field);
    return it->get<std::string>();
}

json labels_to_json(const LabelSet& l) {
    return json{{"perception", to_string(l.perception)}, {"accident", to_string(l.accident)}};
}

LabelSet labels_from_json(const json& j) {
    LabelSet l;
    l.perception = perception_from_string(required_string(j, "perception"));
    auto acc = j.find("accident");
    bool has_pair = j.contains("related");
    if (acc != j.end() && !acc->is_null()) {
        if (!acc->is_string()) throw ValidationError("accident", "non-string field accident");
        l.accident = accident_from_string(acc->get<std::string>());
    }
    if (has_pair) {
        const json& rel = j.at("related");
        if (!rel.is_string() || (rel != "yes" && rel != "no"))
            throw ValidationError("related", "field related must be \"yes\" or \"no\"");
        std::optional<Fault> fault;
        if (auto f = j.find("fault"); f != j.end() && !f->is_null()) {
            if (!f->is_string()) throw ValidationError("fault", "non-string field fault");
            fault = fault_from_string(f->get<std::string>());
        }
        Accident from_pair = accident_from_annotation(rel == "yes", fault);
        if (acc != j.end() && !acc->is_null() && from_pair != l.accident)
            throw ValidationError("accident", "accident disagrees with related/fault");
        l.accident = from_pair;
    } else if (acc == j.end() || acc->is_null()) {
        throw ValidationError("accident", "missing field accident");
    }
    return l;
}

json headline_to_json(const Headline& h) {
    json j;
    j["id"] = h.id;
    j["text"] = h.text;
    j["source_domain"] = h.source_domain;
    j["subject"] = to_string(h.subject);
    j["query_keyword"] = h.query_keyword;
    j["published"] = h.published ? json(*h.published) : json(nullptr);
    return j;
}

Headline headline_from_json(const json& j) {
    Headline h;
    h.id = required_string(j, "id");
    h.text = required_string(j, "text");
    h.source_domain = required_string(j, "source_domain");
    h.subject = subject_from_string(required_string(j, "subject"));
    h.query_keyword = required_string(j, "query_keyword");
    if (auto p = j.find("published"); p != j.end() && !p->is_null()) {
        if (!p->is_string()) throw ValidationError("published", "non-string field published");
        h.published = p->get<std::string>();
    }
    return h;
}

json parse_line(std::string_view line, std::size_t line_no) {
    try {
        json j = json::parse(line);
        if (!j.is_object()) throw ParseError("line " + std::to_string(line_no) + ": expected a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
}

template <typename F>
void for_each_line(const std::filesystem::path& path, F&& f) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank(line)) continue;
        json j = parse_line(line, line_no);
        try {
            f(j);
        } catch (const ValidationError& e) {
            throw ValidationError(e.field(), "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

std::size_t floor_count(std::size_t n, double fraction) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
}

}  // namespace

std::string_view to_string(Subject s) { return kSubjectNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(Perception p) { return kPerceptionNames[static_cast<std::size_t>(p)]; }
std::string_view to_string(Accident a) { return kAccidentNames[static_cast<std::size_t>(a)]; }
std::string_view to_string(Fault f) { return kFaultNames[static_cast<std::size_t>(f)]; }
Subject subject_from_string(std::string_view s) { return parse_enum<Subject>(s, kSubjectNames, "subject"); }
Perception perception_from_string(std::string_view s) {
    return parse_enum<Perception>(s, kPerceptionNames, "perception");
}
Accident accident_from_string(std::string_view s) { return parse_enum<Accident>(s, kAccidentNames, "accident"); }
Fault fault_from_string(std::string_view s) { return parse_enum<Fault>(s, kFaultNames, "fault"); }

std::string_view display_name(Perception p) {
    static constexpr std::array<std::string_view, 3> names{"Negative", "Neutral", "Positive"};
    return names[static_cast<std::size_t>(p)];
}

std::string_view display_name(Accident a) {
    static constexpr std::array<std::string_view, 4> names{"Not Accident", "Cyclist", "Unknown", "Other"};
    return names[static_cast<std::size_t>(a)];
}

Accident accident_from_annotation(bool related, std::optional<Fault> fault) {
    if (!related) {
        if (fault) throw ValidationError("fault", "fault given for a headline not related to an accident");
        return Accident::NotAccident;
    }
    if (!fault) throw ValidationError("fault", "accident-related headline requires a fault");
    switch (*fault) {
        case Fault::Cyclist: return Accident::CyclistFault;
        case Fault::Unknown: return Accident::UnknownFault;
        case Fault::Other: return Accident::OtherFault;
    }
    throw ValidationError("fault", "invalid fault");
}

std::pair<bool, std::optional<Fault>> annotation_from_accident(Accident a) {
    switch (a) {
        case Accident::NotAccident: return {false, std::nullopt};
        case Accident::CyclistFault: return {true, Fault::Cyclist};
        case Accident::UnknownFault: return {true, Fault::Unknown};
        case Accident::OtherFault: return {true, Fault::Other};
    }
    throw ValidationError("accident", "invalid accident class");
}

void validate(const Headline& h) {
    if (h.id.empty()) throw ValidationError("id", "id must be nonempty");
    if (blank(h.text)) throw ValidationError("text", "text must be nonempty after trimming (id " + h.id + ")");
}

void validate(const std::vector<Headline>& headlines) {
    std::unordered_set<std::string_view> seen;
    for (const auto& h : headlines) {
        validate(h);
        if (!seen.insert(h.id).second) throw ValidationError("id", "duplicate id " + h.id);
    }
}

void validate(const std::vector<AnnotatedHeadline>& records) {
    std::unordered_set<std::string_view> seen;
    for (const auto& r : records) {
        validate(r.headline);
        if (!seen.insert(r.headline.id).second) throw ValidationError("id", "duplicate id " + r.headline.id);
    }
}

std::string to_json_line(const Headline& headline) {
    json j = headline_to_json(headline);
    j["perception"] = nullptr;
    j["accident"] = nullptr;
    j["annotators"] = nullptr;
    return j.dump();
}

std::string to_json_line(const AnnotatedHeadline& record) {
    json j = headline_to_json(record.headline);
    j["perception"] = to_string(record.gold.perception);
    j["accident"] = to_string(record.gold.accident);
    if (record.annotator_labels) {
        json arr = json::array();
        for (const auto& l : *record.annotator_labels) arr.push_back(labels_to_json(l));
        j["annotators"] = std::move(arr);
    } else {
        j["annotators"] = nullptr;
    }
    return j.dump();
}

namespace {

AnnotatedHeadline annotated_from_json(const json& j) {
    AnnotatedHeadline r;
    r.headline = headline_from_json(j);
    validate(r.headline);
    if (!j.contains("perception") || j.at("perception").is_null())
        throw ValidationError("perception", "missing field perception");
    r.gold = labels_from_json(j);
    if (auto a = j.find("annotators"); a != j.end() && !a->is_null()) {
        if (!a->is_array()) throw ValidationError("annotators", "annotators must be an array or null");
        std::vector<LabelSet> labels;
        for (const auto& entry : *a) {
            if (!entry.is_object()) throw ValidationError("annotators", "annotator entry must be an object");
            if (auto ref = entry.find("id"); ref != entry.end() && *ref != r.headline.id)
                throw ValidationError("annotators", "annotator entry references a different headline id");
            labels.push_back(labels_from_json(entry));
        }
        r.annotator_labels = std::move(labels);
    }
    return r;
}

}  // namespace

AnnotatedHeadline annotated_from_json_line(std::string_view line) { return annotated_from_json(parse_line(line, 1)); }

std::vector<AnnotatedHeadline> load_corpus(const std::filesystem::path& path) {
    std::vector<AnnotatedHeadline> out;
    std::unordered_set<std::string> seen;
    for_each_line(path, [&](const json& j) {
        AnnotatedHeadline r = annotated_from_json(j);
        if (!seen.insert(r.headline.id).second) throw ValidationError("id", "duplicate id " + r.headline.id);
        out.push_back(std::move(r));
    });
    return out;
}

void save_corpus(const std::vector<AnnotatedHeadline>& records, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (const auto& r : records) out << to_json_line(r) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Headline> load_headlines(const std::filesystem::path& path) {
    std::vector<Headline> out;
    std::unordered_set<std::string> seen;
    for_each_line(path, [&](const json& j) {
        Headline h = headline_from_json(j);
        validate(h);
        if (!seen.insert(h.id).second) throw ValidationError("id", "duplicate id " + h.id);
        out.push_back(std::move(h));
    });
    return out;
}

void save_headlines(const std::vector<Headline>& headlines, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (const auto& h : headlines) out << to_json_line(h) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

SplitPlan make_split_plan(const std::vector<std::string>& ids, std::size_t n_folds, double test_fraction,
                          double dev_fraction, std::uint64_t seed) {
    if (n_folds < 1) throw SizingError("n_folds must be at least 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw SizingError("test_fraction must lie in (0, 1)");
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) throw SizingError("dev_fraction must lie in (0, 1)");
    std::set<std::string_view> unique(ids.begin(), ids.end());
    if (unique.size() != ids.size()) throw SizingError("split ids must be unique");

    const std::size_t n = ids.size();
    const std::size_t n_test = std::max<std::size_t>(1, floor_count(n, test_fraction));
    const std::size_t n_rest = n > n_test ? n - n_test : 0;
    const std::size_t n_dev = std::max<std::size_t>(1, floor_count(n_rest, dev_fraction));
    if (n_rest < n_dev + 1)
        throw SizingError("too few ids (" + std::to_string(n) + ") for a nonempty train/dev/test split");

    SplitPlan plan;
    plan.seed = seed;
    plan.n_folds = n_folds;
    plan.test_fraction = test_fraction;
    plan.dev_fraction = dev_fraction;
    Rng rng(seed);
    for (std::size_t f = 0; f < n_folds; ++f) {
        std::vector<std::string> order = ids;
        rng.shuffle(std::span<std::string>(order));
        SplitFold fold;
        fold.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
        auto rest = order.begin() + static_cast<std::ptrdiff_t>(n_test);
        fold.dev.assign(rest, rest + static_cast<std::ptrdiff_t>(n_dev));
        fold.train.assign(rest + static_cast<std::ptrdiff_t>(n_dev), order.end());
        plan.folds.push_back(std::move(fold));
    }
    return plan;
}

void save_split_plan(const SplitPlan& plan, const std::filesystem::path& path) {
    json j;
    j["seed"] = plan.seed;
    j["n_folds"] = plan.n_folds;
    j["test_fraction"] = plan.test_fraction;
    j["dev_fraction"] = plan.dev_fraction;
    j["folds"] = json::array();
    for (const auto& f : plan.folds) j["folds"].push_back({{"train", f.train}, {"dev", f.dev}, {"test", f.test}});
    auto out = open_out(path);
    out << j.dump(1) << '\n';
}

SplitPlan load_split_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        json j = json::parse(in);
        SplitPlan plan;
        plan.seed = j.at("seed").get<std::uint64_t>();
        plan.n_folds = j.at("n_folds").get<std::size_t>();
        plan.test_fraction = j.at("test_fraction").get<double>();
        plan.dev_fraction = j.at("dev_fraction").get<double>();
        for (const auto& f : j.at("folds"))
            plan.folds.push_back({f.at("train").get<std::vector<std::string>>(),
                                  f.at("dev").get<std::vector<std::string>>(),
                                  f.at("test").get<std::vector<std::string>>()});
        if (plan.folds.size() != plan.n_folds) throw ParseError("split plan fold count mismatch");
        return plan;
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

SchemaCounts schema_counts(const std::vector<AnnotatedHeadline>& records) {
    SchemaCounts c;
    for (const auto& r : records) {
        SubjectCounts& s = r.headline.subject == Subject::Cyclist ? c.cyclist : c.motorcyclist;
        for (SubjectCounts* t : {&s, &c.total}) {
            ++t->records;
            ++t->perception[static_cast<std::size_t>(r.gold.perception)];
            ++t->accident[static_cast<std::size_t>(r.gold.accident)];
        }
    }
    return c;
}

std::vector<std::string> check_counts(const SubjectCounts& counts) {
    std::vector<std::string> problems;
    std::size_t perception_sum = 0;
    for (auto v : counts.perception) perception_sum += v;
    if (perception_sum != counts.records)
        problems.push_back("perception classes sum to " + std::to_string(perception_sum) + " but there are " +
                           std::to_string(counts.records) + " records");
    if (counts.accident[0] <= counts.records && counts.fault_total() != counts.related_yes())
        problems.push_back("fault classes sum to " + std::to_string(counts.fault_total()) +
                           " but related=yes totals " + std::to_string(counts.related_yes()));
    if (counts.accident[0] > counts.records) problems.push_back("related=no exceeds the record count");
    return problems;
}

}  // namespace framing::corpus
