#include "framing/analysis.hpp"

#include "framing/charts.hpp"
#include "framing/errors.hpp"
#include "framing/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace framing::analysis {

using corpus::Accident;
using corpus::Headline;
using corpus::LabelSet;
using corpus::Subject;
using nlohmann::json;

std::string_view to_string(SiteCategory c) {
    return c == SiteCategory::DomainSpecific ? "domain_specific" : "general_news";
}

SiteCategory site_category_from_string(std::string_view s) {
    if (s == "domain_specific") return SiteCategory::DomainSpecific;
    if (s == "general_news") return SiteCategory::GeneralNews;
    throw ValidationError("category", "unknown site category '" + std::string(s) + "'");
}

std::string_view to_string(GenderBucket g) {
    switch (g) {
        case GenderBucket::Male: return "male";
        case GenderBucket::Female: return "female";
        case GenderBucket::Both: return "both";
        case GenderBucket::None: return "none";
    }
    return "none";
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmt_p(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string opt(const std::optional<double>& v) { return v ? fmt(*v) : "empty"; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

bool is_accident(const LabelSet& l) { return l.accident != Accident::NotAccident; }

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

SiteCategoryMap SiteCategoryMap::parse(std::string_view text) {
    SiteCategoryMap map;
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::vector<std::string_view> cols;
        while (true) {
            auto tab = line.find('\t');
            cols.push_back(trim(line.substr(0, tab)));
            if (tab == std::string_view::npos) break;
            line = line.substr(tab + 1);
        }
        if (cols.size() < 2 || cols.size() > 3 || cols[0].empty())
            throw ParseError("site map line " + std::to_string(line_no) + ": expected domain<TAB>category[<TAB>note]");
        std::string domain(cols[0]);
        std::transform(domain.begin(), domain.end(), domain.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (map.find(domain))
            throw ParseError("site map line " + std::to_string(line_no) + ": duplicate domain " + domain);
        SiteEntry entry;
        try {
            entry.category = site_category_from_string(cols[1]);
        } catch (const ValidationError& e) {
            throw ParseError("site map line " + std::to_string(line_no) + ": " + e.what());
        }
        if (cols.size() == 3) entry.note = std::string(cols[2]);
        map.set(std::move(domain), std::move(entry));
    }
    return map;
}

SiteCategoryMap SiteCategoryMap::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open site map " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

SiteCategoryMap SiteCategoryMap::builtin() {
    SiteCategoryMap map;
    for (const char* d : {"bicycling.com", "road.cc", "motorcyclistonline.com", "motorcyclecruiser.com"})
        map.set(d, {SiteCategory::DomainSpecific, "named example of a cycling or motorcycling outlet"});
    for (const char* d : {"nytimes.com", "washingtonpost.com", "nypost.com", "chicagotribune.com"})
        map.set(d, {SiteCategory::GeneralNews, "named example of a general news outlet"});
    return map;
}

void SiteCategoryMap::set(std::string domain, SiteEntry entry) { entries_[std::move(domain)] = std::move(entry); }

const SiteEntry* SiteCategoryMap::find(std::string_view domain) const {
    auto it = entries_.find(domain);
    return it == entries_.end() ? nullptr : &it->second;
}

std::string SiteCategoryMap::to_text() const {
    std::string out = "# domain\tcategory\tnote\n";
    for (const auto& [domain, entry] : entries_) {
        out += domain;
        out += '\t';
        out += to_string(entry.category);
        if (!entry.note.empty()) {
            out += '\t';
            out += entry.note;
        }
        out += '\n';
    }
    return out;
}

GenderBucket classify_gender(std::string_view text) {
    bool male = false, female = false;
    for (const auto& tok : features::tokenize(text)) {
        if (tok == "he" || tok == "his" || tok == "him") male = true;
        else if (tok == "she" || tok == "her" || tok == "hers") female = true;
    }
    if (male && female) return GenderBucket::Both;
    if (male) return GenderBucket::Male;
    if (female) return GenderBucket::Female;
    return GenderBucket::None;
}

Proportion accident_proportion(const std::vector<Headline>& headlines, const std::vector<LabelSet>& predictions) {
    if (headlines.size() != predictions.size())
        throw ValidationError("predictions", "one prediction per headline required");
    if (headlines.empty()) throw Error("accident proportion undefined for an empty group");
    Proportion p;
    p.n = headlines.size();
    p.count = static_cast<std::size_t>(std::count_if(predictions.begin(), predictions.end(), is_accident));
    p.value = static_cast<double>(p.count) / static_cast<double>(p.n);
    return p;
}

Proportion not_at_fault_proportion(const std::vector<Headline>& headlines, const std::vector<LabelSet>& predictions) {
    if (headlines.size() != predictions.size())
        throw ValidationError("predictions", "one prediction per headline required");
    Proportion p;
    for (const auto& l : predictions) {
        if (!is_accident(l)) continue;
        ++p.n;
        if (l.accident == Accident::OtherFault) ++p.count;
    }
    if (p.n == 0) throw Error("not-at-fault proportion undefined: no accident-predicted headlines");
    p.value = static_cast<double>(p.count) / static_cast<double>(p.n);
    return p;
}

double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

ZTest two_proportion_z_test(double p1, std::size_t n1, double p2, std::size_t n2) {
    if (n1 < 1 || n2 < 1) throw ValidationError("n", "group sizes must be at least 1");
    if (!(p1 >= 0.0 && p1 <= 1.0) || !(p2 >= 0.0 && p2 <= 1.0))
        throw ValidationError("p", "proportions must lie in [0, 1]");
    const double a = static_cast<double>(n1), b = static_cast<double>(n2);
    const double pooled = (p1 * a + p2 * b) / (a + b);
    const double var = pooled * (1.0 - pooled) * (1.0 / a + 1.0 / b);
    if (!(var > 0.0)) throw Error("degenerate variance: pooled proportion is 0 or 1");
    ZTest t;
    t.z = (p1 - p2) / std::sqrt(var);
    t.p_value = std::erfc(std::fabs(t.z) / std::sqrt(2.0));
    t.p_value = std::clamp(t.p_value, std::numeric_limits<double>::denorm_min(), 1.0);
    return t;
}

std::vector<std::string> site_frequency_filter(const std::vector<Headline>& headlines, std::size_t min_count,
                                               bool require_both) {
    std::map<std::string, std::array<std::size_t, 2>> counts;
    for (const auto& h : headlines) ++counts[h.source_domain][static_cast<std::size_t>(h.subject)];
    std::vector<std::string> out;
    for (const auto& [domain, c] : counts) {
        const bool cyc = c[0] > min_count, moto = c[1] > min_count;
        if (require_both ? (cyc && moto) : (cyc || moto)) out.push_back(domain);
    }
    return out;
}

json CaseStudyConfig::to_json() const {
    return json{{"category_min_count", category_min_count},
                {"site_min_count", site_min_count},
                {"significance", significance}};
}

namespace {

struct Tally {
    std::size_t n = 0, accident = 0, cyclist_fault = 0, unknown_fault = 0, other_fault = 0;

    void add(const LabelSet& l) {
        ++n;
        switch (l.accident) {
            case Accident::NotAccident: return;
            case Accident::CyclistFault: ++cyclist_fault; break;
            case Accident::UnknownFault: ++unknown_fault; break;
            case Accident::OtherFault: ++other_fault; break;
        }
        ++accident;
    }
};

double ratio(std::size_t a, std::size_t b) { return static_cast<double>(a) / static_cast<double>(b); }

GroupRow make_row(std::string group, Subject subject, const Tally& t) {
    GroupRow r;
    r.group = std::move(group);
    r.subject = subject;
    r.n = t.n;
    r.accident = t.accident;
    r.cyclist_fault = t.cyclist_fault;
    r.unknown_fault = t.unknown_fault;
    r.other_fault = t.other_fault;
    if (t.n > 0) {
        r.accident_proportion = ratio(t.accident, t.n);
        r.not_accident_proportion = ratio(t.n - t.accident, t.n);
    }
    if (t.accident > 0) {
        r.at_fault_proportion = ratio(t.cyclist_fault, t.accident);
        r.not_at_fault_proportion = ratio(t.other_fault, t.accident);
    }
    return r;
}

std::string row_label(const GroupRow& r) { return r.group + "/" + std::string(corpus::to_string(r.subject)); }

Comparison compare(std::string measure, const GroupRow& g1, const GroupRow& g2, std::size_t GroupRow::*num,
                   bool over_accidents) {
    Comparison c;
    c.measure = std::move(measure);
    c.group1 = row_label(g1);
    c.group2 = row_label(g2);
    c.n1 = over_accidents ? g1.accident : g1.n;
    c.n2 = over_accidents ? g2.accident : g2.n;
    if (c.n1 == 0 || c.n2 == 0) {
        c.note = "empty group";
        return c;
    }
    c.p1 = ratio(g1.*num, c.n1);
    c.p2 = ratio(g2.*num, c.n2);
    try {
        c.test = two_proportion_z_test(c.p1, c.n1, c.p2, c.n2);
    } catch (const ValidationError&) {
        throw;
    } catch (const Error& e) {
        c.note = e.what();
    }
    return c;
}

json row_json(const GroupRow& r) {
    return json{{"group", r.group},
                {"subject", corpus::to_string(r.subject)},
                {"empty", r.empty()},
                {"n", r.n},
                {"accident", r.accident},
                {"cyclist_fault", r.cyclist_fault},
                {"unknown_fault", r.unknown_fault},
                {"other_fault", r.other_fault},
                {"accident_proportion", opt_json(r.accident_proportion)},
                {"not_accident_proportion", opt_json(r.not_accident_proportion)},
                {"at_fault_proportion", opt_json(r.at_fault_proportion)},
                {"not_at_fault_proportion", opt_json(r.not_at_fault_proportion)}};
}

json comparison_json(const Comparison& c) {
    json j{{"measure", c.measure}, {"group1", c.group1}, {"group2", c.group2}, {"p1", c.p1},
           {"p2", c.p2},           {"n1", c.n1},         {"n2", c.n2}};
    j["z"] = c.test ? json(c.test->z) : json(nullptr);
    j["p_value"] = c.test ? json(c.test->p_value) : json(nullptr);
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

}  // namespace

CaseStudyReport build_case_study_report(const std::vector<Headline>& headlines,
                                        const std::map<std::string, LabelSet>& predictions,
                                        const SiteCategoryMap& site_map, const CaseStudyConfig& config) {
    if (predictions.empty()) throw ValidationError("predictions", "prediction set is empty");
    if (headlines.empty()) throw ValidationError("corpus", "corpus is empty");
    std::vector<const LabelSet*> pred(headlines.size());
    std::vector<std::string> missing;
    for (std::size_t i = 0; i < headlines.size(); ++i) {
        auto it = predictions.find(headlines[i].id);
        if (it == predictions.end()) missing.push_back(headlines[i].id);
        else pred[i] = &it->second;
    }
    if (!missing.empty()) {
        std::string msg = std::to_string(missing.size()) + " headline(s) have no prediction, first: " + missing.front();
        throw ValidationError("predictions", msg);
    }

    CaseStudyReport report;
    report.config = config;

    // Site categories over domains frequent in both subject groups.
    report.category_domains = site_frequency_filter(headlines, config.category_min_count, true);
    std::vector<std::string> uncategorized;
    std::map<std::string, SiteCategory, std::less<>> category_of;
    for (const auto& d : report.category_domains) {
        if (const SiteEntry* e = site_map.find(d)) category_of[d] = e->category;
        else uncategorized.push_back(d);
    }
    if (!uncategorized.empty()) {
        std::string msg = "site map has no entry for:";
        for (const auto& d : uncategorized) msg += " " + d;
        throw ValidationError("site_map", msg);
    }
    Tally cat[2][2];  // [category][subject]
    for (std::size_t i = 0; i < headlines.size(); ++i) {
        auto it = category_of.find(headlines[i].source_domain);
        if (it == category_of.end()) continue;
        cat[static_cast<int>(it->second)][static_cast<int>(headlines[i].subject)].add(*pred[i]);
    }
    for (SiteCategory c : {SiteCategory::DomainSpecific, SiteCategory::GeneralNews})
        for (Subject s : {Subject::Cyclist, Subject::Motorcyclist})
            report.category_rows.push_back(
                make_row(std::string(to_string(c)), s, cat[static_cast<int>(c)][static_cast<int>(s)]));
    // rows: [0] ds/cyc [1] ds/moto [2] gn/cyc [3] gn/moto
    const auto& rows = report.category_rows;
    report.category_tests.push_back(compare("accident", rows[0], rows[1], &GroupRow::accident, false));
    report.category_tests.push_back(compare("accident", rows[2], rows[3], &GroupRow::accident, false));
    report.category_tests.push_back(compare("accident", rows[0], rows[2], &GroupRow::accident, false));
    report.category_tests.push_back(compare("accident", rows[1], rows[3], &GroupRow::accident, false));
    report.category_tests.push_back(compare("at_fault", rows[0], rows[1], &GroupRow::cyclist_fault, true));
    report.category_tests.push_back(compare("at_fault", rows[2], rows[3], &GroupRow::cyclist_fault, true));
    report.category_tests.push_back(compare("not_at_fault", rows[0], rows[1], &GroupRow::other_fault, true));
    report.category_tests.push_back(compare("not_at_fault", rows[2], rows[3], &GroupRow::other_fault, true));

    // Per-site cyclist vs motorcyclist accident proportions.
    std::map<std::string, std::array<Tally, 2>> sites;
    for (std::size_t i = 0; i < headlines.size(); ++i)
        sites[headlines[i].source_domain][static_cast<std::size_t>(headlines[i].subject)].add(*pred[i]);
    for (const auto& d : site_frequency_filter(headlines, config.site_min_count, true)) {
        const auto& t = sites.at(d);
        SiteRow row;
        row.domain = d;
        row.n_cyclist = t[0].n;
        row.n_motorcyclist = t[1].n;
        row.p_cyclist = ratio(t[0].accident, t[0].n);
        row.p_motorcyclist = ratio(t[1].accident, t[1].n);
        try {
            row.test = two_proportion_z_test(row.p_cyclist, row.n_cyclist, row.p_motorcyclist, row.n_motorcyclist);
            row.significant = row.test->p_value < config.significance;
        } catch (const ValidationError&) {
            throw;
        } catch (const Error&) {
        }
        report.site_rows.push_back(std::move(row));
    }
    std::stable_sort(report.site_rows.begin(), report.site_rows.end(), [](const SiteRow& a, const SiteRow& b) {
        const double pa = a.test ? a.test->p_value : 2.0, pb = b.test ? b.test->p_value : 2.0;
        return pa < pb;
    });

    // Gender buckets over the full corpus.
    Tally gender[2][2];  // [male=0/female=1][subject]
    for (Subject s : {Subject::Cyclist, Subject::Motorcyclist}) {
        GenderSummary summary;
        summary.subject = s;
        for (GenderBucket g : {GenderBucket::Male, GenderBucket::Female, GenderBucket::Both, GenderBucket::None})
            summary.counts[g] = 0;
        report.gender_summary.push_back(summary);
    }
    for (std::size_t i = 0; i < headlines.size(); ++i) {
        const int s = static_cast<int>(headlines[i].subject);
        const GenderBucket g = classify_gender(headlines[i].text);
        ++report.gender_summary[s].counts[g];
        if (g == GenderBucket::Male) gender[0][s].add(*pred[i]);
        else if (g == GenderBucket::Female) gender[1][s].add(*pred[i]);
    }
    for (auto& summary : report.gender_summary) {
        summary.excluded_both = summary.counts[GenderBucket::Both];
        const std::size_t male = summary.counts[GenderBucket::Male];
        if (male > 0) summary.female_to_male_ratio = ratio(summary.counts[GenderBucket::Female], male);
    }
    for (Subject s : {Subject::Cyclist, Subject::Motorcyclist}) {
        const int si = static_cast<int>(s);
        report.gender_rows.push_back(make_row("male", s, gender[0][si]));
        report.gender_rows.push_back(make_row("female", s, gender[1][si]));
        const auto& m = report.gender_rows[report.gender_rows.size() - 2];
        const auto& f = report.gender_rows.back();
        GroupRow m_rev = m, f_rev = f;
        m_rev.accident = m.n - m.accident;
        f_rev.accident = f.n - f.accident;
        report.gender_tests.push_back(compare("not_accident", m_rev, f_rev, &GroupRow::accident, false));
        report.gender_tests.push_back(compare("not_at_fault", m, f, &GroupRow::other_fault, true));
    }
    return report;
}

json CaseStudyReport::to_json() const {
    json j;
    j["config"] = config.to_json();
    j["category_domains"] = category_domains;
    j["category_rows"] = json::array();
    for (const auto& r : category_rows) j["category_rows"].push_back(row_json(r));
    j["category_tests"] = json::array();
    for (const auto& c : category_tests) j["category_tests"].push_back(comparison_json(c));
    j["site_rows"] = json::array();
    for (const auto& s : site_rows) {
        json row{{"domain", s.domain},
                 {"n_cyclist", s.n_cyclist},
                 {"n_motorcyclist", s.n_motorcyclist},
                 {"p_cyclist", s.p_cyclist},
                 {"p_motorcyclist", s.p_motorcyclist},
                 {"difference", s.p_motorcyclist - s.p_cyclist},
                 {"significant", s.significant}};
        row["z"] = s.test ? json(s.test->z) : json(nullptr);
        row["p_value"] = s.test ? json(s.test->p_value) : json(nullptr);
        j["site_rows"].push_back(std::move(row));
    }
    j["gender_rows"] = json::array();
    for (const auto& r : gender_rows) j["gender_rows"].push_back(row_json(r));
    j["gender_tests"] = json::array();
    for (const auto& c : gender_tests) j["gender_tests"].push_back(comparison_json(c));
    j["gender_summary"] = json::array();
    for (const auto& g : gender_summary) {
        json counts;
        for (const auto& [bucket, n] : g.counts) counts[std::string(to_string(bucket))] = n;
        j["gender_summary"].push_back(json{{"subject", corpus::to_string(g.subject)},
                                           {"counts", counts},
                                           {"female_to_male_ratio", opt_json(g.female_to_male_ratio)},
                                           {"excluded_both", g.excluded_both}});
    }
    j["metadata"] = {
        {"gender_denominators", "male and female bucket populations; headlines matching both pronoun lists are "
                                "excluded and counted in excluded_both"},
        {"frequency_threshold", "strictly greater than the configured count in both subject groups"},
        {"p_value", "two-sided, pooled two-proportion z-test"}};
    return j;
}

std::vector<std::filesystem::path> write_case_study(const CaseStudyReport& report, const std::filesystem::path& dir,
                                                    const json& run_config) {
    std::vector<std::filesystem::path> written;
    const auto cs = dir / "case_study";
    const auto charts = dir / "charts";
    auto emit = [&](const std::filesystem::path& p, const std::string& text) {
        write_text(p, text);
        written.push_back(p);
    };

    json j = report.to_json();
    j["run_config"] = run_config;
    emit(cs / "report.json", j.dump(2) + "\n");

    std::string fig3 = "category,subject,n,accident,accident_proportion,not_accident_proportion\n";
    std::string fig4 = "category,subject,accidents,cyclist_fault,unknown_fault,other_fault,at_fault_proportion,"
                       "not_at_fault_proportion\n";
    for (const auto& r : report.category_rows) {
        fig3 += r.group + "," + std::string(corpus::to_string(r.subject)) + "," + std::to_string(r.n) + "," +
                std::to_string(r.accident) + "," + opt(r.accident_proportion) + "," +
                opt(r.not_accident_proportion) + "\n";
        fig4 += r.group + "," + std::string(corpus::to_string(r.subject)) + "," + std::to_string(r.accident) + "," +
                std::to_string(r.cyclist_fault) + "," + std::to_string(r.unknown_fault) + "," +
                std::to_string(r.other_fault) + "," + opt(r.at_fault_proportion) + "," +
                opt(r.not_at_fault_proportion) + "\n";
    }
    emit(cs / "category_accident.csv", fig3);
    emit(cs / "category_fault.csv", fig4);

    std::string tests = "measure,group1,group2,n1,p1,n2,p2,z,p_value,note\n";
    for (const auto* list : {&report.category_tests, &report.gender_tests})
        for (const auto& c : *list)
            tests += c.measure + "," + c.group1 + "," + c.group2 + "," + std::to_string(c.n1) + "," + fmt(c.p1) +
                     "," + std::to_string(c.n2) + "," + fmt(c.p2) + "," + (c.test ? fmt(c.test->z) : "") + "," +
                     (c.test ? fmt_p(c.test->p_value) : "") + "," + c.note + "\n";
    emit(cs / "comparisons.csv", tests);

    std::string sites = "domain,n_cyclist,p_cyclist,n_motorcyclist,p_motorcyclist,difference,z,p_value,significant\n";
    for (const auto& s : report.site_rows)
        sites += s.domain + "," + std::to_string(s.n_cyclist) + "," + fmt(s.p_cyclist) + "," +
                 std::to_string(s.n_motorcyclist) + "," + fmt(s.p_motorcyclist) + "," +
                 fmt(s.p_motorcyclist - s.p_cyclist) + "," + (s.test ? fmt(s.test->z) : "") + "," +
                 (s.test ? fmt_p(s.test->p_value) : "") + "," + (s.significant ? "yes" : "no") + "\n";
    emit(cs / "site_tests.csv", sites);

    std::string g = "gender,subject,n,accident,not_accident_proportion,accidents,other_fault,not_at_fault_proportion\n";
    for (const auto& r : report.gender_rows)
        g += r.group + "," + std::string(corpus::to_string(r.subject)) + "," + std::to_string(r.n) + "," +
             std::to_string(r.accident) + "," + opt(r.not_accident_proportion) + "," + std::to_string(r.accident) +
             "," + std::to_string(r.other_fault) + "," + opt(r.not_at_fault_proportion) + "\n";
    emit(cs / "gender.csv", g);

    std::string gs = "subject,male,female,both,none,female_to_male_ratio\n";
    for (const auto& s : report.gender_summary)
        gs += std::string(corpus::to_string(s.subject)) + "," + std::to_string(s.counts.at(GenderBucket::Male)) + "," +
              std::to_string(s.counts.at(GenderBucket::Female)) + "," +
              std::to_string(s.counts.at(GenderBucket::Both)) + "," +
              std::to_string(s.counts.at(GenderBucket::None)) + "," + opt(s.female_to_male_ratio) + "\n";
    emit(cs / "gender_summary.csv", gs);

    // Charts: groups are subjects, series are categories or genders.
    const std::vector<std::string> subjects{"cyclist", "motorcyclist"};
    auto series_of = [](const std::vector<GroupRow>& rows, const std::string& group,
                        std::optional<double> GroupRow::*field) {
        BarSeries s;
        s.name = group;
        for (const auto& r : rows)
            if (r.group == group) s.values.push_back(r.*field);
        return s;
    };
    emit(charts / "category_accident.svg",
         bar_chart_svg("Accident-related proportion by site category",
                       subjects,
                       {series_of(report.category_rows, "domain_specific", &GroupRow::accident_proportion),
                        series_of(report.category_rows, "general_news", &GroupRow::accident_proportion)}));
    {
        std::vector<BarSeries> fault;
        for (const char* cat : {"domain_specific", "general_news"}) {
            auto at = series_of(report.category_rows, cat, &GroupRow::at_fault_proportion);
            at.name = std::string(cat) + " at fault";
            auto other = series_of(report.category_rows, cat, &GroupRow::not_at_fault_proportion);
            other.name = std::string(cat) + " other";
            fault.push_back(std::move(at));
            fault.push_back(std::move(other));
        }
        emit(charts / "category_fault.svg", bar_chart_svg("Fault attribution by site category", subjects, fault));
    }
    emit(charts / "gender_not_accident.svg",
         bar_chart_svg("Not-accident proportion by pronoun gender", subjects,
                       {series_of(report.gender_rows, "male", &GroupRow::not_accident_proportion),
                        series_of(report.gender_rows, "female", &GroupRow::not_accident_proportion)}));
    emit(charts / "gender_not_at_fault.svg",
         bar_chart_svg("Not-at-fault proportion by pronoun gender", subjects,
                       {series_of(report.gender_rows, "male", &GroupRow::not_at_fault_proportion),
                        series_of(report.gender_rows, "female", &GroupRow::not_at_fault_proportion)}));
    return written;
}

void save_predictions(const std::vector<std::string>& ids, const std::vector<LabelSet>& labels,
                      const std::filesystem::path& path) {
    if (ids.size() != labels.size()) throw ValidationError("predictions", "ids and labels differ in length");
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i)
        out += json{{"id", ids[i]},
                    {"perception", corpus::to_string(labels[i].perception)},
                    {"accident", corpus::to_string(labels[i].accident)}}
                   .dump() +
               "\n";
    write_text(path, out);
}

std::map<std::string, LabelSet> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open predictions " + path.string());
    std::map<std::string, LabelSet> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
            LabelSet l;
            l.perception = corpus::perception_from_string(j.at("perception").get<std::string>());
            l.accident = corpus::accident_from_string(j.at("accident").get<std::string>());
            if (!out.emplace(j.at("id").get<std::string>(), l).second)
                throw ParseError("duplicate id");
        } catch (const json::exception& e) {
            throw ParseError("predictions line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw ParseError("predictions line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace framing::analysis
