#include "support.hpp"

#include "framing/random.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <sys/wait.h>
#include <unistd.h>

namespace framing::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("framing_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

const std::vector<std::vector<std::string>>& perception_cues() {
    static const std::vector<std::vector<std::string>> cues{
        {"reckless", "menace", "scofflaw"}, {"commute", "route", "season"}, {"hero", "champion", "inspiring"}};
    return cues;
}

const std::vector<std::vector<std::string>>& accident_cues() {
    static const std::vector<std::vector<std::string>> cues{{"festival", "museum", "trailhead"},
                                                            {"swerved", "ignored", "wobbled"},
                                                            {"collision", "incident", "wreck"},
                                                            {"struck", "driver", "truck"}};
    return cues;
}

const std::vector<std::string>& filler_words() {
    static const std::vector<std::string> words{
        "city",   "council", "road",    "street", "weekend", "local",  "news",    "report", "county",  "police",
        "morning", "evening", "downtown", "bridge", "park",   "lane",   "avenue",  "group",  "club",    "team",
        "event",  "plan",    "safety",  "new",    "old",     "north",  "south",   "east",   "west",    "state",
        "year",   "day",     "week",    "riders", "people",  "family", "friends", "school", "highway", "route66",
        "update", "video",   "photos",  "story",  "says",    "after",  "during",  "near",   "with",    "over"};
    return words;
}

std::vector<corpus::AnnotatedHeadline> synthetic_corpus(const SyntheticOptions& o) {
    Rng rng(o.seed);
    const auto& pc = perception_cues();
    const auto& ac = accident_cues();
    const auto& fill = filler_words();
    static const char* domains[] = {"bicycling.com", "road.cc", "nypost.com", "nytimes.com", "example.org"};
    std::vector<corpus::AnnotatedHeadline> out;
    out.reserve(o.n);
    for (std::size_t i = 0; i < o.n; ++i) {
        corpus::LabelSet gold;
        const std::size_t p = rng.index(3);
        gold.perception = static_cast<corpus::Perception>(p);
        std::size_t a = rng.index(4);
        if (rng.uniform() < o.correlation) a = p == 0 ? 1 : (p == 1 ? 0 : 3);
        gold.accident = static_cast<corpus::Accident>(a);

        std::vector<std::string> words;
        const std::size_t n_fill = o.min_fillers + rng.index(o.max_fillers - o.min_fillers + 1);
        for (std::size_t k = 0; k < n_fill; ++k) words.push_back(fill[rng.index(fill.size())]);
        if (rng.uniform() < o.perception_cue_prob) words.push_back(pc[p][rng.index(pc[p].size())]);
        if (rng.uniform() < o.accident_cue_prob) words.push_back(ac[a][rng.index(ac[a].size())]);
        rng.shuffle(std::span<std::string>(words));
        const bool moto = i % 2 == 1;
        std::string text = moto ? "Motorcyclist" : "Cyclist";
        for (const auto& w : words) text += " " + w;

        corpus::AnnotatedHeadline r;
        r.headline.id = "s" + std::to_string(o.seed) + "_" + std::to_string(i);
        r.headline.text = text;
        r.headline.source_domain = domains[rng.index(5)];
        r.headline.subject = moto ? corpus::Subject::Motorcyclist : corpus::Subject::Cyclist;
        r.headline.query_keyword = moto ? "motorcycle" : "cycling";
        if (i % 3 == 0) r.headline.published = "2021-05-0" + std::to_string(1 + i % 9) + "T10:00:00Z";
        r.gold = gold;
        if (o.annotators) {
            corpus::LabelSet second = gold;
            if (rng.uniform() < 0.2) second.perception = static_cast<corpus::Perception>(rng.index(3));
            if (rng.uniform() < 0.2) second.accident = static_cast<corpus::Accident>(rng.index(4));
            r.annotator_labels = std::vector<corpus::LabelSet>{gold, second};
        }
        out.push_back(std::move(r));
    }
    return out;
}

long double two_sided_p_oracle(long double z) {
    using boost::math::quadrature::gauss_kronrod;
    const long double a = std::fabs(z);
    auto phi = [](long double t) {
        return std::exp(-t * t / 2) / std::sqrt(2 * 3.14159265358979323846264338327950288L);
    };
    // Near zero the complement of the central mass is accurate; further out the
    // tail is integrated directly so small p-values keep their relative accuracy.
    if (a < 1) return 1 - 2 * gauss_kronrod<long double, 61>::integrate(phi, 0.0L, a, 12, 1e-17L);
    return 2 * gauss_kronrod<long double, 61>::integrate(phi, a, a + 40.0L, 12, 1e-17L);
}

PlantedScrape planted_scrape(const std::vector<PlantedCell>& cells, std::uint64_t seed) {
    PlantedScrape out;
    Rng rng(seed);
    const auto& fill = filler_words();
    std::size_t counter = 0;
    for (const auto& cell : cells) {
        // Accident flags and fault labels per headline slot; then gender tags.
        struct Slot {
            corpus::Accident accident = corpus::Accident::NotAccident;
            int gender = 0;  // 0 none, 1 male, 2 female
        };
        std::vector<Slot> slots(cell.n);
        // Males occupy [0, male), females [male, male + female).
        std::size_t idx = 0;
        auto fill_group = [&](std::size_t start, std::size_t count, std::size_t accidents, std::size_t other,
                              int gender) {
            for (std::size_t k = 0; k < count; ++k) {
                Slot& s = slots[start + k];
                s.gender = gender;
                if (k < accidents) s.accident = k < other ? corpus::Accident::OtherFault : corpus::Accident::UnknownFault;
            }
        };
        fill_group(0, cell.male, cell.male_accidents, cell.male_other_fault, 1);
        fill_group(cell.male, cell.female, cell.female_accidents, cell.female_other_fault, 2);
        idx = cell.male + cell.female;
        // The rest carries the remaining accident and fault counts.
        const std::size_t rest_acc = cell.accidents - cell.male_accidents - cell.female_accidents;
        const std::size_t rest_other = cell.other_fault - cell.male_other_fault - cell.female_other_fault;
        for (std::size_t k = 0; idx < cell.n; ++k, ++idx) {
            if (k < rest_acc) {
                if (k < rest_other) slots[idx].accident = corpus::Accident::OtherFault;
                else if (k < rest_other + cell.cyclist_fault) slots[idx].accident = corpus::Accident::CyclistFault;
                else slots[idx].accident = corpus::Accident::UnknownFault;
            }
        }
        rng.shuffle(std::span<Slot>(slots));
        for (const auto& s : slots) {
            corpus::Headline h;
            h.id = "p" + std::to_string(counter++);
            std::string text = cell.subject == corpus::Subject::Cyclist ? "Cyclist" : "Motorcyclist";
            if (s.gender == 1) text += " says he";
            if (s.gender == 2) text += " says she";
            for (int k = 0; k < 3; ++k) text += " " + fill[rng.index(fill.size())];
            h.text = text;
            h.source_domain = cell.domain;
            h.subject = cell.subject;
            h.query_keyword = cell.subject == corpus::Subject::Cyclist ? "cycling" : "motorcycle";
            corpus::LabelSet l;
            l.perception = corpus::Perception::Neutral;
            l.accident = s.accident;
            out.predictions[h.id] = l;
            out.headlines.push_back(std::move(h));
        }
    }
    return out;
}

std::vector<ingest::RawItem> fixture_items(const std::string& keyword, std::size_t n, std::uint64_t seed,
                                           const std::vector<std::string>& domains) {
    Rng rng(seed);
    const auto& fill = filler_words();
    std::vector<ingest::RawItem> items;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string& domain = domains[i % domains.size()];
        std::string text = keyword + " " + fill[rng.index(fill.size())] + " " + fill[rng.index(fill.size())] + " " +
                           std::to_string(i);
        if (i % 4 == 0) text += " crash";
        if (i % 5 == 0) text += " he";
        if (i % 7 == 0) text += " she";
        ingest::RawItem item;
        item.title = text;
        item.link = "https://news.example.com/articles/" + keyword + "/" + std::to_string(i);
        item.pub_date = "Mon, 0" + std::to_string(1 + i % 9) + " Mar 2021 12:30:00 GMT";
        item.source = domain;
        item.source_url = "https://www." + domain;
        items.push_back(std::move(item));
    }
    return items;
}

}  // namespace framing::testing

namespace framing::testing {

PipelineInputs write_pipeline_inputs(const std::filesystem::path& dir, std::size_t labeled_n) {
    namespace fs = std::filesystem;
    PipelineInputs in;
    in.fixtures = dir / "feeds";
    in.labeled = dir / "labeled.jsonl";
    in.config = dir / "config.json";
    fs::create_directories(in.fixtures);
    const std::vector<std::string> domains{"nytimes.com", "bicycling.com", "road.cc", "motorcyclistonline.com"};
    const std::vector<std::string> keywords{"cycling", "cyclist", "bike", "motorcycling", "motorcycle"};
    for (std::size_t k = 0; k < keywords.size(); ++k) {
        auto items = fixture_items(keywords[k], 80, 40 + k, domains);
        write_file(in.fixtures / (keywords[k] + ".xml"), ingest::serialize_rss(items, keywords[k]));
    }
    SyntheticOptions o;
    o.n = labeled_n;
    o.seed = 21;
    o.annotators = true;
    o.perception_cue_prob = 0.9;
    o.accident_cue_prob = 0.9;
    corpus::save_corpus(synthetic_corpus(o), in.labeled);
    const std::string config = R"({
  "seed": 7,
  "paths": {"labeled_corpus": "labeled.jsonl"},
  "scrape": {"max_items": 60, "politeness_delay_ms": 0},
  "sample": {"size": 40},
  "split": {"folds": 3, "test_fraction": 0.2, "dev_fraction": 0.1},
  "models": ["uniform", "stratified", "svm", "mt", "mtlpt", "mt_mtlpt"],
  "svm": {"c_grid": [0.1, 1, 10]},
  "network": {"epochs": 4, "hidden": 16, "batch_size": 16, "learning_rate": 0.01},
  "final_model": "mt_mtlpt",
  "analysis": {"category_min_count": 10, "site_min_count": 5}
}
)";
    write_file(in.config, config);
    return in;
}

int run_cli(const std::string& args, const std::filesystem::path& stdout_file, const std::filesystem::path& stderr_file) {
    std::string cmd = std::string("'") + FRAMING_CLI_PATH + "' " + args;
    cmd += " > '" + (stdout_file.empty() ? std::string("/dev/null") : stdout_file.string()) + "'";
    cmd += " 2> '" + (stderr_file.empty() ? std::string("/dev/null") : stderr_file.string()) + "'";
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
}

}  // namespace framing::testing
