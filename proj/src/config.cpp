#include "framing/config.hpp"

#include "framing/errors.hpp"
#include "framing/svm.hpp"

#include <fstream>
#include <set>

namespace framing::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
        if (!ok.count(key)) throw ConfigError("unknown config key " + where + "." + key);
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key " + where + "." + key + " has the wrong type");
    }
}

void read_path(const json& j, const char* key, std::optional<std::filesystem::path>& out,
               const std::filesystem::path& base, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return;
    if (!it->is_string()) throw ConfigError("config key " + where + "." + key + " must be a path string");
    std::filesystem::path p = it->get<std::string>();
    out = p.is_relative() && !base.empty() ? base / p : p;
}

json path_json(const std::optional<std::filesystem::path>& p) {
    return p ? json(p->generic_string()) : json(nullptr);
}

}  // namespace

RunConfig parse_config(const json& j, const std::filesystem::path& base) {
    RunConfig c;
    c.svm.c_grid = models::kDefaultCGrid;
    check_keys(j, "config",
               {"seed", "threads", "paths", "scrape", "sample", "split", "features", "models", "svm", "network",
                "final_model", "analysis"});
    read(j, "seed", c.seed, "config");
    read(j, "threads", c.threads, "config");
    if (c.threads < 1) throw ConfigError("config.threads must be at least 1");

    if (auto it = j.find("paths"); it != j.end()) {
        const json& p = *it;
        check_keys(p, "paths",
                   {"corpus", "labeled_corpus", "eval_corpus", "split_plan", "site_map", "embeddings", "checkpoint",
                    "vocab"});
        read_path(p, "corpus", c.paths.corpus, base, "paths");
        read_path(p, "labeled_corpus", c.paths.labeled_corpus, base, "paths");
        read_path(p, "eval_corpus", c.paths.eval_corpus, base, "paths");
        read_path(p, "split_plan", c.paths.split_plan, base, "paths");
        read_path(p, "site_map", c.paths.site_map, base, "paths");
        read_path(p, "embeddings", c.paths.embeddings, base, "paths");
        read_path(p, "checkpoint", c.paths.checkpoint, base, "paths");
        read_path(p, "vocab", c.paths.vocab, base, "paths");
    }
    if (auto it = j.find("scrape"); it != j.end()) {
        const json& s = *it;
        check_keys(s, "scrape",
                   {"keywords", "base_url", "max_items", "politeness_delay_ms", "max_retries", "initial_backoff_ms",
                    "max_in_flight", "fixtures"});
        read(s, "keywords", c.scrape.keywords, "scrape");
        read(s, "base_url", c.scrape.base_url, "scrape");
        read(s, "max_items", c.scrape.max_items, "scrape");
        read(s, "politeness_delay_ms", c.scrape.politeness_delay_ms, "scrape");
        read(s, "max_retries", c.scrape.max_retries, "scrape");
        read(s, "initial_backoff_ms", c.scrape.initial_backoff_ms, "scrape");
        read(s, "max_in_flight", c.scrape.max_in_flight, "scrape");
        read_path(s, "fixtures", c.scrape.fixtures, base, "scrape");
        if (c.scrape.keywords.empty()) throw ConfigError("scrape.keywords must not be empty");
        if (c.scrape.politeness_delay_ms < 0 || c.scrape.initial_backoff_ms < 0 || c.scrape.max_retries < 0)
            throw ConfigError("scrape delays and retries must be non-negative");
        if (c.scrape.max_in_flight < 1) throw ConfigError("scrape.max_in_flight must be at least 1");
    }
    if (auto it = j.find("sample"); it != j.end()) {
        const json& s = *it;
        check_keys(s, "sample", {"size", "keywords", "match"});
        read(s, "size", c.sample.size, "sample");
        read(s, "keywords", c.sample.keywords, "sample");
        std::string match = "prefix";
        read(s, "match", match, "sample");
        if (match == "prefix") c.sample.match = ingest::KeywordMatch::Prefix;
        else if (match == "exact") c.sample.match = ingest::KeywordMatch::Exact;
        else throw ConfigError("sample.match must be \"prefix\" or \"exact\"");
    }
    if (auto it = j.find("split"); it != j.end()) {
        const json& s = *it;
        check_keys(s, "split", {"folds", "test_fraction", "dev_fraction"});
        read(s, "folds", c.split.folds, "split");
        read(s, "test_fraction", c.split.test_fraction, "split");
        read(s, "dev_fraction", c.split.dev_fraction, "split");
        if (c.split.folds < 1) throw ConfigError("split.folds must be at least 1");
        if (!(c.split.test_fraction > 0 && c.split.test_fraction < 1) ||
            !(c.split.dev_fraction > 0 && c.split.dev_fraction < 1))
            throw ConfigError("split fractions must lie in (0, 1)");
    }
    if (auto it = j.find("features"); it != j.end()) {
        check_keys(*it, "features", {"min_df"});
        read(*it, "min_df", c.min_df, "features");
        if (c.min_df < 1) throw ConfigError("features.min_df must be at least 1");
    }
    read(j, "models", c.models, "config");
    if (c.models.empty()) throw ConfigError("config.models must not be empty");
    if (auto it = j.find("svm"); it != j.end()) {
        check_keys(*it, "svm", {"c_grid", "tolerance", "max_passes"});
        read(*it, "c_grid", c.svm.c_grid, "svm");
        read(*it, "tolerance", c.svm.tolerance, "svm");
        read(*it, "max_passes", c.svm.max_passes, "svm");
        if (c.svm.c_grid.empty()) throw ConfigError("svm.c_grid must not be empty");
        for (double v : c.svm.c_grid)
            if (!(v > 0)) throw ConfigError("svm.c_grid values must be positive");
    }
    if (auto it = j.find("network"); it != j.end()) {
        const json& n = *it;
        check_keys(n, "network", {"learning_rate", "epochs", "batch_size", "alpha", "schedule", "hidden"});
        read(n, "learning_rate", c.network.learning_rate, "network");
        read(n, "epochs", c.network.epochs, "network");
        read(n, "batch_size", c.network.batch_size, "network");
        read(n, "alpha", c.network.alpha, "network");
        read(n, "hidden", c.network.hidden, "network");
        std::string schedule(models::to_string(c.network.schedule));
        read(n, "schedule", schedule, "network");
        c.network.schedule = models::schedule_from_string(schedule);
        if (!(c.network.learning_rate > 0) || c.network.epochs < 1 || c.network.batch_size < 1 ||
            c.network.hidden < 1 || !(c.network.alpha >= 0))
            throw ConfigError("network hyperparameters out of range");
    }
    read(j, "final_model", c.final_model, "config");
    for (const auto& name : c.models)
        if (name != "uniform" && name != "stratified" && name != "svm") models::regime_from_string(name);
    if (c.final_model != "svm") models::regime_from_string(c.final_model);
    if (auto it = j.find("analysis"); it != j.end()) {
        check_keys(*it, "analysis", {"category_min_count", "site_min_count", "significance"});
        read(*it, "category_min_count", c.analysis.category_min_count, "analysis");
        read(*it, "site_min_count", c.analysis.site_min_count, "analysis");
        read(*it, "significance", c.analysis.significance, "analysis");
        if (c.analysis.category_min_count < 1 || c.analysis.site_min_count < 1)
            throw ConfigError("analysis thresholds must be at least 1");
        if (!(c.analysis.significance > 0 && c.analysis.significance < 1))
            throw ConfigError("analysis.significance must lie in (0, 1)");
    }
    c.network.seed = c.seed;
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(j, path.parent_path());
}

json RunConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["threads"] = threads;
    j["paths"] = {{"corpus", path_json(paths.corpus)},
                  {"labeled_corpus", path_json(paths.labeled_corpus)},
                  {"eval_corpus", path_json(paths.eval_corpus)},
                  {"split_plan", path_json(paths.split_plan)},
                  {"site_map", path_json(paths.site_map)},
                  {"embeddings", path_json(paths.embeddings)},
                  {"checkpoint", path_json(paths.checkpoint)},
                  {"vocab", path_json(paths.vocab)}};
    j["scrape"] = {{"keywords", scrape.keywords},
                   {"base_url", scrape.base_url},
                   {"max_items", scrape.max_items},
                   {"politeness_delay_ms", scrape.politeness_delay_ms},
                   {"max_retries", scrape.max_retries},
                   {"initial_backoff_ms", scrape.initial_backoff_ms},
                   {"max_in_flight", scrape.max_in_flight},
                   {"fixtures", path_json(scrape.fixtures)}};
    j["sample"] = {{"size", sample.size},
                   {"keywords", sample.keywords},
                   {"match", sample.match == ingest::KeywordMatch::Prefix ? "prefix" : "exact"}};
    j["split"] = {{"folds", split.folds}, {"test_fraction", split.test_fraction}, {"dev_fraction", split.dev_fraction}};
    j["features"] = {{"min_df", min_df}};
    j["models"] = models;
    j["svm"] = {{"c_grid", svm.c_grid}, {"tolerance", svm.tolerance}, {"max_passes", svm.max_passes}};
    j["network"] = {{"learning_rate", network.learning_rate},
                    {"epochs", network.epochs},
                    {"batch_size", network.batch_size},
                    {"alpha", network.alpha},
                    {"schedule", models::to_string(network.schedule)},
                    {"hidden", network.hidden}};
    j["final_model"] = final_model;
    j["analysis"] = analysis.to_json();
    return j;
}

}  // namespace framing::cli
