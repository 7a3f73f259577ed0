#include "support.hpp"

#include "framing/commands.hpp"
#include "framing/config.hpp"
#include "framing/errors.hpp"
#include "framing/features.hpp"
#include "framing/svm.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace framing;
using namespace framing::cli;
using nlohmann::json;
namespace fs = std::filesystem;

TEST_SUITE("config") {

TEST_CASE("defaults") {
    auto c = parse_config(json::object());
    CHECK(c.seed == 13);
    CHECK(c.split.folds == 5);
    CHECK(c.split.dev_fraction == 0.1);
    CHECK(c.svm.c_grid == models::kDefaultCGrid);
    CHECK(c.final_model == "mt_mtlpt");
    CHECK(c.analysis.category_min_count == 100);
    CHECK(c.analysis.site_min_count == 30);
    CHECK(c.scrape.keywords.size() == 5);
}

TEST_CASE("the effective config round trips through JSON") {
    json j = json::parse(R"({"seed": 3, "models": ["svm", "mt+mtlpt"], "network": {"schedule": "fixed", "alpha": 0.5},
                             "sample": {"size": 10, "match": "exact"}, "svm": {"c_grid": [1, 2]}})");
    auto c = parse_config(j);
    CHECK(c.network.seed == 3);
    CHECK(c.network.schedule == models::Schedule::Fixed);
    CHECK(c.sample.match == ingest::KeywordMatch::Exact);
    CHECK(parse_config(c.to_json()).to_json() == c.to_json());
}

TEST_CASE("bad configs are rejected") {
    auto rejects = [](const char* text) {
        CHECK_THROWS_AS(parse_config(json::parse(text)), ConfigError);
    };
    rejects(R"({"sed": 1})");
    rejects(R"({"network": {"epoch": 3}})");
    rejects(R"({"seed": "one"})");
    rejects(R"({"models": ["mt", "cnn"]})");
    rejects(R"({"final_model": "transformer"})");
    rejects(R"({"split": {"dev_fraction": 0}})");
    rejects(R"({"split": {"test_fraction": 1.5}})");
    rejects(R"({"network": {"schedule": "linear"}})");
    rejects(R"({"sample": {"match": "fuzzy"}})");
    rejects(R"({"threads": 0})");
    rejects(R"([1, 2])");
}

TEST_CASE("relative paths resolve against the config file") {
    testing::TempDir dir("config");
    fs::create_directories(dir / "sub");
    testing::write_file(dir / "sub/run.json", R"({"paths": {"labeled_corpus": "data/l.jsonl", "site_map": "/abs/s.tsv"}})");
    auto c = load_config(dir / "sub/run.json");
    CHECK(*c.paths.labeled_corpus == dir / "sub/data/l.jsonl");
    CHECK(*c.paths.site_map == fs::path("/abs/s.tsv"));
    CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
    testing::write_file(dir / "bad.json", "{ nope");
    CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
}

TEST_CASE("command-line flags override the file") {
    testing::TempDir dir("config");
    testing::write_file(dir / "c.json", R"({"seed": 5})");
    CommandOptions o;
    o.config = dir / "c.json";
    CHECK(effective_config(o).seed == 5);
    o.seed = 99;
    o.fixtures = dir.path();
    auto c = effective_config(o);
    CHECK(c.seed == 99);
    CHECK(c.network.seed == 99);
    CHECK(*c.scrape.fixtures == dir.path());
}

}

TEST_SUITE("cli") {

namespace {

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("usage errors exit with 2") {
    testing::TempDir dir("cli");
    CHECK(testing::run_cli("") == 2);
    CHECK(testing::run_cli("frobnicate") == 2);
    CHECK(testing::run_cli("--help") == 0);
    CHECK(testing::run_cli("train --config /does/not/exist.json") == 2);
    testing::write_file(dir / "bad.json", R"({"models": ["mt", "cnn"]})");
    CHECK(testing::run_cli("train --config " + quoted(dir / "bad.json"), {}, dir / "err.txt") == 2);
    CHECK(testing::read_file(dir / "err.txt").find("cnn") != std::string::npos);
    CHECK(testing::run_cli("prepare --out " + quoted(dir / "o")) == 2);
    CHECK(testing::run_cli("report --out " + quoted(dir / "empty")) == 2);
}

TEST_CASE("scrape fails loudly when a feed is missing") {
    testing::TempDir dir("cli");
    auto in = testing::write_pipeline_inputs(dir.path(), 60);
    fs::remove(in.fixtures / "bike.xml");
    const std::string args = "scrape --config " + quoted(in.config) + " --fixtures " + quoted(in.fixtures) + " --out " +
                             quoted(dir / "out");
    CHECK(testing::run_cli(args, {}, dir / "err.txt") == 1);
    CHECK(testing::read_file(dir / "err.txt").find("bike") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out/corpus.jsonl"));
}

TEST_CASE("full pipeline from fixtures") {
    testing::TempDir dir("cli");
    auto in = testing::write_pipeline_inputs(dir.path(), 150);
    const fs::path out = dir / "out";
    const std::string common = " --config " + quoted(in.config) + " --out " + quoted(out);
    REQUIRE(testing::run_cli("scrape" + common + " --fixtures " + quoted(in.fixtures), dir / "scrape.txt") == 0);
    CHECK(testing::read_file(dir / "scrape.txt").find("keyword cycling: 60 items") != std::string::npos);
    auto headlines = corpus::load_headlines(out / "corpus.jsonl");
    CHECK(headlines.size() == 300);

    REQUIRE(testing::run_cli("prepare" + common) == 0);
    CHECK(corpus::load_headlines(out / "annotation_sample.jsonl").size() == 40);
    CHECK(corpus::load_split_plan(out / "split_plan.json").folds.size() == 3);

    REQUIRE(testing::run_cli("train" + common, dir / "train.txt") == 0);
    auto cv = json::parse(testing::read_file(out / "cv_report.json"));
    CHECK(cv["reports"].size() == 6);
    CHECK(fs::exists(out / "model.json"));
    CHECK(fs::exists(out / "vocab.json"));
    CHECK(fs::exists(out / "cv_report.csv"));

    REQUIRE(testing::run_cli("evaluate" + common) == 0);
    auto ev = json::parse(testing::read_file(out / "evaluation.json"));
    CHECK(ev["tasks"].size() == 2);
    CHECK(ev["in_sample"] == true);
    CHECK(ev["agreement"]["items"] == 150);

    REQUIRE(testing::run_cli("analyze" + common, dir / "analyze.txt") == 0);
    CHECK(analysis::load_predictions(out / "predictions.jsonl").size() == 300);
    auto report = json::parse(testing::read_file(out / "case_study/report.json"));
    CHECK(report["category_rows"].size() == 4);
    CHECK(report["category_domains"].size() == 4);
    for (const char* f : {"charts/category_accident.svg", "charts/gender_not_at_fault.svg", "case_study/site_tests.csv"})
        CHECK(fs::exists(out / f));

    REQUIRE(testing::run_cli("report" + common) == 0);
    auto md = testing::read_file(out / "report.md");
    CHECK(md.find("mt_mtlpt") != std::string::npos);

    for (const char* cmd : {"scrape", "prepare", "train", "evaluate", "analyze", "report"}) {
        auto manifest = json::parse(testing::read_file(out / (std::string(cmd) + "_run.json")));
        CHECK(manifest["command"] == cmd);
        CHECK(manifest["config"]["seed"] == 7);
        for (const auto& a : manifest["artifacts"]) CHECK(fs::exists(out / a.get<std::string>()));
    }

    // A checkpoint is never applied to a different feature space.
    features::fit_vocabulary({"unrelated words only"}).save(out / "vocab.json");
    CHECK(testing::run_cli("evaluate" + common, {}, dir / "err.txt") == 1);
    CHECK(testing::read_file(dir / "err.txt").find("vocab_hash") != std::string::npos);
}

TEST_CASE("analyze refuses an empty corpus") {
    testing::TempDir dir("cli");
    testing::write_file(dir / "corpus.jsonl", "");
    std::ostringstream log, err;
    CommandOptions o;
    o.out = dir.path();
    CHECK(run_command("analyze", o, log, err) == 1);
    CHECK(err.str().find("corpus") != std::string::npos);
}

}
