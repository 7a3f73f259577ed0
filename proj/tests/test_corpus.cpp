#include "support.hpp"

#include "framing/corpus.hpp"
#include "framing/errors.hpp"
#include "framing/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace framing;
using namespace framing::corpus;
using framing::testing::TempDir;

TEST_SUITE("corpus") {

TEST_CASE("enum names round trip") {
    for (int i = 0; i < 4; ++i) {
        auto a = static_cast<Accident>(i);
        CHECK(accident_from_string(to_string(a)) == a);
    }
    for (int i = 0; i < 3; ++i) {
        auto p = static_cast<Perception>(i);
        CHECK(perception_from_string(to_string(p)) == p);
    }
    CHECK(subject_from_string("motorcyclist") == Subject::Motorcyclist);
    CHECK_THROWS_AS(accident_from_string("CyclistFault"), ValidationError);
    CHECK(display_name(Accident::NotAccident) == "Not Accident");
    CHECK(display_name(Perception::Positive) == "Positive");
}

TEST_CASE("related/fault pair maps bijectively onto the accident class") {
    for (int i = 0; i < 4; ++i) {
        auto a = static_cast<Accident>(i);
        auto [related, fault] = annotation_from_accident(a);
        CHECK(accident_from_annotation(related, fault) == a);
    }
    CHECK(accident_from_annotation(false, std::nullopt) == Accident::NotAccident);
    CHECK(accident_from_annotation(true, Fault::Other) == Accident::OtherFault);
    CHECK_THROWS_AS(accident_from_annotation(false, Fault::Cyclist), ValidationError);
    CHECK_THROWS_AS(accident_from_annotation(true, std::nullopt), ValidationError);
}

TEST_CASE("load_corpus on empty and small files") {
    TempDir dir("corpus");
    testing::write_file(dir / "empty.jsonl", "");
    CHECK(load_corpus(dir / "empty.jsonl").empty());

    testing::write_file(dir / "two.jsonl",
                        R"({"id":"a","text":"Cyclist hit","source_domain":"nypost.com","subject":"cyclist","query_keyword":"cycling","published":null,"perception":"negative","accident":"cyclist_fault","annotators":null})"
                        "\n"
                        R"({"id":"b","text":"Rider wins","source_domain":"road.cc","subject":"motorcyclist","query_keyword":"motorcycle","published":"2021-01-01T00:00:00Z","perception":"positive","accident":"not_accident","annotators":[{"perception":"positive","accident":"not_accident"}]})"
                        "\n");
    auto records = load_corpus(dir / "two.jsonl");
    REQUIRE(records.size() == 2);
    CHECK(records[0].headline.id == "a");
    CHECK(records[0].gold.accident == Accident::CyclistFault);
    CHECK(records[0].gold.perception == Perception::Negative);
    CHECK(records[1].headline.id == "b");
    CHECK(records[1].headline.subject == Subject::Motorcyclist);
    CHECK(records[1].headline.published == std::optional<std::string>("2021-01-01T00:00:00Z"));
    REQUIRE(records[1].annotator_labels.has_value());
    CHECK(records[1].annotator_labels->size() == 1);
}

TEST_CASE("related/fault storage form is accepted") {
    auto r = annotated_from_json_line(
        R"({"id":"x","text":"t","source_domain":"a.com","subject":"cyclist","query_keyword":"bike","perception":"neutral","related":"yes","fault":"unknown"})");
    CHECK(r.gold.accident == Accident::UnknownFault);
    CHECK_THROWS_AS(
        annotated_from_json_line(
            R"({"id":"x","text":"t","source_domain":"a.com","subject":"cyclist","query_keyword":"bike","perception":"neutral","related":"no","accident":"other_fault"})"),
        ValidationError);
}

TEST_CASE("load errors name the line or the field") {
    TempDir dir("corpus");
    const std::string good =
        R"({"id":"a","text":"x","source_domain":"d.com","subject":"cyclist","query_keyword":"cycling","perception":"neutral","accident":"not_accident"})";
    testing::write_file(dir / "bad.jsonl", good + "\n{\"id\": \n");
    try {
        load_corpus(dir / "bad.jsonl");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    testing::write_file(dir / "field.jsonl",
                        R"({"id":"a","text":"x","source_domain":"d.com","subject":"cyclist","query_keyword":"cycling","perception":"angry","accident":"not_accident"})"
                        "\n");
    try {
        load_corpus(dir / "field.jsonl");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "perception");
    }
    testing::write_file(dir / "blank.jsonl",
                        R"({"id":"a","text":"   ","source_domain":"d.com","subject":"cyclist","query_keyword":"cycling","perception":"neutral","accident":"not_accident"})"
                        "\n");
    CHECK_THROWS_AS(load_corpus(dir / "blank.jsonl"), ValidationError);
    testing::write_file(dir / "dup.jsonl", good + "\n" + good + "\n");
    CHECK_THROWS_AS(load_corpus(dir / "dup.jsonl"), ValidationError);
    CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl"), IoError);
}

TEST_CASE("save_corpus then load_corpus is the identity") {
    TempDir dir("corpus");
    save_corpus({}, dir / "empty.jsonl");
    CHECK(testing::read_file(dir / "empty.jsonl").empty());

    testing::SyntheticOptions o;
    o.n = 100;
    o.seed = 42;
    o.annotators = true;
    auto records = testing::synthetic_corpus(o);
    records[3].headline.text = "Ciclista atropellado en Bogotá — «grave» 🚲";
    records[4].annotator_labels.reset();
    save_corpus(records, dir / "rt.jsonl");
    CHECK(load_corpus(dir / "rt.jsonl") == records);

    save_corpus({records[0]}, dir / "one.jsonl");
    auto text = testing::read_file(dir / "one.jsonl");
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
}

TEST_CASE("headline files carry null labels") {
    TempDir dir("corpus");
    auto records = testing::synthetic_corpus({});
    std::vector<Headline> hs;
    for (const auto& r : records) hs.push_back(r.headline);
    save_headlines(hs, dir / "h.jsonl");
    CHECK(load_headlines(dir / "h.jsonl") == hs);
    CHECK_THROWS_AS(load_corpus(dir / "h.jsonl"), ValidationError);
}

TEST_CASE("split plan counts follow floor-with-minimum-one") {
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) ids.push_back("id" + std::to_string(i));
    auto plan = make_split_plan(ids, 1, 0.2, 0.125, 7);
    REQUIRE(plan.folds.size() == 1);
    CHECK(plan.folds[0].test.size() == 2);
    CHECK(plan.folds[0].dev.size() == 1);
    CHECK(plan.folds[0].train.size() == 7);
    CHECK(make_split_plan(ids, 1, 0.2, 0.125, 7) == plan);
    CHECK_FALSE(make_split_plan(ids, 1, 0.2, 0.125, 8) == plan);

    auto tiny = make_split_plan({"a", "b", "c"}, 2, 0.1, 0.1, 1);
    for (const auto& f : tiny.folds) {
        CHECK(f.test.size() == 1);
        CHECK(f.dev.size() == 1);
        CHECK(f.train.size() == 1);
    }
    CHECK_THROWS_AS(make_split_plan({"a", "b"}, 1, 0.2, 0.1, 1), SizingError);
    CHECK_THROWS_AS(make_split_plan(ids, 0, 0.2, 0.1, 1), SizingError);
}

TEST_CASE("split plan folds are disjoint and cover only known ids") {
    std::vector<std::string> ids;
    for (int i = 0; i < 1000; ++i) ids.push_back("id" + std::to_string(i));
    const std::set<std::string> all(ids.begin(), ids.end());
    auto plan = make_split_plan(ids, 5, 0.2, 0.1, 3);
    REQUIRE(plan.folds.size() == 5);
    for (const auto& f : plan.folds) {
        std::set<std::string> tr(f.train.begin(), f.train.end()), dv(f.dev.begin(), f.dev.end()),
            te(f.test.begin(), f.test.end());
        CHECK(tr.size() + dv.size() + te.size() == 1000);
        std::set<std::string> u = tr;
        u.insert(dv.begin(), dv.end());
        u.insert(te.begin(), te.end());
        CHECK(u.size() == 1000);
        CHECK(std::includes(all.begin(), all.end(), u.begin(), u.end()));
        CHECK(te.size() == 200);
        CHECK(dv.size() == 80);
    }
    CHECK(plan.folds[0].test != plan.folds[1].test);

    TempDir dir("corpus");
    save_split_plan(plan, dir / "plan.json");
    CHECK(load_split_plan(dir / "plan.json") == plan);
}

TEST_CASE("schema counts") {
    CHECK(schema_counts({}).total.records == 0);
    std::vector<AnnotatedHeadline> three(3);
    for (int i = 0; i < 3; ++i) {
        three[i].headline.id = std::to_string(i);
        three[i].gold.perception = static_cast<Perception>(i);
    }
    auto c = schema_counts(three);
    for (auto v : c.total.perception) CHECK(v == 1);
    CHECK(check_counts(c.total).empty());

    auto records = testing::synthetic_corpus({.n = 300, .seed = 5});
    auto before = schema_counts(records);
    Rng rng(9);
    rng.shuffle(std::span<AnnotatedHeadline>(records));
    auto after = schema_counts(records);
    CHECK(before.total.perception == after.total.perception);
    CHECK(before.total.accident == after.total.accident);
    CHECK(before.cyclist.records + before.motorcyclist.records == 300);
    std::size_t sum = 0;
    for (auto v : before.total.perception) sum += v;
    CHECK(sum == 300);
    CHECK(before.total.fault_total() == before.total.related_yes());
    CHECK(check_counts(before.total).empty());
}

TEST_CASE("published statistics table fails the fault-sum check") {
    SubjectCounts table;
    table.records = 3500;
    table.perception = {235, 2362, 903};
    table.accident = {1470, 249, 1174, 616};
    CHECK(table.related_yes() == 2030);
    CHECK(table.fault_total() == 2039);
    auto problems = check_counts(table);
    REQUIRE(problems.size() == 1);
    CHECK(problems[0].find("2039") != std::string::npos);
}

}
