#include "support.hpp"

#include "framing/errors.hpp"
#include "framing/features.hpp"
#include "framing/random.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

using namespace framing;
using namespace framing::features;

namespace {

// Reference tokenizer for ASCII input: walk characters, keep alphanumerics lowercased.
std::vector<std::string> walk_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        unsigned char c = static_cast<unsigned char>(ch);
        bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        if (word) {
            cur.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Dense TF-IDF computed straight from the definitions.
std::vector<std::vector<double>> dense_tfidf(const std::vector<std::string>& fit_docs,
                                             const std::vector<std::string>& docs, std::vector<std::string>& terms) {
    std::vector<std::vector<std::string>> grams;
    for (const auto& d : fit_docs) {
        auto t = walk_tokens(d);
        std::vector<std::string> g = t;
        for (std::size_t i = 0; i + 1 < t.size(); ++i) g.push_back(t[i] + "_" + t[i + 1]);
        grams.push_back(g);
    }
    std::set<std::string> all;
    for (const auto& g : grams) all.insert(g.begin(), g.end());
    terms.assign(all.begin(), all.end());
    std::vector<double> idf;
    for (const auto& term : terms) {
        double df = 0;
        for (const auto& g : grams)
            if (std::find(g.begin(), g.end(), term) != g.end()) df += 1;
        idf.push_back(std::log((1.0 + fit_docs.size()) / (1.0 + df)) + 1.0);
    }
    std::vector<std::vector<double>> rows;
    for (const auto& d : docs) {
        auto t = walk_tokens(d);
        std::vector<std::string> g = t;
        for (std::size_t i = 0; i + 1 < t.size(); ++i) g.push_back(t[i] + "_" + t[i + 1]);
        std::vector<double> row(terms.size(), 0.0);
        for (std::size_t k = 0; k < terms.size(); ++k)
            row[k] = static_cast<double>(std::count(g.begin(), g.end(), terms[k])) * idf[k];
        double n = 0;
        for (double v : row) n += v * v;
        if (n > 0)
            for (double& v : row) v /= std::sqrt(n);
        rows.push_back(row);
    }
    return rows;
}

std::string random_ascii(Rng& rng, std::size_t len) {
    static const std::string alphabet = "abcXYZ019 ,.!?-_'\"\t\n;:()";
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng.index(alphabet.size())]);
    return s;
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("tokenize examples") {
    CHECK(tokenize("Cyclist hit by SUV!") == std::vector<std::string>{"cyclist", "hit", "by", "suv"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("  --  ").empty());
    CHECK(tokenize("e-bike's") == std::vector<std::string>{"e", "bike", "s"});
    CHECK(tokenize("ÉCOLE Straße") == std::vector<std::string>{"école", "straße"});
    CHECK(tokenize("ΑΘΗΝΑ Москва") == std::vector<std::string>{"αθηνα", "москва"});
    CHECK(tokenize("crash—cyclist “hurt” 🚲 ok") == std::vector<std::string>{"crash", "cyclist", "hurt", "ok"});
    CHECK(tokenize("bad\xff\xfe byte") == std::vector<std::string>{"bad", "byte"});
}

TEST_CASE("tokenize matches the character-walk reference on random ASCII") {
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        auto s = random_ascii(rng, rng.index(40));
        CHECK(tokenize(s) == walk_tokens(s));
    }
}

TEST_CASE("fit_vocabulary enumerations") {
    auto v = fit_vocabulary({"a b", "b c"});
    CHECK(v.size() == 5);
    for (const char* t : {"a", "b", "c", "a_b", "b_c"}) CHECK(v.index_of(t) >= 0);
    CHECK(v.terms().at("b").doc_freq == 2);
    CHECK(v.n_docs() == 2);
    // Indices follow sorted term order.
    std::size_t expected = 0;
    for (const auto& [term, info] : v.terms()) CHECK(info.index == expected++);

    FitOptions two;
    two.min_df = 2;
    auto v2 = fit_vocabulary({"a b", "b c"}, two);
    REQUIRE(v2.size() == 1);
    CHECK(v2.index_of("b") == 0);

    CHECK_THROWS_AS(fit_vocabulary({}), Error);
    std::vector<std::string> warnings;
    auto empty = fit_vocabulary({""}, {}, &warnings);
    CHECK(empty.size() == 0);
    CHECK(warnings.size() == 1);
    FitOptions strict;
    strict.strict_empty = true;
    CHECK_THROWS_AS(fit_vocabulary({""}, strict), Error);
}

TEST_CASE("fit_vocabulary is order-insensitive") {
    auto records = testing::synthetic_corpus({.n = 80, .seed = 3});
    std::vector<std::string> texts;
    for (const auto& r : records) texts.push_back(r.headline.text);
    auto a = fit_vocabulary(texts);
    Rng rng(4);
    rng.shuffle(std::span<std::string>(texts));
    CHECK(fit_vocabulary(texts) == a);
}

TEST_CASE("transform closed forms") {
    auto v = fit_vocabulary({"bike bike lane"});
    auto m = transform(v, {"bike bike lane", "unseen words only"});
    REQUIRE(m.rows() == 2);
    CHECK(m.row_indices(1).empty());
    // idf = 1 for every term, so the row is proportional to raw counts {bike:2, lane:1, bike_bike:1, bike_lane:1}.
    auto row = m.dense_row(0);
    const double norm = std::sqrt(4.0 + 1 + 1 + 1);
    CHECK(row[static_cast<std::size_t>(v.index_of("bike"))] == doctest::Approx(2 / norm).epsilon(1e-12));
    CHECK(row[static_cast<std::size_t>(v.index_of("lane"))] == doctest::Approx(1 / norm).epsilon(1e-12));
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.idf(i) == 1.0);
}

TEST_CASE("transform matches the dense reference and rows have unit norm") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::string> docs;
        for (int d = 0; d < 8; ++d) {
            std::string doc;
            for (std::size_t w = 0, n = 1 + rng.index(6); w < n; ++w)
                doc += std::string(1, static_cast<char>('a' + rng.index(5))) + " ";
            docs.push_back(doc);
        }
        auto v = fit_vocabulary(docs);
        auto m = transform(v, docs);
        std::vector<std::string> terms;
        auto ref = dense_tfidf(docs, docs, terms);
        REQUIRE(terms.size() == v.size());
        for (std::size_t r = 0; r < docs.size(); ++r) {
            auto row = m.dense_row(r);
            double n2 = 0;
            for (std::size_t k = 0; k < terms.size(); ++k) {
                CHECK(std::fabs(row[static_cast<std::size_t>(v.index_of(terms[k]))] - ref[r][k]) < 1e-12);
                n2 += row[k] * row[k];
            }
            CHECK(std::fabs(std::sqrt(n2) - 1.0) < 1e-9);
        }
        // Per-row independence.
        for (std::size_t r = 0; r < docs.size(); ++r) {
            auto single = transform(v, {docs[r]});
            CHECK(single.dense_row(0) == m.dense_row(r));
        }
    }
}

TEST_CASE("vocabulary serialization and hash") {
    testing::TempDir dir("features");
    auto v = fit_vocabulary({"a b c", "c d"});
    v.save(dir / "vocab.json");
    auto back = Vocabulary::load(dir / "vocab.json");
    CHECK(back == v);
    CHECK(back.hash() == v.hash());
    CHECK(fit_vocabulary({"a b"}).hash() != v.hash());
    CHECK_THROWS_AS(Vocabulary::from_json("{\"terms\": 3}"), ParseError);
    TermMap gap{{"a", {0, 1}}, {"b", {2, 1}}};
    CHECK_THROWS_AS(Vocabulary(gap, 1), ValidationError);
}

TEST_CASE("feature matrix rows") {
    FeatureMatrix m(4);
    std::vector<std::size_t> cols{0, 3};
    std::vector<double> vals{1.5, -2.0};
    m.add_row(cols, vals);
    m.add_dense_row(std::vector<double>{0, 1, 0, 0});
    CHECK(m.rows() == 2);
    CHECK(m.nonzeros() == 3);
    auto sel = m.select_rows(std::vector<std::size_t>{1, 0, 1});
    CHECK(sel.rows() == 3);
    CHECK(sel.dense_row(1) == std::vector<double>{1.5, 0, 0, -2.0});
    std::vector<std::size_t> bad{3, 1};
    CHECK_THROWS_AS(m.add_row(bad, vals), ShapeError);
    CHECK_THROWS_AS(m.add_dense_row(std::vector<double>{1, 2}), ShapeError);
}

TEST_CASE("embedding table") {
    testing::TempDir dir("features");
    testing::write_file(dir / "emb.jsonl", "{\"id\":\"a\",\"vector\":[1,0,2]}\n{\"id\":\"b\",\"vector\":[0,0,1]}\n");
    auto t = EmbeddingTable::load(dir / "emb.jsonl");
    CHECK(t.dim() == 3);
    CHECK(t.contains("a"));
    auto m = t.rows({"b", "a"});
    CHECK(m.dense_row(1) == std::vector<double>{1, 0, 2});
    CHECK_THROWS_AS(t.rows({"zzz"}), ValidationError);
    testing::write_file(dir / "ragged.jsonl", "{\"id\":\"a\",\"vector\":[1,0]}\n{\"id\":\"b\",\"vector\":[0]}\n");
    CHECK_THROWS_AS(EmbeddingTable::load(dir / "ragged.jsonl"), ValidationError);
}

}
