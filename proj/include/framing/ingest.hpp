#pragma once

#include "framing/corpus.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace framing::ingest {

inline constexpr std::string_view kGoogleNewsTemplate =
    "https://news.google.com/rss/search?q={keyword}&hl=en-US&gl=US&ceid=US:en";

struct FeedRequest {
    std::string keyword;
    // "{keyword}" is replaced by the URL-encoded keyword.
    std::string base_url = std::string(kGoogleNewsTemplate);
    std::size_t max_items = 100;
    std::chrono::milliseconds politeness_delay{1000};
};

void validate(const FeedRequest& request);
std::string request_url(const FeedRequest& request);

struct RawItem {
    std::string title;
    std::string link;
    std::optional<std::string> pub_date;
    std::optional<std::string> source;
    // url attribute of the <source> element; points at the publisher's site.
    std::optional<std::string> source_url;

    friend bool operator==(const RawItem&, const RawItem&) = default;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
};

class FeedSource {
public:
    virtual ~FeedSource() = default;
    // Returns the raw response body. Throws FetchError / BackoffExhaustedError.
    virtual std::string fetch(const FeedRequest& request) = 0;
};

// Live HTTP(S). Consecutive requests to the same host are spaced by at least the
// request's politeness delay, including retries. Safe to call from several threads.
class HttpFeedSource : public FeedSource {
public:
    explicit HttpFeedSource(RetryPolicy retry = {}, std::chrono::seconds timeout = std::chrono::seconds(20));
    std::string fetch(const FeedRequest& request) override;

private:
    struct HostSlot {
        std::mutex mutex;
        std::chrono::steady_clock::time_point next_allowed{};
    };
    HostSlot& slot_for(const std::string& host);
    void wait_turn(HostSlot& slot, std::chrono::milliseconds delay);

    RetryPolicy retry_;
    std::chrono::seconds timeout_;
    std::mutex slots_mutex_;
    std::map<std::string, std::unique_ptr<HostSlot>> slots_;
};

// Reads <dir>/<keyword>.xml (spaces replaced by '_'). Missing file -> FetchError(404).
class FixtureFeedSource : public FeedSource {
public:
    explicit FixtureFeedSource(std::filesystem::path dir) : dir_(std::move(dir)) {}
    std::string fetch(const FeedRequest& request) override;

private:
    std::filesystem::path dir_;
};

std::string fetch_feed(FeedSource& source, const FeedRequest& request);

struct FetchOutcome {
    std::optional<std::string> body;
    std::string error;
    int status = 0;
};

// Fetches every request with at most max_in_flight concurrent calls. Results are
// returned in request order; failures are captured per request.
std::vector<FetchOutcome> fetch_all(FeedSource& source, const std::vector<FeedRequest>& requests,
                                    std::size_t max_in_flight = 4);

struct ParseResult {
    std::vector<RawItem> items;
    std::vector<std::string> warnings;
};

// Throws ParseError on malformed XML or a document without an <rss> root.
ParseResult parse_rss(std::string_view xml);

// RSS 2.0 rendering of items, Google News style (" - Publisher" title suffix
// plus a <source> element). Used for fixtures.
std::string serialize_rss(const std::vector<RawItem>& items, std::string_view channel_title = "fixture");

struct KeywordGroups {
    std::vector<std::string> cyclist{"cycling", "cyclist", "cyclists", "bike", "bikes", "bicycle", "bicyclist"};
    std::vector<std::string> motorcyclist{"motorcycling", "motorcycle", "motorcycles", "motorcyclist",
                                          "motorcyclists", "motorbike"};
};

// Throws ConfigError for a keyword in neither group.
corpus::Subject subject_for_keyword(std::string_view keyword, const KeywordGroups& groups = {});

// Lowercased hostname with a leading "www." removed; nullopt when unparseable.
std::optional<std::string> domain_of(std::string_view url);

// RFC 822 pubDate -> ISO-8601 UTC; nullopt when unparseable.
std::optional<std::string> iso8601_from_rfc822(std::string_view date);

struct ConversionResult {
    std::vector<corpus::Headline> headlines;
    std::vector<std::string> warnings;
};

ConversionResult to_headlines(const std::vector<RawItem>& items, std::string_view keyword,
                              const KeywordGroups& groups = {});

// Lowercased, punctuation-stripped, whitespace-collapsed text.
std::string normalize_for_dedup(std::string_view text);

// Keeps the first headline of every normalized-text group, preserving order.
std::vector<corpus::Headline> dedup(const std::vector<corpus::Headline>& headlines);

enum class KeywordMatch { Exact, Prefix };

inline const std::vector<std::string> kAccidentKeywords{"crash", "death", "killed", "dead"};

bool matches_keywords(std::string_view text, const std::vector<std::string>& keywords, KeywordMatch mode);

struct SampleResult {
    std::vector<corpus::Headline> headlines;
    std::vector<std::string> warnings;
};

// ceil(n/2) headlines from the keyword-matching pool and floor(n/2) from the
// rest, each drawn without replacement; a short pool is topped up from the
// other. Output keeps the input order. Throws SizingError if n exceeds supply.
SampleResult accident_keyword_subsample(const std::vector<corpus::Headline>& headlines, std::size_t n,
                                        std::uint64_t seed,
                                        const std::vector<std::string>& keywords = kAccidentKeywords,
                                        KeywordMatch mode = KeywordMatch::Prefix);

}  // namespace framing::ingest
