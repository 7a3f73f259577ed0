#include "framing/ingest.hpp"

#include "framing/errors.hpp"
#include "framing/features.hpp"
#include "framing/random.hpp"

#include <httplib.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace framing::ingest {

namespace pt = boost::property_tree;

namespace {

std::string url_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

struct UrlParts {
    std::string scheme_host_port;  // e.g. "https://news.google.com:443"
    std::string host;
    std::string path_query;
};

std::optional<UrlParts> split_url(std::string_view url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos || scheme_end == 0) return std::nullopt;
    std::string scheme(url.substr(0, scheme_end));
    for (char& c : scheme) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (scheme != "http" && scheme != "https") return std::nullopt;
    std::string_view rest = url.substr(scheme_end + 3);
    auto auth_end = rest.find_first_of("/?#");
    std::string_view authority = rest.substr(0, auth_end);
    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority = authority.substr(at + 1);
    std::string_view host = authority;
    if (!host.empty() && host.front() == '[') return std::nullopt;  // IPv6 literals unsupported
    if (auto colon = host.find(':'); colon != std::string_view::npos) {
        std::string_view port = host.substr(colon + 1);
        if (port.empty() || !std::all_of(port.begin(), port.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            return std::nullopt;
        host = host.substr(0, colon);
    }
    if (host.empty()) return std::nullopt;
    for (char c : host)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.')) return std::nullopt;
    UrlParts parts;
    parts.host = std::string(host);
    for (char& c : parts.host) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    parts.scheme_host_port = scheme + "://" + std::string(authority);
    parts.path_query = auth_end == std::string_view::npos ? "/" : std::string(rest.substr(auth_end));
    if (parts.path_query.front() != '/') parts.path_query.insert(parts.path_query.begin(), '/');
    return parts;
}

std::string normalize_whitespace(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

bool transient_status(int status) { return status == 429 || status >= 500; }

}  // namespace

void validate(const FeedRequest& request) {
    if (request.keyword.empty()) throw ValidationError("keyword", "feed keyword must be nonempty");
    if (request.max_items < 1) throw ValidationError("max_items", "max_items must be at least 1");
}

std::string request_url(const FeedRequest& request) {
    std::string url = request.base_url;
    const std::string placeholder = "{keyword}";
    std::string encoded = url_encode(request.keyword);
    for (auto pos = url.find(placeholder); pos != std::string::npos; pos = url.find(placeholder, pos + encoded.size()))
        url.replace(pos, placeholder.size(), encoded);
    return url;
}

HttpFeedSource::HttpFeedSource(RetryPolicy retry, std::chrono::seconds timeout) : retry_(retry), timeout_(timeout) {}

HttpFeedSource::HostSlot& HttpFeedSource::slot_for(const std::string& host) {
    std::lock_guard lock(slots_mutex_);
    auto& slot = slots_[host];
    if (!slot) slot = std::make_unique<HostSlot>();
    return *slot;
}

void HttpFeedSource::wait_turn(HostSlot& slot, std::chrono::milliseconds delay) {
    std::lock_guard lock(slot.mutex);
    auto now = std::chrono::steady_clock::now();
    if (now < slot.next_allowed) std::this_thread::sleep_until(slot.next_allowed);
    slot.next_allowed = std::chrono::steady_clock::now() + delay;
}

std::string HttpFeedSource::fetch(const FeedRequest& request) {
    validate(request);
    std::string url = request_url(request);
    auto parts = split_url(url);
    if (!parts) throw FetchError(-1, "malformed feed URL: " + url);

    httplib::Client client(parts->scheme_host_port);
    client.set_follow_location(true);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    HostSlot& slot = slot_for(parts->host);

    int last_status = -1;
    std::string last_error;
    auto backoff = retry_.initial_backoff;
    for (int attempt = 0; attempt <= retry_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        wait_turn(slot, request.politeness_delay);
        auto res = client.Get(parts->path_query);
        if (!res) {
            last_status = -1;
            last_error = httplib::to_string(res.error());
            continue;
        }
        last_status = res->status;
        if (res->status >= 200 && res->status < 300) return res->body;
        if (!transient_status(res->status))
            throw FetchError(res->status, "HTTP " + std::to_string(res->status) + " from " + url);
        last_error = "HTTP " + std::to_string(res->status);
    }
    if (last_status == 429)
        throw BackoffExhaustedError(429, "rate limited by " + parts->host + " after " +
                                             std::to_string(retry_.max_retries) + " retries");
    throw FetchError(last_status, "fetch failed for " + url + " after " + std::to_string(retry_.max_retries) +
                                      " retries: " + last_error);
}

std::string FixtureFeedSource::fetch(const FeedRequest& request) {
    validate(request);
    std::string name = request.keyword;
    std::replace(name.begin(), name.end(), ' ', '_');
    auto path = dir_ / (name + ".xml");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FetchError(404, "no fixture feed " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fetch_feed(FeedSource& source, const FeedRequest& request) { return source.fetch(request); }

std::vector<FetchOutcome> fetch_all(FeedSource& source, const std::vector<FeedRequest>& requests,
                                    std::size_t max_in_flight) {
    std::vector<FetchOutcome> out(requests.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < requests.size(); i = next++) {
            try {
                out[i].body = source.fetch(requests[i]);
                out[i].status = 200;
            } catch (const FetchError& e) {
                out[i].error = e.what();
                out[i].status = e.status();
            } catch (const std::exception& e) {
                out[i].error = e.what();
                out[i].status = -1;
            }
        }
    };
    std::size_t n_threads = std::clamp<std::size_t>(max_in_flight, 1, std::max<std::size_t>(1, requests.size()));
    std::vector<std::thread> threads;
    for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    return out;
}

ParseResult parse_rss(std::string_view xml) {
    pt::ptree tree;
    try {
        std::istringstream in{std::string(xml)};
        pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError(std::string("malformed RSS: ") + e.what());
    }
    auto rss = tree.get_child_optional("rss");
    if (!rss) throw ParseError("malformed RSS: missing <rss> root element");

    ParseResult result;
    auto channel = rss->get_child_optional("channel");
    if (!channel) return result;
    std::size_t position = 0;
    for (const auto& [name, node] : *channel) {
        if (name != "item") continue;
        ++position;
        auto title_node = node.get_child_optional("title");
        std::string title = title_node ? normalize_whitespace(title_node->data()) : std::string();
        if (title.empty()) {
            result.warnings.push_back("item " + std::to_string(position) + ": missing <title>, skipped");
            continue;
        }
        RawItem item;
        item.link = normalize_whitespace(node.get<std::string>("link", ""));
        if (auto d = node.get_optional<std::string>("pubDate")) item.pub_date = normalize_whitespace(*d);
        if (auto src = node.get_child_optional("source")) {
            std::string name_text = normalize_whitespace(src->data());
            if (!name_text.empty()) item.source = name_text;
            if (auto url = src->get_optional<std::string>("<xmlattr>.url")) item.source_url = *url;
        }
        if (item.source) {
            std::string suffix = " - " + *item.source;
            if (title.size() > suffix.size() && title.compare(title.size() - suffix.size(), suffix.size(), suffix) == 0)
                title.resize(title.size() - suffix.size());
        } else if (auto dash = title.rfind(" - "); dash != std::string::npos && dash > 0 && dash + 3 < title.size()) {
            item.source = title.substr(dash + 3);
            title.resize(dash);
        }
        item.title = std::move(title);
        result.items.push_back(std::move(item));
    }
    return result;
}

std::string serialize_rss(const std::vector<RawItem>& items, std::string_view channel_title) {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<rss version=\"2.0\"><channel><title>"
        << xml_escape(channel_title) << "</title>\n";
    for (const auto& item : items) {
        out << "<item><title>" << xml_escape(item.source ? item.title + " - " + *item.source : item.title)
            << "</title><link>" << xml_escape(item.link) << "</link>";
        if (item.pub_date) out << "<pubDate>" << xml_escape(*item.pub_date) << "</pubDate>";
        if (item.source) {
            out << "<source";
            if (item.source_url) out << " url=\"" << xml_escape(*item.source_url) << "\"";
            out << ">" << xml_escape(*item.source) << "</source>";
        }
        out << "</item>\n";
    }
    out << "</channel></rss>\n";
    return out.str();
}

corpus::Subject subject_for_keyword(std::string_view keyword, const KeywordGroups& groups) {
    std::string k(keyword);
    for (char& c : k) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    auto in = [&](const std::vector<std::string>& g) { return std::find(g.begin(), g.end(), k) != g.end(); };
    if (in(groups.motorcyclist)) return corpus::Subject::Motorcyclist;
    if (in(groups.cyclist)) return corpus::Subject::Cyclist;
    throw ConfigError("keyword '" + std::string(keyword) + "' belongs to no subject group");
}

std::optional<std::string> domain_of(std::string_view url) {
    auto parts = split_url(url);
    if (!parts) return std::nullopt;
    std::string host = parts->host;
    if (host.rfind("www.", 0) == 0) host.erase(0, 4);
    if (host.empty() || host.find('.') == std::string::npos) return std::nullopt;
    return host;
}

std::optional<std::string> iso8601_from_rfc822(std::string_view date) {
    static constexpr std::array<std::string_view, 12> months{"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                             "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    std::string s(date);
    if (auto comma = s.find(','); comma != std::string::npos) s = s.substr(comma + 1);
    std::istringstream in(s);
    int day = 0, year = 0, hh = 0, mm = 0, ss = 0;
    std::string mon, time, zone;
    if (!(in >> day >> mon >> year >> time)) return std::nullopt;
    in >> zone;
    auto m = std::find(months.begin(), months.end(), mon);
    if (m == months.end() || day < 1 || day > 31 || year < 1900) return std::nullopt;
    char c1 = 0, c2 = 0;
    std::istringstream t(time);
    if (!(t >> hh >> c1 >> mm) || c1 != ':') return std::nullopt;
    if (t >> c2 >> ss) {
        if (c2 != ':') return std::nullopt;
    } else {
        ss = 0;
    }
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    int offset_min = 0;
    if (!zone.empty() && (zone[0] == '+' || zone[0] == '-') && zone.size() == 5) {
        int v = std::stoi(zone.substr(1));
        offset_min = (v / 100) * 60 + v % 100;
        if (zone[0] == '-') offset_min = -offset_min;
    } else if (!zone.empty() && zone != "GMT" && zone != "UT" && zone != "UTC" && zone != "Z") {
        return std::nullopt;
    }
    // Days-from-civil conversion to shift by the zone offset.
    auto days_from_civil = [](int y, unsigned mo, unsigned d) {
        y -= mo <= 2;
        const int era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153 * (mo + (mo > 2 ? -3 : 9)) + 2) / 5 + d - 1;
        const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + static_cast<int>(doe) - 719468;
    };
    auto civil_from_days = [](long z, int& y, unsigned& mo, unsigned& d) {
        z += 719468;
        const long era = (z >= 0 ? z : z - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        d = doy - (153 * mp + 2) / 5 + 1;
        mo = mp < 10 ? mp + 3 : mp - 9;
        y += mo <= 2;
    };
    long seconds = static_cast<long>(days_from_civil(year, static_cast<unsigned>(m - months.begin() + 1),
                                                     static_cast<unsigned>(day))) *
                       86400L +
                   hh * 3600L + mm * 60L + ss - offset_min * 60L;
    long days = seconds >= 0 ? seconds / 86400 : (seconds - 86399) / 86400;
    long rem = seconds - days * 86400;
    int y;
    unsigned mo, d;
    civil_from_days(days, y, mo, d);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", y, mo, d, rem / 3600, (rem / 60) % 60,
                  rem % 60);
    return std::string(buf);
}

ConversionResult to_headlines(const std::vector<RawItem>& items, std::string_view keyword,
                              const KeywordGroups& groups) {
    ConversionResult result;
    corpus::Subject subject = subject_for_keyword(keyword, groups);
    for (const auto& item : items) {
        std::optional<std::string> domain;
        if (item.source_url) domain = domain_of(*item.source_url);
        if (!domain) domain = domain_of(item.link);
        if (!domain) {
            result.warnings.push_back("unparseable link '" + item.link + "' for \"" + item.title + "\", skipped");
            continue;
        }
        corpus::Headline h;
        h.id = "h" + fnv1a_hex(item.link + "\n" + item.title);
        h.text = item.title;
        h.source_domain = *domain;
        h.subject = subject;
        h.query_keyword = std::string(keyword);
        if (item.pub_date) {
            h.published = iso8601_from_rfc822(*item.pub_date);
            if (!h.published) result.warnings.push_back("unparseable pubDate '" + *item.pub_date + "' for " + h.id);
        }
        result.headlines.push_back(std::move(h));
    }
    return result;
}

std::string normalize_for_dedup(std::string_view text) {
    std::string out;
    for (const auto& token : features::tokenize(text)) {
        if (!out.empty()) out.push_back(' ');
        out += token;
    }
    return out;
}

std::vector<corpus::Headline> dedup(const std::vector<corpus::Headline>& headlines) {
    std::unordered_set<std::string> seen;
    std::vector<corpus::Headline> out;
    for (const auto& h : headlines)
        if (seen.insert(normalize_for_dedup(h.text)).second) out.push_back(h);
    return out;
}

bool matches_keywords(std::string_view text, const std::vector<std::string>& keywords, KeywordMatch mode) {
    for (const auto& token : features::tokenize(text)) {
        for (const auto& k : keywords) {
            bool hit = mode == KeywordMatch::Exact ? token == k : token.rfind(k, 0) == 0;
            if (hit) return true;
        }
    }
    return false;
}

SampleResult accident_keyword_subsample(const std::vector<corpus::Headline>& headlines, std::size_t n,
                                        std::uint64_t seed, const std::vector<std::string>& keywords,
                                        KeywordMatch mode) {
    if (n < 2) throw SizingError("sample size must be at least 2");
    if (n > headlines.size())
        throw SizingError("sample size " + std::to_string(n) + " exceeds the " + std::to_string(headlines.size()) +
                          " available headlines");
    std::vector<std::string> lowered;
    for (const auto& k : keywords) lowered.push_back(normalize_for_dedup(k));

    std::vector<std::size_t> matching, other;
    for (std::size_t i = 0; i < headlines.size(); ++i)
        (matches_keywords(headlines[i].text, lowered, mode) ? matching : other).push_back(i);

    SampleResult result;
    std::size_t want_match = (n + 1) / 2;
    std::size_t want_other = n / 2;
    if (matching.size() < want_match) {
        result.warnings.push_back("keyword pool has " + std::to_string(matching.size()) + " headlines, quota " +
                                  std::to_string(want_match) + "; filling from the other pool");
        want_other += want_match - matching.size();
        want_match = matching.size();
    } else if (other.size() < want_other) {
        result.warnings.push_back("non-keyword pool has " + std::to_string(other.size()) + " headlines, quota " +
                                  std::to_string(want_other) + "; filling from the keyword pool");
        want_match += want_other - other.size();
        want_other = other.size();
    }

    Rng rng(seed);
    std::vector<std::size_t> chosen;
    auto draw = [&](std::vector<std::size_t>& pool, std::size_t k) {
        // Partial Fisher-Yates: the first k slots become the sample.
        for (std::size_t i = 0; i < k; ++i) {
            std::size_t j = i + rng.index(pool.size() - i);
            std::swap(pool[i], pool[j]);
            chosen.push_back(pool[i]);
        }
    };
    draw(matching, want_match);
    draw(other, want_other);
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i : chosen) result.headlines.push_back(headlines[i]);
    return result;
}

}  // namespace framing::ingest
