#pragma once

// Thin client for a MediaWiki-compatible revisions endpoint. Writes fixture
// JSONL (wikitext payloads) so fetched histories go through load_corpus like
// any other corpus. Not included by wikirel.hpp: it needs httplib.

#include "wikirel/common.hpp"

#include "httplib.h"
#include "json.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace wikirel {

inline constexpr std::chrono::milliseconds kMinRequestSpacing{100};

struct FetchOptions {
    std::string base_url = "https://en.wikipedia.org/w/api.php";
    std::string language = "en";
    std::string topic;
    std::vector<std::string> titles;
    std::string output;      // JSONL, appended to
    std::string cursor;      // JSON map title -> continuation token or "done"
    std::chrono::milliseconds spacing = kMinRequestSpacing;
    int batch = 50;          // revisions per request
    int max_requests = 0;    // 0: unlimited
    std::string user_agent = "wikirel-fetch/1.0";
};

struct FetchResult {
    std::size_t requests = 0;
    std::size_t revisions = 0;
    std::size_t completed_titles = 0;
    bool interrupted = false;  // stopped by max_requests
};

namespace detail {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

inline SplitUrl split_base_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw DataError("base url '" + url + "' has no scheme");
    const auto slash = url.find('/', scheme + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

inline std::map<std::string, std::string> read_cursor(const std::string& path) {
    std::map<std::string, std::string> out;
    if (path.empty() || !std::filesystem::exists(path)) return out;
    std::ifstream in(path);
    try {
        out = nlohmann::json::parse(in).get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path, std::string("malformed cursor file: ") + e.what());
    }
    return out;
}

inline void write_cursor(const std::string& path, const std::map<std::string, std::string>& cursor) {
    if (path.empty()) return;
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << nlohmann::json(cursor).dump(1) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

} // namespace detail

// Requests are spaced by at least `spacing` (never less than 100 ms). The
// cursor is rewritten after every batch, so an interrupted run resumes where
// it stopped without duplicating lines.
inline FetchResult fetch_histories(const FetchOptions& opt) {
    if (opt.topic.empty()) throw DataError("fetch needs a topic");
    if (opt.output.empty()) throw DataError("fetch needs an output file");
    const auto spacing = std::max(opt.spacing, kMinRequestSpacing);
    const auto base = detail::split_base_url(opt.base_url);
    httplib::Client client(base.origin);
    client.set_follow_location(true);
    client.set_read_timeout(30, 0);

    auto cursor = detail::read_cursor(opt.cursor);
    std::ofstream out(opt.output, std::ios::app);
    if (!out) throw DataError(opt.output, "cannot open output");

    FetchResult result;
    std::optional<std::chrono::steady_clock::time_point> last;
    for (const auto& title : opt.titles) {
        if (cursor[title] == "done") {
            ++result.completed_titles;
            continue;
        }
        std::optional<std::int64_t> page_id;
        std::string page_title = title;
        for (;;) {
            if (opt.max_requests > 0 && result.requests >= static_cast<std::size_t>(opt.max_requests)) {
                result.interrupted = true;
                out.flush();
                return result;
            }
            if (last) {
                const auto wait = *last + spacing - std::chrono::steady_clock::now();
                if (wait > std::chrono::steady_clock::duration::zero()) std::this_thread::sleep_for(wait);
            }
            httplib::Params params{{"action", "query"},       {"prop", "revisions"},
                                   {"titles", title},         {"rvprop", "ids|timestamp|user|flags|content"},
                                   {"rvslots", "main"},       {"rvdir", "newer"},
                                   {"rvlimit", std::to_string(opt.batch)},
                                   {"format", "json"},        {"formatversion", "2"}};
            if (!cursor[title].empty()) params.emplace("rvcontinue", cursor[title]);
            httplib::Headers headers{{"User-Agent", opt.user_agent}};
            last = std::chrono::steady_clock::now();
            auto res = client.Get(base.path, params, headers);
            ++result.requests;
            if (!res) throw DataError(opt.base_url, "request failed: " + httplib::to_string(res.error()));
            if (res->status != 200) throw DataError(opt.base_url, "HTTP status " + std::to_string(res->status));

            nlohmann::json j;
            try {
                j = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw DataError(opt.base_url, std::string("malformed response: ") + e.what());
            }
            const auto& pages = j.at("query").at("pages");
            if (pages.empty() || pages[0].contains("missing")) throw DataError("page '" + title + "' not found");
            const auto& page = pages[0];
            page_id = page.at("pageid").get<std::int64_t>();
            page_title = page.at("title").get<std::string>();
            for (const auto& rev : page.value("revisions", nlohmann::json::array())) {
                nlohmann::ordered_json line;
                line["lang"] = opt.language;
                line["topic"] = opt.topic;
                line["page_id"] = *page_id;
                line["title"] = page_title;
                line["rev_id"] = rev.at("revid");
                const auto parent = rev.value("parentid", std::int64_t{0});
                line["parent_id"] = parent == 0 ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(parent);
                line["timestamp"] = rev.at("timestamp");
                line["user"] = rev.value("user", std::string("(hidden)"));
                line["registered"] = !rev.value("anon", false);
                line["wikitext"] = rev.at("slots").at("main").value("content", std::string());
                out << line.dump() << '\n';
                ++result.revisions;
            }
            out.flush();
            if (j.contains("continue") && j["continue"].contains("rvcontinue")) {
                cursor[title] = j["continue"]["rvcontinue"].get<std::string>();
                detail::write_cursor(opt.cursor, cursor);
                continue;
            }
            break;
        }
        nlohmann::ordered_json meta;
        meta["meta"] = {{"lang", opt.language},
                        {"topic", opt.topic},
                        {"page_id", *page_id},
                        {"title", page_title},
                        {"retrieved_at", format_instant(std::chrono::time_point_cast<std::chrono::seconds>(
                                             std::chrono::system_clock::now()))}};
        out << meta.dump() << '\n';
        out.flush();
        cursor[title] = "done";
        detail::write_cursor(opt.cursor, cursor);
        ++result.completed_titles;
    }
    return result;
}

} // namespace wikirel
