#pragma once

#include "wikirel/common.hpp"

#include "json.hpp"

#include <algorithm>
#include <compare>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace wikirel {

// ------------------------------------------------------------
// revision data model
// ------------------------------------------------------------

struct UrlList {
    std::vector<std::string> urls;
    bool operator==(const UrlList&) const = default;
};

struct Wikitext {
    std::string text;
    bool operator==(const Wikitext&) const = default;
};

using Payload = std::variant<UrlList, Wikitext>;

struct PageMeta {
    std::string language;
    std::string topic;
    std::int64_t page_id = 0;
    std::string title;
    bool operator==(const PageMeta&) const = default;
};

struct RevisionRecord {
    std::string language;
    std::string topic;
    std::int64_t page_id = 0;
    std::string title;
    std::int64_t rev_id = 0;
    std::optional<std::int64_t> parent_id;
    Instant timestamp{};
    std::string user;
    bool registered = false;
    Payload payload;

    bool operator==(const RevisionRecord&) const = default;
};

struct ArticleHistory {
    PageMeta page;
    std::vector<RevisionRecord> revisions;  // sorted by (timestamp, rev_id)
    Instant retrieved_at{};

    bool operator==(const ArticleHistory&) const = default;
};

enum class Tier { high, mid, low, unassigned };

inline std::string_view to_string(Tier t) {
    switch (t) {
        case Tier::high: return "high";
        case Tier::mid: return "mid";
        case Tier::low: return "low";
        case Tier::unassigned: return "unassigned";
    }
    return "unassigned";
}

struct DatasetKey {
    std::string topic;
    std::string language;

    auto operator<=>(const DatasetKey&) const = default;
    bool operator==(const DatasetKey&) const = default;

    std::string str() const { return topic + "/" + language; }
};

struct Dataset {
    DatasetKey key;
    std::vector<ArticleHistory> articles;  // ordered by page id
    Tier tier = Tier::unassigned;

    bool operator==(const Dataset&) const = default;
};

// ------------------------------------------------------------
// fixture format
//
//   {"lang":..,"topic":..,"page_id":..,"title":..,"rev_id":..,"parent_id":..|null,
//    "timestamp":"YYYY-MM-DDThh:mm:ssZ","user":..,"registered":true|false,
//    "urls":[..]}                          (or "wikitext":"..")
//   {"meta":{"lang":..,"topic":..,"page_id":..,"title":..,"retrieved_at":".."}}
// ------------------------------------------------------------

namespace detail {

template <typename T>
T required(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw DataError(std::string("field '") + key + "' has the wrong type");
    }
}

inline RevisionRecord revision_from_json(const nlohmann::json& j) {
    RevisionRecord r;
    r.language = required<std::string>(j, "lang");
    r.topic = required<std::string>(j, "topic");
    r.page_id = required<std::int64_t>(j, "page_id");
    r.title = required<std::string>(j, "title");
    r.rev_id = required<std::int64_t>(j, "rev_id");
    if (auto it = j.find("parent_id"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw DataError("field 'parent_id' has the wrong type");
        r.parent_id = it->get<std::int64_t>();
    }
    r.timestamp = parse_instant(required<std::string>(j, "timestamp"));
    r.user = required<std::string>(j, "user");
    r.registered = required<bool>(j, "registered");
    const bool has_urls = j.contains("urls");
    const bool has_text = j.contains("wikitext");
    if (has_urls == has_text) throw DataError("exactly one of 'urls' or 'wikitext' is required");
    if (has_urls) {
        r.payload = UrlList{required<std::vector<std::string>>(j, "urls")};
    } else {
        r.payload = Wikitext{required<std::string>(j, "wikitext")};
    }
    return r;
}

inline nlohmann::ordered_json revision_to_json(const RevisionRecord& r) {
    nlohmann::ordered_json j;
    j["lang"] = r.language;
    j["topic"] = r.topic;
    j["page_id"] = r.page_id;
    j["title"] = r.title;
    j["rev_id"] = r.rev_id;
    j["parent_id"] = r.parent_id ? nlohmann::ordered_json(*r.parent_id) : nlohmann::ordered_json(nullptr);
    j["timestamp"] = format_instant(r.timestamp);
    j["user"] = r.user;
    j["registered"] = r.registered;
    if (const auto* urls = std::get_if<UrlList>(&r.payload)) {
        j["urls"] = urls->urls;
    } else {
        j["wikitext"] = std::get<Wikitext>(r.payload).text;
    }
    return j;
}

struct PageAccumulator {
    PageMeta page;
    std::vector<RevisionRecord> revisions;
    std::vector<std::size_t> lines;
    std::optional<Instant> retrieved_at;
};

} // namespace detail

// Reads a JSONL fixture stream. `source` names the stream in error messages.
inline std::vector<Dataset> load_corpus(std::istream& in, const std::string& source = "<corpus>") {
    using Key = std::tuple<std::string, std::string, std::int64_t>;  // topic, language, page
    std::map<Key, detail::PageAccumulator> pages;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(where, std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object()) throw DataError(where, "expected a JSON object");
        try {
            if (auto meta = j.find("meta"); meta != j.end()) {
                PageMeta page{detail::required<std::string>(*meta, "lang"),
                              detail::required<std::string>(*meta, "topic"),
                              detail::required<std::int64_t>(*meta, "page_id"),
                              detail::required<std::string>(*meta, "title")};
                auto& acc = pages[{page.topic, page.language, page.page_id}];
                if (acc.retrieved_at) throw DataError("duplicate meta line for page " + std::to_string(page.page_id));
                acc.page = page;
                acc.retrieved_at = parse_instant(detail::required<std::string>(*meta, "retrieved_at"));
            } else {
                auto rev = detail::revision_from_json(j);
                auto& acc = pages[{rev.topic, rev.language, rev.page_id}];
                acc.page = PageMeta{rev.language, rev.topic, rev.page_id, rev.title};
                acc.revisions.push_back(std::move(rev));
                acc.lines.push_back(line_no);
            }
        } catch (const DataError& e) {
            throw DataError(where, e.what());
        }
    }

    std::map<DatasetKey, Dataset> datasets;
    for (auto& [key, acc] : pages) {
        const std::string where = source + ": page " + std::to_string(acc.page.page_id);
        if (acc.revisions.empty()) throw DataError(where, "meta line without revisions");

        std::set<std::int64_t> ids;
        for (std::size_t i = 0; i < acc.revisions.size(); ++i) {
            if (!ids.insert(acc.revisions[i].rev_id).second) {
                throw DataError(source + ":" + std::to_string(acc.lines[i]),
                                "duplicate revision id " + std::to_string(acc.revisions[i].rev_id));
            }
        }
        std::stable_sort(acc.revisions.begin(), acc.revisions.end(), [](const auto& a, const auto& b) {
            return std::tie(a.timestamp, a.rev_id) < std::tie(b.timestamp, b.rev_id);
        });
        std::map<std::int64_t, Instant> stamp_of;
        for (const auto& r : acc.revisions) stamp_of[r.rev_id] = r.timestamp;
        for (const auto& r : acc.revisions) {
            if (!r.parent_id) continue;
            auto it = stamp_of.find(*r.parent_id);
            if (it != stamp_of.end() && it->second > r.timestamp) {
                throw DataError(where, "timestamp regression: revision " + std::to_string(r.rev_id) +
                                           " is older than its parent " + std::to_string(*r.parent_id));
            }
        }

        ArticleHistory article;
        article.page = acc.page;
        article.retrieved_at = acc.retrieved_at.value_or(acc.revisions.back().timestamp);
        if (article.retrieved_at < acc.revisions.back().timestamp) {
            throw DataError(where, "retrieved_at precedes the last revision");
        }
        article.revisions = std::move(acc.revisions);

        DatasetKey dkey{article.page.topic, article.page.language};
        auto& ds = datasets[dkey];
        ds.key = dkey;
        ds.articles.push_back(std::move(article));
    }

    std::vector<Dataset> out;
    out.reserve(datasets.size());
    for (auto& [_, ds] : datasets) out.push_back(std::move(ds));
    return out;
}

inline std::vector<Dataset> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path, "cannot open corpus file");
    return load_corpus(in, path);
}

// Writes datasets back in fixture form: one meta line per article followed by
// its revisions.
inline void write_corpus(std::ostream& out, const std::vector<Dataset>& datasets) {
    for (const auto& ds : datasets) {
        for (const auto& a : ds.articles) {
            nlohmann::ordered_json meta;
            meta["lang"] = a.page.language;
            meta["topic"] = a.page.topic;
            meta["page_id"] = a.page.page_id;
            meta["title"] = a.page.title;
            meta["retrieved_at"] = format_instant(a.retrieved_at);
            out << nlohmann::ordered_json{{"meta", meta}}.dump() << '\n';
            for (const auto& r : a.revisions) out << detail::revision_to_json(r).dump() << '\n';
        }
    }
}

// ------------------------------------------------------------
// dataset totals
// ------------------------------------------------------------

struct AgeTotals {
    double article_days = 0.0;
    std::int64_t article_revisions = 0;  // merged revisions
    std::int64_t unique_users = 0;

    bool operator==(const AgeTotals&) const = default;
};

// Number of maximal same-user runs, i.e. merged revisions.
inline std::int64_t merged_revision_count(const ArticleHistory& a) {
    std::int64_t n = 0;
    for (std::size_t i = 0; i < a.revisions.size(); ++i) {
        if (i == 0 || a.revisions[i].user != a.revisions[i - 1].user) ++n;
    }
    return n;
}

inline AgeTotals dataset_age_totals(const Dataset& d) {
    AgeTotals t;
    std::int64_t seconds = 0;
    std::set<std::string> users;
    for (const auto& a : d.articles) {
        if (a.revisions.empty()) continue;
        seconds += (a.retrieved_at - a.revisions.front().timestamp).count();
        t.article_revisions += merged_revision_count(a);
        for (const auto& r : a.revisions) users.insert(r.user);
    }
    t.article_days = static_cast<double>(seconds) / kSecondsPerDay;
    t.unique_users = static_cast<std::int64_t>(users.size());
    return t;
}

// Drops revisions at or after `cutoff`; articles left empty are removed and
// the remaining ones are treated as collected at `cutoff`.
inline Dataset apply_cutoff(const Dataset& d, Instant cutoff) {
    Dataset out{d.key, {}, d.tier};
    for (const auto& a : d.articles) {
        ArticleHistory kept{a.page, {}, std::min(a.retrieved_at, cutoff)};
        for (const auto& r : a.revisions) {
            if (r.timestamp < cutoff) kept.revisions.push_back(r);
        }
        if (!kept.revisions.empty()) out.articles.push_back(std::move(kept));
    }
    return out;
}

// Concatenates datasets into one (e.g. all topics of a language). Pages that
// occur in several inputs are kept once, first occurrence wins.
inline Dataset combine_datasets(const std::vector<Dataset>& parts, DatasetKey key) {
    Dataset out{std::move(key), {}, Tier::unassigned};
    std::set<std::int64_t> seen;
    for (const auto& d : parts) {
        for (const auto& a : d.articles) {
            if (seen.insert(a.page.page_id).second) out.articles.push_back(a);
        }
    }
    std::sort(out.articles.begin(), out.articles.end(),
              [](const auto& a, const auto& b) { return a.page.page_id < b.page.page_id; });
    return out;
}

} // namespace wikirel
