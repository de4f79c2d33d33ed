#pragma once

#include "wikirel/common.hpp"
#include "wikirel/corpus.hpp"
#include "wikirel/public_suffix.hpp"
#include "wikirel/url.hpp"
#include "wikirel/wikitext.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace wikirel {

// A maximal run of consecutive revisions by one user, carrying the state of
// the run's last revision.
struct MergedRevision {
    std::size_t index = 0;
    std::string user;
    bool registered = false;
    Instant timestamp{};        // last revision of the run
    Instant start_timestamp{};  // first revision of the run
    std::set<std::string> urls;
    std::map<std::string, int> domains;  // domain -> number of URLs

    bool operator==(const MergedRevision&) const = default;
};

enum class EditAction { add, remove };

inline std::string_view to_string(EditAction a) { return a == EditAction::add ? "add" : "remove"; }

struct SourceEdit {
    std::int64_t page_id = 0;
    std::string domain;
    EditAction action = EditAction::add;
    std::size_t revision = 0;  // merged-revision index
    Instant timestamp{};
    std::string user;
    bool registered = false;
    bool first_add = false;
    bool last_remove = false;

    bool operator==(const SourceEdit&) const = default;
};

// Per-revision canonical state before merging.
struct RevisionState {
    std::string user;
    bool registered = false;
    Instant timestamp{};
    std::set<std::string> urls;
    std::map<std::string, int> domains;
};

// Collapses runs of equal user names. Elapsed time between revisions is
// irrelevant.
inline std::vector<MergedRevision> merge_consecutive(const std::vector<RevisionState>& revisions) {
    std::vector<MergedRevision> out;
    for (const auto& r : revisions) {
        if (out.empty() || out.back().user != r.user) {
            MergedRevision m;
            m.index = out.size();
            m.user = r.user;
            m.start_timestamp = r.timestamp;
            out.push_back(std::move(m));
        }
        auto& m = out.back();
        m.registered = r.registered;
        m.timestamp = r.timestamp;
        m.urls = r.urls;
        m.domains = r.domains;
    }
    return out;
}

// Re-merges an arbitrary subsequence of merged revisions (e.g. a sample) and
// renumbers indices from 0.
inline std::vector<MergedRevision> remerge(const std::vector<MergedRevision>& revisions) {
    std::vector<MergedRevision> out;
    for (const auto& r : revisions) {
        if (!out.empty() && out.back().user == r.user) {
            auto& m = out.back();
            m.registered = r.registered;
            m.timestamp = r.timestamp;
            m.urls = r.urls;
            m.domains = r.domains;
        } else {
            out.push_back(r);
            out.back().index = out.size() - 1;
        }
    }
    return out;
}

// Emits domain-level transitions (URL count 0 <-> positive) between adjacent
// merged revisions; revision 0 is compared with the empty state.
inline std::vector<SourceEdit> diff_to_source_edits(const std::vector<MergedRevision>& merged, std::int64_t page_id = 0) {
    std::vector<SourceEdit> edits;
    static const std::map<std::string, int> empty;
    for (std::size_t i = 0; i < merged.size(); ++i) {
        const auto& prev = i == 0 ? empty : merged[i - 1].domains;
        const auto& cur = merged[i].domains;
        auto emit = [&](const std::string& domain, EditAction action) {
            edits.push_back(SourceEdit{page_id, domain, action, merged[i].index, merged[i].timestamp,
                                       merged[i].user, merged[i].registered, false, false});
        };
        // Both maps are ordered, so a merge walk gives deterministic output.
        auto a = prev.begin();
        auto b = cur.begin();
        while (a != prev.end() || b != cur.end()) {
            if (b == cur.end() || (a != prev.end() && a->first < b->first)) {
                if (a->second > 0) emit(a->first, EditAction::remove);
                ++a;
            } else if (a == prev.end() || b->first < a->first) {
                if (b->second > 0) emit(b->first, EditAction::add);
                ++b;
            } else {
                if (a->second > 0 && b->second <= 0) emit(a->first, EditAction::remove);
                if (a->second <= 0 && b->second > 0) emit(b->first, EditAction::add);
                ++a;
                ++b;
            }
        }
    }

    std::map<std::string, std::vector<std::size_t>> by_domain;
    for (std::size_t i = 0; i < edits.size(); ++i) by_domain[edits[i].domain].push_back(i);
    for (const auto& [_, idx] : by_domain) {
        edits[idx.front()].first_add = edits[idx.front()].action == EditAction::add;
        auto& last = edits[idx.back()];
        last.last_remove = last.action == EditAction::remove;
    }
    return edits;
}

struct ExtractStats {
    std::size_t urls_seen = 0;
    std::size_t urls_rejected = 0;
};

// Everything the feature stage needs about one article.
struct ArticleEdits {
    PageMeta page;
    Instant created_at{};
    Instant retrieved_at{};
    std::vector<MergedRevision> merged;
    std::vector<SourceEdit> edits;
};

// Raw payload -> canonical URLs -> domains, then merge and diff.
class SourceExtractor {
public:
    SourceExtractor() = default;
    SourceExtractor(PublicSuffixList psl, RedirectMap redirects)
        : psl_(std::move(psl)), redirects_(std::move(redirects)) {}

    const PublicSuffixList& suffixes() const { return psl_; }
    const RedirectMap& redirects() const { return redirects_; }

    std::optional<std::string> canonical_url(std::string_view raw) const { return normalize_url(raw, &redirects_); }

    std::string domain_of(std::string_view canonical) const { return psl_.extract_domain(canonical); }

    RevisionState state_of(const RevisionRecord& r, ExtractStats* stats = nullptr) const {
        RevisionState s{r.user, r.registered, r.timestamp, {}, {}};
        auto take = [&](std::string_view raw) {
            if (stats) ++stats->urls_seen;
            auto url = canonical_url(raw);
            if (!url) {
                if (stats) ++stats->urls_rejected;
                return;
            }
            s.urls.insert(*url);
        };
        if (const auto* list = std::get_if<UrlList>(&r.payload)) {
            for (const auto& u : list->urls) take(u);
        } else {
            for (const auto& u : extract_urls(std::get<Wikitext>(r.payload).text)) take(u);
        }
        for (const auto& u : s.urls) ++s.domains[domain_of(u)];
        return s;
    }

    ArticleEdits process(const ArticleHistory& a, ExtractStats* stats = nullptr) const {
        ArticleEdits out;
        out.page = a.page;
        out.retrieved_at = a.retrieved_at;
        if (a.revisions.empty()) return out;
        out.created_at = a.revisions.front().timestamp;

        // Only the last revision of each run determines merged state, so the
        // others are never parsed.
        std::vector<RevisionState> states;
        for (std::size_t i = 0; i < a.revisions.size(); ++i) {
            const auto& r = a.revisions[i];
            const bool run_end = i + 1 == a.revisions.size() || a.revisions[i + 1].user != r.user;
            if (run_end) {
                states.push_back(state_of(r, stats));
            } else {
                states.push_back(RevisionState{r.user, r.registered, r.timestamp, {}, {}});
            }
        }
        out.merged = merge_consecutive(states);
        out.edits = diff_to_source_edits(out.merged, a.page.page_id);
        return out;
    }

private:
    PublicSuffixList psl_;
    RedirectMap redirects_;
};

} // namespace wikirel
