#pragma once

#include "wikirel/common.hpp"
#include "wikirel/extractor.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wikirel {

struct PresenceInterval {
    std::size_t add_revision = 0;
    Instant added_at{};
    std::optional<std::size_t> remove_revision;  // nullopt: still present
    Instant removed_at{};                        // retrieved-at when open

    bool operator==(const PresenceInterval&) const = default;
};

// Presence history of one domain on one article.
//
// Day quantities are kept in whole seconds so that sums over articles are
// exact and independent of iteration order; *_days() convert on demand.
struct DomainTimeline {
    std::int64_t page_id = 0;
    std::string domain;
    std::vector<PresenceInterval> intervals;
    std::int64_t permanence_seconds = 0;
    std::int64_t permanence_revisions = 0;
    std::int64_t age_seconds = 0;
    std::int64_t age_revisions = 0;
    bool currently_present = false;
    std::vector<SourceEdit> adds;
    std::vector<SourceEdit> removes;

    double permanence_days() const { return static_cast<double>(permanence_seconds) / kSecondsPerDay; }
    double age_days() const { return static_cast<double>(age_seconds) / kSecondsPerDay; }

    // Zero when the age is zero.
    double self_permanence_days() const {
        return age_seconds > 0 ? static_cast<double>(permanence_seconds) / static_cast<double>(age_seconds) : 0.0;
    }
    double self_permanence_revisions() const {
        return age_revisions > 0
                   ? static_cast<double>(permanence_revisions) / static_cast<double>(age_revisions)
                   : 0.0;
    }

    bool operator==(const DomainTimeline&) const = default;
};

using TimelineMap = std::map<std::string, DomainTimeline>;

// Revision permanence counts the adding revision and excludes the removing
// one; open intervals run through the last merged revision (days: through
// `retrieved_at`). Ages start at the first add and end at `retrieved_at`.
inline TimelineMap build_timeline(const std::vector<MergedRevision>& merged, const std::vector<SourceEdit>& edits,
                                  Instant retrieved_at) {
    TimelineMap out;
    const auto n = static_cast<std::int64_t>(merged.size());
    for (const auto& e : edits) {
        if (e.revision >= merged.size()) {
            throw DataError("source edit for '" + e.domain + "' references unknown merged revision " +
                            std::to_string(e.revision));
        }
        auto& t = out[e.domain];
        if (t.domain.empty()) {
            t.page_id = e.page_id;
            t.domain = e.domain;
        }
        const Instant at = merged[e.revision].timestamp;
        if (e.action == EditAction::add) {
            if (!t.intervals.empty() && !t.intervals.back().remove_revision) {
                throw DataError("domain '" + e.domain + "' added twice without removal");
            }
            t.intervals.push_back(PresenceInterval{e.revision, at, std::nullopt, retrieved_at});
            t.adds.push_back(e);
        } else {
            if (t.intervals.empty() || t.intervals.back().remove_revision) {
                throw DataError("domain '" + e.domain + "' removed while absent");
            }
            auto& iv = t.intervals.back();
            if (e.revision <= iv.add_revision) throw DataError("removal precedes addition for '" + e.domain + "'");
            iv.remove_revision = e.revision;
            iv.removed_at = at;
            t.removes.push_back(e);
        }
    }

    for (auto& [_, t] : out) {
        for (const auto& iv : t.intervals) {
            t.permanence_seconds += (iv.removed_at - iv.added_at).count();
            const auto end = iv.remove_revision ? static_cast<std::int64_t>(*iv.remove_revision) : n;
            t.permanence_revisions += end - static_cast<std::int64_t>(iv.add_revision);
        }
        const auto& first = t.intervals.front();
        t.age_seconds = (retrieved_at - first.added_at).count();
        t.age_revisions = n - static_cast<std::int64_t>(first.add_revision);
        t.currently_present = !t.intervals.back().remove_revision.has_value();
    }
    return out;
}

inline TimelineMap build_timeline(const ArticleEdits& a) { return build_timeline(a.merged, a.edits, a.retrieved_at); }

} // namespace wikirel
