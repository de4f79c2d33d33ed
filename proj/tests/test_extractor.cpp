#include "test_util.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace wikirel;

namespace {

RevisionState state(const std::string& user, int day, std::map<std::string, int> domains = {}) {
    RevisionState s;
    s.user = user;
    s.registered = user.front() != '1';
    s.timestamp = parse_date("2020-01-01") + std::chrono::days(day);
    s.domains = std::move(domains);
    for (const auto& [d, n] : s.domains) {
        for (int i = 0; i < n; ++i) s.urls.insert("https://" + d + "/" + std::to_string(i));
    }
    return s;
}

std::vector<MergedRevision> merged_from(const std::vector<std::map<std::string, int>>& states) {
    std::vector<RevisionState> v;
    for (std::size_t i = 0; i < states.size(); ++i) v.push_back(state("U" + std::to_string(i), static_cast<int>(i), states[i]));
    return merge_consecutive(v);
}

} // namespace

TEST(Merge, RunLengthCollapse) {
    const auto m = merge_consecutive({state("A", 0), state("A", 1), state("B", 2), state("A", 3)});
    ASSERT_EQ(m.size(), 3u);
    EXPECT_EQ(m[0].user, "A");
    EXPECT_EQ(m[1].user, "B");
    EXPECT_EQ(m[2].user, "A");
    EXPECT_EQ(m[0].start_timestamp, parse_date("2020-01-01"));
    EXPECT_EQ(m[0].timestamp, parse_date("2020-01-02"));
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(m[i].index, i);
    EXPECT_EQ(merge_consecutive({state("A", 0)}).size(), 1u);
    EXPECT_TRUE(merge_consecutive({}).empty());
}

TEST(Merge, RunKeepsLastState) {
    const auto m = merge_consecutive({state("A", 0, {{"a.com", 1}}), state("A", 5, {{"b.com", 2}})});
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].domains, (std::map<std::string, int>{{"b.com", 2}}));
}

TEST(Merge, MiniFixtureArticle) {
    const auto d = testutil::mini_dataset();
    const auto it = std::find_if(d.articles.begin(), d.articles.end(), [](const auto& a) { return a.page.page_id == 101; });
    ASSERT_NE(it, d.articles.end());
    std::vector<std::string> users;
    for (const auto& r : it->revisions) users.push_back(r.user);
    EXPECT_EQ(users, (std::vector<std::string>{"Alice", "Alice", "Alice", "Bob", "Bob", "203.0.113.7", "Alice", "Alice",
                                               "203.0.113.7"}));
    EXPECT_EQ(testutil::extractor().process(*it).merged.size(), 5u);
}

TEST(Remerge, JoinsNewlyAdjacentRuns) {
    const auto m = merge_consecutive({state("A", 0), state("B", 1), state("A", 2), state("C", 3)});
    const auto r = remerge({m[0], m[2], m[3]});
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0].user, "A");
    EXPECT_EQ(r[0].timestamp, m[2].timestamp);
    EXPECT_EQ(r[0].start_timestamp, m[0].start_timestamp);
    EXPECT_EQ(r[1].index, 1u);
}

TEST(Diff, TransitionExample) {
    const auto edits = diff_to_source_edits(merged_from({{{"a.com", 1}}, {{"a.com", 1}, {"b.org", 1}}, {{"b.org", 1}}}));
    ASSERT_EQ(edits.size(), 3u);
    EXPECT_EQ(edits[0].domain, "a.com");
    EXPECT_EQ(edits[0].action, EditAction::add);
    EXPECT_EQ(edits[0].revision, 0u);
    EXPECT_EQ(edits[1].domain, "b.org");
    EXPECT_EQ(edits[1].action, EditAction::add);
    EXPECT_EQ(edits[1].revision, 1u);
    EXPECT_EQ(edits[2].domain, "a.com");
    EXPECT_EQ(edits[2].action, EditAction::remove);
    EXPECT_EQ(edits[2].revision, 2u);
    EXPECT_TRUE(edits[0].first_add);
    EXPECT_TRUE(edits[1].first_add);
    EXPECT_TRUE(edits[2].last_remove);
}

TEST(Diff, CountChangeIsNotAnEvent) {
    const auto edits = diff_to_source_edits(merged_from({{{"a.com", 1}}, {{"a.com", 2}}, {{"a.com", 1}}}));
    ASSERT_EQ(edits.size(), 1u);
    EXPECT_EQ(edits[0].action, EditAction::add);
    EXPECT_TRUE(diff_to_source_edits({}).empty());
}

TEST(Diff, FlagsOnAddRemoveAddRemove) {
    const auto edits = diff_to_source_edits(merged_from({{{"a.com", 1}}, {}, {{"a.com", 3}}, {}}));
    ASSERT_EQ(edits.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(edits[i].action, i % 2 == 0 ? EditAction::add : EditAction::remove);
        EXPECT_EQ(edits[i].first_add, i == 0);
        EXPECT_EQ(edits[i].last_remove, i == 3);
    }
    // A domain that ends present has no last-remove.
    const auto open = diff_to_source_edits(merged_from({{{"a.com", 1}}, {}, {{"a.com", 1}}}));
    for (const auto& e : open) EXPECT_FALSE(e.last_remove);
}

TEST(Extractor, EventsMatchReplayOnRandomCorpora) {
    // Synthetic domains are plain dK.com hosts, so the oracle's host parse
    // and the suffix-list extractor agree.
    std::mt19937_64 rng(2024);
    const auto& ex = testutil::extractor();
    for (int trial = 0; trial < 300; ++trial) {
        const auto d = oracle::random_dataset(rng);
        for (const auto& a : d.articles) {
            const auto pa = ex.process(a);
            const auto want = oracle::replay(a);
            std::map<std::string, std::vector<SourceEdit>> got;
            for (const auto& e : pa.edits) got[e.domain].push_back(e);
            ASSERT_EQ(got.size(), want.size());
            for (const auto& [domain, r] : want) {
                const auto& g = got[domain];
                ASSERT_EQ(g.size(), r.events.size()) << domain;
                for (std::size_t k = 0; k < g.size(); ++k) {
                    EXPECT_EQ(g[k].action == EditAction::add, r.events[k].add);
                    EXPECT_EQ(g[k].revision, r.events[k].index);
                    EXPECT_EQ(g[k].user, r.events[k].user);
                    EXPECT_EQ(g[k].registered, r.events[k].registered);
                    EXPECT_EQ(g[k].first_add, r.events[k].first_add);
                    EXPECT_EQ(g[k].last_remove, r.events[k].last_remove);
                    EXPECT_EQ(g[k].page_id, a.page.page_id);
                }
            }
            // Invariants: events alternate per domain, starting with an add,
            // and edits reference existing merged revisions.
            for (const auto& [_, g] : got) {
                for (std::size_t k = 0; k < g.size(); ++k) {
                    EXPECT_EQ(g[k].action, k % 2 == 0 ? EditAction::add : EditAction::remove);
                    EXPECT_LT(g[k].revision, pa.merged.size());
                }
            }
        }
    }
}

TEST(Extractor, WikitextPayloadsAreParsed) {
    const auto ds = load_corpus(testutil::fixture("wikitext_30.jsonl"));
    ExtractStats stats;
    const auto pa = testutil::extractor().process(ds[0].articles[0], &stats);
    EXPECT_FALSE(pa.merged.empty());
    EXPECT_GT(stats.urls_seen, 0u);
    std::set<std::string> domains;
    for (const auto& m : pa.merged) {
        for (const auto& [d, _] : m.domains) domains.insert(d);
    }
    EXPECT_TRUE(domains.count("nature.com"));
    EXPECT_TRUE(domains.count("doi.org"));
}

TEST(Extractor, RejectedUrlsAreCounted) {
    ArticleHistory a;
    a.page = {"en", "t", 1, "P"};
    RevisionRecord r;
    r.page_id = 1;
    r.user = "A";
    r.payload = UrlList{{"https://ok.com/a", "ftp://bad.com/x", "nonsense"}};
    a.revisions.push_back(r);
    ExtractStats stats;
    const auto pa = testutil::extractor().process(a, &stats);
    EXPECT_EQ(stats.urls_seen, 3u);
    EXPECT_EQ(stats.urls_rejected, 2u);
    EXPECT_EQ(pa.merged[0].domains, (std::map<std::string, int>{{"ok.com", 1}}));
}
