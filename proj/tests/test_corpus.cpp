#include "test_util.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace wikirel;

namespace {

std::string rev_line(std::int64_t page, std::int64_t rev, const std::string& ts, const std::string& user,
                     const std::string& urls = "[]") {
    return R"({"lang":"en","topic":"t","page_id":)" + std::to_string(page) + R"(,"title":"P","rev_id":)" +
           std::to_string(rev) + R"(,"parent_id":null,"timestamp":")" + ts + R"(","user":")" + user +
           R"(","registered":true,"urls":)" + urls + "}\n";
}

ArticleHistory article(std::int64_t page, Instant start, const std::vector<std::string>& users, double days) {
    ArticleHistory a;
    a.page = {"en", "t", page, "P"};
    for (std::size_t i = 0; i < users.size(); ++i) {
        RevisionRecord r;
        r.language = "en";
        r.topic = "t";
        r.page_id = page;
        r.title = "P";
        r.rev_id = page * 100 + static_cast<std::int64_t>(i);
        r.timestamp = start + std::chrono::hours(static_cast<int>(i));
        r.user = users[i];
        r.registered = true;
        r.payload = UrlList{};
        a.revisions.push_back(r);
    }
    a.retrieved_at = start + std::chrono::seconds(static_cast<std::int64_t>(days * 86400));
    return a;
}

} // namespace

TEST(LoadCorpus, EmptyInputGivesNoDatasets) {
    std::istringstream in("");
    EXPECT_TRUE(load_corpus(in).empty());
    std::istringstream blank("\n  \n");
    EXPECT_TRUE(load_corpus(blank).empty());
}

TEST(LoadCorpus, SortsOutOfOrderRevisions) {
    std::istringstream in(rev_line(1, 12, "2020-01-03T00:00:00Z", "C") + rev_line(1, 10, "2020-01-01T00:00:00Z", "A") +
                          rev_line(1, 11, "2020-01-02T00:00:00Z", "B"));
    const auto ds = load_corpus(in);
    ASSERT_EQ(ds.size(), 1u);
    ASSERT_EQ(ds[0].articles.size(), 1u);
    const auto& revs = ds[0].articles[0].revisions;
    ASSERT_EQ(revs.size(), 3u);
    EXPECT_EQ(revs[0].rev_id, 10);
    EXPECT_EQ(revs[1].rev_id, 11);
    EXPECT_EQ(revs[2].rev_id, 12);
    // No meta line: collection time is the last revision.
    EXPECT_EQ(ds[0].articles[0].retrieved_at, parse_instant("2020-01-03T00:00:00Z"));
}

TEST(LoadCorpus, EqualTimestampsOrderByRevisionId) {
    std::istringstream in(rev_line(1, 9, "2020-01-01T00:00:00Z", "B") + rev_line(1, 3, "2020-01-01T00:00:00Z", "A"));
    const auto ds = load_corpus(in);
    EXPECT_EQ(ds[0].articles[0].revisions[0].rev_id, 3);
}

TEST(LoadCorpus, MiniFixtureShape) {
    const std::string path = testutil::fixture("mini_climate_en.jsonl");
    const auto ds = load_corpus(path);
    ASSERT_EQ(ds.size(), 1u);
    EXPECT_EQ(ds[0].key, (DatasetKey{"climate", "en"}));

    // Independent count straight from the file.
    std::ifstream in(path);
    std::string line;
    std::size_t revisions = 0;
    std::set<std::int64_t> pages;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        if (j.contains("meta")) continue;
        ++revisions;
        pages.insert(j["page_id"].get<std::int64_t>());
    }
    EXPECT_EQ(revisions, 120u);
    EXPECT_EQ(pages.size(), 6u);
    EXPECT_EQ(ds[0].articles.size(), 6u);
    std::size_t loaded = 0;
    for (const auto& a : ds[0].articles) {
        loaded += a.revisions.size();
        EXPECT_TRUE(std::is_sorted(a.revisions.begin(), a.revisions.end(), [](const auto& x, const auto& y) {
            return std::tie(x.timestamp, x.rev_id) < std::tie(y.timestamp, y.rev_id);
        }));
    }
    EXPECT_EQ(loaded, 120u);
}

TEST(LoadCorpus, ErrorsCarryLineNumbers) {
    auto message = [](const std::string& text) {
        std::istringstream in(text);
        try {
            load_corpus(in, "f.jsonl");
        } catch (const DataError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    const auto good = rev_line(1, 1, "2020-01-01T00:00:00Z", "A");
    EXPECT_NE(message(good + "{not json\n").find("f.jsonl:2"), std::string::npos);
    EXPECT_NE(message(good + R"({"lang":"en"})" "\n").find("f.jsonl:2"), std::string::npos);
    EXPECT_NE(message(rev_line(1, 1, "2020-13-01T00:00:00Z", "A")).find("f.jsonl:1"), std::string::npos);
    EXPECT_NE(message(good + good).find("duplicate revision id"), std::string::npos);
    EXPECT_NE(message("[1,2]\n").find("f.jsonl:1"), std::string::npos);

    // Both payload kinds at once.
    std::string both = good;
    both.insert(both.size() - 2, R"(,"wikitext":"x")");
    EXPECT_NE(message(both).find("exactly one"), std::string::npos);

    // Parent newer than child.
    std::string child = R"({"lang":"en","topic":"t","page_id":1,"title":"P","rev_id":2,"parent_id":1,)"
                        R"("timestamp":"2019-01-01T00:00:00Z","user":"B","registered":false,"urls":[]})"
                        "\n";
    EXPECT_NE(message(good + child).find("timestamp regression"), std::string::npos);

    const std::string meta_early =
        R"({"meta":{"lang":"en","topic":"t","page_id":1,"title":"P","retrieved_at":"2019-01-01T00:00:00Z"}})" "\n";
    EXPECT_NE(message(meta_early + good).find("retrieved_at"), std::string::npos);
    EXPECT_NE(message(meta_early).find("without revisions"), std::string::npos);
    EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), DataError);
}

TEST(LoadCorpus, WriteThenLoadIsIdentity) {
    const auto original = load_corpus(testutil::fixture("mini_climate_en.jsonl"));
    std::stringstream buf;
    write_corpus(buf, original);
    const auto again = load_corpus(buf);
    EXPECT_EQ(again, original);

    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        const std::vector<Dataset> d{oracle::random_dataset(rng)};
        std::stringstream s;
        write_corpus(s, d);
        EXPECT_EQ(load_corpus(s), d);
    }
}

TEST(AgeTotals, SingleArticle) {
    const auto t0 = parse_date("2020-01-01");
    Dataset d{{"t", "en"}, {article(1, t0, {"A", "B", "C", "A"}, 10.0)}, Tier::unassigned};
    const auto totals = dataset_age_totals(d);
    EXPECT_EQ(totals, (AgeTotals{10.0, 4, 3}));
}

TEST(AgeTotals, Additive) {
    const auto t0 = parse_date("2020-01-01");
    Dataset d{{"t", "en"},
              {article(1, t0, {"A", "B", "C", "A"}, 10.0), article(2, t0, {"D", "E", "F", "D"}, 10.0)},
              Tier::unassigned};
    EXPECT_EQ(dataset_age_totals(d), (AgeTotals{20.0, 8, 6}));
    EXPECT_EQ(dataset_age_totals(Dataset{}), AgeTotals{});
}

TEST(AgeTotals, MiniFixtureMatchesRecount) {
    const auto d = testutil::mini_dataset();
    double days = 0;
    std::int64_t merged = 0;
    std::set<std::string> users;
    for (const auto& a : d.articles) {
        days += static_cast<double>(oracle::secs(a.retrieved_at) - oracle::secs(a.revisions.front().timestamp)) / 86400.0;
        std::string last;
        for (const auto& r : a.revisions) {
            if (r.user != last) ++merged;
            last = r.user;
            users.insert(r.user);
        }
    }
    const auto totals = dataset_age_totals(d);
    EXPECT_NEAR(totals.article_days, days, 1e-9 * days);
    EXPECT_EQ(totals.article_revisions, merged);
    EXPECT_EQ(totals.unique_users, static_cast<std::int64_t>(users.size()));
    EXPECT_EQ(merged, 83);

    // The processed view agrees with the raw one.
    const auto processed = process_dataset(d, testutil::extractor());
    EXPECT_EQ(dataset_age_totals(processed), totals);
}

TEST(Cutoff, KeepsRevisionsStrictlyBefore) {
    const auto t0 = parse_date("2020-01-01");
    Dataset d{{"t", "en"}, {article(1, t0, {"A", "B", "C"}, 5.0), article(2, t0 + std::chrono::hours(48), {"A"}, 5.0)},
              Tier::unassigned};
    const auto cut = apply_cutoff(d, t0 + std::chrono::hours(1));
    ASSERT_EQ(cut.articles.size(), 1u);
    EXPECT_EQ(cut.articles[0].revisions.size(), 1u);
    EXPECT_EQ(cut.articles[0].retrieved_at, t0 + std::chrono::hours(1));
    EXPECT_TRUE(apply_cutoff(d, t0).articles.empty());
    EXPECT_EQ(apply_cutoff(d, t0 + std::chrono::hours(24 * 365)), d);
}

TEST(Combine, DeduplicatesPagesAndSorts) {
    const auto t0 = parse_date("2020-01-01");
    Dataset a{{"x", "en"}, {article(5, t0, {"A"}, 1.0), article(1, t0, {"B"}, 1.0)}, Tier::unassigned};
    Dataset b{{"y", "en"}, {article(1, t0, {"C"}, 1.0), article(3, t0, {"D"}, 1.0)}, Tier::unassigned};
    const auto c = combine_datasets({a, b}, {"all", "en"});
    ASSERT_EQ(c.articles.size(), 3u);
    EXPECT_EQ(c.articles[0].page.page_id, 1);
    EXPECT_EQ(c.articles[0].revisions[0].user, "B");
    EXPECT_EQ(c.articles[2].page.page_id, 5);
    EXPECT_EQ(c.key, (DatasetKey{"all", "en"}));
}
