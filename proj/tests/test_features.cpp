#include "test_util.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <set>
#include <sstream>

using namespace wikirel;

namespace {

struct Rev {
    std::string user;
    bool registered;
    int day;
    std::vector<std::string> urls;
};

ArticleHistory make_article(std::int64_t page, const std::vector<Rev>& revs, int retrieved_day) {
    const auto t0 = parse_date("2020-01-01");
    ArticleHistory a;
    a.page = {"en", "t", page, "P" + std::to_string(page)};
    for (std::size_t i = 0; i < revs.size(); ++i) {
        RevisionRecord r;
        r.language = "en";
        r.topic = "t";
        r.page_id = page;
        r.title = a.page.title;
        r.rev_id = page * 1000 + static_cast<std::int64_t>(i);
        r.timestamp = t0 + std::chrono::days(revs[i].day);
        r.user = revs[i].user;
        r.registered = revs[i].registered;
        r.payload = UrlList{revs[i].urls};
        a.revisions.push_back(r);
    }
    a.retrieved_at = t0 + std::chrono::days(retrieved_day);
    return a;
}

double value(const FeatureMatrix& m, const std::string& domain, const std::string& id) {
    const auto it = std::find(m.domains.begin(), m.domains.end(), domain);
    if (it == m.domains.end()) throw std::runtime_error("no row " + domain);
    return m.at(static_cast<std::size_t>(it - m.domains.begin()), m.column_index(id));
}

// Domain function that matches the real extractor exactly, so the oracle can
// run on the fixture (which has www. hosts and multi-label suffixes).
std::optional<std::string> fixture_domain(const std::string& url) {
    const auto canon = testutil::extractor().canonical_url(url);
    if (!canon) return std::nullopt;
    return testutil::extractor().domain_of(*canon);
}

} // namespace

TEST(Catalog, FiftyUniqueIds) {
    const auto ids = catalog_ids();
    EXPECT_EQ(ids.size(), 50u);
    EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), 50u);
    EXPECT_EQ(ids[kUserAllOffset], "u_add");
    EXPECT_EQ(ids[kUserStartEndOffset], "u_start");
    std::size_t pop = 0, perm = 0, user = 0;
    for (const auto& d : feature_catalog()) {
        (d.family == Family::popularity ? pop : d.family == Family::permanence ? perm : user)++;
        EXPECT_EQ(d.family == Family::user, d.scope != EventScope::not_applicable);
    }
    EXPECT_EQ(pop, 4u);
    EXPECT_EQ(perm, 14u);
    EXPECT_EQ(user, 32u);
}

TEST(Features, PopularityExample) {
    Dataset d{{"t", "en"},
              {make_article(1, {{"A", true, 0, {"https://a.com/1"}}}, 10),
               make_article(2, {{"A", true, 0, {"https://a.com/1"}}, {"B", true, 5, {}}}, 10)},
              Tier::unassigned};
    const auto m = compute_features(d, testutil::extractor());
    EXPECT_EQ(value(m, "a.com", "n_articles"), 2.0);
    EXPECT_EQ(value(m, "a.com", "n_articles_norm"), 1.0);
    EXPECT_EQ(value(m, "a.com", "curr_n_articles"), 1.0);
    EXPECT_EQ(value(m, "a.com", "curr_n_articles_norm"), 0.5);
}

TEST(Features, RegisteredAddAnonymousRemove) {
    Dataset d{{"t", "en"},
              {make_article(1, {{"Reg", true, 0, {"https://a.com/1"}}, {"10.0.0.1", false, 3, {}}}, 10)},
              Tier::unassigned};
    const auto m = compute_features(d, testutil::extractor());
    EXPECT_EQ(value(m, "a.com", "ratio_r_add"), 1.0);
    EXPECT_EQ(value(m, "a.com", "ratio_r_rem"), 0.0);
    EXPECT_EQ(value(m, "a.com", "proba_r_add"), 1.0);
    EXPECT_EQ(value(m, "a.com", "proba_r_rem"), 0.0);
    EXPECT_EQ(value(m, "a.com", "u_start"), 1.0);
    EXPECT_EQ(value(m, "a.com", "u_end"), 1.0);
    EXPECT_EQ(value(m, "a.com", "r_end"), 0.0);
    EXPECT_EQ(value(m, "a.com", "u_add_norm"), 0.5);
}

TEST(Features, EmptyDatasetGivesEmptyMatrix) {
    const auto m = compute_features(Dataset{}, testutil::extractor());
    EXPECT_EQ(m.rows(), 0u);
    EXPECT_EQ(m.cols(), 50u);
}

TEST(Features, MatchOracleOnRandomDatasets) {
    std::mt19937_64 rng(20240115);
    const auto start = std::chrono::steady_clock::now();
    std::size_t rows = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto d = oracle::random_dataset(rng);
        const auto got = compute_features(d, testutil::extractor());
        const auto want = oracle::features(d);
        ASSERT_EQ(got.rows(), want.size()) << "trial " << trial;
        for (std::size_t r = 0; r < got.rows(); ++r) {
            std::string why;
            ASSERT_TRUE(want.count(got.domains[r]));
            EXPECT_TRUE(oracle::rows_match(got.row(r), want.at(got.domains[r]), 1e-12, &why))
                << "trial " << trial << " domain " << got.domains[r] << ": " << why;
            ++rows;
        }
    }
    EXPECT_GT(rows, 3000u);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(60));
}

TEST(Features, MiniFixtureMatchesOracle) {
    const auto d = testutil::mini_dataset();
    const auto got = compute_features(d, testutil::extractor());
    const auto want = oracle::features(d, fixture_domain);
    ASSERT_EQ(got.rows(), want.size());
    EXPECT_EQ(got.rows(), 17u);
    for (std::size_t r = 0; r < got.rows(); ++r) {
        std::string why;
        EXPECT_TRUE(oracle::rows_match(got.row(r), want.at(got.domains[r]), 1e-12, &why)) << got.domains[r] << ": " << why;
    }
}

TEST(Features, Invariants) {
    std::mt19937_64 rng(99);
    auto col = [](const FeatureMatrix& m, std::size_t r, const char* id) { return m.at(r, m.column_index(id)); };
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = compute_features(oracle::random_dataset(rng), testutil::extractor());
        for (std::size_t r = 0; r < m.rows(); ++r) {
            EXPECT_LE(col(m, r, "curr_n_articles"), col(m, r, "n_articles"));
            EXPECT_LE(col(m, r, "sum_curr_perm_days"), col(m, r, "sum_perm_days"));
            EXPECT_LE(col(m, r, "sum_curr_perm_revs"), col(m, r, "sum_perm_revs"));
            for (const char* id : {"mean_self_perm_days", "mean_self_perm_revs"}) {
                EXPECT_GE(col(m, r, id), 0.0);
                EXPECT_LE(col(m, r, id), 1.0);
            }
            for (auto [reg, any] : {std::pair{"r_add", "u_add"}, {"r_rem", "u_rem"}, {"r_start", "u_start"},
                                    {"r_end", "u_end"}}) {
                EXPECT_LE(col(m, r, reg), col(m, r, any));
            }
        }
    }
}

TEST(Features, IndependentOfArticleOrder) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto d = oracle::random_dataset(rng);
        const auto a = compute_features(d, testutil::extractor());
        std::reverse(d.articles.begin(), d.articles.end());
        const auto b = compute_features(d, testutil::extractor());
        EXPECT_EQ(a, b);
    }
}

TEST(Quantile, AverageRankExamples) {
    FeatureMatrix m;
    m.columns = {"x", "c"};
    const double c = 7.0;
    for (double v : {10.0, 20.0, 20.0, 40.0}) m.add_row("d" + std::to_string(v), std::vector<double>{v, c});
    const auto q = quantile_normalize(m);
    EXPECT_EQ(q.at(0, 0), 0.25);
    EXPECT_EQ(q.at(1, 0), 0.625);
    EXPECT_EQ(q.at(2, 0), 0.625);
    EXPECT_EQ(q.at(3, 0), 1.0);

    FeatureMatrix three;
    three.columns = {"c"};
    for (int i = 0; i < 3; ++i) three.add_row("d" + std::to_string(i), std::vector<double>{c});
    const auto q3 = quantile_normalize(three);
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(q3.at(static_cast<std::size_t>(i), 0), 2.0 / 3.0);
    EXPECT_EQ(quantile_normalize(FeatureMatrix{}).rows(), 0u);
}

TEST(Quantile, IdempotentAndRankInvariant) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = compute_features(oracle::random_dataset(rng), testutil::extractor());
        const auto q = quantile_normalize(m);
        EXPECT_EQ(quantile_normalize(q), q);
        FeatureMatrix t = m;
        // Exact and strictly increasing on doubles; smooth maps such as exp
        // can merge values one ulp apart and create ties.
        for (auto& v : t.values) v = v < 1.0 ? std::ldexp(v, -3) : std::ldexp(v, 4);
        EXPECT_EQ(quantile_normalize(t), q);
    }
}

TEST(MatrixCsv, RoundTrip) {
    const auto m = compute_features(testutil::mini_dataset(), testutil::extractor());
    FeatureMatrix labeled = m;
    apply_labels(labeled, testutil::mini_labels());
    std::stringstream s;
    write_matrix_csv(s, labeled);
    auto back = read_matrix_csv(s);
    back.key = labeled.key;
    EXPECT_EQ(back, labeled);
    const std::string header = s.str().substr(0, s.str().find('\n'));
    EXPECT_EQ(header.rfind("domain,n_articles,", 0), 0u);
    EXPECT_EQ(header.substr(header.size() - 6), ",label");
}

TEST(MatrixCsv, Errors) {
    std::istringstream empty("");
    EXPECT_THROW(read_matrix_csv(empty), DataError);
    std::istringstream header("x,a,label\n");
    EXPECT_THROW(read_matrix_csv(header), DataError);
    std::istringstream width("domain,a,label\nx.com,1\n");
    EXPECT_THROW(read_matrix_csv(width), DataError);
    std::istringstream number("domain,a,label\nx.com,abc,1\n");
    EXPECT_THROW(read_matrix_csv(number), DataError);
    std::istringstream label("domain,a,label\nx.com,1,yes\n");
    EXPECT_THROW(read_matrix_csv(label), DataError);
}

TEST(MatrixCsv, KeyFromFilename) {
    EXPECT_EQ(matrix_key_from_filename("/x/features_climate_en.csv"), (DatasetKey{"climate", "en"}));
    EXPECT_EQ(matrix_key_from_filename("features_covid_19_zh.csv"), (DatasetKey{"covid_19", "zh"}));
    EXPECT_EQ(matrix_key_from_filename("mine.csv"), (DatasetKey{"mine", ""}));
}
