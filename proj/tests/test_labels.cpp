#include "test_util.hpp"
#include "synth.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace wikirel;

TEST(Mapping, Perennial) {
    EXPECT_EQ(map_perennial("generally reliable"), LabelClass::reliable);
    EXPECT_EQ(map_perennial("Generally Reliable "), LabelClass::reliable);
    EXPECT_EQ(map_perennial("deprecated"), LabelClass::unreliable);
    EXPECT_EQ(map_perennial("blacklisted"), LabelClass::unreliable);
    EXPECT_EQ(map_perennial("generally unreliable"), LabelClass::unreliable);
    EXPECT_EQ(map_perennial("no consensus"), LabelClass::excluded);
    EXPECT_THROW(map_perennial("mostly fine"), DataError);
}

TEST(Mapping, Mbfc) {
    EXPECT_EQ(map_mbfc("very high"), LabelClass::reliable);
    EXPECT_EQ(map_mbfc("high"), LabelClass::reliable);
    EXPECT_EQ(map_mbfc("low"), LabelClass::unreliable);
    EXPECT_EQ(map_mbfc("very low"), LabelClass::unreliable);
    EXPECT_EQ(map_mbfc("medium"), LabelClass::excluded);
    EXPECT_EQ(map_mbfc("mixed"), LabelClass::excluded);
}

TEST(Mapping, SourceNames) {
    for (auto s : {LabelSource::perennial, LabelSource::mbfc, LabelSource::custom}) {
        EXPECT_EQ(parse_label_source(to_string(s)), s);
    }
    EXPECT_THROW(parse_label_source("wiki"), DataError);
}

TEST(LoadLabels, MiniFixture) {
    const auto labels = testutil::mini_labels();
    EXPECT_EQ(labels.snapshot_date, "2023-03-30");
    EXPECT_EQ(labels.binary.size(), 13u);
    EXPECT_EQ(labels.lookup("nature.com"), Label::reliable);
    EXPECT_EQ(labels.lookup("bbc.co.uk"), Label::reliable);
    EXPECT_EQ(labels.lookup("infowars.com"), Label::unreliable);
    // `www.forbes.com` canonicalizes to its registrable domain and is excluded.
    EXPECT_EQ(labels.lookup("forbes.com"), Label::none);
    EXPECT_TRUE(labels.excluded.count("forbes.com"));
    EXPECT_EQ(labels.categories.at("forbes.com"), "no consensus");
    EXPECT_EQ(labels.lookup("unknown.org"), Label::none);

    const auto mbfc = load_labels(testutil::fixture("mini_mbfc.csv"), LabelSource::mbfc, testutil::psl());
    EXPECT_FALSE(mbfc.binary.empty());
}

TEST(LoadLabels, CanonicalizesAndReportsErrors) {
    std::istringstream in("https://News.BBC.co.uk/path,generally reliable\nWWW.Ex.com,deprecated\n");
    const auto l = load_labels(in, LabelSource::perennial, testutil::psl());
    EXPECT_EQ(l.lookup("bbc.co.uk"), Label::reliable);
    EXPECT_EQ(l.lookup("ex.com"), Label::unreliable);

    std::istringstream bad("a.com,generally reliable\nb.com,odd category\n");
    try {
        load_labels(bad, LabelSource::perennial, testutil::psl(), "l.csv");
        FAIL() << "expected an error";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("l.csv:2"), std::string::npos);
    }
    std::istringstream fields("a.com\n");
    EXPECT_THROW(load_labels(fields, LabelSource::perennial, testutil::psl()), DataError);
}

TEST(Filter, MinimumPerClass) {
    LabelSet labels;
    labels.source = LabelSource::custom;
    for (int i = 0; i < 6; ++i) labels.add("r" + std::to_string(i) + ".com", "reliable");
    for (int i = 0; i < 6; ++i) labels.add("u" + std::to_string(i) + ".com", "unreliable");
    auto matrix = [](std::vector<std::string> domains) {
        FeatureMatrix m;
        m.columns = {"x"};
        for (auto& d : domains) m.add_row(d, std::vector<double>{0.0});
        return m;
    };
    const auto one_five = matrix({"r0.com", "u0.com", "u1.com", "u2.com", "u3.com", "u4.com"});
    const auto two_two = matrix({"r0.com", "r1.com", "u0.com", "u1.com", "other.com"});
    const auto none = matrix({"a.com", "b.com"});
    const auto kept = filter_datasets({one_five, two_two, none}, labels);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0], two_two);
    EXPECT_THROW(filter_datasets({}, labels, 0), DataError);
}

TEST(Tiers, CeilingSplit) {
    auto counts = [](int n) {
        std::map<std::string, std::int64_t> c;
        for (int i = 0; i < n; ++i) {
            char code[8];
            std::snprintf(code, sizeof code, "l%03d", i);
            c[code] = 1000 - i;
        }
        return c;
    };
    auto tally = [](const std::vector<LanguageTier>& t) {
        std::array<int, 3> n{};
        for (const auto& x : t) ++n[static_cast<std::size_t>(x.tier)];
        return n;
    };
    EXPECT_EQ(tally(assign_tiers(counts(20))), (std::array<int, 3>{1, 5, 14}));
    EXPECT_EQ(assign_tiers(counts(1)).at(0).tier, Tier::high);

    const auto hundred = assign_tiers(counts(100));
    for (std::size_t i = 0; i < hundred.size(); ++i) {
        const Tier want = i < 5 ? Tier::high : (i < 30 ? Tier::mid : Tier::low);
        EXPECT_EQ(hundred[i].tier, want) << "rank " << i + 1;
        if (i > 0) {
            EXPECT_GE(hundred[i - 1].active_users, hundred[i].active_users);
        }
    }
    EXPECT_TRUE(assign_tiers({}).empty());
}

TEST(Tiers, TiesBreakByLanguageCode) {
    const auto t = assign_tiers({{"fr", 10}, {"de", 10}, {"en", 20}});
    EXPECT_EQ(t[0].language, "en");
    EXPECT_EQ(t[1].language, "de");
    EXPECT_EQ(t[2].language, "fr");
}
