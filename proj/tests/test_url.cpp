#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace wikirel;

TEST(Normalize, CanonicalForm) {
    EXPECT_EQ(normalize_url("HTTPS://WWW.Ex.COM:443/a#frag"), "https://ex.com/a");
    EXPECT_EQ(normalize_url("http://ex.com:80"), "http://ex.com/");
    EXPECT_EQ(normalize_url("http://ex.com:8080/a"), "http://ex.com:8080/a");
    EXPECT_EQ(normalize_url("https://ex.com?q=1"), "https://ex.com/?q=1");
    EXPECT_EQ(normalize_url("  https://user:pw@Ex.com./p%7Eq%2F  "), "https://ex.com/p~q%2F");
    EXPECT_EQ(normalize_url("https://[2001:db8::1]:443/x"), "https://[2001:db8::1]/x");
}

TEST(Normalize, Rejections) {
    EXPECT_EQ(normalize_url("ftp://ex.com/a"), std::nullopt);
    EXPECT_EQ(normalize_url("mailto:a@ex.com"), std::nullopt);
    EXPECT_EQ(normalize_url("ex.com/a"), std::nullopt);
    EXPECT_EQ(normalize_url("https:///a"), std::nullopt);
    EXPECT_EQ(normalize_url("https://ex.com:http/a"), std::nullopt);
    EXPECT_EQ(normalize_url("https://ex com/a"), std::nullopt);
}

TEST(Normalize, RedirectsApplyFirst) {
    RedirectMap m;
    m.add("https://doi.org/10.1/x", "https://pub.org/p");
    EXPECT_EQ(normalize_url("https://doi.org/10.1/x", &m), "https://pub.org/p");
    EXPECT_EQ(normalize_url("https://doi.org/10.1/xyz", &m), "https://pub.org/pyz");
    EXPECT_EQ(normalize_url("https://doi.org/10.2/x", &m), "https://doi.org/10.2/x");

    std::istringstream tsv("# comment\nhttps://a.com/\thttps://b.com/\nhttps://a.com/long\thttps://c.com/\n");
    const auto t = RedirectMap::from_tsv(tsv);
    EXPECT_EQ(t.size(), 2u);
    EXPECT_EQ(normalize_url("https://a.com/longer", &t), "https://c.com/er");
    EXPECT_EQ(normalize_url("https://a.com/x", &t), "https://b.com/x");
    std::istringstream bad("no tab here\n");
    EXPECT_THROW(RedirectMap::from_tsv(bad), DataError);
}

TEST(Normalize, BundledRedirectExampleLoads) {
    const auto m = RedirectMap::from_file(testutil::data_file("redirects.tsv"));
    EXPECT_FALSE(m.empty());
}

TEST(PublicSuffix, BundledListExamples) {
    const auto& psl = testutil::psl();
    EXPECT_FALSE(psl.version().empty());
    EXPECT_EQ(psl.extract_domain("https://ex.com/a"), "ex.com");
    EXPECT_EQ(psl.extract_domain("https://news.bbc.co.uk/x"), "bbc.co.uk");
    EXPECT_EQ(psl.extract_domain("https://203.0.113.7/x"), "203.0.113.7");
    EXPECT_EQ(psl.extract_domain("https://[2001:db8::1]/x"), "[2001:db8::1]");
    EXPECT_EQ(psl.extract_domain("https://a.b.c.example.com.au/"), "example.com.au");
    EXPECT_EQ(psl.registrable_domain("co.uk"), "co.uk");
    EXPECT_EQ(psl.registrable_domain("localhost"), "localhost");
    EXPECT_EQ(psl.extract_domain("http://ex.com:8080/a"), "ex.com");
}

TEST(PublicSuffix, WildcardsAndExceptions) {
    std::istringstream in("// VERSION: test\n*.ck\n!www.ck\ncom\n// ===BEGIN PRIVATE DOMAINS===\nblogspot.com\n"
                          "// ===END PRIVATE DOMAINS===\n");
    const auto psl = PublicSuffixList::parse(in);
    EXPECT_EQ(psl.version(), "test");
    EXPECT_EQ(psl.registrable_domain("a.b.ck"), "a.b.ck");
    EXPECT_EQ(psl.registrable_domain("x.a.b.ck"), "a.b.ck");
    EXPECT_EQ(psl.registrable_domain("www.ck"), "www.ck");
    EXPECT_EQ(psl.registrable_domain("sub.www.ck"), "www.ck");
    // Private section is off by default.
    EXPECT_EQ(psl.registrable_domain("me.blogspot.com"), "blogspot.com");

    std::istringstream again("*.ck\n!www.ck\ncom\n// ===BEGIN PRIVATE DOMAINS===\nblogspot.com\n");
    const auto all = PublicSuffixList::parse(again, PublicSuffixList::Sections::all);
    EXPECT_EQ(all.registrable_domain("me.blogspot.com"), "me.blogspot.com");
}

TEST(Wikitext, CitationTemplates) {
    EXPECT_EQ(extract_urls("<ref>{{cite web|url=https://ex.com/a}}</ref>"), (std::set<std::string>{"https://ex.com/a"}));
    EXPECT_EQ(extract_urls("{{cite journal|doi=10.1000/xyz}}"),
              (std::set<std::string>{"https://doi.org/10.1000/xyz"}));
    EXPECT_EQ(extract_urls("{{Cite news | title = T | url = https://ex.com/b | archive-url = https://archive.org/x }}"),
              (std::set<std::string>{"https://ex.com/b"}));
    EXPECT_EQ(extract_urls("{{cite book|chapter-url=https://ex.com/c|isbn=978-3-16-148410-0}}"),
              (std::set<std::string>{"https://ex.com/c"}));
    EXPECT_EQ(extract_urls("{{doi|10.5/abc}}"), (std::set<std::string>{"https://doi.org/10.5/abc"}));
    EXPECT_TRUE(extract_urls("{{Infobox|website=https://ex.com/}}").empty());
}

TEST(Wikitext, LinksCommentsAndNowiki) {
    EXPECT_EQ(extract_urls("See [https://ex.com/a label] and http://other.org/b."),
              (std::set<std::string>{"https://ex.com/a", "http://other.org/b"}));
    EXPECT_TRUE(extract_urls("<!-- https://hidden.com/ --> <nowiki>https://raw.com/</nowiki>").empty());
    EXPECT_TRUE(extract_urls("ISBN 978-3-16-148410-0, ISSN 2049-3630").empty());
}

TEST(Wikitext, HandAuditedManifest) {
    const auto manifest = nlohmann::json::parse(testutil::slurp(testutil::fixture("wikitext_30.manifest.json")));
    std::map<std::int64_t, std::set<std::string>> want;
    for (const auto& e : manifest) want[e["rev_id"].get<std::int64_t>()] = e["urls"].get<std::set<std::string>>();
    ASSERT_EQ(want.size(), 30u);

    const auto ds = load_corpus(testutil::fixture("wikitext_30.jsonl"));
    ASSERT_EQ(ds.size(), 1u);
    ASSERT_EQ(ds[0].articles.size(), 1u);
    std::size_t checked = 0;
    for (const auto& r : ds[0].articles[0].revisions) {
        const auto& text = std::get<Wikitext>(r.payload).text;
        ASSERT_TRUE(want.count(r.rev_id));
        EXPECT_EQ(extract_urls(text), want[r.rev_id]) << "revision " << r.rev_id;
        ++checked;
    }
    EXPECT_EQ(checked, 30u);
}
