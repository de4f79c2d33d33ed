#pragma once

#include "wikirel/common.hpp"
#include "wikirel/corpus.hpp"
#include "wikirel/extractor.hpp"
#include "wikirel/timeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace wikirel {

// ------------------------------------------------------------
// catalog
// ------------------------------------------------------------

enum class Family { popularity, permanence, user };
enum class Unit { count, days, revisions, ratio };
enum class Normalization { raw, dataset_normalized, per_article_average };
enum class EventScope { all_events, start_end_events, not_applicable };

struct FeatureDescriptor {
    std::string_view id;
    Family family;
    Unit unit;
    Normalization normalization;
    EventScope scope;
};

inline constexpr std::size_t kFeatureCount = 50;

namespace detail {

using F = Family;
using U = Unit;
using N = Normalization;
using S = EventScope;

// clang-format off
inline constexpr std::array<FeatureDescriptor, kFeatureCount> kCatalog{{
    {"n_articles",             F::popularity, U::count,     N::raw,                 S::not_applicable},
    {"n_articles_norm",        F::popularity, U::ratio,     N::dataset_normalized,  S::not_applicable},
    {"curr_n_articles",        F::popularity, U::count,     N::raw,                 S::not_applicable},
    {"curr_n_articles_norm",   F::popularity, U::ratio,     N::dataset_normalized,  S::not_applicable},

    {"sum_perm_days",          F::permanence, U::days,      N::raw,                 S::not_applicable},
    {"sum_perm_revs",          F::permanence, U::revisions, N::raw,                 S::not_applicable},
    {"sum_curr_perm_days",     F::permanence, U::days,      N::raw,                 S::not_applicable},
    {"sum_curr_perm_revs",     F::permanence, U::revisions, N::raw,                 S::not_applicable},
    {"sum_perm_days_norm",     F::permanence, U::ratio,     N::dataset_normalized,  S::not_applicable},
    {"sum_perm_revs_norm",     F::permanence, U::ratio,     N::dataset_normalized,  S::not_applicable},
    {"mean_perm_days",         F::permanence, U::days,      N::per_article_average, S::not_applicable},
    {"mean_perm_revs",         F::permanence, U::revisions, N::per_article_average, S::not_applicable},
    {"mean_self_perm_days",    F::permanence, U::ratio,     N::per_article_average, S::not_applicable},
    {"mean_self_perm_revs",    F::permanence, U::ratio,     N::per_article_average, S::not_applicable},
    {"sum_age_days",           F::permanence, U::days,      N::raw,                 S::not_applicable},
    {"sum_age_revs",           F::permanence, U::revisions, N::raw,                 S::not_applicable},
    {"mean_age_days",          F::permanence, U::days,      N::per_article_average, S::not_applicable},
    {"mean_age_revs",          F::permanence, U::revisions, N::per_article_average, S::not_applicable},

    {"u_add",                  F::user, U::count, N::raw,                 S::all_events},
    {"u_rem",                  F::user, U::count, N::raw,                 S::all_events},
    {"r_add",                  F::user, U::count, N::raw,                 S::all_events},
    {"r_rem",                  F::user, U::count, N::raw,                 S::all_events},
    {"u_add_norm",             F::user, U::ratio, N::dataset_normalized,  S::all_events},
    {"u_rem_norm",             F::user, U::ratio, N::dataset_normalized,  S::all_events},
    {"r_add_norm",             F::user, U::ratio, N::dataset_normalized,  S::all_events},
    {"r_rem_norm",             F::user, U::ratio, N::dataset_normalized,  S::all_events},
    {"mean_u_add",             F::user, U::count, N::per_article_average, S::all_events},
    {"mean_u_rem",             F::user, U::count, N::per_article_average, S::all_events},
    {"mean_r_add",             F::user, U::count, N::per_article_average, S::all_events},
    {"mean_r_rem",             F::user, U::count, N::per_article_average, S::all_events},
    {"ratio_r_add",            F::user, U::ratio, N::raw,                 S::all_events},
    {"ratio_r_rem",            F::user, U::ratio, N::raw,                 S::all_events},
    {"proba_r_add",            F::user, U::ratio, N::raw,                 S::all_events},
    {"proba_r_rem",            F::user, U::ratio, N::raw,                 S::all_events},

    {"u_start",                F::user, U::count, N::raw,                 S::start_end_events},
    {"u_end",                  F::user, U::count, N::raw,                 S::start_end_events},
    {"r_start",                F::user, U::count, N::raw,                 S::start_end_events},
    {"r_end",                  F::user, U::count, N::raw,                 S::start_end_events},
    {"u_start_norm",           F::user, U::ratio, N::dataset_normalized,  S::start_end_events},
    {"u_end_norm",             F::user, U::ratio, N::dataset_normalized,  S::start_end_events},
    {"r_start_norm",           F::user, U::ratio, N::dataset_normalized,  S::start_end_events},
    {"r_end_norm",             F::user, U::ratio, N::dataset_normalized,  S::start_end_events},
    {"mean_u_start",           F::user, U::count, N::per_article_average, S::start_end_events},
    {"mean_u_end",             F::user, U::count, N::per_article_average, S::start_end_events},
    {"mean_r_start",           F::user, U::count, N::per_article_average, S::start_end_events},
    {"mean_r_end",             F::user, U::count, N::per_article_average, S::start_end_events},
    {"ratio_r_start",          F::user, U::ratio, N::raw,                 S::start_end_events},
    {"ratio_r_end",            F::user, U::ratio, N::raw,                 S::start_end_events},
    {"proba_r_start",          F::user, U::ratio, N::raw,                 S::start_end_events},
    {"proba_r_end",            F::user, U::ratio, N::raw,                 S::start_end_events},
}};
// clang-format on

} // namespace detail

inline constexpr std::span<const FeatureDescriptor, kFeatureCount> feature_catalog() { return detail::kCatalog; }

inline std::vector<std::string> catalog_ids() {
    std::vector<std::string> ids;
    for (const auto& d : detail::kCatalog) ids.emplace_back(d.id);
    return ids;
}

// Offsets of the 16 user features inside one event scope.
enum UserFeature : std::size_t {
    kUAdd, kURem, kRAdd, kRRem,
    kUAddNorm, kURemNorm, kRAddNorm, kRRemNorm,
    kMeanUAdd, kMeanURem, kMeanRAdd, kMeanRRem,
    kRatioAdd, kRatioRem, kProbaAdd, kProbaRem,
    kUserFeaturesPerScope
};

inline constexpr std::size_t kPopularityOffset = 0;
inline constexpr std::size_t kPermanenceOffset = 4;
inline constexpr std::size_t kUserAllOffset = 18;
inline constexpr std::size_t kUserStartEndOffset = 34;

// ------------------------------------------------------------
// feature matrix
// ------------------------------------------------------------

enum class Label : int { unreliable = 0, reliable = 1, none = -1 };

inline std::string_view label_csv(Label l) {
    switch (l) {
        case Label::reliable: return "1";
        case Label::unreliable: return "0";
        case Label::none: return "";
    }
    return "";
}

struct FeatureMatrix {
    DatasetKey key;
    std::vector<std::string> columns = catalog_ids();
    std::vector<std::string> domains;
    std::vector<double> values;  // row-major, rows() x cols()
    std::vector<Label> labels;   // one per row

    std::size_t rows() const { return domains.size(); }
    std::size_t cols() const { return columns.size(); }

    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols(), cols()}; }
    std::span<double> row(std::size_t r) { return {values.data() + r * cols(), cols()}; }

    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }

    void add_row(std::string domain, std::span<const double> v, Label label = Label::none) {
        if (v.size() != cols()) throw DataError("row width does not match column count");
        domains.push_back(std::move(domain));
        values.insert(values.end(), v.begin(), v.end());
        labels.push_back(label);
    }

    std::size_t column_index(std::string_view id) const {
        auto it = std::find(columns.begin(), columns.end(), id);
        if (it == columns.end()) throw DataError("unknown feature column '" + std::string(id) + "'");
        return static_cast<std::size_t>(it - columns.begin());
    }

    std::size_t count(Label l) const { return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l)); }

    std::vector<std::size_t> labeled_rows() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < rows(); ++i) {
            if (labels[i] != Label::none) out.push_back(i);
        }
        return out;
    }

    bool operator==(const FeatureMatrix&) const = default;
};

// Identifies a column layout; models refuse matrices with another layout.
inline std::string column_fingerprint(const std::vector<std::string>& columns) {
    std::uint64_t h = fnv1a64("wikirel-columns");
    for (const auto& c : columns) {
        h = fnv1a64(c, h);
        h = fnv1a64(std::string_view("\x1f", 1), h);
    }
    return hex64(h);
}

// ------------------------------------------------------------
// processed datasets
// ------------------------------------------------------------

struct ProcessedArticle {
    ArticleEdits edits;
    TimelineMap timelines;
};

struct ProcessedDataset {
    DatasetKey key;
    Tier tier = Tier::unassigned;
    std::vector<ProcessedArticle> articles;  // ordered by page id
};

inline ProcessedDataset process_dataset(const Dataset& d, const SourceExtractor& ex, ExtractStats* stats = nullptr) {
    ProcessedDataset out{d.key, d.tier, {}};
    out.articles.reserve(d.articles.size());
    for (const auto& a : d.articles) {
        ProcessedArticle pa{ex.process(a, stats), {}};
        pa.timelines = build_timeline(pa.edits);
        out.articles.push_back(std::move(pa));
    }
    std::sort(out.articles.begin(), out.articles.end(), [](const auto& a, const auto& b) {
        return a.edits.page.page_id < b.edits.page.page_id;
    });
    return out;
}

inline AgeTotals dataset_age_totals(const ProcessedDataset& d) {
    AgeTotals t;
    std::int64_t seconds = 0;
    std::set<std::string> users;
    for (const auto& a : d.articles) {
        if (a.edits.merged.empty()) continue;
        seconds += (a.edits.retrieved_at - a.edits.created_at).count();
        t.article_revisions += static_cast<std::int64_t>(a.edits.merged.size());
        for (const auto& m : a.edits.merged) users.insert(m.user);
    }
    t.article_days = static_cast<double>(seconds) / kSecondsPerDay;
    t.unique_users = static_cast<std::int64_t>(users.size());
    return t;
}

// ------------------------------------------------------------
// feature computation
// ------------------------------------------------------------

namespace detail {

inline double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

struct UserAccumulator {
    std::set<std::string> adders, removers, reg_adders, reg_removers;
    std::int64_t add_events = 0, rem_events = 0, reg_add_events = 0, reg_rem_events = 0;
    double sum_article_adders = 0, sum_article_reg_adders = 0;
    double sum_article_removers = 0, sum_article_reg_removers = 0;
    std::int64_t articles_with_add = 0, articles_with_rem = 0;

    // Feeds one article's qualifying events.
    void article(const std::vector<const SourceEdit*>& adds, const std::vector<const SourceEdit*>& removes) {
        auto side = [](const std::vector<const SourceEdit*>& events, std::set<std::string>& all,
                       std::set<std::string>& reg, std::int64_t& n, std::int64_t& n_reg, double& sum_u,
                       double& sum_r, std::int64_t& articles) {
            if (events.empty()) return;
            std::set<std::string> u, r;
            for (const auto* e : events) {
                ++n;
                u.insert(e->user);
                all.insert(e->user);
                if (e->registered) {
                    ++n_reg;
                    r.insert(e->user);
                    reg.insert(e->user);
                }
            }
            sum_u += static_cast<double>(u.size());
            sum_r += static_cast<double>(r.size());
            ++articles;
        };
        side(adds, adders, reg_adders, add_events, reg_add_events, sum_article_adders, sum_article_reg_adders,
             articles_with_add);
        side(removes, removers, reg_removers, rem_events, reg_rem_events, sum_article_removers,
             sum_article_reg_removers, articles_with_rem);
    }

    void write(std::span<double> out, double dataset_users) const {
        const auto ua = static_cast<double>(adders.size());
        const auto ur = static_cast<double>(removers.size());
        const auto ra = static_cast<double>(reg_adders.size());
        const auto rr = static_cast<double>(reg_removers.size());
        out[kUAdd] = ua;
        out[kURem] = ur;
        out[kRAdd] = ra;
        out[kRRem] = rr;
        out[kUAddNorm] = safe_div(ua, dataset_users);
        out[kURemNorm] = safe_div(ur, dataset_users);
        out[kRAddNorm] = safe_div(ra, dataset_users);
        out[kRRemNorm] = safe_div(rr, dataset_users);
        out[kMeanUAdd] = safe_div(sum_article_adders, static_cast<double>(articles_with_add));
        out[kMeanURem] = safe_div(sum_article_removers, static_cast<double>(articles_with_rem));
        out[kMeanRAdd] = safe_div(sum_article_reg_adders, static_cast<double>(articles_with_add));
        out[kMeanRRem] = safe_div(sum_article_reg_removers, static_cast<double>(articles_with_rem));
        out[kRatioAdd] = safe_div(ra, ua);
        out[kRatioRem] = safe_div(rr, ur);
        out[kProbaAdd] = safe_div(static_cast<double>(reg_add_events), static_cast<double>(add_events));
        out[kProbaRem] = safe_div(static_cast<double>(reg_rem_events), static_cast<double>(rem_events));
    }
};

struct DomainAccumulator {
    std::int64_t n_articles = 0, curr_n_articles = 0;
    std::int64_t perm_seconds = 0, perm_revs = 0, curr_perm_seconds = 0, curr_perm_revs = 0;
    std::int64_t age_seconds = 0, age_revs = 0;
    double self_perm_days = 0, self_perm_revs = 0;
    UserAccumulator all, start_end;
};

} // namespace detail

// One row per domain seen in any timeline, rows sorted by domain. Articles are
// reduced in page-id order so results do not depend on input order.
inline FeatureMatrix compute_features(const ProcessedDataset& d) {
    FeatureMatrix m;
    m.key = d.key;
    if (d.articles.empty()) return m;

    std::vector<const ProcessedArticle*> order;
    for (const auto& a : d.articles) order.push_back(&a);
    std::sort(order.begin(), order.end(),
              [](const auto* a, const auto* b) { return a->edits.page.page_id < b->edits.page.page_id; });

    const AgeTotals totals = dataset_age_totals(d);
    std::int64_t total_seconds = 0;
    for (const auto* a : order) {
        if (!a->edits.merged.empty()) total_seconds += (a->edits.retrieved_at - a->edits.created_at).count();
    }
    const auto n_articles_total = static_cast<double>(d.articles.size());

    std::map<std::string, detail::DomainAccumulator> acc;
    for (const auto* a : order) {
        for (const auto& [domain, t] : a->timelines) {
            auto& x = acc[domain];
            ++x.n_articles;
            x.perm_seconds += t.permanence_seconds;
            x.perm_revs += t.permanence_revisions;
            if (t.currently_present) {
                ++x.curr_n_articles;
                x.curr_perm_seconds += t.permanence_seconds;
                x.curr_perm_revs += t.permanence_revisions;
            }
            x.age_seconds += t.age_seconds;
            x.age_revs += t.age_revisions;
            x.self_perm_days += t.self_permanence_days();
            x.self_perm_revs += t.self_permanence_revisions();

            std::vector<const SourceEdit*> adds, removes, starts, ends;
            for (const auto& e : t.adds) {
                adds.push_back(&e);
                if (e.first_add) starts.push_back(&e);
            }
            for (const auto& e : t.removes) {
                removes.push_back(&e);
                if (e.last_remove) ends.push_back(&e);
            }
            x.all.article(adds, removes);
            x.start_end.article(starts, ends);
        }
    }

    const auto users = static_cast<double>(totals.unique_users);
    const auto total_days = static_cast<double>(total_seconds) / kSecondsPerDay;
    const auto total_revs = static_cast<double>(totals.article_revisions);
    std::array<double, kFeatureCount> row{};
    for (const auto& [domain, x] : acc) {
        row.fill(0.0);
        const auto n = static_cast<double>(x.n_articles);
        const double perm_days = static_cast<double>(x.perm_seconds) / kSecondsPerDay;
        const double age_days = static_cast<double>(x.age_seconds) / kSecondsPerDay;

        auto* p = row.data() + kPopularityOffset;
        p[0] = n;
        p[1] = detail::safe_div(n, n_articles_total);
        p[2] = static_cast<double>(x.curr_n_articles);
        p[3] = detail::safe_div(static_cast<double>(x.curr_n_articles), n_articles_total);

        auto* q = row.data() + kPermanenceOffset;
        q[0] = perm_days;
        q[1] = static_cast<double>(x.perm_revs);
        q[2] = static_cast<double>(x.curr_perm_seconds) / kSecondsPerDay;
        q[3] = static_cast<double>(x.curr_perm_revs);
        q[4] = detail::safe_div(perm_days, total_days);
        q[5] = detail::safe_div(static_cast<double>(x.perm_revs), total_revs);
        q[6] = perm_days / n;
        q[7] = static_cast<double>(x.perm_revs) / n;
        q[8] = x.self_perm_days / n;
        q[9] = x.self_perm_revs / n;
        q[10] = age_days;
        q[11] = static_cast<double>(x.age_revs);
        q[12] = age_days / n;
        q[13] = static_cast<double>(x.age_revs) / n;

        x.all.write(std::span<double>(row).subspan(kUserAllOffset, kUserFeaturesPerScope), users);
        x.start_end.write(std::span<double>(row).subspan(kUserStartEndOffset, kUserFeaturesPerScope), users);
        m.add_row(domain, row);
    }
    return m;
}

inline FeatureMatrix compute_features(const Dataset& d, const SourceExtractor& ex) {
    return compute_features(process_dataset(d, ex));
}

// ------------------------------------------------------------
// quantile normalization
// ------------------------------------------------------------

// Average ranks (ties share the mean rank) divided by the row count.
inline std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        // ranks i+1 .. j+1, mean = (i + j + 2) / 2
        const double r = static_cast<double>(i + j + 2) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline FeatureMatrix quantile_normalize(const FeatureMatrix& m) {
    FeatureMatrix out = m;
    const std::size_t n = m.rows();
    if (n == 0) return out;
    std::vector<double> col(n);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        for (std::size_t r = 0; r < n; ++r) col[r] = m.at(r, c);
        auto ranks = average_ranks(col);
        for (std::size_t r = 0; r < n; ++r) out.at(r, c) = ranks[r] / static_cast<double>(n);
    }
    return out;
}

// Stacks matrices with identical columns. Keys are dropped.
inline FeatureMatrix stack_rows(std::span<const FeatureMatrix> parts, DatasetKey key = {"pooled", "pooled"}) {
    FeatureMatrix out;
    out.key = std::move(key);
    if (parts.empty()) return out;
    out.columns = parts.front().columns;
    for (const auto& p : parts) {
        if (p.columns != out.columns) throw DataError("cannot pool matrices with different columns");
        out.domains.insert(out.domains.end(), p.domains.begin(), p.domains.end());
        out.values.insert(out.values.end(), p.values.begin(), p.values.end());
        out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    }
    return out;
}

// ------------------------------------------------------------
// CSV
// ------------------------------------------------------------

inline void write_matrix_csv(std::ostream& out, const FeatureMatrix& m) {
    out << "domain";
    for (const auto& c : m.columns) out << ',' << c;
    out << ",label\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << csv_field(m.domains[r]);
        for (double v : m.row(r)) out << ',' << format_real(v);
        out << ',' << label_csv(m.labels[r]) << '\n';
    }
}

inline FeatureMatrix read_matrix_csv(std::istream& in, const std::string& source = "<matrix>") {
    FeatureMatrix m;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DataError(source, "empty matrix file");
    ++line_no;
    auto header = csv_split(line);
    if (header.size() < 2 || header.front() != "domain" || header.back() != "label") {
        throw DataError(source + ":1", "header must start with 'domain' and end with 'label'");
    }
    m.columns.assign(header.begin() + 1, header.end() - 1);
    std::vector<double> row(m.cols());
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        auto f = csv_split(line);
        if (f.size() != header.size()) throw DataError(where, "expected " + std::to_string(header.size()) + " fields");
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const std::string& s = f[c + 1];
            char* end = nullptr;
            row[c] = std::strtod(s.c_str(), &end);
            if (s.empty() || end != s.c_str() + s.size()) throw DataError(where, "bad number '" + s + "'");
        }
        Label label;
        const std::string& l = f.back();
        if (l.empty()) {
            label = Label::none;
        } else if (l == "1") {
            label = Label::reliable;
        } else if (l == "0") {
            label = Label::unreliable;
        } else {
            throw DataError(where, "label must be 1, 0 or empty");
        }
        m.add_row(f.front(), row, label);
    }
    return m;
}

// `features_<topic>_<language>.csv` -> {topic, language}; anything else
// keeps the file stem as the topic.
inline DatasetKey matrix_key_from_filename(const std::string& path) {
    std::string stem = std::filesystem::path(path).stem().string();
    if (stem.starts_with("features_")) {
        stem.erase(0, 9);
        const auto us = stem.rfind('_');
        if (us != std::string::npos && us > 0 && us + 1 < stem.size()) return {stem.substr(0, us), stem.substr(us + 1)};
    }
    return {stem, ""};
}

inline FeatureMatrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError(path, "cannot open matrix file");
    auto m = read_matrix_csv(in, path);
    m.key = matrix_key_from_filename(path);
    return m;
}

} // namespace wikirel
