#pragma once

#include "wikirel/common.hpp"
#include "wikirel/features.hpp"
#include "wikirel/public_suffix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace wikirel {

enum class LabelSource { perennial, mbfc, custom };

inline std::string_view to_string(LabelSource s) {
    switch (s) {
        case LabelSource::perennial: return "perennial";
        case LabelSource::mbfc: return "mbfc";
        case LabelSource::custom: return "custom";
    }
    return "custom";
}

inline LabelSource parse_label_source(std::string_view s) {
    if (s == "perennial") return LabelSource::perennial;
    if (s == "mbfc") return LabelSource::mbfc;
    if (s == "custom") return LabelSource::custom;
    throw DataError("unknown label source '" + std::string(s) + "'");
}

enum class LabelClass { reliable, unreliable, excluded };

// Perennial-list category mapping: generally reliable is positive; the three
// unreliable categories merge into the negative class; no consensus is dropped.
inline LabelClass map_perennial(std::string_view category) {
    const std::string c = ascii_lower(trim(category));
    if (c == "generally reliable") return LabelClass::reliable;
    if (c == "blacklisted" || c == "deprecated" || c == "generally unreliable") return LabelClass::unreliable;
    if (c == "no consensus") return LabelClass::excluded;
    throw DataError("unknown perennial category '" + std::string(category) + "'");
}

// MBFC credibility mapping. Everything outside the two named sets (medium,
// mixed, unknown strings) is excluded.
inline LabelClass map_mbfc(std::string_view credibility) {
    const std::string c = ascii_lower(trim(credibility));
    if (c == "very high" || c == "high") return LabelClass::reliable;
    if (c == "low" || c == "very low") return LabelClass::unreliable;
    return LabelClass::excluded;
}

// Custom label files carry the binary class directly.
inline LabelClass map_custom(std::string_view category) {
    const std::string c = ascii_lower(trim(category));
    if (c == "reliable" || c == "1") return LabelClass::reliable;
    if (c == "unreliable" || c == "0") return LabelClass::unreliable;
    return LabelClass::excluded;
}

struct LabelSet {
    LabelSource source = LabelSource::perennial;
    std::string snapshot_date;
    std::map<std::string, std::string> categories;
    std::map<std::string, Label> binary;
    std::set<std::string> excluded;

    Label lookup(const std::string& domain) const {
        auto it = binary.find(domain);
        return it == binary.end() ? Label::none : it->second;
    }

    void add(const std::string& domain, const std::string& category) {
        categories[domain] = category;
        LabelClass cls = LabelClass::excluded;
        switch (source) {
            case LabelSource::perennial: cls = map_perennial(category); break;
            case LabelSource::mbfc: cls = map_mbfc(category); break;
            case LabelSource::custom: cls = map_custom(category); break;
        }
        binary.erase(domain);
        excluded.erase(domain);
        if (cls == LabelClass::excluded) {
            excluded.insert(domain);
        } else {
            binary[domain] = cls == LabelClass::reliable ? Label::reliable : Label::unreliable;
        }
    }
};

// Canonical domain for a label entry: hosts or URLs are reduced the same way
// cited URLs are.
inline std::string canonical_label_domain(std::string_view entry, const PublicSuffixList& psl) {
    std::string e(trim(entry));
    if (e.find("://") == std::string::npos) e = "https://" + e;
    auto url = normalize_url(e);
    if (!url) throw DataError("not a domain: '" + std::string(entry) + "'");
    return psl.extract_domain(*url);
}

// CSV `domain,category`; '#' lines are comments and `# snapshot: <date>`
// records the snapshot date. A `domain,category` header row is optional.
inline LabelSet load_labels(std::istream& in, LabelSource source, const PublicSuffixList& psl,
                            const std::string& name = "<labels>") {
    LabelSet set;
    set.source = source;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view l = trim(line);
        if (l.empty()) continue;
        if (l.front() == '#') {
            auto body = trim(l.substr(1));
            if (starts_with_ci(body, "snapshot:")) set.snapshot_date = std::string(trim(body.substr(9)));
            continue;
        }
        auto f = csv_split(l);
        const std::string where = name + ":" + std::to_string(line_no);
        if (f.size() != 2) throw DataError(where, "expected 'domain,category'");
        if (ascii_lower(trim(f[0])) == "domain" && ascii_lower(trim(f[1])) == "category") continue;
        try {
            set.add(canonical_label_domain(f[0], psl), std::string(trim(f[1])));
        } catch (const DataError& e) {
            throw DataError(where, e.what());
        }
    }
    return set;
}

inline LabelSet load_labels(const std::string& path, LabelSource source, const PublicSuffixList& psl) {
    std::ifstream in(path);
    if (!in) throw DataError(path, "cannot open label file");
    return load_labels(in, source, psl, path);
}

inline void apply_labels(FeatureMatrix& m, const LabelSet& labels) {
    for (std::size_t r = 0; r < m.rows(); ++r) m.labels[r] = labels.lookup(m.domains[r]);
}

struct ClassCounts {
    std::size_t reliable = 0;
    std::size_t unreliable = 0;
};

inline ClassCounts class_counts(const FeatureMatrix& m) {
    return {m.count(Label::reliable), m.count(Label::unreliable)};
}

// Keeps matrices with at least `min_per_class` labeled domains of each class
// under `labels`.
inline std::vector<FeatureMatrix> filter_datasets(std::vector<FeatureMatrix> datasets, const LabelSet& labels,
                                                  std::size_t min_per_class = 2) {
    if (min_per_class < 1) throw DataError("min_per_class must be at least 1");
    std::vector<FeatureMatrix> kept;
    for (auto& m : datasets) {
        std::size_t rel = 0, unr = 0;
        for (const auto& d : m.domains) {
            auto l = labels.lookup(d);
            rel += l == Label::reliable;
            unr += l == Label::unreliable;
        }
        if (rel >= min_per_class && unr >= min_per_class) kept.push_back(std::move(m));
    }
    return kept;
}

struct LanguageTier {
    std::string language;
    std::int64_t active_users = 0;
    Tier tier = Tier::unassigned;

    bool operator==(const LanguageTier&) const = default;
};

// Descending by active users (ties: language code ascending); first
// ceil(5% n) high, next ceil(25% n) mid, rest low.
inline std::vector<LanguageTier> assign_tiers(const std::map<std::string, std::int64_t>& counts) {
    std::vector<LanguageTier> out;
    for (const auto& [lang, n] : counts) out.push_back({lang, n, Tier::unassigned});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.active_users != b.active_users) return a.active_users > b.active_users;
        return a.language < b.language;
    });
    // Integer ceilings: ceil(n*5/100), ceil(n*25/100).
    const std::size_t n = out.size();
    const std::size_t high = (n * 5 + 99) / 100;
    const std::size_t mid = (n * 25 + 99) / 100;
    for (std::size_t i = 0; i < n; ++i) {
        out[i].tier = i < high ? Tier::high : (i < high + mid ? Tier::mid : Tier::low);
    }
    return out;
}

} // namespace wikirel
