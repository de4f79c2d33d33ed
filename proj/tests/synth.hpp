#pragma once

// Seeded synthetic data with a known label signal. Uses the library's
// portable RNG helpers so every platform sees the same draws.

#include "wikirel/wikirel.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace synth {

using namespace wikirel;

inline double normal(Rng& rng) {
    // Box-Muller; uniform_real is in [0,1), so shift away from zero
    const double u1 = 1.0 - uniform_real(rng);
    const double u2 = uniform_real(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::vector<std::string> column_names(std::size_t n) {
    std::vector<std::string> c;
    for (std::size_t i = 0; i < n; ++i) c.push_back("f" + std::to_string(i));
    return c;
}

// `informative` columns carry the label as a mean shift of `signal`
// standard deviations; the remaining columns are noise. Classes alternate
// with a 40% reliable share.
inline FeatureMatrix labeled_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols, std::size_t informative,
                                    double signal, DatasetKey key, const std::string& prefix = "dom") {
    Rng rng(seed);
    FeatureMatrix m;
    m.key = std::move(key);
    m.columns = column_names(cols);
    std::vector<double> v(cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const bool rel = uniform_real(rng) < 0.4;
        for (std::size_t c = 0; c < cols; ++c) {
            v[c] = normal(rng) + (c < informative && rel ? signal : 0.0);
        }
        m.add_row(prefix + std::to_string(r) + ".org", v, rel ? Label::reliable : Label::unreliable);
    }
    return m;
}

// Strictly increasing transform, one of several shapes chosen by `kind`.
inline double monotone(double x, int kind) {
    switch (kind % 5) {
        case 0: return 40.0 * x + 300.0;
        case 1: return std::exp(x);
        case 2: return x * x * x + 10.0 * x;
        case 3: return std::sinh(2.0 * x) - 5.0;
        default: return 1.0 / (1.0 + std::exp(-3.0 * x));
    }
}

// Applies a per-column strictly increasing distortion.
inline FeatureMatrix distort(const FeatureMatrix& m, int offset) {
    FeatureMatrix out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) out.at(r, c) = monotone(m.at(r, c), static_cast<int>(c) + offset);
    }
    return out;
}

// A smaller edition of the same data: every column compressed by half and
// shifted down by one unit. Values still overlap the original range, so a
// threshold learned on one scale lands on the wrong class boundary on the
// other. (distort() instead moves most columns clear of the original range,
// where pooled trees simply learn separate splits for each dataset.)
inline FeatureMatrix shrink(const FeatureMatrix& m) {
    FeatureMatrix out = m;
    for (auto& v : out.values) v = 0.5 * v - 1.0;
    return out;
}

// Corpus with an editorial signal that is constant in time: registered
// editors cite `good*` domains and keep them, anonymous editors cite `bad*`
// domains that registered editors later remove. A share of events flips
// roles so the signal is imperfect.
struct SignalCorpus {
    Dataset dataset;
    LabelSet labels;
};

inline SignalCorpus signal_corpus(std::uint64_t seed, int articles, int revisions_per_article, int n_good = 10,
                                  int n_bad = 10, double flip = 0.2) {
    Rng rng(seed);
    SignalCorpus out;
    out.dataset.key = {"synthetic", "xx"};
    out.labels.source = LabelSource::perennial;
    for (int i = 0; i < n_good; ++i) out.labels.add("good" + std::to_string(i) + ".com", "generally reliable");
    for (int i = 0; i < n_bad; ++i) out.labels.add("bad" + std::to_string(i) + ".com", "deprecated");

    std::int64_t rev_id = 1;
    const std::vector<std::string> registered{"Ann", "Ben", "Cat", "Dev", "Eli", "Fay"};
    for (int a = 0; a < articles; ++a) {
        ArticleHistory h;
        h.page = {"xx", "synthetic", 1000 + a, "Synthetic " + std::to_string(a)};
        std::int64_t t = 1'400'000'000 + static_cast<std::int64_t>(uniform_index(rng, 1'000'000));
        std::vector<std::string> urls;
        std::string last_user;
        for (int r = 0; r < revisions_per_article; ++r) {
            const bool anon = uniform_real(rng) < 0.4;
            std::string user = anon ? "198.51.100." + std::to_string(uniform_index(rng, 50))
                                    : registered[uniform_index(rng, registered.size())];
            if (user == last_user) user += "x";  // keep runs short
            last_user = user;
            t += 3600 + static_cast<std::int64_t>(uniform_index(rng, 30 * 86400));
            const bool flipped = uniform_real(rng) < flip;
            const bool acts_good = anon == flipped;
            std::vector<std::size_t> bad_idx, good_idx;
            for (std::size_t k = 0; k < urls.size(); ++k) {
                (urls[k].find("//bad") != std::string::npos ? bad_idx : good_idx).push_back(k);
            }
            if (acts_good && !bad_idx.empty() && uniform_real(rng) < 0.5) {
                urls.erase(urls.begin() + static_cast<std::ptrdiff_t>(bad_idx[uniform_index(rng, bad_idx.size())]));
            } else if (acts_good) {
                urls.push_back("https://good" + std::to_string(uniform_index(rng, static_cast<std::size_t>(n_good))) +
                               ".com/a" + std::to_string(r));
            } else if (!good_idx.empty() && uniform_real(rng) < 0.3) {
                urls.erase(urls.begin() + static_cast<std::ptrdiff_t>(good_idx[uniform_index(rng, good_idx.size())]));
            } else {
                urls.push_back("https://bad" + std::to_string(uniform_index(rng, static_cast<std::size_t>(n_bad))) +
                               ".com/a" + std::to_string(r));
            }
            RevisionRecord rec;
            rec.language = "xx";
            rec.topic = "synthetic";
            rec.page_id = h.page.page_id;
            rec.title = h.page.title;
            rec.rev_id = rev_id++;
            rec.timestamp = Instant{std::chrono::seconds{t}};
            rec.user = user;
            rec.registered = !anon;
            rec.payload = UrlList{urls};
            h.revisions.push_back(std::move(rec));
        }
        h.retrieved_at = Instant{std::chrono::seconds{t + 86400}};
        out.dataset.articles.push_back(std::move(h));
    }
    return out;
}

} // namespace synth
