#pragma once

#include "wikirel/common.hpp"
#include "wikirel/corpus.hpp"
#include "wikirel/eval.hpp"
#include "wikirel/extractor.hpp"
#include "wikirel/features.hpp"
#include "wikirel/labels.hpp"
#include "wikirel/timeline.hpp"

#include "json.hpp"

#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace wikirel {

// round(10^e) for e = first, first+step, ..., last (inclusive, within 1e-9).
inline std::vector<std::size_t> log_regular_grid(double first_exponent, double last_exponent, double step) {
    if (!(step > 0.0)) throw DataError("grid step must be positive");
    std::vector<std::size_t> grid;
    for (int k = 0;; ++k) {
        const double e = first_exponent + step * k;
        if (e > last_exponent + 1e-9) break;
        grid.push_back(static_cast<std::size_t>(std::llround(std::pow(10.0, e))));
    }
    return grid;
}

struct ScalingOptions {
    std::vector<std::size_t> grid;  // merged-revision counts, ascending
    std::size_t repeats = 10;
    std::optional<Instant> cutoff;  // keep revisions strictly before this instant
    TrainConfig train;
    std::size_t min_per_class = 2;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

struct ScalingPoint {
    std::size_t revisions = 0;
    std::vector<double> f1;  // one per completed repeat
    MetricStats stats;
};

struct ScalingCurve {
    std::size_t available_revisions = 0;
    std::vector<ScalingPoint> points;
    std::vector<std::string> notes;
};

// Keeps the chosen merged revisions of one article (indices ascending) and
// rebuilds everything downstream from them.
inline ProcessedArticle subsample_article(const ArticleEdits& a, const std::vector<std::size_t>& keep) {
    std::vector<MergedRevision> chosen;
    chosen.reserve(keep.size());
    for (auto i : keep) chosen.push_back(a.merged[i]);
    ProcessedArticle out;
    out.edits.page = a.page;
    out.edits.retrieved_at = a.retrieved_at;
    out.edits.merged = remerge(chosen);
    out.edits.created_at = out.edits.merged.front().start_timestamp;
    out.edits.edits = diff_to_source_edits(out.edits.merged, a.page.page_id);
    out.timelines = build_timeline(out.edits);
    return out;
}

// For each grid point and repeat: sample merged revisions uniformly without
// replacement across the dataset, rebuild timelines and features from the
// sample only, label, and score with leave-one-out F1 macro.
inline ScalingCurve scaling_experiment(const Dataset& dataset, const SourceExtractor& ex, const LabelSet& labels,
                                       const ScalingOptions& opt) {
    if (!std::is_sorted(opt.grid.begin(), opt.grid.end())) throw DataError("scaling grid must be ascending");
    if (opt.repeats < 1) throw DataError("scaling needs at least one repeat");
    // Leave-one-out on a class of one leaves a single-class fold.
    if (opt.min_per_class < 2) throw DataError("min_per_class must be at least 2");

    Dataset source = opt.cutoff ? apply_cutoff(dataset, *opt.cutoff) : dataset;
    if (source.articles.empty()) {
        throw DataError(opt.cutoff ? "no revisions before the cutoff " + format_instant(*opt.cutoff)
                                   : std::string("dataset has no articles"));
    }
    const ProcessedDataset full = process_dataset(source, ex);

    std::vector<std::pair<std::size_t, std::size_t>> pool;  // (article, merged index)
    for (std::size_t a = 0; a < full.articles.size(); ++a) {
        for (std::size_t i = 0; i < full.articles[a].edits.merged.size(); ++i) pool.emplace_back(a, i);
    }

    ScalingCurve curve;
    curve.available_revisions = pool.size();
    for (std::size_t gi = 0; gi < opt.grid.size(); ++gi) {
        const std::size_t target = opt.grid[gi];
        if (target > pool.size() || target == 0) {
            curve.notes.push_back("skipped grid point " + std::to_string(target) + ": only " +
                                  std::to_string(pool.size()) + " merged revisions available");
            continue;
        }
        ScalingPoint point;
        point.revisions = target;
        for (std::size_t rep = 0; rep < opt.repeats; ++rep) {
            Rng rng(derive_seed(opt.seed, gi * 100003 + rep));
            std::vector<std::size_t> idx(pool.size());
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            for (std::size_t k = 0; k < target; ++k) {
                std::swap(idx[k], idx[k + uniform_index(rng, idx.size() - k)]);
            }
            idx.resize(target);
            std::sort(idx.begin(), idx.end());

            std::vector<std::vector<std::size_t>> keep(full.articles.size());
            for (auto k : idx) keep[pool[k].first].push_back(pool[k].second);
            ProcessedDataset sample{full.key, full.tier, {}};
            for (std::size_t a = 0; a < full.articles.size(); ++a) {
                if (!keep[a].empty()) sample.articles.push_back(subsample_article(full.articles[a].edits, keep[a]));
            }
            FeatureMatrix m = compute_features(sample);
            apply_labels(m, labels);
            const auto counts = class_counts(m);
            if (counts.reliable < opt.min_per_class || counts.unreliable < opt.min_per_class) {
                curve.notes.push_back("grid point " + std::to_string(target) + " repeat " + std::to_string(rep) +
                                      ": too few labeled domains (" + std::to_string(counts.reliable) + "/" +
                                      std::to_string(counts.unreliable) + ")");
                continue;
            }
            point.f1.push_back(f1_macro(loo_validate(m, opt.train, opt.threads)));
        }
        point.stats = mean_std(point.f1);
        curve.points.push_back(std::move(point));
    }
    return curve;
}

inline void write_curve_csv(std::ostream& out, const ScalingCurve& c) {
    out << "revisions,repeats,f1_macro_mean,f1_macro_std\n";
    for (const auto& p : c.points) {
        out << p.revisions << ',' << p.f1.size() << ',' << format_real(p.stats.mean) << ','
            << format_real(p.stats.std) << '\n';
    }
}

inline nlohmann::ordered_json curve_json(const ScalingCurve& c) {
    nlohmann::ordered_json j;
    j["available_revisions"] = c.available_revisions;
    auto& pts = j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : c.points) {
        pts.push_back({{"revisions", p.revisions},
                       {"f1_macro", p.f1},
                       {"mean", p.stats.mean},
                       {"std", p.stats.std}});
    }
    j["notes"] = c.notes;
    return j;
}

} // namespace wikirel
