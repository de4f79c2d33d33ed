#pragma once

#include "wikirel/boost.hpp"
#include "wikirel/common.hpp"
#include "wikirel/features.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace wikirel {

// ------------------------------------------------------------
// parallel helper
// ------------------------------------------------------------

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index writes its
// own slot, so results do not depend on scheduling. The first exception is
// rethrown after all workers finish.
template <typename F>
void parallel_for(std::size_t n, F&& fn, unsigned threads = 0) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

// ------------------------------------------------------------
// predictions and metrics
// ------------------------------------------------------------

inline constexpr double kDecisionThreshold = 0.5;

struct Prediction {
    std::string domain;
    Label truth = Label::none;
    double probability = 0.5;
    Label predicted = Label::none;

    bool operator==(const Prediction&) const = default;
};

using PredictionSet = std::vector<Prediction>;

inline Label decide(double probability) {
    return probability >= kDecisionThreshold ? Label::reliable : Label::unreliable;
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct Metrics {
    double f1_macro = 0.0;
    ClassMetrics reliable;
    ClassMetrics unreliable;
};

struct Confusion {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;  // reliable is the positive class

    void add(Label truth, Label predicted) {
        const bool t = truth == Label::reliable;
        const bool p = predicted == Label::reliable;
        (t ? (p ? tp : fn) : (p ? fp : tn))++;
    }
};

inline ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
    ClassMetrics c;
    c.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    c.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    c.f1 = c.precision + c.recall > 0.0 ? 2.0 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    return c;
}

inline Metrics metrics_from(const Confusion& c) {
    Metrics m;
    m.reliable = class_metrics(c.tp, c.fp, c.fn);
    m.unreliable = class_metrics(c.tn, c.fn, c.fp);
    m.f1_macro = (m.reliable.f1 + m.unreliable.f1) / 2.0;
    return m;
}

inline Metrics compute_metrics(const PredictionSet& p) {
    if (p.empty()) throw DataError("cannot score an empty prediction set");
    Confusion c;
    for (const auto& x : p) c.add(x.truth, x.predicted);
    return metrics_from(c);
}

inline double f1_macro(const PredictionSet& p) { return compute_metrics(p).f1_macro; }

// ------------------------------------------------------------
// leave-one-out
// ------------------------------------------------------------

// One prediction per labeled row; each fold trains on every other labeled row
// with its own class weight.
inline PredictionSet loo_validate(const FeatureMatrix& m, const TrainConfig& cfg, unsigned threads = 0) {
    const auto labeled = m.labeled_rows();
    if (labeled.size() < 2) throw DataError("leave-one-out needs at least two labeled rows");
    PredictionSet out(labeled.size());
    parallel_for(
        labeled.size(),
        [&](std::size_t k) {
            std::vector<std::size_t> rows;
            rows.reserve(labeled.size() - 1);
            for (std::size_t j = 0; j < labeled.size(); ++j) {
                if (j != k) rows.push_back(labeled[j]);
            }
            const auto held = labeled[k];
            StumpEnsemble e;
            try {
                e = train(m, cfg, rows);
            } catch (const DataError& err) {
                throw DataError("fold '" + m.domains[held] + "': " + err.what());
            }
            const double p = predict_proba(e, m.row(held));
            out[k] = Prediction{m.domains[held], m.labels[held], p, decide(p)};
        },
        threads);
    return out;
}

// ------------------------------------------------------------
// bootstrap
// ------------------------------------------------------------

struct MetricStats {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation over resamples
};

inline MetricStats mean_std(std::span<const double> v) {
    MetricStats s;
    if (v.empty()) return s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size()));
    return s;
}

struct BootstrapSummary {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    MetricStats f1_macro, precision_reliable, recall_reliable, precision_unreliable, recall_unreliable;
    std::vector<double> f1_samples;
};

// Resamples (truth, prediction) pairs with replacement; no retraining.
// Stratified by true label: each resample keeps the class counts of `p`, so
// a class present in the input never drops out and scores a spurious 0.
inline BootstrapSummary bootstrap_metrics(const PredictionSet& p, std::size_t n = 100, std::uint64_t seed = 0) {
    if (n < 1) throw DataError("bootstrap needs n >= 1");
    if (p.empty()) throw DataError("cannot bootstrap an empty prediction set");
    std::vector<std::size_t> by_class[2];
    for (std::size_t k = 0; k < p.size(); ++k) by_class[p[k].truth == Label::reliable].push_back(k);
    std::vector<Metrics> samples(n);
    for (std::size_t b = 0; b < n; ++b) {
        Rng rng(derive_seed(seed, b));
        Confusion c;
        for (std::size_t k = 0; k < p.size(); ++k) {
            const auto& pool = by_class[p[k].truth == Label::reliable];
            const auto& x = p[pool[uniform_index(rng, pool.size())]];
            c.add(x.truth, x.predicted);
        }
        samples[b] = metrics_from(c);
    }
    BootstrapSummary s;
    s.n = n;
    s.seed = seed;
    auto column = [&](auto get) {
        std::vector<double> v(n);
        for (std::size_t b = 0; b < n; ++b) v[b] = get(samples[b]);
        return v;
    };
    s.f1_samples = column([](const Metrics& m) { return m.f1_macro; });
    s.f1_macro = mean_std(s.f1_samples);
    s.precision_reliable = mean_std(column([](const Metrics& m) { return m.reliable.precision; }));
    s.recall_reliable = mean_std(column([](const Metrics& m) { return m.reliable.recall; }));
    s.precision_unreliable = mean_std(column([](const Metrics& m) { return m.unreliable.precision; }));
    s.recall_unreliable = mean_std(column([](const Metrics& m) { return m.unreliable.recall; }));
    return s;
}

// Random classifier: one Bernoulli draw per domain (p = 0.5, or the reliable
// share of `labels` when prior-matched), then bootstrapped like a model.
inline PredictionSet random_predictions(const std::vector<std::pair<std::string, Label>>& labels, std::uint64_t seed,
                                        bool prior_matched = false) {
    double p_reliable = 0.5;
    if (prior_matched && !labels.empty()) {
        std::size_t rel = 0;
        for (const auto& [_, l] : labels) rel += l == Label::reliable;
        p_reliable = static_cast<double>(rel) / static_cast<double>(labels.size());
    }
    Rng rng(derive_seed(seed, 0x5eedba5e));
    PredictionSet out;
    out.reserve(labels.size());
    for (const auto& [domain, truth] : labels) {
        const bool reliable = uniform_real(rng) < p_reliable;
        out.push_back({domain, truth, reliable ? 1.0 : 0.0, reliable ? Label::reliable : Label::unreliable});
    }
    return out;
}

inline BootstrapSummary random_baseline(const std::vector<std::pair<std::string, Label>>& labels, std::size_t n = 100,
                                        std::uint64_t seed = 0, bool prior_matched = false) {
    return bootstrap_metrics(random_predictions(labels, seed, prior_matched), n, seed);
}

inline std::vector<std::pair<std::string, Label>> labeled_domains(const FeatureMatrix& m) {
    std::vector<std::pair<std::string, Label>> out;
    for (auto r : m.labeled_rows()) out.emplace_back(m.domains[r], m.labels[r]);
    return out;
}

// ------------------------------------------------------------
// Mann-Whitney U
// ------------------------------------------------------------

enum class MwMethod { automatic, exact, normal };

struct MannWhitneyResult {
    double u = 0.0;  // #{a_i > b_j} + 0.5 #{a_i == b_j}
    double p = 1.0;  // one-sided, alternative: a stochastically greater
    bool exact = false;
};

inline constexpr std::size_t kExactMaxSampleSize = 20;

// One-sided test of "a greater than b". Exact p-values use the permutation
// distribution of the mid-rank sum (valid with ties); the normal
// approximation uses tie-corrected variance and a continuity correction.
inline MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b,
                                      MwMethod method = MwMethod::automatic) {
    if (a.empty() || b.empty()) throw DataError("Mann-Whitney needs two non-empty samples");
    const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

    std::vector<std::pair<double, int>> pooled;
    pooled.reserve(n);
    for (double x : a) pooled.emplace_back(x, 0);
    for (double x : b) pooled.emplace_back(x, 1);
    std::sort(pooled.begin(), pooled.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

    // Doubled mid-ranks keep everything integral.
    std::vector<std::int64_t> rank2(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
        for (std::size_t k = i; k <= j; ++k) rank2[k] = static_cast<std::int64_t>(i + j + 2);
        const auto t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    std::int64_t r2a = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (pooled[k].second == 0) r2a += rank2[k];
    }
    const auto n1i = static_cast<std::int64_t>(n1);
    MannWhitneyResult res;
    res.u = static_cast<double>(r2a - n1i * (n1i + 1)) / 2.0;

    const bool exact = method == MwMethod::exact ||
                       (method == MwMethod::automatic && n1 <= kExactMaxSampleSize && n2 <= kExactMaxSampleSize);
    res.exact = exact;
    if (exact) {
        const std::size_t max_sum = static_cast<std::size_t>(2 * n) * n1 + 1;
        // ways[k][s]: subsets of size k with doubled rank sum s
        std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(max_sum, 0.0));
        ways[0][0] = 1.0;
        for (std::size_t item = 0; item < n; ++item) {
            const auto r = static_cast<std::size_t>(rank2[item]);
            for (std::size_t k = std::min(item + 1, n1); k >= 1; --k) {
                auto& to = ways[k];
                const auto& from = ways[k - 1];
                for (std::size_t s = max_sum; s-- > r;) {
                    if (from[s - r] != 0.0) to[s] += from[s - r];
                }
            }
        }
        double total = 0.0, tail = 0.0;
        for (std::size_t s = 0; s < max_sum; ++s) {
            total += ways[n1][s];
            if (static_cast<std::int64_t>(s) >= r2a) tail += ways[n1][s];
        }
        res.p = tail / total;
        return res;
    }

    const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2), dn = static_cast<double>(n);
    const double mu = dn1 * dn2 / 2.0;
    const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (var <= 0.0) {
        res.p = res.u >= mu ? 1.0 : 0.0;
        return res;
    }
    const double z = (res.u - mu - 0.5) / std::sqrt(var);
    res.p = 0.5 * std::erfc(z / std::sqrt(2.0));
    return res;
}

enum class Verdict { better, same, worse };

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::better: return "better";
        case Verdict::same: return "same";
        case Verdict::worse: return "worse";
    }
    return "same";
}

struct SignificanceRecord {
    double u = 0.0;
    double p = 1.0;              // one-sided, model greater than reference
    double p_worse = 1.0;        // one-sided, reference greater than model
    double alpha = 0.05;         // corrected level alpha / m
    std::size_t comparisons = 1;
    Verdict verdict = Verdict::same;
};

// Bonferroni-corrected comparison of two bootstrap samples.
inline SignificanceRecord compare_samples(std::span<const double> model, std::span<const double> reference,
                                          std::size_t comparisons = 1, double alpha = 0.05) {
    if (comparisons < 1) throw DataError("number of comparisons must be at least 1");
    SignificanceRecord s;
    const auto greater = mann_whitney(model, reference);
    const auto less = mann_whitney(reference, model);
    s.u = greater.u;
    s.p = greater.p;
    s.p_worse = less.p;
    s.comparisons = comparisons;
    s.alpha = alpha / static_cast<double>(comparisons);
    s.verdict = greater.p < s.alpha ? Verdict::better : (less.p < s.alpha ? Verdict::worse : Verdict::same);
    return s;
}

// ------------------------------------------------------------
// reports
// ------------------------------------------------------------

enum class Condition { native, cross_language, cross_topic, mixed, pooled, baseline };

inline std::string_view to_string(Condition c) {
    switch (c) {
        case Condition::native: return "native";
        case Condition::cross_language: return "cross-language";
        case Condition::cross_topic: return "cross-topic";
        case Condition::mixed: return "mixed";
        case Condition::pooled: return "pooled";
        case Condition::baseline: return "baseline";
    }
    return "native";
}

inline Condition parse_condition(std::string_view s) {
    for (auto c : {Condition::native, Condition::cross_language, Condition::cross_topic, Condition::mixed,
                   Condition::pooled, Condition::baseline}) {
        if (to_string(c) == s) return c;
    }
    throw DataError("unknown condition '" + std::string(s) + "'");
}

struct EvalReport {
    Condition condition = Condition::native;
    std::vector<std::string> train_keys;
    std::string test_key;
    Metrics point;  // on the full prediction set
    BootstrapSummary bootstrap;
    std::optional<SignificanceRecord> significance;
    PredictionSet predictions;
};

inline EvalReport make_report(Condition c, std::vector<std::string> train_keys, std::string test_key,
                              PredictionSet predictions, std::size_t bootstrap_n, std::uint64_t seed) {
    EvalReport r;
    r.condition = c;
    r.train_keys = std::move(train_keys);
    r.test_key = std::move(test_key);
    r.point = compute_metrics(predictions);
    r.bootstrap = bootstrap_metrics(predictions, bootstrap_n, seed);
    r.predictions = std::move(predictions);
    return r;
}

inline nlohmann::ordered_json stats_json(const MetricStats& s) {
    return nlohmann::ordered_json{{"mean", s.mean}, {"std", s.std}};
}

inline nlohmann::ordered_json bootstrap_json(const BootstrapSummary& b) {
    nlohmann::ordered_json j;
    j["n"] = b.n;
    j["seed"] = b.seed;
    j["f1_macro"] = stats_json(b.f1_macro);
    j["precision_reliable"] = stats_json(b.precision_reliable);
    j["recall_reliable"] = stats_json(b.recall_reliable);
    j["precision_unreliable"] = stats_json(b.precision_unreliable);
    j["recall_unreliable"] = stats_json(b.recall_unreliable);
    j["f1_macro_samples"] = b.f1_samples;
    return j;
}

inline BootstrapSummary bootstrap_from_json(const nlohmann::json& j) {
    auto stats = [](const nlohmann::json& s) { return MetricStats{s.at("mean").get<double>(), s.at("std").get<double>()}; };
    BootstrapSummary b;
    b.n = j.at("n").get<std::size_t>();
    b.seed = j.at("seed").get<std::uint64_t>();
    b.f1_macro = stats(j.at("f1_macro"));
    b.precision_reliable = stats(j.at("precision_reliable"));
    b.recall_reliable = stats(j.at("recall_reliable"));
    b.precision_unreliable = stats(j.at("precision_unreliable"));
    b.recall_unreliable = stats(j.at("recall_unreliable"));
    b.f1_samples = j.at("f1_macro_samples").get<std::vector<double>>();
    return b;
}

inline nlohmann::ordered_json significance_json(const SignificanceRecord& s) {
    nlohmann::ordered_json j;
    j["u"] = s.u;
    j["p"] = s.p;
    j["p_worse"] = s.p_worse;
    j["alpha_corrected"] = s.alpha;
    j["comparisons"] = s.comparisons;
    j["verdict"] = to_string(s.verdict);
    return j;
}

inline nlohmann::ordered_json report_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["condition"] = to_string(r.condition);
    j["train"] = r.train_keys;
    j["test"] = r.test_key;
    j["n_predictions"] = r.predictions.size();
    auto cls = [](const ClassMetrics& c) {
        return nlohmann::ordered_json{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}};
    };
    j["point"] = {{"f1_macro", r.point.f1_macro}, {"reliable", cls(r.point.reliable)},
                  {"unreliable", cls(r.point.unreliable)}};
    j["bootstrap"] = bootstrap_json(r.bootstrap);
    j["significance"] = r.significance ? significance_json(*r.significance) : nlohmann::ordered_json(nullptr);
    return j;
}

inline void write_predictions_csv(std::ostream& out, const PredictionSet& p) {
    out << "domain,label,probability,predicted\n";
    for (const auto& x : p) {
        out << csv_field(x.domain) << ',' << label_csv(x.truth) << ',' << format_real(x.probability) << ','
            << label_csv(x.predicted) << '\n';
    }
}

// ------------------------------------------------------------
// native evaluation and adaptation
// ------------------------------------------------------------

struct EvalOptions {
    TrainConfig train;
    std::size_t bootstrap_n = 100;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

inline EvalReport evaluate_native(const FeatureMatrix& m, const EvalOptions& opt) {
    return make_report(Condition::native, {m.key.str()}, m.key.str(), loo_validate(m, opt.train, opt.threads),
                       opt.bootstrap_n, opt.seed);
}

enum class FeatureScaling { none, quantile };

struct AdaptOptions {
    EvalOptions eval;
    FeatureScaling scaling = FeatureScaling::none;
    // Mixed/pooled LOO: drop the held-out domain only from the test dataset
    // rather than from every pooled dataset.
    bool test_language_only_removal = false;
};

namespace detail {

inline void require_two_per_class(const FeatureMatrix& m, std::span<const std::size_t> rows) {
    std::size_t rel = 0, unr = 0;
    for (auto r : rows) {
        rel += m.labels[r] == Label::reliable;
        unr += m.labels[r] == Label::unreliable;
    }
    if (rel < 2 || unr < 2) {
        throw DataError("training data has " + std::to_string(rel) + " reliable and " + std::to_string(unr) +
                        " unreliable domains; at least 2 of each are required");
    }
}

} // namespace detail

// Cross modes train once on the pooled training sets and score every labeled
// test row. Mixed/pooled modes run LOO over the test dataset's labeled rows
// with all other datasets as extra training data. Quantile scaling is applied
// to each dataset independently before pooling.
inline EvalReport adapt(std::span<const FeatureMatrix> train_sets, const FeatureMatrix& test, Condition mode,
                        const AdaptOptions& opt) {
    if (mode == Condition::native || mode == Condition::baseline) throw DataError("adapt needs an adaptation mode");
    if (train_sets.empty() && (mode == Condition::cross_language || mode == Condition::cross_topic)) {
        throw DataError("cross adaptation needs at least one training dataset");
    }
    for (const auto& t : train_sets) {
        if (mode == Condition::cross_language && t.key.topic != test.key.topic) {
            throw DataError("cross-language adaptation needs a shared topic (" + t.key.str() + " vs " +
                            test.key.str() + ")");
        }
        if (mode == Condition::cross_topic && t.key.language != test.key.language) {
            throw DataError("cross-topic adaptation needs a shared language (" + t.key.str() + " vs " +
                            test.key.str() + ")");
        }
    }
    auto scale = [&](const FeatureMatrix& m) {
        return opt.scaling == FeatureScaling::quantile ? quantile_normalize(m) : m;
    };

    std::vector<std::string> train_keys;
    for (const auto& t : train_sets) train_keys.push_back(t.key.str());

    if (mode == Condition::cross_language || mode == Condition::cross_topic) {
        std::vector<FeatureMatrix> scaled;
        for (const auto& t : train_sets) scaled.push_back(scale(t));
        const FeatureMatrix pool = stack_rows(scaled);
        const auto rows = pool.labeled_rows();
        detail::require_two_per_class(pool, rows);
        const auto model = train(pool, opt.eval.train, rows);
        const FeatureMatrix target = scale(test);
        check_compatible(model, target);
        PredictionSet preds;
        for (auto r : target.labeled_rows()) {
            const double p = predict_proba(model, target.row(r));
            preds.push_back({target.domains[r], target.labels[r], p, decide(p)});
        }
        if (preds.empty()) throw DataError("test dataset " + test.key.str() + " has no labeled domains");
        return make_report(mode, train_keys, test.key.str(), std::move(preds), opt.eval.bootstrap_n, opt.eval.seed);
    }

    // mixed / pooled: test dataset first, then the others (without the test
    // dataset if it was passed among them).
    std::vector<FeatureMatrix> parts{scale(test)};
    for (const auto& t : train_sets) {
        if (t.key == test.key) continue;
        parts.push_back(scale(t));
    }
    const FeatureMatrix pool = stack_rows(parts);
    const std::size_t test_rows = test.rows();
    std::vector<std::size_t> test_labeled;
    for (std::size_t r = 0; r < test_rows; ++r) {
        if (pool.labels[r] != Label::none) test_labeled.push_back(r);
    }
    if (test_labeled.empty()) throw DataError("test dataset " + test.key.str() + " has no labeled domains");
    const auto all_labeled = pool.labeled_rows();

    PredictionSet preds(test_labeled.size());
    parallel_for(
        test_labeled.size(),
        [&](std::size_t k) {
            const auto held = test_labeled[k];
            const auto& domain = pool.domains[held];
            std::vector<std::size_t> rows;
            rows.reserve(all_labeled.size());
            for (auto r : all_labeled) {
                if (r == held) continue;
                if (!opt.test_language_only_removal && pool.domains[r] == domain) continue;
                rows.push_back(r);
            }
            detail::require_two_per_class(pool, rows);
            const auto model = train(pool, opt.eval.train, rows);
            const double p = predict_proba(model, pool.row(held));
            preds[k] = {domain, pool.labels[held], p, decide(p)};
        },
        opt.eval.threads);
    return make_report(mode, train_keys, test.key.str(), std::move(preds), opt.eval.bootstrap_n, opt.eval.seed);
}

} // namespace wikirel
