#pragma once

#include "wikirel/common.hpp"
#include "wikirel/features.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wikirel {

struct TrainConfig {
    double learning_rate = 0.1;
    int max_depth = 1;
    int rounds = 100;
    double lambda = 1.0;  // L2 on leaf weights
    double gamma = 0.0;   // minimum split gain
    std::optional<double> positive_weight;  // default n_neg / n_pos
    double base_margin = 0.0;

    void validate() const {
        if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw DataError("learning rate must be in (0, 1]");
        if (max_depth < 1 || max_depth > 5) throw DataError("max depth must be in 1..5");
        if (rounds < 0) throw DataError("rounds must be non-negative");
        if (!(lambda >= 0.0)) throw DataError("lambda must be non-negative");
        if (!(gamma >= 0.0)) throw DataError("gamma must be non-negative");
        if (positive_weight && !(*positive_weight > 0.0)) throw DataError("positive weight must be positive");
    }

    bool operator==(const TrainConfig&) const = default;
};

// Weight for the reliable class: the fraction negatives/positives.
inline double positive_class_weight(std::size_t n_reliable, std::size_t n_unreliable) {
    if (n_reliable == 0 || n_unreliable == 0) throw DataError("training data needs both classes");
    return static_cast<double>(n_unreliable) / static_cast<double>(n_reliable);
}

struct TreeNode {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;  // rows with value <= threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf output, learning rate already applied

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    int leaf_index(std::span<const double> row) const {
        int i = 0;
        while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
            const auto& n = nodes[static_cast<std::size_t>(i)];
            i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return i;
    }

    double predict(std::span<const double> row) const {
        return nodes[static_cast<std::size_t>(leaf_index(row))].value;
    }

    int depth(int node = 0) const {
        const auto& n = nodes[static_cast<std::size_t>(node)];
        if (n.is_leaf()) return 0;
        return 1 + std::max(depth(n.left), depth(n.right));
    }

    bool operator==(const Tree&) const = default;
};

struct StumpEnsemble {
    double base_margin = 0.0;
    std::vector<Tree> trees;
    std::vector<std::string> columns;
    std::string fingerprint;
    TrainConfig config;
    double positive_weight = 1.0;
    std::size_t n_reliable = 0;
    std::size_t n_unreliable = 0;

    bool operator==(const StumpEnsemble&) const = default;
};

inline double sigmoid(double m) { return 1.0 / (1.0 + std::exp(-m)); }

// ------------------------------------------------------------
// training
// ------------------------------------------------------------

namespace detail {

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

class TreeGrower {
public:
    TreeGrower(const FeatureMatrix& m, std::span<const std::size_t> rows,
               const std::vector<std::vector<std::size_t>>& sorted, const TrainConfig& cfg)
        : m_(m), rows_(rows), sorted_(sorted), cfg_(cfg), in_node_(m.rows(), 0) {}

    Tree grow(std::span<const double> grad, std::span<const double> hess) {
        grad_ = grad;
        hess_ = hess;
        Tree t;
        std::vector<std::size_t> all(rows_.begin(), rows_.end());
        build(t, all, 0);
        return t;
    }

private:
    double leaf_value(double g, double h) const {
        const double den = h + cfg_.lambda;
        return den > 0.0 ? -cfg_.learning_rate * g / den : 0.0;
    }

    static double score(double g, double h, double lambda) {
        const double den = h + lambda;
        return den > 0.0 ? g * g / den : 0.0;
    }

    // Exact greedy search. `sorted_[f]` lists training rows by (value, row);
    // rows outside the node are skipped. Ties keep the lowest feature, then
    // the lowest threshold.
    SplitCandidate best_split(const std::vector<std::size_t>& node_rows, double g_total, double h_total) {
        for (auto r : node_rows) in_node_[r] = 1;
        SplitCandidate best;
        const double parent = score(g_total, h_total, cfg_.lambda);
        for (std::size_t f = 0; f < m_.cols(); ++f) {
            double gl = 0.0, hl = 0.0;
            const std::size_t* prev = nullptr;
            for (const auto& r : sorted_[f]) {
                if (!in_node_[r]) continue;
                if (prev && m_.at(*prev, f) < m_.at(r, f)) {
                    const double gr = g_total - gl;
                    const double hr = h_total - hl;
                    const double gain =
                        0.5 * (score(gl, hl, cfg_.lambda) + score(gr, hr, cfg_.lambda) - parent) - cfg_.gamma;
                    if (gain > best.gain) best = {gain, static_cast<int>(f), m_.at(*prev, f)};
                }
                gl += grad_[r];
                hl += hess_[r];
                prev = &r;
            }
        }
        for (auto r : node_rows) in_node_[r] = 0;
        return best;
    }

    int build(Tree& t, const std::vector<std::size_t>& node_rows, int depth) {
        double g = 0.0, h = 0.0;
        // Accumulate in ascending row order for determinism.
        for (auto r : node_rows) {
            g += grad_[r];
            h += hess_[r];
        }
        const int id = static_cast<int>(t.nodes.size());
        t.nodes.emplace_back();
        SplitCandidate split;
        if (depth < cfg_.max_depth && node_rows.size() > 1) split = best_split(node_rows, g, h);
        if (split.feature < 0) {
            t.nodes[static_cast<std::size_t>(id)].value = leaf_value(g, h);
            return id;
        }
        std::vector<std::size_t> left, right;
        for (auto r : node_rows) {
            (m_.at(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(r);
        }
        const int l = build(t, left, depth + 1);
        const int rgt = build(t, right, depth + 1);
        auto& node = t.nodes[static_cast<std::size_t>(id)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = rgt;
        return id;
    }

    const FeatureMatrix& m_;
    std::span<const std::size_t> rows_;
    const std::vector<std::vector<std::size_t>>& sorted_;
    const TrainConfig& cfg_;
    std::vector<char> in_node_;
    std::span<const double> grad_;
    std::span<const double> hess_;
};

inline double target(Label l) { return l == Label::reliable ? 1.0 : 0.0; }

} // namespace detail

// Weighted logistic loss sum over `rows` at the given margins (indexed by row).
inline double weighted_log_loss(const FeatureMatrix& m, std::span<const std::size_t> rows,
                                std::span<const double> margins, double positive_weight) {
    double loss = 0.0;
    for (auto r : rows) {
        const double y = detail::target(m.labels[r]);
        const double w = y > 0.5 ? positive_weight : 1.0;
        const double z = margins[r];
        // log(1 + e^-z) for y=1, log(1 + e^z) for y=0, computed stably
        const double s = y > 0.5 ? -z : z;
        loss += w * (std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))));
    }
    return loss;
}

// Observes the ensemble after each round (e.g. for loss tracking).
using RoundCallback = std::function<void(int round, std::span<const double> margins)>;

// Trains on the given rows of `m` (all must be labeled). Newton boosting on
// weighted logistic loss.
inline StumpEnsemble train(const FeatureMatrix& m, const TrainConfig& cfg, std::span<const std::size_t> rows,
                           const RoundCallback& on_round = {}) {
    cfg.validate();
    if (rows.empty() || m.cols() == 0) throw DataError("cannot train on an empty matrix");
    std::size_t n_pos = 0, n_neg = 0;
    for (auto r : rows) {
        if (r >= m.rows()) throw DataError("training row out of range");
        if (m.labels[r] == Label::none) throw DataError("unlabeled training row '" + m.domains[r] + "'");
        (m.labels[r] == Label::reliable ? n_pos : n_neg)++;
        for (double v : m.row(r)) {
            if (std::isnan(v)) throw DataError("NaN feature value for '" + m.domains[r] + "'");
        }
    }
    if (n_pos == 0 || n_neg == 0) throw DataError("training data needs both classes");

    StumpEnsemble e;
    e.base_margin = cfg.base_margin;
    e.columns = m.columns;
    e.fingerprint = column_fingerprint(m.columns);
    e.config = cfg;
    e.positive_weight = cfg.positive_weight.value_or(positive_class_weight(n_pos, n_neg));
    e.n_reliable = n_pos;
    e.n_unreliable = n_neg;

    std::vector<std::size_t> order(rows.begin(), rows.end());
    std::sort(order.begin(), order.end());

    std::vector<std::vector<std::size_t>> sorted(m.cols(), order);
    for (std::size_t f = 0; f < m.cols(); ++f) {
        std::stable_sort(sorted[f].begin(), sorted[f].end(),
                         [&](std::size_t a, std::size_t b) { return m.at(a, f) < m.at(b, f); });
    }

    std::vector<double> margin(m.rows(), cfg.base_margin);
    std::vector<double> grad(m.rows(), 0.0), hess(m.rows(), 0.0);
    detail::TreeGrower grower(m, order, sorted, cfg);
    for (int round = 0; round < cfg.rounds; ++round) {
        for (auto r : order) {
            const double y = detail::target(m.labels[r]);
            const double w = y > 0.5 ? e.positive_weight : 1.0;
            const double p = sigmoid(margin[r]);
            grad[r] = w * (p - y);
            hess[r] = w * p * (1.0 - p);
        }
        Tree t = grower.grow(grad, hess);
        for (auto r : order) margin[r] += t.predict(m.row(r));
        e.trees.push_back(std::move(t));
        if (on_round) on_round(round, margin);
    }
    return e;
}

inline StumpEnsemble train(const FeatureMatrix& m, const TrainConfig& cfg) {
    return train(m, cfg, m.labeled_rows());
}

// ------------------------------------------------------------
// prediction
// ------------------------------------------------------------

inline void check_compatible(const StumpEnsemble& e, const FeatureMatrix& m) {
    if (column_fingerprint(m.columns) != e.fingerprint) {
        throw DataError("feature columns do not match the model (fingerprint " + column_fingerprint(m.columns) +
                        " vs " + e.fingerprint + ")");
    }
}

inline double predict_margin(const StumpEnsemble& e, std::span<const double> row) {
    if (row.size() != e.columns.size()) throw DataError("row width does not match the model");
    double m = e.base_margin;
    for (const auto& t : e.trees) m += t.predict(row);
    return m;
}

inline double predict_proba(const StumpEnsemble& e, std::span<const double> row) {
    return sigmoid(predict_margin(e, row));
}

// ------------------------------------------------------------
// attribution
// ------------------------------------------------------------

struct Attribution {
    double base = 0.0;
    std::vector<double> contributions;  // one per column
};

namespace detail {

// Background rows reaching each node of `t`.
inline std::vector<double> node_covers(const Tree& t, const FeatureMatrix& background) {
    std::vector<double> cover(t.nodes.size(), 0.0);
    for (std::size_t r = 0; r < background.rows(); ++r) {
        auto row = background.row(r);
        int i = 0;
        while (true) {
            cover[static_cast<std::size_t>(i)] += 1.0;
            const auto& n = t.nodes[static_cast<std::size_t>(i)];
            if (n.is_leaf()) break;
            i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
        }
    }
    return cover;
}

// Path-weighted exact tree attribution (polynomial-time Shapley values for
// one tree, with node covers as the conditional distribution).
class PathAttributor {
public:
    PathAttributor(const Tree& t, const std::vector<double>& cover, std::span<const double> row, std::span<double> phi)
        : t_(t), cover_(cover), row_(row), phi_(phi) {}

    void run() {
        std::vector<Element> path(static_cast<std::size_t>(t_.depth() + 2));
        recurse(0, path, 0, 1.0, 1.0, -1);
    }

private:
    struct Element {
        int feature = -1;
        double zero = 0.0;
        double one = 0.0;
        double weight = 0.0;
    };

    static void extend(std::vector<Element>& p, std::size_t d, double zero, double one, int feature) {
        p[d] = {feature, zero, one, d == 0 ? 1.0 : 0.0};
        for (std::size_t i = d; i-- > 0;) {
            p[i + 1].weight += one * p[i].weight * static_cast<double>(i + 1) / static_cast<double>(d + 1);
            p[i].weight = zero * p[i].weight * static_cast<double>(d - i) / static_cast<double>(d + 1);
        }
    }

    static void unwind(std::vector<Element>& p, std::size_t d, std::size_t k) {
        const double one = p[k].one, zero = p[k].zero;
        double next = p[d].weight;
        for (std::size_t i = d; i-- > 0;) {
            if (one != 0.0) {
                const double tmp = p[i].weight;
                p[i].weight = next * static_cast<double>(d + 1) / (static_cast<double>(i + 1) * one);
                next = tmp - p[i].weight * zero * static_cast<double>(d - i) / static_cast<double>(d + 1);
            } else {
                p[i].weight = p[i].weight * static_cast<double>(d + 1) / (zero * static_cast<double>(d - i));
            }
        }
        for (std::size_t i = k; i < d; ++i) {
            p[i].feature = p[i + 1].feature;
            p[i].zero = p[i + 1].zero;
            p[i].one = p[i + 1].one;
        }
    }

    static double unwound_sum(const std::vector<Element>& p, std::size_t d, std::size_t k) {
        const double one = p[k].one, zero = p[k].zero;
        double next = p[d].weight, total = 0.0;
        for (std::size_t i = d; i-- > 0;) {
            if (one != 0.0) {
                const double tmp = next * static_cast<double>(d + 1) / (static_cast<double>(i + 1) * one);
                total += tmp;
                next = p[i].weight - tmp * zero * static_cast<double>(d - i) / static_cast<double>(d + 1);
            } else {
                total += p[i].weight / zero * static_cast<double>(d + 1) / static_cast<double>(d - i);
            }
        }
        return total;
    }

    void recurse(int node, std::vector<Element> path, std::size_t d, double zero, double one, int feature) {
        extend(path, d, zero, one, feature);
        const auto& n = t_.nodes[static_cast<std::size_t>(node)];
        if (n.is_leaf()) {
            for (std::size_t i = 1; i <= d; ++i) {
                const double w = unwound_sum(path, d, i);
                phi_[static_cast<std::size_t>(path[i].feature)] += w * (path[i].one - path[i].zero) * n.value;
            }
            return;
        }
        const bool go_left = row_[static_cast<std::size_t>(n.feature)] <= n.threshold;
        const int hot = go_left ? n.left : n.right;
        const int cold = go_left ? n.right : n.left;
        double incoming_zero = 1.0, incoming_one = 1.0;
        for (std::size_t k = 1; k <= d; ++k) {
            if (path[k].feature == n.feature) {
                incoming_zero = path[k].zero;
                incoming_one = path[k].one;
                unwind(path, d, k);
                --d;
                break;
            }
        }
        const double c = cover_[static_cast<std::size_t>(node)];
        const double hot_frac = c > 0.0 ? cover_[static_cast<std::size_t>(hot)] / c : 0.0;
        const double cold_frac = c > 0.0 ? cover_[static_cast<std::size_t>(cold)] / c : 0.0;
        if (incoming_zero * hot_frac != 0.0 || incoming_one != 0.0) {
            recurse(hot, path, d + 1, incoming_zero * hot_frac, incoming_one, n.feature);
        }
        if (incoming_zero * cold_frac != 0.0) {
            recurse(cold, path, d + 1, incoming_zero * cold_frac, 0.0, n.feature);
        }
    }

    const Tree& t_;
    const std::vector<double>& cover_;
    std::span<const double> row_;
    std::span<double> phi_;
};

// Mean leaf output over the background distribution.
inline double expected_value(const Tree& t, const std::vector<double>& cover) {
    double total = 0.0;
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        if (t.nodes[i].is_leaf()) total += cover[i] * t.nodes[i].value;
    }
    return cover[0] > 0.0 ? total / cover[0] : 0.0;
}

} // namespace detail

// Additive per-feature attribution of the raw margin of `row`, relative to the
// background distribution. Stumps use the closed form (leaf(row) minus the
// background mean leaf goes to the split feature); deeper trees use the
// path-weighted recursion with background covers.
inline Attribution attribute(const StumpEnsemble& e, std::span<const double> row, const FeatureMatrix& background) {
    if (background.rows() == 0) throw DataError("attribution needs a non-empty background");
    check_compatible(e, background);
    if (row.size() != e.columns.size()) throw DataError("row width does not match the model");
    Attribution a;
    a.base = e.base_margin;
    a.contributions.assign(e.columns.size(), 0.0);
    for (const auto& t : e.trees) {
        const auto& root = t.nodes.front();
        if (root.is_leaf()) {
            a.base += root.value;
            continue;
        }
        const bool stump = t.nodes[static_cast<std::size_t>(root.left)].is_leaf() &&
                           t.nodes[static_cast<std::size_t>(root.right)].is_leaf();
        if (stump) {
            const double left = t.nodes[static_cast<std::size_t>(root.left)].value;
            const double right = t.nodes[static_cast<std::size_t>(root.right)].value;
            std::size_t n_left = 0;
            for (std::size_t r = 0; r < background.rows(); ++r) {
                n_left += background.at(r, static_cast<std::size_t>(root.feature)) <= root.threshold;
            }
            const double mean = (static_cast<double>(n_left) * left +
                                 static_cast<double>(background.rows() - n_left) * right) /
                                static_cast<double>(background.rows());
            const double own = row[static_cast<std::size_t>(root.feature)] <= root.threshold ? left : right;
            a.base += mean;
            a.contributions[static_cast<std::size_t>(root.feature)] += own - mean;
            continue;
        }
        const auto cover = detail::node_covers(t, background);
        a.base += detail::expected_value(t, cover);
        detail::PathAttributor(t, cover, row, a.contributions).run();
    }
    return a;
}

// ------------------------------------------------------------
// serialization
// ------------------------------------------------------------

inline constexpr std::string_view kEnsembleSchema = "wikirel.ensemble/1";

inline nlohmann::ordered_json config_to_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["learning_rate"] = c.learning_rate;
    j["max_depth"] = c.max_depth;
    j["rounds"] = c.rounds;
    j["lambda"] = c.lambda;
    j["gamma"] = c.gamma;
    j["positive_weight"] = c.positive_weight ? nlohmann::ordered_json(*c.positive_weight) : nlohmann::ordered_json(nullptr);
    j["base_margin"] = c.base_margin;
    return j;
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.max_depth = j.at("max_depth").get<int>();
    c.rounds = j.at("rounds").get<int>();
    c.lambda = j.at("lambda").get<double>();
    c.gamma = j.at("gamma").get<double>();
    if (!j.at("positive_weight").is_null()) c.positive_weight = j.at("positive_weight").get<double>();
    c.base_margin = j.at("base_margin").get<double>();
    return c;
}

inline std::string serialize_ensemble(const StumpEnsemble& e) {
    nlohmann::ordered_json j;
    j["schema"] = kEnsembleSchema;
    j["config"] = config_to_json(e.config);
    j["fingerprint"] = e.fingerprint;
    j["columns"] = e.columns;
    j["base_margin"] = e.base_margin;
    j["positive_weight"] = e.positive_weight;
    j["n_reliable"] = e.n_reliable;
    j["n_unreliable"] = e.n_unreliable;
    auto& trees = j["trees"] = nlohmann::ordered_json::array();
    for (const auto& t : e.trees) {
        auto nodes = nlohmann::ordered_json::array();
        for (const auto& n : t.nodes) {
            nlohmann::ordered_json o;
            if (n.is_leaf()) {
                o["leaf"] = n.value;
            } else {
                o["feature"] = n.feature;
                o["threshold"] = n.threshold;
                o["left"] = n.left;
                o["right"] = n.right;
            }
            nodes.push_back(std::move(o));
        }
        trees.push_back(std::move(nodes));
    }
    return j.dump(1) + "\n";
}

inline StumpEnsemble deserialize_ensemble(const std::string& text) {
    StumpEnsemble e;
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("schema").get<std::string>() != kEnsembleSchema) {
            throw DataError("unsupported ensemble schema '" + j.at("schema").get<std::string>() + "'");
        }
        e.config = config_from_json(j.at("config"));
        e.fingerprint = j.at("fingerprint").get<std::string>();
        e.columns = j.at("columns").get<std::vector<std::string>>();
        e.base_margin = j.at("base_margin").get<double>();
        e.positive_weight = j.at("positive_weight").get<double>();
        e.n_reliable = j.at("n_reliable").get<std::size_t>();
        e.n_unreliable = j.at("n_unreliable").get<std::size_t>();
        if (column_fingerprint(e.columns) != e.fingerprint) throw DataError("ensemble fingerprint does not match its columns");
        for (const auto& jt : j.at("trees")) {
            Tree t;
            for (const auto& jn : jt) {
                TreeNode n;
                if (jn.contains("leaf")) {
                    n.value = jn.at("leaf").get<double>();
                } else {
                    n.feature = jn.at("feature").get<int>();
                    n.threshold = jn.at("threshold").get<double>();
                    n.left = jn.at("left").get<int>();
                    n.right = jn.at("right").get<int>();
                }
                t.nodes.push_back(n);
            }
            const auto n_nodes = static_cast<int>(t.nodes.size());
            if (n_nodes == 0) throw DataError("empty tree");
            for (const auto& n : t.nodes) {
                if (n.is_leaf()) continue;
                if (n.feature >= static_cast<int>(e.columns.size()) || n.left <= 0 || n.right <= 0 ||
                    n.left >= n_nodes || n.right >= n_nodes) {
                    throw DataError("malformed tree node");
                }
            }
            e.trees.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw DataError(std::string("malformed ensemble document: ") + ex.what());
    }
    return e;
}

} // namespace wikirel
