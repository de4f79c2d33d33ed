// wikirel command-line driver.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include "wikirel/fetch.hpp"
#include "wikirel/wikirel.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#ifndef WIKIREL_DATA_DIR
#define WIKIREL_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace wikirel;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path, "cannot open input");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char b[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(b, sizeof b, "%02x", md[i]);
        hex += b;
    }
    return hex;
}

// Writes next to the target and renames, so readers never see partial files.
void write_atomic(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError(path.string(), "cannot write output");
        out << content;
        if (!out) throw DataError(path.string(), "write failed");
    }
    fs::rename(tmp, path);
}

std::string json_text(const ordered_json& j) { return j.dump(1) + "\n"; }

void merge_into(ordered_json& dst, const ordered_json& src) {
    for (const auto& [k, v] : src.items()) dst[k] = v;
}

// ------------------------------------------------------------
// shared options
// ------------------------------------------------------------

struct Globals {
    std::string out = ".";
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string suffix_list = std::string(WIKIREL_DATA_DIR) + "/public_suffix_list.dat";
    std::string redirects;
    bool psl_private = false;
};

struct Run {
    CLI::App* app = nullptr;
    CLI::App* command = nullptr;
    std::string command_name;
    Globals g;
    std::set<const CLI::Option*> path_options;
    std::set<const CLI::Option*> hidden_from_snapshot;
    std::vector<std::string> inputs;  // files actually read

    void input(const std::string& path) {
        if (std::find(inputs.begin(), inputs.end(), path) == inputs.end()) inputs.push_back(path);
    }

    SourceExtractor extractor() {
        input(g.suffix_list);
        auto psl = PublicSuffixList::from_file(
            g.suffix_list, g.psl_private ? PublicSuffixList::Sections::all : PublicSuffixList::Sections::icann);
        RedirectMap redirects;
        if (!g.redirects.empty()) {
            input(g.redirects);
            redirects = RedirectMap::from_file(g.redirects);
        }
        return SourceExtractor(std::move(psl), std::move(redirects));
    }

    PublicSuffixList suffixes() {
        input(g.suffix_list);
        return PublicSuffixList::from_file(
            g.suffix_list, g.psl_private ? PublicSuffixList::Sections::all : PublicSuffixList::Sections::icann);
    }

    ordered_json snapshot_of(const CLI::App* a) const {
        ordered_json j = ordered_json::object();
        for (const CLI::Option* o : a->get_options()) {
            if (o->get_lnames().empty() || hidden_from_snapshot.count(o)) continue;
            const std::string name = o->get_lnames().front();
            if (name == "help") continue;
            if (o->get_expected_max() == 0) {  // flag
                j[name] = o->count() > 0;
                continue;
            }
            const bool is_path = path_options.count(o) > 0;
            auto clean = [&](std::string v) { return is_path && !v.empty() ? fs::path(v).filename().string() : v; };
            if (o->count() > 0) {
                const auto& res = o->results();
                if (o->get_expected_max() > 1) {
                    ordered_json arr = ordered_json::array();
                    for (const auto& r : res) arr.push_back(clean(r));
                    j[name] = arr;
                } else {
                    j[name] = clean(res.empty() ? std::string() : res.back());
                }
            } else if (o->get_expected_max() > 1) {
                j[name] = ordered_json::array();
            } else {
                j[name] = clean(o->get_default_str());
            }
        }
        return j;
    }

    // Version, config snapshot (input paths reduced to basenames), input
    // digests and the master seed.
    ordered_json header() const {
        ordered_json h;
        h["tool"] = "wikirel";
        h["version"] = std::string(kVersion);
        h["command"] = command_name;
        h["seed"] = g.seed;
        ordered_json cfg = snapshot_of(app);
        for (const CLI::App* a = command; a;) {
            merge_into(cfg, snapshot_of(a));
            const auto subs = a->get_subcommands();
            a = subs.empty() ? nullptr : subs.front();
        }
        h["config"] = cfg;
        ordered_json ins = ordered_json::array();
        for (const auto& p : inputs) {
            ins.push_back({{"file", fs::path(p).filename().string()}, {"sha256", sha256_file(p)}});
        }
        h["inputs"] = ins;
        return h;
    }

    fs::path out(const std::string& name) const { return fs::path(g.out) / name; }

    // Config-file form of the effective options: globals, then one section
    // for the selected command. Reading it back with --config reproduces the
    // run.
    std::string config_text() const {
        std::ostringstream out;
        auto emit = [&](const CLI::App* a) {
            for (const CLI::Option* o : a->get_options()) {
                if (o->get_lnames().empty()) continue;
                const std::string name = o->get_lnames().front();
                if (name == "help" || name == "version" || name == "config" || name == "dump-config") continue;
                if (o->get_expected_max() == 0) {
                    if (o->count() > 0) out << name << "=true\n";
                    continue;
                }
                if (o->count() > 0 && o->get_expected_max() > 1) {
                    out << name << "=" << nlohmann::json(o->results()).dump() << "\n";
                } else if (o->count() > 0) {
                    out << name << "=" << nlohmann::json(o->results().back()).dump() << "\n";
                } else {
                    const std::string d = o->get_default_str();
                    if (d.empty() || d == "{}") continue;
                    out << name << "=" << (d.front() == '[' ? d : nlohmann::json(d).dump()) << "\n";
                }
            }
        };
        emit(app);
        std::string section;
        for (const CLI::App* a = command; a;) {
            section += (section.empty() ? "" : ".") + a->get_name();
            out << "\n[" << section << "]\n";
            emit(a);
            const auto subs = a->get_subcommands();
            a = subs.empty() ? nullptr : subs.front();
        }
        return out.str();
    }
};

CLI::Option* add_path(Run& run, CLI::App* a, const std::string& flags, std::string& var, const std::string& desc) {
    auto* o = a->add_option(flags, var, desc);
    run.path_options.insert(o);
    return o;
}

CLI::Option* add_paths(Run& run, CLI::App* a, const std::string& flags, std::vector<std::string>& var,
                       const std::string& desc) {
    auto* o = a->add_option(flags, var, desc);
    run.path_options.insert(o);
    return o;
}

void add_train_options(CLI::App* a, TrainConfig& cfg) {
    a->add_option("--learning-rate", cfg.learning_rate, "Shrinkage applied to every tree")
        ->check(CLI::Range(0.0, 1.0));
    a->add_option("--max-depth", cfg.max_depth, "Tree depth (1 = stumps)")->check(CLI::Range(1, 5));
    a->add_option("--rounds", cfg.rounds, "Boosting rounds")->check(CLI::NonNegativeNumber);
    a->add_option("--lambda", cfg.lambda, "L2 penalty on leaf values")->check(CLI::NonNegativeNumber);
    a->add_option("--gamma", cfg.gamma, "Minimum split gain")->check(CLI::NonNegativeNumber);
    a->add_option("--positive-weight", cfg.positive_weight,
                  "Weight of the reliable class (default: unreliable count / reliable count)")
        ->check(CLI::PositiveNumber);
}

const std::vector<std::string> kLabelSources{"perennial", "mbfc", "custom"};

struct LabelOptions {
    std::string path;
    std::string source = "perennial";
};

void add_label_options(Run& run, CLI::App* a, LabelOptions& l, bool required) {
    auto* o = add_path(run, a, "--labels", l.path, "Label CSV (domain,category) with a '# snapshot:' comment");
    if (required) o->required();
    a->add_option("--label-source", l.source, "Category vocabulary of the label file")
        ->check(CLI::IsMember(kLabelSources));
}

std::optional<LabelSet> load_label_file(Run& run, const LabelOptions& l) {
    if (l.path.empty()) return std::nullopt;
    run.input(l.path);
    return load_labels(l.path, parse_label_source(l.source), run.suffixes());
}

FeatureMatrix load_matrix(Run& run, const std::string& path) {
    run.input(path);
    return read_matrix_csv(path);
}

// One dataset per key; several corpus files for the same key are combined.
std::vector<Dataset> load_corpora(Run& run, const std::vector<std::string>& paths) {
    std::map<DatasetKey, std::vector<Dataset>> parts;
    for (const auto& p : paths) {
        run.input(p);
        for (auto& d : load_corpus(p)) parts[d.key].push_back(std::move(d));
    }
    std::vector<Dataset> out;
    for (auto& [key, ds] : parts) out.push_back(ds.size() == 1 ? std::move(ds.front()) : combine_datasets(ds, key));
    return out;
}

std::string cell_name(const DatasetKey& k) { return k.topic + "_" + k.language; }

// ------------------------------------------------------------
// extract
// ------------------------------------------------------------

struct ExtractArgs {
    std::vector<std::string> corpus;
};

void cmd_extract(Run& run, const ExtractArgs& a) {
    const auto datasets = load_corpora(run, a.corpus);
    const auto ex = run.extractor();

    std::ostringstream edits, timelines;
    edits << "topic,language,page_id,domain,action,revision,timestamp,user,registered,first_add,last_remove\n";
    timelines << "topic,language,page_id,domain,intervals,adds,removes,permanence_days,permanence_revisions,"
                 "age_days,age_revisions,self_permanence_days,self_permanence_revisions,currently_present\n";
    ordered_json summary = run.header();
    summary["suffix_list_version"] = ex.suffixes().version();
    ordered_json ds_json = ordered_json::array();
    for (const auto& d : datasets) {
        ExtractStats stats;
        const auto pd = process_dataset(d, ex, &stats);
        std::size_t n_edits = 0, n_timelines = 0, n_revisions = 0, n_merged = 0;
        std::set<std::string> domains;
        for (const auto& art : pd.articles) {
            n_merged += art.edits.merged.size();
            for (const auto& e : art.edits.edits) {
                edits << csv_field(d.key.topic) << ',' << csv_field(d.key.language) << ',' << e.page_id << ','
                      << csv_field(e.domain) << ',' << to_string(e.action) << ',' << e.revision << ','
                      << format_instant(e.timestamp) << ',' << csv_field(e.user) << ','
                      << (e.registered ? 1 : 0) << ',' << (e.first_add ? 1 : 0) << ','
                      << (e.last_remove ? 1 : 0) << '\n';
                ++n_edits;
            }
            for (const auto& [domain, t] : art.timelines) {
                timelines << csv_field(d.key.topic) << ',' << csv_field(d.key.language) << ',' << t.page_id << ','
                          << csv_field(domain) << ',' << t.intervals.size() << ',' << t.adds.size() << ','
                          << t.removes.size() << ',' << format_real(t.permanence_days()) << ','
                          << t.permanence_revisions << ',' << format_real(t.age_days()) << ',' << t.age_revisions
                          << ',' << format_real(t.self_permanence_days()) << ','
                          << format_real(t.self_permanence_revisions()) << ',' << (t.currently_present ? 1 : 0)
                          << '\n';
                domains.insert(domain);
                ++n_timelines;
            }
        }
        for (const auto& art : d.articles) n_revisions += art.revisions.size();
        const auto totals = dataset_age_totals(pd);
        ds_json.push_back({{"topic", d.key.topic},
                           {"language", d.key.language},
                           {"articles", d.articles.size()},
                           {"revisions", n_revisions},
                           {"merged_revisions", n_merged},
                           {"urls_seen", stats.urls_seen},
                           {"urls_rejected", stats.urls_rejected},
                           {"domains", domains.size()},
                           {"source_edits", n_edits},
                           {"timelines", n_timelines},
                           {"article_days", totals.article_days},
                           {"article_revisions", totals.article_revisions},
                           {"unique_users", totals.unique_users}});
    }
    summary["datasets"] = ds_json;
    write_atomic(run.out("source_edits.csv"), edits.str());
    write_atomic(run.out("timelines.csv"), timelines.str());
    write_atomic(run.out("extract_summary.json"), json_text(summary));
}

// ------------------------------------------------------------
// features
// ------------------------------------------------------------

struct FeaturesArgs {
    std::vector<std::string> corpus;
    LabelOptions labels;
};

void cmd_features(Run& run, const FeaturesArgs& a) {
    const auto datasets = load_corpora(run, a.corpus);
    const auto ex = run.extractor();
    const auto labels = load_label_file(run, a.labels);

    std::vector<FeatureMatrix> matrices(datasets.size());
    parallel_for(
        datasets.size(), [&](std::size_t i) { matrices[i] = compute_features(datasets[i], ex); }, run.g.threads);

    ordered_json summary = run.header();
    summary["suffix_list_version"] = ex.suffixes().version();
    if (labels) {
        summary["labels"] = {{"source", std::string(to_string(labels->source))},
                             {"snapshot", labels->snapshot_date},
                             {"binary", labels->binary.size()},
                             {"excluded", labels->excluded.size()}};
    }
    summary["column_fingerprint"] = column_fingerprint(catalog_ids());
    ordered_json cells = ordered_json::array();
    for (auto& m : matrices) {
        if (labels) apply_labels(m, *labels);
        const std::string file = "features_" + cell_name(m.key) + ".csv";
        std::ostringstream csv;
        write_matrix_csv(csv, m);
        write_atomic(run.out(file), csv.str());
        const auto counts = class_counts(m);
        cells.push_back({{"topic", m.key.topic},
                         {"language", m.key.language},
                         {"file", file},
                         {"domains", m.rows()},
                         {"reliable", counts.reliable},
                         {"unreliable", counts.unreliable}});
    }
    summary["datasets"] = cells;
    write_atomic(run.out("features_summary.json"), json_text(summary));
}

// ------------------------------------------------------------
// train / score / explain
// ------------------------------------------------------------

struct TrainArgs {
    std::string matrix;
    LabelOptions labels;
    TrainConfig cfg;
};

FeatureMatrix labeled_matrix(Run& run, const std::string& path, const LabelOptions& l) {
    auto m = load_matrix(run, path);
    if (auto labels = load_label_file(run, l)) apply_labels(m, *labels);
    return m;
}

void cmd_train(Run& run, const TrainArgs& a) {
    const auto m = labeled_matrix(run, a.matrix, a.labels);
    const auto rows = m.labeled_rows();
    std::vector<double> losses;
    const double pw =
        a.cfg.positive_weight.value_or(positive_class_weight(m.count(Label::reliable), m.count(Label::unreliable)));
    const auto e = train(m, a.cfg, rows, [&](int, std::span<const double> margins) {
        losses.push_back(weighted_log_loss(m, rows, margins, pw));
    });
    ordered_json report = run.header();
    report["dataset"] = m.key.str();
    report["reliable"] = e.n_reliable;
    report["unreliable"] = e.n_unreliable;
    report["positive_weight"] = e.positive_weight;
    report["training_loss"] = losses;
    write_atomic(run.out("model.json"), serialize_ensemble(e));
    write_atomic(run.out("train_report.json"), json_text(report));
}

StumpEnsemble load_model(Run& run, const std::string& path) {
    run.input(path);
    std::ifstream in(path);
    if (!in) throw DataError(path, "cannot open model");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return deserialize_ensemble(ss.str());
    } catch (const DataError& e) {
        throw DataError(path, e.what());
    }
}

struct ScoreArgs {
    std::string model;
    std::string matrix;
};

void cmd_score(Run& run, const ScoreArgs& a) {
    const auto e = load_model(run, a.model);
    const auto m = load_matrix(run, a.matrix);
    check_compatible(e, m);
    std::ostringstream csv;
    csv << "domain,label,margin,probability,predicted\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double margin = predict_margin(e, m.row(r));
        const double p = sigmoid(margin);
        csv << csv_field(m.domains[r]) << ',' << label_csv(m.labels[r]) << ',' << format_real(margin) << ','
            << format_real(p) << ',' << label_csv(decide(p)) << '\n';
    }
    ordered_json report = run.header();
    report["dataset"] = m.key.str();
    report["domains"] = m.rows();
    write_atomic(run.out("scores.csv"), csv.str());
    write_atomic(run.out("score_report.json"), json_text(report));
}

struct ExplainArgs {
    std::string model;
    std::string matrix;
    std::string background;
    std::size_t top_k = 10;
};

double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(rx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

void cmd_explain(Run& run, const ExplainArgs& a) {
    const auto e = load_model(run, a.model);
    const auto m = load_matrix(run, a.matrix);
    check_compatible(e, m);
    const FeatureMatrix bg = a.background.empty() ? m : load_matrix(run, a.background);
    check_compatible(e, bg);

    const std::size_t n = m.rows(), c = m.cols();
    std::vector<Attribution> attr(n);
    parallel_for(n, [&](std::size_t r) { attr[r] = attribute(e, m.row(r), bg); }, run.g.threads);

    std::ostringstream csv;
    csv << "domain,label,base";
    for (const auto& id : m.columns) csv << ',' << id;
    csv << ",margin\n";
    for (std::size_t r = 0; r < n; ++r) {
        csv << csv_field(m.domains[r]) << ',' << label_csv(m.labels[r]) << ',' << format_real(attr[r].base);
        for (double v : attr[r].contributions) csv << ',' << format_real(v);
        csv << ',' << format_real(predict_margin(e, m.row(r))) << '\n';
    }

    // Summary plot data: per feature, mean |attribution|, mean attribution by
    // class, and the rank correlation between feature value and attribution.
    struct Row {
        std::size_t col;
        double mean_abs, mean_rel, mean_unr, corr;
    };
    std::vector<Row> rows;
    for (std::size_t f = 0; f < c; ++f) {
        std::vector<double> phi(n), val(n);
        double abs_sum = 0, rel = 0, unr = 0;
        std::size_t n_rel = 0, n_unr = 0;
        for (std::size_t r = 0; r < n; ++r) {
            phi[r] = attr[r].contributions[f];
            val[r] = m.at(r, f);
            abs_sum += std::abs(phi[r]);
            if (m.labels[r] == Label::reliable) rel += phi[r], ++n_rel;
            if (m.labels[r] == Label::unreliable) unr += phi[r], ++n_unr;
        }
        rows.push_back({f, n ? abs_sum / static_cast<double>(n) : 0.0, n_rel ? rel / static_cast<double>(n_rel) : 0.0,
                        n_unr ? unr / static_cast<double>(n_unr) : 0.0, n ? spearman(val, phi) : 0.0});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.mean_abs > y.mean_abs; });
    ordered_json summary = run.header();
    summary["dataset"] = m.key.str();
    summary["domains"] = n;
    summary["background_rows"] = bg.rows();
    ordered_json top = ordered_json::array();
    for (std::size_t i = 0; i < std::min(a.top_k, rows.size()); ++i) {
        const auto& r = rows[i];
        top.push_back({{"feature", m.columns[r.col]},
                       {"mean_abs_attribution", r.mean_abs},
                       {"mean_attribution_reliable", r.mean_rel},
                       {"mean_attribution_unreliable", r.mean_unr},
                       {"value_attribution_spearman", r.corr}});
    }
    summary["top_features"] = top;
    write_atomic(run.out("attributions.csv"), csv.str());
    write_atomic(run.out("explain_summary.json"), json_text(summary));
}

// ------------------------------------------------------------
// evaluate / adapt / baseline
// ------------------------------------------------------------

struct EvalArgs {
    std::vector<std::string> matrices;
    LabelOptions labels;
    TrainConfig cfg;
    std::size_t bootstrap = 100;
    bool compare_baseline = false;
    bool prior_matched = false;
    double alpha = 0.05;
    std::size_t comparisons = 1;
};

std::string predictions_text(const PredictionSet& p) {
    std::ostringstream csv;
    write_predictions_csv(csv, p);
    return csv.str();
}

void cmd_evaluate(Run& run, const EvalArgs& a) {
    std::optional<LabelSet> labels = load_label_file(run, a.labels);
    std::vector<FeatureMatrix> ms;
    for (const auto& p : a.matrices) {
        ms.push_back(load_matrix(run, p));
        if (labels) apply_labels(ms.back(), *labels);
    }
    const ordered_json head = run.header();
    const bool cells = ms.size() > 1;
    // Cells run in parallel; each fold loop then runs serially.
    parallel_for(
        ms.size(),
        [&](std::size_t i) {
            const auto& m = ms[i];
            EvalOptions opt{a.cfg, a.bootstrap, run.g.seed, cells ? 1u : run.g.threads};
            EvalReport r;
            try {
                r = evaluate_native(m, opt);
            } catch (const DataError& e) {
                throw DataError(m.key.str(), e.what());
            }
            ordered_json j = head;
            std::optional<BootstrapSummary> base;
            if (a.compare_baseline) {
                base = random_baseline(labeled_domains(m), a.bootstrap, derive_seed(run.g.seed, 1), a.prior_matched);
                r.significance = compare_samples(r.bootstrap.f1_samples, base->f1_samples, a.comparisons, a.alpha);
            }
            merge_into(j, report_json(r));
            if (base) j["baseline"] = bootstrap_json(*base);
            const fs::path dir = cells ? fs::path(run.g.out) / cell_name(m.key) : fs::path(run.g.out);
            write_atomic(dir / "eval_report.json", json_text(j));
            write_atomic(dir / "predictions.csv", predictions_text(r.predictions));
        },
        cells ? run.g.threads : 1u);
}

struct AdaptArgs {
    std::vector<std::string> train;
    std::string test;
    LabelOptions labels;
    TrainConfig cfg;
    std::string mode;
    std::string scaling = "none";
    bool test_only_removal = false;
    std::size_t bootstrap = 100;
    bool compare_native = false;
    double alpha = 0.05;
    std::size_t comparisons = 1;
};

void cmd_adapt(Run& run, const AdaptArgs& a) {
    std::optional<LabelSet> labels = load_label_file(run, a.labels);
    std::vector<FeatureMatrix> train_sets;
    for (const auto& p : a.train) {
        train_sets.push_back(load_matrix(run, p));
        if (labels) apply_labels(train_sets.back(), *labels);
    }
    FeatureMatrix test = load_matrix(run, a.test);
    if (labels) apply_labels(test, *labels);

    AdaptOptions opt;
    opt.eval = {a.cfg, a.bootstrap, run.g.seed, run.g.threads};
    opt.scaling = a.scaling == "quantile" ? FeatureScaling::quantile : FeatureScaling::none;
    opt.test_language_only_removal = a.test_only_removal;
    auto r = adapt(train_sets, test, parse_condition(a.mode), opt);

    ordered_json j = run.header();
    std::optional<EvalReport> native;
    if (a.compare_native) {
        native = evaluate_native(test, opt.eval);
        r.significance = compare_samples(r.bootstrap.f1_samples, native->bootstrap.f1_samples, a.comparisons, a.alpha);
    }
    j["scaling"] = a.scaling;
    merge_into(j, report_json(r));
    if (native) j["native"] = report_json(*native);
    write_atomic(run.out("adapt_report.json"), json_text(j));
    write_atomic(run.out("predictions.csv"), predictions_text(r.predictions));
}

struct BaselineArgs {
    std::string matrix;
    LabelOptions labels;
    std::size_t bootstrap = 100;
    bool prior_matched = false;
};

void cmd_baseline(Run& run, const BaselineArgs& a) {
    const auto m = labeled_matrix(run, a.matrix, a.labels);
    const auto labeled = labeled_domains(m);
    if (labeled.empty()) throw DataError(a.matrix, "no labeled domains");
    auto preds = random_predictions(labeled, run.g.seed, a.prior_matched);
    auto r = make_report(Condition::baseline, {}, m.key.str(), std::move(preds), a.bootstrap, run.g.seed);
    ordered_json j = run.header();
    j["prior_matched"] = a.prior_matched;
    merge_into(j, report_json(r));
    write_atomic(run.out("baseline_report.json"), json_text(j));
    write_atomic(run.out("predictions.csv"), predictions_text(r.predictions));
}

// ------------------------------------------------------------
// experiment scaling
// ------------------------------------------------------------

struct ScalingArgs {
    std::vector<std::string> corpus;
    std::string dataset;
    LabelOptions labels;
    TrainConfig cfg;
    std::vector<std::size_t> grid;
    std::vector<double> exponents{3.0, 6.75, 0.25};
    std::size_t repeats = 10;
    std::string cutoff;
    std::size_t min_per_class = 2;
};

// An end date (inclusive) becomes the following midnight.
Instant cutoff_instant(const std::string& date) { return parse_date(date) + std::chrono::days(1); }

void cmd_scaling(Run& run, const ScalingArgs& a) {
    const auto datasets = load_corpora(run, a.corpus);
    const auto ex = run.extractor();
    const auto labels = load_label_file(run, a.labels);
    const Dataset* d = nullptr;
    for (const auto& x : datasets) {
        if (a.dataset.empty() ? datasets.size() == 1 : x.key.str() == a.dataset) d = &x;
    }
    if (!d) {
        throw UsageError(a.dataset.empty() ? "corpus holds several datasets; choose one with --dataset topic/language"
                                           : "dataset '" + a.dataset + "' not found in the corpus");
    }
    ScalingOptions opt;
    opt.grid = a.grid.empty() ? log_regular_grid(a.exponents[0], a.exponents[1], a.exponents[2]) : a.grid;
    std::sort(opt.grid.begin(), opt.grid.end());
    opt.repeats = a.repeats;
    if (!a.cutoff.empty()) opt.cutoff = cutoff_instant(a.cutoff);
    opt.train = a.cfg;
    opt.min_per_class = a.min_per_class;
    opt.seed = run.g.seed;
    opt.threads = run.g.threads;
    const auto curve = scaling_experiment(*d, ex, *labels, opt);

    ordered_json j = run.header();
    j["dataset"] = d->key.str();
    j["cutoff"] = opt.cutoff ? ordered_json(format_instant(*opt.cutoff)) : ordered_json(nullptr);
    j["grid"] = opt.grid;
    merge_into(j, curve_json(curve));
    std::ostringstream csv;
    write_curve_csv(csv, curve);
    write_atomic(run.out("scaling.csv"), csv.str());
    write_atomic(run.out("scaling.json"), json_text(j));
}

// ------------------------------------------------------------
// fetch
// ------------------------------------------------------------

struct FetchArgs {
    FetchOptions opt;
    std::string titles_file;
    int spacing_ms = 100;
};

void cmd_fetch(Run& run, FetchArgs a) {
    (void)run;
    if (!a.titles_file.empty()) {
        std::ifstream in(a.titles_file);
        if (!in) throw DataError(a.titles_file, "cannot open titles file");
        std::string line;
        while (std::getline(in, line)) {
            auto t = trim(line);
            if (!t.empty() && t.front() != '#') a.opt.titles.emplace_back(t);
        }
    }
    if (a.opt.titles.empty()) throw UsageError("fetch needs --title or --titles-file");
    a.opt.spacing = std::chrono::milliseconds(a.spacing_ms);
    const auto r = fetch_histories(a.opt);
    std::cout << "requests " << r.requests << ", revisions " << r.revisions << ", completed titles "
              << r.completed_titles << "/" << a.opt.titles.size() << (r.interrupted ? " (interrupted)" : "") << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"wikirel: source reliability signals from wiki edit histories"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "Read options from a TOML/INI file (command-line flags take precedence)");
    auto* dump = app.add_flag("--dump-config", "Print the effective configuration in config-file form and exit");

    Run run;
    run.app = &app;
    run.hidden_from_snapshot.insert(app.get_config_ptr());
    run.hidden_from_snapshot.insert(dump);
    run.hidden_from_snapshot.insert(app.get_help_ptr());
    run.hidden_from_snapshot.insert(app.get_version_ptr());
    run.hidden_from_snapshot.insert(app.add_option("-o,--out", run.g.out, "Output directory"));
    app.add_option("--seed", run.g.seed, "Master seed; all randomness derives from it");
    run.hidden_from_snapshot.insert(
        app.add_option("--threads", run.g.threads, "Worker threads (0 = hardware concurrency)"));
    add_path(run, &app, "--suffix-list", run.g.suffix_list, "Public suffix list snapshot");
    add_path(run, &app, "--redirects", run.g.redirects, "Redirect map TSV (from<TAB>to URL prefixes)");
    app.add_flag("--psl-private", run.g.psl_private, "Also apply private-section public suffix rules");

    ExtractArgs extract;
    auto* c_extract = app.add_subcommand("extract", "Corpus -> source edits, timelines and a summary");
    add_paths(run, c_extract, "--corpus", extract.corpus, "Corpus JSONL file(s)")->required();

    FeaturesArgs features;
    auto* c_features = app.add_subcommand("features", "Corpus -> one feature matrix CSV per dataset");
    add_paths(run, c_features, "--corpus", features.corpus, "Corpus JSONL file(s)")->required();
    add_label_options(run, c_features, features.labels, false);

    TrainArgs trainargs;
    auto* c_train = app.add_subcommand("train", "Feature matrix -> model.json");
    add_path(run, c_train, "--matrix", trainargs.matrix, "Labeled feature matrix CSV")->required();
    add_label_options(run, c_train, trainargs.labels, false);
    add_train_options(c_train, trainargs.cfg);

    ScoreArgs score;
    auto* c_score = app.add_subcommand("score", "Model + matrix -> per-domain probabilities");
    add_path(run, c_score, "--model", score.model, "Model file from 'train'")->required();
    add_path(run, c_score, "--matrix", score.matrix, "Feature matrix CSV")->required();

    ExplainArgs explain;
    auto* c_explain = app.add_subcommand("explain", "Model + matrix -> per-feature attributions");
    add_path(run, c_explain, "--model", explain.model, "Model file from 'train'")->required();
    add_path(run, c_explain, "--matrix", explain.matrix, "Feature matrix CSV to explain")->required();
    add_path(run, c_explain, "--background", explain.background,
             "Background matrix for expected values (default: the explained matrix)");
    c_explain->add_option("--top-k", explain.top_k, "Features listed in the summary")->check(CLI::PositiveNumber);

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("evaluate", "Leave-one-out evaluation with bootstrap statistics");
    add_paths(run, c_eval, "--matrix", eval.matrices, "Labeled feature matrix CSV(s); several run as cells")
        ->required();
    add_label_options(run, c_eval, eval.labels, false);
    add_train_options(c_eval, eval.cfg);
    c_eval->add_option("--bootstrap", eval.bootstrap, "Bootstrap resamples")->check(CLI::PositiveNumber);
    c_eval->add_flag("--compare-baseline", eval.compare_baseline, "Test against the random baseline");
    c_eval->add_flag("--prior-matched", eval.prior_matched, "Random baseline follows the class prior");
    c_eval->add_option("--alpha", eval.alpha, "Significance level before correction")->check(CLI::Range(0.0, 1.0));
    c_eval->add_option("--comparisons", eval.comparisons, "Bonferroni comparison count")
        ->check(CLI::PositiveNumber);

    AdaptArgs ad;
    auto* c_adapt = app.add_subcommand("adapt", "Cross-language, cross-topic, mixed or pooled evaluation");
    add_paths(run, c_adapt, "--train", ad.train, "Training matrix CSV(s)");
    add_path(run, c_adapt, "--test", ad.test, "Test matrix CSV")->required();
    add_label_options(run, c_adapt, ad.labels, false);
    add_train_options(c_adapt, ad.cfg);
    c_adapt->add_option("--mode", ad.mode, "Adaptation mode")
        ->required()
        ->check(CLI::IsMember({"cross-language", "cross-topic", "mixed", "pooled"}));
    c_adapt->add_option("--scaling", ad.scaling, "Per-dataset feature scaling before pooling")
        ->check(CLI::IsMember({"none", "quantile"}));
    c_adapt->add_flag("--test-language-only-removal", ad.test_only_removal,
                      "Mixed/pooled: drop the held-out domain only from the test dataset");
    c_adapt->add_option("--bootstrap", ad.bootstrap, "Bootstrap resamples")->check(CLI::PositiveNumber);
    c_adapt->add_flag("--compare-native", ad.compare_native, "Test against native leave-one-out on the test set");
    c_adapt->add_option("--alpha", ad.alpha, "Significance level before correction")->check(CLI::Range(0.0, 1.0));
    c_adapt->add_option("--comparisons", ad.comparisons, "Bonferroni comparison count")
        ->check(CLI::PositiveNumber);

    BaselineArgs base;
    auto* c_base = app.add_subcommand("baseline", "Random classifier with bootstrap statistics");
    add_path(run, c_base, "--matrix", base.matrix, "Labeled feature matrix CSV")->required();
    add_label_options(run, c_base, base.labels, false);
    c_base->add_option("--bootstrap", base.bootstrap, "Bootstrap resamples")->check(CLI::PositiveNumber);
    c_base->add_flag("--prior-matched", base.prior_matched, "Draw reliable with the class prior instead of 0.5");

    ScalingArgs sc;
    auto* c_exp = app.add_subcommand("experiment", "Experiments");
    c_exp->require_subcommand(1);
    auto* c_scaling = c_exp->add_subcommand("scaling", "F1 macro against the number of sampled revisions");
    add_paths(run, c_scaling, "--corpus", sc.corpus, "Corpus JSONL file(s)")->required();
    c_scaling->add_option("--dataset", sc.dataset, "topic/language when the corpus holds several datasets");
    add_label_options(run, c_scaling, sc.labels, true);
    add_train_options(c_scaling, sc.cfg);
    c_scaling->add_option("--grid", sc.grid, "Explicit revision counts (overrides --grid-exponents)")->delimiter(',');
    c_scaling->add_option("--grid-exponents", sc.exponents, "first,last,step of a log10-regular grid")
        ->expected(3)
        ->delimiter(',');
    c_scaling->add_option("--repeats", sc.repeats, "Samples per grid point")->check(CLI::PositiveNumber);
    c_scaling->add_option("--cutoff", sc.cutoff, "Last day (YYYY-MM-DD, inclusive) of history to use")
        ->check([](const std::string& s) -> std::string {
            try {
                parse_date(s);
            } catch (const DataError&) {
                return "expected YYYY-MM-DD";
            }
            return {};
        });
    c_scaling->add_option("--min-per-class", sc.min_per_class, "Labeled domains per class needed to score a sample")
        ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));

    FetchArgs fetch;
    auto* c_fetch = app.add_subcommand("fetch", "Download revision histories into corpus JSONL");
    c_fetch->add_option("--base-url", fetch.opt.base_url, "MediaWiki API endpoint");
    c_fetch->add_option("--title", fetch.opt.titles, "Article title (repeatable)");
    add_path(run, c_fetch, "--titles-file", fetch.titles_file, "File with one title per line");
    c_fetch->add_option("--lang", fetch.opt.language, "Language code written to the corpus");
    c_fetch->add_option("--topic", fetch.opt.topic, "Topic written to the corpus")->required();
    add_path(run, c_fetch, "--output", fetch.opt.output, "Corpus JSONL to append to")->required();
    add_path(run, c_fetch, "--cursor", fetch.opt.cursor, "Resumable cursor file");
    c_fetch->add_option("--spacing-ms", fetch.spacing_ms, "Milliseconds between requests (at least 100)")
        ->check(CLI::Range(100, 3600000));
    c_fetch->add_option("--batch", fetch.opt.batch, "Revisions per request")->check(CLI::Range(1, 500));
    c_fetch->add_option("--max-requests", fetch.opt.max_requests, "Stop after this many requests (0 = no limit)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const auto subs = app.get_subcommands();
    run.command = subs.front();
    run.command_name = run.command->get_name();
    if (run.command == c_exp) run.command_name += " " + c_exp->get_subcommands().front()->get_name();
    if (*dump) {
        std::cout << run.config_text();
        return 0;
    }

    try {

        if (run.command == c_extract) cmd_extract(run, extract);
        else if (run.command == c_features) cmd_features(run, features);
        else if (run.command == c_train) cmd_train(run, trainargs);
        else if (run.command == c_score) cmd_score(run, score);
        else if (run.command == c_explain) cmd_explain(run, explain);
        else if (run.command == c_eval) cmd_evaluate(run, eval);
        else if (run.command == c_adapt) cmd_adapt(run, ad);
        else if (run.command == c_base) cmd_baseline(run, base);
        else if (run.command == c_exp) cmd_scaling(run, sc);
        else if (run.command == c_fetch) cmd_fetch(run, fetch);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
