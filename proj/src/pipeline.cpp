#include "pfgap/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <set>
#include <stdexcept>

#include "pfgap/matrices.hpp"
#include "pfgap/proximity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pfgap {

void validate(const RunConfig& c) {
    if (c.forest.trees < 1) throw std::invalid_argument("config: trees must be >= 1");
    if (c.forest.candidates < 1) throw std::invalid_argument("config: r must be >= 1");
    if (c.exponent != 1 && c.exponent != 2)
        throw std::invalid_argument("config: exponent must be 1 or 2");
    if (c.lof_k < 1) throw std::invalid_argument("config: lof_k must be >= 1");
    if (!(c.lof_threshold > 0.0)) throw std::invalid_argument("config: lof_threshold must be > 0");
    for (double t : c.lof_thresholds)
        if (!(t > 0.0)) throw std::invalid_argument("config: lof threshold sweep values must be > 0");
    if (c.mds_dim < 1) throw std::invalid_argument("config: mds_dim must be >= 1");
    if (c.mds.max_iterations < 1) throw std::invalid_argument("config: mds iterations must be >= 1");
    if (!(c.mds.tolerance > 0.0)) throw std::invalid_argument("config: mds tolerance must be > 0");
    if (c.kmeans.restarts < 1) throw std::invalid_argument("config: kmeans restarts must be >= 1");
    if (c.kmeans.max_iterations < 1)
        throw std::invalid_argument("config: kmeans iterations must be >= 1");
    if (c.prox_format != "dense" && c.prox_format != "sparse")
        throw std::invalid_argument("config: prox_format must be 'dense' or 'sparse'");
}

std::string run_config_to_json(const RunConfig& c) {
    json j;
    j["trees"] = c.forest.trees;
    j["r"] = c.forest.candidates;
    j["max_depth"] = c.forest.max_depth;
    std::vector<std::string> names;
    for (MeasureKind k : c.forest.measures) names.emplace_back(measure_name(k));
    j["measures"] = names;
    j["selection_scope"] =
        c.forest.selection_scope == SelectionScope::PerSplit ? "per-split" : "per-tree";
    j["seed"] = c.forest.seed;
    j["bootstrap"] = c.forest.bootstrap;
    j["threads"] = c.forest.threads;
    j["exponent"] = c.exponent;
    j["lof_k"] = c.lof_k;
    j["lof_threshold"] = c.lof_threshold;
    j["lof_thresholds"] = c.lof_thresholds;
    j["mds_dim"] = c.mds_dim;
    j["mds_max_iterations"] = c.mds.max_iterations;
    j["mds_tolerance"] = c.mds.tolerance;
    j["mds_seed"] = c.mds.seed;
    j["mds_restarts"] = c.mds.random_restarts;
    j["kmeans_restarts"] = c.kmeans.restarts;
    j["kmeans_max_iterations"] = c.kmeans.max_iterations;
    j["kmeans_seed"] = c.kmeans.seed;
    j["znormalize"] = c.znormalize;
    j["literal_outlier_sum"] = c.literal_outlier_sum;
    j["prox_format"] = c.prox_format;
    return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument("config parse error: " + std::string(e.what()));
    }
    static const std::set<std::string> known = {
        "trees",          "r",
        "max_depth",      "measures",
        "selection_scope", "seed",
        "bootstrap",      "threads",
        "exponent",       "lof_k",
        "lof_threshold",  "lof_thresholds",
        "mds_dim",        "mds_max_iterations",
        "mds_tolerance",  "mds_seed",
        "mds_restarts",   "kmeans_restarts",
        "kmeans_max_iterations", "kmeans_seed",
        "znormalize",     "literal_outlier_sum",
        "prox_format"};
    for (const auto& item : j.items())
        if (!known.count(item.key()))
            throw std::invalid_argument("config: unknown key '" + item.key() + "'");

    RunConfig c;
    if (j.contains("trees")) c.forest.trees = j["trees"].get<int>();
    if (j.contains("r")) c.forest.candidates = j["r"].get<int>();
    if (j.contains("max_depth")) c.forest.max_depth = j["max_depth"].get<int>();
    if (j.contains("measures")) {
        c.forest.measures.clear();
        for (const auto& name : j["measures"]) {
            const auto kind = measure_from_name(name.get<std::string>());
            if (!kind)
                throw std::invalid_argument("config: unknown measure '" +
                                            name.get<std::string>() + "'");
            c.forest.measures.push_back(*kind);
        }
    }
    if (j.contains("selection_scope")) {
        const std::string scope = j["selection_scope"].get<std::string>();
        if (scope == "per-split")
            c.forest.selection_scope = SelectionScope::PerSplit;
        else if (scope == "per-tree")
            c.forest.selection_scope = SelectionScope::PerTree;
        else
            throw std::invalid_argument("config: selection_scope must be per-split or per-tree");
    }
    if (j.contains("seed")) c.forest.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("bootstrap")) c.forest.bootstrap = j["bootstrap"].get<bool>();
    if (j.contains("threads")) c.forest.threads = j["threads"].get<int>();
    if (j.contains("exponent")) c.exponent = j["exponent"].get<int>();
    if (j.contains("lof_k")) c.lof_k = j["lof_k"].get<int>();
    if (j.contains("lof_threshold")) c.lof_threshold = j["lof_threshold"].get<double>();
    if (j.contains("lof_thresholds"))
        c.lof_thresholds = j["lof_thresholds"].get<std::vector<double>>();
    if (j.contains("mds_dim")) c.mds_dim = j["mds_dim"].get<int>();
    if (j.contains("mds_max_iterations")) c.mds.max_iterations = j["mds_max_iterations"].get<int>();
    if (j.contains("mds_tolerance")) c.mds.tolerance = j["mds_tolerance"].get<double>();
    if (j.contains("mds_seed")) c.mds.seed = j["mds_seed"].get<std::uint64_t>();
    if (j.contains("mds_restarts")) c.mds.random_restarts = j["mds_restarts"].get<int>();
    if (j.contains("kmeans_restarts")) c.kmeans.restarts = j["kmeans_restarts"].get<int>();
    if (j.contains("kmeans_max_iterations"))
        c.kmeans.max_iterations = j["kmeans_max_iterations"].get<int>();
    if (j.contains("kmeans_seed")) c.kmeans.seed = j["kmeans_seed"].get<std::uint64_t>();
    if (j.contains("znormalize")) c.znormalize = j["znormalize"].get<bool>();
    if (j.contains("literal_outlier_sum"))
        c.literal_outlier_sum = j["literal_outlier_sum"].get<bool>();
    if (j.contains("prox_format")) c.prox_format = j["prox_format"].get<std::string>();
    validate(c);
    return c;
}

namespace {

struct EmbeddingPair {
    Embedding metric;
    Embedding nonmetric;
    std::vector<int> included;  // original indices kept (flagged rows dropped)
};

// Rows flagged undefined are excluded from the embedding, not imputed.
EmbeddingPair embed_both(const DissimilarityMatrix& d, const RunConfig& cfg) {
    EmbeddingPair out;
    const int n = d.size();
    std::set<int> flagged(d.flagged.begin(), d.flagged.end());
    for (int i = 0; i < n; ++i)
        if (!flagged.count(i)) out.included.push_back(i);

    DissimilarityMatrix sub;
    if (out.included.size() == static_cast<std::size_t>(n)) {
        sub = d;
    } else {
        const int m = static_cast<int>(out.included.size());
        Eigen::MatrixXd values(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) values(a, b) = d.values(out.included[a], out.included[b]);
        sub = make_dissimilarity(std::move(values));
    }
    out.metric = mds_metric(sub, cfg.mds_dim, cfg.mds);
    out.nonmetric = mds_nonmetric(sub, cfg.mds_dim, cfg.mds);
    return out;
}

std::vector<int> subset(const std::vector<int>& values, const std::vector<int>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(values[i]);
    return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.empty()) return 0.0;
    long correct = 0, counted = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] < 0) continue;
        ++counted;
        if (predicted[i] == truth[i]) ++correct;
    }
    return counted ? static_cast<double>(correct) / static_cast<double>(counted) : 0.0;
}

std::vector<std::pair<double, double>> f1_sweep(const std::vector<int>& predicted,
                                                const std::vector<int>& truth,
                                                const LofResult& lof_result,
                                                const std::vector<double>& thresholds) {
    std::vector<std::pair<double, double>> out;
    for (double thr : thresholds) {
        std::vector<std::uint8_t> labels(lof_result.values.size());
        for (int i = 0; i < lof_result.values.size(); ++i)
            labels[i] = lof_result.values[i] > thr ? 1 : 0;
        out.emplace_back(thr, misclassified_outlier_f1(predicted, truth, labels).f1);
    }
    return out;
}

void finish_evaluation(MeasureEvaluation& ev) {
    ev.kmeans_best = std::max(ev.kmeans_metric, ev.kmeans_nonmetric);
    ev.best_is_metric = ev.kmeans_metric >= ev.kmeans_nonmetric;
    ev.f1_best = 0.0;
    for (const auto& [thr, f1] : ev.f1_by_threshold) {
        (void)thr;
        ev.f1_best = std::max(ev.f1_best, f1);
    }
}

void write_run_tables(const PipelineResult& r, const std::string& dataset,
                      const fs::path& out_dir,
                      const std::function<std::string(const std::string&)>& emit) {
    {
        std::ofstream t1(out_dir / "table1_kmeans.csv");
        t1 << "measure," << dataset << "_metric," << dataset << "_nonmetric," << dataset
           << "_best," << dataset << "_best_mds\n";
        auto row = [&](const MeasureEvaluation& ev) {
            t1 << ev.name << ',' << format_double(ev.kmeans_metric) << ','
               << format_double(ev.kmeans_nonmetric) << ',' << format_double(ev.kmeans_best) << ','
               << (ev.best_is_metric ? "metric" : "nonmetric") << '\n';
        };
        row(r.dgap);
        for (const auto& ev : r.baselines) row(ev);
    }
    emit("table1_kmeans.csv");
    {
        std::ofstream t2(out_dir / "table2_f1.csv");
        t2 << "measure," << dataset << '\n';
        t2 << r.dgap.name << ',' << format_double(r.dgap.f1_best) << '\n';
        for (const auto& ev : r.baselines)
            t2 << ev.name << ',' << format_double(ev.f1_best) << '\n';
    }
    emit("table2_f1.csv");
    {
        std::ofstream sweep(out_dir / "table2_f1_sweep.csv");
        sweep << "measure,dataset,lof_threshold,f1\n";
        auto rows = [&](const MeasureEvaluation& ev) {
            for (const auto& [thr, f1] : ev.f1_by_threshold)
                sweep << ev.name << ',' << dataset << ',' << format_double(thr) << ','
                      << format_double(f1) << '\n';
        };
        rows(r.dgap);
        for (const auto& ev : r.baselines) rows(ev);
    }
    emit("table2_f1_sweep.csv");
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config, const TimeSeriesDataset& dataset_in,
                            const std::string& out_dir_str,
                            const std::vector<MeasureKind>& baseline_measures) {
    validate(config);
    validate_for_training(dataset_in);

    TimeSeriesDataset dataset = dataset_in;
    if (config.znormalize) znormalize(dataset);

    const fs::path out_dir(out_dir_str);
    fs::create_directories(out_dir);

    PipelineResult result;
    result.out_dir = out_dir.string();
    std::vector<fs::path> created;
    auto emit = [&](const std::string& name) {
        created.push_back(out_dir / name);
        result.files.push_back(name);
        return (out_dir / name).string();
    };

    const std::vector<double> thresholds =
        config.lof_thresholds.empty() ? std::vector<double>{config.lof_threshold}
                                      : config.lof_thresholds;
    const std::vector<int> truth = dataset.labels();
    std::string stage = "setup";
    try {
        stage = "config";
        {
            std::ofstream cfg(out_dir / "config.json");
            cfg << run_config_to_json(config);
        }
        emit("config.json");

        stage = "fit";
        const ProximityForest forest = fit(dataset, config.forest);
        save_forest(forest, emit("model.json"));
        result.never_oob = never_oob_indices(forest);
        {
            json cov;
            cov["never_oob"] = result.never_oob;
            cov["trees"] = config.forest.trees;
            std::ofstream out(out_dir / "coverage.json");
            out << cov.dump(2) << '\n';
        }
        emit("coverage.json");

        stage = "gap proximities";
        const SparseProximityMatrix gap = gap_proximities(forest, config.forest.threads);
        if (config.prox_format == "sparse")
            save_triplet_csv(gap, emit("gap_prox.csv"));
        else
            save_dense_csv(gap.to_dense(), emit("gap_prox.csv"));

        stage = "dissimilarity";
        const SparseProximityMatrix sym = symmetrize(gap);
        const DissimilarityMatrix dgap_d = gap_dissimilarity(sym, config.exponent);
        save_dense_csv(dgap_d.values, emit("dgap_dissim.csv"));

        stage = "outlier scores";
        OutlierFlags flags;
        const OutlierSumForm form = config.literal_outlier_sum ? OutlierSumForm::PerTerm
                                                               : OutlierSumForm::Aggregate;
        const Eigen::VectorXd raw = raw_outlier_scores(sym, truth, form, &flags);
        const Eigen::VectorXd normalized = normalize_outlier_scores(raw, truth, &flags);
        int top = -1;
        try {
            top = top_outlier(normalized);
        } catch (const std::invalid_argument&) {
            top = -1;  // every score undefined (degenerate but not fatal)
        }

        stage = "dgap embedding";
        const EmbeddingPair dgap_emb = embed_both(dgap_d, config);
        const std::vector<int> included_labels = subset(truth, dgap_emb.included);
        save_embedding_csv(dgap_emb.metric, included_labels, dgap_emb.included,
                           emit("dgap_embedding_metric.csv"));
        save_embedding_csv(dgap_emb.nonmetric, included_labels, dgap_emb.included,
                           emit("dgap_embedding_nonmetric.csv"));
        int top_pos = -1;
        for (std::size_t p = 0; p < dgap_emb.included.size(); ++p)
            if (dgap_emb.included[p] == top) top_pos = static_cast<int>(p);
        save_embedding_svg(dgap_emb.metric, included_labels, emit("dgap_embedding_metric.svg"),
                           top_pos);
        save_embedding_svg(dgap_emb.nonmetric, included_labels,
                           emit("dgap_embedding_nonmetric.svg"), top_pos);

        stage = "dgap evaluation";
        result.dgap.name = "DGAP";
        result.dgap.kmeans_metric = kmeans_cluster_score(
            dgap_emb.metric, included_labels, dataset.num_classes(), config.kmeans);
        result.dgap.kmeans_nonmetric = kmeans_cluster_score(
            dgap_emb.nonmetric, included_labels, dataset.num_classes(), config.kmeans);
        // The forest's own classifications: OOB votes, falling back to the
        // full-forest vote for never-OOB points.
        std::vector<int> forest_pred(dataset.size());
        for (int i = 0; i < dataset.size(); ++i) {
            const auto vote = oob_predict(forest, i);
            forest_pred[i] = vote ? *vote : predict(forest, dataset, dataset.series[i]);
        }
        result.dgap.classifier_accuracy = accuracy(forest_pred, truth);
        const LofResult dgap_lof = lof(dgap_d, config.lof_k, config.lof_threshold);
        result.dgap.f1_by_threshold = f1_sweep(forest_pred, truth, dgap_lof, thresholds);
        finish_evaluation(result.dgap);

        stage = "outlier report";
        const OutlierReport report =
            build_outlier_report(raw, normalized, dgap_lof, forest_pred, truth, flags);
        save_outlier_report_json(report, emit("outlier_report.json"));
        save_outlier_report_csv(report, emit("outlier_report.csv"));

        for (MeasureKind kind : baseline_measures) {
            const std::string name = measure_name(kind);
            stage = std::string("baseline ") + name;
            if ((kind == MeasureKind::DDTW || kind == MeasureKind::WDDTW) &&
                forest.stats.min_length < 3)
                continue;
            if (kind == MeasureKind::ED && !forest.stats.equal_lengths) continue;

            const DistanceMeasure m = default_measure(kind, forest.stats);
            const DissimilarityMatrix dist =
                pairwise_distance_matrix(dataset, m, config.forest.threads);
            save_dense_csv(dist.values, emit(name + "_dissim.csv"));

            MeasureEvaluation ev;
            ev.name = name;
            const EmbeddingPair emb = embed_both(dist, config);
            save_embedding_csv(emb.metric, truth, {}, emit(name + "_embedding_metric.csv"));
            save_embedding_csv(emb.nonmetric, truth, {}, emit(name + "_embedding_nonmetric.csv"));
            save_embedding_svg(emb.metric, truth, emit(name + "_embedding_metric.svg"));
            ev.kmeans_metric =
                kmeans_cluster_score(emb.metric, truth, dataset.num_classes(), config.kmeans);
            ev.kmeans_nonmetric =
                kmeans_cluster_score(emb.nonmetric, truth, dataset.num_classes(), config.kmeans);
            const std::vector<int> nn_pred = one_nn_predict(dist, truth);
            ev.classifier_accuracy = accuracy(nn_pred, truth);
            const LofResult measure_lof = lof(dist, config.lof_k, config.lof_threshold);
            ev.f1_by_threshold = f1_sweep(nn_pred, truth, measure_lof, thresholds);
            finish_evaluation(ev);
            result.baselines.push_back(std::move(ev));
        }

        stage = "tables";
        write_run_tables(result, dataset.name.empty() ? "dataset" : dataset.name, out_dir, emit);
    } catch (const std::exception& e) {
        for (const auto& p : created) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        throw std::runtime_error("pipeline stage '" + stage + "' failed: " + e.what());
    }
    return result;
}

void write_eval_tables(const std::vector<std::pair<std::string, PipelineResult>>& runs,
                       const std::string& out_dir_str) {
    if (runs.empty()) throw std::invalid_argument("write_eval_tables: no runs");
    const fs::path out_dir(out_dir_str);
    fs::create_directories(out_dir);

    // Row order: DGAP first, then the baselines of the first run.
    std::vector<std::string> row_names{"DGAP"};
    for (const auto& ev : runs.front().second.baselines) row_names.push_back(ev.name);

    auto find_eval = [](const PipelineResult& r, const std::string& name) -> const MeasureEvaluation* {
        if (name == "DGAP") return &r.dgap;
        for (const auto& ev : r.baselines)
            if (ev.name == name) return &ev;
        return nullptr;
    };

    {
        std::ofstream t1(out_dir / "table1_kmeans.csv");
        t1 << "measure";
        for (const auto& [name, r] : runs) {
            (void)r;
            t1 << ',' << name << "_metric," << name << "_nonmetric," << name << "_best," << name
               << "_best_mds";
        }
        t1 << '\n';
        for (const auto& row : row_names) {
            t1 << row;
            for (const auto& [name, r] : runs) {
                (void)name;
                const MeasureEvaluation* ev = find_eval(r, row);
                if (ev)
                    t1 << ',' << format_double(ev->kmeans_metric) << ','
                       << format_double(ev->kmeans_nonmetric) << ','
                       << format_double(ev->kmeans_best) << ','
                       << (ev->best_is_metric ? "metric" : "nonmetric");
                else
                    t1 << ",,,,";
            }
            t1 << '\n';
        }
    }
    {
        std::ofstream t2(out_dir / "table2_f1.csv");
        t2 << "measure";
        for (const auto& [name, r] : runs) {
            (void)r;
            t2 << ',' << name;
        }
        t2 << '\n';
        for (const auto& row : row_names) {
            t2 << row;
            for (const auto& [name, r] : runs) {
                (void)name;
                const MeasureEvaluation* ev = find_eval(r, row);
                t2 << ',' << (ev ? format_double(ev->f1_best) : std::string());
            }
            t2 << '\n';
        }
    }
    {
        std::ofstream sweep(out_dir / "table2_f1_sweep.csv");
        sweep << "measure,dataset,lof_threshold,f1\n";
        for (const auto& [name, r] : runs) {
            auto rows = [&](const MeasureEvaluation& ev) {
                for (const auto& [thr, f1] : ev.f1_by_threshold)
                    sweep << ev.name << ',' << name << ',' << format_double(thr) << ','
                          << format_double(f1) << '\n';
            };
            rows(r.dgap);
            for (const auto& ev : r.baselines) rows(ev);
        }
    }
}

}  // namespace pfgap
