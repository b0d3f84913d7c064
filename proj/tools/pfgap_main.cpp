#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "pfgap/dataset.hpp"
#include "pfgap/embedding.hpp"
#include "pfgap/forest.hpp"
#include "pfgap/matrices.hpp"
#include "pfgap/outlier.hpp"
#include "pfgap/pipeline.hpp"
#include "pfgap/proximity.hpp"

namespace fs = std::filesystem;
using namespace pfgap;

namespace {

std::vector<MeasureKind> parse_measures(const std::string& spec) {
    if (spec == "all") return {kAllMeasureKinds.begin(), kAllMeasureKinds.end()};
    std::vector<MeasureKind> out;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        const auto kind = measure_from_name(token);
        if (!kind) throw std::invalid_argument("unknown measure '" + token + "'");
        out.push_back(*kind);
    }
    if (out.empty()) throw std::invalid_argument("empty measure list");
    return out;
}

std::vector<double> parse_threshold_list(const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        out.push_back(std::stod(token));
    }
    return out;
}

struct PipelineFlags {
    RunConfig config;
    std::string measures = "all";
    std::string scope = "per-split";
    std::string thresholds;
    bool no_bootstrap = false;

    void resolve() {
        config.forest.measures = parse_measures(measures);
        if (scope == "per-split")
            config.forest.selection_scope = SelectionScope::PerSplit;
        else if (scope == "per-tree")
            config.forest.selection_scope = SelectionScope::PerTree;
        else
            throw std::invalid_argument("selection scope must be per-split or per-tree");
        if (!thresholds.empty()) config.lof_thresholds = parse_threshold_list(thresholds);
        config.forest.bootstrap = !no_bootstrap;
        validate(config);
    }
};

void add_forest_flags(CLI::App* cmd, PipelineFlags& f) {
    cmd->add_option("--trees", f.config.forest.trees, "Number of trees (default 100)");
    cmd->add_option("--r", f.config.forest.candidates,
                    "Candidate splits per node (default 5)");
    cmd->add_option("--max-depth", f.config.forest.max_depth,
                    "Depth cap; -1 grows to purity (default)");
    cmd->add_option("--measures", f.measures, "Comma list of distance measures, or 'all'");
    cmd->add_option("--selection-scope", f.scope,
                    "Measure sampling scope: per-split (default) or per-tree");
    cmd->add_option("--seed", f.config.forest.seed, "Random seed (default 42)");
    cmd->add_flag("--no-bootstrap", f.no_bootstrap,
                  "Train on the full sample (disables GAP proximities)");
    cmd->add_option("--threads", f.config.forest.threads,
                    "Worker threads; 0 = all cores (default)");
    cmd->add_flag("--znormalize", f.config.znormalize, "Z-normalize each series before training");
}

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f) {
    cmd->add_option("--exponent", f.config.exponent, "Dissimilarity exponent, 1 or 2 (default 2)");
    cmd->add_option("--lof-k", f.config.lof_k, "LOF neighbor count (default 5)");
    cmd->add_option("--lof-threshold", f.config.lof_threshold,
                    "LOF outlier threshold (default 1.5)");
    cmd->add_option("--lof-thresholds", f.thresholds,
                    "Comma list of LOF thresholds swept in the F1 table");
    cmd->add_option("--mds-dim", f.config.mds_dim, "Embedding dimension (default 2)");
    cmd->add_option("--mds-iters", f.config.mds.max_iterations, "MDS iteration cap (default 300)");
    cmd->add_option("--mds-tol", f.config.mds.tolerance,
                    "MDS relative stress tolerance (default 1e-6)");
    cmd->add_option("--mds-seed", f.config.mds.seed, "Seed for random MDS restarts");
    cmd->add_option("--mds-restarts", f.config.mds.random_restarts,
                    "Extra random-start MDS runs (default 0)");
    cmd->add_option("--kmeans-restarts", f.config.kmeans.restarts,
                    "k-means restarts (default 10)");
    cmd->add_option("--kmeans-seed", f.config.kmeans.seed, "k-means seed");
    cmd->add_flag("--literal-sum", f.config.literal_outlier_sum,
                  "Per-neighbor outlier score sum instead of the aggregate form");
    cmd->add_option("--format", f.config.prox_format, "Proximity export: dense or sparse");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GAP forest proximities for univariate time series: train bootstrap proximity "
                 "forests, export proximities and dissimilarities, embed with MDS, score "
                 "outliers, and reproduce the evaluation tables"};
    app.require_subcommand(1);

    // --- train ---
    auto* train_cmd = app.add_subcommand("train", "Fit a bootstrap proximity forest");
    static std::string train_data, train_out;
    static PipelineFlags train_flags;
    train_cmd->add_option("--data", train_data, "Training TSV/CSV file")->required();
    train_cmd->add_option("--out", train_out, "Output directory")->required();
    add_forest_flags(train_cmd, train_flags);
    train_cmd->callback([&] {
        train_flags.resolve();
        TimeSeriesDataset d = load_tsv(train_data);
        if (train_flags.config.znormalize) znormalize(d);
        const ProximityForest forest = fit(d, train_flags.config.forest);
        fs::create_directories(train_out);
        save_forest(forest, (fs::path(train_out) / "model.json").string());
        {
            std::ofstream cfg(fs::path(train_out) / "config.json");
            cfg << run_config_to_json(train_flags.config);
        }
        const auto missing = never_oob_indices(forest);
        {
            nlohmann::json cov;
            cov["never_oob"] = missing;
            cov["trees"] = train_flags.config.forest.trees;
            std::ofstream out(fs::path(train_out) / "coverage.json");
            out << cov.dump(2) << '\n';
        }
        std::cout << "trained " << forest.trees.size() << " trees on " << d.size() << " series ("
                  << d.num_classes() << " classes); model at " << train_out << "/model.json\n";
        if (!missing.empty())
            std::cout << "warning: " << missing.size()
                      << " series were in-bag in every tree; their proximity rows are undefined\n";
    });

    // --- prox ---
    auto* prox_cmd = app.add_subcommand("prox", "Export proximities from a trained model");
    static std::string prox_model, prox_kind = "gap", prox_format = "dense",
                       prox_output = "raw", prox_out;
    static int prox_exponent = 2, prox_threads = 0;
    prox_cmd->add_option("--model", prox_model, "model.json from train")->required();
    prox_cmd->add_option("--kind", prox_kind, "gap (default) or original");
    prox_cmd->add_option("--format", prox_format, "dense (default) or sparse triplets");
    prox_cmd->add_option("--output", prox_output,
                         "raw (default), symmetrized, or dissimilarity");
    prox_cmd->add_option("--exponent", prox_exponent, "Exponent for --output dissimilarity");
    prox_cmd->add_option("--threads", prox_threads, "Worker threads; 0 = all cores");
    prox_cmd->add_option("--out", prox_out, "Output file (default stdout)");
    prox_cmd->callback([&] {
        const ProximityForest forest = load_forest(prox_model);
        SparseProximityMatrix p;
        if (prox_kind == "gap")
            p = gap_proximities(forest, prox_threads);
        else if (prox_kind == "original")
            p = original_proximities(forest);
        else
            throw std::invalid_argument("--kind must be gap or original");

        Eigen::MatrixXd dense;
        if (prox_output == "raw") {
            dense = p.to_dense();
        } else if (prox_output == "symmetrized" || prox_output == "dissimilarity") {
            if (prox_kind != "gap")
                throw std::invalid_argument("--output " + prox_output + " needs --kind gap");
            const SparseProximityMatrix sym = symmetrize(p);
            if (prox_output == "symmetrized") {
                p = sym;
                dense = sym.to_dense();
            } else {
                dense = gap_dissimilarity(sym, prox_exponent).values;
            }
        } else {
            throw std::invalid_argument("--output must be raw, symmetrized, or dissimilarity");
        }

        const bool sparse = prox_format == "sparse";
        if (!sparse && prox_format != "dense")
            throw std::invalid_argument("--format must be dense or sparse");
        if (sparse && prox_output == "dissimilarity")
            throw std::invalid_argument("dissimilarity export is dense only");
        if (prox_out.empty()) {
            if (sparse)
                write_triplet_csv(p, std::cout);
            else
                write_dense_csv(dense, std::cout);
        } else {
            if (sparse)
                save_triplet_csv(p, prox_out);
            else
                save_dense_csv(dense, prox_out);
        }
    });

    // --- embed ---
    auto* embed_cmd = app.add_subcommand("embed", "MDS embedding of a dissimilarity CSV");
    static std::string embed_dissim, embed_mode = "metric", embed_out = "embedding",
                       embed_data;
    static int embed_dim = 2, embed_highlight = -1;
    static bool embed_svg = false;
    static MdsOptions embed_opts;
    embed_cmd->add_option("--dissim", embed_dissim, "Dissimilarity CSV (dense or i,j,value)")
        ->required();
    embed_cmd->add_option("--mds", embed_mode, "metric (default) or nonmetric");
    embed_cmd->add_option("--dim", embed_dim, "Target dimension (default 2)");
    embed_cmd->add_option("--out", embed_out, "Output prefix (default 'embedding')");
    embed_cmd->add_flag("--svg", embed_svg, "Also write an SVG scatter plot");
    embed_cmd->add_option("--data", embed_data, "Dataset file providing labels for the output");
    embed_cmd->add_option("--highlight", embed_highlight, "Index drawn highlighted in the SVG");
    embed_cmd->add_option("--mds-iters", embed_opts.max_iterations, "Iteration cap (default 300)");
    embed_cmd->add_option("--mds-tol", embed_opts.tolerance, "Relative stress tolerance");
    embed_cmd->add_option("--mds-seed", embed_opts.seed, "Seed for random restarts");
    embed_cmd->add_option("--mds-restarts", embed_opts.random_restarts, "Random-start runs");
    embed_cmd->callback([&] {
        const DissimilarityMatrix d = make_dissimilarity(load_matrix_csv(embed_dissim));
        Embedding e;
        if (embed_mode == "metric")
            e = mds_metric(d, embed_dim, embed_opts);
        else if (embed_mode == "nonmetric")
            e = mds_nonmetric(d, embed_dim, embed_opts);
        else
            throw std::invalid_argument("--mds must be metric or nonmetric");
        if (!e.warning.empty()) std::cerr << "warning: " << e.warning << '\n';

        std::vector<int> labels(d.size(), 0);
        if (!embed_data.empty()) {
            const TimeSeriesDataset ds = load_tsv(embed_data);
            if (ds.size() != d.size())
                throw std::invalid_argument("--data size does not match the matrix");
            labels = ds.labels();
        }
        save_embedding_csv(e, labels, {}, embed_out + ".csv");
        if (embed_svg) save_embedding_svg(e, labels, embed_out + ".svg", embed_highlight);
        std::cout << "stress " << format_double(e.stress) << " after "
                  << (e.stress_trace.size() - 1) << " iterations -> " << embed_out << ".csv"
                  << (embed_svg ? " (+svg)" : "") << '\n';
    });

    // --- outliers ---
    auto* outl_cmd = app.add_subcommand("outliers", "Within-class outlier report from a model");
    static std::string outl_model, outl_out, outl_csv, outl_data;
    static int outl_k = 5, outl_exponent = 2, outl_threads = 0;
    static double outl_threshold = 1.5;
    static bool outl_literal = false;
    outl_cmd->add_option("--model", outl_model, "model.json from train")->required();
    outl_cmd->add_option("--lof-k", outl_k, "LOF neighbor count (default 5)");
    outl_cmd->add_option("--lof-threshold", outl_threshold, "LOF outlier threshold (default 1.5)");
    outl_cmd->add_option("--exponent", outl_exponent, "Dissimilarity exponent (default 2)");
    outl_cmd->add_flag("--literal-sum", outl_literal, "Per-neighbor outlier score sum");
    outl_cmd->add_option("--threads", outl_threads, "Worker threads; 0 = all cores");
    outl_cmd->add_option("--out", outl_out, "Report JSON path (default stdout)");
    outl_cmd->add_option("--csv", outl_csv, "Also write the CSV summary here");
    outl_cmd->add_option("--data", outl_data,
                         "Training data; enables predictions for never-OOB points");
    outl_cmd->callback([&] {
        const ProximityForest forest = load_forest(outl_model);
        const SparseProximityMatrix gap = gap_proximities(forest, outl_threads);
        const SparseProximityMatrix sym = symmetrize(gap);
        const DissimilarityMatrix d = gap_dissimilarity(sym, outl_exponent);

        OutlierFlags flags;
        const Eigen::VectorXd raw = raw_outlier_scores(
            sym, forest.labels,
            outl_literal ? OutlierSumForm::PerTerm : OutlierSumForm::Aggregate, &flags);
        const Eigen::VectorXd normalized = normalize_outlier_scores(raw, forest.labels, &flags);
        const LofResult l = lof(d, outl_k, outl_threshold);

        std::vector<int> predicted(forest.size(), -1);
        TimeSeriesDataset train;
        const bool have_data = !outl_data.empty();
        if (have_data) train = load_tsv(outl_data);
        for (int i = 0; i < forest.size(); ++i) {
            const auto vote = oob_predict(forest, i);
            if (vote)
                predicted[i] = *vote;
            else if (have_data)
                predicted[i] = predict(forest, train, train.series[i]);
        }

        const OutlierReport report =
            build_outlier_report(raw, normalized, l, predicted, forest.labels, flags);
        if (outl_out.empty()) {
            save_outlier_report_json(report, "/dev/stdout");
        } else {
            save_outlier_report_json(report, outl_out);
            std::cout << "report -> " << outl_out << '\n';
        }
        if (!outl_csv.empty()) save_outlier_report_csv(report, outl_csv);
    });

    // --- eval ---
    auto* eval_cmd = app.add_subcommand(
        "eval", "Full evaluation: k-means clustering scores and misclassified-outlier F1 tables");
    static std::vector<std::string> eval_data;
    static std::string eval_out;
    static PipelineFlags eval_flags;
    eval_cmd->add_option("--data", eval_data, "Dataset file(s); one table column each")
        ->required();
    eval_cmd->add_option("--out", eval_out, "Output directory")->required();
    add_forest_flags(eval_cmd, eval_flags);
    add_pipeline_flags(eval_cmd, eval_flags);
    eval_cmd->callback([&] {
        eval_flags.resolve();
        std::vector<std::pair<std::string, PipelineResult>> runs;
        for (const auto& path : eval_data) {
            const TimeSeriesDataset d = load_tsv(path);
            const fs::path run_dir = fs::path(eval_out) / d.name;
            PipelineResult r = run_pipeline(eval_flags.config, d, run_dir.string());
            std::cout << d.name << ": DGAP kmeans best " << format_double(r.dgap.kmeans_best)
                      << " (" << (r.dgap.best_is_metric ? "metric" : "nonmetric") << "), F1 best "
                      << format_double(r.dgap.f1_best) << '\n';
            runs.emplace_back(d.name, std::move(r));
        }
        write_eval_tables(runs, eval_out);
        std::cout << "tables -> " << eval_out << '\n';
    });

    // --- synth ---
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
    static std::string synth_out;
    static SynthSpec synth_spec;
    synth_cmd->add_option("--out", synth_out, "Output TSV path (default stdout)");
    synth_cmd->add_option("--classes", synth_spec.classes, "Class count (default 2)");
    synth_cmd->add_option("--per-class", synth_spec.per_class, "Series per class (default 25)");
    synth_cmd->add_option("--length", synth_spec.length, "Series length (default 150)");
    synth_cmd->add_option("--noise", synth_spec.noise, "Gaussian noise level (default 0.1)");
    synth_cmd->add_option("--seed", synth_spec.seed, "Random seed (default 7)");
    synth_cmd->callback([&] {
        const TimeSeriesDataset d = synth_dataset(synth_spec);
        if (synth_out.empty()) {
            write_tsv(d, std::cout);
        } else {
            save_tsv(d, synth_out);
            std::cout << "wrote " << d.size() << " series (" << d.num_classes()
                      << " classes) -> " << synth_out << '\n';
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
