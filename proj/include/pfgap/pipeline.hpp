#pragma once

#include <string>
#include <vector>

#include "pfgap/dataset.hpp"
#include "pfgap/embedding.hpp"
#include "pfgap/forest.hpp"
#include "pfgap/outlier.hpp"

namespace pfgap {

/// Full resolved configuration of a pipeline run. Serialized to
/// config.json in every output directory; parsing rejects unknown keys.
struct RunConfig {
    ForestConfig forest;
    int exponent = 2;  // dissimilarity exponent (1 or 2)
    int lof_k = 5;
    double lof_threshold = 1.5;
    std::vector<double> lof_thresholds;  // sweep for the F1 table; empty = {lof_threshold}
    int mds_dim = 2;
    MdsOptions mds;
    KmeansOptions kmeans;
    bool znormalize = false;
    bool literal_outlier_sum = false;
    std::string prox_format = "dense";  // dense | sparse
};

std::string run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const std::string& text);
void validate(const RunConfig& c);

/// One row of the evaluation tables.
struct MeasureEvaluation {
    std::string name;
    double kmeans_metric = 0.0;
    double kmeans_nonmetric = 0.0;
    double kmeans_best = 0.0;
    bool best_is_metric = true;
    double classifier_accuracy = 0.0;            // OOB vote (DGAP) or 1-NN
    std::vector<std::pair<double, double>> f1_by_threshold;
    double f1_best = 0.0;
};

struct PipelineResult {
    std::string out_dir;
    MeasureEvaluation dgap;
    std::vector<MeasureEvaluation> baselines;
    std::vector<int> never_oob;
    std::vector<std::string> files;  // everything written, relative to out_dir
};

/// Runs the whole pipeline on one dataset: fit -> GAP proximities ->
/// symmetrize -> dissimilarity -> metric & non-metric MDS -> k-means score,
/// plus per-measure baseline pipelines (pairwise distances -> MDS + k-means,
/// 1-NN + LOF -> F1), writing the model, matrices, embeddings, outlier
/// report and table CSVs under out_dir. On failure partial outputs are
/// removed and the stage name is reported.
PipelineResult run_pipeline(const RunConfig& config, const TimeSeriesDataset& dataset,
                            const std::string& out_dir,
                            const std::vector<MeasureKind>& baseline_measures =
                                {kAllMeasureKinds.begin(), kAllMeasureKinds.end()});

/// Combined tables over several runs (one column per dataset):
/// table1_kmeans.csv, table2_f1.csv, table2_f1_sweep.csv.
void write_eval_tables(const std::vector<std::pair<std::string, PipelineResult>>& runs,
                       const std::string& out_dir);

}  // namespace pfgap
