#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "pfgap/matrices.hpp"

namespace pfgap {

/// How the within-class outlier score aggregates same-class proximities:
/// Aggregate (default): raw(i) = N / sum_j P(i,j)^2, which stays finite
/// when individual proximities are zero. PerTerm: the literal per-neighbor
/// sum of N / P(i,j)^2 with zero-proximity terms skipped.
enum class OutlierSumForm { Aggregate, PerTerm };

/// Scores that would overflow are clamped to this sentinel and flagged.
inline constexpr double kOutlierScoreSentinel = 1e15;

struct OutlierFlags {
    std::vector<int> undefined;  // singleton classes: no same-class neighbor
    std::vector<int> clamped;    // infinite raw scores clamped to sentinel
    std::vector<int> zero_mad;   // members of classes with zero deviation
};

/// Raw within-class outlier scores from symmetrized proximities. The self
/// term is excluded. Undefined entries are NaN and listed in flags.
Eigen::VectorXd raw_outlier_scores(const SparseProximityMatrix& sym,
                                   const std::vector<int>& labels,
                                   OutlierSumForm form = OutlierSumForm::Aggregate,
                                   OutlierFlags* flags = nullptr);

/// Centers each class's raw scores on the class median and divides by the
/// mean absolute deviation about that median. A zero-deviation class gets
/// all-zero scores and is flagged. NaN (undefined) entries propagate.
Eigen::VectorXd normalize_outlier_scores(const Eigen::VectorXd& raw,
                                         const std::vector<int>& labels,
                                         OutlierFlags* flags = nullptr);

/// Index of the highest defined score (ties -> lowest index). Throws when
/// every score is undefined.
int top_outlier(const Eigen::VectorXd& scores);

struct LofResult {
    Eigen::VectorXd values;             // LOF per index
    std::vector<std::uint8_t> outlier;  // values[i] > threshold
    int k = 5;
    double threshold = 1.5;
};

/// Local outlier factor over pairwise dissimilarities with k neighbors
/// (distance ties extend the neighborhood, the standard k-distance
/// convention). Requires n >= k + 1.
LofResult lof(const DissimilarityMatrix& d, int k = 5, double threshold = 1.5);

/// Leave-one-out 1-NN: label of the nearest other point (ties -> lowest
/// index).
std::vector<int> one_nn_predict(const DissimilarityMatrix& d, const std::vector<int>& labels);

struct F1Summary {
    double f1 = 0.0;
    long tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Association between misclassification and outlier labels:
/// TP = correct & inlier, TN = misclassified & outlier, FP = misclassified
/// & inlier, FN = correct & outlier; F1 = 2TP / (2TP + FP + FN). Entries
/// with predicted < 0 (no prediction available) are skipped.
F1Summary misclassified_outlier_f1(const std::vector<int>& predicted,
                                   const std::vector<int>& truth,
                                   const std::vector<std::uint8_t>& outlier);

struct OutlierReport {
    struct Row {
        int index = 0;
        int true_label = 0;
        int predicted_label = -1;  // -1 = unavailable
        double raw_score = 0.0;
        double normalized_score = 0.0;
        double lof_value = 0.0;
        bool lof_outlier = false;
    };
    std::vector<Row> rows;
    F1Summary summary;
    int lof_k = 5;
    double lof_threshold = 1.5;
    OutlierFlags flags;
    std::vector<int> excluded;  // indices without predictions
};

OutlierReport build_outlier_report(const Eigen::VectorXd& raw, const Eigen::VectorXd& normalized,
                                   const LofResult& lof_result, const std::vector<int>& predicted,
                                   const std::vector<int>& truth, const OutlierFlags& flags);

void save_outlier_report_json(const OutlierReport& r, const std::string& path);
void save_outlier_report_csv(const OutlierReport& r, const std::string& path);

}  // namespace pfgap
