#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "pfgap/dataset.hpp"
#include "pfgap/matrices.hpp"
#include "pfgap/random.hpp"

namespace pfgap {

enum class MeasureKind { DTW, DDTW, WDTW, WDDTW, TWE, ED, LCSS, MSM, ERP };

inline constexpr std::array<MeasureKind, 9> kAllMeasureKinds = {
    MeasureKind::DTW, MeasureKind::DDTW, MeasureKind::WDTW,
    MeasureKind::WDDTW, MeasureKind::TWE, MeasureKind::ED,
    MeasureKind::LCSS, MeasureKind::MSM, MeasureKind::ERP};

const char* measure_name(MeasureKind kind);
std::optional<MeasureKind> measure_from_name(std::string_view name);

/// Per-measure parameters. Each kind reads only its own fields:
///   DTW/DDTW   window (Sakoe-Chiba half-width, -1 = unconstrained)
///   WDTW/WDDTW weight (logistic steepness g)
///   TWE        stiffness (nu), penalty (lambda)
///   LCSS       epsilon (match threshold), window
///   MSM        cost (split/merge cost c)
///   ERP        gap_value, window
///   ED         none
struct MeasureParams {
    int window = -1;
    double weight = 0.05;
    double stiffness = 1e-4;
    double penalty = 1.0;
    double epsilon = 0.5;
    double cost = 1.0;
    double gap_value = 0.0;
};

struct DistanceMeasure {
    MeasureKind kind = MeasureKind::DTW;
    MeasureParams params;
};

/// Throws std::invalid_argument for out-of-range parameters.
void validate(const DistanceMeasure& m);

/// Distance between two series under a fully parameterized measure.
/// Pure: same inputs always give the same value. Propagates kernel errors
/// (bad lengths, non-finite values, bad parameters).
double distance(const DistanceMeasure& m, const TimeSeries& a, const TimeSeries& b);

using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

// DP kernels. All use O(min length) rolling buffers and accept series of
// different lengths (except euclidean_distance). DTW-family pointwise cost
// is the squared difference with no final square root.
double dtw_distance(const VectorRef& a, const VectorRef& b, int window = -1);
double wdtw_distance(const VectorRef& a, const VectorRef& b, double weight);
double twe_distance(const VectorRef& a, const VectorRef& b, double stiffness, double penalty);
double euclidean_distance(const VectorRef& a, const VectorRef& b);
double lcss_distance(const VectorRef& a, const VectorRef& b, double epsilon, int window = -1);
double msm_distance(const VectorRef& a, const VectorRef& b, double cost);
double erp_distance(const VectorRef& a, const VectorRef& b, double gap_value, int window = -1);

/// Logistic band weight used by WDTW/WDDTW: 1 / (1 + exp(-g (delta - l/2))).
double wdtw_weight(int delta, double weight, int length);

/// MSM split/merge cost: c when `mid` lies between `prev` and `other`,
/// otherwise c plus the distance to the nearer of the two.
double msm_transition_cost(double mid, double prev, double other, double cost);

/// Centered slope estimate; output has length |a| - 2. Requires |a| >= 3.
Eigen::VectorXd derivative_transform(const VectorRef& a);

/// Draws measure parameters from the per-kind ranges used for tree splits.
/// Deterministic given the stream state. A non-positive value stddev falls
/// back to 1.
DistanceMeasure sample_parameters(MeasureKind kind, const DatasetStats& stats, RandomStream& rng);

/// Fixed canonical parameters for baseline pairwise-distance matrices
/// (full windows; WDTW g = 0.05, TWE nu = 1e-4 / lambda = 1, LCSS
/// epsilon = stddev / 2, MSM c = 1, ERP gap = 0).
DistanceMeasure default_measure(MeasureKind kind, const DatasetStats& stats);

/// All-pairs distance matrix: symmetric, zero diagonal. Errors from a pair
/// are rethrown with the offending (i, j) identified.
DissimilarityMatrix pairwise_distance_matrix(const TimeSeriesDataset& d,
                                             const DistanceMeasure& m,
                                             int threads = 0);

}  // namespace pfgap
