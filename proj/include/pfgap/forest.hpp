#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pfgap/dataset.hpp"
#include "pfgap/distances.hpp"

namespace pfgap {

/// Whether the distance measure kind is drawn once per candidate split
/// (default) or once per tree.
enum class SelectionScope { PerSplit, PerTree };

struct ForestConfig {
    int trees = 100;      // ensemble size T
    int candidates = 5;   // candidate splits per node (r)
    int max_depth = -1;   // -1 = grow to purity
    std::vector<MeasureKind> measures{kAllMeasureKinds.begin(), kAllMeasureKinds.end()};
    SelectionScope selection_scope = SelectionScope::PerSplit;
    std::uint64_t seed = 42;
    bool bootstrap = true;  // GAP proximities require this
    int threads = 0;        // 0 = hardware concurrency
};

/// Internal nodes hold a measure plus one exemplar/child per class present
/// at the node (parallel arrays, >= 2 of each); leaves hold a class label
/// and no children. Exemplars are training-set indices, never copies.
struct TreeNode {
    DistanceMeasure measure;
    std::vector<int> exemplars;
    std::vector<int> children;
    int label = -1;

    bool is_leaf() const { return children.empty(); }
};

struct ProximityTree {
    std::vector<TreeNode> nodes;   // nodes[0] is the root
    std::vector<int> inbag_count;  // size n; bootstrap multiplicity per index
    std::vector<int> oob;          // ascending indices never drawn
    std::vector<int> leaf_of;      // size n; leaf node id for every index
};

struct BootstrapSample {
    std::vector<int> inbag_count;
    std::vector<int> oob;
};

/// n draws with replacement from {0..n-1}; OOB = indices never drawn.
BootstrapSample bootstrap_sample(int n, RandomStream& rng);

struct ProximityForest {
    ForestConfig config;
    std::vector<ProximityTree> trees;
    std::vector<int> labels;        // training labels (dense ids)
    std::vector<int> class_labels;  // distinct, ascending
    DatasetStats stats;
    std::string dataset_name;

    int size() const { return static_cast<int>(labels.size()); }
};

/// Gini impurity 1 - sum((c/total)^2) of a class-count histogram.
double gini_impurity(const std::vector<int>& class_counts);

/// Impurity decrease of a split: parent impurity minus the child-size
/// weighted mean of child impurities.
double gini_gain(const std::vector<int>& parent_counts,
                 const std::vector<std::vector<int>>& child_counts);

/// Grows one tree on the given bootstrap sample. At each impure node,
/// `config.candidates` splits are sampled (measure + parameters + one random
/// exemplar per class present); points go to their nearest exemplar and the
/// split with the highest Gini gain wins. Degenerate candidates (all points
/// on one branch) are discarded; if every candidate degenerates the node
/// becomes a majority-class leaf. `measure_pool` restricts the kinds
/// actually usable on this dataset.
ProximityTree grow_tree(const TimeSeriesDataset& d, BootstrapSample sample,
                        const ForestConfig& config, const DatasetStats& stats,
                        const std::vector<MeasureKind>& measure_pool, RandomStream& rng);

/// Deterministic descent: at each internal node follow the nearest exemplar
/// (ties -> lowest branch index). Returns the leaf node id.
int route(const ProximityTree& tree, const TimeSeriesDataset& train, const TimeSeries& x);

/// Trains T trees, each on its own bootstrap sample, with per-tree random
/// streams derived from (seed, tree index) so the result is independent of
/// the worker count. OOB points are routed and recorded per tree.
ProximityForest fit(const TimeSeriesDataset& d, const ForestConfig& config);

/// Majority vote of per-tree leaf classes (ties -> lowest class label).
int predict(const ProximityForest& f, const TimeSeriesDataset& train, const TimeSeries& x);

/// Vote restricted to trees where index i is out-of-bag; nullopt when i is
/// in-bag everywhere ("never-OOB").
std::optional<int> oob_predict(const ProximityForest& f, int i);

/// Coverage report: indices that are in-bag in every tree. Proximity rows
/// for these are undefined downstream.
std::vector<int> never_oob_indices(const ProximityForest& f);

// JSON model serialization; load -> predict is bit-identical to the saved
// forest's predictions.
void save_forest(const ProximityForest& f, const std::string& path);
ProximityForest load_forest(const std::string& path);
bool structurally_equal(const ProximityForest& a, const ProximityForest& b);

}  // namespace pfgap
