#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "pfgap/matrices.hpp"

namespace pfgap {

struct MdsOptions {
    int max_iterations = 300;
    double tolerance = 1e-6;  // relative stress change stopping rule
    std::uint64_t seed = 0;
    int random_restarts = 0;  // extra random-init runs; best stress wins
};

/// MDS result. `stress` is the raw stress sum_{i<j} (d_ij - |x_i - x_j|)^2
/// for the metric solver and Kruskal stress-1 for the non-metric one.
/// `stress_trace` is non-increasing.
struct Embedding {
    Eigen::MatrixXd coordinates;  // n x dim
    double stress = 0.0;
    std::vector<double> stress_trace;
    bool metric = true;
    std::string warning;

    int size() const { return static_cast<int>(coordinates.rows()); }
    int dim() const { return static_cast<int>(coordinates.cols()); }
};

/// Raw stress of a configuration against target dissimilarities.
double raw_stress(const Eigen::MatrixXd& coordinates, const Eigen::MatrixXd& dissim);

/// Metric MDS by SMACOF majorization from a classical-scaling start
/// (deterministic). Stress never increases across iterations. All-zero
/// input collapses to the origin with a warning; NaN input is rejected.
/// Requires n >= dim + 1.
Embedding mds_metric(const DissimilarityMatrix& d, int dim = 2, const MdsOptions& opts = {});

/// Non-metric MDS: SMACOF steps alternated with isotonic regression of the
/// embedded distances against the rank order of the input, minimizing
/// Kruskal stress-1. Initialized from the metric solution; a step that
/// fails to improve is rolled back, so the recorded trace is non-increasing.
Embedding mds_nonmetric(const DissimilarityMatrix& d, int dim = 2, const MdsOptions& opts = {});

/// Pool-adjacent-violators fit: least-squares non-decreasing approximation.
Eigen::VectorXd isotonic_fit(const Eigen::VectorXd& y);

struct KmeansOptions {
    int restarts = 10;
    int max_iterations = 300;
    std::uint64_t seed = 0;
};

struct KmeansResult {
    std::vector<int> assignment;
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
};

/// Lloyd iterations with k-means++ seeding; best inertia over restarts.
/// An emptied cluster is re-seeded from the point farthest from its
/// centroid.
KmeansResult kmeans(const Eigen::MatrixXd& points, int k, const KmeansOptions& opts = {});

/// Maximum-score bipartite assignment on a square score matrix; returns the
/// column matched to each row.
std::vector<int> optimal_assignment(const Eigen::MatrixXd& score);

/// Clustering accuracy of an embedding: k-means with k = number of classes,
/// clusters mapped to classes by the accuracy-maximizing bijection.
double kmeans_cluster_score(const Embedding& e, const std::vector<int>& labels, int k,
                            const KmeansOptions& opts = {});

/// CSV with one "id,label,x1..xdim" row per point.
void save_embedding_csv(const Embedding& e, const std::vector<int>& labels,
                        const std::vector<int>& ids, const std::string& path);

/// Static SVG scatter colored by label; `highlight_index` (into the
/// embedding rows) is drawn in red, or pass -1 for none.
void save_embedding_svg(const Embedding& e, const std::vector<int>& labels,
                        const std::string& path, int highlight_index = -1);

}  // namespace pfgap
