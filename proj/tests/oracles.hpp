#pragma once

// Test-only reference implementations, kept independent of the library's
// optimized code paths. Distance oracles enumerate every admissible
// alignment / edit script by depth-first walk and take the minimum over
// complete paths; the GAP oracle evaluates the proximity definition
// literally with explicit per-tree multiset intersections; the LOF oracle
// follows the textbook definition with plain loops.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "pfgap/dataset.hpp"
#include "pfgap/distances.hpp"
#include "pfgap/forest.hpp"

namespace oracle {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double sq(double x, double y) {
    const double d = x - y;
    return d * d;
}

inline int band_of(int window, int la, int lb) {
    if (window < 0) return std::max(la, lb);
    return std::max(window, std::abs(la - lb));
}

inline double dtw(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int window) {
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());
    const int band = band_of(window, la, lb);
    double best = kInf;
    std::function<void(int, int, double)> walk = [&](int i, int j, double acc) {
        if (std::abs(i - j) > band) return;
        acc = sq(a[i], b[j]) + acc;
        if (i == la - 1 && j == lb - 1) {
            best = std::min(best, acc);
            return;
        }
        if (i + 1 < la && j + 1 < lb) walk(i + 1, j + 1, acc);
        if (i + 1 < la) walk(i + 1, j, acc);
        if (j + 1 < lb) walk(i, j + 1, acc);
    };
    walk(0, 0, 0.0);
    return best;
}

inline double wdtw(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double g) {
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());
    const int l = std::max(la, lb);
    double best = kInf;
    std::function<void(int, int, double)> walk = [&](int i, int j, double acc) {
        acc = pfgap::wdtw_weight(std::abs((i + 1) - (j + 1)), g, l) * sq(a[i], b[j]) + acc;
        if (i == la - 1 && j == lb - 1) {
            best = std::min(best, acc);
            return;
        }
        if (i + 1 < la && j + 1 < lb) walk(i + 1, j + 1, acc);
        if (i + 1 < la) walk(i + 1, j, acc);
        if (j + 1 < lb) walk(i, j + 1, acc);
    };
    walk(0, 0, 0.0);
    return best;
}

inline double twe(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double nu, double lambda) {
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());
    auto ap = [&](int i) { return i == 0 ? 0.0 : a[i - 1]; };
    auto bp = [&](int j) { return j == 0 ? 0.0 : b[j - 1]; };
    double best = kInf;
    // Boundary states (i, 0) and (0, j) are infinite in the standard TWED
    // recurrence, so an edit script must open with a match.
    std::function<void(int, int, double)> walk = [&](int i, int j, double acc) {
        if (i == la && j == lb) {
            best = std::min(best, acc);
            return;
        }
        if (i < la && j < lb)
            walk(i + 1, j + 1,
                 acc + sq(ap(i + 1), bp(j + 1)) + sq(ap(i), bp(j)) +
                     2.0 * nu * static_cast<double>(std::abs((i + 1) - (j + 1))));
        if (i < la && j >= 1) walk(i + 1, j, acc + sq(ap(i + 1), ap(i)) + nu + lambda);
        if (j < lb && i >= 1) walk(i, j + 1, acc + sq(bp(j + 1), bp(j)) + nu + lambda);
    };
    walk(0, 0, 0.0);
    return best;
}

inline double msm(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double c) {
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());
    double best = kInf;
    std::function<void(int, int, double)> walk = [&](int i, int j, double acc) {
        if (i == la - 1 && j == lb - 1) {
            best = std::min(best, acc);
            return;
        }
        if (i + 1 < la && j + 1 < lb)
            walk(i + 1, j + 1, acc + std::abs(a[i + 1] - b[j + 1]));
        if (i + 1 < la) walk(i + 1, j, acc + pfgap::msm_transition_cost(a[i + 1], a[i], b[j], c));
        if (j + 1 < lb) walk(i, j + 1, acc + pfgap::msm_transition_cost(b[j + 1], b[j], a[i], c));
    };
    walk(0, 0, std::abs(a[0] - b[0]));
    return best;
}

inline double erp(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double g, int window) {
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());
    const int band = band_of(window, la, lb);
    double best = kInf;
    // (i, j) = number of consumed elements on each side.
    std::function<void(int, int, double)> walk = [&](int i, int j, double acc) {
        if (std::abs(i - j) > band) return;
        if (i == la && j == lb) {
            best = std::min(best, acc);
            return;
        }
        if (i < la && j < lb) walk(i + 1, j + 1, acc + std::abs(a[i] - b[j]));
        if (i < la) walk(i + 1, j, acc + std::abs(a[i] - g));
        if (j < lb) walk(i, j + 1, acc + std::abs(b[j] - g));
    };
    walk(0, 0, 0.0);
    return best;
}

inline int lcss_match_length(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double eps,
                             int band, int i, int j) {
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());
    if (i == la || j == lb) return 0;
    int best = std::max(lcss_match_length(a, b, eps, band, i + 1, j),
                        lcss_match_length(a, b, eps, band, i, j + 1));
    if (std::abs(i - j) <= band && std::abs(a[i] - b[j]) <= eps)
        best = std::max(best, 1 + lcss_match_length(a, b, eps, band, i + 1, j + 1));
    return best;
}

inline double lcss(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double eps, int window) {
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());
    const int band = window < 0 ? std::max(la, lb) : window;
    const int lcs = lcss_match_length(a, b, eps, band, 0, 0);
    return 1.0 - static_cast<double>(lcs) / static_cast<double>(std::min(la, lb));
}

inline double ed(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double acc = 0.0;
    for (int i = 0; i < a.size(); ++i) acc += sq(a[i], b[i]);
    return std::sqrt(acc);
}

/// Dispatch matching pfgap::distance for a fully parameterized measure.
inline double distance(const pfgap::DistanceMeasure& m, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& b) {
    using pfgap::MeasureKind;
    switch (m.kind) {
        case MeasureKind::DTW: return dtw(a, b, m.params.window);
        case MeasureKind::DDTW:
            return dtw(pfgap::derivative_transform(a), pfgap::derivative_transform(b),
                       m.params.window);
        case MeasureKind::WDTW: return wdtw(a, b, m.params.weight);
        case MeasureKind::WDDTW:
            return wdtw(pfgap::derivative_transform(a), pfgap::derivative_transform(b),
                        m.params.weight);
        case MeasureKind::TWE: return twe(a, b, m.params.stiffness, m.params.penalty);
        case MeasureKind::ED: return ed(a, b);
        case MeasureKind::LCSS: return lcss(a, b, m.params.epsilon, m.params.window);
        case MeasureKind::MSM: return msm(a, b, m.params.cost);
        case MeasureKind::ERP: return erp(a, b, m.params.gap_value, m.params.window);
    }
    return kInf;
}

/// Literal GAP proximity evaluation: per tree, re-route the out-of-bag
/// point, intersect its leaf with the in-bag multiset explicitly, and
/// average over the trees where i is out-of-bag. NaN rows mark never-OOB
/// indices.
inline Eigen::MatrixXd gap_matrix(const pfgap::ProximityForest& f,
                                  const pfgap::TimeSeriesDataset& data) {
    const int n = f.size();
    Eigen::MatrixXd out(n, n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(n, 0.0);
        int oob_trees = 0;
        for (const auto& tree : f.trees) {
            if (tree.inbag_count[i] != 0) continue;  // i in-bag here
            ++oob_trees;
            const int leaf = pfgap::route(tree, data, data.series[i]);
            long mass = 0;
            for (int j = 0; j < n; ++j)
                if (tree.inbag_count[j] > 0 && tree.leaf_of[j] == leaf)
                    mass += tree.inbag_count[j];
            if (mass == 0) continue;
            for (int j = 0; j < n; ++j)
                if (tree.inbag_count[j] > 0 && tree.leaf_of[j] == leaf)
                    row[j] += static_cast<double>(tree.inbag_count[j]) / static_cast<double>(mass);
        }
        if (oob_trees == 0) {
            out.row(i).setConstant(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        for (int j = 0; j < n; ++j) out(i, j) = row[j] / static_cast<double>(oob_trees);
    }
    return out;
}

/// Textbook LOF with plain loops (k-distance, tie-extended neighborhoods,
/// reachability, local reachability density).
inline Eigen::VectorXd lof(const Eigen::MatrixXd& d, int k) {
    const int n = static_cast<int>(d.rows());
    Eigen::VectorXd kdist(n);
    std::vector<std::vector<int>> nbrs(n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> vals;
        for (int j = 0; j < n; ++j)
            if (j != i) vals.push_back(d(i, j));
        std::sort(vals.begin(), vals.end());
        kdist[i] = vals[k - 1];
        for (int j = 0; j < n; ++j)
            if (j != i && d(i, j) <= kdist[i]) nbrs[i].push_back(j);
    }
    Eigen::VectorXd lrd(n);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j : nbrs[i]) sum += std::max(kdist[j], d(i, j));
        lrd[i] = static_cast<double>(nbrs[i].size()) / sum;
    }
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j : nbrs[i]) sum += lrd[j];
        const double mean = sum / static_cast<double>(nbrs[i].size());
        if (std::isinf(lrd[i]))
            out[i] = std::isinf(mean) ? 1.0 : 0.0;
        else
            out[i] = mean / lrd[i];
    }
    return out;
}

/// Random series for oracle batteries.
inline Eigen::VectorXd random_series(pfgap::RandomStream& rng, int min_len, int max_len) {
    const int len = min_len + static_cast<int>(rng.next_index(max_len - min_len + 1));
    Eigen::VectorXd v(len);
    for (int i = 0; i < len; ++i) v[i] = rng.next_uniform(-2.0, 2.0);
    return v;
}

}  // namespace oracle
