#include "pfgap/proximity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "pfgap/parallel.hpp"

namespace pfgap {

namespace {

// In-bag occupants of one leaf with their bootstrap multiplicities.
struct LeafGroup {
    std::vector<std::pair<int, int>> members;  // (index, multiplicity), index-ascending
    long mass = 0;                             // total multiplicity
};

std::map<int, LeafGroup> inbag_by_leaf(const ProximityTree& tree) {
    std::map<int, LeafGroup> groups;
    const int n = static_cast<int>(tree.inbag_count.size());
    for (int j = 0; j < n; ++j) {
        const int c = tree.inbag_count[j];
        if (c == 0) continue;
        LeafGroup& g = groups[tree.leaf_of[j]];
        g.members.emplace_back(j, c);
        g.mass += c;
    }
    return groups;
}

}  // namespace

SparseProximityMatrix gap_proximities(const ProximityForest& f, int threads) {
    if (!f.config.bootstrap)
        throw std::invalid_argument(
            "GAP proximities need a bootstrap-trained forest: without bootstrap sampling every "
            "point is in-bag in every tree and no out-of-bag rows exist");
    const int n = f.size();

    // Per-tree leaf occupancy once, then row accumulation. Values are added
    // in ascending tree order so results do not depend on scheduling.
    std::vector<std::map<int, LeafGroup>> groups(f.trees.size());
    parallel_for(f.trees.size(), threads, [&](std::size_t t) { groups[t] = inbag_by_leaf(f.trees[t]); });

    std::vector<std::map<int, double>> acc(n);
    std::vector<int> oob_trees(n, 0);
    for (std::size_t t = 0; t < f.trees.size(); ++t) {
        const ProximityTree& tree = f.trees[t];
        for (int i : tree.oob) {
            ++oob_trees[i];
            const auto it = groups[t].find(tree.leaf_of[i]);
            if (it == groups[t].end()) continue;  // leaf with no in-bag occupants
            const LeafGroup& g = it->second;
            auto& row = acc[i];
            for (const auto& [j, c] : g.members)
                row[j] += static_cast<double>(c) / static_cast<double>(g.mass);
        }
    }

    SparseProximityMatrix p;
    p.n = n;
    p.kind = ProximityKind::GAP;
    p.rows.resize(n);
    bool any_defined = false;
    for (int i = 0; i < n; ++i) {
        if (oob_trees[i] == 0) {
            p.undefined_rows.push_back(i);
            continue;
        }
        any_defined = true;
        auto& row = p.rows[i];
        row.reserve(acc[i].size());
        for (const auto& [j, v] : acc[i])
            row.push_back({j, v / static_cast<double>(oob_trees[i])});
    }
    if (!any_defined)
        throw std::invalid_argument(
            "GAP proximities are undefined: no point was out-of-bag in any tree");
    return p;
}

SparseProximityMatrix original_proximities(const ProximityForest& f) {
    const int n = f.size();
    const double t_count = static_cast<double>(f.trees.size());

    std::vector<std::map<int, double>> acc(n);
    for (const auto& tree : f.trees) {
        std::map<int, std::vector<int>> occupants;  // leaf -> all indices, ascending
        for (int i = 0; i < n; ++i) occupants[tree.leaf_of[i]].push_back(i);
        for (const auto& [leaf, members] : occupants) {
            (void)leaf;
            for (int i : members)
                for (int j : members) acc[i][j] += 1.0;
        }
    }

    SparseProximityMatrix p;
    p.n = n;
    p.kind = ProximityKind::Original;
    p.symmetrized = true;
    p.rows.resize(n);
    for (int i = 0; i < n; ++i) {
        auto& row = p.rows[i];
        row.reserve(acc[i].size());
        for (const auto& [j, v] : acc[i]) row.push_back({j, v / t_count});
    }
    return p;
}

SparseProximityMatrix symmetrize(const SparseProximityMatrix& p) {
    if (p.kind != ProximityKind::GAP)
        throw std::invalid_argument("symmetrize expects raw GAP proximities");
    if (p.symmetrized) return p;

    // Each directed entry contributes half its value to both orientations;
    // when the opposite row is undefined it contributes in full instead
    // (the mean degenerates to the one value that exists).
    const int n = p.n;
    std::vector<std::map<int, double>> acc(n);
    for (int i = 0; i < n; ++i) {
        for (const auto& e : p.rows[i]) {
            const int j = e.index;
            const double share = (j != i && p.row_defined(j)) ? 0.5 * e.value : e.value;
            if (j == i) {
                acc[i][i] += share;
                continue;
            }
            acc[i][j] += share;
            acc[j][i] += share;
        }
    }

    SparseProximityMatrix out;
    out.n = n;
    out.kind = ProximityKind::GAP;
    out.symmetrized = true;
    out.undefined_rows = p.undefined_rows;
    out.rows.resize(n);
    for (int i = 0; i < n; ++i) {
        auto& row = out.rows[i];
        row.reserve(acc[i].size());
        for (const auto& [j, v] : acc[i]) row.push_back({j, v});
    }
    return out;
}

DissimilarityMatrix gap_dissimilarity(const SparseProximityMatrix& sym, int exponent) {
    if (exponent != 1 && exponent != 2)
        throw std::invalid_argument("dissimilarity exponent must be 1 or 2");
    if (!sym.symmetrized)
        throw std::invalid_argument("gap_dissimilarity expects symmetrized proximities");

    const int n = sym.n;
    Eigen::MatrixXd dense = sym.to_dense();
    Eigen::MatrixXd d(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                d(i, j) = 0.0;
                continue;
            }
            const double base = 1.0 - dense(i, j);
            d(i, j) = exponent == 2 ? base * base : base;
        }
    }
    return make_dissimilarity(std::move(d), sym.undefined_rows);
}

std::vector<std::optional<int>> proximity_weighted_predict(const SparseProximityMatrix& gap,
                                                           const std::vector<int>& labels,
                                                           const std::vector<int>& class_labels) {
    if (gap.kind != ProximityKind::GAP || gap.symmetrized)
        throw std::invalid_argument("proximity_weighted_predict expects raw GAP rows");
    if (static_cast<int>(labels.size()) != gap.n)
        throw std::invalid_argument("labels size does not match proximity matrix");

    const int num_classes = class_labels.empty() ? 1 : class_labels.back() + 1;
    std::vector<std::optional<int>> out(gap.n);
    for (int i = 0; i < gap.n; ++i) {
        if (!gap.row_defined(i)) continue;
        std::vector<double> mass(num_classes, 0.0);
        for (const auto& e : gap.rows[i]) mass[labels[e.index]] += e.value;
        int best = 0;
        for (int c = 1; c < num_classes; ++c)
            if (mass[c] > mass[best]) best = c;
        out[i] = best;
    }
    return out;
}

}  // namespace pfgap
