#pragma once

#include <optional>
#include <vector>

#include "pfgap/forest.hpp"
#include "pfgap/matrices.hpp"

namespace pfgap {

/// GAP proximities of a bootstrap-trained forest. Row i averages, over the
/// trees where i is out-of-bag, the bootstrap-multiplicity share of each
/// in-bag point occupying i's leaf. Defined rows sum to 1; rows of
/// never-OOB indices are flagged undefined. Throws std::invalid_argument if
/// the forest was fitted without bootstrap sampling (every point in-bag
/// makes the measure degenerate).
SparseProximityMatrix gap_proximities(const ProximityForest& f, int threads = 0);

/// Classic forest proximity: the fraction of trees in which i and j share a
/// leaf, in-bag or not. Symmetric with a unit diagonal.
SparseProximityMatrix original_proximities(const ProximityForest& f);

/// Arithmetic-mean symmetrization of GAP rows. For an undefined row i the
/// transpose value is used as-is (the information that exists), and i stays
/// flagged in the output.
SparseProximityMatrix symmetrize(const SparseProximityMatrix& p);

/// Dissimilarity d = (1 - P)^exponent with a forced zero diagonal.
/// exponent 2 (default) spreads the typically small proximities; exponent 1
/// is the plain complement. Flags carry over from the input.
DissimilarityMatrix gap_dissimilarity(const SparseProximityMatrix& sym, int exponent = 2);

/// Weighted-majority vote over a raw (unsymmetrized) GAP row: for each
/// defined i, the class maximizing the summed proximity mass of same-class
/// neighbors (ties -> lowest class label). Undefined rows give nullopt.
/// Matches the forest's own OOB vote except at exact vote ties.
std::vector<std::optional<int>> proximity_weighted_predict(const SparseProximityMatrix& gap,
                                                           const std::vector<int>& labels,
                                                           const std::vector<int>& class_labels);

}  // namespace pfgap
