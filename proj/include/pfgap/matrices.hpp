#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

namespace pfgap {

enum class ProximityKind { GAP, Original };

struct ProximityEntry {
    int index;
    double value;
};

/// Row-indexed sparse proximity matrix. GAP rows are generally asymmetric
/// and row-stochastic; rows of never-OOB points are undefined and listed in
/// `undefined_rows`. Original-style proximities are symmetric with a unit
/// diagonal and have no undefined rows.
struct SparseProximityMatrix {
    int n = 0;
    ProximityKind kind = ProximityKind::GAP;
    bool symmetrized = false;
    std::vector<std::vector<ProximityEntry>> rows;  // each sorted by index
    std::vector<int> undefined_rows;                // ascending

    double at(int i, int j) const;
    bool row_defined(int i) const;
    double row_sum(int i) const;
    Eigen::MatrixXd to_dense() const;
};

/// Symmetric nonnegative dissimilarities with a zero diagonal. `flagged`
/// carries indices whose source proximity rows were undefined; downstream
/// consumers exclude them instead of imputing values.
struct DissimilarityMatrix {
    Eigen::MatrixXd values;
    std::vector<int> flagged;

    int size() const { return static_cast<int>(values.rows()); }
};

/// Validates and wraps a symmetric matrix (throws std::invalid_argument on
/// asymmetry, a nonzero diagonal, negative or non-finite entries).
DissimilarityMatrix make_dissimilarity(Eigen::MatrixXd values, std::vector<int> flagged = {});

// CSV export/import. Dense form: n header-less comma-separated rows.
// Triplet form: an "i,j,value" header followed by one nonzero per line.
// Numbers use shortest round-trip formatting.
void write_dense_csv(const Eigen::MatrixXd& m, std::ostream& out);
void write_triplet_csv(const SparseProximityMatrix& m, std::ostream& out);
void save_dense_csv(const Eigen::MatrixXd& m, const std::string& path);
void save_triplet_csv(const SparseProximityMatrix& m, const std::string& path);

/// Reads either CSV form back into a dense matrix (triplet files are
/// recognized by their header; matrix size is max index + 1).
Eigen::MatrixXd load_matrix_csv(const std::string& path);

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace pfgap
