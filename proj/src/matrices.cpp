#include "pfgap/matrices.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pfgap {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double SparseProximityMatrix::at(int i, int j) const {
    const auto& row = rows[i];
    auto it = std::lower_bound(row.begin(), row.end(), j,
                               [](const ProximityEntry& e, int v) { return e.index < v; });
    return (it != row.end() && it->index == j) ? it->value : 0.0;
}

bool SparseProximityMatrix::row_defined(int i) const {
    return !std::binary_search(undefined_rows.begin(), undefined_rows.end(), i);
}

double SparseProximityMatrix::row_sum(int i) const {
    double s = 0.0;
    for (const auto& e : rows[i]) s += e.value;
    return s;
}

Eigen::MatrixXd SparseProximityMatrix::to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (const auto& e : rows[i]) m(i, e.index) = e.value;
    return m;
}

DissimilarityMatrix make_dissimilarity(Eigen::MatrixXd values, std::vector<int> flagged) {
    if (values.rows() != values.cols())
        throw std::invalid_argument("dissimilarity matrix must be square");
    if (!values.allFinite())
        throw std::invalid_argument("dissimilarity matrix contains a non-finite value");
    const int n = static_cast<int>(values.rows());
    for (int i = 0; i < n; ++i) {
        if (values(i, i) != 0.0)
            throw std::invalid_argument("dissimilarity diagonal must be zero at index " +
                                        std::to_string(i));
        for (int j = i + 1; j < n; ++j) {
            if (values(i, j) < 0.0)
                throw std::invalid_argument("negative dissimilarity at (" + std::to_string(i) +
                                            "," + std::to_string(j) + ")");
            const double gap = std::abs(values(i, j) - values(j, i));
            if (gap > 1e-9 * std::max(1.0, std::abs(values(i, j))))
                throw std::invalid_argument("dissimilarity matrix is not symmetric at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
    std::sort(flagged.begin(), flagged.end());
    return DissimilarityMatrix{std::move(values), std::move(flagged)};
}

void write_dense_csv(const Eigen::MatrixXd& m, std::ostream& out) {
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

void write_triplet_csv(const SparseProximityMatrix& m, std::ostream& out) {
    out << "i,j,value\n";
    for (int i = 0; i < m.n; ++i)
        for (const auto& e : m.rows[i])
            out << i << ',' << e.index << ',' << format_double(e.value) << '\n';
}

void save_dense_csv(const Eigen::MatrixXd& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    write_dense_csv(m, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

void save_triplet_csv(const SparseProximityMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    write_triplet_csv(m, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

std::vector<double> parse_csv_row(const std::string& line, int line_no) {
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
        std::size_t end = line.find(',', start);
        if (end == std::string::npos) end = line.size();
        std::string tok = line.substr(start, end - start);
        while (!tok.empty() && (tok.back() == '\r' || tok.back() == ' ')) tok.pop_back();
        while (!tok.empty() && tok.front() == ' ') tok.erase(tok.begin());
        if (!tok.empty()) {
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &pos);
            } catch (const std::exception&) {
                throw std::invalid_argument("csv line " + std::to_string(line_no) +
                                            ": bad number '" + tok + "'");
            }
            if (pos != tok.size())
                throw std::invalid_argument("csv line " + std::to_string(line_no) +
                                            ": bad number '" + tok + "'");
            row.push_back(v);
        }
        if (end == line.size()) break;
        start = end + 1;
    }
    return row;
}

}  // namespace

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open matrix file: " + path);
    std::string line;
    bool triplet = false;
    std::vector<std::vector<double>> rows;
    int line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        if (first) {
            first = false;
            std::string header = line;
            header.erase(std::remove_if(header.begin(), header.end(),
                                        [](char c) { return c == ' ' || c == '\r'; }),
                         header.end());
            if (header == "i,j,value") {
                triplet = true;
                continue;
            }
        }
        rows.push_back(parse_csv_row(line, line_no));
    }
    if (rows.empty()) throw std::invalid_argument(path + ": empty matrix file");

    if (triplet) {
        int n = 0;
        for (const auto& r : rows) {
            if (r.size() != 3)
                throw std::invalid_argument(path + ": triplet rows must have 3 fields");
            n = std::max({n, static_cast<int>(r[0]) + 1, static_cast<int>(r[1]) + 1});
        }
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        for (const auto& r : rows) m(static_cast<int>(r[0]), static_cast<int>(r[1])) = r[2];
        return m;
    }

    const std::size_t cols = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != cols)
            throw std::invalid_argument(path + ": ragged rows in dense matrix file");
    if (rows.size() != cols)
        throw std::invalid_argument(path + ": dense matrix file must be square");
    Eigen::MatrixXd m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
    return m;
}

}  // namespace pfgap
