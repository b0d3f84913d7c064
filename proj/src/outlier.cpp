#include "pfgap/outlier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <stdexcept>

namespace pfgap {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    if (m % 2 == 1) return v[m / 2];
    return (v[m / 2 - 1] + v[m / 2]) / 2.0;
}

}  // namespace

Eigen::VectorXd raw_outlier_scores(const SparseProximityMatrix& sym,
                                   const std::vector<int>& labels, OutlierSumForm form,
                                   OutlierFlags* flags) {
    if (!sym.symmetrized)
        throw std::invalid_argument("outlier scores expect symmetrized proximities");
    const int n = sym.n;
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("outlier scores: labels size mismatch");
    const double size = static_cast<double>(n);

    Eigen::VectorXd raw(n);
    for (int i = 0; i < n; ++i) {
        bool has_same_class = false;
        for (int j = 0; j < n; ++j)
            if (j != i && labels[j] == labels[i]) {
                has_same_class = true;
                break;
            }
        if (!has_same_class) {
            raw[i] = kNan;
            if (flags) flags->undefined.push_back(i);
            continue;
        }

        double score;
        if (form == OutlierSumForm::Aggregate) {
            double denom = 0.0;
            for (const auto& e : sym.rows[i])
                if (e.index != i && labels[e.index] == labels[i]) denom += e.value * e.value;
            score = denom > 0.0 ? size / denom : std::numeric_limits<double>::infinity();
        } else {
            // Literal per-neighbor sum; zero-proximity terms are skipped
            // (they would be infinite).
            score = 0.0;
            for (const auto& e : sym.rows[i])
                if (e.index != i && labels[e.index] == labels[i] && e.value > 0.0)
                    score += size / (e.value * e.value);
        }
        if (!std::isfinite(score) || score > kOutlierScoreSentinel) {
            score = kOutlierScoreSentinel;
            if (flags) flags->clamped.push_back(i);
        }
        raw[i] = score;
    }
    return raw;
}

Eigen::VectorXd normalize_outlier_scores(const Eigen::VectorXd& raw,
                                         const std::vector<int>& labels, OutlierFlags* flags) {
    const int n = static_cast<int>(raw.size());
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("normalize: labels size mismatch");

    std::map<int, std::vector<double>> by_class;
    for (int i = 0; i < n; ++i)
        if (!std::isnan(raw[i])) by_class[labels[i]].push_back(raw[i]);

    std::map<int, std::pair<double, double>> center;  // class -> (median, mad)
    for (const auto& [cls, values] : by_class) {
        const double med = median_of(values);
        double mad = 0.0;
        for (double v : values) mad += std::abs(v - med);
        mad /= static_cast<double>(values.size());
        center[cls] = {med, mad};
    }

    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
        if (std::isnan(raw[i])) {
            out[i] = kNan;
            continue;
        }
        const auto& [med, mad] = center[labels[i]];
        if (mad == 0.0) {
            out[i] = 0.0;
            if (flags) flags->zero_mad.push_back(i);
            continue;
        }
        out[i] = (raw[i] - med) / mad;
    }
    return out;
}

int top_outlier(const Eigen::VectorXd& scores) {
    int best = -1;
    for (int i = 0; i < scores.size(); ++i) {
        if (std::isnan(scores[i])) continue;
        if (best < 0 || scores[i] > scores[best]) best = i;
    }
    if (best < 0) throw std::invalid_argument("top_outlier: every score is undefined");
    return best;
}

LofResult lof(const DissimilarityMatrix& dm, int k, double threshold) {
    const Eigen::MatrixXd& d = dm.values;
    const int n = static_cast<int>(d.rows());
    if (k < 1) throw std::invalid_argument("lof: k must be >= 1");
    if (n < k + 1)
        throw std::invalid_argument("lof: need at least k + 1 points (k = " + std::to_string(k) +
                                    ", n = " + std::to_string(n) + ")");

    // k-distance and (tie-extended) neighborhoods, indices ascending.
    Eigen::VectorXd kdist(n);
    std::vector<std::vector<int>> neighbors(n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> vals;
        vals.reserve(n - 1);
        for (int j = 0; j < n; ++j)
            if (j != i) vals.push_back(d(i, j));
        std::nth_element(vals.begin(), vals.begin() + (k - 1), vals.end());
        kdist[i] = vals[k - 1];
        for (int j = 0; j < n; ++j)
            if (j != i && d(i, j) <= kdist[i]) neighbors[i].push_back(j);
    }

    // Local reachability density; an all-zero neighborhood gives +inf.
    Eigen::VectorXd lrd(n);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j : neighbors[i]) sum += std::max(kdist[j], d(i, j));
        lrd[i] = static_cast<double>(neighbors[i].size()) / sum;
    }

    LofResult r;
    r.k = k;
    r.threshold = threshold;
    r.values.resize(n);
    r.outlier.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j : neighbors[i]) sum += lrd[j];
        const double mean = sum / static_cast<double>(neighbors[i].size());
        double value;
        if (std::isinf(lrd[i]))
            value = std::isinf(mean) ? 1.0 : 0.0;
        else
            value = mean / lrd[i];
        r.values[i] = value;
        r.outlier[i] = value > threshold ? 1 : 0;
    }
    return r;
}

std::vector<int> one_nn_predict(const DissimilarityMatrix& dm, const std::vector<int>& labels) {
    const Eigen::MatrixXd& d = dm.values;
    const int n = static_cast<int>(d.rows());
    if (n < 2) throw std::invalid_argument("1-NN: need at least 2 points");
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("1-NN: labels size mismatch");

    std::vector<int> out(n);
    for (int i = 0; i < n; ++i) {
        int arg = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (d(i, j) < best) {
                best = d(i, j);
                arg = j;
            }
        }
        out[i] = labels[arg];
    }
    return out;
}

F1Summary misclassified_outlier_f1(const std::vector<int>& predicted,
                                   const std::vector<int>& truth,
                                   const std::vector<std::uint8_t>& outlier) {
    if (predicted.size() != truth.size() || truth.size() != outlier.size())
        throw std::invalid_argument("f1: input vectors must have equal length");
    F1Summary s;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i] < 0) continue;  // no prediction available
        const bool correct = predicted[i] == truth[i];
        const bool out = outlier[i] != 0;
        if (correct && !out)
            ++s.tp;
        else if (!correct && out)
            ++s.tn;
        else if (!correct && !out)
            ++s.fp;
        else
            ++s.fn;
    }
    const long denom = 2 * s.tp + s.fp + s.fn;
    s.f1 = denom > 0 ? 2.0 * static_cast<double>(s.tp) / static_cast<double>(denom) : 0.0;
    return s;
}

OutlierReport build_outlier_report(const Eigen::VectorXd& raw, const Eigen::VectorXd& normalized,
                                   const LofResult& lof_result, const std::vector<int>& predicted,
                                   const std::vector<int>& truth, const OutlierFlags& flags) {
    const int n = static_cast<int>(raw.size());
    OutlierReport r;
    r.lof_k = lof_result.k;
    r.lof_threshold = lof_result.threshold;
    r.flags = flags;
    r.rows.reserve(n);
    for (int i = 0; i < n; ++i) {
        OutlierReport::Row row;
        row.index = i;
        row.true_label = truth[i];
        row.predicted_label = predicted[i];
        row.raw_score = raw[i];
        row.normalized_score = normalized[i];
        row.lof_value = lof_result.values[i];
        row.lof_outlier = lof_result.outlier[i] != 0;
        if (predicted[i] < 0) r.excluded.push_back(i);
        r.rows.push_back(row);
    }
    r.summary = misclassified_outlier_f1(predicted, truth, lof_result.outlier);
    return r;
}

namespace {

nlohmann::json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

}  // namespace

void save_outlier_report_json(const OutlierReport& r, const std::string& path) {
    nlohmann::json j;
    j["lof_k"] = r.lof_k;
    j["lof_threshold"] = r.lof_threshold;
    j["summary"] = {{"f1", r.summary.f1}, {"tp", r.summary.tp}, {"fp", r.summary.fp},
                    {"fn", r.summary.fn}, {"tn", r.summary.tn}};
    j["flags"] = {{"undefined", r.flags.undefined},
                  {"clamped", r.flags.clamped},
                  {"zero_mad", r.flags.zero_mad}};
    j["excluded"] = r.excluded;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json item;
        item["index"] = row.index;
        item["true_label"] = row.true_label;
        item["predicted_label"] = row.predicted_label;
        item["raw_score"] = number_or_null(row.raw_score);
        item["normalized_score"] = number_or_null(row.normalized_score);
        item["lof"] = row.lof_value;
        // Standard orientation: negative decision value marks an outlier.
        item["lof_decision"] = r.lof_threshold - row.lof_value;
        item["lof_outlier"] = row.lof_outlier;
        rows.push_back(std::move(item));
    }
    j["points"] = std::move(rows);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

void save_outlier_report_csv(const OutlierReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "index,true_label,predicted_label,raw_score,normalized_score,lof,lof_outlier\n";
    for (const auto& row : r.rows) {
        out << row.index << ',' << row.true_label << ',' << row.predicted_label << ','
            << format_double(row.raw_score) << ',' << format_double(row.normalized_score) << ','
            << format_double(row.lof_value) << ',' << (row.lof_outlier ? 1 : 0) << '\n';
    }
    out << "# f1," << format_double(r.summary.f1) << ",tp," << r.summary.tp << ",fp,"
        << r.summary.fp << ",fn," << r.summary.fn << ",tn," << r.summary.tn << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace pfgap
