#include "pfgap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pfgap/matrices.hpp"

namespace pfgap {

std::vector<int> TimeSeriesDataset::labels() const {
    std::vector<int> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) out[i] = series[i].label;
    return out;
}

DatasetStats compute_stats(const TimeSeriesDataset& d) {
    DatasetStats s;
    if (d.series.empty()) return s;
    s.max_length = 0;
    s.min_length = d.series.front().length();
    double sum = 0.0, sum_sq = 0.0;
    long count = 0;
    for (const auto& ts : d.series) {
        s.max_length = std::max(s.max_length, ts.length());
        s.min_length = std::min(s.min_length, ts.length());
        sum += ts.values.sum();
        sum_sq += ts.values.squaredNorm();
        count += ts.length();
    }
    s.equal_lengths = s.max_length == s.min_length;
    const double mean = sum / static_cast<double>(count);
    const double var = sum_sq / static_cast<double>(count) - mean * mean;
    s.value_stddev = var > 0.0 ? std::sqrt(var) : 1.0;
    return s;
}

void validate_series(const Eigen::VectorXd& values, const std::string& context) {
    if (values.size() < 2)
        throw std::invalid_argument(context + ": series must have at least 2 points, got " +
                                    std::to_string(values.size()));
    if (!values.allFinite())
        throw std::invalid_argument(context + ": series contains a non-finite value");
}

void validate_for_training(const TimeSeriesDataset& d) {
    if (d.size() < 2) throw std::invalid_argument("training requires at least 2 series");
    if (d.num_classes() < 2) throw std::invalid_argument("training requires at least 2 classes");
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : line) {
        if (c == '\t' || c == ',' || c == ' ' || c == '\r') {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

double parse_value(const std::string& token, int line_no) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(token, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("line " + std::to_string(line_no) + ": non-numeric value '" +
                                    token + "'");
    }
    if (pos != token.size())
        throw std::invalid_argument("line " + std::to_string(line_no) + ": non-numeric value '" +
                                    token + "'");
    return v;
}

std::string stem_of(const std::string& path) {
    const std::size_t slash = path.find_last_of("/\\");
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    const std::size_t dot = base.find_last_of('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace

TimeSeriesDataset load_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::vector<std::string> raw_labels;
    std::vector<Eigen::VectorXd> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tokens = tokenize(line);
        if (tokens.empty()) continue;
        if (tokens.size() < 3)
            throw std::invalid_argument("line " + std::to_string(line_no) +
                                        ": expected a class label and at least 2 values");
        Eigen::VectorXd values(tokens.size() - 1);
        for (std::size_t t = 1; t < tokens.size(); ++t)
            values[static_cast<int>(t) - 1] = parse_value(tokens[t], line_no);
        validate_series(values, "line " + std::to_string(line_no));
        raw_labels.push_back(tokens[0]);
        rows.push_back(std::move(values));
    }
    if (rows.size() < 2) throw std::invalid_argument(path + ": no rows (need at least 2 series)");

    // Dense label ids: numeric tokens sort numerically, otherwise textually.
    std::vector<std::string> distinct = raw_labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    bool all_numeric = true;
    std::vector<std::pair<double, std::string>> numeric;
    for (const auto& tok : distinct) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(tok, &pos);
            if (pos != tok.size()) {
                all_numeric = false;
                break;
            }
            numeric.emplace_back(v, tok);
        } catch (const std::exception&) {
            all_numeric = false;
            break;
        }
    }
    if (all_numeric) {
        std::sort(numeric.begin(), numeric.end());
        for (std::size_t i = 0; i < numeric.size(); ++i) distinct[i] = numeric[i].second;
    }
    std::map<std::string, int> dense;
    for (std::size_t i = 0; i < distinct.size(); ++i) dense[distinct[i]] = static_cast<int>(i);

    TimeSeriesDataset d;
    d.name = stem_of(path);
    d.label_names = distinct;
    d.class_labels.resize(distinct.size());
    for (std::size_t i = 0; i < distinct.size(); ++i) d.class_labels[i] = static_cast<int>(i);
    d.series.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        d.series[i].values = std::move(rows[i]);
        d.series[i].label = dense[raw_labels[i]];
        d.series[i].id = static_cast<int>(i);
    }
    return d;
}

void write_tsv(const TimeSeriesDataset& d, std::ostream& out) {
    for (const auto& ts : d.series) {
        if (ts.label >= 0 && ts.label < static_cast<int>(d.label_names.size()))
            out << d.label_names[ts.label];
        else
            out << ts.label;
        for (int k = 0; k < ts.length(); ++k) out << '\t' << format_double(ts.values[k]);
        out << '\n';
    }
}

void save_tsv(const TimeSeriesDataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    write_tsv(d, out);
    if (!out) throw std::runtime_error("write failed: " + path);
}

TimeSeriesDataset synth_dataset(const SynthSpec& spec) {
    if (spec.classes < 2) throw std::invalid_argument("synth: need at least 2 classes");
    if (spec.per_class < 2) throw std::invalid_argument("synth: need at least 2 series per class");
    if (spec.length < 3) throw std::invalid_argument("synth: length must be at least 3");
    if (spec.noise < 0.0) throw std::invalid_argument("synth: noise must be nonnegative");

    constexpr double kPi = 3.14159265358979323846;
    TimeSeriesDataset d;
    d.name = "synthetic";
    RandomStream rng(spec.seed);
    for (int c = 0; c < spec.classes; ++c) {
        const int shape = c % 3;
        const double freq = 1.0 + static_cast<double>(c / 3);
        const double phase = 0.37 * static_cast<double>(c);
        for (int s = 0; s < spec.per_class; ++s) {
            Eigen::VectorXd v(spec.length);
            for (int t = 0; t < spec.length; ++t) {
                const double x = 2.0 * kPi * freq * static_cast<double>(t) /
                                     static_cast<double>(spec.length) +
                                 phase;
                double base = 0.0;
                switch (shape) {
                    case 0: base = std::sin(x); break;
                    case 1: base = std::sin(x) >= 0.0 ? 1.0 : -1.0; break;
                    default: {
                        const double frac = x / (2.0 * kPi);
                        base = 2.0 * (frac - std::floor(frac)) - 1.0;
                        break;
                    }
                }
                v[t] = base + spec.noise * rng.next_normal();
            }
            TimeSeries ts;
            ts.values = std::move(v);
            ts.label = c;
            ts.id = static_cast<int>(d.series.size());
            d.series.push_back(std::move(ts));
        }
    }
    d.class_labels.resize(spec.classes);
    d.label_names.resize(spec.classes);
    for (int c = 0; c < spec.classes; ++c) {
        d.class_labels[c] = c;
        d.label_names[c] = std::to_string(c);
    }
    return d;
}

void znormalize(TimeSeriesDataset& d) {
    for (auto& ts : d.series) {
        const double mean = ts.values.mean();
        const double var =
            (ts.values.array() - mean).square().sum() / static_cast<double>(ts.length());
        const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
        ts.values = (ts.values.array() - mean) / sd;
    }
    d.znormalized = true;
}

}  // namespace pfgap
