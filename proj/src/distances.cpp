#include "pfgap/distances.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pfgap/parallel.hpp"

namespace pfgap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double sq(double x, double y) {
    const double d = x - y;
    return d * d;
}

// Sakoe-Chiba half-width actually applied: a window below the length
// difference would leave the end cell unreachable, so the band is widened
// to the difference. -1 means no constraint.
inline int effective_band(int window, int la, int lb) {
    if (window < 0) return std::max(la, lb);
    return std::max(window, std::abs(la - lb));
}

void check_window(int window, const char* what) {
    if (window < -1)
        throw std::invalid_argument(std::string(what) + ": window must be -1 (full) or >= 0");
}

}  // namespace

const char* measure_name(MeasureKind kind) {
    switch (kind) {
        case MeasureKind::DTW: return "DTW";
        case MeasureKind::DDTW: return "DDTW";
        case MeasureKind::WDTW: return "WDTW";
        case MeasureKind::WDDTW: return "WDDTW";
        case MeasureKind::TWE: return "TWE";
        case MeasureKind::ED: return "ED";
        case MeasureKind::LCSS: return "LCSS";
        case MeasureKind::MSM: return "MSM";
        case MeasureKind::ERP: return "ERP";
    }
    return "?";
}

std::optional<MeasureKind> measure_from_name(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "EUCLIDEAN") upper = "ED";
    for (MeasureKind k : kAllMeasureKinds)
        if (upper == measure_name(k)) return k;
    return std::nullopt;
}

void validate(const DistanceMeasure& m) {
    const MeasureParams& p = m.params;
    switch (m.kind) {
        case MeasureKind::DTW:
        case MeasureKind::DDTW:
            check_window(p.window, measure_name(m.kind));
            break;
        case MeasureKind::WDTW:
        case MeasureKind::WDDTW:
            if (!(p.weight >= 0.0) || !std::isfinite(p.weight))
                throw std::invalid_argument("WDTW: weight must be finite and >= 0");
            break;
        case MeasureKind::TWE:
            if (!(p.stiffness > 0.0)) throw std::invalid_argument("TWE: stiffness must be > 0");
            if (!(p.penalty >= 0.0)) throw std::invalid_argument("TWE: penalty must be >= 0");
            break;
        case MeasureKind::ED:
            break;
        case MeasureKind::LCSS:
            if (!(p.epsilon > 0.0)) throw std::invalid_argument("LCSS: epsilon must be > 0");
            check_window(p.window, "LCSS");
            break;
        case MeasureKind::MSM:
            if (!(p.cost > 0.0)) throw std::invalid_argument("MSM: cost must be > 0");
            break;
        case MeasureKind::ERP:
            if (!std::isfinite(p.gap_value))
                throw std::invalid_argument("ERP: gap value must be finite");
            check_window(p.window, "ERP");
            break;
    }
}

double dtw_distance(const VectorRef& a, const VectorRef& b, int window) {
    check_window(window, "DTW");
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());
    const int band = effective_band(window, la, lb);

    std::vector<double> prev(lb + 1, kInf), curr(lb + 1, kInf);
    prev[0] = 0.0;
    for (int i = 1; i <= la; ++i) {
        std::fill(curr.begin(), curr.end(), kInf);
        const int jlo = std::max(1, i - band);
        const int jhi = std::min(lb, i + band);
        for (int j = jlo; j <= jhi; ++j) {
            const double best = std::min({prev[j - 1], prev[j], curr[j - 1]});
            if (best < kInf) curr[j] = sq(a[i - 1], b[j - 1]) + best;
        }
        std::swap(prev, curr);
    }
    return prev[lb];
}

double wdtw_weight(int delta, double weight, int length) {
    return 1.0 /
           (1.0 + std::exp(-weight * (static_cast<double>(delta) -
                                      0.5 * static_cast<double>(length))));
}

double wdtw_distance(const VectorRef& a, const VectorRef& b, double weight) {
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());
    const int l = std::max(la, lb);

    std::vector<double> weights(l);
    for (int delta = 0; delta < l; ++delta) weights[delta] = wdtw_weight(delta, weight, l);

    std::vector<double> prev(lb + 1, kInf), curr(lb + 1, kInf);
    prev[0] = 0.0;
    for (int i = 1; i <= la; ++i) {
        std::fill(curr.begin(), curr.end(), kInf);
        for (int j = 1; j <= lb; ++j) {
            const double best = std::min({prev[j - 1], prev[j], curr[j - 1]});
            curr[j] = weights[std::abs(i - j)] * sq(a[i - 1], b[j - 1]) + best;
        }
        std::swap(prev, curr);
    }
    return prev[lb];
}

double twe_distance(const VectorRef& a, const VectorRef& b, double stiffness, double penalty) {
    if (!(stiffness > 0.0)) throw std::invalid_argument("TWE: stiffness must be > 0");
    if (!(penalty >= 0.0)) throw std::invalid_argument("TWE: penalty must be >= 0");
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());
    // Series padded with a leading zero sample, the usual convention.
    auto ap = [&](int i) { return i == 0 ? 0.0 : a[i - 1]; };
    auto bp = [&](int j) { return j == 0 ? 0.0 : b[j - 1]; };

    std::vector<double> prev(lb + 1, kInf), curr(lb + 1, kInf);
    prev[0] = 0.0;
    for (int i = 1; i <= la; ++i) {
        curr[0] = kInf;
        for (int j = 1; j <= lb; ++j) {
            const double match = prev[j - 1] + sq(ap(i), bp(j)) + sq(ap(i - 1), bp(j - 1)) +
                                 2.0 * stiffness * static_cast<double>(std::abs(i - j));
            const double del_a = prev[j] + sq(ap(i), ap(i - 1)) + stiffness + penalty;
            const double del_b = curr[j - 1] + sq(bp(j), bp(j - 1)) + stiffness + penalty;
            curr[j] = std::min({match, del_a, del_b});
        }
        std::swap(prev, curr);
    }
    return prev[lb];
}

double euclidean_distance(const VectorRef& a, const VectorRef& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("euclidean distance requires equal-length series (got " +
                                    std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                                    ")");
    // Sequential accumulation keeps results identical across call sites.
    double acc = 0.0;
    for (int i = 0; i < a.size(); ++i) acc += sq(a[i], b[i]);
    return std::sqrt(acc);
}

double lcss_distance(const VectorRef& a, const VectorRef& b, double epsilon, int window) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("LCSS: epsilon must be > 0");
    check_window(window, "LCSS");
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());
    const int band = window < 0 ? std::max(la, lb) : window;

    std::vector<int> prev(lb + 1, 0), curr(lb + 1, 0);
    for (int i = 1; i <= la; ++i) {
        for (int j = 1; j <= lb; ++j) {
            int best = std::max(prev[j], curr[j - 1]);
            if (std::abs(i - j) <= band && std::abs(a[i - 1] - b[j - 1]) <= epsilon)
                best = std::max(best, prev[j - 1] + 1);
            curr[j] = best;
        }
        std::swap(prev, curr);
    }
    const int lcs = prev[lb];
    return 1.0 - static_cast<double>(lcs) / static_cast<double>(std::min(la, lb));
}

double msm_transition_cost(double mid, double prev, double other, double cost) {
    if ((prev <= mid && mid <= other) || (other <= mid && mid <= prev)) return cost;
    return cost + std::min(std::abs(mid - prev), std::abs(mid - other));
}

double msm_distance(const VectorRef& a, const VectorRef& b, double cost) {
    if (!(cost > 0.0)) throw std::invalid_argument("MSM: cost must be > 0");
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());

    std::vector<double> prev(lb), curr(lb);
    prev[0] = std::abs(a[0] - b[0]);
    for (int j = 1; j < lb; ++j)
        prev[j] = prev[j - 1] + msm_transition_cost(b[j], b[j - 1], a[0], cost);
    for (int i = 1; i < la; ++i) {
        curr[0] = prev[0] + msm_transition_cost(a[i], a[i - 1], b[0], cost);
        for (int j = 1; j < lb; ++j) {
            const double match = prev[j - 1] + std::abs(a[i] - b[j]);
            const double split = prev[j] + msm_transition_cost(a[i], a[i - 1], b[j], cost);
            const double merge = curr[j - 1] + msm_transition_cost(b[j], b[j - 1], a[i], cost);
            curr[j] = std::min({match, split, merge});
        }
        std::swap(prev, curr);
    }
    return prev[lb - 1];
}

double erp_distance(const VectorRef& a, const VectorRef& b, double gap_value, int window) {
    if (!std::isfinite(gap_value)) throw std::invalid_argument("ERP: gap value must be finite");
    check_window(window, "ERP");
    const int la = static_cast<int>(a.size());
    const int lb = static_cast<int>(b.size());
    const int band = effective_band(window, la, lb);

    std::vector<double> prev(lb + 1, kInf), curr(lb + 1, kInf);
    prev[0] = 0.0;
    for (int j = 1; j <= lb && j <= band; ++j) prev[j] = prev[j - 1] + std::abs(b[j - 1] - gap_value);
    for (int i = 1; i <= la; ++i) {
        std::fill(curr.begin(), curr.end(), kInf);
        if (i <= band) curr[0] = prev[0] + std::abs(a[i - 1] - gap_value);
        const int jlo = std::max(1, i - band);
        const int jhi = std::min(lb, i + band);
        for (int j = jlo; j <= jhi; ++j) {
            const double match = prev[j - 1] + std::abs(a[i - 1] - b[j - 1]);
            const double gap_a = prev[j] + std::abs(a[i - 1] - gap_value);
            const double gap_b = curr[j - 1] + std::abs(b[j - 1] - gap_value);
            curr[j] = std::min({match, gap_a, gap_b});
        }
        std::swap(prev, curr);
    }
    return prev[lb];
}

Eigen::VectorXd derivative_transform(const VectorRef& a) {
    if (a.size() < 3)
        throw std::invalid_argument("derivative transform requires at least 3 points, got " +
                                    std::to_string(a.size()));
    Eigen::VectorXd d(a.size() - 2);
    for (int i = 1; i + 1 < a.size(); ++i)
        d[i - 1] = ((a[i] - a[i - 1]) + (a[i + 1] - a[i - 1]) / 2.0) / 2.0;
    return d;
}

double distance(const DistanceMeasure& m, const TimeSeries& a, const TimeSeries& b) {
    validate(m);
    validate_series(a.values, "left series");
    validate_series(b.values, "right series");
    const MeasureParams& p = m.params;
    switch (m.kind) {
        case MeasureKind::DTW: return dtw_distance(a.values, b.values, p.window);
        case MeasureKind::DDTW:
            return dtw_distance(derivative_transform(a.values), derivative_transform(b.values),
                                p.window);
        case MeasureKind::WDTW: return wdtw_distance(a.values, b.values, p.weight);
        case MeasureKind::WDDTW:
            return wdtw_distance(derivative_transform(a.values), derivative_transform(b.values),
                                 p.weight);
        case MeasureKind::TWE: return twe_distance(a.values, b.values, p.stiffness, p.penalty);
        case MeasureKind::ED: return euclidean_distance(a.values, b.values);
        case MeasureKind::LCSS: return lcss_distance(a.values, b.values, p.epsilon, p.window);
        case MeasureKind::MSM: return msm_distance(a.values, b.values, p.cost);
        case MeasureKind::ERP: return erp_distance(a.values, b.values, p.gap_value, p.window);
    }
    throw std::logic_error("unknown measure kind");
}

DistanceMeasure sample_parameters(MeasureKind kind, const DatasetStats& stats, RandomStream& rng) {
    const double sigma = stats.value_stddev > 0.0 ? stats.value_stddev : 1.0;
    const std::size_t window_choices = static_cast<std::size_t>(std::max(0, stats.max_length / 4)) + 1;

    DistanceMeasure m;
    m.kind = kind;
    switch (kind) {
        case MeasureKind::DTW:
        case MeasureKind::DDTW:
            // Full window half the time, otherwise uniform over [0, l_max/4].
            m.params.window =
                rng.next_bool() ? -1 : static_cast<int>(rng.next_index(window_choices));
            break;
        case MeasureKind::WDTW:
        case MeasureKind::WDDTW:
            m.params.weight = rng.next_uniform(0.0, 1.0);
            break;
        case MeasureKind::TWE:
            m.params.stiffness = std::pow(10.0, -static_cast<double>(rng.next_index(6)));
            m.params.penalty = (0.1 / 9.0) * static_cast<double>(rng.next_index(10));
            break;
        case MeasureKind::ED:
            break;
        case MeasureKind::LCSS:
            m.params.epsilon = rng.next_uniform(sigma / 5.0, sigma);
            m.params.window = static_cast<int>(rng.next_index(window_choices));
            break;
        case MeasureKind::MSM:
            m.params.cost = std::exp(rng.next_uniform(std::log(1e-2), std::log(1e2)));
            break;
        case MeasureKind::ERP:
            m.params.gap_value = rng.next_uniform(sigma / 5.0, sigma);
            m.params.window = static_cast<int>(rng.next_index(window_choices));
            break;
    }
    return m;
}

DistanceMeasure default_measure(MeasureKind kind, const DatasetStats& stats) {
    const double sigma = stats.value_stddev > 0.0 ? stats.value_stddev : 1.0;
    DistanceMeasure m;
    m.kind = kind;
    m.params.window = -1;
    switch (kind) {
        case MeasureKind::WDTW:
        case MeasureKind::WDDTW: m.params.weight = 0.05; break;
        case MeasureKind::TWE:
            m.params.stiffness = 1e-4;
            m.params.penalty = 1.0;
            break;
        case MeasureKind::LCSS: m.params.epsilon = sigma / 2.0; break;
        case MeasureKind::MSM: m.params.cost = 1.0; break;
        case MeasureKind::ERP: m.params.gap_value = 0.0; break;
        default: break;
    }
    return m;
}

DissimilarityMatrix pairwise_distance_matrix(const TimeSeriesDataset& d, const DistanceMeasure& m,
                                             int threads) {
    validate(m);
    const int n = d.size();
    for (int i = 0; i < n; ++i) validate_series(d.series[i].values, "series " + std::to_string(i));
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t row) {
        const int i = static_cast<int>(row);
        for (int j = i + 1; j < n; ++j) {
            double v = 0.0;
            try {
                v = distance(m, d.series[i], d.series[j]);
            } catch (const std::exception& e) {
                throw std::invalid_argument("pair (" + std::to_string(i) + "," +
                                            std::to_string(j) + "): " + e.what());
            }
            out(i, j) = v;
            out(j, i) = v;
        }
    });
    return make_dissimilarity(std::move(out));
}

}  // namespace pfgap
