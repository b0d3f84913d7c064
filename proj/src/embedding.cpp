#include "pfgap/embedding.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "pfgap/random.hpp"

namespace pfgap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd pairwise_euclidean(const Eigen::MatrixXd& x) {
    const int n = static_cast<int>(x.rows());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = (x.row(i) - x.row(j)).norm();
            d(i, j) = v;
            d(j, i) = v;
        }
    return d;
}

// Guttman transform: the majorization update of SMACOF with unit weights.
Eigen::MatrixXd guttman_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& target) {
    const int n = static_cast<int>(x.rows());
    const Eigen::MatrixXd rho = pairwise_euclidean(x);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double diag = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (rho(i, j) > 0.0) {
                b(i, j) = -target(i, j) / rho(i, j);
                diag -= b(i, j);
            }
        }
        b(i, i) = diag;
    }
    return (b * x) / static_cast<double>(n);
}

// Classical (Torgerson) scaling: deterministic start for SMACOF. Column
// signs are fixed so equal inputs give equal outputs regardless of the
// eigensolver's sign convention.
Eigen::MatrixXd classical_scaling(const Eigen::MatrixXd& d, int dim) {
    const int n = static_cast<int>(d.rows());
    const Eigen::MatrixXd sq = d.array().square();
    const Eigen::MatrixXd centering =
        Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    Eigen::MatrixXd b = -0.5 * centering * sq * centering;
    b = 0.5 * (b + b.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("classical scaling: eigendecomposition failed");

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, dim);
    for (int k = 0; k < dim; ++k) {
        const int idx = n - 1 - k;  // eigenvalues come back ascending
        const double lambda = es.eigenvalues()[idx];
        if (lambda <= 0.0) continue;
        Eigen::VectorXd v = es.eigenvectors().col(idx);
        int arg = 0;
        for (int i = 1; i < n; ++i)
            if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
        if (v[arg] < 0.0) v = -v;
        x.col(k) = std::sqrt(lambda) * v;
    }
    return x;
}

struct SmacofRun {
    Eigen::MatrixXd coordinates;
    std::vector<double> trace;
};

SmacofRun run_smacof(Eigen::MatrixXd x, const Eigen::MatrixXd& d, const MdsOptions& opts) {
    SmacofRun run;
    run.trace.push_back(raw_stress(x, d));
    for (int it = 0; it < opts.max_iterations; ++it) {
        x = guttman_step(x, d);
        const double prev = run.trace.back();
        const double s = raw_stress(x, d);
        run.trace.push_back(s);
        if (prev <= 0.0 || prev - s < opts.tolerance * prev) break;
    }
    run.coordinates = std::move(x);
    return run;
}

void check_input(const DissimilarityMatrix& dm, int dim) {
    if (dim < 1) throw std::invalid_argument("mds: dimension must be >= 1");
    if (!dm.values.allFinite())
        throw std::invalid_argument("mds: dissimilarities contain a non-finite value");
    if (dm.size() < dim + 1)
        throw std::invalid_argument("mds: need at least dim + 1 points, got " +
                                    std::to_string(dm.size()));
}

Embedding all_zero_embedding(int n, int dim, bool metric) {
    Embedding e;
    e.coordinates = Eigen::MatrixXd::Zero(n, dim);
    e.stress = 0.0;
    e.stress_trace = {0.0};
    e.metric = metric;
    e.warning = "all dissimilarities are zero; every point placed at the origin";
    return e;
}

}  // namespace

double raw_stress(const Eigen::MatrixXd& coordinates, const Eigen::MatrixXd& dissim) {
    const int n = static_cast<int>(coordinates.rows());
    long double acc = 0.0L;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double diff = dissim(i, j) - (coordinates.row(i) - coordinates.row(j)).norm();
            acc += static_cast<long double>(diff) * static_cast<long double>(diff);
        }
    return static_cast<double>(acc);
}

Embedding mds_metric(const DissimilarityMatrix& dm, int dim, const MdsOptions& opts) {
    check_input(dm, dim);
    const Eigen::MatrixXd& d = dm.values;
    const int n = dm.size();
    if (d.maxCoeff() == 0.0) return all_zero_embedding(n, dim, true);

    SmacofRun best = run_smacof(classical_scaling(d, dim), d, opts);
    const double scale = d.mean();
    for (int r = 0; r < opts.random_restarts; ++r) {
        RandomStream rng = RandomStream::child(opts.seed, static_cast<std::uint64_t>(r) + 1);
        Eigen::MatrixXd x0(n, dim);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < dim; ++k) x0(i, k) = scale * rng.next_normal();
        SmacofRun run = run_smacof(std::move(x0), d, opts);
        if (run.trace.back() < best.trace.back()) best = std::move(run);
    }

    Embedding e;
    e.coordinates = std::move(best.coordinates);
    e.stress = best.trace.back();
    e.stress_trace = std::move(best.trace);
    e.metric = true;
    return e;
}

Eigen::VectorXd isotonic_fit(const Eigen::VectorXd& y) {
    struct Block {
        double sum;
        int count;
    };
    const int m = static_cast<int>(y.size());
    std::vector<Block> blocks;
    blocks.reserve(m);
    for (int i = 0; i < m; ++i) {
        blocks.push_back({y[i], 1});
        while (blocks.size() >= 2) {
            const Block& a = blocks[blocks.size() - 2];
            const Block& b = blocks.back();
            if (a.sum / a.count <= b.sum / b.count) break;
            Block merged{a.sum + b.sum, a.count + b.count};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }
    Eigen::VectorXd out(m);
    int pos = 0;
    for (const Block& blk : blocks) {
        const double mean = blk.sum / blk.count;
        for (int k = 0; k < blk.count; ++k) out[pos++] = mean;
    }
    return out;
}

Embedding mds_nonmetric(const DissimilarityMatrix& dm, int dim, const MdsOptions& opts) {
    check_input(dm, dim);
    const Eigen::MatrixXd& d = dm.values;
    const int n = dm.size();
    if (d.maxCoeff() == 0.0) return all_zero_embedding(n, dim, false);

    // Pairs in the rank order of the input dissimilarities (stable ties).
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    std::stable_sort(pairs.begin(), pairs.end(),
                     [&](const auto& a, const auto& b) {
                         return d(a.first, a.second) < d(b.first, b.second);
                     });
    const int m = static_cast<int>(pairs.size());

    // Initialize from the metric solution of the midrank-transformed input.
    // Only the rank order enters, so any strictly monotone transform of the
    // dissimilarities reproduces the identical run.
    Eigen::MatrixXd rank_input = Eigen::MatrixXd::Zero(n, n);
    {
        int p = 0;
        while (p < m) {
            int q = p;
            const double value = d(pairs[p].first, pairs[p].second);
            while (q < m && d(pairs[q].first, pairs[q].second) == value) ++q;
            const double midrank = (0.5 * (p + q - 1) + 1.0) / static_cast<double>(m);
            for (int r = p; r < q; ++r) {
                rank_input(pairs[r].first, pairs[r].second) = midrank;
                rank_input(pairs[r].second, pairs[r].first) = midrank;
            }
            p = q;
        }
    }
    Eigen::MatrixXd x = mds_metric(make_dissimilarity(rank_input), dim, opts).coordinates;

    // Alternate isotonic disparity fits with Guttman steps. Stress-1 is not
    // strictly monotone under the per-iteration disparity rescaling, so the
    // best configuration seen so far is kept (and recorded in the trace)
    // while the trajectory continues; the loop stops once the best value has
    // stalled for a stretch of iterations.
    Embedding e;
    e.metric = false;
    Eigen::MatrixXd best_x = x;
    double best_stress = std::numeric_limits<double>::infinity();
    int stalled = 0;
    Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(n, n);
    for (int it = 0; it <= opts.max_iterations; ++it) {
        Eigen::VectorXd rho(m);
        for (int p = 0; p < m; ++p)
            rho[p] = (x.row(pairs[p].first) - x.row(pairs[p].second)).norm();
        const double rho_sq = rho.squaredNorm();
        if (rho_sq == 0.0) {
            e.warning = "configuration collapsed to a point";
            break;
        }
        Eigen::VectorXd disparities = isotonic_fit(rho);
        const double disp_sq = disparities.squaredNorm();
        if (disp_sq == 0.0) {
            e.warning = "disparities collapsed to zero";
            break;
        }

        // Kruskal stress-1 against the raw isotonic fit (scale-invariant).
        long double num = 0.0L;
        for (int p = 0; p < m; ++p) {
            const double diff = rho[p] - disparities[p];
            num += static_cast<long double>(diff) * static_cast<long double>(diff);
        }
        const double stress1 = std::sqrt(static_cast<double>(num) / rho_sq);

        // Fixed-norm disparities keep the Guttman target scale pinned; the
        // configuration converges to that scale instead of chasing it.
        disparities *= std::sqrt(static_cast<double>(m) / disp_sq);

        if (stress1 < best_stress - opts.tolerance * std::max(best_stress, 1e-30)) {
            stalled = 0;
        } else {
            ++stalled;
        }
        if (stress1 < best_stress) {
            best_stress = stress1;
            best_x = x;
        }
        e.stress_trace.push_back(best_stress);
        if (best_stress == 0.0 || stalled >= 5 || it == opts.max_iterations) break;

        for (int p = 0; p < m; ++p) {
            targets(pairs[p].first, pairs[p].second) = disparities[p];
            targets(pairs[p].second, pairs[p].first) = disparities[p];
        }
        x = guttman_step(x, targets);
    }

    if (e.stress_trace.empty()) e.stress_trace.push_back(0.0);
    // Match the input scale; stress-1 is scale-free so this is cosmetic.
    double rho_sq = 0.0, input_sq = 0.0;
    for (const auto& [i, j] : pairs) {
        rho_sq += (best_x.row(i) - best_x.row(j)).squaredNorm();
        input_sq += d(i, j) * d(i, j);
    }
    if (rho_sq > 0.0 && input_sq > 0.0) best_x *= std::sqrt(input_sq / rho_sq);
    e.coordinates = std::move(best_x);
    e.stress = e.stress_trace.back();
    return e;
}

KmeansResult kmeans(const Eigen::MatrixXd& points, int k, const KmeansOptions& opts) {
    const int n = static_cast<int>(points.rows());
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (k > n)
        throw std::invalid_argument("kmeans: k exceeds the number of points (" +
                                    std::to_string(k) + " > " + std::to_string(n) + ")");

    const int restarts = std::max(1, opts.restarts);
    KmeansResult best;
    best.inertia = kInf;

    for (int r = 0; r < restarts; ++r) {
        RandomStream rng = RandomStream::child(opts.seed, static_cast<std::uint64_t>(r));

        // k-means++ seeding.
        Eigen::MatrixXd centroids(k, points.cols());
        centroids.row(0) = points.row(static_cast<int>(rng.next_index(n)));
        Eigen::VectorXd dist2(n);
        for (int i = 0; i < n; ++i)
            dist2[i] = (points.row(i) - centroids.row(0)).squaredNorm();
        for (int c = 1; c < k; ++c) {
            const double total = dist2.sum();
            int pick;
            if (total <= 0.0) {
                pick = static_cast<int>(rng.next_index(n));
            } else {
                double target = rng.next_double() * total;
                pick = n - 1;
                for (int i = 0; i < n; ++i) {
                    target -= dist2[i];
                    if (target <= 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
            centroids.row(c) = points.row(pick);
            for (int i = 0; i < n; ++i)
                dist2[i] = std::min(dist2[i], (points.row(i) - centroids.row(c)).squaredNorm());
        }

        std::vector<int> assignment(n, -1);
        for (int it = 0; it < opts.max_iterations; ++it) {
            bool changed = false;
            for (int i = 0; i < n; ++i) {
                int arg = 0;
                double bestd = (points.row(i) - centroids.row(0)).squaredNorm();
                for (int c = 1; c < k; ++c) {
                    const double cd = (points.row(i) - centroids.row(c)).squaredNorm();
                    if (cd < bestd) {
                        bestd = cd;
                        arg = c;
                    }
                }
                if (assignment[i] != arg) {
                    assignment[i] = arg;
                    changed = true;
                }
            }

            std::vector<int> sizes(k, 0);
            for (int i = 0; i < n; ++i) ++sizes[assignment[i]];
            bool reseeded = false;
            for (int c = 0; c < k; ++c) {
                if (sizes[c] > 0) continue;
                // Re-seed an empty cluster from the farthest point.
                int far = -1;
                double fard = -1.0;
                for (int i = 0; i < n; ++i) {
                    if (sizes[assignment[i]] <= 1) continue;  // keep singletons intact
                    const double cd = (points.row(i) - centroids.row(assignment[i])).squaredNorm();
                    if (cd > fard) {
                        fard = cd;
                        far = i;
                    }
                }
                if (far < 0) continue;
                --sizes[assignment[far]];
                assignment[far] = c;
                sizes[c] = 1;
                centroids.row(c) = points.row(far);
                reseeded = true;
            }

            Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
            for (int i = 0; i < n; ++i) sums.row(assignment[i]) += points.row(i);
            for (int c = 0; c < k; ++c)
                if (sizes[c] > 0) centroids.row(c) = sums.row(c) / sizes[c];

            if (!changed && !reseeded) break;
        }

        double inertia = 0.0;
        for (int i = 0; i < n; ++i)
            inertia += (points.row(i) - centroids.row(assignment[i])).squaredNorm();
        if (inertia < best.inertia) {
            best.assignment = std::move(assignment);
            best.centroids = std::move(centroids);
            best.inertia = inertia;
        }
    }
    return best;
}

std::vector<int> optimal_assignment(const Eigen::MatrixXd& score) {
    const int n = static_cast<int>(score.rows());
    if (score.cols() != n) throw std::invalid_argument("assignment: matrix must be square");
    const double top = n > 0 ? score.maxCoeff() : 0.0;

    // Hungarian algorithm with potentials on cost = top - score (1-based).
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = (top - score(i0 - 1, j - 1)) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> result(n, -1);
    for (int j = 1; j <= n; ++j)
        if (match[j] > 0) result[match[j] - 1] = j - 1;
    return result;
}

double kmeans_cluster_score(const Embedding& e, const std::vector<int>& labels, int k,
                            const KmeansOptions& opts) {
    const int n = e.size();
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("cluster score: labels size mismatch");
    const KmeansResult clusters = kmeans(e.coordinates, k, opts);

    std::vector<int> distinct(labels);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const int side = std::max<int>(k, static_cast<int>(distinct.size()));

    Eigen::MatrixXd contingency = Eigen::MatrixXd::Zero(side, side);
    for (int i = 0; i < n; ++i) {
        const int col = static_cast<int>(
            std::lower_bound(distinct.begin(), distinct.end(), labels[i]) - distinct.begin());
        contingency(clusters.assignment[i], col) += 1.0;
    }
    const std::vector<int> matched = optimal_assignment(contingency);
    double correct = 0.0;
    for (int c = 0; c < side; ++c) correct += contingency(c, matched[c]);
    return correct / static_cast<double>(n);
}

void save_embedding_csv(const Embedding& e, const std::vector<int>& labels,
                        const std::vector<int>& ids, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "id,label";
    for (int k = 0; k < e.dim(); ++k) out << ",x" << (k + 1);
    out << '\n';
    for (int i = 0; i < e.size(); ++i) {
        out << (i < static_cast<int>(ids.size()) ? ids[i] : i) << ','
            << (i < static_cast<int>(labels.size()) ? labels[i] : 0);
        for (int k = 0; k < e.dim(); ++k) out << ',' << format_double(e.coordinates(i, k));
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void save_embedding_svg(const Embedding& e, const std::vector<int>& labels,
                        const std::string& path, int highlight_index) {
    static const char* kPalette[] = {"#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2",
                                     "#7f7f7f", "#bcbd22", "#17becf", "#ff7f0e", "#aec7e8"};
    constexpr int kColors = 10;
    const int width = 640, height = 480, margin = 40;
    const int n = e.size();
    if (e.dim() < 2) throw std::invalid_argument("svg export needs a 2-D embedding");

    double xmin = e.coordinates.col(0).minCoeff(), xmax = e.coordinates.col(0).maxCoeff();
    double ymin = e.coordinates.col(1).minCoeff(), ymax = e.coordinates.col(1).maxCoeff();
    if (xmax - xmin <= 0.0) {
        xmin -= 1.0;
        xmax += 1.0;
    }
    if (ymax - ymin <= 0.0) {
        ymin -= 1.0;
        ymax += 1.0;
    }
    auto px = [&](double x) {
        return margin + (x - xmin) / (xmax - xmin) * (width - 2 * margin);
    };
    auto py = [&](double y) {
        return height - margin - (y - ymin) / (ymax - ymin) * (height - 2 * margin);
    };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\" stroke=\"#cccccc\"/>\n";
    for (int i = 0; i < n; ++i) {
        if (i == highlight_index) continue;
        const int label = i < static_cast<int>(labels.size()) ? labels[i] : 0;
        const char* color = kPalette[((label % kColors) + kColors) % kColors];
        out << "<circle cx=\"" << px(e.coordinates(i, 0)) << "\" cy=\"" << py(e.coordinates(i, 1))
            << "\" r=\"4\" fill=\"" << color << "\" fill-opacity=\"0.85\"/>\n";
    }
    if (highlight_index >= 0 && highlight_index < n) {
        out << "<circle cx=\"" << px(e.coordinates(highlight_index, 0)) << "\" cy=\""
            << py(e.coordinates(highlight_index, 1))
            << "\" r=\"7\" fill=\"#d62728\" stroke=\"#7f0000\" stroke-width=\"1.5\"/>\n";
    }
    out << "</svg>\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace pfgap
