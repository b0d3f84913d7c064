#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pfgap/embedding.hpp"
#include "pfgap/random.hpp"

using namespace pfgap;

namespace {

DissimilarityMatrix random_dissimilarity(int n, RandomStream& rng) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = rng.next_uniform(0.1, 1.0);
            d(i, j) = v;
            d(j, i) = v;
        }
    return make_dissimilarity(std::move(d));
}

DissimilarityMatrix from_points(const Eigen::MatrixXd& pts) {
    const int n = static_cast<int>(pts.rows());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = (pts.row(i) - pts.row(j)).norm();
            d(i, j) = v;
            d(j, i) = v;
        }
    return make_dissimilarity(std::move(d));
}

}  // namespace

TEST_CASE("equilateral triangle embeds exactly in the plane") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Ones(3, 3);
    d.diagonal().setZero();
    const Embedding e = mds_metric(make_dissimilarity(d), 2);
    CHECK(e.stress == doctest::Approx(0.0).epsilon(1e-10));
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            CHECK((e.coordinates.row(i) - e.coordinates.row(j)).norm() ==
                  doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("all-zero dissimilarities collapse to the origin with a warning") {
    const DissimilarityMatrix d = make_dissimilarity(Eigen::MatrixXd::Zero(4, 4));
    const Embedding e = mds_metric(d, 2);
    CHECK(e.coordinates.cwiseAbs().maxCoeff() == 0.0);
    CHECK(e.stress == 0.0);
    CHECK(!e.warning.empty());
}

TEST_CASE("mds input validation") {
    RandomStream rng(1);
    const DissimilarityMatrix d = random_dissimilarity(3, rng);
    CHECK_THROWS_AS(mds_metric(d, 3), std::invalid_argument);  // needs dim + 1 points
    CHECK_THROWS_AS(mds_metric(d, 0), std::invalid_argument);

    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 3);
    bad(0, 1) = bad(1, 0) = std::nan("");
    CHECK_THROWS_AS(make_dissimilarity(bad), std::invalid_argument);
    Eigen::MatrixXd asym = Eigen::MatrixXd::Zero(3, 3);
    asym(0, 1) = 1.0;
    asym(1, 0) = 2.0;
    CHECK_THROWS_AS(make_dissimilarity(asym), std::invalid_argument);
}

TEST_CASE("stress is homogeneous under joint scaling") {
    RandomStream rng(2);
    const DissimilarityMatrix d = random_dissimilarity(8, rng);
    const Embedding e = mds_metric(d, 2);
    const double base = raw_stress(e.coordinates, d.values);
    const double scaled = raw_stress(2.0 * e.coordinates, 2.0 * d.values);
    CHECK(scaled == doctest::Approx(4.0 * base).epsilon(1e-9));
}

TEST_CASE("smacof stress trace never increases") {
    RandomStream rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 5 + static_cast<int>(rng.next_index(20));
        const DissimilarityMatrix d = random_dissimilarity(n, rng);
        const Embedding e = mds_metric(d, 2);
        REQUIRE(e.stress_trace.size() >= 2);
        for (std::size_t k = 1; k < e.stress_trace.size(); ++k)
            CHECK(e.stress_trace[k] <= e.stress_trace[k - 1] + 1e-12);
        CHECK(e.stress == e.stress_trace.back());
        CHECK(e.coordinates.allFinite());
    }
}

TEST_CASE("embedding is permutation-equivariant up to numerics") {
    RandomStream rng(4);
    const int n = 12;
    const DissimilarityMatrix d = random_dissimilarity(n, rng);
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::reverse(perm.begin(), perm.end());
    Eigen::MatrixXd pd(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) pd(i, j) = d.values(perm[i], perm[j]);

    const Embedding base = mds_metric(d, 2);
    const Embedding permuted = mds_metric(make_dissimilarity(pd), 2);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double a = (base.coordinates.row(perm[i]) - base.coordinates.row(perm[j])).norm();
            const double b = (permuted.coordinates.row(i) - permuted.coordinates.row(j)).norm();
            CHECK(a == doctest::Approx(b).epsilon(1e-5));
        }
}

TEST_CASE("isotonic fit pools violators") {
    Eigen::VectorXd y(5);
    y << 1, 2, 1.5, 3, 2.5;
    const Eigen::VectorXd fit = isotonic_fit(y);
    for (int i = 1; i < fit.size(); ++i) CHECK(fit[i] >= fit[i - 1]);
    CHECK(fit.sum() == doctest::Approx(y.sum()).epsilon(1e-12));

    Eigen::VectorXd pair(2);
    pair << 3, 1;
    const Eigen::VectorXd pooled = isotonic_fit(pair);
    CHECK(pooled[0] == doctest::Approx(2.0));
    CHECK(pooled[1] == doctest::Approx(2.0));

    Eigen::VectorXd mono(4);
    mono << 1, 2, 3, 4;
    CHECK((isotonic_fit(mono) - mono).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nonmetric mds recovers rank-embeddable configurations") {
    const int n = 10;
    Eigen::MatrixXd d(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d(i, j) = std::abs(i - j);
    const Embedding e = mds_nonmetric(make_dissimilarity(d), 2);
    CHECK(e.stress < 1e-3);
    for (std::size_t k = 1; k < e.stress_trace.size(); ++k)
        CHECK(e.stress_trace[k] <= e.stress_trace[k - 1] + 1e-12);
}

TEST_CASE("nonmetric stress depends only on the rank order of the input") {
    RandomStream rng(5);
    Eigen::MatrixXd pts(9, 2);
    for (int i = 0; i < 9; ++i)
        for (int k = 0; k < 2; ++k) pts(i, k) = rng.next_uniform(-1, 1);
    const DissimilarityMatrix d = from_points(pts);
    Eigen::MatrixXd cubed = d.values.array().pow(3.0);
    const Embedding a = mds_nonmetric(d, 2);
    const Embedding b = mds_nonmetric(make_dissimilarity(cubed), 2);
    CHECK(std::abs(a.stress - b.stress) < 1e-3);
    CHECK(a.stress < 1e-3);  // the configuration is exactly embeddable
}

TEST_CASE("two points embed at the stated separation in one dimension") {
    Eigen::MatrixXd d(2, 2);
    d << 0, 3, 3, 0;
    const Embedding e = mds_nonmetric(make_dissimilarity(d), 1);
    CHECK(std::abs(e.coordinates(0, 0) - e.coordinates(1, 0)) == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(e.stress == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("kmeans separates well-separated blobs") {
    RandomStream rng(6);
    const int per = 20;
    Eigen::MatrixXd pts(2 * per, 2);
    std::vector<int> labels(2 * per);
    for (int i = 0; i < per; ++i) {
        pts.row(i) << rng.next_normal() * 0.1, rng.next_normal() * 0.1;
        labels[i] = 0;
        pts.row(per + i) << 5.0 + rng.next_normal() * 0.1, rng.next_normal() * 0.1;
        labels[per + i] = 1;
    }
    Embedding e;
    e.coordinates = pts;
    CHECK(kmeans_cluster_score(e, labels, 2) == doctest::Approx(1.0));

    CHECK_THROWS_AS(kmeans(pts, 2 * per + 1, KmeansOptions{}), std::invalid_argument);
}

TEST_CASE("kmeans score near chance for random labels on one blob") {
    RandomStream rng(7);
    const int n = 40;
    Eigen::MatrixXd pts(n, 2);
    for (int i = 0; i < n; ++i) pts.row(i) << rng.next_normal(), rng.next_normal();
    double total = 0.0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.next_index(2));
        Embedding e;
        e.coordinates = pts;
        KmeansOptions opts;
        opts.seed = rep;
        total += kmeans_cluster_score(e, labels, 2, opts);
    }
    const double mean = total / reps;
    CHECK(mean > 0.45);
    CHECK(mean < 0.70);
}

TEST_CASE("cluster-to-class matching maximizes the assignment score") {
    Eigen::MatrixXd direct(2, 2);
    direct << 5, 1, 2, 6;
    CHECK(optimal_assignment(direct) == std::vector<int>{0, 1});
    Eigen::MatrixXd crossed(2, 2);
    crossed << 1, 5, 6, 2;
    CHECK(optimal_assignment(crossed) == std::vector<int>{1, 0});
    Eigen::MatrixXd three(3, 3);
    three << 10, 0, 0, 0, 1, 9, 0, 8, 1;
    CHECK(optimal_assignment(three) == std::vector<int>{0, 2, 1});
}

TEST_CASE("kmeans is deterministic for a fixed seed") {
    RandomStream rng(8);
    Eigen::MatrixXd pts(30, 2);
    for (int i = 0; i < 30; ++i) pts.row(i) << rng.next_normal(), rng.next_normal();
    KmeansOptions opts;
    opts.seed = 123;
    const KmeansResult a = kmeans(pts, 3, opts);
    const KmeansResult b = kmeans(pts, 3, opts);
    CHECK(a.assignment == b.assignment);
    CHECK(a.inertia == b.inertia);
}
