#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pfgap/outlier.hpp"

using namespace pfgap;

namespace {

SparseProximityMatrix dense_to_sym(const Eigen::MatrixXd& m) {
    SparseProximityMatrix p;
    p.n = static_cast<int>(m.rows());
    p.kind = ProximityKind::GAP;
    p.symmetrized = true;
    p.rows.resize(p.n);
    for (int i = 0; i < p.n; ++i)
        for (int j = 0; j < p.n; ++j)
            if (m(i, j) != 0.0) p.rows[i].push_back({j, m(i, j)});
    return p;
}

DissimilarityMatrix dissim_from_positions(const std::vector<double>& pos) {
    const int n = static_cast<int>(pos.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = std::abs(pos[i] - pos[j]);
            d(i, j) = v;
            d(j, i) = v;
        }
    return make_dissimilarity(std::move(d));
}

}  // namespace

TEST_CASE("raw score substitution on unit proximities") {
    // Class 0 = {0,1,2} with unit proximities; index 3 is a singleton class.
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    m(0, 1) = m(1, 0) = 1.0;
    m(0, 2) = m(2, 0) = 1.0;
    m(1, 2) = m(2, 1) = 1.0;
    OutlierFlags flags;
    const Eigen::VectorXd raw =
        raw_outlier_scores(dense_to_sym(m), {0, 0, 0, 1}, OutlierSumForm::Aggregate, &flags);
    CHECK(raw[0] == doctest::Approx(4.0 / 2.0));  // N / m with m = 2 same-class neighbors
    CHECK(raw[1] == doctest::Approx(2.0));
    CHECK(std::isnan(raw[3]));
    CHECK(flags.undefined == std::vector<int>{3});
}

TEST_CASE("halving the proximities quadruples the raw score") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
    m(0, 1) = m(1, 0) = 0.6;
    m(0, 2) = m(2, 0) = 0.2;
    m(1, 2) = m(2, 1) = 0.4;
    const Eigen::VectorXd base = raw_outlier_scores(dense_to_sym(m), {0, 0, 0});
    const Eigen::VectorXd half = raw_outlier_scores(dense_to_sym(0.5 * m), {0, 0, 0});
    for (int i = 0; i < 3; ++i) CHECK(half[i] == doctest::Approx(4.0 * base[i]).epsilon(1e-12));
}

TEST_CASE("raw scores match a naive evaluation on a hand matrix") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    m(0, 1) = m(1, 0) = 0.5;
    m(2, 3) = m(3, 2) = 0.25;
    m(0, 2) = m(2, 0) = 0.1;  // cross-class, must not count
    const std::vector<int> labels = {0, 0, 1, 1};
    const Eigen::VectorXd raw = raw_outlier_scores(dense_to_sym(m), labels);

    // Ten-line reference: N over the same-class sum of squared proximities.
    for (int i = 0; i < 4; ++i) {
        double denom = 0.0;
        for (int j = 0; j < 4; ++j)
            if (j != i && labels[j] == labels[i]) denom += m(i, j) * m(i, j);
        CHECK(raw[i] == doctest::Approx(4.0 / denom));
    }
}

TEST_CASE("zero same-class proximity mass clamps to the sentinel") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    m(2, 3) = m(3, 2) = 0.5;
    OutlierFlags flags;
    const Eigen::VectorXd raw =
        raw_outlier_scores(dense_to_sym(m), {0, 0, 1, 1}, OutlierSumForm::Aggregate, &flags);
    CHECK(raw[0] == kOutlierScoreSentinel);
    CHECK(raw[1] == kOutlierScoreSentinel);
    CHECK(flags.clamped == std::vector<int>{0, 1});
}

TEST_CASE("literal per-term form skips zero proximities") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
    m(0, 1) = m(1, 0) = 0.5;
    // Index 2 shares the class but has zero proximity to 0 and 1.
    const std::vector<int> labels = {0, 0, 0};
    const Eigen::VectorXd lit =
        raw_outlier_scores(dense_to_sym(m), labels, OutlierSumForm::PerTerm);
    CHECK(lit[0] == doctest::Approx(3.0 / 0.25));
    const Eigen::VectorXd agg = raw_outlier_scores(dense_to_sym(m), labels);
    CHECK(agg[0] == doctest::Approx(3.0 / 0.25));  // same here: one nonzero term
}

TEST_CASE("normalization centers on the class median and scales by the mad") {
    Eigen::VectorXd raw(3);
    raw << 1, 2, 9;
    const Eigen::VectorXd norm = normalize_outlier_scores(raw, {0, 0, 0});
    CHECK(norm[0] == doctest::Approx(-3.0 / 8.0));
    CHECK(norm[1] == doctest::Approx(0.0));
    CHECK(norm[2] == doctest::Approx(21.0 / 8.0));
}

TEST_CASE("normalization is invariant to positive affine shifts of a class") {
    Eigen::VectorXd raw(4);
    raw << 1, 2, 5, 9;
    const std::vector<int> labels = {0, 0, 0, 0};
    const Eigen::VectorXd base = normalize_outlier_scores(raw, labels);
    const Eigen::VectorXd shifted = normalize_outlier_scores(
        (raw.array() * 3.0 + 12.0).matrix(), labels);
    for (int i = 0; i < 4; ++i) CHECK(shifted[i] == doctest::Approx(base[i]).epsilon(1e-12));
}

TEST_CASE("constant class scores normalize to zero and get flagged") {
    Eigen::VectorXd raw(3);
    raw << 4, 4, 4;
    OutlierFlags flags;
    const Eigen::VectorXd norm = normalize_outlier_scores(raw, {0, 0, 0}, &flags);
    CHECK(norm.cwiseAbs().maxCoeff() == 0.0);
    CHECK(flags.zero_mad == std::vector<int>{0, 1, 2});
}

TEST_CASE("top outlier takes the first argmax and rejects all-undefined input") {
    Eigen::VectorXd scores(4);
    scores << 1.0, 5.0, 5.0, 0.0;
    CHECK(top_outlier(scores) == 1);  // tie between 1 and 2 -> lowest index
    Eigen::VectorXd with_nan(3);
    with_nan << std::nan(""), 2.0, 3.0;
    CHECK(top_outlier(with_nan) == 2);
    Eigen::VectorXd undefined(2);
    undefined << std::nan(""), std::nan("");
    CHECK_THROWS_AS(top_outlier(undefined), std::invalid_argument);
}

TEST_CASE("lof is near one on a uniform grid") {
    std::vector<double> pos;
    for (int i = 0; i < 12; ++i) pos.push_back(static_cast<double>(i));
    const LofResult r = lof(dissim_from_positions(pos), 3, 1.5);
    for (int i = 0; i < 12; ++i) {
        CHECK(r.values[i] >= 0.9);
        CHECK(r.values[i] <= 1.1);
        CHECK(!r.outlier[i]);
    }
}

TEST_CASE("lof flags an isolated point far from a tight cluster") {
    std::vector<double> pos;
    for (int i = 0; i < 10; ++i) pos.push_back(0.1 * i);
    pos.push_back(50.0);
    const LofResult r = lof(dissim_from_positions(pos), 5, 1.5);
    CHECK(r.values[10] > 10.0);
    CHECK(r.outlier[10]);
    for (int i = 0; i < 10; ++i) CHECK(!r.outlier[i]);
}

TEST_CASE("lof equals the naive definition exactly, duplicates included") {
    RandomStream rng(31);
    for (int rep = 0; rep < 5; ++rep) {
        const int n = 20 + static_cast<int>(rng.next_index(31));
        std::vector<double> pos(n);
        for (int i = 0; i < n; ++i) pos[i] = rng.next_uniform(0, 10);
        pos[1] = pos[0];  // duplicates exercise the zero-distance conventions
        pos[2] = pos[0];
        const DissimilarityMatrix d = dissim_from_positions(pos);
        const LofResult fast = lof(d, 5, 1.5);
        const Eigen::VectorXd naive = oracle::lof(d.values, 5);
        for (int i = 0; i < n; ++i) CHECK(fast.values[i] == naive[i]);
    }
    CHECK_THROWS_AS(lof(dissim_from_positions({0, 1, 2}), 5, 1.5), std::invalid_argument);
}

TEST_CASE("leave-one-out 1-nn predictions") {
    const DissimilarityMatrix line = dissim_from_positions({0, 1, 5});
    CHECK(one_nn_predict(line, {0, 0, 1}) == std::vector<int>{0, 0, 0});

    const DissimilarityMatrix twins = dissim_from_positions({2, 2});
    CHECK(one_nn_predict(twins, {1, 1}) == std::vector<int>{1, 1});

    const DissimilarityMatrix blobs = dissim_from_positions({0, 0.1, 0.2, 9, 9.1, 9.2});
    const std::vector<int> labels = {0, 0, 0, 1, 1, 1};
    CHECK(one_nn_predict(blobs, labels) == labels);

    // Rank-only dependence: a strictly monotone transform changes nothing.
    Eigen::MatrixXd warped = blobs.values.array().sqrt();
    CHECK(one_nn_predict(make_dissimilarity(warped), labels) == labels);
}

TEST_CASE("f1 bookkeeping matches the confusion definition") {
    // All sixteen single-point combinations.
    for (int correct = 0; correct < 2; ++correct)
        for (int out = 0; out < 2; ++out) {
            const std::vector<int> truth = {0};
            const std::vector<int> pred = {correct ? 0 : 1};
            const std::vector<std::uint8_t> lofl = {static_cast<std::uint8_t>(out)};
            const F1Summary s = misclassified_outlier_f1(pred, truth, lofl);
            CHECK(s.tp == (correct && !out ? 1 : 0));
            CHECK(s.tn == (!correct && out ? 1 : 0));
            CHECK(s.fp == (!correct && !out ? 1 : 0));
            CHECK(s.fn == (correct && out ? 1 : 0));
        }

    // Hand case: TP = 2, FP = 1, FN = 1 -> F1 = 2/3.
    const std::vector<int> truth = {0, 0, 0, 0};
    const std::vector<int> pred = {0, 0, 1, 0};
    const std::vector<std::uint8_t> lofl = {0, 0, 0, 1};
    const F1Summary s = misclassified_outlier_f1(pred, truth, lofl);
    CHECK(s.tp == 2);
    CHECK(s.fp == 1);
    CHECK(s.fn == 1);
    CHECK(s.f1 == doctest::Approx(2.0 / 3.0));

    // Everything correct and inlier.
    const F1Summary perfect =
        misclassified_outlier_f1({0, 1}, {0, 1}, std::vector<std::uint8_t>{0, 0});
    CHECK(perfect.f1 == doctest::Approx(1.0));

    // Entries without predictions are skipped.
    const F1Summary skipped =
        misclassified_outlier_f1({-1, 1}, {0, 1}, std::vector<std::uint8_t>{0, 0});
    CHECK(skipped.tp == 1);
    CHECK(skipped.f1 == doctest::Approx(1.0));
}

TEST_CASE("raw-score scaling leaves the top outlier unchanged") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
    m(0, 1) = m(1, 0) = 0.9;
    m(0, 2) = m(2, 0) = 0.8;
    m(1, 2) = m(2, 1) = 0.7;
    m(0, 3) = m(3, 0) = 0.05;
    m(1, 3) = m(3, 1) = 0.04;
    m(2, 3) = m(3, 2) = 0.03;
    const std::vector<int> labels = {0, 0, 0, 0};
    const Eigen::VectorXd a = normalize_outlier_scores(raw_outlier_scores(dense_to_sym(m), labels), labels);
    const Eigen::VectorXd b = normalize_outlier_scores(
        raw_outlier_scores(dense_to_sym(0.5 * m), labels), labels);
    CHECK(top_outlier(a) == 3);
    CHECK(top_outlier(b) == 3);
}
