#include "perceptor/stats.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "support.hpp"

using namespace perceptor;

namespace {

ActivationSet two_class_acts(std::initializer_list<std::initializer_list<double>> class0,
                             std::initializer_list<std::initializer_list<double>> class1) {
    ActivationSet acts;
    for (const auto& cls : {class0, class1}) {
        Eigen::MatrixXd m(cls.size(), cls.begin()->size());
        Eigen::Index r = 0;
        for (const auto& row : cls) {
            Eigen::Index c = 0;
            for (double v : row) m(r, c++) = v;
            ++r;
        }
        acts.samples.push_back(m);
    }
    return acts;
}

ReadoutPerceptron identity_readout(int d, Similarity sim = Similarity::dot) {
    return {Eigen::MatrixXd::Identity(d, d), std::nullopt, sim};
}

}  // namespace

TEST_CASE("compute_sums with identity weights passes activations through") {
    const auto acts = two_class_acts({{3.0, 5.0}}, {{1.0, 2.0}});
    const auto sums = compute_sums(acts, identity_readout(2));
    REQUIRE(sums.by_class[0](0, 0) == 3.0);
    REQUIRE(sums.by_class[0](0, 1) == 5.0);
}

TEST_CASE("compute_sums cosine mode normalizes by both norms") {
    const auto acts = two_class_acts({{3.0, 4.0}}, {{1.0, 0.0}});
    const auto sums = compute_sums(acts, identity_readout(2, Similarity::cosine));
    REQUIRE_THAT(sums.by_class[0](0, 0), Catch::Matchers::WithinAbs(3.0 / 5.0, 1e-15));
    REQUIRE_THAT(sums.by_class[0](0, 1), Catch::Matchers::WithinAbs(4.0 / 5.0, 1e-15));
}

TEST_CASE("compute_sums matches a naive double-loop product") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    const int d = 3, n = 10;
    Eigen::MatrixXd w(d, n);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < n; ++c) w(r, c) = normal(rng);
    Eigen::VectorXd bias(d);
    for (int r = 0; r < d; ++r) bias(r) = normal(rng);

    ActivationSet acts;
    for (int c = 0; c < d; ++c) {
        Eigen::MatrixXd block(c == 0 ? 34 : 33, n);
        for (Eigen::Index r = 0; r < block.rows(); ++r)
            for (int k = 0; k < n; ++k) block(r, k) = normal(rng);
        acts.samples.push_back(block);
    }

    const ReadoutPerceptron readout{w, bias, Similarity::dot};
    const auto sums = compute_sums(acts, readout);
    for (int c = 0; c < d; ++c) {
        const Eigen::MatrixXd expected = oracle::naive_sums(acts.samples[c], w, &bias);
        REQUIRE((sums.by_class[c] - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("compute_sums bias handling") {
    const auto acts = two_class_acts({{1.0, 0.0}}, {{0.0, 1.0}});
    Eigen::VectorXd bias(2);
    bias << 10.0, 20.0;
    SECTION("bias added in dot mode") {
        const ReadoutPerceptron readout{Eigen::MatrixXd::Identity(2, 2), bias,
                                        Similarity::dot};
        const auto sums = compute_sums(acts, readout);
        REQUIRE(sums.by_class[0](0, 0) == 11.0);
        REQUIRE(sums.by_class[0](0, 1) == 20.0);
    }
    SECTION("bias ignored in cosine mode") {
        const ReadoutPerceptron readout{Eigen::MatrixXd::Identity(2, 2), bias,
                                        Similarity::cosine};
        const auto sums = compute_sums(acts, readout);
        REQUIRE(sums.by_class[0](0, 0) == 1.0);
        REQUIRE(sums.by_class[0](0, 1) == 0.0);
    }
}

TEST_CASE("compute_sums is linear in dot mode and scale-invariant in cosine mode") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd w(3, 6);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 6; ++c) w(r, c) = normal(rng);
    ActivationSet acts;
    for (int c = 0; c < 3; ++c) {
        Eigen::MatrixXd block(4, 6);
        for (int r = 0; r < 4; ++r)
            for (int k = 0; k < 6; ++k) block(r, k) = normal(rng);
        acts.samples.push_back(block);
    }
    ActivationSet scaled = acts;
    const double alpha = 2.75;
    for (auto& block : scaled.samples) block *= alpha;

    const auto dot_base = compute_sums(acts, {w, std::nullopt, Similarity::dot});
    const auto dot_scaled = compute_sums(scaled, {w, std::nullopt, Similarity::dot});
    const auto cos_base = compute_sums(acts, {w, std::nullopt, Similarity::cosine});
    const auto cos_scaled = compute_sums(scaled, {w, std::nullopt, Similarity::cosine});
    for (int c = 0; c < 3; ++c) {
        REQUIRE((dot_scaled.by_class[c] - alpha * dot_base.by_class[c]).cwiseAbs().maxCoeff() <
                1e-12);
        REQUIRE((cos_scaled.by_class[c] - cos_base.by_class[c]).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("compute_sums error paths") {
    const auto acts = two_class_acts({{1.0, 2.0}}, {{3.0, 4.0}});
    SECTION("dimension mismatch") {
        const ReadoutPerceptron readout{Eigen::MatrixXd::Identity(3, 3), std::nullopt,
                                        Similarity::dot};
        REQUIRE_THROWS_AS(compute_sums(acts, readout), std::invalid_argument);
    }
    SECTION("zero-norm activation in cosine mode") {
        const auto degenerate = two_class_acts({{0.0, 0.0}}, {{1.0, 1.0}});
        REQUIRE_THROWS_AS(compute_sums(degenerate, identity_readout(2, Similarity::cosine)),
                          std::invalid_argument);
    }
    SECTION("zero-norm filter in cosine mode") {
        Eigen::MatrixXd w = Eigen::MatrixXd::Identity(2, 2);
        w.row(1).setZero();
        REQUIRE_THROWS_AS(compute_sums(acts, {w, std::nullopt, Similarity::cosine}),
                          std::invalid_argument);
    }
}

TEST_CASE("estimate_moments reproduces a hand-computed example") {
    SumSamples sums;
    Eigen::MatrixXd class0(2, 2), class1(2, 2);
    class0 << 0.0, 0.0, 2.0, 2.0;
    class1 << 0.0, 1.0, 1.0, 0.0;
    sums.by_class = {class0, class1};
    const auto st = estimate_moments(sums);

    REQUIRE_THAT(st.mu[0](0), Catch::Matchers::WithinAbs(1.0, 1e-15));
    REQUIRE_THAT(st.mu[0](1), Catch::Matchers::WithinAbs(1.0, 1e-15));
    const double sqrt2 = std::sqrt(2.0);
    REQUIRE_THAT(st.sigma[0](0), Catch::Matchers::WithinAbs(sqrt2, 1e-12));
    REQUIRE_THAT(st.sigma[0](1), Catch::Matchers::WithinAbs(sqrt2, 1e-12));
    const Eigen::MatrixXd& cov = *st.cov[0];
    REQUIRE_THAT(cov(0, 0), Catch::Matchers::WithinAbs(2.0, 1e-9));
    REQUIRE_THAT(cov(0, 1), Catch::Matchers::WithinAbs(2.0, 1e-9));
    REQUIRE_THAT(cov(1, 0), Catch::Matchers::WithinAbs(2.0, 1e-9));
    REQUIRE_THAT(cov(1, 1), Catch::Matchers::WithinAbs(2.0, 1e-9));
    REQUIRE(st.priors(0) == 0.5);
}

TEST_CASE("estimate_moments on a repeated row gives zero spread") {
    SumSamples sums;
    sums.by_class = {Eigen::MatrixXd::Constant(10, 2, 5.0), Eigen::MatrixXd::Zero(10, 2)};
    const auto st = estimate_moments(sums);
    REQUIRE(st.mu[0](0) == 5.0);
    REQUIRE(st.sigma[0](0) == 0.0);
    REQUIRE(st.sigma[0](1) == 0.0);
    REQUIRE(st.cov[0]->isZero(0.0));
}

TEST_CASE("estimate_moments recovers standard normal moments from 1e4 draws") {
    std::mt19937_64 rng(123);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd block(10000, 2);
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
        block(r, 0) = normal(rng);
        block(r, 1) = normal(rng);
    }
    SumSamples sums;
    sums.by_class = {block, Eigen::MatrixXd::Zero(2, 2)};
    const auto st = estimate_moments(sums);
    REQUIRE(std::abs(st.mu[0](0)) < 0.05);
    REQUIRE(std::abs(st.mu[0](1)) < 0.05);
    REQUIRE(std::abs(st.sigma[0](0) - 1.0) < 0.05);
    REQUIRE(std::abs(st.sigma[0](1) - 1.0) < 0.05);
}

TEST_CASE("estimate_moments is invariant to sample order") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd block(64, 3);
    for (Eigen::Index r = 0; r < block.rows(); ++r)
        for (int c = 0; c < 3; ++c) block(r, c) = normal(rng);
    SumSamples sums;
    sums.by_class = {block, block, block};

    std::vector<Eigen::Index> perm(block.rows());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd shuffled(block.rows(), 3);
    for (Eigen::Index r = 0; r < block.rows(); ++r) shuffled.row(r) = block.row(perm[r]);
    SumSamples shuffled_sums;
    shuffled_sums.by_class = {shuffled, shuffled, shuffled};

    const auto a = estimate_moments(sums);
    const auto b = estimate_moments(shuffled_sums);
    for (int c = 0; c < 3; ++c) {
        REQUIRE((a.mu[c] - b.mu[c]).cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE((a.sigma[c] - b.sigma[c]).cwiseAbs().maxCoeff() < 1e-12);
        REQUIRE((*a.cov[c] - *b.cov[c]).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("estimate_moments covariance invariants on random data") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal;
    SumSamples sums;
    for (int c = 0; c < 4; ++c) {
        Eigen::MatrixXd block(40 + 3 * c, 4);
        for (Eigen::Index r = 0; r < block.rows(); ++r)
            for (int k = 0; k < 4; ++k) block(r, k) = (k + 1) * normal(rng);
        sums.by_class.push_back(block);
    }
    const auto st = estimate_moments(sums);
    for (int c = 0; c < 4; ++c) {
        const Eigen::MatrixXd& cov = *st.cov[c];
        REQUIRE((cov - cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
        REQUIRE(es.eigenvalues().minCoeff() >= -1e-9);
        // diagonal reproduces sigma squared (jitter is far below this tolerance)
        for (int k = 0; k < 4; ++k) {
            const double s2 = st.sigma[c](k) * st.sigma[c](k);
            REQUIRE(std::abs(cov(k, k) - s2) <= 1e-9 * std::max(1.0, s2));
        }
    }
    REQUIRE_THAT(st.priors.sum(), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("estimate_moments flags classes without covariance") {
    SumSamples sums;
    Eigen::MatrixXd single(1, 2);
    single << 1.0, 2.0;
    sums.by_class = {single, Eigen::MatrixXd::Zero(3, 2)};
    const auto st = estimate_moments(sums);
    REQUIRE_FALSE(st.cov[0].has_value());
    REQUIRE(st.cov[1].has_value());
    REQUIRE_FALSE(st.all_covariances());
    REQUIRE(st.sigma[0](0) == 0.0);
}

TEST_CASE("estimate_moments validates explicit priors") {
    SumSamples sums;
    sums.by_class = {Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Ones(3, 2)};
    Eigen::VectorXd good(2), bad(2);
    good << 0.25, 0.75;
    bad << 0.5, 0.6;
    REQUIRE(estimate_moments(sums, good).priors(1) == 0.75);
    REQUIRE_THROWS_AS(estimate_moments(sums, bad), std::invalid_argument);
}

TEST_CASE("avg_correlation on diagonal covariances is zero") {
    std::mt19937_64 rng(3);
    SumSamples sums;
    std::normal_distribution<double> normal;
    for (int c = 0; c < 3; ++c) {
        Eigen::MatrixXd block(50, 3);
        for (int r = 0; r < 50; ++r)
            for (int k = 0; k < 3; ++k) block(r, k) = normal(rng);
        sums.by_class.push_back(block);
    }
    auto st = estimate_moments(sums);
    for (auto& cov : st.cov) {
        Eigen::MatrixXd diag = cov->diagonal().asDiagonal();
        cov = diag;
    }
    REQUIRE(avg_correlation(st) == 0.0);
}

TEST_CASE("avg_correlation reads off a single off-diagonal pair") {
    MomentStats st;
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, 0.5, 0.5, 1.0;
    st.mu = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
    st.sigma = {Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2)};
    st.cov = {cov, cov};
    st.priors = Eigen::VectorXd::Constant(2, 0.5);
    st.counts = {10, 10};
    REQUIRE_THAT(avg_correlation(st), Catch::Matchers::WithinAbs(0.5, 1e-15));
}

TEST_CASE("avg_correlation matches a brute-force loop on random PSD matrices") {
    std::mt19937_64 rng(17);
    const int d = 4;
    MomentStats st;
    st.priors = Eigen::VectorXd::Constant(d, 1.0 / d);
    double expected = 0.0;
    for (int c = 0; c < d; ++c) {
        const Eigen::MatrixXd cov = oracle::random_psd(d, rng);
        st.mu.push_back(Eigen::VectorXd::Zero(d));
        st.sigma.push_back(cov.diagonal().cwiseSqrt());
        st.cov.push_back(cov);
        st.counts.push_back(100);
        double sum = 0.0;
        int pairs = 0;
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < d; ++k)
                if (j != k) {
                    sum += cov(j, k) / std::sqrt(cov(j, j) * cov(k, k));
                    ++pairs;
                }
        expected += sum / pairs;
    }
    expected /= d;
    REQUIRE_THAT(avg_correlation(st), Catch::Matchers::WithinAbs(expected, 1e-12));
}

TEST_CASE("avg_correlation rejects zero variance") {
    MomentStats st;
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, 0.0, 0.0, 0.0;
    st.mu = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
    st.sigma = {Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2)};
    st.cov = {cov, cov};
    st.priors = Eigen::VectorXd::Constant(2, 0.5);
    st.counts = {10, 10};
    REQUIRE_THROWS_AS(avg_correlation(st), std::domain_error);
}
