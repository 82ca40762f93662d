#include "perceptor/shallow.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace perceptor;
using namespace perceptor::shallow;

namespace {

Dataset blob_toy(std::uint64_t seed = 5, double noise = 0.08) {
    // Two distant blobs: linearly separable.
    return make_blobs(2, 60, 2, 3.0, noise, seed, "blob_toy");
}

}  // namespace

TEST_CASE("make_blobs yields a valid normalized dataset") {
    const Dataset ds = blob_toy();
    shallow::validate(ds);
    REQUIRE(ds.features.minCoeff() >= 0.0);
    REQUIRE(ds.features.maxCoeff() <= 1.0);
    REQUIRE(ds.features.rows() == 120);
}

TEST_CASE("encoder is a clipped affine map") {
    EncoderConfig cfg;
    cfg.n = 16;
    cfg.kappa = 3.0;
    cfg.seed = 9;
    Encoder enc = make_encoder(cfg, 4);

    SECTION("zero input with zero bias encodes to zero") {
        enc.b.setZero();
        REQUIRE(encode(enc, Eigen::VectorXd::Zero(4)).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("outputs stay inside the clipping band") {
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int trial = 0; trial < 50; ++trial) {
            Eigen::VectorXd x(4);
            for (int f = 0; f < 4; ++f) x(f) = unit(rng);
            const Eigen::VectorXd h = encode(enc, x);
            REQUIRE(h.maxCoeff() <= cfg.kappa);
            REQUIRE(h.minCoeff() >= -cfg.kappa);
        }
    }
    SECTION("same seed encodes identically, bit for bit") {
        const Encoder enc2 = make_encoder(cfg, 4);
        Eigen::VectorXd x(4);
        x << 0.1, 0.9, 0.4, 0.7;
        REQUIRE((encode(enc, x) - encode(enc2, x)).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("encode_all agrees with row-wise encode") {
        const Dataset ds = blob_toy();
        const Encoder e = make_encoder(cfg, ds.features.cols());
        const Eigen::MatrixXd h = encode_all(e, ds.features);
        for (Eigen::Index r = 0; r < 5; ++r)
            REQUIRE((h.row(r).transpose() - encode(e, ds.features.row(r).transpose()))
                        .cwiseAbs()
                        .maxCoeff() < 1e-12);
    }
}

TEST_CASE("centroid readout superimposes class members") {
    Eigen::MatrixXd encoded(2, 3);
    encoded << 1.0, 2.0, 3.0, -1.0, 0.5, 2.0;
    SECTION("one sample per class keeps the samples as rows") {
        const auto readout = centroid_readout(encoded, {0, 1}, 2);
        REQUIRE((readout.weights - encoded).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(readout.similarity == Similarity::cosine);
    }
    SECTION("duplicated samples double the rows but not cosine predictions") {
        Eigen::MatrixXd doubled(4, 3);
        doubled << encoded, encoded;
        const auto once = centroid_readout(encoded, {0, 1}, 2);
        const auto twice = centroid_readout(doubled, {0, 1, 0, 1}, 2);
        REQUIRE((twice.weights - 2.0 * once.weights).cwiseAbs().maxCoeff() == 0.0);
        ActivationSet acts;
        acts.samples = {encoded.row(0), encoded.row(1)};
        const auto sums_once = compute_sums(acts, once);
        const auto sums_twice = compute_sums(acts, twice);
        for (int c = 0; c < 2; ++c)
            REQUIRE((sums_once.by_class[c] - sums_twice.by_class[c]).cwiseAbs().maxCoeff() <
                    1e-12);
    }
    SECTION("identical samples in different classes collide") {
        Eigen::MatrixXd same(2, 3);
        same << 1.0, 2.0, 3.0, 1.0, 2.0, 3.0;
        const auto readout = centroid_readout(same, {0, 1}, 2);
        REQUIRE((readout.weights.row(0) - readout.weights.row(1)).cwiseAbs().maxCoeff() ==
                0.0);
    }
    SECTION("empty class is rejected") {
        REQUIRE_THROWS_AS(centroid_readout(encoded, {0, 0}, 2), std::invalid_argument);
    }
}

TEST_CASE("ridge readout mirrors the regression contract") {
    SECTION("identity design interpolates") {
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(5, 5);
        const auto readout = ridge_readout(eye, {0, 1, 2, 3, 4}, 5, 0.0);
        REQUIRE((readout.weights - eye).cwiseAbs().maxCoeff() < 1e-10);
        REQUIRE(readout.similarity == Similarity::dot);
    }
    SECTION("huge penalty shrinks the filters away") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> normal;
        Eigen::MatrixXd encoded(30, 6);
        for (Eigen::Index r = 0; r < 30; ++r)
            for (int c = 0; c < 6; ++c) encoded(r, c) = normal(rng);
        std::vector<int> labels(30);
        for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 3);
        REQUIRE(ridge_readout(encoded, labels, 3, 1e12).weights.norm() < 1e-6);
    }
    SECTION("solution is a local optimum of the ridge objective") {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> normal;
        Eigen::MatrixXd encoded(25, 6);
        for (Eigen::Index r = 0; r < 25; ++r)
            for (int c = 0; c < 6; ++c) encoded(r, c) = normal(rng);
        std::vector<int> labels(25);
        for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
        const double lambda = 0.7;
        const auto readout = ridge_readout(encoded, labels, 2, lambda);
        Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(25, 2);
        for (int r = 0; r < 25; ++r) targets(r, labels[static_cast<std::size_t>(r)]) = 1.0;
        auto objective = [&](const Eigen::MatrixXd& w) {
            return (encoded * w.transpose() - targets).squaredNorm() +
                   lambda * w.squaredNorm();
        };
        const double best = objective(readout.weights);
        for (int trial = 0; trial < 10; ++trial) {
            Eigen::MatrixXd delta(2, 6);
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 6; ++c) delta(r, c) = normal(rng);
            delta *= 1e-3 / delta.norm();
            REQUIRE(objective(readout.weights + delta) >= best);
        }
    }
}

TEST_CASE("cross-validation separates an easy toy and stays at chance on noise") {
    EncoderConfig cfg;
    cfg.n = 100;
    cfg.kappa = 3.0;
    cfg.seed = 11;
    SECTION("separable blobs reach high accuracy with both readouts") {
        const Dataset ds = blob_toy();
        REQUIRE(cross_validate(ds, cfg, ReadoutKind::centroid, 5).accuracy >= 0.95);
        REQUIRE(cross_validate(ds, cfg, ReadoutKind::ridge, 5).accuracy >= 0.95);
    }
    SECTION("shuffled labels score near chance") {
        Dataset ds = blob_toy(21);
        std::mt19937_64 rng(31);
        std::shuffle(ds.labels.begin(), ds.labels.end(), rng);
        const double acc = cross_validate(ds, cfg, ReadoutKind::ridge, 5).accuracy;
        REQUIRE(std::abs(acc - 0.5) < 0.1);
    }
    SECTION("fold count barely moves the estimate on the easy toy") {
        const Dataset ds = blob_toy();
        const double k2 = cross_validate(ds, cfg, ReadoutKind::ridge, 2).accuracy;
        const double k5 = cross_validate(ds, cfg, ReadoutKind::ridge, 5).accuracy;
        REQUIRE(std::abs(k2 - k5) < 0.05);
    }
    SECTION("class smaller than the fold count is rejected") {
        Dataset tiny = make_blobs(2, 3, 2, 3.0, 0.05, 7);
        REQUIRE_THROWS_AS(cross_validate(tiny, cfg, ReadoutKind::ridge, 5),
                          std::invalid_argument);
    }
}

TEST_CASE("cross-validation pools train and test statistics separately") {
    const Dataset ds = blob_toy();
    EncoderConfig cfg;
    cfg.n = 60;
    cfg.kappa = 3.0;
    cfg.seed = 17;
    const CvResult cv = cross_validate(ds, cfg, ReadoutKind::ridge, 5);
    REQUIRE(cv.folds.size() == 5);
    // 4/5 of the data lands in each training pool, all of it in the test pool
    Eigen::Index train_total = 0, test_total = 0;
    for (const auto c : cv.train_stats.counts) train_total += c;
    for (const auto c : cv.test_stats.counts) test_total += c;
    REQUIRE(train_total == 4 * ds.features.rows());
    REQUIRE(test_total == ds.features.rows());
    for (const auto& row : cv.folds) {
        REQUIRE(row.pred_eq2_train >= 0.0);
        REQUIRE(row.pred_eq2_train <= 1.0);
        REQUIRE(row.pred_eq2_test >= 0.0);
        REQUIRE(row.pred_eq2_test <= 1.0);
    }
}

TEST_CASE("grid search scans the grid and breaks ties towards smaller configs") {
    const Dataset ds = blob_toy();
    SECTION("singleton grid returns that configuration") {
        const GridResult r =
            grid_search(ds, {80}, {0.25}, {3.0}, ReadoutKind::ridge, 3, 41);
        REQUIRE(r.best.n == 80);
        REQUIRE(r.best.lambda == 0.25);
        REQUIRE(r.best.kappa == 3.0);
        REQUIRE(r.cells.size() == 1);
    }
    SECTION("a grid containing a strong config finds at least its accuracy") {
        const GridResult r = grid_search(ds, {50, 100}, {0.01, 1.0}, {1.0, 3.0},
                                         ReadoutKind::ridge, 3, 43);
        REQUIRE(r.cells.size() == 8);
        REQUIRE(r.best.accuracy >= 0.95);
    }
    SECTION("bit-identical accuracies prefer smaller N, lambda, kappa") {
        // The toy is trivially separable, so every config scores exactly 1.0.
        const Dataset easy = make_blobs(2, 20, 2, 10.0, 0.001, 3, "easy");
        const GridResult r = grid_search(easy, {120, 60}, {0.5, 0.01}, {5.0, 1.0},
                                         ReadoutKind::ridge, 2, 45);
        REQUIRE(r.best.accuracy == 1.0);
        REQUIRE(r.best.n == 60);
        REQUIRE(r.best.lambda == 0.01);
        REQUIRE(r.best.kappa == 1.0);
    }
    SECTION("grid search is independent of thread count") {
        const GridResult a = grid_search(ds, {50, 100}, {0.01, 1.0}, {1.0, 3.0},
                                         ReadoutKind::centroid, 3, 47, 1);
        const GridResult b = grid_search(ds, {50, 100}, {0.01, 1.0}, {1.0, 3.0},
                                         ReadoutKind::centroid, 3, 47, 2);
        for (std::size_t i = 0; i < a.cells.size(); ++i)
            REQUIRE(a.cells[i].accuracy == b.cells[i].accuracy);
    }
}
