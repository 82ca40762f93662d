#pragma once

// Shallow randomly connected classifier: a random-projection encoder with
// the same clipping nonlinearity as the reservoir, read out either by class
// centroids or by ridge regression, plus a stratified cross-validation and
// grid-search harness.

#include "perceptor/numeric.hpp"
#include "perceptor/stats.hpp"
#include "perceptor/theory.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace perceptor::shallow {

struct Dataset {
    std::string name;
    Eigen::MatrixXd features;  // M x F, normalized to [0, 1] per column
    std::vector<int> labels;   // dense class indices in [0, D)
    int classes = 0;
};

/// Min-max normalizes each column to [0, 1]; constant columns become zero.
inline void normalize_unit_range(Eigen::MatrixXd& features) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
        const double lo = features.col(c).minCoeff();
        const double hi = features.col(c).maxCoeff();
        if (hi > lo)
            features.col(c) = (features.col(c).array() - lo) / (hi - lo);
        else
            features.col(c).setZero();
    }
}

inline void validate(const Dataset& ds) {
    if (ds.classes < 2) throw std::invalid_argument("Dataset: need at least 2 classes");
    if (ds.features.rows() != static_cast<Eigen::Index>(ds.labels.size()))
        throw std::invalid_argument("Dataset: feature/label count mismatch");
    if (ds.features.rows() < ds.classes)
        throw std::invalid_argument("Dataset: fewer samples than classes");
    if (!ds.features.allFinite())
        throw std::invalid_argument("Dataset: non-finite feature");
    if (ds.features.minCoeff() < -1e-9 || ds.features.maxCoeff() > 1.0 + 1e-9)
        throw std::invalid_argument("Dataset: features must lie in [0, 1]");
    std::vector<Eigen::Index> counts(ds.classes, 0);
    for (int label : ds.labels) {
        if (label < 0 || label >= ds.classes)
            throw std::invalid_argument("Dataset: label out of range");
        ++counts[label];
    }
    for (int c = 0; c < ds.classes; ++c)
        if (counts[c] == 0)
            throw std::invalid_argument("Dataset: class " + std::to_string(c) + " is empty");
}

/// Gaussian blob toy problem, normalized like a loaded dataset.
inline Dataset make_blobs(int classes, int per_class, int features, double center_spread,
                          double noise, std::uint64_t seed,
                          const std::string& name = "blobs") {
    if (classes < 2 || per_class < 1 || features < 1)
        throw std::invalid_argument("make_blobs: invalid shape");
    std::mt19937_64 rng = make_rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd centers(classes, features);
    for (int c = 0; c < classes; ++c)
        for (int f = 0; f < features; ++f) centers(c, f) = center_spread * normal(rng);
    Dataset ds;
    ds.name = name;
    ds.classes = classes;
    ds.features.resize(static_cast<Eigen::Index>(classes) * per_class, features);
    ds.labels.resize(static_cast<std::size_t>(classes) * per_class);
    Eigen::Index row = 0;
    for (int c = 0; c < classes; ++c) {
        for (int k = 0; k < per_class; ++k, ++row) {
            for (int f = 0; f < features; ++f)
                ds.features(row, f) = centers(c, f) + noise * normal(rng);
            ds.labels[static_cast<std::size_t>(row)] = c;
        }
    }
    normalize_unit_range(ds.features);
    return ds;
}

// ---------------------------------------------------------------------------
// Encoder

struct EncoderConfig {
    int n = 100;        // hidden units
    double kappa = 3.0; // clipping threshold
    std::uint64_t seed = 0;
};

/// Random projection h = f_kappa(W_in x + b) with W_in uniform on [-1, 1]
/// and b uniform on [-kappa, kappa].
struct Encoder {
    Eigen::MatrixXd w_in;  // N x F
    Eigen::VectorXd b;     // length N
    double kappa = 3.0;
};

inline Encoder make_encoder(const EncoderConfig& cfg, Eigen::Index features) {
    if (cfg.n < 1) throw std::invalid_argument("make_encoder: n must be >= 1");
    if (!(cfg.kappa > 0.0)) throw std::invalid_argument("make_encoder: kappa must be > 0");
    std::mt19937_64 rng = make_rng(cfg.seed);
    std::uniform_real_distribution<double> weight(-1.0, 1.0);
    Encoder enc;
    enc.kappa = cfg.kappa;
    enc.w_in.resize(cfg.n, features);
    for (int r = 0; r < cfg.n; ++r)
        for (Eigen::Index c = 0; c < features; ++c) enc.w_in(r, c) = weight(rng);
    std::uniform_real_distribution<double> bias(-cfg.kappa, cfg.kappa);
    enc.b.resize(cfg.n);
    for (int r = 0; r < cfg.n; ++r) enc.b(r) = bias(rng);
    return enc;
}

inline Eigen::VectorXd encode(const Encoder& enc, const Eigen::VectorXd& x) {
    if (x.size() != enc.w_in.cols())
        throw std::invalid_argument("encode: feature dimension mismatch");
    return ((enc.w_in * x + enc.b).cwiseMax(-enc.kappa)).cwiseMin(enc.kappa);
}

/// Encodes rows of a feature matrix; one encoded row per input row.
inline Eigen::MatrixXd encode_all(const Encoder& enc, const Eigen::MatrixXd& features) {
    if (features.cols() != enc.w_in.cols())
        throw std::invalid_argument("encode_all: feature dimension mismatch");
    Eigen::MatrixXd h = features * enc.w_in.transpose();
    h.rowwise() += enc.b.transpose();
    return h.cwiseMax(-enc.kappa).cwiseMin(enc.kappa);
}

// ---------------------------------------------------------------------------
// Readouts

enum class ReadoutKind { centroid, ridge };

/// Class centroids by superposition; cosine similarity since the
/// superposition norms grow with the class counts.
inline ReadoutPerceptron centroid_readout(const Eigen::MatrixXd& encoded,
                                          const std::vector<int>& labels, int classes) {
    if (encoded.rows() != static_cast<Eigen::Index>(labels.size()))
        throw std::invalid_argument("centroid_readout: row/label mismatch");
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(classes, encoded.cols());
    std::vector<Eigen::Index> counts(classes, 0);
    for (Eigen::Index r = 0; r < encoded.rows(); ++r) {
        const int label = labels[static_cast<std::size_t>(r)];
        if (label < 0 || label >= classes)
            throw std::invalid_argument("centroid_readout: label out of range");
        w.row(label) += encoded.row(r);
        ++counts[label];
    }
    for (int c = 0; c < classes; ++c)
        if (counts[c] == 0)
            throw std::invalid_argument("centroid_readout: class " + std::to_string(c) +
                                        " is empty");
    return {std::move(w), std::nullopt, Similarity::cosine};
}

/// Ridge regression onto one-hot class targets; dot-product similarity.
inline ReadoutPerceptron ridge_readout(const Eigen::MatrixXd& encoded,
                                       const std::vector<int>& labels, int classes,
                                       double lambda) {
    if (encoded.rows() != static_cast<Eigen::Index>(labels.size()))
        throw std::invalid_argument("ridge_readout: row/label mismatch");
    Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(encoded.rows(), classes);
    for (Eigen::Index r = 0; r < encoded.rows(); ++r) {
        const int label = labels[static_cast<std::size_t>(r)];
        if (label < 0 || label >= classes)
            throw std::invalid_argument("ridge_readout: label out of range");
        targets(r, label) = 1.0;
    }
    return {ridge_solve(encoded, targets, lambda), std::nullopt, Similarity::dot};
}

// ---------------------------------------------------------------------------
// Cross-validation

struct FoldRow {
    int fold = 0;
    double accuracy = 0.0;
    double pred_eq2_train = 0.0;
    double pred_eq2_test = 0.0;
};

struct CvResult {
    double accuracy = 0.0;  // mean fold accuracy
    std::vector<FoldRow> folds;
    MomentStats train_stats;  // sum statistics pooled over folds
    MomentStats test_stats;
};

namespace detail {

/// Stratified fold assignment: per class, a seeded shuffle dealt round-robin.
inline std::vector<int> stratified_folds(const std::vector<int>& labels, int classes,
                                         int folds, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::vector<int> assignment(labels.size(), -1);
    std::mt19937_64 rng = make_rng(seed);
    for (int c = 0; c < classes; ++c) {
        auto& idx = by_class[c];
        if (static_cast<int>(idx.size()) < folds)
            throw std::invalid_argument("cross_validate: class " + std::to_string(c) +
                                        " has fewer samples than folds");
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t k = 0; k < idx.size(); ++k)
            assignment[idx[k]] = static_cast<int>(k % folds);
    }
    return assignment;
}

inline ActivationSet group_rows(const Eigen::MatrixXd& encoded,
                                const std::vector<int>& labels,
                                const std::vector<std::size_t>& rows, int classes) {
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t r : rows) by_class[labels[r]].push_back(r);
    ActivationSet acts;
    for (int c = 0; c < classes; ++c) {
        Eigen::MatrixXd block(static_cast<Eigen::Index>(by_class[c].size()),
                              encoded.cols());
        for (std::size_t k = 0; k < by_class[c].size(); ++k)
            block.row(static_cast<Eigen::Index>(k)) =
                encoded.row(static_cast<Eigen::Index>(by_class[c][k]));
        acts.samples.push_back(std::move(block));
    }
    return acts;
}

inline void append_sums(SumSamples& pooled, const SumSamples& fold) {
    if (pooled.by_class.empty()) {
        pooled = fold;
        return;
    }
    for (std::size_t c = 0; c < fold.by_class.size(); ++c) {
        Eigen::MatrixXd merged(pooled.by_class[c].rows() + fold.by_class[c].rows(),
                               fold.by_class[c].cols());
        merged << pooled.by_class[c], fold.by_class[c];
        pooled.by_class[c] = std::move(merged);
    }
}

}  // namespace detail

/// Stratified k-fold evaluation. Returns the mean fold accuracy together
/// with sum statistics pooled from the training folds and from the test
/// folds separately (each fold contributes sums under its own readout).
inline CvResult cross_validate(const Dataset& ds, const EncoderConfig& cfg,
                               ReadoutKind kind, int folds, double lambda = 0.01) {
    validate(ds);
    if (folds < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");
    const std::vector<int> assignment =
        detail::stratified_folds(ds.labels, ds.classes, folds, derive_seed(cfg.seed, 0xF01D));
    const Encoder enc = make_encoder(cfg, ds.features.cols());
    const Eigen::MatrixXd encoded = encode_all(enc, ds.features);

    CvResult result;
    SumSamples pooled_train, pooled_test;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t i = 0; i < ds.labels.size(); ++i)
            (assignment[i] == f ? test_rows : train_rows).push_back(i);
        std::vector<int> train_labels;
        train_labels.reserve(train_rows.size());
        Eigen::MatrixXd train_block(static_cast<Eigen::Index>(train_rows.size()),
                                    encoded.cols());
        for (std::size_t k = 0; k < train_rows.size(); ++k) {
            train_block.row(static_cast<Eigen::Index>(k)) =
                encoded.row(static_cast<Eigen::Index>(train_rows[k]));
            train_labels.push_back(ds.labels[train_rows[k]]);
        }
        const ReadoutPerceptron readout =
            kind == ReadoutKind::centroid
                ? centroid_readout(train_block, train_labels, ds.classes)
                : ridge_readout(train_block, train_labels, ds.classes, lambda);

        const ActivationSet train_acts =
            detail::group_rows(encoded, ds.labels, train_rows, ds.classes);
        const ActivationSet test_acts =
            detail::group_rows(encoded, ds.labels, test_rows, ds.classes);
        const SumSamples train_sums = compute_sums(train_acts, readout);
        const SumSamples test_sums = compute_sums(test_acts, readout);

        FoldRow row;
        row.fold = f;
        row.accuracy = accuracy_from_sums(test_sums).aggregate;
        row.pred_eq2_train = predict_report_eq2(estimate_moments(train_sums)).aggregate;
        row.pred_eq2_test = predict_report_eq2(estimate_moments(test_sums)).aggregate;
        result.folds.push_back(row);
        result.accuracy += row.accuracy / folds;

        detail::append_sums(pooled_train, train_sums);
        detail::append_sums(pooled_test, test_sums);
    }
    result.train_stats = estimate_moments(pooled_train);
    result.test_stats = estimate_moments(pooled_test);
    return result;
}

// ---------------------------------------------------------------------------
// Grid search

struct GridCell {
    int n = 0;
    double lambda = 0.0;
    double kappa = 0.0;
    double accuracy = 0.0;
    std::vector<FoldRow> folds;
};

struct GridResult {
    GridCell best;
    std::vector<GridCell> cells;
};

/// Exhaustive search over (N, lambda, kappa). Ties break towards smaller N,
/// then smaller lambda, then smaller kappa. Cell seeds derive from the base
/// seed and the cell coordinates, so cells can run concurrently.
inline GridResult grid_search(const Dataset& ds, const std::vector<int>& n_grid,
                              const std::vector<double>& lambda_grid,
                              const std::vector<double>& kappa_grid, ReadoutKind kind,
                              int folds, std::uint64_t base_seed, int threads = 1) {
    if (n_grid.empty() || lambda_grid.empty() || kappa_grid.empty())
        throw std::invalid_argument("grid_search: empty grid");
    std::vector<int> ns = n_grid;
    std::vector<double> lambdas = lambda_grid;
    std::vector<double> kappas = kappa_grid;
    std::sort(ns.begin(), ns.end());
    std::sort(lambdas.begin(), lambdas.end());
    std::sort(kappas.begin(), kappas.end());

    GridResult result;
    result.cells.resize(ns.size() * lambdas.size() * kappas.size());
    parallel_for(result.cells.size(), threads, [&](std::size_t cell) {
        const std::size_t ki = cell % kappas.size();
        const std::size_t li = (cell / kappas.size()) % lambdas.size();
        const std::size_t ni = cell / (kappas.size() * lambdas.size());
        EncoderConfig cfg;
        cfg.n = ns[ni];
        cfg.kappa = kappas[ki];
        cfg.seed = derive_seed(base_seed, ns[ni], li, ki);
        const CvResult cv = cross_validate(ds, cfg, kind, folds, lambdas[li]);
        GridCell& out = result.cells[cell];
        out.n = ns[ni];
        out.lambda = lambdas[li];
        out.kappa = kappas[ki];
        out.accuracy = cv.accuracy;
        out.folds = cv.folds;
    });

    const GridCell* best = &result.cells.front();
    for (const GridCell& cell : result.cells)
        if (cell.accuracy > best->accuracy) best = &cell;  // first of ties wins
    result.best = *best;
    return result;
}

}  // namespace perceptor::shallow
