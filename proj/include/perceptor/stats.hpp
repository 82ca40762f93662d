#pragma once

// Postsynaptic-sum statistics: turns (activations, readout) pairs into the
// per-class first and second moments consumed by the accuracy predictors.

#include "perceptor/numeric.hpp"

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace perceptor {

enum class Similarity { dot, cosine };

/// Labeled activation vectors grouped by true class: samples[c] is an
/// M_c x N matrix whose rows are the activations of class c.
struct ActivationSet {
    std::vector<Eigen::MatrixXd> samples;

    int classes() const { return static_cast<int>(samples.size()); }
    Eigen::Index dim() const { return samples.empty() ? 0 : samples.front().cols(); }
    Eigen::Index total_count() const {
        Eigen::Index n = 0;
        for (const auto& m : samples) n += m.rows();
        return n;
    }
};

inline void validate(const ActivationSet& acts) {
    if (acts.samples.empty()) throw std::invalid_argument("ActivationSet: no classes");
    const Eigen::Index n = acts.samples.front().cols();
    if (n < 1) throw std::invalid_argument("ActivationSet: zero-dimensional activations");
    for (std::size_t c = 0; c < acts.samples.size(); ++c) {
        const auto& m = acts.samples[c];
        if (m.cols() != n)
            throw std::invalid_argument("ActivationSet: inconsistent activation dimension");
        if (m.rows() < 1)
            throw std::invalid_argument("ActivationSet: class " + std::to_string(c) +
                                        " has no samples");
        if (!m.allFinite())
            throw std::invalid_argument("ActivationSet: non-finite activation value");
    }
}

/// The final dense layer viewed as D linear filters (rows of `weights`).
/// Winner-take-all over its postsynaptic sums is the classifier.
struct ReadoutPerceptron {
    Eigen::MatrixXd weights;             // D x N, row i = filter of class i
    std::optional<Eigen::VectorXd> bias; // length D, dot mode only
    Similarity similarity = Similarity::dot;

    Eigen::Index classes() const { return weights.rows(); }
    Eigen::Index dim() const { return weights.cols(); }
};

inline void validate(const ReadoutPerceptron& readout) {
    if (readout.weights.rows() < 2)
        throw std::invalid_argument("ReadoutPerceptron: need at least 2 classes");
    if (readout.weights.cols() < 1)
        throw std::invalid_argument("ReadoutPerceptron: need at least 1 input dimension");
    if (!readout.weights.allFinite())
        throw std::invalid_argument("ReadoutPerceptron: non-finite weight");
    if (readout.bias) {
        if (readout.bias->size() != readout.weights.rows())
            throw std::invalid_argument("ReadoutPerceptron: bias length != class count");
        if (!readout.bias->allFinite())
            throw std::invalid_argument("ReadoutPerceptron: non-finite bias");
    }
    if (readout.similarity == Similarity::cosine) {
        for (Eigen::Index i = 0; i < readout.weights.rows(); ++i)
            if (readout.weights.row(i).norm() == 0.0)
                throw std::invalid_argument(
                    "ReadoutPerceptron: zero-norm filter in cosine mode");
    }
}

/// Per true class, an M_i x D matrix of postsynaptic-sum vectors (one row
/// per input, one column per output neuron).
struct SumSamples {
    std::vector<Eigen::MatrixXd> by_class;

    int classes() const { return static_cast<int>(by_class.size()); }
};

inline void validate(const SumSamples& sums) {
    if (sums.by_class.empty()) throw std::invalid_argument("SumSamples: no classes");
    const Eigen::Index d = static_cast<Eigen::Index>(sums.by_class.size());
    for (std::size_t c = 0; c < sums.by_class.size(); ++c) {
        if (sums.by_class[c].cols() != d)
            throw std::invalid_argument("SumSamples: column count != class count");
        if (sums.by_class[c].rows() < 1)
            throw std::invalid_argument("SumSamples: class " + std::to_string(c) +
                                        " has no rows");
    }
}

/// Per-class mean vector, std vector, covariance matrix, and class priors.
/// Covariance is absent for classes with fewer than two samples.
struct MomentStats {
    std::vector<Eigen::VectorXd> mu;                 // per class, length D
    std::vector<Eigen::VectorXd> sigma;              // per class, length D
    std::vector<std::optional<Eigen::MatrixXd>> cov; // per class, D x D
    Eigen::VectorXd priors;                          // length D, sums to 1
    std::vector<Eigen::Index> counts;

    int classes() const { return static_cast<int>(mu.size()); }
    bool all_covariances() const {
        for (const auto& c : cov)
            if (!c) return false;
        return true;
    }
};

/// Postsynaptic sums of every sample against every filter. In cosine mode
/// components are cosine similarities and the bias is ignored.
inline SumSamples compute_sums(const ActivationSet& acts, const ReadoutPerceptron& readout) {
    validate(acts);
    validate(readout);
    if (acts.dim() != readout.dim())
        throw std::invalid_argument("compute_sums: activation dim " +
                                    std::to_string(acts.dim()) + " != readout dim " +
                                    std::to_string(readout.dim()));
    SumSamples sums;
    sums.by_class.reserve(acts.samples.size());
    Eigen::VectorXd filter_norms;
    if (readout.similarity == Similarity::cosine)
        filter_norms = readout.weights.rowwise().norm();
    for (const auto& block : acts.samples) {
        Eigen::MatrixXd s = block * readout.weights.transpose();
        if (readout.similarity == Similarity::dot) {
            if (readout.bias) s.rowwise() += readout.bias->transpose();
        } else {
            const Eigen::VectorXd sample_norms = block.rowwise().norm();
            for (Eigen::Index r = 0; r < s.rows(); ++r) {
                if (sample_norms(r) == 0.0)
                    throw std::invalid_argument(
                        "compute_sums: zero-norm activation in cosine mode");
                s.row(r) /= sample_norms(r);
            }
            s.array().rowwise() /= filter_norms.transpose().array();
        }
        sums.by_class.push_back(std::move(s));
    }
    return sums;
}

namespace detail {

// Jitter rule: if the smallest eigenvalue falls below 1e-10 * trace / D,
// add that amount to the diagonal so downstream Cholesky sampling works.
inline void regularize_psd(Eigen::MatrixXd& cov) {
    const double scale = cov.trace() / static_cast<double>(cov.rows());
    if (!(scale > 0.0)) return;  // all-zero variances: nothing to do
    const double eps = 1e-10 * scale;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov,
                                                            Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < eps) cov.diagonal().array() += eps;
}

}  // namespace detail

/// Sample moments per class: unbiased mean/std/covariance (divisor M-1),
/// covariance regularized to PSD. Priors default to empirical counts.
inline MomentStats estimate_moments(
    const SumSamples& sums, const std::optional<Eigen::VectorXd>& priors = std::nullopt) {
    validate(sums);
    const int d = sums.classes();
    MomentStats st;
    st.mu.reserve(d);
    st.sigma.reserve(d);
    st.cov.reserve(d);
    st.counts.reserve(d);
    Eigen::Index total = 0;
    for (int c = 0; c < d; ++c) {
        const Eigen::MatrixXd& s = sums.by_class[c];
        const Eigen::Index m = s.rows();
        total += m;
        st.counts.push_back(m);
        const Eigen::VectorXd mean = s.colwise().mean();
        st.mu.push_back(mean);
        if (m >= 2) {
            const Eigen::MatrixXd centered = s.rowwise() - mean.transpose();
            Eigen::MatrixXd cov =
                (centered.transpose() * centered) / static_cast<double>(m - 1);
            cov = 0.5 * (cov + cov.transpose());  // enforce exact symmetry
            st.sigma.push_back(cov.diagonal().cwiseMax(0.0).cwiseSqrt());
            detail::regularize_psd(cov);
            st.cov.push_back(std::move(cov));
        } else {
            st.sigma.push_back(Eigen::VectorXd::Zero(d));
            st.cov.push_back(std::nullopt);
        }
    }
    if (priors) {
        if (priors->size() != d)
            throw std::invalid_argument("estimate_moments: prior length != class count");
        if ((priors->array() < 0.0).any())
            throw std::invalid_argument("estimate_moments: negative prior");
        if (std::abs(priors->sum() - 1.0) > 1e-12)
            throw std::invalid_argument("estimate_moments: priors must sum to 1");
        st.priors = *priors;
    } else {
        st.priors = Eigen::VectorXd(d);
        for (int c = 0; c < d; ++c)
            st.priors(c) = static_cast<double>(st.counts[c]) / static_cast<double>(total);
    }
    return st;
}

struct ClassAccuracy {
    Eigen::VectorXd per_class;
    double aggregate = 0.0;
};

/// Winner-take-all accuracy from postsynaptic sums: a sample counts as
/// correct only when its own neuron's sum is the strict maximum (ties lose).
inline ClassAccuracy accuracy_from_sums(const SumSamples& sums) {
    validate(sums);
    const int d = sums.classes();
    ClassAccuracy out;
    out.per_class.resize(d);
    Eigen::Index total = 0;
    long correct_total = 0;
    for (int c = 0; c < d; ++c) {
        const Eigen::MatrixXd& s = sums.by_class[c];
        long correct = 0;
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            bool win = true;
            for (Eigen::Index j = 0; j < d && win; ++j)
                if (j != c && !(s(r, c) > s(r, j))) win = false;
            correct += win;
        }
        out.per_class(c) = static_cast<double>(correct) / static_cast<double>(s.rows());
        total += s.rows();
        correct_total += correct;
    }
    out.aggregate = static_cast<double>(correct_total) / static_cast<double>(total);
    return out;
}

/// Mean over classes of the mean off-diagonal Pearson correlation in that
/// class's covariance matrix.
inline double avg_correlation(const MomentStats& stats) {
    const int d = stats.classes();
    if (d < 2) throw std::invalid_argument("avg_correlation: need at least 2 classes");
    double acc = 0.0;
    for (int c = 0; c < d; ++c) {
        if (!stats.cov[c])
            throw std::invalid_argument("avg_correlation: covariance unavailable for class " +
                                        std::to_string(c));
        const Eigen::MatrixXd& cov = *stats.cov[c];
        const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
        if ((sd.array() <= 0.0).any())
            throw std::domain_error("avg_correlation: zero variance on an output neuron");
        double sum = 0.0;
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index k = 0; k < d; ++k)
                if (j != k) sum += cov(j, k) / (sd(j) * sd(k));
        acc += sum / static_cast<double>(d * (d - 1));
    }
    return acc / static_cast<double>(d);
}

}  // namespace perceptor
