#pragma once

// Accuracy predictors. All of them ask the same question of the fitted
// postsynaptic-sum statistics: with what probability does the correct
// neuron's sum exceed every distractor's sum?
//
//   eq1    - one shared Gaussian for all distractors, 1-D quadrature
//   eq2    - independent per-neuron Gaussians, 1-D quadrature
//   eq3_mc - full covariance, Monte Carlo over the multivariate normal
//   eq2_kde - eq2 with kernel density estimates instead of Gaussians

#include "perceptor/numeric.hpp"
#include "perceptor/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace perceptor {

enum class Method { eq1, eq2, eq3_mc, eq2_kde };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::eq1: return "eq1";
        case Method::eq2: return "eq2";
        case Method::eq3_mc: return "eq3_mc";
        case Method::eq2_kde: return "eq2_kde";
    }
    return "?";
}

/// Hit/reject statistics when all distractor neurons are assumed to share
/// one distribution: mean/std of the correct-class sum (mu_h, sigma_h) and
/// of every other neuron's sum (mu_r, sigma_r).
struct SharedDistractorStats {
    double mu_h = 0.0;
    double sigma_h = 0.0;
    double mu_r = 0.0;
    double sigma_r = 0.0;
    int classes = 0;
};

/// Per-class predicted accuracies and their prior-weighted aggregate.
struct PredictionReport {
    Eigen::VectorXd per_class;
    double aggregate = 0.0;
    Method method = Method::eq2;
    std::optional<long> mc_samples;
    std::optional<Eigen::VectorXd> mc_stderr;
    std::optional<std::uint64_t> seed;
};

inline double aggregate(const Eigen::VectorXd& per_class, const Eigen::VectorXd& priors) {
    if (per_class.size() != priors.size())
        throw std::invalid_argument("aggregate: length mismatch");
    if (!per_class.allFinite() || !priors.allFinite())
        throw std::invalid_argument("aggregate: non-finite input");
    return per_class.dot(priors);
}

/// Pools hit values (correct neuron's sum) and reject values (all other
/// neurons) across classes; unbiased standard deviations.
inline SharedDistractorStats pooled_shared_stats(const SumSamples& sums) {
    validate(sums);
    const int d = sums.classes();
    double hit_sum = 0.0, rej_sum = 0.0;
    Eigen::Index n_hit = 0, n_rej = 0;
    for (int c = 0; c < d; ++c) {
        const auto& s = sums.by_class[c];
        hit_sum += s.col(c).sum();
        rej_sum += s.sum() - s.col(c).sum();
        n_hit += s.rows();
        n_rej += s.rows() * (d - 1);
    }
    if (n_hit < 2 || n_rej < 2)
        throw std::invalid_argument("pooled_shared_stats: need at least 2 samples");
    SharedDistractorStats out;
    out.classes = d;
    out.mu_h = hit_sum / static_cast<double>(n_hit);
    out.mu_r = rej_sum / static_cast<double>(n_rej);
    double hit_ss = 0.0, rej_ss = 0.0;
    for (int c = 0; c < d; ++c) {
        const auto& s = sums.by_class[c];
        hit_ss += (s.col(c).array() - out.mu_h).square().sum();
        for (Eigen::Index j = 0; j < d; ++j)
            if (j != c) rej_ss += (s.col(j).array() - out.mu_r).square().sum();
    }
    out.sigma_h = std::sqrt(hit_ss / static_cast<double>(n_hit - 1));
    out.sigma_r = std::sqrt(rej_ss / static_cast<double>(n_rej - 1));
    return out;
}

/// Probability that the correct neuron beats D-1 i.i.d. distractors:
/// integral of N(x; mu_h, sigma_h^2) * Phi(x; mu_r, sigma_r)^(D-1) dx.
inline double predict_eq1(const SharedDistractorStats& s) {
    if (!std::isfinite(s.mu_h) || !std::isfinite(s.mu_r) || !std::isfinite(s.sigma_h) ||
        !std::isfinite(s.sigma_r))
        throw std::invalid_argument("predict_eq1: non-finite statistics");
    if (!(s.sigma_h > 0.0) || !(s.sigma_r > 0.0))
        throw std::invalid_argument("predict_eq1: standard deviations must be positive");
    if (s.classes < 2) throw std::invalid_argument("predict_eq1: need at least 2 classes");
    const double power = static_cast<double>(s.classes - 1);
    const double a = integrate_adaptive(
        [&](double x) {
            return normal_pdf(x, s.mu_h, s.sigma_h) *
                   std::pow(normal_cdf(x, s.mu_r, s.sigma_r), power);
        },
        s.mu_h - 10.0 * s.sigma_h, s.mu_h + 10.0 * s.sigma_h);
    return std::clamp(a, 0.0, 1.0);
}

/// Class-i accuracy under independent per-neuron Gaussians: integral of
/// N(x; mu_i, sigma_i^2) * prod_{j != i} Phi(x; mu_j, sigma_j) dx, where
/// mu, sigma are class i's component vectors. Zero-sigma components act as
/// point masses (step-function CDFs, ties counted as incorrect).
inline double predict_eq2(const MomentStats& stats, int i) {
    const int d = stats.classes();
    if (i < 0 || i >= d) throw std::invalid_argument("predict_eq2: class index out of range");
    const Eigen::VectorXd& mu = stats.mu[i];
    const Eigen::VectorXd& sg = stats.sigma[i];
    if (!mu.allFinite() || !sg.allFinite() || (sg.array() < 0.0).any())
        throw std::invalid_argument("predict_eq2: invalid moment statistics");

    double degenerate_max = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j)
        if (j != i && sg(j) == 0.0) degenerate_max = std::max(degenerate_max, mu(j));

    if (sg(i) == 0.0) {
        // Correct class is a point mass at mu(i).
        double p = 1.0;
        for (int j = 0; j < d && p > 0.0; ++j) {
            if (j == i) continue;
            p *= sg(j) > 0.0 ? normal_cdf(mu(i), mu(j), sg(j)) : (mu(i) > mu(j) ? 1.0 : 0.0);
        }
        return p;
    }

    double lo = mu(i) - 10.0 * sg(i);
    const double hi = mu(i) + 10.0 * sg(i);
    lo = std::max(lo, degenerate_max);  // point-mass distractors force x above them
    if (!(lo < hi)) return 0.0;
    const double a = integrate_adaptive(
        [&](double x) {
            double v = normal_pdf(x, mu(i), sg(i));
            for (int j = 0; j < d && v != 0.0; ++j) {
                if (j == i || sg(j) == 0.0) continue;
                v *= normal_cdf(x, mu(j), sg(j));
            }
            return v;
        },
        lo, hi);
    return std::clamp(a, 0.0, 1.0);
}

inline Eigen::VectorXd predict_eq2_all(const MomentStats& stats) {
    Eigen::VectorXd a(stats.classes());
    for (int i = 0; i < stats.classes(); ++i) a(i) = predict_eq2(stats, i);
    return a;
}

/// Class-i accuracy under the full covariance model, estimated as the
/// fraction of N(mu_i, Sigma_i) draws whose component i is the strict
/// maximum. Returns (estimate, binomial standard error). Deterministic for
/// a fixed seed.
inline std::pair<double, double> predict_eq3_mc(const MomentStats& stats, int i,
                                                long samples, std::uint64_t seed) {
    const int d = stats.classes();
    if (i < 0 || i >= d)
        throw std::invalid_argument("predict_eq3_mc: class index out of range");
    if (samples < 1) throw std::invalid_argument("predict_eq3_mc: samples must be >= 1");
    if (!stats.cov[i])
        throw std::invalid_argument("predict_eq3_mc: covariance unavailable for class " +
                                    std::to_string(i));
    const Eigen::VectorXd& mu = stats.mu[i];
    Eigen::MatrixXd cov = *stats.cov[i];
    if (!mu.allFinite() || !cov.allFinite())
        throw std::invalid_argument("predict_eq3_mc: non-finite moment statistics");

    if (cov.trace() == 0.0) {
        // Point mass at mu: win iff component i is the strict maximum.
        bool wins = true;
        for (int j = 0; j < d; ++j)
            if (j != i && !(mu(i) > mu(j))) wins = false;
        return {wins ? 1.0 : 0.0, 0.0};
    }

    detail::regularize_psd(cov);
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("predict_eq3_mc: Cholesky failed after regularization");
    const Eigen::MatrixXd l = llt.matrixL();

    std::mt19937_64 rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(d), x(d);
    long wins = 0;
    for (long s = 0; s < samples; ++s) {
        for (int k = 0; k < d; ++k) z(k) = normal(rng);
        x.noalias() = l * z;
        x += mu;
        bool win = true;
        for (int j = 0; j < d && win; ++j)
            if (j != i && !(x(i) > x(j))) win = false;  // ties are errors
        wins += win;
    }
    const double a = static_cast<double>(wins) / static_cast<double>(samples);
    const double se = std::sqrt(a * (1.0 - a) / static_cast<double>(samples));
    return {a, se};
}

/// eq2 with per-component Gaussian kernel density estimates fitted to class
/// i's sum samples. Bandwidth: Silverman's rule per component when absent.
inline double predict_eq2_kde(const SumSamples& sums, int i,
                              std::optional<double> bandwidth = std::nullopt) {
    validate(sums);
    const int d = sums.classes();
    if (i < 0 || i >= d)
        throw std::invalid_argument("predict_eq2_kde: class index out of range");
    const Eigen::MatrixXd& s = sums.by_class[i];
    const Eigen::Index m = s.rows();
    if (m < 5) throw std::invalid_argument("predict_eq2_kde: need at least 5 samples");

    Eigen::VectorXd h(d);
    if (bandwidth) {
        if (!(*bandwidth > 0.0))
            throw std::invalid_argument("predict_eq2_kde: bandwidth must be positive");
        h.setConstant(*bandwidth);
    } else {
        const double m_factor = std::pow(static_cast<double>(m), -0.2);
        for (int j = 0; j < d; ++j) {
            const double mean = s.col(j).mean();
            const double var =
                (s.col(j).array() - mean).square().sum() / static_cast<double>(m - 1);
            const double silverman = 1.06 * std::sqrt(var) * m_factor;
            h(j) = silverman > 0.0 ? silverman : 1e-9 * (1.0 + std::abs(mean));
        }
    }

    const double lo = s.col(i).minCoeff() - 5.0 * h(i);
    const double hi = s.col(i).maxCoeff() + 5.0 * h(i);
    const double inv_m = 1.0 / static_cast<double>(m);
    const double a = integrate_adaptive(
        [&](double x) {
            double density = 0.0;
            for (Eigen::Index k = 0; k < m; ++k) density += normal_pdf(x, s(k, i), h(i));
            double v = density * inv_m;
            for (int j = 0; j < d && v != 0.0; ++j) {
                if (j == i) continue;
                double cdf = 0.0;
                for (Eigen::Index k = 0; k < m; ++k) cdf += normal_cdf(x, s(k, j), h(j));
                v *= cdf * inv_m;
            }
            return v;
        },
        lo, hi);
    return std::clamp(a, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Report builders

inline PredictionReport predict_report_eq1(const SharedDistractorStats& s,
                                           const Eigen::VectorXd& priors) {
    PredictionReport r;
    r.method = Method::eq1;
    r.per_class = Eigen::VectorXd::Constant(s.classes, predict_eq1(s));
    r.aggregate = aggregate(r.per_class, priors);
    return r;
}

inline PredictionReport predict_report_eq2(const MomentStats& stats) {
    PredictionReport r;
    r.method = Method::eq2;
    r.per_class = predict_eq2_all(stats);
    r.aggregate = aggregate(r.per_class, stats.priors);
    return r;
}

/// Evaluates every class with an independent derived stream (seed xor i),
/// so classes may run in parallel without changing results.
inline PredictionReport predict_report_eq3_mc(const MomentStats& stats, long samples,
                                              std::uint64_t seed, int threads = 1) {
    const int d = stats.classes();
    PredictionReport r;
    r.method = Method::eq3_mc;
    r.mc_samples = samples;
    r.seed = seed;
    r.per_class.resize(d);
    Eigen::VectorXd se(d);
    parallel_for(
        static_cast<std::size_t>(d), threads,
        [&](std::size_t i) {
            const auto [a, e] =
                predict_eq3_mc(stats, static_cast<int>(i), samples,
                               seed ^ static_cast<std::uint64_t>(i));
            r.per_class(static_cast<Eigen::Index>(i)) = a;
            se(static_cast<Eigen::Index>(i)) = e;
        });
    r.mc_stderr = se;
    r.aggregate = aggregate(r.per_class, stats.priors);
    return r;
}

inline PredictionReport predict_report_kde(const SumSamples& sums,
                                           const Eigen::VectorXd& priors,
                                           std::optional<double> bandwidth = std::nullopt) {
    const int d = sums.classes();
    PredictionReport r;
    r.method = Method::eq2_kde;
    r.per_class.resize(d);
    for (int i = 0; i < d; ++i) r.per_class(i) = predict_eq2_kde(sums, i, bandwidth);
    r.aggregate = aggregate(r.per_class, priors);
    return r;
}

}  // namespace perceptor
