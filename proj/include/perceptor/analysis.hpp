#pragma once

// Analysis toolkit around the predictors: class-subset restriction, winner-
// take-all empirical accuracy, linear bias compensation, correlation and
// ranking metrics, the covariance bias diagnostic, and accuracy prediction
// from the readout weights alone via white-noise surrogates.

#include "perceptor/numeric.hpp"
#include "perceptor/stats.hpp"
#include "perceptor/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace perceptor::analysis {

/// Classification restricted to a subset of classes.
struct SubProblem {
    std::vector<int> class_indices;  // sorted, distinct

    int size() const { return static_cast<int>(class_indices.size()); }
};

inline void validate(const SubProblem& sub, int classes) {
    if (sub.size() < 2 || sub.size() > classes)
        throw std::invalid_argument("SubProblem: size must be in [2, D]");
    for (std::size_t k = 0; k < sub.class_indices.size(); ++k) {
        const int idx = sub.class_indices[k];
        if (idx < 0 || idx >= classes)
            throw std::invalid_argument("SubProblem: class index out of range");
        if (k > 0 && idx <= sub.class_indices[k - 1])
            throw std::invalid_argument("SubProblem: indices must be sorted and distinct");
    }
}

/// Draws `size` distinct classes without replacement.
inline SubProblem random_subproblem(int classes, int size, std::mt19937_64& rng) {
    if (size < 2 || size > classes)
        throw std::invalid_argument("random_subproblem: size must be in [2, D]");
    std::vector<int> pool(classes);
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = 0; k < size; ++k) {
        std::uniform_int_distribution<int> pick(k, classes - 1);
        std::swap(pool[k], pool[pick(rng)]);
    }
    SubProblem sub;
    sub.class_indices.assign(pool.begin(), pool.begin() + size);
    std::sort(sub.class_indices.begin(), sub.class_indices.end());
    return sub;
}

/// Keeps only samples and filters of the selected classes; class indices are
/// remapped densely in sorted order.
inline std::pair<ActivationSet, ReadoutPerceptron> restrict(const ActivationSet& acts,
                                                            const ReadoutPerceptron& readout,
                                                            const SubProblem& sub) {
    if (acts.classes() != readout.classes())
        throw std::invalid_argument("restrict: activation/readout class mismatch");
    validate(sub, acts.classes());
    ActivationSet out_acts;
    Eigen::MatrixXd weights(sub.size(), readout.dim());
    std::optional<Eigen::VectorXd> bias;
    if (readout.bias) bias = Eigen::VectorXd(sub.size());
    for (int k = 0; k < sub.size(); ++k) {
        const int src = sub.class_indices[static_cast<std::size_t>(k)];
        out_acts.samples.push_back(acts.samples[static_cast<std::size_t>(src)]);
        weights.row(k) = readout.weights.row(src);
        if (bias) (*bias)(k) = (*readout.bias)(src);
    }
    return {std::move(out_acts),
            ReadoutPerceptron{std::move(weights), std::move(bias), readout.similarity}};
}

/// Winner-take-all accuracy of a readout on labeled activations.
inline ClassAccuracy empirical_accuracy(const ActivationSet& acts,
                                        const ReadoutPerceptron& readout) {
    return accuracy_from_sums(compute_sums(acts, readout));
}

// ---------------------------------------------------------------------------
// Bias line

struct BiasLine {
    double slope = 1.0;
    double intercept = 0.0;
};

/// Ordinary least squares of actual on predicted.
inline BiasLine fit_bias_line(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 2) throw std::invalid_argument("fit_bias_line: need >= 2 points");
    double mx = 0.0, my = 0.0;
    for (const auto& [p, a] : pairs) {
        mx += p;
        my += a;
    }
    mx /= static_cast<double>(pairs.size());
    my /= static_cast<double>(pairs.size());
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [p, a] : pairs) {
        sxx += (p - mx) * (p - mx);
        sxy += (p - mx) * (a - my);
    }
    if (sxx <= 0.0)
        throw std::invalid_argument("fit_bias_line: degenerate predicted values");
    BiasLine line;
    line.slope = sxy / sxx;
    line.intercept = my - line.slope * mx;
    if (!std::isfinite(line.slope) || !std::isfinite(line.intercept))
        throw std::runtime_error("fit_bias_line: non-finite fit");
    return line;
}

inline double compensate(double predicted, const BiasLine& line) {
    return std::clamp(line.slope * predicted + line.intercept, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Correlation metrics

/// Pearson correlation, single-pass co-moment accumulation.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
    if (xs.size() < 2) throw std::invalid_argument("pearson: need >= 2 points");
    double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double dx = xs[k] - mx;
        const double dy = ys[k] - my;
        const double inv = 1.0 / static_cast<double>(k + 1);
        mx += dx * inv;
        my += dy * inv;
        sxx += dx * (xs[k] - mx);
        syy += dy * (ys[k] - my);
        sxy += dx * (ys[k] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0)
        throw std::invalid_argument("pearson: degenerate variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace detail {

// Counts strict descents of ys across a stable merge; each one is a
// discordant pair among x-distinct pairs once ys are pre-sorted within
// x-ties.
inline long long merge_count_inversions(std::vector<double>& ys) {
    const std::size_t n = ys.size();
    std::vector<double> buffer(n);
    long long inversions = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t a = lo, b = mid, out = lo;
            while (a < mid && b < hi) {
                if (ys[a] <= ys[b]) {
                    buffer[out++] = ys[a++];
                } else {
                    inversions += static_cast<long long>(mid - a);
                    buffer[out++] = ys[b++];
                }
            }
            while (a < mid) buffer[out++] = ys[a++];
            while (b < hi) buffer[out++] = ys[b++];
            std::copy(buffer.begin() + lo, buffer.begin() + hi, ys.begin() + lo);
        }
    }
    return inversions;
}

inline long long tie_pairs(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    long long pairs = 0;
    std::size_t run = 1;
    for (std::size_t k = 1; k <= values.size(); ++k) {
        if (k < values.size() && values[k] == values[k - 1]) {
            ++run;
        } else {
            pairs += static_cast<long long>(run) * (run - 1) / 2;
            run = 1;
        }
    }
    return pairs;
}

}  // namespace detail

/// Tie-corrected Kendall rank correlation (tau-b) in O(n log n): sort by
/// (x, y), count x-ties and joint ties, then count discordant pairs as y
/// inversions. Returns 0 when either ranking is fully tied.
inline double kendall_tau(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("kendall_tau: length mismatch");
    const std::size_t n = xs.size();
    if (n < 2) throw std::invalid_argument("kendall_tau: need >= 2 points");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (xs[a] != xs[b]) return xs[a] < xs[b];
        return ys[a] < ys[b];
    });

    long long ties_x = 0, ties_xy = 0;
    std::size_t run_x = 1, run_xy = 1;
    for (std::size_t k = 1; k <= n; ++k) {
        const bool same_x = k < n && xs[order[k]] == xs[order[k - 1]];
        const bool same_xy = same_x && ys[order[k]] == ys[order[k - 1]];
        if (same_x) {
            ++run_x;
        } else {
            ties_x += static_cast<long long>(run_x) * (run_x - 1) / 2;
            run_x = 1;
        }
        if (same_xy) {
            ++run_xy;
        } else {
            ties_xy += static_cast<long long>(run_xy) * (run_xy - 1) / 2;
            run_xy = 1;
        }
    }

    std::vector<double> ys_sorted(n);
    for (std::size_t k = 0; k < n; ++k) ys_sorted[k] = ys[order[k]];
    const long long swaps = detail::merge_count_inversions(ys_sorted);
    const long long ties_y = detail::tie_pairs({ys.begin(), ys.end()});

    const long long n0 = static_cast<long long>(n) * (static_cast<long long>(n) - 1) / 2;
    const long long numerator = n0 - ties_x - ties_y + ties_xy - 2 * swaps;
    const long long da = n0 - ties_x;
    const long long db = n0 - ties_y;
    if (da == 0 || db == 0) return 0.0;
    return static_cast<double>(numerator) /
           (std::sqrt(static_cast<double>(da)) * std::sqrt(static_cast<double>(db)));
}

// ---------------------------------------------------------------------------
// Covariance bias diagnostic

struct NetworkCase {
    MomentStats stats;
    ReadoutPerceptron readout;
    ActivationSet acts;
};

struct BiasPoint {
    double accuracy_minus_predicted = 0.0;
    double avg_corr = 0.0;
};

/// Scatter of (empirical accuracy - independent-Gaussian prediction) against
/// the average correlation coefficient, one point per network.
inline std::vector<BiasPoint> bias_vs_correlation(const std::vector<NetworkCase>& networks) {
    std::vector<BiasPoint> points;
    points.reserve(networks.size());
    for (const auto& net : networks) {
        BiasPoint p;
        p.accuracy_minus_predicted = empirical_accuracy(net.acts, net.readout).aggregate -
                                     predict_report_eq2(net.stats).aggregate;
        p.avg_corr = avg_correlation(net.stats);
        points.push_back(p);
    }
    return points;
}

// ---------------------------------------------------------------------------
// Readout-only prediction

/// Predicts accuracy from the readout weights alone: each filter is
/// disturbed `reps` times with white noise at the given SNR (dB, filter
/// power over expected noise power) and the surrogates play the role of
/// hidden-layer activations.
inline PredictionReport readout_only_predict(const ReadoutPerceptron& readout,
                                             double noise_db, int reps,
                                             std::uint64_t seed) {
    perceptor::validate(readout);
    if (reps < 2) throw std::invalid_argument("readout_only_predict: reps must be >= 2");
    if (!std::isfinite(noise_db))
        throw std::invalid_argument("readout_only_predict: non-finite noise level");
    const Eigen::Index d = readout.classes();
    const Eigen::Index n = readout.dim();
    const double amplitude_ratio = std::pow(10.0, -noise_db / 20.0);
    ActivationSet surrogates;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double filter_norm = readout.weights.row(i).norm();
        if (filter_norm == 0.0)
            throw std::invalid_argument("readout_only_predict: zero-norm filter");
        const double sigma =
            filter_norm * amplitude_ratio / std::sqrt(static_cast<double>(n));
        std::mt19937_64 rng = make_rng(derive_seed(seed, i));
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::MatrixXd block(reps, n);
        for (int r = 0; r < reps; ++r)
            for (Eigen::Index c = 0; c < n; ++c)
                block(r, c) = readout.weights(i, c) + sigma * normal(rng);
        surrogates.samples.push_back(std::move(block));
    }
    const MomentStats stats = estimate_moments(compute_sums(surrogates, readout));
    PredictionReport report = predict_report_eq2(stats);
    report.seed = seed;
    return report;
}

struct NoiseSweepPoint {
    double db = 0.0;
    double mean_std = 0.0;  // mean over experiments of the prediction spread
};

struct NoiseSweepResult {
    std::vector<NoiseSweepPoint> points;
    std::optional<double> selected_db;  // absent with fewer than 2 readouts
};

/// Scans noise levels for a collection of readouts and selects the level
/// with the largest dispersion of predicted accuracies (ties to lower dB).
inline NoiseSweepResult noise_sweep(const std::vector<ReadoutPerceptron>& readouts,
                                    std::span<const double> db_grid, int reps,
                                    int experiments, std::uint64_t seed) {
    if (readouts.empty()) throw std::invalid_argument("noise_sweep: no readouts");
    if (db_grid.empty()) throw std::invalid_argument("noise_sweep: empty noise grid");
    if (experiments < 1) throw std::invalid_argument("noise_sweep: experiments must be >= 1");
    NoiseSweepResult result;
    for (std::size_t bi = 0; bi < db_grid.size(); ++bi) {
        NoiseSweepPoint point;
        point.db = db_grid[bi];
        for (int e = 0; e < experiments; ++e) {
            double sum = 0.0, sumsq = 0.0;
            for (std::size_t k = 0; k < readouts.size(); ++k) {
                const double a = readout_only_predict(readouts[k], db_grid[bi], reps,
                                                      derive_seed(seed, bi, e, k))
                                     .aggregate;
                sum += a;
                sumsq += a * a;
            }
            const double mean = sum / static_cast<double>(readouts.size());
            const double var =
                std::max(0.0, sumsq / static_cast<double>(readouts.size()) - mean * mean);
            point.mean_std += std::sqrt(var) / static_cast<double>(experiments);
        }
        result.points.push_back(point);
    }
    if (readouts.size() >= 2) {
        const NoiseSweepPoint* best = &result.points.front();
        for (const auto& p : result.points)
            if (p.mean_std > best->mean_std ||
                (p.mean_std == best->mean_std && p.db < best->db))
                best = &p;
        result.selected_db = best->db;
    }
    return result;
}

}  // namespace perceptor::analysis
