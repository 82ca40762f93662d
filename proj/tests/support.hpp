#pragma once

// Test-only oracles, independent of the library's computation paths:
// naive loops, closed forms, and sampling estimators used to freeze or
// cross-check expected values.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Hand-rolled matrix product: sums(r, i) = sum_n block(r, n) * w(i, n) + bias(i).
inline Eigen::MatrixXd naive_sums(const Eigen::MatrixXd& block, const Eigen::MatrixXd& w,
                                  const Eigen::VectorXd* bias) {
    Eigen::MatrixXd out(block.rows(), w.rows());
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            double acc = bias ? (*bias)(i) : 0.0;
            for (Eigen::Index n = 0; n < w.cols(); ++n) acc += block(r, n) * w(i, n);
            out(r, i) = acc;
        }
    }
    return out;
}

/// Winner frequency of component i among independent Gaussians N(mu_j, sg_j^2).
inline double mc_argmax(const Eigen::VectorXd& mu, const Eigen::VectorXd& sg, int i,
                        long draws, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int d = static_cast<int>(mu.size());
    long wins = 0;
    std::vector<double> x(d);
    for (long s = 0; s < draws; ++s) {
        for (int j = 0; j < d; ++j) x[j] = mu(j) + sg(j) * normal(rng);
        bool win = true;
        for (int j = 0; j < d && win; ++j)
            if (j != i && !(x[i] > x[j])) win = false;
        wins += win;
    }
    return static_cast<double>(wins) / static_cast<double>(draws);
}

/// P(h > r) for independent h ~ N(mu_h, sg_h^2), r ~ N(mu_r, sg_r^2).
inline double two_class_closed_form(double mu_h, double mu_r, double sg_h, double sg_r) {
    return std_normal_cdf((mu_h - mu_r) / std::sqrt(sg_h * sg_h + sg_r * sg_r));
}

/// P(x0 > x1) for a correlated bivariate normal pair.
inline double bivariate_closed_form(double mu0, double mu1, double sg0, double sg1,
                                    double rho) {
    const double var = sg0 * sg0 + sg1 * sg1 - 2.0 * rho * sg0 * sg1;
    return std_normal_cdf((mu0 - mu1) / std::sqrt(var));
}

/// Tie-corrected Kendall tau by explicit O(n^2) pair counting.
inline double kendall_pair_count(const std::vector<double>& xs,
                                 const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const double dx = xs[a] - xs[b];
            const double dy = ys[a] - ys[b];
            if (dx == 0.0 && dy == 0.0) continue;
            if (dx == 0.0) {
                ++ties_x;
            } else if (dy == 0.0) {
                ++ties_y;
            } else if (dx * dy > 0.0) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const double denom = std::sqrt(static_cast<double>(concordant + discordant + ties_x)) *
                         std::sqrt(static_cast<double>(concordant + discordant + ties_y));
    if (denom == 0.0) return 0.0;
    return static_cast<double>(concordant - discordant) / denom;
}

/// Textbook two-pass Pearson correlation.
inline double pearson_two_pass(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxy += (xs[k] - mx) * (ys[k] - my);
        sxx += (xs[k] - mx) * (xs[k] - mx);
        syy += (ys[k] - my) * (ys[k] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

/// Random symmetric PSD matrix A A^T / cols + diag shift.
inline Eigen::MatrixXd random_psd(int d, std::mt19937_64& rng, double diag_boost = 0.1) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd a(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) a(r, c) = normal(rng);
    Eigen::MatrixXd psd = a * a.transpose() / static_cast<double>(d);
    psd.diagonal().array() += diag_boost;
    return psd;
}

}  // namespace oracle
