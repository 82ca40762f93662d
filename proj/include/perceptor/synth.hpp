#pragma once

// Synthetic binary classification with a controlled correlation between the
// two postsynaptic-sum distributions. Maps out how far the independence-
// assuming prediction drifts from the truth as the correlation varies; the
// exact answer is available in closed form.

#include "perceptor/numeric.hpp"
#include "perceptor/stats.hpp"
#include "perceptor/theory.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace perceptor::synth {

struct BinaryGaussianSpec {
    double mu_correct = 1.0;  // mean of the correct-class sum; incorrect is 0
    double sigma = 1.0;       // shared standard deviation
    double rho = 0.0;         // correlation of the two sums
    long samples = 1000000;
    std::uint64_t seed = 0;
};

inline void validate(const BinaryGaussianSpec& spec) {
    if (!(spec.sigma > 0.0))
        throw std::invalid_argument("BinaryGaussianSpec: sigma must be > 0");
    if (!(std::abs(spec.rho) < 1.0))
        throw std::invalid_argument("BinaryGaussianSpec: |rho| must be < 1");
    if (spec.samples < 1)
        throw std::invalid_argument("BinaryGaussianSpec: samples must be >= 1");
    if (!std::isfinite(spec.mu_correct))
        throw std::invalid_argument("BinaryGaussianSpec: non-finite mean");
}

struct BinaryResult {
    double empirical = 0.0;    // strict-win frequency over the drawn pairs
    double eq2 = 0.0;          // prediction that ignores the correlation
    double closed_form = 0.0;  // exact accuracy for the correlated pair
    double stderr_ = 0.0;      // binomial standard error of `empirical`
};

/// Draws correlated sum pairs via a 2x2 Cholesky factor and compares the
/// strict-win frequency against both predictions.
inline BinaryResult simulate_binary(const BinaryGaussianSpec& spec) {
    validate(spec);
    BinaryResult out;

    MomentStats stats;
    Eigen::VectorXd mu(2), sg(2);
    mu << spec.mu_correct, 0.0;
    sg << spec.sigma, spec.sigma;
    stats.mu = {mu, mu.reverse()};
    stats.sigma = {sg, sg};
    stats.cov = {Eigen::MatrixXd(sg.array().square().matrix().asDiagonal()),
                 Eigen::MatrixXd(sg.array().square().matrix().asDiagonal())};
    stats.priors = Eigen::VectorXd::Constant(2, 0.5);
    stats.counts = {spec.samples, spec.samples};
    out.eq2 = predict_eq2(stats, 0);

    out.closed_form =
        normal_cdf(spec.mu_correct /
                   std::sqrt(2.0 * spec.sigma * spec.sigma * (1.0 - spec.rho)));

    std::mt19937_64 rng = make_rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double cross = spec.rho;
    const double resid = std::sqrt(1.0 - spec.rho * spec.rho);
    long wins = 0;
    for (long s = 0; s < spec.samples; ++s) {
        const double z1 = normal(rng);
        const double z2 = normal(rng);
        const double correct = spec.mu_correct + spec.sigma * z1;
        const double incorrect = spec.sigma * (cross * z1 + resid * z2);
        wins += correct > incorrect;
    }
    out.empirical = static_cast<double>(wins) / static_cast<double>(spec.samples);
    out.stderr_ =
        std::sqrt(out.empirical * (1.0 - out.empirical) / static_cast<double>(spec.samples));
    return out;
}

struct SweepRow {
    double mu = 0.0;
    double sigma = 0.0;
    double rho = 0.0;
    double eq2 = 0.0;
    double closed_form = 0.0;
    double empirical = 0.0;
    double stderr_ = 0.0;
};

inline std::vector<double> default_mu_grid() {
    return {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
}
inline std::vector<double> default_sigma_grid() { return {0.5, 1.0, 2.0}; }
inline std::vector<double> default_rho_grid() {
    return {-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9};
}

/// Full factorial sweep over (mu, sigma, rho); one independent seeded cell
/// per row, so cells may run concurrently.
inline std::vector<SweepRow> sweep_surface(const std::vector<double>& mu_grid,
                                           const std::vector<double>& sigma_grid,
                                           const std::vector<double>& rho_grid,
                                           long samples, std::uint64_t seed,
                                           int threads = 1) {
    if (mu_grid.empty() || sigma_grid.empty() || rho_grid.empty())
        throw std::invalid_argument("sweep_surface: empty grid");
    std::vector<SweepRow> rows(mu_grid.size() * sigma_grid.size() * rho_grid.size());
    parallel_for(rows.size(), threads, [&](std::size_t cell) {
        const std::size_t ri = cell % rho_grid.size();
        const std::size_t si = (cell / rho_grid.size()) % sigma_grid.size();
        const std::size_t mi = cell / (rho_grid.size() * sigma_grid.size());
        BinaryGaussianSpec spec;
        spec.mu_correct = mu_grid[mi];
        spec.sigma = sigma_grid[si];
        spec.rho = rho_grid[ri];
        spec.samples = samples;
        spec.seed = derive_seed(seed, mi, si, ri);
        const BinaryResult r = simulate_binary(spec);
        rows[cell] = {spec.mu_correct, spec.sigma, spec.rho, r.eq2,
                      r.closed_form,   r.empirical, r.stderr_};
    });
    return rows;
}

}  // namespace perceptor::synth
