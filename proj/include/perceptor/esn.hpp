#pragma once

// Trajectory-association ground truth: an integer echo state network that
// memorizes a symbol sequence through clipped accumulation and recalls the
// symbol d steps back through a delay-specific readout. Generates empirical
// accuracies and the matching sum statistics for the theory overlays.

#include "perceptor/numeric.hpp"
#include "perceptor/stats.hpp"
#include "perceptor/theory.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace perceptor::esn {

enum class ReadoutKind { codebook, regression };

struct EsnConfig {
    int n = 100;                  // hidden dimension
    int d = 2;                    // alphabet size
    double kappa = 4.0;           // clipping threshold
    std::vector<int> delays;
    long train_len = 10000;       // regression readout training sequence
    long test_len = 10000;
    std::uint64_t seed = 0;
    ReadoutKind readout = ReadoutKind::codebook;
    double ridge_lambda = 0.01;
    std::vector<double> amplitudes;  // optional per-symbol input gain
    Similarity similarity = Similarity::cosine;
};

inline void validate(const EsnConfig& cfg) {
    if (cfg.n < 1) throw std::invalid_argument("EsnConfig: n must be >= 1");
    if (cfg.d < 2) throw std::invalid_argument("EsnConfig: d must be >= 2");
    if (!(cfg.kappa >= 1.0)) throw std::invalid_argument("EsnConfig: kappa must be >= 1");
    if (cfg.delays.empty()) throw std::invalid_argument("EsnConfig: no delays");
    long max_delay = 0;
    for (int d : cfg.delays) {
        if (d < 0) throw std::invalid_argument("EsnConfig: negative delay");
        max_delay = std::max<long>(max_delay, d);
    }
    if (cfg.test_len <= max_delay || (cfg.readout == ReadoutKind::regression &&
                                      cfg.train_len <= max_delay))
        throw std::invalid_argument("EsnConfig: sequence length must exceed max delay");
    if (!cfg.amplitudes.empty()) {
        if (static_cast<int>(cfg.amplitudes.size()) != cfg.d)
            throw std::invalid_argument("EsnConfig: amplitudes size != alphabet size");
        for (double a : cfg.amplitudes)
            if (!(a > 0.0)) throw std::invalid_argument("EsnConfig: amplitudes must be > 0");
    }
    if (cfg.ridge_lambda < 0.0)
        throw std::invalid_argument("EsnConfig: ridge lambda must be >= 0");
}

/// N x D matrix of random bipolar (+-1) symbol vectors.
struct Codebook {
    Eigen::MatrixXd phi;

    Eigen::Index dim() const { return phi.rows(); }
    Eigen::Index symbols() const { return phi.cols(); }
};

inline Codebook make_codebook(int n, int d, std::uint64_t seed) {
    if (n < 1 || d < 2) throw std::invalid_argument("make_codebook: need n >= 1, d >= 2");
    std::mt19937_64 rng = make_rng(seed);
    Eigen::MatrixXd phi(n, d);
    for (int c = 0; c < d; ++c)
        for (int r = 0; r < n; ++r) phi(r, c) = (rng() & 1ULL) ? 1.0 : -1.0;
    return {phi};
}

/// Elementwise saturation to [-kappa, kappa].
inline double clip_value(double x, double kappa) {
    if (x <= -kappa) return -kappa;
    if (x >= kappa) return kappa;
    return x;
}

inline Eigen::VectorXd clip(const Eigen::VectorXd& x, double kappa) {
    return x.cwiseMax(-kappa).cwiseMin(kappa);
}

inline std::vector<int> random_sequence(long len, int symbols, std::uint64_t seed) {
    std::mt19937_64 rng = make_rng(seed);
    std::uniform_int_distribution<int> dist(0, symbols - 1);
    std::vector<int> seq(len);
    for (auto& s : seq) s = dist(rng);
    return seq;
}

namespace detail {

// rotate_right is the recurrent permutation rho; rotate_left is its inverse.
inline Eigen::VectorXd rotate_right(const Eigen::VectorXd& v, long shift) {
    const long n = v.size();
    shift = ((shift % n) + n) % n;
    Eigen::VectorXd out(n);
    for (long k = 0; k < n; ++k) out((k + shift) % n) = v(k);
    return out;
}

inline Eigen::VectorXd rotate_left(const Eigen::VectorXd& v, long shift) {
    return rotate_right(v, -shift);
}

}  // namespace detail

/// Memorization stage: x(m) = f_kappa(rho(x(m-1)) + a_s * phi_{s(m)}) with
/// x(0) = 0 and rho a circular shift right by one. Returns the M x N trace
/// of states x(1..M).
inline Eigen::MatrixXd run_memorization(const Codebook& codebook, const std::vector<int>& seq,
                                        double kappa,
                                        const std::vector<double>& amplitudes = {}) {
    const Eigen::Index n = codebook.dim();
    const int symbols = static_cast<int>(codebook.symbols());
    if (!amplitudes.empty() && static_cast<int>(amplitudes.size()) != symbols)
        throw std::invalid_argument("run_memorization: amplitudes size != alphabet size");
    Eigen::MatrixXd states(static_cast<Eigen::Index>(seq.size()), n);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd rotated(n);
    for (std::size_t m = 0; m < seq.size(); ++m) {
        const int s = seq[m];
        if (s < 0 || s >= symbols)
            throw std::invalid_argument("run_memorization: symbol out of range at step " +
                                        std::to_string(m + 1));
        rotated(0) = x(n - 1);
        rotated.tail(n - 1) = x.head(n - 1);
        const double gain = amplitudes.empty() ? 1.0 : amplitudes[s];
        x = clip(rotated + gain * codebook.phi.col(s), kappa);
        states.row(static_cast<Eigen::Index>(m)) = x.transpose();
    }
    return states;
}

/// Delay-d codebook readout W^d = Phi^T composed with the inverse state
/// rotation: row i is codebook column i rotated by d so it matches the
/// symbol stored d steps ago.
inline ReadoutPerceptron codebook_readout(const Codebook& codebook, int delay,
                                          Similarity similarity = Similarity::cosine) {
    if (delay < 0) throw std::invalid_argument("codebook_readout: negative delay");
    const Eigen::Index d = codebook.symbols();
    Eigen::MatrixXd w(d, codebook.dim());
    for (Eigen::Index i = 0; i < d; ++i)
        w.row(i) = detail::rotate_right(codebook.phi.col(i), delay).transpose();
    return {std::move(w), std::nullopt, similarity};
}

/// Ridge-regression readout from aligned (state, one-hot target) rows.
inline ReadoutPerceptron regression_readout(const Eigen::MatrixXd& states,
                                            const Eigen::MatrixXd& targets_onehot,
                                            double lambda,
                                            Similarity similarity = Similarity::dot) {
    return {ridge_solve(states, targets_onehot, lambda), std::nullopt, similarity};
}

/// Ridge-regression readout for delay d: pairs x(m) with the one-hot code
/// of s(m - d).
inline ReadoutPerceptron regression_readout(const Eigen::MatrixXd& states,
                                            const std::vector<int>& seq, int delay,
                                            int symbols, double lambda,
                                            Similarity similarity = Similarity::dot) {
    const long m_total = static_cast<long>(seq.size());
    if (delay < 0 || delay >= m_total)
        throw std::invalid_argument("regression_readout: delay out of range");
    const long rows = m_total - delay;
    Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(rows, symbols);
    for (long r = 0; r < rows; ++r) {
        const int s = seq[static_cast<std::size_t>(r)];
        if (s < 0 || s >= symbols)
            throw std::invalid_argument("regression_readout: symbol out of range");
        targets(r, s) = 1.0;
    }
    return regression_readout(states.bottomRows(rows), targets, lambda, similarity);
}

/// Sum samples, per-class moments and pooled hit/reject statistics of a
/// readout applied to a state trace at delay d.
struct EsnStats {
    SumSamples sums;
    MomentStats moments;
    SharedDistractorStats shared;
};

inline SumSamples delayed_sums(const Eigen::MatrixXd& states, const std::vector<int>& seq,
                               const ReadoutPerceptron& readout, int delay) {
    const long m_total = static_cast<long>(seq.size());
    if (delay < 0 || delay >= m_total)
        throw std::invalid_argument("delayed_sums: delay out of range");
    const int symbols = static_cast<int>(readout.classes());
    ActivationSet acts;
    std::vector<std::vector<long>> rows_of(symbols);
    for (long r = delay; r < m_total; ++r) {
        const int truth = seq[static_cast<std::size_t>(r - delay)];
        rows_of[truth].push_back(r);
    }
    for (int c = 0; c < symbols; ++c) {
        if (rows_of[c].empty())
            throw std::invalid_argument("delayed_sums: symbol " + std::to_string(c) +
                                        " absent from the evaluated range");
        Eigen::MatrixXd block(static_cast<Eigen::Index>(rows_of[c].size()), states.cols());
        for (std::size_t k = 0; k < rows_of[c].size(); ++k)
            block.row(static_cast<Eigen::Index>(k)) = states.row(rows_of[c][k]);
        acts.samples.push_back(std::move(block));
    }
    return compute_sums(acts, readout);
}

inline EsnStats extract_esn_stats(const Eigen::MatrixXd& states, const std::vector<int>& seq,
                                  const ReadoutPerceptron& readout, int delay) {
    EsnStats out;
    out.sums = delayed_sums(states, seq, readout, delay);
    out.moments = estimate_moments(out.sums);
    out.shared = pooled_shared_stats(out.sums);
    return out;
}

/// Fraction of steps m > d whose argmax readout sum recovers s(m - d).
inline double recall_accuracy(const Eigen::MatrixXd& states, const std::vector<int>& seq,
                              const ReadoutPerceptron& readout, int delay) {
    return accuracy_from_sums(delayed_sums(states, seq, readout, delay)).aggregate;
}

// ---------------------------------------------------------------------------
// Seed-averaged experiment

struct EsnDelayRow {
    int delay = 0;
    double empirical = 0.0;
    double eq1 = 0.0;
    double eq2 = 0.0;
    double eq3_mc = 0.0;
    double eq3_stderr = 0.0;
};

struct EsnRunOptions {
    int num_seeds = 1;
    long mc_samples = 10000;
    int threads = 1;
};

/// Runs the memorization/recall experiment over independent simulations and
/// averages per-delay empirical accuracy and theory predictions.
inline std::vector<EsnDelayRow> run_esn_experiment(const EsnConfig& cfg,
                                                   const EsnRunOptions& opt) {
    validate(cfg);
    if (opt.num_seeds < 1)
        throw std::invalid_argument("run_esn_experiment: need at least one seed");
    const std::size_t delays = cfg.delays.size();
    std::vector<std::vector<EsnDelayRow>> per_seed(opt.num_seeds);

    parallel_for(static_cast<std::size_t>(opt.num_seeds), opt.threads, [&](std::size_t k) {
        const std::uint64_t base = derive_seed(cfg.seed, k);
        const Codebook codebook = make_codebook(cfg.n, cfg.d, derive_seed(base, 1));
        const std::vector<int> test_seq =
            random_sequence(cfg.test_len, cfg.d, derive_seed(base, 2));
        const Eigen::MatrixXd test_states =
            run_memorization(codebook, test_seq, cfg.kappa, cfg.amplitudes);

        std::vector<int> train_seq;
        Eigen::MatrixXd train_states;
        if (cfg.readout == ReadoutKind::regression) {
            train_seq = random_sequence(cfg.train_len, cfg.d, derive_seed(base, 3));
            train_states = run_memorization(codebook, train_seq, cfg.kappa, cfg.amplitudes);
        }

        std::vector<EsnDelayRow> rows(delays);
        for (std::size_t di = 0; di < delays; ++di) {
            const int delay = cfg.delays[di];
            const ReadoutPerceptron readout =
                cfg.readout == ReadoutKind::codebook
                    ? codebook_readout(codebook, delay, cfg.similarity)
                    : regression_readout(train_states, train_seq, delay, cfg.d,
                                         cfg.ridge_lambda, cfg.similarity);
            const EsnStats stats = extract_esn_stats(test_states, test_seq, readout, delay);
            EsnDelayRow& row = rows[di];
            row.delay = delay;
            row.empirical = accuracy_from_sums(stats.sums).aggregate;
            row.eq1 = predict_eq1(stats.shared);
            row.eq2 = predict_report_eq2(stats.moments).aggregate;
            const PredictionReport mc = predict_report_eq3_mc(
                stats.moments, opt.mc_samples, derive_seed(base, 4, delay));
            row.eq3_mc = mc.aggregate;
            row.eq3_stderr = aggregate(*mc.mc_stderr, stats.moments.priors);
        }
        per_seed[k] = std::move(rows);
    });

    std::vector<EsnDelayRow> mean(delays);
    for (std::size_t di = 0; di < delays; ++di) {
        EsnDelayRow& row = mean[di];
        row.delay = cfg.delays[di];
        double se_sq = 0.0;
        for (int k = 0; k < opt.num_seeds; ++k) {
            const EsnDelayRow& r = per_seed[k][di];
            row.empirical += r.empirical;
            row.eq1 += r.eq1;
            row.eq2 += r.eq2;
            row.eq3_mc += r.eq3_mc;
            se_sq += r.eq3_stderr * r.eq3_stderr;
        }
        const double inv = 1.0 / opt.num_seeds;
        row.empirical *= inv;
        row.eq1 *= inv;
        row.eq2 *= inv;
        row.eq3_mc *= inv;
        row.eq3_stderr = std::sqrt(se_sq) * inv;  // standard error of the seed mean
    }
    return mean;
}

}  // namespace perceptor::esn
