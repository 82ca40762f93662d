#pragma once

// Shared numeric machinery: Gaussian pdf/cdf, deterministic adaptive
// quadrature, seed derivation, ridge solves, and a small parallel-for.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace perceptor {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;
inline constexpr double kSqrt2 = 1.4142135623730950488;

inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

inline double normal_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return kInvSqrt2Pi / sigma * std::exp(-0.5 * z * z);
}

/// Standard normal CDF, accurate in both tails.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

inline double normal_cdf(double x, double mu, double sigma) {
    return normal_cdf((x - mu) / sigma);
}

namespace detail {

inline constexpr int kGlOrder = 24;

struct GlTable {
    std::array<double, kGlOrder> nodes{};
    std::array<double, kGlOrder> weights{};
};

// Gauss-Legendre nodes/weights on [-1, 1] via Newton iteration on the
// Legendre recurrence.
inline const GlTable& gl_table() {
    static const GlTable table = [] {
        GlTable t;
        const int n = kGlOrder;
        for (int i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
            double deriv = 0.0;
            for (int it = 0; it < 64; ++it) {
                double p0 = 1.0, p1 = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
                }
                deriv = n * (x * p0 - p1) / (x * x - 1.0);
                const double dx = p0 / deriv;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            t.nodes[i] = -x;
            t.nodes[n - 1 - i] = x;
            const double w = 2.0 / ((1.0 - x * x) * deriv * deriv);
            t.weights[i] = w;
            t.weights[n - 1 - i] = w;
        }
        return t;
    }();
    return table;
}

}  // namespace detail

/// Deterministic adaptive quadrature: composite Gauss-Legendre with panel
/// doubling until two successive refinements agree within `tol`.
template <class F>
double integrate_adaptive(F&& f, double lo, double hi, double tol = 1e-10,
                          int max_doublings = 12) {
    if (!(hi > lo)) return 0.0;
    const auto& gl = detail::gl_table();
    auto composite = [&](int panels) {
        const double width = (hi - lo) / panels;
        double total = 0.0;
        for (int p = 0; p < panels; ++p) {
            const double c = lo + (p + 0.5) * width;
            const double h = 0.5 * width;
            double s = 0.0;
            for (int k = 0; k < detail::kGlOrder; ++k)
                s += gl.weights[k] * f(c + h * gl.nodes[k]);
            total += s * h;
        }
        return total;
    };
    int panels = 8;
    double prev = composite(panels);
    int agreed = 0;
    for (int k = 0; k < max_doublings; ++k) {
        panels *= 2;
        const double cur = composite(panels);
        agreed = std::abs(cur - prev) < tol ? agreed + 1 : 0;
        prev = cur;
        if (agreed >= 2) break;
    }
    return prev;
}

// ---------------------------------------------------------------------------
// Seeding

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministically mixes a base seed with any number of integer tags.
/// Used to hand independent streams to parallel work units.
template <class... Parts>
std::uint64_t derive_seed(std::uint64_t base, Parts... parts) {
    std::uint64_t state = base;
    std::uint64_t out = splitmix64(state);
    ((state ^= out + static_cast<std::uint64_t>(parts), out = splitmix64(state)), ...);
    return out;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

// ---------------------------------------------------------------------------
// Threads

/// Thread count resolution: explicit request > PERCEPTOR_THREADS > hardware.
inline int resolve_threads(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("PERCEPTOR_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Runs fn(i) for i in [0, n). Work units must be independent and write only
/// to their own output slots; results are then independent of thread count.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int count = static_cast<int>(std::min<std::size_t>(threads, n));
    pool.reserve(count);
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Ridge regression

/// Solves W = Y^T X (X^T X + lambda I)^{-1} through a symmetric positive
/// definite factorization. Rows of X are inputs, rows of Y are targets.
inline Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                   double lambda) {
    if (x.rows() != y.rows())
        throw std::invalid_argument("ridge_solve: X and Y row counts differ");
    if (x.rows() == 0) throw std::invalid_argument("ridge_solve: no training rows");
    if (!(lambda >= 0.0)) throw std::invalid_argument("ridge_solve: lambda must be >= 0");
    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += lambda;
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        if (lambda == 0.0)
            throw std::runtime_error("ridge_solve: singular normal matrix with lambda = 0");
        throw std::runtime_error("ridge_solve: normal matrix factorization failed");
    }
    return llt.solve(x.transpose() * y).transpose();
}

}  // namespace perceptor
