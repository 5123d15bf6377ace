#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "rothe/spectral.hpp"

namespace rothe::testing {

/// Hand-rolled generators for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    std::size_t index(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_); }

    SpectralVector vector(std::size_t size, double scale = 1.0) {
        SpectralVector v = SpectralVector::zeros(size);
        for (auto& c : v.coeffs) c = scale * normal();
        return v;
    }

    /// Negative, nonincreasing eigenvalues with random gaps.
    std::vector<double> spectrum(std::size_t size) {
        std::vector<double> ev(size);
        double x = -uniform(0.1, 5.0);
        for (auto& e : ev) {
            e = x;
            x -= uniform(0.0, 20.0);
        }
        return ev;
    }

private:
    std::mt19937_64 rng_;
};

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
    const double h = (b - a) / n;
    double sum = f(a) + f(b);
    for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

/// E(u(T) - u_K)^2 for the scalar OU problem by quadrature of the Ito isometry.
inline double ou_mse_quadrature(double lambda, double c, double u0, double T, std::size_t K) {
    const double tau = T / static_cast<double>(K);
    const double r = 1.0 / (1.0 - tau * lambda);
    const double bias = u0 * (std::exp(lambda * T) - std::pow(r, static_cast<double>(K)));
    double var = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double weight = std::pow(r, static_cast<double>(K - k));
        var += simpson(
            [&](double s) {
                const double d = std::exp(lambda * (T - s)) - weight;
                return d * d;
            },
            k * tau, (k + 1) * tau);
    }
    return bias * bias + c * c * var;
}

/// Direct O(NJ) synthesis sum_j v_j sqrt(2) sin(j pi x_i).
inline std::vector<double> direct_synthesis(const std::vector<double>& v, std::size_t nodes) {
    std::vector<double> u(nodes, 0.0);
    for (std::size_t i = 1; i <= nodes; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(nodes + 1);
        for (std::size_t j = 1; j <= v.size(); ++j) u[i - 1] += v[j - 1] * std::sqrt(2.0) * std::sin(j * M_PI * x);
    }
    return u;
}

/// Direct O(NJ) analysis sqrt(2)/(N+1) sum_i u_i sin(j pi x_i).
inline std::vector<double> direct_analysis(const std::vector<double>& u, std::size_t modes) {
    const std::size_t n = u.size();
    std::vector<double> v(modes, 0.0);
    for (std::size_t j = 1; j <= modes; ++j) {
        for (std::size_t i = 1; i <= n; ++i) {
            const double x = static_cast<double>(i) / static_cast<double>(n + 1);
            v[j - 1] += u[i - 1] * std::sin(j * M_PI * x);
        }
        v[j - 1] *= std::sqrt(2.0) / static_cast<double>(n + 1);
    }
    return v;
}

inline double l2(const SpectralVector& v) {
    double s = 0.0;
    for (double c : v.coeffs) s += c * c;
    return std::sqrt(s);
}

}  // namespace rothe::testing
