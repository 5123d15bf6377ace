#include "rothe/stochastics.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>

namespace rothe {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept { return mix64(mix64(master) ^ index); }

WienerPath::WienerPath(std::uint64_t seed, std::size_t fine_steps, std::size_t modes, double horizon,
                       std::vector<double> increments) :
    seed_(seed), fine_steps_(fine_steps), modes_(modes), horizon_(horizon), data_(std::move(increments)) {
    if (fine_steps_ == 0) throw std::invalid_argument("WienerPath: K_fine must be >= 1");
    if (modes_ == 0) throw std::invalid_argument("WienerPath: J must be >= 1");
    if (!(horizon_ > 0.0)) throw std::invalid_argument("WienerPath: T must be positive");
    if (data_.size() != fine_steps_ * modes_) throw std::invalid_argument("WienerPath: increment count mismatch");
}

WienerPath sample_path(std::uint64_t seed, std::size_t fine_steps, std::size_t modes, double horizon) {
    if (fine_steps == 0) throw std::invalid_argument("sample_path: K_fine must be >= 1");
    if (modes == 0) throw std::invalid_argument("sample_path: J must be >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("sample_path: T must be positive");
    std::mt19937_64 engine(seed);
    boost::random::normal_distribution<double> normal(0.0, std::sqrt(horizon / static_cast<double>(fine_steps)));
    std::vector<double> data(fine_steps * modes);
    for (double& x : data) x = normal(engine);
    return WienerPath(seed, fine_steps, modes, horizon, std::move(data));
}

std::vector<double> coarse_increment(const WienerPath& path, std::size_t steps, std::size_t k) {
    if (steps == 0 || path.fine_steps() % steps != 0) {
        throw std::invalid_argument(fmt::format("coarse_increment: K = {} does not divide K_fine = {}", steps, path.fine_steps()));
    }
    if (k >= steps) throw std::invalid_argument(fmt::format("coarse_increment: step {} outside 0..{}", k, steps - 1));
    const std::size_t block = path.fine_steps() / steps;
    std::vector<double> out(path.modes());
    for (std::size_t j = 0; j < path.modes(); ++j) {
        const auto row = path.mode_increments(j).subspan(k * block, block);
        CompensatedSum acc;
        for (double x : row) acc.add(x);
        out[j] = acc.value();
    }
    return out;
}

void NoiseSpec::validate() const {
    if (cm_coeffs.empty()) throw std::invalid_argument("NoiseSpec: no Cameron-Martin coefficients");
    for (std::size_t j = 0; j < cm_coeffs.size(); ++j) {
        if (!(cm_coeffs[j] > 0.0) || !std::isfinite(cm_coeffs[j])) {
            throw std::invalid_argument(fmt::format("NoiseSpec: c_{} = {} must be positive", j + 1, cm_coeffs[j]));
        }
        if (j > 0 && cm_coeffs[j] > cm_coeffs[j - 1]) {
            throw std::invalid_argument(fmt::format("NoiseSpec: coefficients must be nonincreasing (mode {})", j + 1));
        }
    }
}

double NoiseSpec::hs_lipschitz_bound() const {
    if (kind == NoiseKind::additive) return 0.0;
    CompensatedSum acc;
    for (double c : cm_coeffs) acc.add(c * c);
    return h.lip_constant() * std::numbers::sqrt2 * std::sqrt(acc.value());
}

double cm_scaling_exponent(double rho, double beta, double alpha) { return rho - beta + alpha / 2.0 + 0.01; }

namespace {

std::vector<double> scaled_coefficients(const SpectralOperator& op, double gamma, double scale) {
    if (!(scale > 0.0)) throw std::invalid_argument("noise scale must be positive");
    std::vector<double> c(op.size());
    for (std::size_t j = 0; j < op.size(); ++j) c[j] = scale * op.power_factor(j, -gamma);
    return c;
}

SpectralVector cm_combination(const NoiseSpec& spec, std::span<const double> chi) {
    SpectralVector out = SpectralVector::zeros(chi.size());
    for (std::size_t j = 0; j < chi.size(); ++j) out[j] = spec.cm_coeffs[j] * chi[j];
    return out;
}

const CollocationGrid& require_grid(const CollocationGrid* grid) {
    if (grid == nullptr) throw std::invalid_argument("multiplicative noise needs a collocation grid");
    return *grid;
}

}  // namespace

NoiseSpec make_additive_noise(const SpectralOperator& op, double rho, double beta, double alpha, double scale) {
    NoiseSpec spec;
    spec.kind = NoiseKind::additive;
    spec.cm_coeffs = scaled_coefficients(op, cm_scaling_exponent(rho, beta, alpha), scale);
    spec.beta_target = beta;
    spec.validate();
    return spec;
}

NoiseSpec make_multiplicative_noise(const SpectralOperator& op, const ScalarMap& h, double rho, double beta,
                                    double alpha, double scale) {
    NoiseSpec spec;
    spec.kind = NoiseKind::multiplicative;
    spec.cm_coeffs = scaled_coefficients(op, cm_scaling_exponent(rho, beta, alpha), scale);
    spec.h = h;
    spec.beta_target = beta;
    spec.validate();
    return spec;
}

SpectralVector apply_noise(const SpectralOperator& op, const NoiseSpec& spec, const SpectralVector& v,
                           std::span<const double> chi, const CollocationGrid* grid) {
    if (chi.size() != op.size() || spec.cm_coeffs.size() != op.size()) {
        throw std::invalid_argument("apply_noise: chi / noise coefficients do not match the operator size");
    }
    auto combination = cm_combination(spec, chi);
    if (spec.kind == NoiseKind::additive) return combination;

    const auto& g = require_grid(grid);
    auto weights = to_grid(op, v, g);
    spec.h.apply_inplace(weights);
    auto field = to_grid(op, combination, g);
    for (std::size_t i = 0; i < field.size(); ++i) field[i] *= weights[i];
    return from_grid(field, op.size(), g);
}

namespace {

// Columns B(v) b_j (or B(v) b_j - B(w) b_j) accumulated into ||.||_HS^2 in D((-A)^s).
double hs_norm_impl(const SpectralOperator& op, const NoiseSpec& spec, const SpectralVector& v,
                    const SpectralVector* w, SobolevIndex s, const CollocationGrid* grid) {
    const std::size_t modes = op.size();
    if (spec.cm_coeffs.size() != modes) throw std::invalid_argument("hs_norm_of_B: noise size mismatch");
    CompensatedSum acc;
    if (spec.kind == NoiseKind::additive) {
        if (w != nullptr) return 0.0;
        for (std::size_t j = 0; j < modes; ++j) {
            const double term = op.power_factor(j, s.s) * spec.cm_coeffs[j];
            acc.add(term * term);
        }
        return std::sqrt(acc.value());
    }

    const auto& g = require_grid(grid);
    auto weights = to_grid(op, v, g);
    spec.h.apply_inplace(weights);
    if (w != nullptr) {
        auto other = to_grid(op, *w, g);
        spec.h.apply_inplace(other);
        for (std::size_t i = 0; i < weights.size(); ++i) weights[i] -= other[i];
    }
    const double n1 = static_cast<double>(g.size() + 1);
    std::vector<double> column(g.size());
    for (std::size_t j = 0; j < modes; ++j) {
        const double amplitude = spec.cm_coeffs[j] * std::numbers::sqrt2;
        const double k = static_cast<double>(j + 1) * std::numbers::pi;
        for (std::size_t i = 0; i < g.size(); ++i) {
            column[i] = weights[i] * amplitude * std::sin(k * static_cast<double>(i + 1) / n1);
        }
        const double norm = fractional_norm(op, from_grid(column, modes, g), s);
        acc.add(norm * norm);
    }
    return std::sqrt(acc.value());
}

}  // namespace

double hs_norm_of_B(const SpectralOperator& op, const NoiseSpec& spec, const SpectralVector& v, SobolevIndex s,
                    const CollocationGrid* grid) {
    return hs_norm_impl(op, spec, v, nullptr, s, grid);
}

double hs_norm_of_B_difference(const SpectralOperator& op, const NoiseSpec& spec, const SpectralVector& v,
                               const SpectralVector& w, SobolevIndex s, const CollocationGrid* grid) {
    return hs_norm_impl(op, spec, v, &w, s, grid);
}

}  // namespace rothe
