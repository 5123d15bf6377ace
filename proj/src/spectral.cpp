#include "rothe/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace rothe {

void CompensatedSum::add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
        carry_ += (sum_ - t) + x;
    } else {
        carry_ += (x - t) + sum_;
    }
    sum_ = t;
}

SpectralVector SpectralVector::unit(std::size_t size, std::size_t j) {
    if (j == 0 || j > size) {
        throw std::invalid_argument(fmt::format("unit vector index {} outside 1..{}", j, size));
    }
    auto v = zeros(size);
    v.coeffs[j - 1] = 1.0;
    return v;
}

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(fmt::format("{}: length mismatch ({} vs {})", what, a, b));
    }
}

}  // namespace

SpectralVector& SpectralVector::operator+=(const SpectralVector& other) {
    require_same_size(size(), other.size(), "SpectralVector +=");
    for (std::size_t i = 0; i < size(); ++i) coeffs[i] += other.coeffs[i];
    return *this;
}

SpectralVector& SpectralVector::operator-=(const SpectralVector& other) {
    require_same_size(size(), other.size(), "SpectralVector -=");
    for (std::size_t i = 0; i < size(); ++i) coeffs[i] -= other.coeffs[i];
    return *this;
}

SpectralVector& SpectralVector::operator*=(double factor) {
    for (double& c : coeffs) c *= factor;
    return *this;
}

SpectralVector operator+(SpectralVector a, const SpectralVector& b) { return a += b; }
SpectralVector operator-(SpectralVector a, const SpectralVector& b) { return a -= b; }
SpectralVector operator*(double factor, SpectralVector v) { return v *= factor; }

SpectralOperator::SpectralOperator(std::vector<double> eigenvalues, SpectrumKind kind, std::string label,
                                   std::optional<double> growth_exponent) :
    eigenvalues_(std::move(eigenvalues)),
    kind_(kind),
    label_(std::move(label)),
    growth_exponent_(growth_exponent) {
    if (eigenvalues_.empty()) {
        throw std::invalid_argument("SpectralOperator: at least one mode is required");
    }
    for (std::size_t j = 0; j < eigenvalues_.size(); ++j) {
        const double lambda = eigenvalues_[j];
        if (!std::isfinite(lambda) || !(lambda < 0.0)) {
            throw std::invalid_argument(fmt::format("SpectralOperator: eigenvalue {} = {} is not strictly negative", j + 1, lambda));
        }
        if (j > 0 && lambda > eigenvalues_[j - 1]) {
            throw std::invalid_argument(fmt::format("SpectralOperator: eigenvalues must be nonincreasing (mode {})", j + 1));
        }
    }
}

double SpectralOperator::power_factor(std::size_t index, double s) const {
    if (s == 0.0) return 1.0;
    if (s == 1.0) return -eigenvalues_[index];
    return std::pow(-eigenvalues_[index], s);
}

SpectralOperator make_dirichlet_laplacian_1d(std::size_t modes) {
    if (modes == 0) throw std::invalid_argument("make_dirichlet_laplacian_1d: J must be >= 1");
    std::vector<double> lambda(modes);
    for (std::size_t j = 1; j <= modes; ++j) {
        const double k = static_cast<double>(j) * std::numbers::pi;
        lambda[j - 1] = -(k * k);
    }
    return SpectralOperator(std::move(lambda), SpectrumKind::dirichlet_laplacian_1d, "dirichlet_laplacian_1d", 2.0);
}

SpectralOperator make_power_law_operator(std::size_t modes, double scale, double exponent) {
    if (modes == 0) throw std::invalid_argument("make_power_law_operator: J must be >= 1");
    if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("make_power_law_operator: c must be positive");
    if (!(exponent > 0.0) || !std::isfinite(exponent)) throw std::invalid_argument("make_power_law_operator: p must be positive");
    std::vector<double> lambda(modes);
    for (std::size_t j = 1; j <= modes; ++j) {
        lambda[j - 1] = -scale * std::pow(static_cast<double>(j), exponent);
    }
    return SpectralOperator(std::move(lambda), SpectrumKind::power_law, "power_law", exponent);
}

double fractional_norm(const SpectralOperator& op, const SpectralVector& v, SobolevIndex s) {
    require_same_size(v.size(), op.size(), "fractional_norm");
    CompensatedSum acc;
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double term = op.power_factor(j, s.s) * v[j];
        acc.add(term * term);
    }
    return std::sqrt(acc.value());
}

SpectralVector apply_fractional_power(const SpectralOperator& op, const SpectralVector& v, SobolevIndex s) {
    require_same_size(v.size(), op.size(), "apply_fractional_power");
    SpectralVector out(v.coeffs, SobolevIndex{v.space.s - s.s});
    for (std::size_t j = 0; j < v.size(); ++j) out[j] *= op.power_factor(j, s.s);
    return out;
}

SpectralVector apply_resolvent_power(const SpectralOperator& op, const SpectralVector& v, double tau, unsigned n) {
    require_same_size(v.size(), op.size(), "apply_resolvent_power");
    if (!(tau > 0.0)) throw std::invalid_argument("apply_resolvent_power: tau must be positive");
    if (n == 0) throw std::invalid_argument("apply_resolvent_power: n must be >= 1");
    SpectralVector out = v;
    const auto lambda = op.eigenvalues();
    for (std::size_t j = 0; j < v.size(); ++j) {
        const double denom = 1.0 - tau * lambda[j];
        out[j] = n == 1 ? v[j] / denom : v[j] * std::pow(denom, -static_cast<double>(n));
    }
    return out;
}

SpectralVector apply_semigroup(const SpectralOperator& op, const SpectralVector& v, double t) {
    require_same_size(v.size(), op.size(), "apply_semigroup");
    if (!(t >= 0.0)) throw std::invalid_argument("apply_semigroup: t must be nonnegative");
    SpectralVector out = v;
    const auto lambda = op.eigenvalues();
    for (std::size_t j = 0; j < v.size(); ++j) out[j] *= std::exp(t * lambda[j]);
    return out;
}

double resolvent_operator_norm_bound(SobolevIndex index, unsigned n, double tau, double lambda1) {
    const double s = index.s;
    if (s > 1.0) throw std::invalid_argument("resolvent_operator_norm_bound: s must be <= 1");
    if (n == 0) throw std::invalid_argument("resolvent_operator_norm_bound: n must be >= 1");
    if (!(tau > 0.0)) throw std::invalid_argument("resolvent_operator_norm_bound: tau must be positive");
    const double nd = static_cast<double>(n);
    if (s > 0.0) {
        const double base = 1.0 - s / nd;
        // 0^0 := 1 at s = n = 1
        const double middle = (base == 0.0 && nd - s == 0.0) ? 1.0 : std::pow(base, nd - s);
        return std::pow(s, s) * middle * std::pow(nd * tau, -s);
    }
    if (!(lambda1 < 0.0)) throw std::invalid_argument("resolvent_operator_norm_bound: lambda_1 must be negative");
    return std::pow(-lambda1, s) * std::pow(1.0 - tau * lambda1, -nd);
}

double resolvent_operator_norm(const SpectralOperator& op, SobolevIndex s, unsigned n, double tau) {
    double best = 0.0;
    const auto lambda = op.eigenvalues();
    for (std::size_t j = 0; j < op.size(); ++j) {
        best = std::max(best, op.power_factor(j, s.s) * std::pow(1.0 - tau * lambda[j], -static_cast<double>(n)));
    }
    return best;
}

double max_rate(double sigma, double beta, double alpha) {
    return std::min(1.0 - sigma, (1.0 - alpha) / 2.0 - beta);
}

bool AssumptionReport::all_passed() const noexcept {
    return std::all_of(conditions.begin(), conditions.end(), [](const ConditionResult& c) { return c.passed; });
}

const ConditionResult* AssumptionReport::find(const std::string& name) const {
    auto it = std::find_if(conditions.begin(), conditions.end(), [&](const ConditionResult& c) { return c.name == name; });
    return it == conditions.end() ? nullptr : &*it;
}

AssumptionReport check_assumptions(const SpectralOperator& op, double alpha, double sigma, double beta, double rho) {
    AssumptionReport report;
    auto add = [&](std::string name, bool ok, std::string detail) {
        report.conditions.push_back({std::move(name), ok, std::move(detail)});
    };

    add("alpha", alpha > 0.0, fmt::format("alpha = {} must be positive", alpha));
    add("rho", rho >= 0.0, fmt::format("rho = {} must be >= 0", rho));
    add("sigma", sigma < 1.0, fmt::format("sigma = {} must be < 1", sigma));
    const double beta_limit = (1.0 - alpha) / 2.0;
    add("beta", beta < beta_limit, fmt::format("beta = {} must be < (1 - alpha)/2 = {}", beta, beta_limit));

    CompensatedSum trace;
    for (std::size_t j = 0; j < op.size(); ++j) trace.add(op.power_factor(j, -alpha));
    report.partial_trace = trace.value();
    if (const auto p = op.growth_exponent()) {
        report.trace_converges = alpha * *p > 1.0;
        add("trace", *report.trace_converges,
            fmt::format("Tr(-A)^(-alpha) finite iff alpha*p > 1: alpha*p = {}; partial sum over {} modes = {}", alpha * *p,
                        op.size(), report.partial_trace));
    } else {
        add("trace", std::isfinite(report.partial_trace),
            fmt::format("partial trace over {} modes = {} (infinite-mode behaviour unknown)", op.size(), report.partial_trace));
    }

    report.delta_max = max_rate(sigma, beta, alpha);
    report.intermediate_space_index = rho - std::max({0.0, sigma, beta + alpha / 2.0});
    return report;
}

}  // namespace rothe
