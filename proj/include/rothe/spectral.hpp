#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rothe {

/// Neumaier-compensated accumulator. Every norm in the library goes through it.
class CompensatedSum {
public:
    void add(double x) noexcept;
    [[nodiscard]] double value() const noexcept { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

/// Index into the scale of spaces D((-A)^s).
struct SobolevIndex {
    double s = 0.0;

    constexpr SobolevIndex() = default;
    constexpr explicit SobolevIndex(double value) : s(value) {}

    friend constexpr bool operator==(SobolevIndex, SobolevIndex) = default;
};

/// Coefficients v^(j) = <v, e_j> of an element of D((-A)^s) in the eigenbasis.
/// `space` records the index the holder intends; the coefficients themselves
/// do not depend on it.
struct SpectralVector {
    std::vector<double> coeffs;
    SobolevIndex space{};

    SpectralVector() = default;
    explicit SpectralVector(std::vector<double> c, SobolevIndex s = SobolevIndex{}) :
        coeffs(std::move(c)), space(s) {}

    static SpectralVector zeros(std::size_t size) { return SpectralVector(std::vector<double>(size, 0.0)); }
    /// Unit vector e_j, j counted from 1.
    static SpectralVector unit(std::size_t size, std::size_t j);

    [[nodiscard]] std::size_t size() const noexcept { return coeffs.size(); }
    double& operator[](std::size_t i) { return coeffs[i]; }
    double operator[](std::size_t i) const { return coeffs[i]; }

    SpectralVector& operator+=(const SpectralVector& other);
    SpectralVector& operator-=(const SpectralVector& other);
    SpectralVector& operator*=(double factor);
};

SpectralVector operator+(SpectralVector a, const SpectralVector& b);
SpectralVector operator-(SpectralVector a, const SpectralVector& b);
SpectralVector operator*(double factor, SpectralVector v);

enum class SpectrumKind { dirichlet_laplacian_1d, power_law, custom };

/// Truncated spectral model of a strictly negative definite self-adjoint
/// operator A: eigenvalues 0 > lambda_1 >= lambda_2 >= ... >= lambda_J.
/// Immutable after construction.
class SpectralOperator {
public:
    /// Throws std::invalid_argument unless all eigenvalues are finite, negative
    /// and nonincreasing.
    explicit SpectralOperator(std::vector<double> eigenvalues,
                              SpectrumKind kind = SpectrumKind::custom,
                              std::string label = "custom",
                              std::optional<double> growth_exponent = std::nullopt);

    [[nodiscard]] std::size_t size() const noexcept { return eigenvalues_.size(); }
    [[nodiscard]] std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
    [[nodiscard]] double eigenvalue(std::size_t index) const { return eigenvalues_.at(index); }
    [[nodiscard]] SpectrumKind kind() const noexcept { return kind_; }
    [[nodiscard]] const std::string& label() const noexcept { return label_; }
    /// p in -lambda_j = c j^p when the spectrum follows a power law (Dirichlet: 2).
    [[nodiscard]] std::optional<double> growth_exponent() const noexcept { return growth_exponent_; }

    /// (-lambda_j)^s, with the s = 0 case returning exactly 1.
    [[nodiscard]] double power_factor(std::size_t index, double s) const;

private:
    std::vector<double> eigenvalues_;
    SpectrumKind kind_;
    std::string label_;
    std::optional<double> growth_exponent_;
};

SpectralOperator make_dirichlet_laplacian_1d(std::size_t modes);
SpectralOperator make_power_law_operator(std::size_t modes, double scale, double exponent);

/// (sum_j ((-lambda_j)^s v^(j))^2)^{1/2}
double fractional_norm(const SpectralOperator& op, const SpectralVector& v, SobolevIndex s);

SpectralVector apply_fractional_power(const SpectralOperator& op, const SpectralVector& v, SobolevIndex s);

/// (I - tau A)^{-n} v, coefficientwise.
SpectralVector apply_resolvent_power(const SpectralOperator& op, const SpectralVector& v, double tau,
                                     unsigned n = 1);

/// e^{tA} v
SpectralVector apply_semigroup(const SpectralOperator& op, const SpectralVector& v, double t);

/// Upper bound on ||(I - tau A)^{-n}|| from D((-A)^{r-s}) to D((-A)^r):
///   s^s (1 - s/n)^{n-s} (n tau)^{-s}       for 0 < s <= 1 (0^0 := 1),
///   (-lambda_1)^s (1 - tau lambda_1)^{-n}  for s <= 0.
double resolvent_operator_norm_bound(SobolevIndex s, unsigned n, double tau, double lambda1);

/// max_j (-lambda_j)^s (1 - tau lambda_j)^{-n}, the exact truncated operator norm.
double resolvent_operator_norm(const SpectralOperator& op, SobolevIndex s, unsigned n, double tau);

/// Largest admissible convergence rate min(1 - sigma, (1 - alpha)/2 - beta).
double max_rate(double sigma, double beta, double alpha);

struct ConditionResult {
    std::string name;  ///< parameter or condition name, e.g. "beta"
    bool passed = false;
    std::string detail;
};

struct AssumptionReport {
    std::vector<ConditionResult> conditions;
    double partial_trace = 0.0;                  ///< sum_{j<=J} (-lambda_j)^{-alpha}
    std::optional<bool> trace_converges;         ///< known only for power-law spectra
    double delta_max = 0.0;
    double intermediate_space_index = 0.0;       ///< rho - max(0, sigma, beta + alpha/2)

    [[nodiscard]] bool all_passed() const noexcept;
    [[nodiscard]] const ConditionResult* find(const std::string& name) const;
};

AssumptionReport check_assumptions(const SpectralOperator& op, double alpha, double sigma, double beta, double rho);

}  // namespace rothe
