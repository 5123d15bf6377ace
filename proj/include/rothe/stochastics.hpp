#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rothe/fields.hpp"
#include "rothe/spectral.hpp"

namespace rothe {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of sample `index` under `master`: mix64(mix64(master) ^ index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Fine Brownian increments of a J-mode cylindrical Wiener process on [0, T].
///
/// Increments are stored mode-major and generated mode by mode, so the first J
/// columns of a path with more modes (same seed and K_fine) are bitwise equal.
class WienerPath {
public:
    WienerPath(std::uint64_t seed, std::size_t fine_steps, std::size_t modes, double horizon,
               std::vector<double> increments);

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::size_t fine_steps() const noexcept { return fine_steps_; }
    [[nodiscard]] std::size_t modes() const noexcept { return modes_; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] double fine_step() const noexcept { return horizon_ / static_cast<double>(fine_steps_); }

    /// Increment of mode j (0-based) over fine step i.
    [[nodiscard]] double increment(std::size_t mode, std::size_t step) const { return data_[mode * fine_steps_ + step]; }
    [[nodiscard]] std::span<const double> mode_increments(std::size_t mode) const {
        return std::span<const double>(data_).subspan(mode * fine_steps_, fine_steps_);
    }

private:
    std::uint64_t seed_;
    std::size_t fine_steps_;
    std::size_t modes_;
    double horizon_;
    std::vector<double> data_;
};

/// I.i.d. Normal(0, T/K_fine) increments; a deterministic function of the arguments.
WienerPath sample_path(std::uint64_t seed, std::size_t fine_steps, std::size_t modes, double horizon);

/// W(t_{k+1}) - W(t_k) on the uniform grid with K steps: the sum of fine block k.
/// Throws std::invalid_argument unless K divides K_fine and k < K.
std::vector<double> coarse_increment(const WienerPath& path, std::size_t steps, std::size_t k);

enum class NoiseKind { additive, multiplicative };

/// B(v)a = h(v) * sum_j a_j psi_j with psi_j = c_j e_j (additive: h == 1).
struct NoiseSpec {
    NoiseKind kind = NoiseKind::additive;
    std::vector<double> cm_coeffs;  ///< c_j > 0, nonincreasing
    ScalarMap h = ScalarMap::constant(1.0);
    double beta_target = 0.0;

    /// Throws std::invalid_argument if the coefficients are not positive and nonincreasing.
    void validate() const;

    /// Upper bound on the Lipschitz constant of v -> B(v) from U into the
    /// Hilbert-Schmidt operators HS(l_2, U) (zero for additive noise):
    /// Lip(h) * sqrt(2) * (sum_j c_j^2)^{1/2}.
    [[nodiscard]] double hs_lipschitz_bound() const;
};

/// Exponent gamma = rho - beta + alpha/2 + 0.01 of the shipped scaling c_j = (-lambda_j)^{-gamma}.
double cm_scaling_exponent(double rho, double beta, double alpha);

NoiseSpec make_additive_noise(const SpectralOperator& op, double rho, double beta, double alpha, double scale = 1.0);
NoiseSpec make_multiplicative_noise(const SpectralOperator& op, const ScalarMap& h, double rho, double beta,
                                    double alpha, double scale = 1.0);

/// B(v) chi. `grid` may be null for additive noise.
SpectralVector apply_noise(const SpectralOperator& op, const NoiseSpec& spec, const SpectralVector& v,
                           std::span<const double> chi, const CollocationGrid* grid);

/// (sum_j ||B(v) b_j||^2_{D((-A)^s)})^{1/2} over the canonical basis b_j of l_2.
double hs_norm_of_B(const SpectralOperator& op, const NoiseSpec& spec, const SpectralVector& v, SobolevIndex s,
                    const CollocationGrid* grid);

/// ||B(v) - B(w)||_{HS(l_2, D((-A)^s))}.
double hs_norm_of_B_difference(const SpectralOperator& op, const NoiseSpec& spec, const SpectralVector& v,
                               const SpectralVector& w, SobolevIndex s, const CollocationGrid* grid);

}  // namespace rothe
