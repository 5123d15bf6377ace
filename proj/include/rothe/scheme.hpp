#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rothe/fields.hpp"
#include "rothe/spectral.hpp"
#include "rothe/stochastics.hpp"

namespace rothe {

/// An inner solver could not meet its tolerance within its iteration budget.
class solver_failure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// du = (Au + f(u)) dt + B(u) dW with f the Nemytskii operator of `drift`
/// (f == 0 when absent).
struct Model {
    SpectralOperator op;
    std::optional<ScalarMap> drift;
    NoiseSpec noise;
    std::optional<CollocationGrid> grid;

    /// Builds a model and attaches the default N = 2J grid when the Nemytskii
    /// terms need one. Throws std::invalid_argument on size mismatches and
    /// unsupported_operation when collocation is requested off the Dirichlet preset.
    static Model make(SpectralOperator op, std::optional<ScalarMap> drift, NoiseSpec noise);

    [[nodiscard]] const CollocationGrid* grid_ptr() const noexcept { return grid ? &*grid : nullptr; }
    [[nodiscard]] std::size_t modes() const noexcept { return op.size(); }
    /// f == 0 and additive noise: the scheme is affine in (u, chi).
    [[nodiscard]] bool is_linear_additive() const noexcept;
};

/// Tolerances eps_0..eps_{K-1} of the inexact scheme.
struct ToleranceRule {
    enum class Kind { theorem41, constant, custom };

    Kind kind = Kind::theorem41;
    double value = 1.0;            ///< theorem41: the constant C in C tau^{1+delta}; constant: eps
    std::vector<double> schedule;  ///< custom only

    static ToleranceRule theorem41(double constant = 1.0) { return {Kind::theorem41, constant, {}}; }
    static ToleranceRule constant_tolerance(double eps) { return {Kind::constant, eps, {}}; }
    static ToleranceRule custom(std::vector<double> eps) { return {Kind::custom, 0.0, std::move(eps)}; }

    /// "theorem41[:C]", "constant:eps" or "custom:e0,e1,...".
    static ToleranceRule parse(const std::string& text);
    [[nodiscard]] std::string describe() const;
};

struct SolverChoice {
    enum class Kind { exact, perturbation, truncation, iterative };
    enum class Direction { highest_mode, random_unit };
    enum class Theta { saturated, uniform };

    Kind kind = Kind::exact;
    Direction direction = Direction::highest_mode;
    Theta theta = Theta::saturated;
    unsigned max_iter = 200;
    /// lambda~_j = lambda_j (1 + mismatch) in the Jacobi splitting of the iterative solver.
    double splitting_mismatch = 0.3;
    std::uint64_t seed = 0;

    static SolverChoice exact() { return {}; }
    static SolverChoice perturbation(Direction d = Direction::highest_mode, Theta t = Theta::saturated) {
        SolverChoice s;
        s.kind = Kind::perturbation;
        s.direction = d;
        s.theta = t;
        return s;
    }
    static SolverChoice truncation() {
        SolverChoice s;
        s.kind = Kind::truncation;
        return s;
    }
    static SolverChoice iterative(unsigned max_iter = 200) {
        SolverChoice s;
        s.kind = Kind::iterative;
        s.max_iter = max_iter;
        return s;
    }

    /// "exact", "perturbation", "perturbation_random", "truncation", "iterative".
    static SolverChoice parse(const std::string& text);
    [[nodiscard]] std::string describe() const;
};

struct SchemeConfig {
    double T = 1.0;
    std::size_t K = 1;
    double rho = 0.0;
    double sigma = 0.0;
    double beta = 0.0;
    double alpha = 0.55;
    double delta = 0.1;
    std::size_t J = 1;
    SolverChoice solver{};
    ToleranceRule tolerance{};
    std::size_t samples = 1;
    std::uint64_t seed = 0;

    [[nodiscard]] double tau() const noexcept { return T / static_cast<double>(K); }
    [[nodiscard]] SobolevIndex norm_index() const noexcept { return SobolevIndex{rho}; }
    [[nodiscard]] SchemeConfig with_steps(std::size_t steps) const;

    /// Throws std::invalid_argument unless T > 0, K >= 1, M >= 1 and
    /// 0 < delta < min(1 - sigma, (1 - alpha)/2 - beta).
    void validate() const;
};

struct StepRecord {
    std::size_t k = 0;
    double epsilon = 0.0;
    double achieved_error_bound = 0.0;  ///< certified ||v - [v]_eps||_rho
    std::size_t cost = 0;               ///< modes kept or iterations
};

/// W-increment of step k on the K-step grid, normalised by 1/sqrt(tau).
std::vector<double> normalized_increment(const WienerPath& path, std::size_t steps, std::size_t k);

/// R_{tau,k}(v) = v + tau f(v) + sqrt(tau) B(v) chi_k.
SpectralVector r_operator(const Model& model, const SchemeConfig& cfg, const SpectralVector& v,
                          std::span<const double> chi, std::size_t k);

/// (I - tau A)^{-1} R_{tau,k}(v).
SpectralVector euler_step_exact(const Model& model, const SchemeConfig& cfg, const SpectralVector& v,
                                std::span<const double> chi, std::size_t k);

struct InexactStep {
    SpectralVector value;
    StepRecord record;
};

/// [L^{-1} R_{tau,k}(v)]_eps with a certified ||.||_rho error <= eps.
/// Throws solver_failure when the iterative solver exhausts max_iter and
/// std::invalid_argument for negative eps (or eps == 0 with the iterative solver).
InexactStep inexact_solve(const SolverChoice& solver, const Model& model, const SchemeConfig& cfg,
                          const SpectralVector& v, std::span<const double> chi, std::size_t k, double epsilon);

/// eps_0..eps_{K-1} for cfg.tolerance. Negative or non-finite entries are rejected.
std::vector<double> tolerance_schedule(const SchemeConfig& cfg);

using Trajectory = std::vector<SpectralVector>;

/// u_0..u_K of the exact scheme driven by the block increments of `path`.
Trajectory run_exact(const Model& model, const SchemeConfig& cfg, const WienerPath& path, const SpectralVector& u0);

/// u_K only.
SpectralVector run_exact_final(const Model& model, const SchemeConfig& cfg, const WienerPath& path,
                               const SpectralVector& u0);

struct InexactRun {
    Trajectory trajectory;
    std::vector<StepRecord> records;
    std::optional<std::string> failure;  ///< set when an inner solve failed; trajectory is then partial

    [[nodiscard]] bool failed() const noexcept { return failure.has_value(); }
};

/// u~_0 = u_0, u~_{k+1} = [L^{-1} R_{tau,k}(u~_k)]_{eps_k}.
InexactRun run_inexact(const Model& model, const SchemeConfig& cfg, const WienerPath& path, const SpectralVector& u0);
InexactRun run_inexact(const Model& model, const SchemeConfig& cfg, const WienerPath& path, const SpectralVector& u0,
                       std::span<const double> epsilons);

}  // namespace rothe
