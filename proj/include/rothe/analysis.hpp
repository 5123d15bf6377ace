#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rothe/scheme.hpp"

namespace rothe {

// ---------------------------------------------------------------------------
// Closed-form oracles for the linear additive case

/// E(u(T) - u_K)^2 for du = lambda u dt + c dW, u(0) = u0, with u_K the
/// implicit Euler iterate on the same Brownian path. Exact (Ito isometry).
double ou_exact_mse(double lambda, double c, double u0, double T, std::size_t K);

/// E||u(T) - u_K||_rho^2 for a linear additive model: the modewise sum of
/// ou_exact_mse weighted by (-lambda_j)^{2 rho}.
double linear_additive_exact_mse(const Model& model, double rho, double T, std::size_t K, const SpectralVector& u0);

/// Exact mild solution u(T) of a linear additive model, coupled to the fine
/// increments of `path`. The stochastic convolution over each fine step is
/// drawn from its Gaussian law conditional on the Brownian increment, using a
/// stream derived from the path seed.
SpectralVector ou_exact_solution(const Model& model, const WienerPath& path, const SpectralVector& u0);

// ---------------------------------------------------------------------------
// Strong error estimation

struct RateFit {
    double rate = 0.0;
    std::optional<double> halfwidth;  ///< 1.96 x standard error propagated from the MC errors
    std::size_t points = 0;
};

/// Least squares slope of log(error) against log(tau).
RateFit fit_rate(std::span<const double> taus, std::span<const double> errors, std::span<const double> stderrs = {});

struct ErrorRow {
    std::size_t K = 0;
    double tau = 0.0;
    double rms_error = 0.0;
    std::optional<double> mc_stderr;    ///< absent when fewer than two samples succeeded
    std::size_t samples = 0;            ///< successful samples
    std::size_t failures = 0;
    bool in_window = false;             ///< used by the asymptotic fit
    std::optional<double> oracle_rms;   ///< closed-form value (linear additive models only)
};

struct ContractAudit {
    std::size_t records = 0;
    std::size_t violations = 0;         ///< recomputed ||v_exact - v~||_rho > eps + 1e-12
    std::size_t bound_violations = 0;   ///< certified bound > eps
    double max_excess = 0.0;            ///< max(recomputed - eps)

    void merge(const ContractAudit& other);
};

struct ErrorTable {
    std::vector<ErrorRow> rows;  ///< sorted by tau descending
    RateFit fitted_rate;         ///< asymptotic window (three smallest tau)
    RateFit full_fit;
    double norm_index = 0.0;
    std::string solver;
    std::string epsilon_rule;
    std::string reference;
    ContractAudit audit;

    [[nodiscard]] const ErrorRow& row(std::size_t K) const;
};

struct ReferenceChoice {
    enum class Kind { ou_oracle, fine_euler };
    Kind kind = Kind::fine_euler;
    std::size_t fine_steps = 0;  ///< K_ref for fine_euler

    static ReferenceChoice ou_oracle() { return {Kind::ou_oracle, 0}; }
    static ReferenceChoice fine_euler(std::size_t k_ref) { return {Kind::fine_euler, k_ref}; }
    [[nodiscard]] std::string describe() const;
};

/// One scheme variant evaluated on the common sample paths.
struct Pipeline {
    SolverChoice solver;
    ToleranceRule tolerance;
};

struct StudyOptions {
    std::size_t threads = 0;      ///< 0: hardware concurrency
    bool audit_contract = true;   ///< recompute v_exact for every inexact step
    std::size_t window = 3;       ///< number of smallest tau values in the asymptotic fit
};

/// RMS over cfg.samples coupled samples of ||u_ref(T) - u_K||_rho for every K
/// and every pipeline; all pipelines share paths and reference solutions.
/// Throws std::invalid_argument when the reference is not strictly finer than
/// every K or some K does not divide the fine grid.
std::vector<ErrorTable> estimate_strong_errors(const Model& model, const SchemeConfig& base,
                                               std::span<const std::size_t> k_list, const ReferenceChoice& reference,
                                               std::span<const Pipeline> pipelines, const SpectralVector& u0,
                                               const StudyOptions& options = {});

/// Single pipeline (base.solver, base.tolerance).
ErrorTable estimate_strong_error(const Model& model, const SchemeConfig& base, std::span<const std::size_t> k_list,
                                 const ReferenceChoice& reference, const SpectralVector& u0,
                                 const StudyOptions& options = {});

// ---------------------------------------------------------------------------
// Lipschitz probes of E_{tau,j,k} and the error-propagation budget

struct LipschitzProbe {
    std::size_t j = 0;
    std::size_t k = 0;
    double estimate = 0.0;  ///< a lower bound on the Lipschitz constant
    std::size_t probes = 0;
    std::uint64_t seed = 0;
};

/// Estimates L^_{j,k} for all 1 <= j <= k <= K (entry (j, k)); max-merged across paths.
class LipschitzTable {
public:
    explicit LipschitzTable(std::size_t steps) : steps_(steps), data_((steps + 1) * (steps + 1), 0.0) {}

    [[nodiscard]] std::size_t steps() const noexcept { return steps_; }
    [[nodiscard]] double at(std::size_t j, std::size_t k) const { return data_.at(j * (steps_ + 1) + k); }
    void raise(std::size_t j, std::size_t k, double value);
    void merge(const LipschitzTable& other);
    /// max over 1 <= j <= k <= K
    [[nodiscard]] double max() const;

    /// sum_{j=0}^{k-1} L^_{j+1,k} eps_j
    [[nodiscard]] double budget(std::size_t k, std::span<const double> epsilons) const;

private:
    std::size_t steps_;
    std::vector<double> data_;
};

/// ||E(v + eta d) - E(v)||_rho / ||(v + eta d) - v||_rho through E_{tau,j,k} on `path`.
/// Throws std::invalid_argument when the perturbation vanishes.
double probe_ratio(const Model& model, const SchemeConfig& cfg, const WienerPath& path, std::size_t j, std::size_t k,
                   const SpectralVector& v, const SpectralVector& d, double eta);

/// Probe pairs (v, v + eta d), eta = 1e-4 ||v||_rho, based at the exact
/// trajectory state u_j plus a random offset (`probes` random pairs) and at u_j
/// itself along the highest mode. The estimate is a lower bound.
LipschitzProbe lipschitz_probe(const Model& model, const SchemeConfig& cfg, std::size_t j, std::size_t k,
                               const WienerPath& path, const SpectralVector& u0, std::size_t probes, std::uint64_t seed);

/// All (j, k) pairs of one path in K sweeps.
LipschitzTable lipschitz_probe_table(const Model& model, const SchemeConfig& cfg, const WienerPath& path,
                                     const SpectralVector& u0, std::size_t probes, std::uint64_t seed);

/// Max-merged tables over `paths` probe paths (seeds independent of the MC seeds).
LipschitzTable lipschitz_probe_paths(const Model& model, const SchemeConfig& cfg, const SpectralVector& u0,
                                     std::size_t paths, std::size_t probes, std::size_t fine_steps,
                                     const StudyOptions& options = {});

struct GapRow {
    std::size_t k = 0;
    double t = 0.0;
    double epsilon = 0.0;   ///< eps_{k-1}
    double gap_rms = 0.0;   ///< RMS ||u_k - u~_k||_rho
    std::optional<double> gap_stderr;
    double budget = 0.0;    ///< sum_{j<k} L^_{j+1,k} eps_j
    bool within_budget = true;  ///< gap_rms <= budget (1 + 0.05)
};

struct GapTable {
    std::vector<GapRow> rows;  ///< k = 1..K
    std::size_t samples = 0;
    std::size_t failures = 0;
    std::string solver;
    std::string epsilon_rule;
    double norm_index = 0.0;
    LipschitzTable lipschitz{0};
    ContractAudit audit;

    [[nodiscard]] bool all_within_budget() const;
};

struct PropagationOptions {
    std::size_t probe_paths = 2;
    std::size_t probes = 32;
    StudyOptions study{};
};

/// Exact vs inexact scheme on common paths: per-k RMS gap and its probe budget.
GapTable propagation_gap(const Model& model, const SchemeConfig& cfg, const SpectralVector& u0,
                         const PropagationOptions& options = {});

// ---------------------------------------------------------------------------

struct BudgetCheck {
    std::size_t K = 0;
    double exact_rms = 0.0;
    double inexact_rms = 0.0;
    double budget = 0.0;
    bool ok = false;  ///< |inexact - exact| <= 1.05 budget
};

struct RateComparison {
    std::string solver;
    std::string epsilon_rule;
    double exact_rate = 0.0;
    double inexact_rate = 0.0;
    bool rate_preserved = false;  ///< inexact_rate >= exact_rate - 0.1
    std::vector<BudgetCheck> budgets;
    bool budget_ok = false;
    ContractAudit audit;
};

struct Theorem41Report {
    ErrorTable exact;
    std::vector<ErrorTable> inexact;
    std::vector<RateComparison> comparisons;
    std::vector<LipschitzTable> lipschitz;  ///< one per K

    /// Some pipeline lost more than 0.1 of the exact rate.
    [[nodiscard]] bool violation_flagged() const;
};

struct Theorem41Options {
    std::size_t probe_paths = 2;
    std::size_t probes = 32;
    double rate_tolerance = 0.1;
    double budget_slack = 0.05;
    StudyOptions study{};
};

/// Exact scheme and each inexact pipeline on common paths, with rate and
/// per-K budget comparisons.
Theorem41Report verify_theorem41(const Model& model, const SchemeConfig& cfg, std::span<const std::size_t> k_list,
                                 const ReferenceChoice& reference, std::span<const Pipeline> inexact,
                                 const SpectralVector& u0, const Theorem41Options& options = {});

}  // namespace rothe
