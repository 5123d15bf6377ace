#include "rothe/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace rothe {

Model Model::make(SpectralOperator op, std::optional<ScalarMap> drift, NoiseSpec noise) {
    noise.validate();
    if (noise.cm_coeffs.size() != op.size()) {
        throw std::invalid_argument(fmt::format("Model: {} noise coefficients for {} modes", noise.cm_coeffs.size(), op.size()));
    }
    if (drift && drift->is_zero()) drift.reset();
    const bool needs_grid = drift.has_value() || noise.kind == NoiseKind::multiplicative;
    std::optional<CollocationGrid> grid;
    if (needs_grid) {
        if (op.kind() != SpectrumKind::dirichlet_laplacian_1d) {
            throw unsupported_operation("Model: Nemytskii terms need the 1d Dirichlet preset");
        }
        grid = CollocationGrid::for_modes(op.size());
    }
    return Model{std::move(op), std::move(drift), std::move(noise), std::move(grid)};
}

bool Model::is_linear_additive() const noexcept { return !drift && noise.kind == NoiseKind::additive; }

namespace {

double parse_number(const std::string& s, const std::string& context) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || !std::isfinite(x)) {
        throw std::invalid_argument(fmt::format("{}: '{}' is not a number", context, s));
    }
    return x;
}

}  // namespace

ToleranceRule ToleranceRule::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? std::string{} : text.substr(colon + 1);
    auto nonnegative = [](const std::string& s) {
        const double x = parse_number(s, "tolerance_rule");
        if (x < 0.0) throw std::invalid_argument(fmt::format("tolerance_rule: {} is negative", s));
        return x;
    };
    if (name == "theorem41") return theorem41(args.empty() ? 1.0 : nonnegative(args));
    if (name == "constant" && !args.empty()) return constant_tolerance(nonnegative(args));
    if (name == "custom" && !args.empty()) {
        std::vector<double> eps;
        std::size_t start = 0;
        while (start <= args.size()) {
            const auto comma = args.find(',', start);
            eps.push_back(nonnegative(args.substr(start, comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return custom(std::move(eps));
    }
    throw std::invalid_argument(fmt::format("tolerance_rule: unknown rule '{}'", text));
}

std::string ToleranceRule::describe() const {
    switch (kind) {
        case Kind::theorem41: return value == 1.0 ? "theorem41" : fmt::format("theorem41:{}", value);
        case Kind::constant: return fmt::format("constant:{}", value);
        case Kind::custom: return fmt::format("custom:{}", fmt::join(schedule, ";"));
    }
    return "unknown";
}

SolverChoice SolverChoice::parse(const std::string& text) {
    if (text == "exact") return exact();
    if (text == "perturbation") return perturbation();
    if (text == "perturbation_random") return perturbation(Direction::random_unit);
    if (text == "truncation") return truncation();
    if (text == "iterative") return iterative();
    throw std::invalid_argument(fmt::format("solver: unknown kind '{}'", text));
}

std::string SolverChoice::describe() const {
    switch (kind) {
        case Kind::exact: return "exact";
        case Kind::perturbation: {
            std::string name = direction == Direction::highest_mode ? "perturbation" : "perturbation_random";
            return theta == Theta::uniform ? name + "_uniform_theta" : name;
        }
        case Kind::truncation: return "truncation";
        case Kind::iterative: return "iterative";
    }
    return "unknown";
}

SchemeConfig SchemeConfig::with_steps(std::size_t steps) const {
    SchemeConfig copy = *this;
    copy.K = steps;
    return copy;
}

void SchemeConfig::validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument(fmt::format("T = {} must be positive", T));
    if (K < 1) throw std::invalid_argument("K must be >= 1");
    if (samples < 1) throw std::invalid_argument("samples must be >= 1");
    if (J < 1) throw std::invalid_argument("J must be >= 1");
    const double limit = max_rate(sigma, beta, alpha);
    if (!(delta > 0.0) || !(delta < limit)) {
        throw std::invalid_argument(
            fmt::format("delta = {} must lie in (0, min(1 - sigma, (1 - alpha)/2 - beta)) = (0, {})", delta, limit));
    }
}

std::vector<double> normalized_increment(const WienerPath& path, std::size_t steps, std::size_t k) {
    auto chi = coarse_increment(path, steps, k);
    const double scale = 1.0 / std::sqrt(path.horizon() / static_cast<double>(steps));
    for (double& x : chi) x *= scale;
    return chi;
}

SpectralVector r_operator(const Model& model, const SchemeConfig& cfg, const SpectralVector& v,
                          std::span<const double> chi, std::size_t /*k*/) {
    if (v.size() != model.modes()) throw std::invalid_argument("r_operator: state length does not match the model");
    const double tau = cfg.tau();
    SpectralVector out = v;
    if (model.drift) {
        const auto f = nemytskii_f(model.op, v, *model.drift, *model.grid);
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += tau * f[j];
    }
    const auto noise = apply_noise(model.op, model.noise, v, chi, model.grid_ptr());
    const double root_tau = std::sqrt(tau);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += root_tau * noise[j];
    return out;
}

SpectralVector euler_step_exact(const Model& model, const SchemeConfig& cfg, const SpectralVector& v,
                                std::span<const double> chi, std::size_t k) {
    return apply_resolvent_power(model.op, r_operator(model, cfg, v, chi, k), cfg.tau(), 1);
}

namespace {

SpectralVector unit_direction(const SolverChoice& solver, const Model& model, SobolevIndex rho, std::size_t k) {
    const std::size_t modes = model.modes();
    SpectralVector d = SpectralVector::zeros(modes);
    if (solver.direction == SolverChoice::Direction::highest_mode) {
        d[modes - 1] = 1.0 / model.op.power_factor(modes - 1, rho.s);
        return d;
    }
    std::mt19937_64 engine(derive_seed(solver.seed, k));
    boost::random::normal_distribution<double> normal;
    double norm = 0.0;
    while (norm == 0.0) {
        for (double& x : d.coeffs) x = normal(engine);
        norm = fractional_norm(model.op, d, rho);
    }
    return (1.0 / norm) * d;
}

double draw_theta(const SolverChoice& solver, std::size_t k) {
    if (solver.theta == SolverChoice::Theta::saturated) return 1.0;
    std::mt19937_64 engine(derive_seed(mix64(solver.seed), k));
    boost::random::uniform_real_distribution<double> uniform(0.0, 1.0);
    return uniform(engine);
}

InexactStep truncate_tail(const Model& model, SobolevIndex rho, SpectralVector exact, StepRecord record) {
    const std::size_t modes = exact.size();
    // tail[m] = || sum_{j > m} ... ||_rho^2, m = 0..J
    std::vector<double> tail(modes + 1, 0.0);
    CompensatedSum acc;
    for (std::size_t m = modes; m-- > 0;) {
        const double term = model.op.power_factor(m, rho.s) * exact[m];
        acc.add(term * term);
        tail[m] = acc.value();
    }
    std::size_t keep = modes;
    for (std::size_t m = 0; m <= modes; ++m) {
        if (std::sqrt(tail[m]) <= record.epsilon) {
            keep = m;
            break;
        }
    }
    std::fill(exact.coeffs.begin() + static_cast<std::ptrdiff_t>(keep), exact.coeffs.end(), 0.0);
    record.achieved_error_bound = std::sqrt(tail[keep]);
    record.cost = keep;
    return {std::move(exact), record};
}

InexactStep jacobi_iterate(const SolverChoice& solver, const Model& model, const SchemeConfig& cfg,
                           const SpectralVector& rhs, StepRecord record) {
    if (!(record.epsilon > 0.0)) throw std::invalid_argument("inexact_solve: the iterative solver needs eps > 0");
    const auto lambda = model.op.eigenvalues();
    const double tau = cfg.tau();
    const std::size_t modes = rhs.size();
    SpectralVector x = SpectralVector::zeros(modes);
    SpectralVector error = SpectralVector::zeros(modes);
    for (unsigned it = 0;; ++it) {
        // x_exact - x = (I - tau A)^{-1} (r - (I - tau A) x), exact in the eigenbasis
        for (std::size_t j = 0; j < modes; ++j) {
            const double diag = 1.0 - tau * lambda[j];
            error[j] = (rhs[j] - diag * x[j]) / diag;
        }
        const double certificate = fractional_norm(model.op, error, cfg.norm_index());
        if (certificate <= record.epsilon) {
            record.achieved_error_bound = certificate;
            record.cost = it;
            return {std::move(x), record};
        }
        if (it == solver.max_iter) {
            throw solver_failure(fmt::format("iterative solver: step {} missed eps = {} after {} iterations (error {})",
                                             record.k, record.epsilon, it, certificate));
        }
        for (std::size_t j = 0; j < modes; ++j) {
            const double diag = 1.0 - tau * lambda[j];
            const double mismatched = 1.0 - tau * lambda[j] * (1.0 + solver.splitting_mismatch);
            x[j] += (rhs[j] - diag * x[j]) / mismatched;
        }
    }
}

}  // namespace

InexactStep inexact_solve(const SolverChoice& solver, const Model& model, const SchemeConfig& cfg,
                          const SpectralVector& v, std::span<const double> chi, std::size_t k, double epsilon) {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw std::invalid_argument(fmt::format("inexact_solve: eps = {} must be nonnegative", epsilon));
    }
    const SobolevIndex rho = cfg.norm_index();
    StepRecord record{k, epsilon, 0.0, model.modes()};
    const auto rhs = r_operator(model, cfg, v, chi, k);
    if (solver.kind == SolverChoice::Kind::iterative) return jacobi_iterate(solver, model, cfg, rhs, record);

    auto exact = apply_resolvent_power(model.op, rhs, cfg.tau(), 1);
    switch (solver.kind) {
        case SolverChoice::Kind::exact: return {std::move(exact), record};
        case SolverChoice::Kind::perturbation: {
            if (epsilon == 0.0) return {std::move(exact), record};
            const double theta = draw_theta(solver, k);
            const auto d = unit_direction(solver, model, rho, k);
            for (std::size_t j = 0; j < exact.size(); ++j) exact[j] += epsilon * theta * d[j];
            record.achieved_error_bound = epsilon * theta;
            return {std::move(exact), record};
        }
        case SolverChoice::Kind::truncation: return truncate_tail(model, rho, std::move(exact), record);
        case SolverChoice::Kind::iterative: break;
    }
    throw std::logic_error("inexact_solve: unhandled solver kind");
}

std::vector<double> tolerance_schedule(const SchemeConfig& cfg) {
    const auto& rule = cfg.tolerance;
    std::vector<double> eps;
    switch (rule.kind) {
        case ToleranceRule::Kind::theorem41: {
            if (!(cfg.delta > 0.0) || !(cfg.delta < max_rate(cfg.sigma, cfg.beta, cfg.alpha))) {
                throw std::invalid_argument("tolerance_schedule: theorem41 needs a validated delta");
            }
            eps.assign(cfg.K, rule.value * std::pow(cfg.tau(), 1.0 + cfg.delta));
            break;
        }
        case ToleranceRule::Kind::constant: eps.assign(cfg.K, rule.value); break;
        case ToleranceRule::Kind::custom:
            if (rule.schedule.size() != cfg.K) {
                throw std::invalid_argument(
                    fmt::format("tolerance_schedule: custom schedule has {} entries for K = {}", rule.schedule.size(), cfg.K));
            }
            eps = rule.schedule;
            break;
    }
    for (double e : eps) {
        if (!(e >= 0.0) || !std::isfinite(e)) throw std::invalid_argument(fmt::format("tolerance_schedule: eps = {} is negative", e));
    }
    return eps;
}

Trajectory run_exact(const Model& model, const SchemeConfig& cfg, const WienerPath& path, const SpectralVector& u0) {
    Trajectory out;
    out.reserve(cfg.K + 1);
    out.push_back(u0);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const auto chi = normalized_increment(path, cfg.K, k);
        out.push_back(euler_step_exact(model, cfg, out.back(), chi, k));
    }
    return out;
}

SpectralVector run_exact_final(const Model& model, const SchemeConfig& cfg, const WienerPath& path,
                               const SpectralVector& u0) {
    SpectralVector u = u0;
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const auto chi = normalized_increment(path, cfg.K, k);
        u = euler_step_exact(model, cfg, u, chi, k);
    }
    return u;
}

InexactRun run_inexact(const Model& model, const SchemeConfig& cfg, const WienerPath& path, const SpectralVector& u0) {
    const auto eps = tolerance_schedule(cfg);
    return run_inexact(model, cfg, path, u0, eps);
}

InexactRun run_inexact(const Model& model, const SchemeConfig& cfg, const WienerPath& path, const SpectralVector& u0,
                       std::span<const double> epsilons) {
    if (epsilons.size() != cfg.K) {
        throw std::invalid_argument(fmt::format("run_inexact: {} tolerances for K = {}", epsilons.size(), cfg.K));
    }
    SolverChoice solver = cfg.solver;
    solver.seed = derive_seed(cfg.solver.seed, path.seed());
    InexactRun run;
    run.trajectory.reserve(cfg.K + 1);
    run.trajectory.push_back(u0);
    run.records.reserve(cfg.K);
    for (std::size_t k = 0; k < cfg.K; ++k) {
        const auto chi = normalized_increment(path, cfg.K, k);
        try {
            auto step = inexact_solve(solver, model, cfg, run.trajectory.back(), chi, k, epsilons[k]);
            run.trajectory.push_back(std::move(step.value));
            run.records.push_back(step.record);
        } catch (const solver_failure& e) {
            run.failure = e.what();
            break;
        }
    }
    return run;
}

}  // namespace rothe
