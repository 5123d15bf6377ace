#include "rothe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>

#include "rothe/parallel.hpp"

namespace rothe {

// ---------------------------------------------------------------------------
// Oracles

double ou_exact_mse(double lambda, double c, double u0, double T, std::size_t K) {
    if (!(lambda < 0.0)) throw std::invalid_argument("ou_exact_mse: lambda must be negative");
    if (!(T > 0.0)) throw std::invalid_argument("ou_exact_mse: T must be positive");
    if (K == 0) throw std::invalid_argument("ou_exact_mse: K must be >= 1");
    const double tau = T / static_cast<double>(K);
    const double resolvent = 1.0 / (1.0 - tau * lambda);

    const double deterministic = std::exp(lambda * T) - std::pow(resolvent, static_cast<double>(K));
    CompensatedSum acc;
    for (std::size_t k = 0; k < K; ++k) {
        const double a = std::pow(resolvent, static_cast<double>(K - k));
        const double lag1 = T - tau * static_cast<double>(k + 1);  // T - t_{k+1}
        const double lag0 = T - tau * static_cast<double>(k);      // T - t_k
        // int_{t_k}^{t_{k+1}} e^{2 lambda (T - s)} ds and int e^{lambda (T - s)} ds
        const double square = (std::exp(2.0 * lambda * lag1) - std::exp(2.0 * lambda * lag0)) / (-2.0 * lambda);
        const double linear = (std::exp(lambda * lag1) - std::exp(lambda * lag0)) / (-lambda);
        acc.add(square);
        acc.add(-2.0 * a * linear);
        acc.add(a * a * tau);
    }
    return deterministic * deterministic * u0 * u0 + c * c * acc.value();
}

double linear_additive_exact_mse(const Model& model, double rho, double T, std::size_t K, const SpectralVector& u0) {
    if (!model.is_linear_additive()) throw std::invalid_argument("linear_additive_exact_mse: model has a drift or multiplicative noise");
    if (u0.size() != model.modes()) throw std::invalid_argument("linear_additive_exact_mse: u0 length mismatch");
    CompensatedSum acc;
    for (std::size_t j = 0; j < model.modes(); ++j) {
        const double weight = model.op.power_factor(j, rho);
        acc.add(weight * weight * ou_exact_mse(model.op.eigenvalue(j), model.noise.cm_coeffs[j], u0[j], T, K));
    }
    return acc.value();
}

SpectralVector ou_exact_solution(const Model& model, const WienerPath& path, const SpectralVector& u0) {
    if (!model.is_linear_additive()) throw std::invalid_argument("ou_exact_solution: model has a drift or multiplicative noise");
    if (path.modes() != model.modes() || u0.size() != model.modes()) {
        throw std::invalid_argument("ou_exact_solution: path / u0 size mismatch");
    }
    const double h = path.fine_step();
    const double T = path.horizon();
    std::mt19937_64 engine(mix64(path.seed() ^ 0x6f752d6f7261636cULL));
    boost::random::normal_distribution<double> normal;

    SpectralVector out = SpectralVector::zeros(model.modes());
    for (std::size_t j = 0; j < model.modes(); ++j) {
        const double lambda = model.op.eigenvalue(j);
        const double decay = std::exp(lambda * h);
        // I = int_{t_i}^{t_{i+1}} e^{lambda (t_{i+1} - s)} dW(s) jointly Gaussian with dW
        const double var_i = std::expm1(2.0 * lambda * h) / (2.0 * lambda);
        const double cov = std::expm1(lambda * h) / lambda;
        const double slope = cov / h;
        const double residual_sd = std::sqrt(std::max(0.0, var_i - cov * cov / h));
        double convolution = 0.0;
        for (double dw : path.mode_increments(j)) {
            const double stochastic = slope * dw + residual_sd * normal(engine);
            convolution = convolution * decay + stochastic;
        }
        out[j] = std::exp(lambda * T) * u0[j] + model.noise.cm_coeffs[j] * convolution;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rates and tables

RateFit fit_rate(std::span<const double> taus, std::span<const double> errors, std::span<const double> stderrs) {
    if (taus.size() != errors.size() || taus.size() < 2) throw std::invalid_argument("fit_rate: need >= 2 matching points");
    if (!stderrs.empty() && stderrs.size() != taus.size()) throw std::invalid_argument("fit_rate: stderr length mismatch");
    const std::size_t n = taus.size();
    RateFit fit;
    fit.points = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(taus[i] > 0.0) || !(errors[i] > 0.0)) {
            fit.rate = std::numeric_limits<double>::quiet_NaN();
            return fit;
        }
    }
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += std::log(taus[i]);
        mean_y += std::log(errors[i]);
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(taus[i]) - mean_x;
        sxx += dx * dx;
        sxy += dx * (std::log(errors[i]) - mean_y);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_rate: all tau values coincide");
    fit.rate = sxy / sxx;
    if (!stderrs.empty()) {
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = (std::log(taus[i]) - mean_x) / sxx;
            const double rel = stderrs[i] / errors[i];
            var += w * w * rel * rel;
        }
        fit.halfwidth = 1.96 * std::sqrt(var);
    }
    return fit;
}

void ContractAudit::merge(const ContractAudit& other) {
    records += other.records;
    violations += other.violations;
    bound_violations += other.bound_violations;
    max_excess = std::max(max_excess, other.max_excess);
}

const ErrorRow& ErrorTable::row(std::size_t K) const {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const ErrorRow& r) { return r.K == K; });
    if (it == rows.end()) throw std::out_of_range(fmt::format("ErrorTable: no row for K = {}", K));
    return *it;
}

std::string ReferenceChoice::describe() const {
    return kind == Kind::ou_oracle ? std::string("ou_oracle") : fmt::format("fine_euler({})", fine_steps);
}

namespace {

struct MomentSummary {
    double rms = 0.0;
    std::optional<double> stderr_rms;
    std::size_t count = 0;
};

// RMS of sqrt(mean(x)) over squared errors x with delta-method standard error.
MomentSummary summarize_squares(const std::vector<double>& squares) {
    MomentSummary out;
    out.count = squares.size();
    if (squares.empty()) return out;
    CompensatedSum sum;
    for (double x : squares) sum.add(x);
    const double n = static_cast<double>(squares.size());
    const double mean = sum.value() / n;
    out.rms = std::sqrt(mean);
    if (squares.size() >= 2) {
        CompensatedSum dev;
        for (double x : squares) dev.add((x - mean) * (x - mean));
        const double se_mean = std::sqrt(dev.value() / (n - 1.0) / n);
        out.stderr_rms = out.rms > 0.0 ? se_mean / (2.0 * out.rms) : 0.0;
    }
    return out;
}

std::size_t lcm_of(std::span<const std::size_t> values) {
    std::size_t out = 1;
    for (std::size_t v : values) out = std::lcm(out, v);
    return out;
}

ContractAudit audit_run(const Model& model, const SchemeConfig& cfg, const WienerPath& path, const InexactRun& run) {
    ContractAudit audit;
    for (const auto& record : run.records) {
        const auto chi = normalized_increment(path, cfg.K, record.k);
        const auto exact = euler_step_exact(model, cfg, run.trajectory[record.k], chi, record.k);
        const double actual = fractional_norm(model.op, run.trajectory[record.k + 1] - exact, cfg.norm_index());
        ++audit.records;
        if (actual > record.epsilon + 1e-12) ++audit.violations;
        if (record.achieved_error_bound > record.epsilon) ++audit.bound_violations;
        audit.max_excess = std::max(audit.max_excess, actual - record.epsilon);
    }
    return audit;
}

std::vector<std::size_t> sorted_steps(std::span<const std::size_t> k_list) {
    if (k_list.empty()) throw std::invalid_argument("K list is empty");
    std::vector<std::size_t> ks(k_list.begin(), k_list.end());
    std::sort(ks.begin(), ks.end());
    if (ks.front() == 0) throw std::invalid_argument("K list contains 0");
    if (std::adjacent_find(ks.begin(), ks.end()) != ks.end()) throw std::invalid_argument("K list has duplicates");
    return ks;
}

}  // namespace

std::vector<ErrorTable> estimate_strong_errors(const Model& model, const SchemeConfig& base,
                                               std::span<const std::size_t> k_list, const ReferenceChoice& reference,
                                               std::span<const Pipeline> pipelines, const SpectralVector& u0,
                                               const StudyOptions& options) {
    base.validate();
    if (pipelines.empty()) throw std::invalid_argument("estimate_strong_errors: no pipelines");
    if (u0.size() != model.modes()) throw std::invalid_argument("estimate_strong_errors: u0 length mismatch");
    const auto ks = sorted_steps(k_list);

    std::size_t fine_steps = 0;
    if (reference.kind == ReferenceChoice::Kind::ou_oracle) {
        if (!model.is_linear_additive()) throw std::invalid_argument("ou_oracle reference needs a linear additive model");
        fine_steps = lcm_of(ks);
    } else {
        fine_steps = reference.fine_steps;
        if (fine_steps <= ks.back()) {
            throw std::invalid_argument(fmt::format("reference K_ref = {} is not finer than K = {}", fine_steps, ks.back()));
        }
        for (std::size_t K : ks) {
            if (fine_steps % K != 0) throw std::invalid_argument(fmt::format("K = {} does not divide K_ref = {}", K, fine_steps));
        }
    }

    // Every schedule is validated before any sample runs.
    for (const auto& p : pipelines) {
        for (std::size_t K : ks) {
            SchemeConfig cfg = base.with_steps(K);
            cfg.tolerance = p.tolerance;
            if (p.solver.kind != SolverChoice::Kind::exact) (void)tolerance_schedule(cfg);
        }
    }

    const std::size_t samples = base.samples;
    const std::size_t slots = pipelines.size() * ks.size();
    struct SampleResult {
        std::vector<double> squares;
        std::vector<char> failed;
        std::vector<ContractAudit> audits;
    };
    std::vector<SampleResult> results(samples);

    parallel_for(samples, options.threads, [&](std::size_t i) {
        SampleResult& out = results[i];
        out.squares.assign(slots, 0.0);
        out.failed.assign(slots, 0);
        out.audits.assign(pipelines.size(), ContractAudit{});
        const auto path = sample_path(derive_seed(base.seed, i), fine_steps, model.modes(), base.T);
        const SpectralVector u_ref = reference.kind == ReferenceChoice::Kind::ou_oracle
                                         ? ou_exact_solution(model, path, u0)
                                         : run_exact_final(model, base.with_steps(fine_steps), path, u0);
        for (std::size_t p = 0; p < pipelines.size(); ++p) {
            for (std::size_t q = 0; q < ks.size(); ++q) {
                SchemeConfig cfg = base.with_steps(ks[q]);
                cfg.solver = pipelines[p].solver;
                cfg.tolerance = pipelines[p].tolerance;
                const std::size_t slot = p * ks.size() + q;
                SpectralVector u_k;
                if (cfg.solver.kind == SolverChoice::Kind::exact) {
                    u_k = run_exact_final(model, cfg, path, u0);
                } else {
                    auto run = run_inexact(model, cfg, path, u0);
                    if (options.audit_contract) out.audits[p].merge(audit_run(model, cfg, path, run));
                    if (run.failed()) {
                        out.failed[slot] = 1;
                        continue;
                    }
                    u_k = std::move(run.trajectory.back());
                }
                const double err = fractional_norm(model.op, u_ref - u_k, base.norm_index());
                out.squares[slot] = err * err;
            }
        }
    });

    std::vector<ErrorTable> tables;
    tables.reserve(pipelines.size());
    for (std::size_t p = 0; p < pipelines.size(); ++p) {
        ErrorTable table;
        table.norm_index = base.rho;
        table.solver = pipelines[p].solver.describe();
        table.epsilon_rule = pipelines[p].solver.kind == SolverChoice::Kind::exact ? "none" : pipelines[p].tolerance.describe();
        table.reference = reference.describe();
        for (const auto& r : results) table.audit.merge(r.audits[p]);

        // rows by tau descending == K ascending
        for (std::size_t q = 0; q < ks.size(); ++q) {
            const std::size_t slot = p * ks.size() + q;
            std::vector<double> squares;
            squares.reserve(samples);
            std::size_t failures = 0;
            for (const auto& r : results) {
                if (r.failed[slot]) {
                    ++failures;
                } else {
                    squares.push_back(r.squares[slot]);
                }
            }
            const auto summary = summarize_squares(squares);
            ErrorRow row;
            row.K = ks[q];
            row.tau = base.T / static_cast<double>(ks[q]);
            row.rms_error = summary.rms;
            row.mc_stderr = summary.stderr_rms;
            row.samples = summary.count;
            row.failures = failures;
            row.in_window = q + std::min(options.window, ks.size()) >= ks.size();
            if (model.is_linear_additive()) row.oracle_rms = std::sqrt(linear_additive_exact_mse(model, base.rho, base.T, ks[q], u0));
            table.rows.push_back(row);
        }

        auto fit_rows = [&](bool window_only) {
            std::vector<double> taus, errs, ses;
            bool all_se = true;
            for (const auto& row : table.rows) {
                if (window_only && !row.in_window) continue;
                taus.push_back(row.tau);
                errs.push_back(row.rms_error);
                ses.push_back(row.mc_stderr.value_or(0.0));
                all_se = all_se && row.mc_stderr.has_value();
            }
            if (taus.size() < 2) return RateFit{std::numeric_limits<double>::quiet_NaN(), std::nullopt, taus.size()};
            return fit_rate(taus, errs, all_se ? std::span<const double>(ses) : std::span<const double>{});
        };
        table.fitted_rate = fit_rows(true);
        table.full_fit = fit_rows(false);
        tables.push_back(std::move(table));
    }
    return tables;
}

ErrorTable estimate_strong_error(const Model& model, const SchemeConfig& base, std::span<const std::size_t> k_list,
                                 const ReferenceChoice& reference, const SpectralVector& u0, const StudyOptions& options) {
    const Pipeline pipeline{base.solver, base.tolerance};
    auto tables = estimate_strong_errors(model, base, k_list, reference, std::span<const Pipeline>(&pipeline, 1), u0, options);
    return std::move(tables.front());
}

// ---------------------------------------------------------------------------
// Lipschitz probes

void LipschitzTable::raise(std::size_t j, std::size_t k, double value) {
    double& slot = data_.at(j * (steps_ + 1) + k);
    slot = std::max(slot, value);
}

void LipschitzTable::merge(const LipschitzTable& other) {
    if (other.steps_ != steps_) throw std::invalid_argument("LipschitzTable::merge: step count mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] = std::max(data_[i], other.data_[i]);
}

double LipschitzTable::max() const {
    double best = 0.0;
    for (std::size_t j = 1; j <= steps_; ++j) {
        for (std::size_t k = j; k <= steps_; ++k) best = std::max(best, at(j, k));
    }
    return best;
}

double LipschitzTable::budget(std::size_t k, std::span<const double> epsilons) const {
    if (k > steps_ || epsilons.size() < k) throw std::invalid_argument("LipschitzTable::budget: index out of range");
    CompensatedSum acc;
    for (std::size_t j = 0; j < k; ++j) acc.add(at(j + 1, k) * epsilons[j]);
    return acc.value();
}

namespace {

std::vector<std::vector<double>> all_increments(const WienerPath& path, std::size_t steps) {
    std::vector<std::vector<double>> chi(steps);
    for (std::size_t k = 0; k < steps; ++k) chi[k] = normalized_increment(path, steps, k);
    return chi;
}

SpectralVector random_unit(const Model& model, SobolevIndex rho, std::mt19937_64& engine) {
    boost::random::normal_distribution<double> normal;
    SpectralVector d = SpectralVector::zeros(model.modes());
    double norm = 0.0;
    while (norm == 0.0) {
        for (double& x : d.coeffs) x = normal(engine);
        norm = fractional_norm(model.op, d, rho);
    }
    return (1.0 / norm) * d;
}

struct ProbePair {
    SpectralVector a;
    SpectralVector b;
    double denominator = 0.0;
};

ProbePair make_pair(const Model& model, SobolevIndex rho, SpectralVector v, const SpectralVector& d, double eta) {
    SpectralVector w = v;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += eta * d[i];
    const double denominator = fractional_norm(model.op, w - v, rho);
    if (!(denominator > 0.0)) throw std::invalid_argument("lipschitz probe: perturbation vanishes");
    return {std::move(v), std::move(w), denominator};
}

// Pairs based at u_j: `probes` random offsets/directions plus the highest mode at u_j itself.
std::vector<ProbePair> probe_pairs(const Model& model, const SchemeConfig& cfg, const SpectralVector& state,
                                   std::size_t probes, std::uint64_t seed) {
    const SobolevIndex rho = cfg.norm_index();
    std::mt19937_64 engine(seed);
    std::vector<ProbePair> pairs;
    pairs.reserve(probes + 1);
    auto eta_for = [&](const SpectralVector& v) {
        const double n = fractional_norm(model.op, v, rho);
        return n > 0.0 ? 1e-4 * n : 1e-4;
    };
    for (std::size_t p = 0; p < probes; ++p) {
        SpectralVector v = state + random_unit(model, rho, engine);
        const auto d = random_unit(model, rho, engine);
        const double eta = eta_for(v);
        pairs.push_back(make_pair(model, rho, std::move(v), d, eta));
    }
    SpectralVector top = SpectralVector::zeros(model.modes());
    top[model.modes() - 1] = 1.0 / model.op.power_factor(model.modes() - 1, rho.s);
    pairs.push_back(make_pair(model, rho, state, top, eta_for(state)));
    return pairs;
}

// Sweeps pairs from index j to `last`; ratio(k) for k = j..K is reported through `record`.
template <typename Record>
void sweep_pairs(const Model& model, const SchemeConfig& cfg, const std::vector<std::vector<double>>& chi,
                 std::size_t j, std::size_t last, std::vector<ProbePair>& pairs, Record&& record) {
    const SobolevIndex rho = cfg.norm_index();
    for (const auto& pair : pairs) record(j, fractional_norm(model.op, pair.b - pair.a, rho) / pair.denominator);
    for (std::size_t k = j; k < last; ++k) {
        for (auto& pair : pairs) {
            pair.a = euler_step_exact(model, cfg, pair.a, chi[k], k);
            pair.b = euler_step_exact(model, cfg, pair.b, chi[k], k);
            record(k + 1, fractional_norm(model.op, pair.b - pair.a, rho) / pair.denominator);
        }
    }
}

void check_probe_indices(const SchemeConfig& cfg, std::size_t j, std::size_t k) {
    if (!(1 <= j && j <= k && k <= cfg.K)) {
        throw std::invalid_argument(fmt::format("lipschitz probe: need 1 <= j <= k <= K, got j = {}, k = {}, K = {}", j, k, cfg.K));
    }
}

}  // namespace

double probe_ratio(const Model& model, const SchemeConfig& cfg, const WienerPath& path, std::size_t j, std::size_t k,
                   const SpectralVector& v, const SpectralVector& d, double eta) {
    check_probe_indices(cfg, j, k);
    auto pair = make_pair(model, cfg.norm_index(), v, d, eta);
    for (std::size_t step = j; step < k; ++step) {
        const auto chi = normalized_increment(path, cfg.K, step);
        pair.a = euler_step_exact(model, cfg, pair.a, chi, step);
        pair.b = euler_step_exact(model, cfg, pair.b, chi, step);
    }
    return fractional_norm(model.op, pair.b - pair.a, cfg.norm_index()) / pair.denominator;
}

LipschitzProbe lipschitz_probe(const Model& model, const SchemeConfig& cfg, std::size_t j, std::size_t k,
                               const WienerPath& path, const SpectralVector& u0, std::size_t probes, std::uint64_t seed) {
    check_probe_indices(cfg, j, k);
    const auto chi = all_increments(path, cfg.K);
    const auto trajectory = run_exact(model, cfg, path, u0);
    auto pairs = probe_pairs(model, cfg, trajectory[j], probes, derive_seed(seed, j));
    LipschitzProbe out{j, k, 0.0, pairs.size(), seed};
    sweep_pairs(model, cfg, chi, j, k, pairs, [&](std::size_t at, double ratio) {
        if (at == k) out.estimate = std::max(out.estimate, ratio);
    });
    return out;
}

LipschitzTable lipschitz_probe_table(const Model& model, const SchemeConfig& cfg, const WienerPath& path,
                                     const SpectralVector& u0, std::size_t probes, std::uint64_t seed) {
    LipschitzTable table(cfg.K);
    const auto chi = all_increments(path, cfg.K);
    const auto trajectory = run_exact(model, cfg, path, u0);
    for (std::size_t j = 1; j <= cfg.K; ++j) {
        auto pairs = probe_pairs(model, cfg, trajectory[j], probes, derive_seed(seed, j));
        sweep_pairs(model, cfg, chi, j, cfg.K, pairs, [&](std::size_t k, double ratio) { table.raise(j, k, ratio); });
    }
    return table;
}

LipschitzTable lipschitz_probe_paths(const Model& model, const SchemeConfig& cfg, const SpectralVector& u0,
                                     std::size_t paths, std::size_t probes, std::size_t fine_steps,
                                     const StudyOptions& options) {
    if (paths == 0) throw std::invalid_argument("lipschitz_probe_paths: need at least one path");
    if (fine_steps == 0 || fine_steps % cfg.K != 0) throw std::invalid_argument("lipschitz_probe_paths: K must divide K_fine");
    const std::uint64_t master = mix64(cfg.seed ^ 0x70726f6265ULL);
    std::vector<LipschitzTable> tables(paths, LipschitzTable(cfg.K));
    parallel_for(paths, options.threads, [&](std::size_t p) {
        const std::uint64_t seed = derive_seed(master, p);
        const auto path = sample_path(seed, fine_steps, model.modes(), cfg.T);
        tables[p] = lipschitz_probe_table(model, cfg, path, u0, probes, mix64(seed));
    });
    LipschitzTable merged(cfg.K);
    for (const auto& t : tables) merged.merge(t);
    return merged;
}

// ---------------------------------------------------------------------------
// Propagation gap

bool GapTable::all_within_budget() const {
    return std::all_of(rows.begin(), rows.end(), [](const GapRow& r) { return r.within_budget; });
}

GapTable propagation_gap(const Model& model, const SchemeConfig& cfg, const SpectralVector& u0,
                         const PropagationOptions& options) {
    cfg.validate();
    if (u0.size() != model.modes()) throw std::invalid_argument("propagation_gap: u0 length mismatch");
    const auto eps = cfg.solver.kind == SolverChoice::Kind::exact ? std::vector<double>(cfg.K, 0.0) : tolerance_schedule(cfg);

    struct SampleResult {
        std::vector<double> squares;  // k = 1..K
        bool failed = false;
        ContractAudit audit;
    };
    std::vector<SampleResult> results(cfg.samples);
    parallel_for(cfg.samples, options.study.threads, [&](std::size_t i) {
        auto& out = results[i];
        const auto path = sample_path(derive_seed(cfg.seed, i), cfg.K, model.modes(), cfg.T);
        const auto exact = run_exact(model, cfg, path, u0);
        const auto run = run_inexact(model, cfg, path, u0, eps);
        if (options.study.audit_contract) out.audit = audit_run(model, cfg, path, run);
        if (run.failed()) {
            out.failed = true;
            return;
        }
        out.squares.resize(cfg.K);
        for (std::size_t k = 1; k <= cfg.K; ++k) {
            const double gap = fractional_norm(model.op, exact[k] - run.trajectory[k], cfg.norm_index());
            out.squares[k - 1] = gap * gap;
        }
    });

    GapTable table;
    table.solver = cfg.solver.describe();
    table.epsilon_rule = cfg.solver.kind == SolverChoice::Kind::exact ? "none" : cfg.tolerance.describe();
    table.norm_index = cfg.rho;
    table.lipschitz = lipschitz_probe_paths(model, cfg, u0, options.probe_paths, options.probes, cfg.K, options.study);
    for (const auto& r : results) {
        table.audit.merge(r.audit);
        if (r.failed) ++table.failures;
    }
    table.samples = cfg.samples - table.failures;
    for (std::size_t k = 1; k <= cfg.K; ++k) {
        std::vector<double> squares;
        squares.reserve(cfg.samples);
        for (const auto& r : results) {
            if (!r.failed) squares.push_back(r.squares[k - 1]);
        }
        const auto summary = summarize_squares(squares);
        GapRow row;
        row.k = k;
        row.t = cfg.tau() * static_cast<double>(k);
        row.epsilon = eps[k - 1];
        row.gap_rms = summary.rms;
        row.gap_stderr = summary.stderr_rms;
        row.budget = table.lipschitz.budget(k, eps);
        row.within_budget = row.gap_rms <= row.budget * 1.05;
        table.rows.push_back(row);
    }
    return table;
}

// ---------------------------------------------------------------------------

bool Theorem41Report::violation_flagged() const {
    return std::any_of(comparisons.begin(), comparisons.end(), [](const RateComparison& c) { return !c.rate_preserved; });
}

Theorem41Report verify_theorem41(const Model& model, const SchemeConfig& cfg, std::span<const std::size_t> k_list,
                                 const ReferenceChoice& reference, std::span<const Pipeline> inexact,
                                 const SpectralVector& u0, const Theorem41Options& options) {
    std::vector<Pipeline> pipelines;
    pipelines.push_back({SolverChoice::exact(), cfg.tolerance});
    pipelines.insert(pipelines.end(), inexact.begin(), inexact.end());
    auto tables = estimate_strong_errors(model, cfg, k_list, reference, pipelines, u0, options.study);

    Theorem41Report report;
    report.exact = std::move(tables.front());
    report.inexact.assign(std::make_move_iterator(tables.begin() + 1), std::make_move_iterator(tables.end()));

    const auto ks = sorted_steps(k_list);
    for (std::size_t K : ks) {
        report.lipschitz.push_back(
            lipschitz_probe_paths(model, cfg.with_steps(K), u0, options.probe_paths, options.probes, K, options.study));
    }

    for (std::size_t p = 0; p < inexact.size(); ++p) {
        const auto& table = report.inexact[p];
        RateComparison cmp;
        cmp.solver = table.solver;
        cmp.epsilon_rule = table.epsilon_rule;
        cmp.exact_rate = report.exact.fitted_rate.rate;
        cmp.inexact_rate = table.fitted_rate.rate;
        cmp.rate_preserved = cmp.inexact_rate >= cmp.exact_rate - options.rate_tolerance;
        cmp.audit = table.audit;
        cmp.budget_ok = true;
        for (std::size_t q = 0; q < ks.size(); ++q) {
            SchemeConfig k_cfg = cfg.with_steps(ks[q]);
            k_cfg.tolerance = inexact[p].tolerance;
            const auto eps = tolerance_schedule(k_cfg);
            BudgetCheck check;
            check.K = ks[q];
            check.exact_rms = report.exact.row(ks[q]).rms_error;
            check.inexact_rms = table.row(ks[q]).rms_error;
            check.budget = report.lipschitz[q].budget(ks[q], eps);
            check.ok = std::abs(check.inexact_rms - check.exact_rms) <= (1.0 + options.budget_slack) * check.budget;
            cmp.budget_ok = cmp.budget_ok && check.ok;
            cmp.budgets.push_back(check);
        }
        report.comparisons.push_back(std::move(cmp));
    }
    return report;
}

}  // namespace rothe
