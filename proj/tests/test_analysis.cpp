#include <doctest.h>

#include <cmath>
#include <vector>

#include "rothe/analysis.hpp"
#include "support.hpp"

using namespace rothe;
using doctest::Approx;

namespace {

Model ou_model(double lambda = -1.0, double c = 1.0) {
    NoiseSpec spec;
    spec.cm_coeffs = {c};
    return Model::make(SpectralOperator({lambda}), std::nullopt, spec);
}

Model heat(std::size_t J, std::optional<ScalarMap> g = std::nullopt) {
    auto op = make_dirichlet_laplacian_1d(J);
    auto noise = make_additive_noise(op, 0.0, 0.0, 0.6);
    return Model::make(std::move(op), std::move(g), std::move(noise));
}

SchemeConfig base(std::size_t samples, std::uint64_t seed, std::size_t J = 1) {
    SchemeConfig cfg;
    cfg.T = 1.0;
    cfg.K = 1;
    cfg.J = J;
    cfg.delta = 0.1;
    cfg.samples = samples;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("ou oracle examples") {
    const double closed = (1.0 - std::exp(-2.0)) / 2.0 - (1.0 - std::exp(-1.0)) + 0.25;
    CHECK(std::abs(ou_exact_mse(-1.0, 1.0, 0.0, 1.0, 1) - closed) <= 1e-14);
    CHECK(ou_exact_mse(-1.0, 1.0, 0.0, 1.0, 1) == Approx(0.050215).epsilon(1e-4));
    const double bias = std::exp(-1.0) - 0.5;
    CHECK(ou_exact_mse(-1.0, 0.0, 1.0, 1.0, 1) == Approx(bias * bias).epsilon(1e-14));
    CHECK(ou_exact_mse(-1.0, 0.0, 0.0, 1.0, 7) == 0.0);
}

TEST_CASE("ou oracle agrees with quadrature of the Ito isometry") {
    testing::Gen gen(61);
    for (int trial = 0; trial < 40; ++trial) {
        const double lambda = -std::pow(10.0, gen.uniform(-1.0, 1.5));
        const double c = gen.uniform(0.0, 2.0);
        const double u0 = gen.uniform(-2.0, 2.0);
        const double T = gen.uniform(0.2, 3.0);
        const std::size_t K = gen.index(1, 16);
        const double quad = testing::ou_mse_quadrature(lambda, c, u0, T, K);
        CHECK(ou_exact_mse(lambda, c, u0, T, K) == Approx(quad).epsilon(1e-9).scale(1e-12));
    }
}

TEST_CASE("linear additive oracle is the weighted modewise sum") {
    const auto model = heat(6);
    const auto u0 = SpectralVector({1.0, -0.5, 0.25, 0.0, 0.1, 0.0});
    for (double rho : {0.0, 0.25, 0.5}) {
        double expected = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
            const double w = std::pow(-model.op.eigenvalue(j), 2.0 * rho);
            expected += w * testing::ou_mse_quadrature(model.op.eigenvalue(j), model.noise.cm_coeffs[j], u0[j], 1.0, 8);
        }
        CHECK(linear_additive_exact_mse(model, rho, 1.0, 8, u0) == Approx(expected).epsilon(1e-8));
    }
}

TEST_CASE("ou oracle strong rate from exact values") {
    std::vector<double> taus;
    std::vector<double> errs;
    for (std::size_t K : {4u, 8u, 16u, 32u}) {
        taus.push_back(1.0 / K);
        errs.push_back(std::sqrt(ou_exact_mse(-1.0, 1.0, 0.0, 1.0, K)));
    }
    const auto fit = fit_rate(taus, errs);
    // A single smooth mode converges at first order.
    CHECK(fit.rate == Approx(1.0).epsilon(0.1));
    CHECK_FALSE(fit.halfwidth.has_value());
}

TEST_CASE("rate fit") {
    const std::vector<double> taus = {0.1, 0.05};
    const std::vector<double> errs = {0.1, 0.05};
    CHECK(fit_rate(taus, errs).rate == Approx(1.0).epsilon(1e-14));

    const std::vector<double> t3 = {0.4, 0.2, 0.1};
    const std::vector<double> e3 = {3.0 * std::pow(0.4, 0.5), 3.0 * std::pow(0.2, 0.5), 3.0 * std::pow(0.1, 0.5)};
    const std::vector<double> s3 = {0.01, 0.01, 0.01};
    const auto fit = fit_rate(t3, e3, s3);
    CHECK(fit.rate == Approx(0.5).epsilon(1e-13));
    REQUIRE(fit.halfwidth.has_value());
    CHECK(*fit.halfwidth > 0.0);

    const std::vector<double> with_zero = {0.1, 0.0};
    CHECK(std::isnan(fit_rate(taus, with_zero).rate));
    CHECK_THROWS_AS(fit_rate(std::vector<double>{0.1}, std::vector<double>{0.1}), std::invalid_argument);
}

TEST_CASE("single sample has no standard error") {
    const auto model = ou_model();
    const std::vector<std::size_t> ks = {2, 4};
    const auto table = estimate_strong_error(model, base(1, 3), ks, ReferenceChoice::ou_oracle(), SpectralVector({0.0}));
    for (const auto& row : table.rows) {
        CHECK_FALSE(row.mc_stderr.has_value());
        CHECK(row.samples == 1);
    }
}

TEST_CASE("reference must be strictly finer") {
    const auto model = heat(4);
    const std::vector<std::size_t> ks = {4, 8};
    const auto u0 = SpectralVector::zeros(4);
    CHECK_THROWS_AS(estimate_strong_error(model, base(2, 1, 4), ks, ReferenceChoice::fine_euler(8), u0), std::invalid_argument);
    CHECK_THROWS_AS(estimate_strong_error(model, base(2, 1, 4), ks, ReferenceChoice::fine_euler(20), u0), std::invalid_argument);
    CHECK_NOTHROW(estimate_strong_error(model, base(2, 1, 4), ks, ReferenceChoice::fine_euler(16), u0));
    const auto nonlinear = heat(4, ScalarMap::sine());
    CHECK_THROWS_AS(estimate_strong_error(nonlinear, base(2, 1, 4), ks, ReferenceChoice::ou_oracle(), u0), std::invalid_argument);
}

TEST_CASE("exact ou sampler has the ou law") {
    const auto model = ou_model(-2.0, 1.5);
    const std::size_t M = 20000;
    double sum = 0.0;
    double sq = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        const auto path = sample_path(derive_seed(71, i), 4, 1, 1.0);
        const double u = ou_exact_solution(model, path, SpectralVector({1.0}))[0];
        sum += u;
        sq += u * u;
        quad += u * u * u * u;
    }
    const double mean = sum / M;
    const double var = sq / M - mean * mean;
    const double expected_mean = std::exp(-2.0);
    const double expected_var = 2.25 * (1.0 - std::exp(-4.0)) / 4.0;
    CHECK(std::abs(mean - expected_mean) <= 4.0 * std::sqrt(expected_var / M));
    const double var_se = std::sqrt((quad / M - (sq / M) * (sq / M)) / M);
    CHECK(std::abs(var - expected_var) <= 4.0 * var_se + 4.0 * expected_var / M);
}

TEST_CASE("monte carlo errors agree with the oracle") {
    const auto model = ou_model();
    const std::vector<std::size_t> ks = {1, 2, 4};
    const auto table = estimate_strong_error(model, base(4000, 5), ks, ReferenceChoice::ou_oracle(), SpectralVector({0.0}));
    for (const auto& row : table.rows) {
        REQUIRE(row.oracle_rms.has_value());
        REQUIRE(row.mc_stderr.has_value());
        CHECK(std::abs(row.rms_error - *row.oracle_rms) <= 4.0 * *row.mc_stderr);
        CHECK(row.failures == 0);
    }
    CHECK(table.rows.front().K == 1);
    CHECK(table.rows.back().K == 4);
    CHECK(table.reference == "ou_oracle");
}

TEST_CASE("estimates do not depend on the thread count") {
    const auto model = heat(8, ScalarMap::sine());
    const std::vector<std::size_t> ks = {2, 4};
    auto cfg = base(12, 9, 8);
    cfg.solver = SolverChoice::perturbation(SolverChoice::Direction::random_unit);
    StudyOptions one;
    one.threads = 1;
    StudyOptions three;
    three.threads = 3;
    const auto a = estimate_strong_error(model, cfg, ks, ReferenceChoice::fine_euler(16), SpectralVector::unit(8, 1), one);
    const auto b = estimate_strong_error(model, cfg, ks, ReferenceChoice::fine_euler(16), SpectralVector::unit(8, 1), three);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].rms_error == b.rows[i].rms_error);
        CHECK(a.rows[i].mc_stderr == b.rows[i].mc_stderr);
    }
}

TEST_CASE("lipschitz probes in the linear additive case") {
    const std::size_t J = 16;
    const auto model = heat(J);
    auto cfg = base(1, 0, J);
    cfg.K = 8;
    const auto path = sample_path(13, 8, J, 1.0);
    const auto u0 = SpectralVector::unit(J, 1);
    const double tau = cfg.tau();
    for (std::size_t j = 1; j <= 8; ++j) {
        for (std::size_t k = j; k <= 8; ++k) {
            const auto probe = lipschitz_probe(model, cfg, j, k, path, u0, 32, 5);
            const double closed = std::pow(1.0 - tau * model.op.eigenvalue(0), -static_cast<double>(k - j));
            CHECK(probe.estimate <= closed + 1e-10);
            CHECK(probe.estimate <= 1.0 + 1e-10);
            if (j == k) CHECK(probe.estimate == Approx(1.0).epsilon(1e-10));
        }
    }
    // Along e_J the ratio is the closed-form contraction of that mode.
    const auto d = SpectralVector::unit(J, J);
    const double ratio = probe_ratio(model, cfg, path, 2, 6, u0, d, 1e-3);
    CHECK(ratio == Approx(std::pow(1.0 - tau * model.op.eigenvalue(J - 1), -4.0)).epsilon(1e-6));
    CHECK_THROWS_AS(probe_ratio(model, cfg, path, 2, 6, u0, SpectralVector::zeros(J), 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(lipschitz_probe(model, cfg, 5, 4, path, u0, 4, 1), std::invalid_argument);

    const auto table = lipschitz_probe_table(model, cfg, path, u0, 8, 3);
    CHECK(table.max() <= 1.0 + 1e-10);
    CHECK(table.at(3, 3) == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("lipschitz probes are finite and uniform for a lipschitz drift") {
    const std::size_t J = 16;
    const auto model = heat(J, ScalarMap::sine());
    auto cfg = base(1, 0, J);
    cfg.K = 8;
    const auto path = sample_path(14, 8, J, 1.0);
    const auto table = lipschitz_probe_table(model, cfg, path, SpectralVector::unit(J, 1), 8, 4);
    CHECK(std::isfinite(table.max()));
    CHECK(table.max() >= 1.0 - 1e-10);
    CHECK(table.max() <= std::exp(1.0) + 1e-6);  // Gronwall with Lip(f) = 1 and contracting resolvents
}

TEST_CASE("lipschitz budget") {
    LipschitzTable table(3);
    table.raise(1, 3, 2.0);
    table.raise(2, 3, 1.5);
    table.raise(3, 3, 1.0);
    table.raise(2, 3, 1.2);
    const std::vector<double> eps = {0.1, 0.2, 0.3};
    CHECK(table.budget(3, eps) == Approx(2.0 * 0.1 + 1.5 * 0.2 + 1.0 * 0.3));
    CHECK(table.max() == 2.0);
    LipschitzTable other(3);
    other.raise(1, 3, 4.0);
    table.merge(other);
    CHECK(table.at(1, 3) == 4.0);
}

TEST_CASE("propagation gap") {
    const std::size_t J = 8;
    const auto model = heat(J);
    auto cfg = base(50, 21, J);
    cfg.K = 8;
    const auto u0 = SpectralVector::unit(J, 1);

    cfg.solver = SolverChoice::exact();
    const auto none = propagation_gap(model, cfg, u0);
    REQUIRE(none.rows.size() == 8);
    for (const auto& row : none.rows) CHECK(row.gap_rms == 0.0);

    auto one = cfg.with_steps(1);
    one.solver = SolverChoice::perturbation();
    one.tolerance = ToleranceRule::custom({0.01});
    const auto single = propagation_gap(model, one, u0);
    REQUIRE(single.rows.size() == 1);
    CHECK(single.rows[0].gap_rms == Approx(0.01).epsilon(1e-12));
    CHECK(single.rows[0].budget == Approx(0.01).epsilon(1e-10));
    CHECK(single.rows[0].within_budget);

    for (auto solver : {SolverChoice::perturbation(), SolverChoice::perturbation(SolverChoice::Direction::random_unit),
                        SolverChoice::truncation(), SolverChoice::iterative()}) {
        cfg.solver = solver;
        cfg.tolerance = ToleranceRule::theorem41();
        const auto table = propagation_gap(model, cfg, u0);
        CHECK(table.all_within_budget());
        CHECK(table.audit.violations == 0);
        CHECK(table.failures == 0);
    }
}

TEST_CASE("theorem check baseline and negative control") {
    const std::size_t J = 16;
    const auto model = heat(J);
    auto cfg = base(40, 33, J);
    const std::vector<std::size_t> ks = {4, 8, 16, 32};
    const auto u0 = SpectralVector::zeros(J);

    const Pipeline baseline[] = {{SolverChoice::exact(), ToleranceRule::theorem41()}};
    const auto same = verify_theorem41(model, cfg, ks, ReferenceChoice::ou_oracle(), baseline, u0);
    REQUIRE(same.comparisons.size() == 1);
    CHECK(same.comparisons[0].inexact_rate == same.comparisons[0].exact_rate);
    CHECK(same.comparisons[0].rate_preserved);
    CHECK_FALSE(same.violation_flagged());

    const Pipeline bad[] = {{SolverChoice::perturbation(), ToleranceRule::constant_tolerance(0.5)}};
    const auto flagged = verify_theorem41(model, cfg, ks, ReferenceChoice::ou_oracle(), bad, u0);
    CHECK_FALSE(flagged.comparisons[0].rate_preserved);
    CHECK(flagged.violation_flagged());
}

TEST_CASE("single-mode OU at delta = 0.4 keeps the inexact rate") {
    const auto model = ou_model();
    auto cfg = base(500, 5);
    cfg.alpha = 0.0;
    cfg.delta = 0.4;
    const std::vector<std::size_t> ks = {8, 16, 32, 64};
    const Pipeline unbiased[] = {{SolverChoice::truncation(), ToleranceRule::theorem41()},
                                 {SolverChoice::perturbation(SolverChoice::Direction::random_unit), ToleranceRule::theorem41()}};
    const auto report = verify_theorem41(model, cfg, ks, ReferenceChoice::ou_oracle(), unbiased, SpectralVector({1.0}));
    for (const auto& c : report.comparisons) {
        CHECK(std::abs(c.inexact_rate - c.exact_rate) <= 0.1);
        CHECK(c.budget_ok);
    }

    // A saturated fixed-sign error accumulates to order tau^delta.
    const Pipeline saturated[] = {{SolverChoice::perturbation(), ToleranceRule::theorem41()},
                                  {SolverChoice::iterative(), ToleranceRule::theorem41()}};
    const auto biased = verify_theorem41(model, cfg, ks, ReferenceChoice::ou_oracle(), saturated, SpectralVector({1.0}));
    for (const auto& c : biased.comparisons) {
        CHECK(c.inexact_rate >= cfg.delta - 0.1);
        CHECK(c.budget_ok);
    }
}
