#include "catch_amalgamated.hpp"

#include <jrlat/fermions.hpp>
#include <jrlat/fit.hpp>
#include <jrlat/rng.hpp>

using namespace jrlat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Vec tanh_chain(int N, double amp, double xi, double n0)
{
    const int c = center_index(std::size_t(N));
    Vec phi(N);
    for (int n = 0; n < N; ++n) phi[n] = amp * std::tanh((n - c - n0) / xi);
    return phi;
}

}  // namespace

TEST_CASE("exact tanh profile is recovered")
{
    for (double xi : {1.0, 2.5, 6.0}) {
        const FitResult f = fit_kink(tanh_chain(100, 3.0, xi, 0.5));
        CHECK(f.converged);
        CHECK_THAT(f.params[0], WithinAbs(3.0, 1e-8));
        CHECK_THAT(f.params[1], WithinAbs(xi, 1e-8));
        CHECK_THAT(f.params[2], WithinAbs(0.5, 1e-8));
        CHECK(f.first == 3);
        CHECK(f.last == 96);
    }
    // antikink: width stays positive
    const FitResult a = fit_kink(tanh_chain(80, -2.0, 3.0, -1.0));
    CHECK_THAT(a.params[1], WithinAbs(3.0, 1e-8));
    CHECK_THAT(a.params[0], WithinAbs(-2.0, 1e-8));
}

TEST_CASE("noisy profile: unbiased width and a calibrated interval")
{
    // single draws scatter by about 4% at xi = 4, so the 5% bound is applied to the mean
    const double Phi0 = 3.0, xi = 4.0;
    int covered = 0, within = 0;
    double mean = 0.0;
    const int trials = 100;
    for (int k = 0; k < trials; ++k) {
        Vec phi = tanh_chain(100, Phi0, xi, 0.5);
        CounterRng rng(21, k);
        for (auto& p : phi) p += 0.05 * Phi0 * rng.normal();
        const FitResult f = fit_kink(phi);
        REQUIRE(std::isfinite(f.ci95[1]));
        mean += f.params[1] / trials;
        within += std::abs(f.params[1] / xi - 1) < 0.05;
        covered += std::abs(f.params[1] - xi) < f.ci95[1];
    }
    CHECK_THAT(mean, WithinRel(xi, 0.02));
    CHECK(within >= 65);
    // nominal 95% coverage
    CHECK(covered >= 88);
}

TEST_CASE("accumulated charge fit")
{
    const int N = 120;
    const Vec x = accumulated_charge_positions(N);
    Vec dq;
    for (double v : x) dq.push_back(0.25 * std::tanh((v - 0.5) / 2.0) + 0.25);
    const FitResult f = fit_accumulated_charge(x, dq);
    CHECK_THAT(f.params[0], WithinAbs(0.25, 1e-8));
    CHECK_THAT(f.params[1], WithinAbs(2.0, 1e-8));
    CHECK_THAT(f.params[2], WithinAbs(0.5, 1e-8));
    CHECK_THAT(f.params[3], WithinAbs(0.25, 1e-8));
    CHECK(x.size() == accumulated_charge(Vec(N - 1, 0.5)).size());
    CHECK_THROWS_AS(fit_accumulated_charge({1, 2, 3}, {0, 0, 0}), PhysicsError);
}

TEST_CASE("power-law fit")
{
    Vec t, xi;
    for (int i = 0; i <= 100; ++i) t.push_back(i), xi.push_back(2.0 * std::sqrt(double(i)));
    const FitResult f = fit_power_law(t, xi);
    CHECK_THAT(f.params[1], WithinAbs(0.5, 1e-10));
    CHECK_THAT(f.params[0], WithinAbs(2.0, 1e-9));
    CHECK(f.metrics.at("accepted") == 1.0);
    CHECK(f.first == 11);  // ceil(0.1 * 101)
    CHECK_THAT(f.metrics.at("r_squared"), WithinAbs(1.0, 1e-12));

    // bounded oscillation around a fixed width is not a power law
    Vec osc;
    for (double tv : t) osc.push_back(3.0 + 0.3 * std::sin(tv));
    const FitResult o = fit_power_law(t, osc);
    CHECK(o.metrics.at("accepted") == 0.0);
    CHECK(o.metrics.at("bounded_oscillation") == 1.0);

    CHECK_THROWS_AS(fit_power_law({1, 2}, {1, 2}), PhysicsError);
    CHECK_THROWS_AS(fit_power_law({1, 2, 3, 4}, {1, -2, 3, 4}, 0.0), PhysicsError);
}

TEST_CASE("power-law interval matches ordinary least squares")
{
    Vec t, xi;
    CounterRng rng(4, 0);
    for (int i = 1; i <= 30; ++i) t.push_back(i), xi.push_back(1.5 * std::pow(i, 0.3) * std::exp(0.02 * rng.normal()));
    const FitResult f = fit_power_law(t, xi, 0.0);
    // OLS in log-log through normal equations
    const int m = 30;
    Eigen::MatrixXd X(m, 2);
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) X(i, 0) = 1.0, X(i, 1) = std::log(t[i]), y[i] = std::log(xi[i]);
    const Eigen::VectorXd beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    const double s2 = (y - X * beta).squaredNorm() / (m - 2);
    const Eigen::MatrixXd cov = (X.transpose() * X).inverse() * s2;
    CHECK_THAT(f.params[1], WithinRel(beta[1], 1e-10));
    CHECK_THAT(f.ci95[1], WithinRel(t_quantile_975(m - 2) * std::sqrt(cov(1, 1)), 1e-8));
}

TEST_CASE("Gauss-Newton intervals agree with the linear regression oracle")
{
    Vec x, y;
    CounterRng rng(8, 1);
    for (int i = 0; i < 25; ++i) x.push_back(0.2 * i), y.push_back(1.0 - 0.7 * x.back() + 0.1 * rng.normal());
    FitModel line = [](double xv, const Vec& p, double* g) {
        if (g) g[0] = 1.0, g[1] = xv;
        return p[0] + p[1] * xv;
    };
    const FitResult f = gauss_newton(x, y, {0.0, 0.0}, line);
    CHECK(f.converged);
    const int m = 25;
    Eigen::MatrixXd X(m, 2);
    Eigen::VectorXd Y(m);
    for (int i = 0; i < m; ++i) X(i, 0) = 1.0, X(i, 1) = x[i], Y[i] = y[i];
    const Eigen::VectorXd beta = (X.transpose() * X).ldlt().solve(X.transpose() * Y);
    const double s2 = (Y - X * beta).squaredNorm() / (m - 2);
    const Eigen::MatrixXd cov = (X.transpose() * X).inverse() * s2;
    for (int j = 0; j < 2; ++j) {
        CHECK_THAT(f.params[j], WithinAbs(beta[j], 1e-12));
        CHECK_THAT(f.ci95[j], WithinRel(t_quantile_975(m - 2) * std::sqrt(cov(j, j)), 1e-8));
    }
    CHECK_THROWS_AS(gauss_newton({1.0}, {1.0}, {0.0, 0.0}, line), PhysicsError);
}

TEST_CASE("Student t quantiles")
{
    CHECK_THAT(t_quantile_975(10), WithinAbs(2.228138852, 1e-9));
    CHECK_THAT(t_quantile_975(1), WithinAbs(12.70620474, 1e-7));
    CHECK_THAT(t_quantile_975(1000000), WithinAbs(1.959966, 1e-5));
    CHECK(std::isinf(t_quantile_975(0)));
}
