#include "catch_amalgamated.hpp"

#include <jrlat/dynamics.hpp>
#include <jrlat/fit.hpp>
#include <jrlat/rng.hpp>

using namespace jrlat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ScalarState vacuum(const LatticeSpec& spec)
{
    ScalarState v(spec.N);
    std::fill(v.phi.begin(), v.phi.end(), spec.Phi0());
    return v;
}

ScalarState perturbed_kink(const LatticeSpec& spec, double eps, std::uint64_t seed)
{
    ScalarState s = relaxed_kink(spec, {1, 0.5, spec.xi0()});
    CounterRng rng(seed, 0);
    for (auto& p : s.phi) p += eps * rng.normal();
    return s;
}

}  // namespace

TEST_CASE("scalar force matches a finite-difference gradient of the energy")
{
    const auto spec = LatticeSpec::from_kink(24, 2.0, 1.5);
    ScalarState s = perturbed_kink(spec, 0.1, 3);
    Vec F;
    scalar_force(spec, s.phi, F);
    const double h = 1e-6;
    for (int n : {0, 5, 11, 12, 23}) {
        ScalarState p = s, m = s;
        p.phi[n] += h;
        m.phi[n] -= h;
        const double dE = (total_energy(spec, p) - total_energy(spec, m)) / (2 * h);
        CHECK_THAT(F[n], WithinAbs(-dE / spec.a, 1e-6));
    }
}

TEST_CASE("vacuum is a fixed point")
{
    const auto spec = LatticeSpec::from_kink(64, 3.0, 1.0);
    const ScalarState v = vacuum(spec);
    const ScalarState s = step(v, spec, {0.01, 0.0, 1});
    for (int n = 0; n < spec.N; ++n) {
        CHECK_THAT(s.phi[n], WithinAbs(v.phi[n], 1e-15));
        CHECK_THAT(s.pi[n], WithinAbs(0.0, 1e-13));
    }
}

TEST_CASE("symplectic energy drift over 1e5 steps")
{
    const auto spec = LatticeSpec::from_kink(160, 3.0, 1.0);
    const ScalarState s0 = perturbed_kink(spec, 1e-3, 11);
    const IntegratorConfig cfg{0.01, 0.0, 100000};
    const double E0 = total_energy(spec, s0);
    double worst = 0.0;
    evolve(s0, spec, cfg, {}, 1000,
           {[&](double, const ScalarState& s) { worst = std::max(worst, std::abs(total_energy(spec, s) - E0)); }},
           false);
    CHECK(worst / std::abs(E0) < 1e-6);
}

TEST_CASE("damped dynamics never gains energy")
{
    const auto spec = LatticeSpec::from_kink(80, 3.0, 2.0);
    ScalarState s = perturbed_kink(spec, 0.2, 5);
    double prev = total_energy(spec, s);
    StepWorkspace ws;
    for (int k = 0; k < 2000; ++k) {
        step_inplace(s, spec, 0.02, 0.3, k * 0.02, nullptr, ws);
        const double e = total_energy(spec, s);
        REQUIRE(e <= prev + 1e-12 * std::abs(prev));
        prev = e;
    }
}

TEST_CASE("time reversal")
{
    const auto spec = LatticeSpec::from_kink(160, 3.0, 1.0);
    const ScalarState s0 = perturbed_kink(spec, 1e-3, 17);
    const IntegratorConfig cfg{0.01, 0.0, 5000};
    ScalarState s = evolve(s0, spec, cfg, {}, 1, {}, false).final_state;
    for (auto& p : s.pi) p = -p;
    s = evolve(s, spec, cfg, {}, 1, {}, false).final_state;
    double err = 0.0;
    for (int n = 0; n < spec.N; ++n) err = std::max({err, std::abs(s.phi[n] - s0.phi[n]), std::abs(s.pi[n] + s0.pi[n])});
    CHECK(err < 1e-8);
}

TEST_CASE("external force enters both half kicks")
{
    // constant force on a free massless-looking chain: phi(t) = f t^2 / 2 for the uniform mode
    LatticeSpec spec{16, 1.0, 1e-12, 0.0};
    ForceProvider f = [](double, const ScalarState&, Vec& out) { std::fill(out.begin(), out.end(), 0.5); };
    ScalarState s(16);
    s = evolve(s, spec, {0.1, 0.0, 100}, f, 100, {}, false).final_state;
    CHECK_THAT(s.phi[3], WithinRel(0.25 * 100.0, 1e-9));
    CHECK_THAT(s.pi[3], WithinRel(5.0, 1e-9));
}

TEST_CASE("non-finite state aborts the step")
{
    const auto spec = LatticeSpec::from_kink(32, 3.0, 1.0);
    ScalarState s = kink_profile(spec, {1, 0.5, 1.0});
    s.phi[4] = 1e200;
    CHECK_THROWS_AS(step(s, spec, {0.01, 0.0, 1}), PhysicsError);
    CHECK_THROWS_AS(step(s, spec, {-0.01, 0.0, 1}), PhysicsError);
}

TEST_CASE("relax keeps site and link centres")
{
    const auto spec = LatticeSpec::from_kink(160, 3.0, 1.0);
    const int c = spec.center();
    const ScalarState site = relaxed_kink(spec, {1, 0.0, 1.0});
    CHECK(site.phi[c] == 0.0);
    CHECK_THAT(site.phi[c + 1], WithinAbs(-site.phi[c - 1], 1e-12));
    const ScalarState link = relaxed_kink(spec, {1, 0.5, 1.0});
    CHECK_THAT(link.phi[c], WithinAbs(-link.phi[c + 1], 1e-12));
    Vec F;
    scalar_force(spec, link.phi, F);
    for (double v : F) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("relaxed wide link kink matches tanh width")
{
    for (double xi : {3.0, 4.0}) {
        const auto spec = LatticeSpec::from_kink(160, 3.0, xi);
        const ScalarState k = relaxed_kink(spec, {1, 0.5, xi});
        const FitResult f = fit_kink(k.phi);
        CHECK_THAT(f.params[1], WithinRel(xi, 0.02));
        CHECK_THAT(f.params[2], WithinAbs(0.5, 1e-6));
    }
}

TEST_CASE("relax leaves the vacuum unchanged and reports non-convergence")
{
    const auto spec = LatticeSpec::from_kink(64, 3.0, 1.0);
    const ScalarState v = vacuum(spec);
    const ScalarState r = relax(v, spec);
    CHECK(r.phi == v.phi);
    try {
        relax(kink_profile(spec, {1, 0.5, 2.5}), spec, 0.2, 1e-12, 3);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.residual() > 1e-12);
    }
    RelaxOptions bad;
    bad.pin_center = 0.3;
    CHECK_THROWS_AS(relax(v, spec, 0.2, 1e-10, 10, bad), PhysicsError);
}

TEST_CASE("evolve bookkeeping")
{
    const auto spec = LatticeSpec::from_kink(32, 3.0, 1.0);
    const ScalarState s0 = perturbed_kink(spec, 1e-2, 1);
    const Trajectory t0 = evolve(s0, spec, {0.01, 0.0, 0});
    REQUIRE(t0.states.size() == 1);
    CHECK(t0.final_state.phi == s0.phi);
    const Trajectory t1 = evolve(s0, spec, {0.01, 0.0, 5}, {}, 50);
    CHECK(t1.times == Vec{0.0});
    const Trajectory t2 = evolve(s0, spec, {0.01, 0.0, 10}, {}, 5);
    REQUIRE(t2.times.size() == 3);
    CHECK_THAT(t2.times[2], WithinAbs(0.1, 1e-15));
    CHECK(t2.states[2].phi == t2.final_state.phi);
    CHECK_THROWS_AS(evolve(s0, spec, {0.01, 0.0, 10}, {}, 0), PhysicsError);
}
