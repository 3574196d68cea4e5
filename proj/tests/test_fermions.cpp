#include "catch_amalgamated.hpp"

#include <jrlat/dynamics.hpp>
#include <jrlat/fermions.hpp>
#include <jrlat/rng.hpp>

using namespace jrlat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const LatticeSpec kSpec = LatticeSpec::from_kink(160, 3.0, 1.0);
const FermionParams kP{3.0, 0.8, 0.0};

const ScalarState& link_kink()
{
    static const ScalarState k = relaxed_kink(kSpec, {1, 0.5, 1.0});
    return k;
}

Vec random_field(int N, std::uint64_t seed)
{
    CounterRng r(seed, 0);
    Vec phi(N);
    for (auto& p : phi) p = r.normal();
    return phi;
}

}  // namespace

TEST_CASE("hamiltonian structure")
{
    const Vec phi = random_field(12, 1);
    const CMatrix h = fermion_hamiltonian(phi, {1.5, 0.7, 0.2});
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    for (int n = 0; n < 12; ++n) CHECK_THAT(h(n, n).real(), WithinAbs((0.2 + 0.7 * phi[n]) * site_parity(12, n), 1e-15));
    CHECK(h(3, 4) == cplx(0, 1.5));
    CHECK(h(0, 2) == cplx(0, 0));
    CHECK_THROWS_AS(fermion_hamiltonian(phi, {0.0, 0.5, 0.0}), PhysicsError);
    CHECK_THROWS_AS(fermion_hamiltonian(phi, {1.0, -0.5, 0.0}), PhysicsError);
}

TEST_CASE("free four-site spectrum from the characteristic polynomial")
{
    const double J = 1.3;
    const FermionEigensystem es = eigensystem(fermion_hamiltonian(Vec(4, 0.0), {J, 0.0, 0.0}));
    // det(h - x) = x^4 - 3 J^2 x^2 + J^4
    const double r1 = J * std::sqrt((3.0 - std::sqrt(5.0)) / 2.0), r2 = J * std::sqrt((3.0 + std::sqrt(5.0)) / 2.0);
    const Vec expect{-r2, -r1, r1, r2};
    for (int i = 0; i < 4; ++i) CHECK_THAT(es.eps[i], WithinAbs(expect[i], 1e-13));
}

TEST_CASE("gauge-frame eigensystem agrees with dense diagonalisation")
{
    const Vec phi = random_field(30, 2);
    const FermionParams p{2.0, 0.6, 0.1};
    const FermionEigensystem a = eigensystem(fermion_hamiltonian(phi, p));
    const FermionEigensystem b = eigensystem(phi, p);
    for (int i = 0; i < 30; ++i) CHECK_THAT(a.eps[i], WithinAbs(b.eps[i], 1e-12));
    CHECK((ground_correlation(a) - ground_correlation(b)).cwiseAbs().maxCoeff() < 1e-12);
    const CMatrix h = fermion_hamiltonian(phi, p);
    for (int j : {0, 7, 29}) {
        const Eigen::VectorXcd r = h * b.modes.col(j) - b.eps[j] * b.modes.col(j);
        CHECK(r.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("uniform staggered background opens a gap 2 g Phi0")
{
    Vec phi(160, 3.0);
    const FermionEigensystem es = eigensystem(phi, kP);
    const int nf = es.n_filled;
    const double gap = es.eps[nf] - es.eps[nf - 1];
    CHECK_THAT(gap, WithinRel(2.0 * kP.g * 3.0, 0.05));
}

TEST_CASE("fermion dispersion")
{
    const FermionParams p{3.0, 0.0, 0.0};
    const auto [e0p, e0m] = fermion_dispersion(0.0, p, 0.4);
    CHECK(e0p == 0.4);
    CHECK(e0m == -0.4);
    const auto [e1p, e1m] = fermion_dispersion(std::numbers::pi / 2, p, 0.4);
    CHECK_THAT(e1p, WithinAbs(std::sqrt(0.16 + 36.0), 1e-14));
    CHECK(e1m == -e1p);
    for (double k : {1e-2, 5e-3}) {
        const double slope = fermion_dispersion(k, p, 0.0).first / k;
        CHECK(std::abs(slope - p.c_f()) <= p.c_f() * k * k);
    }
}

TEST_CASE("link kink binds one isolated zero mode; site kink pins it at zero")
{
    const FermionEigensystem es = eigensystem(link_kink().phi, kP);
    const int nf = es.n_filled;
    int near_zero = 0;
    for (double e : es.eps) near_zero += std::abs(e) < 0.5;
    CHECK(near_zero == 1);
    int z = 0;
    for (int i = 1; i < kSpec.N; ++i)
        if (std::abs(es.eps[i]) < std::abs(es.eps[z])) z = i;
    CHECK(z == nf - 1);
    double weight = 0.0;
    for (int n = kSpec.center() - 10; n <= kSpec.center() + 10; ++n) weight += std::norm(es.modes(n, z));
    CHECK(weight > 0.99);

    const FermionEigensystem site = eigensystem(relaxed_kink(kSpec, {1, 0.0, 1.0}).phi, kP);
    CHECK(std::abs(site.eps[site.n_filled - 1]) < 1e-10);
}

TEST_CASE("ground correlation is a rank-N_f projector")
{
    const FermionEigensystem es = eigensystem(link_kink().phi, kP);
    const CMatrix C = ground_correlation(es);
    const auto inv = correlation_invariants(C, es.n_filled);
    CHECK(inv.trace_deviation < 1e-10);
    CHECK(inv.idempotency < 1e-10);
    CHECK(inv.hermiticity < 1e-14);
    // orbital representation gives the same matrix
    FermionOrbitals orb(link_kink().phi, kP, es.n_filled);
    CHECK((orb.correlation() - C).cwiseAbs().maxCoeff() < 1e-12);
    const Vec d = orb.density();
    for (int n = 0; n < kSpec.N; ++n) CHECK_THAT(d[n], WithinAbs(C(n, n).real(), 1e-12));
}

TEST_CASE("free fermions at half filling")
{
    const Vec phi(160, 0.0);
    const FermionParams p{3.0, 0.0, 0.0};
    const Vec d = correlation_diagonal(ground_correlation(eigensystem(phi, p)));
    for (int n = 20; n < 140; ++n) CHECK_THAT(d[n], WithinAbs(0.5, 1e-2));
    for (double r : unit_cell_charge(d)) CHECK_THAT(r, WithinAbs(0.5, 1e-2));
    for (double c : scalar_condensate(d)) CHECK_THAT(c, WithinAbs(0.0, 1e-2));
}

TEST_CASE("correlation evolution")
{
    const Vec phi = random_field(24, 4);
    const FermionParams p{1.0, 0.8, 0.0};
    const CMatrix h = fermion_hamiltonian(phi, p);
    const FermionEigensystem es = eigensystem(h);
    const CMatrix C0 = ground_correlation(es);
    CHECK((evolve_correlation(C0, h, 0.7) - C0).cwiseAbs().maxCoeff() < 1e-12);

    // a state that is not stationary: ground state of a different field
    const Vec phi2 = random_field(24, 5);
    FermionOrbitals orb(phi2, p, 12);
    const CMatrix Ca = orb.correlation();
    const CMatrix Cb = evolve_correlation(Ca, h, 0.3);
    CHECK(std::abs(Cb.trace() - Ca.trace()) < 1e-10);
    Eigen::SelfAdjointEigenSolver<CMatrix> ea(Ca), eb(Cb);
    CHECK((ea.eigenvalues() - eb.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((Cb - Ca).cwiseAbs().maxCoeff() > 1e-3);

    // the orbital step follows the same equation of motion as the matrix step
    orb.step(phi, 0.3);
    CHECK((orb.correlation() - Cb).cwiseAbs().maxCoeff() < 1e-12);

    // C evolves under i dC/dt = [C, h^T]
    const double dt = 1e-5;
    const CMatrix dC = (evolve_correlation(Ca, h, dt) - evolve_correlation(Ca, h, -dt)) / (2 * dt);
    const CMatrix rhs = (Ca * h.transpose() - h.transpose() * Ca) / cplx(0, 1);
    CHECK((dC - rhs).cwiseAbs().maxCoeff() < 1e-7);
    CHECK_THROWS_AS(evolve_correlation(Ca, CMatrix::Zero(3, 3), 0.1), PhysicsError);
}

TEST_CASE("kink charge distribution")
{
    const FermionEigensystem es = eigensystem(link_kink().phi, kP);
    const Vec d = correlation_diagonal(ground_correlation(es));
    const Vec rho = unit_cell_charge(d);
    const int c = kSpec.center();
    for (int n = 3; n < kSpec.N - 4; ++n)
        if (std::abs(n - c) > 15 && n > 15 && n < kSpec.N - 16) CHECK_THAT(rho[n], WithinAbs(0.5, 1e-3));
    const Vec dq = accumulated_charge(rho, 3);
    CHECK(int(dq.size()) == kSpec.N - 1 - 6);
    CHECK_THAT(dq[c - 3 - 20], WithinAbs(0.0, 2e-2));
    CHECK_THAT(dq.back(), WithinAbs(0.5, 2e-2));
    const Vec cond = scalar_condensate(d);
    CHECK(cond[5] * cond[cond.size() - 5] < 0);
    CHECK_THROWS_AS(accumulated_charge(rho, -1), PhysicsError);
}

TEST_CASE("kink-antikink with both zero modes filled carries unit charge")
{
    const auto spec = LatticeSpec::from_kink(160, 3.0, 1.0);
    const ScalarState pair = kink_antikink_profile(spec, 40.0, 1.0);
    const FermionEigensystem es = eigensystem(pair.phi, kP);
    const int both = pair_filling(es.eps, ZeroModeOccupation::both);
    const int one = pair_filling(es.eps, ZeroModeOccupation::one);
    const int none = pair_filling(es.eps, ZeroModeOccupation::none);
    CHECK(both == one + 1);
    CHECK(one == none + 1);
    auto total = [&](int nf) {
        const Vec dq = accumulated_charge(unit_cell_charge(ground_correlation(es, nf)), 3);
        return dq.back();
    };
    CHECK_THAT(total(both), WithinAbs(1.0, 2e-2));
    CHECK_THAT(total(one), WithinAbs(0.0, 2e-2));
    CHECK_THAT(total(none), WithinAbs(-1.0, 2e-2));
}

TEST_CASE("spectral symmetry")
{
    const auto odd = LatticeSpec::from_kink(161, 3.0, 1.0);
    const SymmetryReport centred = spectral_symmetry_check(eigensystem(relaxed_kink(odd, {1, 0.0, 1.0}).phi, kP), 1e-8);
    CHECK(centred.pass);
    // a link-centred kink has its bound level away from zero, so there is no +-eps pairing
    CHECK_FALSE(spectral_symmetry_check(eigensystem(link_kink().phi, kP), 1e-8).pass);

    // six sites, uniform staggered mass: check against the explicit dense matrix
    const Vec phi(6, 1.0);
    const FermionParams p{1.0, 0.5, 0.0};
    const CMatrix h = fermion_hamiltonian(phi, p);
    Eigen::SelfAdjointEigenSolver<CMatrix> dense(h);
    const FermionEigensystem es = eigensystem(phi, p);
    for (int i = 0; i < 6; ++i) CHECK_THAT(es.eps[i], WithinAbs(dense.eigenvalues()[i], 1e-13));
    const SymmetryReport r6 = spectral_symmetry_check(es, 1e-8);
    CHECK(r6.pass);
    CHECK(r6.max_energy_residual < 1e-13);

    const ScalarState off = kink_profile(odd, {1, 7.3, 1.0});
    const SymmetryReport r = spectral_symmetry_check(eigensystem(off.phi, kP), 1e-8);
    WARN("off-centre kink symmetry residual: " << r.max_vector_residual);
    CHECK(r.max_vector_residual > centred.max_vector_residual);
}

TEST_CASE("Chern-Simons integral")
{
    // closed form of the truncated integral: (1/pi) arctan(K_c / (g Phi))
    const Vec k = uniform_grid(-100.0, 100.0, 10001);
    const double cs = chern_simons(1.0, 1.0, k);
    CHECK_THAT(cs, WithinAbs(0.5, 1e-2));
    CHECK_THAT(cs, WithinAbs(std::atan(100.0) / std::numbers::pi, 1e-6));
    CHECK_THAT(chern_simons(1.0, -1.0, k), WithinAbs(-cs, 1e-15));
    CHECK_THAT(chern_simons_extrapolated(1.0, 1.0, 100.0, 10001), WithinAbs(0.5, 1e-6));
    CHECK_THAT(chern_simons_extrapolated(1.0, -1.0, 100.0, 10001), WithinAbs(-0.5, 1e-6));
    CHECK_THROWS_AS(chern_simons(0.0, 1.0, k), PhysicsError);
}
