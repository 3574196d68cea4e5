#include "catch_amalgamated.hpp"

#include <jrlat/dynamics.hpp>
#include <jrlat/modes.hpp>
#include <jrlat/precise.hpp>
#include <jrlat/twa.hpp>

using namespace jrlat;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("vacuum elasticity spectrum is the free-end lattice dispersion")
{
    const auto spec = LatticeSpec::from_kink(48, 3.0, 2.0);
    ScalarState v(spec.N);
    std::fill(v.phi.begin(), v.phi.end(), spec.Phi0());
    const ModeBasis b = normal_modes(v, spec);
    // zero-gradient ends: k_j = pi j / N
    for (int j = 0; j < spec.N; ++j) {
        const double k = std::numbers::pi * j / spec.N;
        const double w = scalar_dispersion(k, spec);
        CHECK_THAT(b.omega_sq[j], WithinAbs(w * w, 1e-12));
    }
}

TEST_CASE("diagonal matrix gives its entries and the identity basis")
{
    ElasticityMatrix K;
    K.diag = Eigen::VectorXd::Constant(6, 2.5);
    K.diag[3] = 1.0;
    K.offdiag = Eigen::VectorXd::Zero(5);
    const ModeBasis b = normal_modes(K);
    CHECK(b.omega_sq[0] == 1.0);
    for (int j = 1; j < 6; ++j) CHECK(b.omega_sq[j] == 2.5);
    const Eigen::MatrixXd P = b.modes.cwiseAbs();
    for (int i = 0; i < 6; ++i) {
        CHECK_THAT(P.row(i).sum(), WithinAbs(1.0, 1e-14));
        CHECK_THAT(P.col(i).sum(), WithinAbs(1.0, 1e-14));
    }
    CHECK_THAT(b.modes(3, 0), WithinAbs(1.0, 1e-14));
}

TEST_CASE("kink modes: site unstable, link stable with two in-gap modes")
{
    const auto spec = LatticeSpec::from_kink(160, 3.0, 1.0);
    const ScalarState site = relaxed_kink(spec, {1, 0.0, 1.0});
    const ScalarState link = relaxed_kink(spec, {1, 0.5, 1.0});
    const ModeBasis bs = normal_modes(site, spec), bl = normal_modes(link, spec);
    CHECK(bs.omega_sq[0] < 0);
    CHECK(bl.omega_sq[0] > 0);
    const double gap = 2.0 * std::abs(spec.m0_sq);
    CHECK(bl.omega_sq[1] < gap);
    CHECK(bl.omega_sq[2] > bl.omega_sq[1]);
    CHECK(stability_classify(site, spec) == Stability::unstable);
    CHECK(stability_classify(link, spec) == Stability::stable);
    ScalarState vac(spec.N);
    std::fill(vac.phi.begin(), vac.phi.end(), spec.Phi0());
    CHECK(stability_classify(vac, spec) == Stability::stable);
    // eigenvectors are orthonormal and diagonalise K
    const Eigen::MatrixXd K = elasticity_matrix(link, spec).dense();
    const Eigen::MatrixXd& M = bl.modes;
    CHECK((M.transpose() * M - Eigen::MatrixXd::Identity(spec.N, spec.N)).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::VectorXd w2 = Eigen::Map<const Eigen::VectorXd>(bl.omega_sq.data(), spec.N);
    CHECK((M.transpose() * K * M - Eigen::MatrixXd(w2.asDiagonal())).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("quad-precision translational eigenvalue agrees with double where resolvable")
{
    const auto spec = LatticeSpec::from_kink(160, 3.0, 1.0);
    const ModeBasis bl = normal_modes(relaxed_kink(spec, {1, 0.5, 1.0}), spec);
    CHECK_THAT(translational_eigenvalue(spec, 0.5), WithinRel(bl.omega_sq[0], 1e-6));
    const auto wide = LatticeSpec::from_kink(160, 3.0, 2.0);
    CHECK(translational_eigenvalue(wide, 0.0) < 0);
    CHECK(translational_eigenvalue(wide, 0.5) > 0);
}

TEST_CASE("sturm count matches a dense eigensolver")
{
    std::vector<quad> d{1, -2, 3, 0.5, 2};
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(5, 5);
    for (int i = 0; i < 5; ++i) {
        A(i, i) = double(d[i]);
        if (i < 4) A(i, i + 1) = A(i + 1, i) = -0.7;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    for (double s : {-3.0, -1.0, 0.0, 1.0, 2.5, 5.0}) {
        int expect = 0;
        for (int i = 0; i < 5; ++i) expect += es.eigenvalues()[i] < s;
        CHECK(detail::sturm_count(d, quad(-0.7), quad(s)) == expect);
    }
}

TEST_CASE("Wigner sampling")
{
    const auto spec = LatticeSpec::from_kink(40, 2.0, 2.0);
    const ScalarState bg = relaxed_kink(spec, {1, 0.5, 2.0});
    const ModeBasis basis = normal_modes(bg, spec);

    SECTION("zero variances return the background")
    {
        WignerSpec w = WignerSpec::ground_state(bg, basis, spec);
        std::fill(w.var_q.begin(), w.var_q.end(), 0.0);
        std::fill(w.var_p.begin(), w.var_p.end(), 0.0);
        CounterRng rng(1, 0);
        const ScalarState s = sample_initial(w, rng);
        CHECK(s.phi == bg.phi);
        for (double p : s.pi) CHECK(p == 0.0);
    }
    SECTION("sample mean converges to the background")
    {
        const WignerSpec w = WignerSpec::ground_state(bg, basis, spec);
        const int M = 4000, N = spec.N;
        Vec mean(N, 0.0), sq(N, 0.0);
        for (int k = 0; k < M; ++k) {
            CounterRng rng(9, k);
            const ScalarState s = sample_initial(w, rng);
            for (int n = 0; n < N; ++n) {
                mean[n] += s.phi[n] / M;
                sq[n] += s.phi[n] * s.phi[n] / M;
            }
        }
        for (int n = 0; n < N; ++n) {
            const double se = std::sqrt((sq[n] - mean[n] * mean[n]) / (M - 1));
            CHECK(std::abs(mean[n] - bg.phi[n]) < 5 * se);
        }
    }
    SECTION("per-mode variances are 1/(2 Omega) and Omega/2")
    {
        const WignerSpec w = WignerSpec::ground_state(bg, basis, spec);
        for (int v = 0; v < spec.N; ++v) {
            const double om = std::sqrt(basis.omega_sq[v]);
            CHECK_THAT(w.var_q[v] * w.var_p[v], WithinRel(0.25, 1e-12));
            CHECK_THAT(w.var_p[v], WithinRel(om / 2, 1e-12));
        }
    }
    SECTION("frozen Goldstone mode with mean momentum moves deterministically")
    {
        const KinkSetup k = kink_setup(spec, true, -2.0);
        CHECK(k.wigner.frozen[0]);
        CHECK(k.wigner.var_q[0] == 0.0);
        WignerSpec w = k.wigner;
        for (int v = 1; v < spec.N; ++v) w.frozen[v] = 1;
        CounterRng rng(5, 0);
        const ScalarState s = sample_initial(w, rng);
        for (int n = 0; n < spec.N; ++n) CHECK_THAT(s.pi[n], WithinAbs(-2.0 * k.basis.modes(n, 0) / spec.a, 1e-14));
    }
    SECTION("unstable unfrozen mode is rejected")
    {
        const ScalarState site = relaxed_kink(spec, {1, 0.0, 2.0});
        const ModeBasis bs = normal_modes(site, spec);
        REQUIRE(bs.omega_sq[0] < 0);
        const WignerSpec w = WignerSpec::ground_state(site, bs, spec);
        CounterRng rng(1, 0);
        CHECK_THROWS_AS(sample_initial(w, rng), PhysicsError);
        const WignerSpec wf = WignerSpec::ground_state(site, bs, spec, {0});
        CHECK_NOTHROW(sample_initial(wf, rng));
    }
    SECTION("wide Goldstone variance is flagged")
    {
        const auto wide = LatticeSpec::from_kink(100, 5.0, 3.0);
        const ScalarState k = relaxed_kink(wide, {1, 0.5, 3.0});
        const WignerSpec w = WignerSpec::ground_state(k, normal_modes(k, wide), wide);
        CHECK(w.warnings.size() == 1);
    }
}

TEST_CASE("counter RNG streams")
{
    CounterRng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    bool differ_c = false, differ_d = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        differ_c |= x != c.next_u64();
        differ_d |= x != d.next_u64();
    }
    CHECK(differ_c);
    CHECK(differ_d);
    CounterRng r(1, 2);
    double m = 0, m2 = 0;
    const int M = 200000;
    for (int i = 0; i < M; ++i) {
        const double z = r.normal();
        m += z / M;
        m2 += z * z / M;
    }
    CHECK(std::abs(m) < 5.0 / std::sqrt(double(M)));
    CHECK(std::abs(m2 - 1.0) < 5.0 * std::sqrt(2.0 / M));
    CounterRng u(3, 3);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        REQUIRE(x > 0.0);
        REQUIRE(x < 1.0);
    }
}
