#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <numbers>
#include <utility>

#include "core.hpp"

namespace jrlat {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

struct FermionParams {
    double J = 1.0;
    double g = 0.0;
    double m_f = 0.0;

    void validate() const
    {
        if (!(J > 0)) throw PhysicsError("FermionParams: invariant J > 0 violated");
        if (!(g >= 0)) throw PhysicsError("FermionParams: invariant g >= 0 violated");
    }
    /// Effective speed of light c_f = 2 J a.
    double c_f(double a = 1.0) const { return 2.0 * J * a; }
};

inline int default_filling(int N) { return N % 2 ? (N + 1) / 2 : N / 2; }

/// Staggered on-site mass (m_f + g phi_n)(-1)^n with the midpoint site even.
inline Vec staggered_mass(const Vec& phi, const FermionParams& p)
{
    const std::size_t N = phi.size();
    Vec m(N);
    for (std::size_t n = 0; n < N; ++n) m[n] = (p.m_f + p.g * phi[n]) * site_parity(N, int(n));
    return m;
}

inline CMatrix fermion_hamiltonian(const Vec& phi, const FermionParams& p)
{
    p.validate();
    const int N = int(phi.size());
    const Vec m = staggered_mass(phi, p);
    CMatrix h = CMatrix::Zero(N, N);
    for (int n = 0; n < N; ++n) {
        h(n, n) = m[n];
        if (n + 1 < N) {
            h(n, n + 1) = cplx(0.0, p.J);
            h(n + 1, n) = cplx(0.0, -p.J);
        }
    }
    return h;
}

/// Gauge phase i^n relating h to the real tridiagonal matrix S: h = D S D^dagger.
inline cplx gauge_phase(int n)
{
    switch (n & 3) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
    }
}

/// Eigen-decomposition of the real tridiagonal matrix S (diagonal: staggered mass, off-diagonal: -J).
struct GaugeEigensystem {
    Eigen::VectorXd eps;
    Eigen::MatrixXd vectors;
};

inline void gauge_eigensystem(const Vec& phi, const FermionParams& p, GaugeEigensystem& out,
                              Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>& solver, bool vectors = true)
{
    const int N = int(phi.size());
    Eigen::VectorXd d(N), e = Eigen::VectorXd::Constant(N - 1, -p.J);
    const Vec m = staggered_mass(phi, p);
    for (int n = 0; n < N; ++n) d[n] = m[n];
    solver.computeFromTridiagonal(d, e, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error("fermion eigensolver did not converge");
    out.eps = solver.eigenvalues();
    if (vectors) out.vectors = solver.eigenvectors();
}

struct FermionEigensystem {
    Vec eps;
    CMatrix modes;
    int n_filled = 0;
};

/// First non-negligible component of every column made real positive.
inline void fix_column_phases(CMatrix& M)
{
    for (int j = 0; j < M.cols(); ++j) {
        const double mx = M.col(j).cwiseAbs().maxCoeff();
        for (int i = 0; i < M.rows(); ++i) {
            const double r = std::abs(M(i, j));
            if (r > 1e-10 * mx) {
                M.col(j) *= std::conj(M(i, j)) / r;
                M(i, j) = r;
                break;
            }
        }
    }
}

/// Dense Hermitian eigendecomposition of an arbitrary single-particle matrix.
inline FermionEigensystem eigensystem(const CMatrix& h)
{
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
    if (es.info() != Eigen::Success) throw Error("eigensystem: eigensolver did not converge");
    FermionEigensystem out;
    out.eps.assign(es.eigenvalues().data(), es.eigenvalues().data() + h.rows());
    out.modes = es.eigenvectors();
    fix_column_phases(out.modes);
    out.n_filled = default_filling(int(h.rows()));
    return out;
}

/// Same result for h(phi) through the real tridiagonal gauge form.
inline FermionEigensystem eigensystem(const Vec& phi, const FermionParams& p)
{
    p.validate();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    GaugeEigensystem ge;
    gauge_eigensystem(phi, p, ge, solver);
    const int N = int(phi.size());
    FermionEigensystem out;
    out.eps.assign(ge.eps.data(), ge.eps.data() + N);
    out.modes.resize(N, N);
    for (int n = 0; n < N; ++n) {
        const cplx ph = gauge_phase(n);
        for (int j = 0; j < N; ++j) out.modes(n, j) = ph * ge.vectors(n, j);
    }
    fix_column_phases(out.modes);
    out.n_filled = default_filling(N);
    return out;
}

enum class ZeroModeOccupation { both, one, none };

/// Filling for a spectrum with a mid-gap pair (kink-antikink sector).
inline int pair_filling(const Vec& eps, ZeroModeOccupation occ)
{
    const int N = int(eps.size());
    int i1 = 0;
    for (int i = 1; i < N; ++i)
        if (std::abs(eps[i]) < std::abs(eps[i1])) i1 = i;
    int i2 = -1;
    for (int i = 0; i < N; ++i)
        if (i != i1 && (i2 < 0 || std::abs(eps[i]) < std::abs(eps[i2]))) i2 = i;
    const int lo = std::min(i1, i2), hi = std::max(i1, i2);
    switch (occ) {
    case ZeroModeOccupation::both: return hi + 1;
    case ZeroModeOccupation::one: return lo + 1;
    default: return lo;
    }
}

/// C_nl = sum_{nu < n_filled} conj(M_{n nu}) M_{l nu}
inline CMatrix ground_correlation(const FermionEigensystem& es, int n_filled = -1)
{
    const int nf = n_filled < 0 ? es.n_filled : n_filled;
    const auto occ = es.modes.leftCols(nf);
    return occ.conjugate() * occ.transpose();
}

/// Exact step C -> U C U^dagger with U = exp(i h^T dt) = conj(M) diag(e^{i eps dt}) M^T.
inline CMatrix evolve_correlation(const CMatrix& C, const CMatrix& h, double dt)
{
    if (C.rows() != h.rows() || C.cols() != h.cols()) throw PhysicsError("evolve_correlation: dimension mismatch");
    const FermionEigensystem es = eigensystem(h);
    const int N = int(h.rows());
    Eigen::VectorXcd ph(N);
    for (int j = 0; j < N; ++j) ph[j] = std::exp(cplx(0.0, es.eps[j] * dt));
    const CMatrix U = es.modes.conjugate() * ph.asDiagonal() * es.modes.transpose();
    return U * C * U.adjoint();
}

inline Vec correlation_diagonal(const CMatrix& C)
{
    Vec d(C.rows());
    for (int n = 0; n < C.rows(); ++n) d[n] = C(n, n).real();
    return d;
}

/// rho_{n,n+1} = (C_nn + C_{n+1,n+1}) / 2
inline Vec unit_cell_charge(const Vec& c_diag)
{
    if (c_diag.size() < 2) return {};
    Vec rho(c_diag.size() - 1);
    for (std::size_t n = 0; n + 1 < c_diag.size(); ++n) rho[n] = 0.5 * (c_diag[n] + c_diag[n + 1]);
    return rho;
}

inline Vec unit_cell_charge(const CMatrix& C) { return unit_cell_charge(correlation_diagonal(C)); }

/// Delta Q over cells [exclusion, N-1-exclusion); entry k belongs to the cell between sites
/// exclusion+k and exclusion+k+1.
inline Vec accumulated_charge(const Vec& rho, int exclusion = 3)
{
    if (exclusion < 0) throw PhysicsError("accumulated_charge: exclusion must be >= 0");
    const int M = int(rho.size());
    Vec q;
    double acc = 0.0;
    for (int j = exclusion; j < M - exclusion; ++j) {
        acc += rho[j] - 0.5;
        q.push_back(acc);
    }
    return q;
}

/// Per unit cell (2m, 2m+1): C_{2m,2m} - C_{2m+1,2m+1}; an odd trailing site is dropped.
inline Vec scalar_condensate(const Vec& c_diag)
{
    Vec out(c_diag.size() / 2);
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = c_diag[2 * m] - c_diag[2 * m + 1];
    return out;
}

struct SymmetryReport {
    bool pass = false;
    double max_vector_residual = 0.0;
    double max_energy_residual = 0.0;
};

/// Checks M_{n,-eps} = M_{N-1-n,+eps} up to a phase for each pair (nu, N-1-nu). With the hopping
/// h_{n,n+1} = iJ no complex conjugate appears; the identity is exact when the staggered mass is odd
/// under the mirror, e.g. a site-centred kink on an odd chain.
inline SymmetryReport spectral_symmetry_check(const FermionEigensystem& es, double tol = 1e-8)
{
    const int N = int(es.eps.size());
    SymmetryReport r;
    for (int v = 0; v < N / 2 + (N % 2); ++v) {
        const int w = N - 1 - v;
        r.max_energy_residual = std::max(r.max_energy_residual, std::abs(es.eps[v] + es.eps[w]));
        Eigen::VectorXcd mirrored(N);
        for (int n = 0; n < N; ++n) mirrored[n] = es.modes(N - 1 - n, w);
        const cplx ov = mirrored.dot(es.modes.col(v));  // conj(mirrored) . col
        const cplx phase = std::abs(ov) > 0 ? ov / std::abs(ov) : cplx(1, 0);
        const double res = (es.modes.col(v) - phase * mirrored).cwiseAbs().maxCoeff();
        r.max_vector_residual = std::max(r.max_vector_residual, res);
    }
    r.pass = r.max_vector_residual < tol && r.max_energy_residual < tol;
    return r;
}

/// eps_pm(k) = +- sqrt(mass^2 + 4 J^2 sin^2(k a)), |k| <= pi / (2a)
inline std::pair<double, double> fermion_dispersion(double k, const FermionParams& p, double mass, double a = 1.0)
{
    const double s = std::sin(k * a);
    const double e = std::sqrt(mass * mass + 4.0 * p.J * p.J * s * s);
    return {e, -e};
}

/// Trapezoid quadrature of (i / 2 pi) int dk (A_+ - A_-) with A_pm = -+ i g Phi / (2 (k^2 + g^2 Phi^2)).
inline double chern_simons(double g, double Phi, const Vec& k_grid)
{
    const double m = g * Phi;
    if (m == 0.0) throw PhysicsError("chern_simons: requires g Phi != 0");
    auto integrand = [m](double k) {
        const cplx Ap(0.0, -m / (2.0 * (k * k + m * m)));
        const cplx Am(0.0, m / (2.0 * (k * k + m * m)));
        return (cplx(0.0, 1.0) * (Ap - Am)).real() / (2.0 * std::numbers::pi);
    };
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < k_grid.size(); ++i)
        s += 0.5 * (k_grid[i + 1] - k_grid[i]) * (integrand(k_grid[i]) + integrand(k_grid[i + 1]));
    return s;
}

inline Vec uniform_grid(double lo, double hi, int n_points)
{
    Vec k(n_points);
    for (int i = 0; i < n_points; ++i) k[i] = lo + (hi - lo) * i / (n_points - 1);
    return k;
}

/// Richardson extrapolation in the cutoff: the truncation error is ~ g Phi / (pi K_c).
inline double chern_simons_extrapolated(double g, double Phi, double K_c, int n_points)
{
    const double c1 = chern_simons(g, Phi, uniform_grid(-K_c, K_c, n_points));
    const double c2 = chern_simons(g, Phi, uniform_grid(-2 * K_c, 2 * K_c, 2 * n_points - 1));
    return 2.0 * c2 - c1;
}

/// Occupied orbitals Psi (N x n_filled) in the gauge frame phi = D^dagger psi; C = conj(Psi) Psi^T.
class FermionOrbitals {
public:
    FermionOrbitals() = default;

    /// Ground state of h(phi) filled with the n_filled lowest levels.
    FermionOrbitals(const Vec& phi, const FermionParams& p, int n_filled) : p_(p)
    {
        p.validate();
        project_ground(phi, n_filled);
    }

    void project_ground(const Vec& phi, int n_filled = -1)
    {
        if (n_filled >= 0) nf_ = n_filled;
        gauge_eigensystem(phi, p_, ge_, solver_);
        const int N = int(phi.size());
        if (nf_ < 0 || nf_ > N) throw PhysicsError("FermionOrbitals: filling out of range");
        psi_.resize(N, 2 * nf_);
        psi_.leftCols(nf_) = ge_.vectors.leftCols(nf_);
        psi_.rightCols(nf_).setZero();
        last_eps_ = ge_.eps;
    }

    /// Exact step psi -> exp(-i h(phi) dt) psi with h held constant over dt.
    void step(const Vec& phi, double dt)
    {
        gauge_eigensystem(phi, p_, ge_, solver_);
        last_eps_ = ge_.eps;
        work_.noalias() = ge_.vectors.transpose() * psi_;
        const int N = int(phi.size());
        for (int j = 0; j < N; ++j) {
            const double c = std::cos(ge_.eps[j] * dt), s = std::sin(ge_.eps[j] * dt);
            for (int k = 0; k < nf_; ++k) {
                const double re = work_(j, k), im = work_(j, nf_ + k);
                work_(j, k) = re * c + im * s;
                work_(j, nf_ + k) = im * c - re * s;
            }
        }
        psi_.noalias() = ge_.vectors * work_;
    }

    int n_filled() const { return nf_; }
    int size() const { return int(psi_.rows()); }
    const Eigen::VectorXd& last_spectrum() const { return last_eps_; }

    /// C_nn
    Vec density() const
    {
        const int N = size();
        Vec d(N);
        for (int n = 0; n < N; ++n) d[n] = psi_.row(n).squaredNorm();
        return d;
    }

    CMatrix correlation() const
    {
        const int N = size();
        CMatrix phi(N, nf_);
        for (int n = 0; n < N; ++n) {
            const cplx ph = gauge_phase(n);
            for (int k = 0; k < nf_; ++k) phi(n, k) = ph * cplx(psi_(n, k), psi_(n, nf_ + k));
        }
        return phi.conjugate() * phi.transpose();
    }

private:
    FermionParams p_;
    int nf_ = -1;
    Eigen::MatrixXd psi_;   // [Re | Im], N x 2 n_filled
    Eigen::MatrixXd work_;
    GaugeEigensystem ge_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver_;
    Eigen::VectorXd last_eps_;
};

struct CorrelationInvariants {
    double trace_deviation = 0.0;   // |tr C - N_f|
    double idempotency = 0.0;       // max |C^2 - C|
    double hermiticity = 0.0;
};

inline CorrelationInvariants correlation_invariants(const CMatrix& C, int n_filled)
{
    CorrelationInvariants r;
    r.trace_deviation = std::abs(C.trace().real() - n_filled);
    r.idempotency = (C * C - C).cwiseAbs().maxCoeff();
    r.hermiticity = (C - C.adjoint()).cwiseAbs().maxCoeff();
    return r;
}

}  // namespace jrlat
