#pragma once

// Quad-precision stationary kinks and lowest elasticity eigenvalue. The translational
// eigenvalue of a wide kink drops below double-precision resolution, so its sign needs both a
// stationary profile and a spectrum computed beyond 1e-16.

#include <vector>

#include "lattice.hpp"

namespace jrlat {

using quad = __float128;

namespace detail {

inline quad qabs(quad x) { return x < 0 ? -x : x; }

inline void quad_force(const LatticeSpec& spec, const std::vector<quad>& phi, std::vector<quad>& F)
{
    const int N = int(phi.size());
    const quad ia2 = quad(1) / (quad(spec.a) * quad(spec.a));
    const quad m2 = spec.m0_sq, lam = spec.lam;
    F.resize(N);
    for (int n = 0; n < N; ++n) {
        const quad p = phi[n];
        const quad l = n > 0 ? phi[n - 1] : p;
        const quad r = n + 1 < N ? phi[n + 1] : p;
        F[n] = (r - 2 * p + l) * ia2 - m2 * p - lam * p * p * p;
    }
}

/// Diagonal of K/a^2 (off-diagonal -1/a^2).
inline std::vector<quad> quad_hessian_diag(const LatticeSpec& spec, const std::vector<quad>& phi)
{
    const int N = int(phi.size());
    const quad ia2 = quad(1) / (quad(spec.a) * quad(spec.a));
    std::vector<quad> d(N);
    for (int n = 0; n < N; ++n) {
        const quad nb = (n == 0 || n == N - 1) ? 1 : 2;
        d[n] = nb * ia2 + quad(spec.m0_sq) + 3 * quad(spec.lam) * phi[n] * phi[n];
    }
    return d;
}

/// Number of eigenvalues below sigma of the tridiagonal matrix (diag d, off-diagonal e).
inline int sturm_count(const std::vector<quad>& d, quad e, quad sigma)
{
    int count = 0;
    quad q = d[0] - sigma;
    const quad tiny = quad(1e-300) * quad(1e-300);
    if (q < 0) ++count;
    for (std::size_t i = 1; i < d.size(); ++i) {
        if (q == 0) q = tiny;
        q = d[i] - sigma - e * e / q;
        if (q < 0) ++count;
    }
    return count;
}

}  // namespace detail

struct PreciseStationary {
    std::vector<quad> phi;
    double residual = 0.0;
    int iterations = 0;
};

/// Newton iteration for F(phi) = 0 in quad precision starting from a double profile.
inline PreciseStationary refine_stationary(const LatticeSpec& spec, const Vec& phi0, int max_iter = 60)
{
    const int N = int(phi0.size());
    PreciseStationary out;
    out.phi.assign(phi0.begin(), phi0.end());
    std::vector<quad> F, d, c(N), r(N);
    const quad off = -quad(1) / (quad(spec.a) * quad(spec.a));
    quad prev = -1;
    for (int it = 0; it < max_iter; ++it) {
        detail::quad_force(spec, out.phi, F);
        quad res = 0;
        for (int n = 0; n < N; ++n) res = std::max(res, detail::qabs(F[n]));
        out.residual = double(res);
        out.iterations = it;
        if (res < quad(1e-30) || (prev >= 0 && res >= prev && res < quad(1e-24))) break;
        prev = res;
        // Solve H delta = F with H = K / a^2 (Thomas algorithm).
        d = detail::quad_hessian_diag(spec, out.phi);
        c[0] = off / d[0];
        r[0] = F[0] / d[0];
        for (int n = 1; n < N; ++n) {
            const quad den = d[n] - off * c[n - 1];
            c[n] = off / den;
            r[n] = (F[n] - off * r[n - 1]) / den;
        }
        for (int n = N - 2; n >= 0; --n) r[n] -= c[n] * r[n + 1];
        for (int n = 0; n < N; ++n) out.phi[n] += r[n];
    }
    return out;
}

/// Lowest eigenvalue Omega_0^2 of K/a^2 around a quad-precision background, by Sturm bisection.
inline double lowest_eigenvalue_precise(const LatticeSpec& spec, const std::vector<quad>& phi)
{
    const std::vector<quad> d = detail::quad_hessian_diag(spec, phi);
    const quad e = -quad(1) / (quad(spec.a) * quad(spec.a));
    quad lo = d[0], hi = d[0];
    for (std::size_t i = 0; i < d.size(); ++i) {
        const quad rad = (i == 0 || i + 1 == d.size()) ? -e : -2 * e;
        lo = std::min(lo, d[i] - rad);
        hi = std::max(hi, d[i] + rad);
    }
    for (int it = 0; it < 400; ++it) {
        const quad mid = (lo + hi) / 2;
        if (mid <= lo || mid >= hi) break;
        if (detail::sturm_count(d, e, mid) >= 1)
            hi = mid;
        else
            lo = mid;
    }
    return double((lo + hi) / 2);
}

/// Omega_0^2 of the stationary kink centred at x0 (site or link), computed in quad precision.
inline double translational_eigenvalue(const LatticeSpec& spec, double x0)
{
    const ScalarState k = kink_profile(spec, {1, x0, spec.xi0() / spec.a});
    const PreciseStationary st = refine_stationary(spec, k.phi);
    return lowest_eigenvalue_precise(spec, st.phi);
}

}  // namespace jrlat
