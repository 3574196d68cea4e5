#pragma once

#include <array>
#include <complex>
#include <numbers>

#include "core.hpp"

namespace jrlat {

inline ScalarState kink_profile(const LatticeSpec& spec, const SolitonProfile& prof)
{
    spec.validate();
    if (!spec.broken()) throw PhysicsError("kink_profile: m0_sq >= 0, no kink exists");
    if (!(prof.width > 0)) throw PhysicsError("kink_profile: width must be > 0");
    if (prof.q_t != 1 && prof.q_t != -1) throw PhysicsError("kink_profile: q_t must be +1 or -1");
    const double Phi0 = spec.Phi0();
    ScalarState s(spec.N);
    for (int n = 0; n < spec.N; ++n)
        s.phi[n] = prof.q_t * Phi0 * std::tanh((spec.x(n) - prof.center) / prof.width);
    return s;
}

/// Kink at -d/2 and antikink at +d/2 on the -Phi0 vacuum; d and width in units of a.
inline ScalarState kink_antikink_profile(const LatticeSpec& spec, double d, double width)
{
    spec.validate();
    if (!spec.broken()) throw PhysicsError("kink_antikink_profile: m0_sq >= 0, no kink exists");
    if (!(width > 0)) throw PhysicsError("kink_antikink_profile: width must be > 0");
    const double Phi0 = spec.Phi0();
    ScalarState s(spec.N);
    for (int n = 0; n < spec.N; ++n) {
        const double x = spec.x(n);
        s.phi[n] = -Phi0 * std::tanh((x - d / 2) / width) + Phi0 * std::tanh((x + d / 2) / width) - Phi0;
    }
    return s;
}

/// Per-site energy density; the forward-difference gradient of link (n, n+1) belongs to site n.
inline Vec energy_density(const LatticeSpec& spec, const ScalarState& st, double g = 0.0,
                          const Vec* occupation = nullptr)
{
    const int N = spec.N;
    if (int(st.phi.size()) != N || int(st.pi.size()) != N)
        throw PhysicsError("energy_density: state length differs from N");
    if (occupation && int(occupation->size()) != N)
        throw PhysicsError("energy_density: correlation diagonal length differs from N");
    const double a = spec.a;
    Vec e(N);
    for (int n = 0; n < N; ++n) {
        const double p = st.phi[n];
        double v = 0.5 * st.pi[n] * st.pi[n] + 0.5 * spec.m0_sq * p * p + 0.25 * spec.lam * p * p * p * p;
        if (n + 1 < N) {
            const double grad = (st.phi[n + 1] - p) / a;
            v += 0.5 * grad * grad;
        }
        if (occupation) v += g * spec.parity(n) * p * (*occupation)[n];
        e[n] = v;
    }
    return e;
}

inline double total_energy(const LatticeSpec& spec, const ScalarState& st, double g = 0.0,
                           const Vec* occupation = nullptr)
{
    const Vec e = energy_density(spec, st, g, occupation);
    double sum = 0.0;
    for (double v : e) sum += v;
    return spec.a * sum;
}

inline double vacuum_energy(const LatticeSpec& spec)
{
    const double P2 = spec.broken() ? spec.Phi0() * spec.Phi0() : 0.0;
    return spec.N * spec.a * (0.5 * spec.m0_sq * P2 + 0.25 * spec.lam * P2 * P2);
}

/// (phi[N-1-offset] - phi[offset]) / (2 Phi0)
inline double topological_charge(const LatticeSpec& spec, const ScalarState& st, int offset = 3)
{
    const int N = int(st.phi.size());
    if (offset < 0 || 2 * offset >= N) throw PhysicsError("topological_charge: offset out of range");
    return (st.phi[N - 1 - offset] - st.phi[offset]) / (2.0 * spec.Phi0());
}

inline double soliton_mass_reference(double m0_sq, double lam, bool quantum_corrected = false)
{
    if (!(m0_sq < 0)) throw PhysicsError("soliton_mass_reference: requires m0_sq < 0");
    if (!(lam > 0)) throw PhysicsError("soliton_mass_reference: requires lam > 0");
    const double mu = std::sqrt(-m0_sq);
    const double classical = 2.0 * std::sqrt(2.0) / 3.0 * mu * mu * mu / lam;
    if (!quantum_corrected) return classical;
    return classical + 2.0 * mu * (1.0 / (2.0 * std::sqrt(3.0)) - 3.0 / (2.0 * std::numbers::pi));
}

/// omega(k) = sqrt(m_eff^2 + (4/a^2) sin^2(ka/2))
inline double scalar_dispersion(double k, double m_eff_sq, double a = 1.0)
{
    const double s = std::sin(k * a / 2);
    const double w2 = m_eff_sq + 4.0 / (a * a) * s * s;
    if (w2 < 0) throw PhysicsError("scalar_dispersion: negative argument under the root");
    return std::sqrt(w2);
}

/// Vacuum dispersion; in the broken phase the fluctuation mass 2|m0^2| is used.
inline double scalar_dispersion(double k, const LatticeSpec& spec)
{
    const double m2 = spec.broken() ? -2.0 * spec.m0_sq : spec.m0_sq;
    return scalar_dispersion(k, m2, spec.a);
}

/// Complete elliptic integral of the first kind, parameter convention K(m).
inline double elliptic_k(double m)
{
    if (!(m < 1.0)) throw PhysicsError("elliptic_k: parameter m >= 1, K diverges");
    double x = 1.0;
    double y = std::sqrt(1.0 - m);
    for (int it = 0; it < 64; ++it) {
        if (std::abs(x - y) <= 1e-15 * x) break;
        const double xn = 0.5 * (x + y);
        y = std::sqrt(x * y);
        x = xn;
    }
    return std::numbers::pi / (x + y);
}

/// Tadpole-renormalised bare mass.
inline double tadpole_mass(double mu_sq, double lam, double a = 1.0)
{
    const double s = 1.0 + mu_sq * a * a / 4.0;
    if (!(s > 0)) throw PhysicsError("tadpole_mass: requires 1 + mu^2 a^2 / 4 > 0");
    const double m = 1.0 / s;
    if (lam == 0.0) return mu_sq;
    return mu_sq - 3.0 * lam / (2.0 * std::numbers::pi) / std::sqrt(s) * elliptic_k(m);
}

/// Normalised continuum zero mode (two-component spinor) of a soliton at x0 with charge q_t.
inline std::array<std::complex<double>, 2> continuum_zero_mode(double x, double g, double lam, double xi,
                                                               double c_f, double x0 = 0.0, int q_t = 1)
{
    if (!(g > 0 && lam > 0 && xi > 0 && c_f > 0))
        throw PhysicsError("continuum_zero_mode: g, lam, xi, c_f must be > 0");
    const double p = std::sqrt(2.0 * g * g / (lam * c_f * c_f));
    // integral of cosh^{-2p}(u/xi) du = xi sqrt(pi) Gamma(p) / Gamma(p + 1/2)
    const double norm_int =
        xi * std::sqrt(std::numbers::pi) * std::exp(std::lgamma(p) - std::lgamma(p + 0.5));
    const double amp = std::pow(std::cosh((x - x0) / xi), -p) / std::sqrt(norm_int);
    const double r = 1.0 / std::sqrt(2.0);
    return {std::complex<double>(amp * r, 0.0), std::complex<double>(0.0, q_t * amp * r)};
}

}  // namespace jrlat
