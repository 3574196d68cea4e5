#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "core.hpp"

namespace jrlat::ions {

/// Trap geometry. SI units by default (hbar in J s); any consistent unit system works.
struct TrapParams {
    double omega_x = 0, omega_y = 0, omega_z = 0;
    int N_ions = 0;
    double a = 0;     // ion spacing
    double ell = 0;   // Coulomb length, ell^3 = e^2 / (4 pi eps0 m_a omega_x^2)
    double m_a = 0;
    double hbar = 1.054571817e-34;

    std::vector<std::string> validate() const
    {
        if (!(omega_x > 0 && omega_y > 0 && omega_z > 0)) throw PhysicsError("TrapParams: trap frequencies must be > 0");
        if (N_ions < 2) throw PhysicsError("TrapParams: N_ions must be >= 2");
        if (!(a > 0 && ell > 0 && m_a > 0 && hbar > 0)) throw PhysicsError("TrapParams: a, ell, m_a, hbar must be > 0");
        std::vector<std::string> warnings;
        if (!(omega_y > omega_z && omega_z >= omega_x))
            warnings.push_back("trap frequencies do not follow omega_y >> omega_z >~ omega_x");
        return warnings;
    }
};

struct LaserParams {
    double Omega_L = 0, delta_L = 0, Delta_k = 0;               // spin-spin (MS) beams
    double Omega_tilde = 0, Delta_k_tilde = 0, z0 = 0, q_z = 0;  // dipole-force beams
    double eta_x = 0;                                            // Lamb-Dicke parameter
};

struct PartialSums {
    double eta, zeta;
};

/// eta_N(s) = sum_{r<=N/2} (-1)^{r+1} / r^s and zeta_N(s) = sum_{r<=N/2} 1 / r^s, summed from the tail.
inline PartialSums eta_zeta(int N, double s)
{
    if (N < 2) throw PhysicsError("eta_zeta: N must be >= 2");
    long double e = 0, z = 0;
    for (long r = N / 2; r >= 1; --r) {
        const long double t = std::pow((long double)r, -(long double)s);
        z += t;
        e += (r % 2 ? t : -t);
    }
    return {double(e), double(z)};
}

inline double coulomb_ratio(const TrapParams& t) { return std::pow(t.ell / t.a, 3); }

/// c_b^2 = a^2 omega_x^2 (ell/a)^3 eta_N(1)
inline double sound_velocity(const TrapParams& t)
{
    t.validate();
    return std::sqrt(t.a * t.a * t.omega_x * t.omega_x * coulomb_ratio(t) * eta_zeta(t.N_ions, 1).eta);
}

/// omega_z^2 - (7/2) omega_x^2 (ell/a)^3 zeta_N(3), the squared zigzag gap frequency m0^2 c_b^4 / hbar^2.
inline double gap_sq(const TrapParams& t)
{
    return t.omega_z * t.omega_z - 3.5 * t.omega_x * t.omega_x * coulomb_ratio(t) * eta_zeta(t.N_ions, 3).zeta;
}

inline double bare_mass(const TrapParams& t)
{
    const double cb = sound_velocity(t);
    return t.hbar * t.hbar / (cb * cb * cb * cb) * gap_sq(t);
}

/// kappa_{x,c} = 2 a^3 / (7 ell^3 zeta_N(3)), with kappa_x = (omega_x / omega_z)^2.
inline double critical_ratio(const TrapParams& t)
{
    t.validate();
    return 2.0 * t.a * t.a * t.a / (7.0 * t.ell * t.ell * t.ell * eta_zeta(t.N_ions, 3).zeta);
}

inline double rigidity(const TrapParams& t) { return t.m_a * t.a * sound_velocity(t) / t.hbar; }

/// lambda = 243 zeta_N(5) m_a^3 omega_x^2 ell^3 / (4 K^4), K = m_a a c_b / hbar
inline double quartic_coupling(const TrapParams& t)
{
    const double K = rigidity(t);
    return 243.0 * eta_zeta(t.N_ions, 5).zeta * std::pow(t.m_a, 3) * t.omega_x * t.omega_x * std::pow(t.ell, 3) /
           (4.0 * K * K * K * K);
}

/// omega(k) of the zigzag branch: omega_z sqrt(1 - kappa_x (ell/a)^3 sum_r 4/r^3 sin^2(k a r / 2)).
inline double ion_dispersion(const TrapParams& t, double k)
{
    const double kappa = (t.omega_x / t.omega_z) * (t.omega_x / t.omega_z);
    long double s = 0;
    for (long r = t.N_ions / 2; r >= 1; --r) {
        const long double sn = std::sin((long double)(k * t.a) * r / 2);
        s += 4.0L * sn * sn / ((long double)r * r * r);
    }
    const double w2 = t.omega_z * t.omega_z * (1.0 - kappa * coulomb_ratio(t) * double(s));
    return std::sqrt(std::max(w2, 0.0)) * (w2 < 0 ? -1.0 : 1.0);
}

/// Lattice units (a = c_b = hbar = 1): m0^2 -> (gap a / c_b)^2, lambda -> lambda a^2 c_b / hbar^3.
struct LatticeCouplings {
    double m0_sq, lam;
};

inline LatticeCouplings lattice_couplings(const TrapParams& t)
{
    const double cb = sound_velocity(t);
    return {gap_sq(t) * t.a * t.a / (cb * cb), quartic_coupling(t) * t.a * t.a * cb / std::pow(t.hbar, 3)};
}

/// lambda_C = 1 / (m0^2 c_b^4 - delta_L^2) (hbar = 1).
inline double compton_length(const TrapParams& t, const LaserParams& l)
{
    const double den = gap_sq(t) - l.delta_L * l.delta_L;
    if (den == 0.0) throw PhysicsError("compton_length: detuning equals the zigzag gap");
    return 1.0 / den;
}

/// J_nl with the bracket evaluated dimensionless: distances in units of ell, lambda_C read as a length in
/// units of ell, and |lambda_C| as the decay length. Prefactor J0 = 2 Omega_L^2 eta_x^2 / (omega_x eta_N(1)).
inline double spin_couplings(const TrapParams& t, const LaserParams& l, int n, int m)
{
    t.validate();
    if (n == m) return 0.0;
    const double wy2 = t.omega_y * t.omega_y - l.delta_L * l.delta_L;
    if (wy2 == 0.0) throw PhysicsError("spin_couplings: delta_L equals omega_y");
    const double etaN = eta_zeta(t.N_ions, 1).eta;
    const double J0 = 2.0 * l.Omega_L * l.Omega_L * l.eta_x * l.eta_x / (t.omega_x * etaN);
    const double r = std::abs(n - m) * t.a / t.ell;
    const double lc = compton_length(t, l);
    const double dip = std::pow(t.omega_x, 4) * etaN / (wy2 * wy2) / (r * r * r);
    const double sign = ((n - m) % 2 == 0) ? 1.0 : -1.0;
    const double ex = sign * lc * std::pow(t.a / t.ell, 2) * std::exp(-r / std::abs(lc));
    return J0 * (dip - ex);
}

/// c_f = 2 a sum_{r>0} (2r-1) (-1)^{r-1} J_{n,n+2r-1}; J_odd[r-1] holds J at range 2r-1.
inline double fermi_velocity(const Vec& J_odd, double a = 1.0)
{
    long double s = 0;
    for (std::size_t i = J_odd.size(); i-- > 0;) {
        const long r = long(i) + 1;
        s += (long double)(2 * r - 1) * (r % 2 ? 1 : -1) * J_odd[i];
    }
    return 2.0 * a * double(s);
}

/// Bessel J0: power series in extended precision for |x| <= 17, Hankel asymptotic expansion beyond.
inline double bessel_j0(double x)
{
    x = std::abs(x);
    if (x <= 17.0) {
        const long double q = -(long double)x * x / 4.0L;
        long double term = 1.0L, sum = 1.0L;
        for (int k = 1; k < 200; ++k) {
            term *= q / ((long double)k * k);
            sum += term;
            if (std::abs(term) < 1e-22L * std::max(1.0L, std::abs(sum))) break;
        }
        return double(sum);
    }
    // P, Q series truncated at their smallest term
    const double z = 8.0 * x;
    double P = 1.0, Q = 0.0, term = 1.0, prev = 1e300;
    for (int k = 1; k < 60; ++k) {
        term *= (2.0 * k - 1.0) * (2.0 * k - 1.0) / (k * z);
        if (term > prev) break;
        prev = term;
        const double sgn = ((k + 1) / 2) % 2 ? -1.0 : 1.0;  // k = 1, 2: -; k = 3, 4: +
        if (k % 2) Q += sgn * term;
        else P += sgn * term;
    }
    const double chi = x - std::numbers::pi / 4.0;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (P * std::cos(chi) - Q * std::sin(chi));
}

/// g = (Omega_tilde / 2) J0(q_z Delta_k_tilde z0 / 2) cos(Delta_k_tilde z0)
inline double yukawa(const LaserParams& l)
{
    const double phase = l.Delta_k_tilde * l.z0;
    return 0.5 * l.Omega_tilde * bessel_j0(0.5 * l.q_z * phase) * std::cos(phase);
}

}  // namespace jrlat::ions
