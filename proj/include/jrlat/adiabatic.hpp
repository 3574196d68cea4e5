#pragma once

#include <cmath>

// pchip.hpp calls isnan unqualified on double
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>
#include <map>

#include "dynamics.hpp"
#include "fermions.hpp"
#include "modes.hpp"
#include "parallel.hpp"

namespace jrlat {

enum class Interpolation { monotone_cubic, linear };

/// Linearly interpolated zero crossings of phi (positions relative to the midpoint) and their direction.
struct Crossing {
    double x;
    int direction;  // +1 rising, -1 falling
};

inline std::vector<Crossing> zero_crossings(const Vec& phi, int exclusion = 0)
{
    std::vector<Crossing> out;
    const int N = int(phi.size());
    const int c = center_index(phi.size());
    for (int n = exclusion; n + 1 < N - exclusion; ++n) {
        const double a = phi[n], b = phi[n + 1];
        if (a < 0 && b >= 0) out.push_back({n + a / (a - b) - c, 1});
        else if (a > 0 && b <= 0) out.push_back({n + a / (a - b) - c, -1});
    }
    return out;
}

/// Relaxed profile evaluated at shifted coordinates phi_new(x) = phi(x - shift).
inline ScalarState translate_kink(const ScalarState& relaxed, double shift, const LatticeSpec& spec,
                                  Interpolation method = Interpolation::monotone_cubic, int exclusion = 3)
{
    const int N = spec.N;
    relaxed.validate(N);
    const double Phi0 = spec.Phi0();
    const double left = relaxed.phi.front() < 0 ? -Phi0 : Phi0;
    const double right = relaxed.phi.back() < 0 ? -Phi0 : Phi0;

    // boundary-exclusion check on the translated centre
    const auto cr = zero_crossings(relaxed.phi);
    if (!cr.empty()) {
        const double xc = cr.front().x + shift + spec.center();
        if (xc < exclusion || xc > N - 1 - exclusion)
            throw PhysicsError("translate_kink: shift moves the kink into the boundary-exclusion zone");
    }

    ScalarState out(N);
    const double rs = std::round(shift);
    if (std::abs(shift - rs) < 1e-14) {
        const long s = long(rs);
        for (int n = 0; n < N; ++n) {
            const long m = n - s;
            out.phi[n] = m < 0 ? left : (m >= N ? right : relaxed.phi[m]);
        }
        return out;
    }

    const int pad = int(std::ceil(std::abs(shift))) + 2;
    std::vector<double> xs, ys;
    for (int n = -pad; n < N + pad; ++n) {
        xs.push_back(n);
        ys.push_back(n < 0 ? left : (n >= N ? right : relaxed.phi[n]));
    }
    if (method == Interpolation::linear) {
        for (int n = 0; n < N; ++n) {
            const double t = n - shift;
            const int i = int(std::floor(t));
            const double f = t - i;
            out.phi[n] = (1 - f) * ys[i + pad] + f * ys[i + 1 + pad];
        }
        return out;
    }
    boost::math::interpolators::pchip<std::vector<double>> spline(std::move(xs), std::move(ys));
    for (int n = 0; n < N; ++n) out.phi[n] = spline(n - shift);
    return out;
}

struct ScanResult {
    Vec positions;
    Vec values;
    Vec scalar_part;
    Vec fermion_part;
    double reference = 0.0;  // minimum of values; comparisons use differences
    std::map<std::string, double> metadata;
};

struct ScanOptions {
    Interpolation interpolation = Interpolation::monotone_cubic;
    int exclusion = 3;
    int threads = 1;
    double kappa = 0.2;
    double tol = 1e-10;
};

inline void check_grid(const Vec& grid, const char* who)
{
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw PhysicsError(std::string(who) + ": positions must be strictly increasing");
}

/// Yukawa expectation a sum g (-1)^n phi_n C_nn.
inline double yukawa_energy(const LatticeSpec& spec, const Vec& phi, double g, const Vec& c_diag)
{
    double s = 0.0;
    for (int n = 0; n < spec.N; ++n) s += g * spec.parity(n) * phi[n] * c_diag[n];
    return spec.a * s;
}

inline Vec ground_density(const Vec& phi, const FermionParams& p, int n_filled = -1)
{
    FermionOrbitals orb(phi, p, n_filled < 0 ? default_filling(int(phi.size())) : n_filled);
    return orb.density();
}

/// Peierls-Nabarro scan: static energy of the relaxed link-centred kink translated to each x0.
inline ScanResult pn_scan(const LatticeSpec& spec, const FermionParams& p, const Vec& x0_grid, bool with_fermions,
                          const ScanOptions& opt = {})
{
    check_grid(x0_grid, "pn_scan");
    if (with_fermions) p.validate();
    const ScalarState ref = relaxed_kink(spec, {1, 0.5, spec.xi0() / spec.a}, opt.kappa, opt.tol);
    const int M = int(x0_grid.size());
    ScanResult r;
    r.positions = x0_grid;
    r.values.assign(M, 0.0);
    r.scalar_part.assign(M, 0.0);
    r.fermion_part.assign(M, 0.0);
    parallel_for(M, opt.threads, [&](int i) {
        const ScalarState s = translate_kink(ref, x0_grid[i] - 0.5, spec, opt.interpolation, opt.exclusion);
        r.scalar_part[i] = total_energy(spec, s);
        if (with_fermions) r.fermion_part[i] = yukawa_energy(spec, s.phi, p.g, ground_density(s.phi, p));
        r.values[i] = r.scalar_part[i] + r.fermion_part[i];
    });
    r.reference = *std::min_element(r.values.begin(), r.values.end());
    r.metadata = {{"N", spec.N}, {"m0_sq", spec.m0_sq}, {"lam", spec.lam}, {"J", p.J}, {"g", with_fermions ? p.g : 0.0}};
    return r;
}

struct PNBarrier {
    double barrier = 0.0;
    bool doubled = false;
    double sub_even = 0.0;  // global maximum minus the deepest local minimum on an even link [x, x+1)
    double sub_odd = 0.0;   // same for odd links
};

inline PNBarrier pn_barrier(const ScanResult& scan, double distinct_tol = 1e-8)
{
    const auto& v = scan.values;
    if (v.size() < 3) throw PhysicsError("pn_barrier: scan too short");
    const double mn = *std::min_element(v.begin(), v.end());
    const double mx = *std::max_element(v.begin(), v.end());
    PNBarrier b;
    b.barrier = mx - mn;
    // sub-barriers are measured from each local minimum, grouped by the parity of the link below it
    bool have_even = false, have_odd = false;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (!(v[i] <= v[i - 1] && v[i] <= v[i + 1])) continue;
        const long k = long(std::floor(scan.positions[i]));
        const double h = mx - v[i];
        if (k % 2 == 0) {
            b.sub_even = have_even ? std::max(b.sub_even, h) : h;
            have_even = true;
        } else {
            b.sub_odd = have_odd ? std::max(b.sub_odd, h) : h;
            have_odd = true;
        }
    }
    b.doubled = have_even && have_odd && std::abs(b.sub_even - b.sub_odd) > distinct_tol * std::max(1.0, b.barrier);
    return b;
}

/// Leading Fourier harmonic (pi m0^2 / 3 lam) q (1 + q^2/m0^2) / sinh(pi q / m0) at q = 2 pi / a, with |m0|.
inline double pn_fourier_estimate(const LatticeSpec& spec)
{
    if (!spec.broken()) throw PhysicsError("pn_fourier_estimate: requires m0_sq < 0");
    const double m = std::sqrt(-spec.m0_sq);
    const double q = 2.0 * std::numbers::pi / spec.a;
    return std::numbers::pi * m * m / (3.0 * spec.lam) * q * (1.0 + q * q / (m * m)) / std::sinh(std::numbers::pi * q / m);
}

/// epsilon_{N_f} of h(phi(x0)) along the translated relaxed kink.
inline ScanResult zero_mode_energy_scan(const LatticeSpec& spec, const FermionParams& p, const Vec& x0_grid,
                                        const ScanOptions& opt = {})
{
    check_grid(x0_grid, "zero_mode_energy_scan");
    p.validate();
    const ScalarState ref = relaxed_kink(spec, {1, 0.5, spec.xi0() / spec.a}, opt.kappa, opt.tol);
    const int M = int(x0_grid.size());
    ScanResult r;
    r.positions = x0_grid;
    r.values.assign(M, 0.0);
    const int nf = default_filling(spec.N);
    parallel_for(M, opt.threads, [&](int i) {
        const ScalarState s = translate_kink(ref, x0_grid[i] - 0.5, spec, opt.interpolation, opt.exclusion);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
        GaugeEigensystem ge;
        gauge_eigensystem(s.phi, p, ge, solver, false);
        r.values[i] = ge.eps[nf - 1];
    });
    r.scalar_part = r.values;
    r.fermion_part.assign(M, 0.0);
    r.reference = 0.0;
    r.metadata = {{"N", spec.N}, {"J", p.J}, {"g", p.g}};
    return r;
}

struct PairOptions : ScanOptions {
    bool relaxed = true;
    ZeroModeOccupation occupation = ZeroModeOccupation::one;
    double d_reference = 0.0;  // 0 selects N/2
    long max_relax_steps = 400000;
};

/// Two lowest elasticity modes of a background, orthonormal.
inline std::vector<Vec> lowest_modes(const ScalarState& bg, const LatticeSpec& spec, int count)
{
    const ModeBasis b = normal_modes(bg, spec);
    std::vector<Vec> out;
    for (int j = 0; j < count; ++j) out.emplace_back(b.modes.col(j).data(), b.modes.col(j).data() + spec.N);
    return out;
}

/// Kink-antikink interaction energy relative to the well-separated pair.
inline ScanResult kink_antikink_potential(const LatticeSpec& spec, const FermionParams& p, const Vec& d_grid,
                                          bool with_fermions, const PairOptions& opt = {})
{
    check_grid(d_grid, "kink_antikink_potential");
    if (with_fermions) p.validate();
    const double xi = spec.xi0() / spec.a;
    std::vector<char> fell_back(d_grid.size() + 1, 0);
    auto energy_at = [&](double d, std::size_t slot) {
        ScalarState s = kink_antikink_profile(spec, d, xi);
        if (opt.relaxed && d > 0) {
            RelaxOptions ro;
            ro.frozen_directions = lowest_modes(s, spec, 2);
            try {
                s = relax(s, spec, opt.kappa, std::max(opt.tol, 1e-8), opt.max_relax_steps, ro);
            } catch (const ConvergenceError&) {
                fell_back[slot] = 1;
                s = kink_antikink_profile(spec, d, xi);
            }
        }
        double e = total_energy(spec, s), ef = 0.0;
        if (with_fermions) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
            GaugeEigensystem ge;
            gauge_eigensystem(s.phi, p, ge, solver, false);
            Vec eps(ge.eps.data(), ge.eps.data() + spec.N);
            ef = yukawa_energy(spec, s.phi, p.g, ground_density(s.phi, p, pair_filling(eps, opt.occupation)));
        }
        return std::pair<double, double>(e, ef);
    };
    const double d_ref = opt.d_reference > 0 ? opt.d_reference : spec.N / 2.0;
    const auto [e_ref, f_ref] = energy_at(d_ref, d_grid.size());
    const int M = int(d_grid.size());
    ScanResult r;
    r.positions = d_grid;
    r.values.assign(M, 0.0);
    r.scalar_part.assign(M, 0.0);
    r.fermion_part.assign(M, 0.0);
    parallel_for(M, opt.threads, [&](int i) {
        const auto [e, f] = energy_at(d_grid[i], i);
        r.scalar_part[i] = e - e_ref;
        r.fermion_part[i] = f - f_ref;
        r.values[i] = r.scalar_part[i] + r.fermion_part[i];
    });
    r.reference = e_ref + f_ref;
    double nfb = 0;
    for (char c : fell_back) nfb += c;
    r.metadata = {{"N", spec.N}, {"J", p.J}, {"g", with_fermions ? p.g : 0.0}, {"d_reference", d_ref},
                  {"unrelaxed_points", nfb}};
    return r;
}

}  // namespace jrlat
