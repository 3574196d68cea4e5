#pragma once

#include <algorithm>
#include <functional>
#include <optional>

#include "lattice.hpp"

namespace jrlat {

/// Extra per-site force f_n(t, state), e.g. the staggered fermion back-reaction.
using ForceProvider = std::function<void(double t, const ScalarState& s, Vec& f)>;

struct IntegratorConfig {
    double dt = 0.01;
    double kappa = 0.0;
    long steps = 0;

    void validate() const
    {
        if (!(dt > 0)) throw PhysicsError("IntegratorConfig: dt must be > 0");
        if (!(kappa >= 0)) throw PhysicsError("IntegratorConfig: kappa must be >= 0");
        if (steps < 0) throw PhysicsError("IntegratorConfig: steps must be >= 0");
    }
};

/// Conservative lambda-phi^4 force with zero-gradient free ends.
inline void scalar_force(const LatticeSpec& spec, const Vec& phi, Vec& out)
{
    const int N = int(phi.size());
    out.resize(N);
    const double ia2 = 1.0 / (spec.a * spec.a);
    for (int n = 0; n < N; ++n) {
        const double p = phi[n];
        const double left = n > 0 ? phi[n - 1] : p;
        const double right = n + 1 < N ? phi[n + 1] : p;
        out[n] = (right - 2.0 * p + left) * ia2 - spec.m0_sq * p - spec.lam * p * p * p;
    }
}

/// Band top of the linearised chain around a field of amplitude Phi_max.
inline double band_top(const LatticeSpec& spec, double phi_max)
{
    const double curv = std::max({std::abs(spec.m0_sq), std::abs(spec.m0_sq + 3 * spec.lam * phi_max * phi_max), 0.0});
    return std::sqrt(4.0 / (spec.a * spec.a) + curv);
}

struct StepWorkspace {
    Vec force, extra;
};

/// One velocity-Verlet step in place. Damping enters both half-kicks, the second one implicitly.
inline void step_inplace(ScalarState& s, const LatticeSpec& spec, double dt, double kappa, double t,
                         const ForceProvider* extra, StepWorkspace& ws)
{
    const int N = spec.N;
    scalar_force(spec, s.phi, ws.force);
    if (extra && *extra) {
        ws.extra.assign(N, 0.0);
        (*extra)(t, s, ws.extra);
        for (int n = 0; n < N; ++n) ws.force[n] += ws.extra[n];
    }
    const double h = 0.5 * dt;
    for (int n = 0; n < N; ++n) {
        s.pi[n] += h * (ws.force[n] - kappa * s.pi[n]);
        s.phi[n] += dt * s.pi[n];
    }
    scalar_force(spec, s.phi, ws.force);
    if (extra && *extra) {
        ws.extra.assign(N, 0.0);
        (*extra)(t + dt, s, ws.extra);
        for (int n = 0; n < N; ++n) ws.force[n] += ws.extra[n];
    }
    const double damp = 1.0 / (1.0 + h * kappa);
    bool finite = true;
    for (int n = 0; n < N; ++n) {
        s.pi[n] = (s.pi[n] + h * ws.force[n]) * damp;
        finite = finite && std::isfinite(s.pi[n]) && std::isfinite(s.phi[n]);
    }
    if (!finite) throw PhysicsError("step: non-finite field after step at t=" + std::to_string(t + dt));
}

inline ScalarState step(const ScalarState& state, const LatticeSpec& spec, const IntegratorConfig& cfg,
                        const ForceProvider& force = {}, double t = 0.0)
{
    cfg.validate();
    state.validate(spec.N);
    ScalarState s = state;
    StepWorkspace ws;
    step_inplace(s, spec, cfg.dt, cfg.kappa, t, &force, ws);
    return s;
}

struct RelaxOptions {
    double dt = 0.0;  // 0 selects min(0.1, 0.4 / band top)
    /// Keep the field odd under reflection about this position (site or link, relative to midpoint).
    std::optional<double> pin_center;
    /// Orthonormal directions removed from the momentum and the force each step.
    std::vector<Vec> frozen_directions;
};

namespace detail {

inline void antisymmetrize(Vec& v, int N, double center_x, int mid)
{
    // reflection n -> m with x_n + x_m = 2 center
    const double twice = 2.0 * center_x + 2.0 * mid;
    const long sum = std::lround(twice);
    for (int n = 0; n < N; ++n) {
        const long m = sum - n;
        if (m < 0 || m >= N) continue;
        if (m == n) {
            v[n] = 0.0;
        } else if (m > n) {
            const double odd = 0.5 * (v[n] - v[m]);
            v[n] = odd;
            v[m] = -odd;
        }
    }
}

inline void remove_directions(Vec& v, const std::vector<Vec>& dirs)
{
    for (const Vec& d : dirs) {
        double c = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) c += d[i] * v[i];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * d[i];
    }
}

}  // namespace detail

/// Damped relaxation to a stationary configuration.
inline ScalarState relax(const ScalarState& initial, const LatticeSpec& spec, double kappa = 0.2, double tol = 1e-10,
                         long max_steps = 2000000, const RelaxOptions& opt = {})
{
    spec.validate();
    initial.validate(spec.N);
    if (!(kappa > 0)) throw PhysicsError("relax: kappa must be > 0");
    const int N = spec.N;
    double phi_max = 0.0;
    for (double p : initial.phi) phi_max = std::max(phi_max, std::abs(p));
    const double dt = opt.dt > 0 ? opt.dt : std::min(0.1, 0.4 / band_top(spec, phi_max));
    if (opt.pin_center) {
        const double twice = 2.0 * *opt.pin_center;
        if (std::abs(twice - std::round(twice)) > 1e-12)
            throw PhysicsError("relax: pin_center must be a site or a link position");
    }
    for (const Vec& d : opt.frozen_directions)
        if (int(d.size()) != N) throw PhysicsError("relax: frozen direction has wrong length");

    ScalarState s = initial;
    const int mid = spec.center();
    auto constrain = [&](ScalarState& st) {
        if (opt.pin_center) {
            detail::antisymmetrize(st.phi, N, *opt.pin_center, mid);
            detail::antisymmetrize(st.pi, N, *opt.pin_center, mid);
        }
        if (!opt.frozen_directions.empty()) detail::remove_directions(st.pi, opt.frozen_directions);
    };
    ForceProvider extra;
    if (!opt.frozen_directions.empty()) {
        extra = [&](double, const ScalarState& st, Vec& f) {
            Vec F;
            scalar_force(spec, st.phi, F);
            Vec G = F;
            detail::remove_directions(G, opt.frozen_directions);
            for (int n = 0; n < N; ++n) f[n] = G[n] - F[n];
        };
    }
    constrain(s);
    StepWorkspace ws;
    Vec F;
    double residual = 0.0;
    for (long it = 0; it <= max_steps; ++it) {
        scalar_force(spec, s.phi, F);
        if (!opt.frozen_directions.empty()) detail::remove_directions(F, opt.frozen_directions);
        if (opt.pin_center) detail::antisymmetrize(F, N, *opt.pin_center, mid);
        residual = 0.0;
        for (int n = 0; n < N; ++n) residual = std::max({residual, std::abs(F[n]), std::abs(s.pi[n])});
        if (residual < tol) {
            std::fill(s.pi.begin(), s.pi.end(), 0.0);
            return s;
        }
        if (it == max_steps) break;
        step_inplace(s, spec, dt, kappa, it * dt, extra ? &extra : nullptr, ws);
        constrain(s);
    }
    throw ConvergenceError("relax: max_steps exceeded without convergence", residual);
}

/// Relaxed kink, held at its center when that is a site or a link.
inline ScalarState relaxed_kink(const LatticeSpec& spec, const SolitonProfile& prof, double kappa = 0.2,
                                double tol = 1e-10)
{
    RelaxOptions opt;
    const double twice = 2.0 * prof.center;
    if (std::abs(twice - std::round(twice)) < 1e-12) opt.pin_center = prof.center;
    return relax(kink_profile(spec, prof), spec, kappa, tol, 2000000, opt);
}

struct Trajectory {
    Vec times;
    std::vector<ScalarState> states;
    ScalarState final_state;
};

using Observer = std::function<void(double t, const ScalarState& s)>;

/// Repeated step(); observers and the stored record see every stride-th state including t=0.
inline Trajectory evolve(const ScalarState& initial, const LatticeSpec& spec, const IntegratorConfig& cfg,
                         const ForceProvider& force = {}, long stride = 1,
                         const std::vector<Observer>& observers = {}, bool store = true)
{
    cfg.validate();
    initial.validate(spec.N);
    if (stride < 1) throw PhysicsError("evolve: stride must be >= 1");
    Trajectory tr;
    ScalarState s = initial;
    StepWorkspace ws;
    auto record = [&](double t) {
        for (const auto& obs : observers) obs(t, s);
        if (store) {
            tr.times.push_back(t);
            tr.states.push_back(s);
        }
    };
    record(0.0);
    for (long k = 1; k <= cfg.steps; ++k) {
        step_inplace(s, spec, cfg.dt, cfg.kappa, (k - 1) * cfg.dt, force ? &force : nullptr, ws);
        if (k % stride == 0) record(k * cfg.dt);
    }
    tr.final_state = s;
    return tr;
}

}  // namespace jrlat
