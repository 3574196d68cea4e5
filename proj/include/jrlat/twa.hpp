#pragma once

#include <functional>
#include <optional>

#include "adiabatic.hpp"
#include "dynamics.hpp"
#include "fermions.hpp"
#include "fit.hpp"
#include "modes.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace jrlat {

enum class FermionMode { unitary, adiabatic };

struct ExperimentConfig {
    LatticeSpec spec;
    FermionParams fparams;
    WignerSpec wigner;
    double dt = 0.01;
    double t_max = 1.0;
    int record_stride = 10;
    int n_traj = 1;
    std::uint64_t seed = 1;
    FermionMode fermion_mode = FermionMode::unitary;
    ZeroModeOccupation zero_mode = ZeroModeOccupation::one;
    bool pair_background = false;  // zero_mode applies only to a kink-antikink background
    bool strang = false;
    int exclusion = 3;
    int threads = 1;
    bool record_invariants = false;

    long steps() const { return std::lround(t_max / dt); }
    bool coupled() const { return fparams.g != 0.0; }

    void validate() const
    {
        spec.validate();
        fparams.validate();
        if (n_traj < 1) throw PhysicsError("ExperimentConfig: n_traj must be >= 1");
        if (!(dt > 0)) throw PhysicsError("ExperimentConfig: dt must be > 0");
        if (!(t_max >= 0)) throw PhysicsError("ExperimentConfig: t_max must be >= 0");
        if (record_stride < 1) throw PhysicsError("ExperimentConfig: record_stride must be >= 1");
        if (int(wigner.basis.omega_sq.size()) != spec.N) throw PhysicsError("ExperimentConfig: Wigner basis size differs from N");
    }
};

struct TrajectoryRecord {
    Vec times;
    std::vector<Vec> phi, energy, rho, dq, condensate;
    Vec trace_deviation, idempotency;  // filled when record_invariants is set
};

using RecordHook = std::function<void(double t, const ScalarState& s, const Vec& c_diag)>;

namespace detail {

inline void record_sample(const ExperimentConfig& cfg, double t, const ScalarState& s, const Vec& cd,
                          const FermionOrbitals* orb, TrajectoryRecord& rec)
{
    rec.times.push_back(t);
    rec.phi.push_back(s.phi);
    rec.energy.push_back(energy_density(cfg.spec, s, cfg.fparams.g, &cd));
    Vec rho = unit_cell_charge(cd);
    rec.dq.push_back(accumulated_charge(rho, cfg.exclusion));
    rec.rho.push_back(std::move(rho));
    rec.condensate.push_back(scalar_condensate(cd));
    if (cfg.record_invariants && orb) {
        const CorrelationInvariants inv = correlation_invariants(orb->correlation(), orb->n_filled());
        rec.trace_deviation.push_back(inv.trace_deviation);
        rec.idempotency.push_back(inv.idempotency);
    }
}

inline int initial_filling(const ExperimentConfig& cfg, const Vec& phi)
{
    if (!cfg.pair_background) return default_filling(cfg.spec.N);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    GaugeEigensystem ge;
    gauge_eigensystem(phi, cfg.fparams, ge, solver, false);
    return pair_filling(Vec(ge.eps.data(), ge.eps.data() + ge.eps.size()), cfg.zero_mode);
}

}  // namespace detail

/// Coupled scalar / fermionic-Gaussian-state trajectory.
/// Lie-Trotter order: Verlet step of the scalar field with the staggered force from C(t), then the
/// exact fermion step over dt with h(Phi(t+dt)). With `strang` the fermion step is split in two
/// halves around the scalar step.
inline TrajectoryRecord run_trajectory(const ExperimentConfig& cfg, const ScalarState& sample,
                                       const RecordHook& hook = {})
{
    cfg.validate();
    sample.validate(cfg.spec.N);
    const int N = cfg.spec.N;
    const double g = cfg.fparams.g;
    ScalarState s = sample;
    std::optional<FermionOrbitals> orb;
    FermionParams fp = cfg.fparams;
    orb.emplace(s.phi, fp, detail::initial_filling(cfg, s.phi));
    Vec cd = orb->density();

    Vec staggered(N, 0.0);
    auto refresh_force = [&] {
        for (int n = 0; n < N; ++n) staggered[n] = -g * cfg.spec.parity(n) * cd[n];
    };
    ForceProvider force = [&](double, const ScalarState&, Vec& f) { f = staggered; };
    auto fermion_step = [&](double h) {
        if (cfg.fermion_mode == FermionMode::unitary)
            orb->step(s.phi, h);
        else
            orb->project_ground(s.phi);
        cd = orb->density();
    };

    TrajectoryRecord rec;
    auto record = [&](double t) {
        detail::record_sample(cfg, t, s, cd, &*orb, rec);
        if (hook) hook(t, s, cd);
    };
    record(0.0);
    StepWorkspace ws;
    const long steps = cfg.steps();
    for (long k = 1; k <= steps; ++k) {
        const double t = (k - 1) * cfg.dt;
        if (cfg.coupled()) {
            if (cfg.strang) fermion_step(0.5 * cfg.dt);
            refresh_force();
            step_inplace(s, cfg.spec, cfg.dt, 0.0, t, &force, ws);
            fermion_step(cfg.strang ? 0.5 * cfg.dt : cfg.dt);
        } else {
            step_inplace(s, cfg.spec, cfg.dt, 0.0, t, nullptr, ws);
        }
        if (k % cfg.record_stride == 0) record(k * cfg.dt);
    }
    return rec;
}

struct ObservableStats {
    std::vector<Vec> mean, se;
};

struct EnsembleResult {
    Vec times;
    ObservableStats phi, energy, rho, dq, condensate;
    int n_traj = 0;
    double max_trace_deviation = 0.0;
    double max_idempotency = 0.0;
};

namespace detail {

/// Welford accumulation, fed in trajectory-index order.
struct Accumulator {
    std::vector<Vec> mean, m2;

    void add(const std::vector<Vec>& x, int count)
    {
        if (mean.empty()) {
            mean.assign(x.size(), Vec());
            m2.assign(x.size(), Vec());
            for (std::size_t t = 0; t < x.size(); ++t) {
                mean[t].assign(x[t].size(), 0.0);
                m2[t].assign(x[t].size(), 0.0);
            }
        }
        for (std::size_t t = 0; t < x.size(); ++t)
            for (std::size_t i = 0; i < x[t].size(); ++i) {
                const double d = x[t][i] - mean[t][i];
                mean[t][i] += d / count;
                m2[t][i] += d * (x[t][i] - mean[t][i]);
            }
    }

    ObservableStats finish(int count) const
    {
        ObservableStats s;
        s.mean = mean;
        s.se = m2;
        for (auto& row : s.se)
            for (double& v : row) v = count > 1 ? std::sqrt(v / (count - 1) / count) : 0.0;
        return s;
    }
};

}  // namespace detail

using TrajectoryCallback = std::function<void(int index, const TrajectoryRecord& rec)>;

/// Ensemble over counter-based RNG streams (seed, index). Trajectories run in chunks on the worker
/// pool and are reduced strictly in index order, so the result does not depend on the thread count.
inline EnsembleResult run_ensemble(const ExperimentConfig& cfg, const TrajectoryCallback& on_trajectory = {},
                                   const std::function<RecordHook(int)>& make_hook = {})
{
    cfg.validate();
    detail::Accumulator a_phi, a_energy, a_rho, a_dq, a_cond;
    EnsembleResult out;
    const int chunk = std::max(8, 2 * resolve_threads(cfg.threads));
    std::vector<TrajectoryRecord> buf;
    int done = 0;
    for (int start = 0; start < cfg.n_traj; start += chunk) {
        const int count = std::min(chunk, cfg.n_traj - start);
        buf.assign(count, TrajectoryRecord());
        try {
            parallel_for(count, cfg.threads, [&](int j) {
                CounterRng rng(cfg.seed, std::uint64_t(start + j));
                const ScalarState sample = sample_initial(cfg.wigner, rng);
                buf[j] = run_trajectory(cfg, sample, make_hook ? make_hook(start + j) : RecordHook{});
            });
        } catch (const std::exception& e) {
            throw Error(std::string("run_ensemble: trajectory in chunk starting at ") + std::to_string(start) +
                        " failed: " + e.what());
        }
        for (int j = 0; j < count; ++j) {
            const TrajectoryRecord& r = buf[j];
            ++done;
            if (out.times.empty()) out.times = r.times;
            a_phi.add(r.phi, done);
            a_energy.add(r.energy, done);
            a_rho.add(r.rho, done);
            a_dq.add(r.dq, done);
            a_cond.add(r.condensate, done);
            for (double v : r.trace_deviation) out.max_trace_deviation = std::max(out.max_trace_deviation, v);
            for (double v : r.idempotency) out.max_idempotency = std::max(out.max_idempotency, v);
            if (on_trajectory) on_trajectory(start + j, r);
        }
    }
    out.n_traj = done;
    out.phi = a_phi.finish(done);
    out.energy = a_energy.finish(done);
    out.rho = a_rho.finish(done);
    out.dq = a_dq.finish(done);
    out.condensate = a_cond.finish(done);
    return out;
}

/// Relaxed link-centred kink plus its harmonic Wigner state; optionally a frozen Goldstone mode
/// carrying mean momentum p_bar.
struct KinkSetup {
    ScalarState background;
    ModeBasis basis;
    WignerSpec wigner;
};

inline KinkSetup kink_setup(const LatticeSpec& spec, bool freeze_goldstone = false, double p_bar = 0.0,
                            double center = 0.5)
{
    KinkSetup k;
    k.background = relaxed_kink(spec, {1, center, spec.xi0() / spec.a});
    k.basis = normal_modes(k.background, spec);
    std::set<int> frozen;
    if (freeze_goldstone) frozen.insert(0);
    k.wigner = WignerSpec::ground_state(k.background, k.basis, spec, frozen);
    k.wigner.mean_p[0] = p_bar;
    return k;
}

/// Kink and antikink centres from the zero crossings; separation 0 when the pair is not resolved.
inline double pair_separation(const Vec& phi, int exclusion = 3)
{
    const auto cr = zero_crossings(phi, exclusion);
    double xk = 0, xa = 0;
    bool hk = false, ha = false;
    for (const auto& c : cr)
        if (c.direction > 0 && !hk) xk = c.x, hk = true;
    for (auto it = cr.rbegin(); it != cr.rend(); ++it)
        if (it->direction < 0 && !ha) xa = it->x, ha = true;
    return (hk && ha && xa > xk) ? xa - xk : 0.0;
}

enum class CollisionOutcome { reflection, bion, mixed };

inline const char* to_string(CollisionOutcome o)
{
    switch (o) {
    case CollisionOutcome::reflection: return "reflection";
    case CollisionOutcome::bion: return "bion";
    default: return "mixed";
    }
}

/// reflection: final separation > initial + 2a; bion: max over the final third < initial.
inline CollisionOutcome classify_separation(const Vec& sep, double a = 1.0)
{
    if (sep.size() < 3) return CollisionOutcome::mixed;
    const double s0 = sep.front();
    if (sep.back() > s0 + 2.0 * a) return CollisionOutcome::reflection;
    const std::size_t from = sep.size() - sep.size() / 3;
    double mx = 0.0;
    for (std::size_t i = from; i < sep.size(); ++i) mx = std::max(mx, sep[i]);
    return mx < s0 ? CollisionOutcome::bion : CollisionOutcome::mixed;
}

struct PairSetup {
    ScalarState background;
    ModeBasis basis;
    int even_mode = 0, odd_mode = 1;
    WignerSpec wigner;
};

/// Kink-antikink background at separation d (constrained relaxation), its modes, and the Wigner
/// state with both Goldstone modes frozen. The even mode is oriented so that a positive amplitude
/// brings the pair together; the mean momentum along it is -p_bar.
inline PairSetup pair_setup(const LatticeSpec& spec, double d, double p_bar, bool fluctuations)
{
    PairSetup ps;
    const double xi = spec.xi0() / spec.a;
    ScalarState bg = kink_antikink_profile(spec, d, xi);
    try {
        RelaxOptions ro;
        ro.frozen_directions = lowest_modes(bg, spec, 2);
        bg = relax(bg, spec, 0.2, 1e-9, 400000, ro);
    } catch (const ConvergenceError&) {
    }
    ps.background = bg;
    ps.basis = normal_modes(bg, spec);
    const int N = spec.N;
    const int c = spec.center();
    auto parity = [&](int j) {
        double s = 0, t = 0;
        for (int n = 0; n < N; ++n) {
            const int m = 2 * c - n;
            t += ps.basis.modes(n, j) * ps.basis.modes(n, j);
            if (m >= 0 && m < N) s += ps.basis.modes(n, j) * ps.basis.modes(m, j);
        }
        return s / t;
    };
    if (parity(0) >= parity(1)) {
        ps.even_mode = 0;
        ps.odd_mode = 1;
    } else {
        ps.even_mode = 1;
        ps.odd_mode = 0;
    }
    // orient: approaching means the separation shrinks, i.e. overlap with -dPhi/dd is positive
    const ScalarState plus = kink_antikink_profile(spec, d + 0.5, xi), minus = kink_antikink_profile(spec, d - 0.5, xi);
    double ov = 0;
    for (int n = 0; n < N; ++n) ov -= (plus.phi[n] - minus.phi[n]) * ps.basis.modes(n, ps.even_mode);
    if (ov < 0) ps.basis.modes.col(ps.even_mode) *= -1.0;

    std::set<int> frozen;
    if (fluctuations) {
        frozen = {ps.even_mode, ps.odd_mode};
    } else {
        for (int v = 0; v < N; ++v) frozen.insert(v);
    }
    ps.wigner = WignerSpec::ground_state(ps.background, ps.basis, spec, frozen);
    ps.wigner.mean_p[ps.even_mode] = -p_bar;
    return ps;
}

struct CollisionResult {
    EnsembleResult ensemble;
    std::vector<CollisionOutcome> outcomes;
    std::vector<Vec> separations;  // per trajectory, at the record times
    Vec mean_separation;           // from the ensemble-mean field
    CollisionOutcome mean_outcome = CollisionOutcome::mixed;
    int reflections = 0, bions = 0, mixed = 0;
};

/// Kink-antikink collision ensemble; cfg.wigner is replaced by the pair Wigner state.
inline CollisionResult collision_experiment(ExperimentConfig cfg, double d, double p_bar, bool fluctuations)
{
    const PairSetup ps = pair_setup(cfg.spec, d, p_bar, fluctuations);
    cfg.wigner = ps.wigner;
    cfg.pair_background = true;
    CollisionResult res;
    res.separations.assign(cfg.n_traj, Vec());
    auto on_traj = [&](int idx, const TrajectoryRecord& r) {
        Vec sep;
        for (const Vec& phi : r.phi) sep.push_back(pair_separation(phi, cfg.exclusion));
        const CollisionOutcome o = classify_separation(sep, cfg.spec.a);
        res.outcomes.push_back(o);
        res.separations[idx] = std::move(sep);
        if (o == CollisionOutcome::reflection) ++res.reflections;
        else if (o == CollisionOutcome::bion) ++res.bions;
        else ++res.mixed;
    };
    res.ensemble = run_ensemble(cfg, on_traj);
    for (const Vec& phi : res.ensemble.phi.mean) res.mean_separation.push_back(pair_separation(phi, cfg.exclusion));
    res.mean_outcome = classify_separation(res.mean_separation, cfg.spec.a);
    return res;
}


/// Index of the first record where the pair is no longer resolved (separation 0); size() if never.
inline std::size_t collision_index(const Vec& sep)
{
    std::size_t i = 0;
    while (i < sep.size() && sep[i] > 0) ++i;
    return i;
}

namespace detail {

inline double slope(const Vec& x, const Vec& y)
{
    const double n = double(x.size());
    if (x.size() < 2) return std::nan("");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    return sxx > 0 ? sxy / sxx : std::nan("");
}

}  // namespace detail

/// Speed of each soliton during the approach: -(1/2) d(separation)/dt over the records before the
/// separation halves.
inline double approach_speed(const Vec& times, const Vec& sep)
{
    Vec t, s;
    for (std::size_t i = 0; i < sep.size() && sep[i] > 0.5 * sep.front(); ++i) t.push_back(times[i]), s.push_back(sep[i]);
    return -0.5 * detail::slope(t, s);
}

struct FrontTrack {
    Vec times;       // relative to the collision record
    Vec half_width;  // half the extent of the region where Delta Q changed by more than the threshold
    double speed = std::nan("");
};

/// Charge fronts after the collision: at each record after t_c, the outermost cells where
/// |Delta Q_n(t) - Delta Q_n(t_c)| exceeds `threshold`. The speed is the least-squares slope of the
/// half-width over the records where a front exists, up to its first arrival within `edge_margin`
/// cells of a chain end.
inline FrontTrack charge_front_speed(const Vec& times, const std::vector<Vec>& dq, const Vec& x, std::size_t collision,
                                     double threshold = 1.0 / 16.0, double edge_margin = 15.0)
{
    FrontTrack f;
    if (collision >= dq.size()) return f;
    double xmax = 0;
    for (double v : x) xmax = std::max(xmax, std::abs(v));
    Vec t, w;
    bool reached_edge = false;
    for (std::size_t i = collision; i < dq.size(); ++i) {
        double xl = 0, xr = 0;
        bool any = false;
        for (std::size_t n = 0; n < x.size(); ++n)
            if (std::abs(dq[i][n] - dq[collision][n]) > threshold) {
                xl = any ? std::min(xl, x[n]) : x[n];
                xr = any ? std::max(xr, x[n]) : x[n];
                any = true;
            }
        const double hw = any ? 0.5 * (xr - xl) : 0.0;
        f.times.push_back(times[i] - times[collision]);
        f.half_width.push_back(hw);
        if (any && std::max(std::abs(xl), std::abs(xr)) >= xmax - edge_margin) reached_edge = true;
        if (hw > 0 && !reached_edge) {
            t.push_back(times[i]);
            w.push_back(hw);
        }
    }
    f.speed = detail::slope(t, w);
    return f;
}

}  // namespace jrlat
