// Command-line driver: one subcommand per experiment, each writing a manifest plus CSV/JSONL tables.
#include <CLI11.hpp>
#include <iostream>

#include "jrlat/io.hpp"

namespace fs = std::filesystem;
using namespace jrlat;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<int> stride;
    std::optional<std::string> fermion_mode;
    std::optional<std::string> zero_mode;
    std::string out = "out";
    std::string input;
};

struct Context {
    std::string command;
    RunConfig cfg;
    fs::path out;
    std::string hash;
    RunManifest manifest;

    const LatticeSection& lattice() const
    {
        if (!cfg.lattice) throw ConfigError(command + ": config needs a [lattice] section");
        return *cfg.lattice;
    }
    LatticeSpec spec() const { return lattice().spec(); }
    const RunSection& run() const { return *cfg.run; }
    const WignerSection& wigner() const { return *cfg.wigner; }
    FermionParams fermions(bool required) const
    {
        if (!cfg.fermions) {
            if (required) throw ConfigError(command + ": config needs a [fermions] section");
            return {1.0, 0.0, 0.0};
        }
        return cfg.fermions->params();
    }
    bool coupled() const { return cfg.fermions && cfg.fermions->g > 0; }

    fs::path output(const std::string& name)
    {
        manifest.outputs.push_back(name);
        return out / name;
    }
};

Context make_context(const std::string& command, const Options& o, bool needs_config = true)
{
    Context c;
    c.command = command;
    if (needs_config || !o.config.empty()) {
        if (o.config.empty()) throw ConfigError(command + ": --config is required");
        c.cfg = parse_config(o.config);
    }
    if (!c.cfg.run) c.cfg.run = RunSection{};
    if (!c.cfg.wigner) c.cfg.wigner = WignerSection{};
    RunSection& r = *c.cfg.run;
    if (o.seed) r.seed = *o.seed;
    if (o.threads) r.threads = *o.threads;
    if (o.stride) r.stride = *o.stride;
    if (o.fermion_mode) r.fermion_mode = *o.fermion_mode;
    if (o.zero_mode) c.cfg.wigner->zero_mode = *o.zero_mode;
    parse_fermion_mode(r.fermion_mode);
    parse_zero_mode(c.cfg.wigner->zero_mode);
    c.cfg.validate();
    c.out = o.out;
    fs::create_directories(c.out);
    c.hash = config_hash(c.cfg, command);
    c.manifest.command = command;
    c.manifest.config_hash = c.hash;
    c.manifest.seed = r.seed;
    c.manifest.started = utc_timestamp();
    std::ofstream(c.output("config.ini")) << serialize(c.cfg);
    return c;
}

void finish(Context& c)
{
    c.manifest.finished = utc_timestamp();
    c.manifest.write(c.out);
    std::cout << "wrote " << c.manifest.outputs.size() << " tables and manifest.json to " << c.out.string() << "\n";
}

Vec make_grid(const RunSection& r)
{
    Vec g;
    const long n = std::lround((r.grid_max - r.grid_min) / r.grid_step);
    for (long i = 0; i <= n; ++i) g.push_back(r.grid_min + i * r.grid_step);
    return g;
}

ScanOptions scan_options(const RunSection& r)
{
    ScanOptions o;
    o.interpolation = r.interpolation == "linear" ? Interpolation::linear : Interpolation::monotone_cubic;
    o.exclusion = r.exclusion;
    o.threads = r.threads;
    o.kappa = r.kappa;
    return o;
}

void write_scan(Context& c, const std::string& name, const ScanResult& s, const std::string& pos)
{
    CsvWriter w(c.output(name), {pos, "value", "scalar", "fermion", "relative"}, c.hash);
    for (std::size_t i = 0; i < s.positions.size(); ++i)
        w.row(0.0, {s.positions[i], s.values[i], s.scalar_part[i], s.fermion_part[i], s.values[i] - s.reference});
    c.manifest.summary["reference"] = s.reference;
    for (const auto& [k, v] : s.metadata) c.manifest.summary[k] = v;
}

int cmd_relax(const Options& o)
{
    Context c = make_context("relax", o);
    const LatticeSpec spec = c.spec();
    const ScalarState k = relaxed_kink(spec, {1, c.run().x0, spec.xi0() / spec.a}, c.run().kappa);
    const FermionParams fp = c.fermions(false);
    const Vec e = energy_density(spec, k);
    CsvWriter w(c.output("relaxed.csv"), {"n", "x", "phi", "energy_density"}, c.hash);
    for (int n = 0; n < spec.N; ++n) w.row(0.0, {double(n), spec.x(n), k.phi[n], e[n]});
    c.manifest.summary["energy"] = total_energy(spec, k);
    c.manifest.summary["excess_energy"] = total_energy(spec, k) - vacuum_energy(spec);
    c.manifest.summary["topological_charge"] = topological_charge(spec, k, c.run().exclusion);
    c.manifest.summary["stability"] = stability_classify(k, spec) == Stability::stable ? "stable" : "unstable";
    c.manifest.summary["omega0_sq"] = normal_modes(k, spec).omega_sq[0];
    c.manifest.summary["soliton_mass_reference"] = soliton_mass_reference(spec.m0_sq, spec.lam);
    if (c.coupled()) c.manifest.summary["fermion_c_f"] = fp.c_f(spec.a);
    finish(c);
    return 0;
}

int cmd_modes(const Options& o)
{
    Context c = make_context("modes", o);
    const LatticeSpec spec = c.spec();
    const ScalarState k = relaxed_kink(spec, {1, c.run().x0, spec.xi0() / spec.a}, c.run().kappa);
    const ModeBasis b = normal_modes(k, spec);
    {
        CsvWriter w(c.output("modes.csv"), {"index", "omega_sq"}, c.hash);
        for (int v = 0; v < spec.N; ++v) w.row(0.0, {double(v), b.omega_sq[v]});
    }
    {
        const int K = std::min(c.run().n_modes, spec.N);
        std::vector<std::string> cols{"n", "x"};
        for (int v = 0; v < K; ++v) cols.push_back("mode" + std::to_string(v));
        CsvWriter w(c.output("mode_vectors.csv"), cols, c.hash);
        for (int n = 0; n < spec.N; ++n) {
            Vec row{double(n), spec.x(n)};
            for (int v = 0; v < K; ++v) row.push_back(b.modes(n, v));
            w.row(0.0, row);
        }
    }
    c.manifest.summary["stability"] = stability_classify(k, spec) == Stability::stable ? "stable" : "unstable";
    c.manifest.summary["omega0_sq"] = b.omega_sq[0];
    if (c.cfg.fermions) {
        const FermionParams fp = c.fermions(true);
        const FermionEigensystem es = eigensystem(k.phi, fp);
        CsvWriter w(c.output("fermion_spectrum.csv"), {"index", "eps"}, c.hash);
        for (int v = 0; v < spec.N; ++v) w.row(0.0, {double(v), es.eps[v]});
        const int z = es.n_filled - 1;
        CsvWriter zw(c.output("zero_mode.csv"), {"n", "x", "density"}, c.hash);
        for (int n = 0; n < spec.N; ++n) zw.row(0.0, {double(n), spec.x(n), std::norm(es.modes(n, z))});
        c.manifest.summary["zero_mode_energy"] = es.eps[z];
        const SymmetryReport sr = spectral_symmetry_check(es);
        c.manifest.summary["spectral_symmetry_residual"] = std::max(sr.max_vector_residual, sr.max_energy_residual);
    }
    finish(c);
    return 0;
}

int cmd_pn_scan(const Options& o)
{
    Context c = make_context("pn-scan", o);
    const LatticeSpec spec = c.spec();
    const ScanResult s = pn_scan(spec, c.fermions(false), make_grid(c.run()), c.coupled(), scan_options(c.run()));
    write_scan(c, "pn_scan.csv", s, "x0");
    const PNBarrier b = pn_barrier(s);
    c.manifest.summary["barrier"] = b.barrier;
    c.manifest.summary["doubled"] = b.doubled;
    c.manifest.summary["sub_barrier_even"] = b.sub_even;
    c.manifest.summary["sub_barrier_odd"] = b.sub_odd;
    c.manifest.summary["fourier_estimate"] = pn_fourier_estimate(spec);
    finish(c);
    return 0;
}

int cmd_zero_mode_scan(const Options& o)
{
    Context c = make_context("zero-mode-scan", o);
    const ScanResult s = zero_mode_energy_scan(c.spec(), c.fermions(true), make_grid(c.run()), scan_options(c.run()));
    write_scan(c, "zero_mode_scan.csv", s, "x0");
    finish(c);
    return 0;
}

int cmd_kk_potential(const Options& o)
{
    Context c = make_context("kk-potential", o);
    PairOptions po;
    static_cast<ScanOptions&>(po) = scan_options(c.run());
    po.relaxed = c.run().relaxed;
    po.occupation = parse_zero_mode(c.wigner().zero_mode);
    const ScanResult s = kink_antikink_potential(c.spec(), c.fermions(false), make_grid(c.run()), c.coupled(), po);
    write_scan(c, "kk_potential.csv", s, "d");
    finish(c);
    return 0;
}

ExperimentConfig experiment(const Context& c)
{
    const RunSection& r = c.run();
    ExperimentConfig e;
    e.spec = c.spec();
    e.fparams = c.fermions(false);
    e.dt = r.dt;
    e.t_max = r.t_max;
    e.record_stride = r.stride;
    e.n_traj = r.n_traj;
    e.seed = r.seed;
    e.fermion_mode = parse_fermion_mode(r.fermion_mode);
    e.zero_mode = parse_zero_mode(c.wigner().zero_mode);
    e.strang = r.strang;
    e.exclusion = r.exclusion;
    e.threads = r.threads;
    e.record_invariants = r.record_invariants;
    return e;
}

void write_ensemble(Context& c, const EnsembleResult& ens, const LatticeSpec& spec, int exclusion)
{
    const Vec xq = accumulated_charge_positions(spec.N, exclusion);
    CsvWriter field(c.output("field.csv"), {"n", "x", "phi_mean", "phi_se", "energy_mean", "energy_se"}, c.hash);
    CsvWriter charge(c.output("charge.csv"), {"cell", "x", "rho_mean", "rho_se", "dq_mean", "dq_se"}, c.hash);
    CsvWriter cond(c.output("condensate.csv"), {"cell", "x", "condensate_mean", "condensate_se"}, c.hash);
    JsonlWriter jl(c.output("ensemble.jsonl"));
    for (std::size_t i = 0; i < ens.times.size(); ++i) {
        const double t = ens.times[i];
        for (int n = 0; n < spec.N; ++n)
            field.row(t, {double(n), spec.x(n), ens.phi.mean[i][n], ens.phi.se[i][n], ens.energy.mean[i][n],
                          ens.energy.se[i][n]});
        for (std::size_t k = 0; k < xq.size(); ++k) {
            const std::size_t cell = k + exclusion;
            charge.row(t, {double(cell), xq[k], ens.rho.mean[i][cell], ens.rho.se[i][cell], ens.dq.mean[i][k],
                           ens.dq.se[i][k]});
        }
        for (std::size_t m = 0; m < ens.condensate.mean[i].size(); ++m)
            cond.row(t, {double(m), 2.0 * m + 0.5 - spec.center(), ens.condensate.mean[i][m], ens.condensate.se[i][m]});
        nlohmann::ordered_json j;
        j["time"] = t;
        j["manifest"] = c.hash;
        j["n_traj"] = ens.n_traj;
        j["phi_mean"] = ens.phi.mean[i];
        j["phi_se"] = ens.phi.se[i];
        j["energy_mean"] = ens.energy.mean[i];
        j["dq_mean"] = ens.dq.mean[i];
        j["condensate_mean"] = ens.condensate.mean[i];
        jl.write(j);
    }
    c.manifest.summary["n_traj"] = ens.n_traj;
    if (ens.max_trace_deviation > 0 || ens.max_idempotency > 0) {
        c.manifest.summary["max_trace_deviation"] = ens.max_trace_deviation;
        c.manifest.summary["max_idempotency"] = ens.max_idempotency;
    }
}

/// Kink fits per record plus a power law on xi(t).
void write_kink_fits(Context& c, const Vec& times, const std::vector<Vec>& phi, const std::vector<Vec>* dq, int exclusion,
                     const LatticeSpec& spec)
{
    std::vector<std::string> cols{"Phi0", "Phi0_ci", "xi", "xi_ci", "n0", "residual"};
    if (dq) cols.insert(cols.end(), {"A", "xi_f", "xi_f_ci", "B"});
    CsvWriter w(c.output("fits.csv"), cols, c.hash);
    Vec tt, xs;
    const Vec xq = accumulated_charge_positions(spec.N, exclusion);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const FitResult f = fit_kink(phi[i], exclusion);
        Vec row{f.params[0], f.ci95[0], f.params[1], f.ci95[1], f.params[2], f.residual_norm};
        if (dq) {
            try {
                const FitResult q = fit_accumulated_charge(xq, (*dq)[i]);
                row.insert(row.end(), {q.params[0], q.params[1], q.ci95[1], q.params[3]});
            } catch (const Error&) {
                row.insert(row.end(), 4, std::nan(""));
            }
        }
        w.row(times[i], row);
        if (times[i] > 0) tt.push_back(times[i]), xs.push_back(f.params[1]);
    }
    if (tt.size() >= 3) {
        const FitResult pl = fit_power_law(tt, xs);
        c.manifest.summary["power_law_c"] = pl.params[0];
        c.manifest.summary["power_law_alpha"] = pl.params[1];
        c.manifest.summary["power_law_alpha_ci95"] = pl.ci95[1];
        c.manifest.summary["power_law_accepted"] = pl.metrics.at("accepted") > 0;
        c.manifest.summary["bounded_oscillation"] = pl.metrics.at("bounded_oscillation") > 0;
        if (pl.metrics.at("bounded_oscillation") > 0)
            c.manifest.warnings.push_back("power law rejected: width stays bounded and oscillates (pinned kink)");
    }
}

WignerSpec all_frozen(const ScalarState& bg, const ModeBasis& b, const LatticeSpec& spec)
{
    std::set<int> all;
    for (int v = 0; v < spec.N; ++v) all.insert(v);
    return WignerSpec::ground_state(bg, b, spec, all);
}

int run_kink_ensemble(Context& c, bool fluctuations, bool freeze_goldstone)
{
    ExperimentConfig e = experiment(c);
    const double p_bar = c.wigner().p_bar;
    KinkSetup k = kink_setup(e.spec, freeze_goldstone, p_bar, c.run().x0);
    if (!fluctuations) {
        k.wigner = all_frozen(k.background, k.basis, e.spec);
        k.wigner.mean_p[0] = p_bar;
        e.n_traj = 1;
    }
    for (const auto& wmsg : k.wigner.warnings) c.manifest.warnings.push_back(wmsg);
    e.wigner = k.wigner;
    const EnsembleResult ens = run_ensemble(e);
    write_ensemble(c, ens, e.spec, e.exclusion);
    write_kink_fits(c, ens.times, ens.phi.mean, e.coupled() ? &ens.dq.mean : nullptr, e.exclusion, e.spec);
    finish(c);
    return 0;
}

int run_pair(Context& c, bool fluctuations)
{
    ExperimentConfig e = experiment(c);
    if (!fluctuations) e.n_traj = 1;
    const CollisionResult r = collision_experiment(e, c.wigner().d, c.wigner().p_bar, fluctuations);
    write_ensemble(c, r.ensemble, e.spec, e.exclusion);
    CsvWriter w(c.output("separation.csv"), {"trajectory", "separation"}, c.hash);
    for (std::size_t i = 0; i < r.ensemble.times.size(); ++i) {
        w.row(r.ensemble.times[i], {-1.0, r.mean_separation[i]});
        for (std::size_t j = 0; j < r.separations.size(); ++j) w.row(r.ensemble.times[i], {double(j), r.separations[j][i]});
    }
    c.manifest.summary["mean_outcome"] = to_string(r.mean_outcome);
    c.manifest.summary["reflections"] = r.reflections;
    c.manifest.summary["bions"] = r.bions;
    c.manifest.summary["mixed"] = r.mixed;
    const std::size_t ic = collision_index(r.mean_separation);
    c.manifest.summary["approach_speed"] = approach_speed(r.ensemble.times, r.mean_separation);
    if (ic < r.mean_separation.size()) {
        const FrontTrack f = charge_front_speed(r.ensemble.times, r.ensemble.dq.mean,
                                                accumulated_charge_positions(e.spec.N, e.exclusion), ic);
        c.manifest.summary["collision_time"] = r.ensemble.times[ic];
        c.manifest.summary["charge_front_speed"] = f.speed;
    }
    finish(c);
    return 0;
}

int cmd_evolve(const Options& o)
{
    Context c = make_context("evolve", o);
    if (c.run().background == "pair") return run_pair(c, false);
    return run_kink_ensemble(c, false, true);
}

int cmd_twa_kink(const Options& o)
{
    Context c = make_context("twa-kink", o);
    return run_kink_ensemble(c, true, c.wigner().freeze_goldstone);
}

int cmd_twa_move(const Options& o)
{
    Context c = make_context("twa-move", o);
    return run_kink_ensemble(c, c.wigner().fluctuations, true);
}

int cmd_twa_collide(const Options& o)
{
    Context c = make_context("twa-collide", o);
    return run_pair(c, c.wigner().fluctuations);
}

int cmd_fit(const Options& o)
{
    if (o.input.empty()) throw ConfigError("fit: --input DIR (a directory holding field.csv) is required");
    Context c = make_context("fit", o, false);
    const CsvTable t = read_csv(fs::path(o.input) / "field.csv");
    const int ct = t.column("time"), cn = t.column("n"), cp = t.column("phi_mean");
    std::map<double, std::vector<std::pair<int, double>>> by_time;
    for (const auto& r : t.rows) by_time[r[ct]].push_back({int(r[cn]), r[cp]});
    Vec times;
    std::vector<Vec> phi;
    for (auto& [time, entries] : by_time) {
        std::sort(entries.begin(), entries.end());
        Vec p;
        for (const auto& e : entries) p.push_back(e.second);
        times.push_back(time);
        phi.push_back(std::move(p));
    }
    if (phi.empty()) throw Error("fit: no rows in field.csv");
    LatticeSpec spec;
    spec.N = int(phi.front().size());
    write_kink_fits(c, times, phi, nullptr, c.run().exclusion, spec);
    finish(c);
    return 0;
}

int cmd_ion_map(const Options& o)
{
    Context c = make_context("ion-map", o);
    if (!c.cfg.trap) throw ConfigError("ion-map: config needs a [trap] section");
    const ions::TrapParams& tp = *c.cfg.trap;
    const ions::LaserParams lp = c.cfg.laser.value_or(ions::LaserParams{});
    for (const auto& w : tp.validate()) c.manifest.warnings.push_back(w);
    const ions::LatticeCouplings lc = ions::lattice_couplings(tp);
    Vec J_odd;
    {
        CsvWriter w(c.output("couplings.csv"), {"range", "J"}, c.hash);
        for (int r = 1; r <= c.run().j_range; ++r) {
            const double J = ions::spin_couplings(tp, lp, 0, r);
            w.row(0.0, {double(r), J});
            if (r % 2) J_odd.push_back(J);
        }
    }
    CsvWriter w(c.output("ion_map.csv"), {"quantity", "value"}, c.hash);
    const std::vector<std::pair<std::string, double>> q{
        {"c_b", ions::sound_velocity(tp)},
        {"m0_sq", ions::bare_mass(tp)},
        {"lambda", ions::quartic_coupling(tp)},
        {"K", ions::rigidity(tp)},
        {"kappa_x", (tp.omega_x / tp.omega_z) * (tp.omega_x / tp.omega_z)},
        {"kappa_x_critical", ions::critical_ratio(tp)},
        {"lattice_m0_sq", lc.m0_sq},
        {"lattice_lambda", lc.lam},
        {"c_f", ions::fermi_velocity(J_odd, tp.a)},
        {"g", ions::yukawa(lp)},
    };
    for (const auto& [name, v] : q) {
        w.row(0.0, name, {v});
        c.manifest.summary[name] = v;
    }
    finish(c);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Jackiw-Rebbi lattice field theory: solitons, fractional charge and TWA dynamics"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config, "configuration file")->envname("JRLAT_CONFIG");
    app.add_option("--seed", o.seed, "base RNG seed")->envname("JRLAT_SEED");
    app.add_option("--threads", o.threads, "worker threads (0 = hardware)")->envname("JRLAT_THREADS");
    app.add_option("--out", o.out, "output directory")->envname("JRLAT_OUT");
    app.add_option("--stride", o.stride, "record every STRIDE steps")->envname("JRLAT_STRIDE");
    app.add_option("--fermion-mode", o.fermion_mode, "unitary|adiabatic")
        ->envname("JRLAT_FERMION_MODE")
        ->check(CLI::IsMember({"unitary", "adiabatic"}));
    app.add_option("--zero-mode", o.zero_mode, "both|one|none")
        ->envname("JRLAT_ZERO_MODE")
        ->check(CLI::IsMember({"both", "one", "none"}));

    const std::vector<std::pair<std::string, std::function<int(const Options&)>>> commands{
        {"relax", cmd_relax},
        {"modes", cmd_modes},
        {"pn-scan", cmd_pn_scan},
        {"zero-mode-scan", cmd_zero_mode_scan},
        {"kk-potential", cmd_kk_potential},
        {"evolve", cmd_evolve},
        {"twa-kink", cmd_twa_kink},
        {"twa-move", cmd_twa_move},
        {"twa-collide", cmd_twa_collide},
        {"fit", cmd_fit},
        {"ion-map", cmd_ion_map},
    };
    const std::map<std::string, std::string> help{
        {"relax", "relaxed static kink"},
        {"modes", "normal-mode spectrum, mode vectors and fermion spectrum"},
        {"pn-scan", "Peierls-Nabarro scan over the kink centre"},
        {"zero-mode-scan", "zero-mode energy along the kink centre"},
        {"kk-potential", "kink-antikink potential over the separation"},
        {"evolve", "single classical trajectory with the fermion state"},
        {"twa-kink", "TWA ensemble around a static kink"},
        {"twa-move", "TWA ensemble of a moving kink"},
        {"twa-collide", "kink-antikink collision ensemble"},
        {"fit", "kink and power-law fits on a stored ensemble"},
        {"ion-map", "trapped-ion parameters to field-theory couplings"},
    };
    std::function<int(const Options&)> selected;
    for (const auto& [name, fn] : commands) {
        CLI::App* sub = app.add_subcommand(name, help.at(name));
        sub->fallthrough();
        if (name == "fit") sub->add_option("--input", o.input, "directory holding field.csv")->required();
        sub->callback([&selected, fn = fn] { selected = fn; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        return selected(o);
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const PhysicsError& e) {
        std::cerr << "physics validation failed: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
