#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "adiabatic.hpp"
#include "ions.hpp"
#include "twa.hpp"

namespace jrlat {

/// Malformed configuration text: syntax, unknown or duplicate keys, missing keys, bad values.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct LatticeSection {
    int N = 160;
    double a = 1.0;
    double m0_sq = -2.0;
    double lam = 2.0 / 9.0;
    bool operator==(const LatticeSection&) const = default;
    LatticeSpec spec() const { return {N, a, m0_sq, lam}; }
};

struct FermionSection {
    double J = 1.0, g = 0.0, m_f = 0.0;
    bool operator==(const FermionSection&) const = default;
    FermionParams params() const { return {J, g, m_f}; }
};

struct WignerSection {
    bool freeze_goldstone = false;
    bool fluctuations = true;
    double p_bar = 0.0;
    double d = 40.0;  // kink-antikink separation
    std::string zero_mode = "one";
    bool operator==(const WignerSection&) const = default;
};

struct RunSection {
    double dt = 0.01;
    double t_max = 1.0;
    int stride = 10;
    int n_traj = 1;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string fermion_mode = "unitary";
    bool strang = false;
    double kappa = 0.2;
    int exclusion = 3;
    double x0 = 0.5;
    double grid_min = -2.0, grid_max = 2.0, grid_step = 0.05;
    std::string interpolation = "monotone_cubic";
    bool relaxed = true;
    std::string background = "kink";  // kink | pair
    bool record_invariants = false;
    int n_modes = 8;
    int j_range = 20;
    bool operator==(const RunSection&) const = default;
};

struct RunConfig {
    std::optional<LatticeSection> lattice;
    std::optional<FermionSection> fermions;
    std::optional<WignerSection> wigner;
    std::optional<RunSection> run;
    std::optional<ions::TrapParams> trap;
    std::optional<ions::LaserParams> laser;

    bool operator==(const RunConfig& o) const;
    void validate() const;
};

namespace detail {

struct Entry {
    std::string value;
    int line;
};
using RawSection = std::map<std::string, Entry>;
using RawConfig = std::map<std::string, RawSection>;

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline const std::set<std::string>& known_sections()
{
    static const std::set<std::string> s{"lattice", "fermions", "wigner", "run", "trap", "laser"};
    return s;
}

inline RawConfig parse_raw(std::istream& in, const std::string& source)
{
    RawConfig raw;
    std::string line, section;
    int ln = 0;
    auto where = [&](int l) { return source + ":" + std::to_string(l); };
    while (std::getline(in, line)) {
        ++ln;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where(ln) + ": malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_sections().count(section)) throw ConfigError(where(ln) + ": unknown section [" + section + "]");
            raw[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where(ln) + ": expected 'key = value'");
        if (section.empty()) throw ConfigError(where(ln) + ": key outside of any section");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where(ln) + ": empty key");
        auto& sec = raw[section];
        if (auto it = sec.find(key); it != sec.end())
            throw ConfigError(source + ": duplicate key '" + section + "." + key + "' at lines " +
                              std::to_string(it->second.line) + " and " + std::to_string(ln));
        sec[key] = {value, ln};
    }
    return raw;
}

class SectionReader {
public:
    SectionReader(const RawSection& s, std::string name, std::string source)
        : s_(s), name_(std::move(name)), source_(std::move(source)) {}

    bool has(const std::string& k) const { return s_.count(k) > 0; }

    template <class T>
    void get(const std::string& k, T& out, bool required = false)
    {
        used_.insert(k);
        auto it = s_.find(k);
        if (it == s_.end()) {
            if (required) throw ConfigError(source_ + ": missing key '" + name_ + "." + k + "'");
            return;
        }
        const std::string& v = it->second.value;
        bool ok = true;
        if constexpr (std::is_same_v<T, std::string>) {
            out = v;
        } else if constexpr (std::is_same_v<T, bool>) {
            if (v == "true" || v == "1") out = true;
            else if (v == "false" || v == "0") out = false;
            else ok = false;
        } else if constexpr (std::is_floating_point_v<T>) {
            char* end = nullptr;
            out = std::strtod(v.c_str(), &end);
            ok = !v.empty() && end == v.c_str() + v.size();
        } else {
            const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
            ok = r.ec == std::errc() && r.ptr == v.data() + v.size();
        }
        if (!ok)
            throw ConfigError(source_ + ":" + std::to_string(it->second.line) + ": invalid value '" + v + "' for key '" +
                              name_ + "." + k + "'");
    }

    void check_unknown() const
    {
        for (const auto& [k, e] : s_)
            if (!used_.count(k))
                throw ConfigError(source_ + ":" + std::to_string(e.line) + ": unknown key '" + name_ + "." + k + "'");
    }

    int line(const std::string& k) const
    {
        auto it = s_.find(k);
        return it == s_.end() ? 0 : it->second.line;
    }

private:
    const RawSection& s_;
    std::string name_, source_;
    std::set<std::string> used_;
};

/// Rethrows a physics invariant violation with the offending key and line.
template <class F>
void check_invariant(const SectionReader& r, const std::string& section, const std::string& key, const std::string& source,
                     F&& f)
{
    try {
        f();
    } catch (const PhysicsError& e) {
        throw PhysicsError(source + ":" + std::to_string(r.line(key)) + ": " + section + "." + key + ": " + e.what());
    }
}

inline std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline void RunConfig::validate() const
{
    if (lattice) lattice->spec().validate();
    if (fermions) fermions->params().validate();
    if (wigner) {
        if (wigner->zero_mode != "both" && wigner->zero_mode != "one" && wigner->zero_mode != "none")
            throw PhysicsError("wigner.zero_mode must be both|one|none");
    }
    if (run) {
        const RunSection& r = *run;
        if (!(r.dt > 0)) throw PhysicsError("run.dt: invariant dt > 0 violated");
        if (!(r.t_max >= 0)) throw PhysicsError("run.t_max: invariant t_max >= 0 violated");
        if (r.n_traj < 1) throw PhysicsError("run.n_traj: invariant n_traj >= 1 violated");
        if (r.stride < 1) throw PhysicsError("run.stride: invariant stride >= 1 violated");
        if (r.threads < 0) throw PhysicsError("run.threads: invariant threads >= 0 violated");
        if (r.kappa < 0) throw PhysicsError("run.kappa: invariant kappa >= 0 violated");
        if (r.exclusion < 0) throw PhysicsError("run.exclusion: invariant exclusion >= 0 violated");
        if (!(r.grid_step > 0) || r.grid_max < r.grid_min) throw PhysicsError("run.grid_*: empty or reversed grid");
        if (r.fermion_mode != "unitary" && r.fermion_mode != "adiabatic")
            throw PhysicsError("run.fermion_mode must be unitary|adiabatic");
        if (r.interpolation != "monotone_cubic" && r.interpolation != "linear")
            throw PhysicsError("run.interpolation must be monotone_cubic|linear");
        if (r.background != "kink" && r.background != "pair") throw PhysicsError("run.background must be kink|pair");
        if (r.n_modes < 1 || r.j_range < 1) throw PhysicsError("run.n_modes and run.j_range must be >= 1");
    }
    if (trap) trap->validate();
}

inline bool RunConfig::operator==(const RunConfig& o) const
{
    auto tr = [](const ions::TrapParams& t) {
        return std::tie(t.omega_x, t.omega_y, t.omega_z, t.N_ions, t.a, t.ell, t.m_a, t.hbar);
    };
    auto la = [](const ions::LaserParams& l) {
        return std::tie(l.Omega_L, l.delta_L, l.Delta_k, l.Omega_tilde, l.Delta_k_tilde, l.z0, l.q_z, l.eta_x);
    };
    if (trap.has_value() != o.trap.has_value() || laser.has_value() != o.laser.has_value()) return false;
    if (trap && tr(*trap) != tr(*o.trap)) return false;
    if (laser && la(*laser) != la(*o.laser)) return false;
    return lattice == o.lattice && fermions == o.fermions && wigner == o.wigner && run == o.run;
}

/// Parses the sectioned key-value format. Lattice couplings are given either as (Phi0, xi0) or as (m0_sq, lam).
inline RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>")
{
    std::istringstream in(text);
    const detail::RawConfig raw = detail::parse_raw(in, source);
    RunConfig c;
    using detail::SectionReader;
    if (auto it = raw.find("lattice"); it != raw.end()) {
        SectionReader r(it->second, "lattice", source);
        LatticeSection l;
        r.get("N", l.N, true);
        r.get("a", l.a);
        const bool kink_form = r.has("Phi0") || r.has("xi0");
        const bool coupling_form = r.has("m0_sq") || r.has("lam");
        if (kink_form && coupling_form)
            throw ConfigError(source + ":" + std::to_string(r.line(r.has("m0_sq") ? "m0_sq" : "lam")) +
                              ": give either lattice.Phi0/xi0 or lattice.m0_sq/lam, not both");
        if (coupling_form) {
            r.get("m0_sq", l.m0_sq, true);
            r.get("lam", l.lam, true);
            if (!(l.lam > 0))
                throw PhysicsError(source + ":" + std::to_string(r.line("lam")) + ": lattice.lam: invariant lam > 0 violated");
        } else {
            double Phi0 = 0, xi0 = 0;
            r.get("Phi0", Phi0, true);
            r.get("xi0", xi0, true);
            if (!(Phi0 > 0)) throw PhysicsError(source + ":" + std::to_string(r.line("Phi0")) + ": lattice.Phi0: invariant Phi0 > 0 violated");
            if (!(xi0 > 0)) throw PhysicsError(source + ":" + std::to_string(r.line("xi0")) + ": lattice.xi0: invariant xi0 > 0 violated");
            l.m0_sq = -2.0 / (xi0 * xi0);
            l.lam = -l.m0_sq / (Phi0 * Phi0);
        }
        r.check_unknown();
        detail::check_invariant(r, "lattice", "N", source, [&] { l.spec().validate(); });
        c.lattice = l;
    }
    if (auto it = raw.find("fermions"); it != raw.end()) {
        SectionReader r(it->second, "fermions", source);
        FermionSection f;
        r.get("J", f.J, true);
        r.get("g", f.g, true);
        r.get("m_f", f.m_f);
        r.check_unknown();
        detail::check_invariant(r, "fermions", "J", source, [&] { f.params().validate(); });
        c.fermions = f;
    }
    if (auto it = raw.find("wigner"); it != raw.end()) {
        SectionReader r(it->second, "wigner", source);
        WignerSection w;
        r.get("freeze_goldstone", w.freeze_goldstone);
        r.get("fluctuations", w.fluctuations);
        r.get("p_bar", w.p_bar);
        r.get("d", w.d);
        r.get("zero_mode", w.zero_mode);
        r.check_unknown();
        c.wigner = w;
    }
    if (auto it = raw.find("run"); it != raw.end()) {
        SectionReader r(it->second, "run", source);
        RunSection s;
        r.get("dt", s.dt);
        r.get("t_max", s.t_max);
        r.get("stride", s.stride);
        r.get("n_traj", s.n_traj);
        r.get("seed", s.seed);
        r.get("threads", s.threads);
        r.get("fermion_mode", s.fermion_mode);
        r.get("strang", s.strang);
        r.get("kappa", s.kappa);
        r.get("exclusion", s.exclusion);
        r.get("x0", s.x0);
        r.get("grid_min", s.grid_min);
        r.get("grid_max", s.grid_max);
        r.get("grid_step", s.grid_step);
        r.get("interpolation", s.interpolation);
        r.get("relaxed", s.relaxed);
        r.get("background", s.background);
        r.get("record_invariants", s.record_invariants);
        r.get("n_modes", s.n_modes);
        r.get("j_range", s.j_range);
        r.check_unknown();
        c.run = s;
    }
    if (auto it = raw.find("trap"); it != raw.end()) {
        SectionReader r(it->second, "trap", source);
        ions::TrapParams t;
        r.get("omega_x", t.omega_x, true);
        r.get("omega_y", t.omega_y, true);
        r.get("omega_z", t.omega_z, true);
        r.get("N_ions", t.N_ions, true);
        r.get("a", t.a, true);
        r.get("ell", t.ell, true);
        r.get("m_a", t.m_a, true);
        r.get("hbar", t.hbar);
        r.check_unknown();
        c.trap = t;
    }
    if (auto it = raw.find("laser"); it != raw.end()) {
        SectionReader r(it->second, "laser", source);
        ions::LaserParams l;
        r.get("Omega_L", l.Omega_L);
        r.get("delta_L", l.delta_L);
        r.get("Delta_k", l.Delta_k);
        r.get("Omega_tilde", l.Omega_tilde);
        r.get("Delta_k_tilde", l.Delta_k_tilde);
        r.get("z0", l.z0);
        r.get("q_z", l.q_z);
        r.get("eta_x", l.eta_x);
        r.check_unknown();
        c.laser = l;
    }
    c.validate();
    return c;
}

inline RunConfig parse_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

/// Canonical text: fixed section order, keys sorted, doubles at full precision.
inline std::string serialize(const RunConfig& c)
{
    using detail::fmt;
    std::ostringstream o;
    auto section = [&](const std::string& name, std::map<std::string, std::string> kv) {
        o << "[" << name << "]\n";
        for (const auto& [k, v] : kv) o << k << " = " << v << "\n";
    };
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    if (c.lattice)
        section("lattice", {{"N", std::to_string(c.lattice->N)},
                            {"a", fmt(c.lattice->a)},
                            {"lam", fmt(c.lattice->lam)},
                            {"m0_sq", fmt(c.lattice->m0_sq)}});
    if (c.fermions)
        section("fermions", {{"J", fmt(c.fermions->J)}, {"g", fmt(c.fermions->g)}, {"m_f", fmt(c.fermions->m_f)}});
    if (c.wigner)
        section("wigner", {{"d", fmt(c.wigner->d)},
                           {"fluctuations", b(c.wigner->fluctuations)},
                           {"freeze_goldstone", b(c.wigner->freeze_goldstone)},
                           {"p_bar", fmt(c.wigner->p_bar)},
                           {"zero_mode", c.wigner->zero_mode}});
    if (c.run) {
        const RunSection& r = *c.run;
        section("run", {{"background", r.background},
                        {"dt", fmt(r.dt)},
                        {"exclusion", std::to_string(r.exclusion)},
                        {"fermion_mode", r.fermion_mode},
                        {"grid_max", fmt(r.grid_max)},
                        {"grid_min", fmt(r.grid_min)},
                        {"grid_step", fmt(r.grid_step)},
                        {"interpolation", r.interpolation},
                        {"j_range", std::to_string(r.j_range)},
                        {"kappa", fmt(r.kappa)},
                        {"n_modes", std::to_string(r.n_modes)},
                        {"n_traj", std::to_string(r.n_traj)},
                        {"record_invariants", b(r.record_invariants)},
                        {"relaxed", b(r.relaxed)},
                        {"seed", std::to_string(r.seed)},
                        {"strang", b(r.strang)},
                        {"stride", std::to_string(r.stride)},
                        {"t_max", fmt(r.t_max)},
                        {"threads", std::to_string(r.threads)},
                        {"x0", fmt(r.x0)}});
    }
    if (c.trap) {
        const auto& t = *c.trap;
        section("trap", {{"N_ions", std::to_string(t.N_ions)},
                         {"a", fmt(t.a)},
                         {"ell", fmt(t.ell)},
                         {"hbar", fmt(t.hbar)},
                         {"m_a", fmt(t.m_a)},
                         {"omega_x", fmt(t.omega_x)},
                         {"omega_y", fmt(t.omega_y)},
                         {"omega_z", fmt(t.omega_z)}});
    }
    if (c.laser) {
        const auto& l = *c.laser;
        section("laser", {{"Delta_k", fmt(l.Delta_k)},
                          {"Delta_k_tilde", fmt(l.Delta_k_tilde)},
                          {"Omega_L", fmt(l.Omega_L)},
                          {"Omega_tilde", fmt(l.Omega_tilde)},
                          {"delta_L", fmt(l.delta_L)},
                          {"eta_x", fmt(l.eta_x)},
                          {"q_z", fmt(l.q_z)},
                          {"z0", fmt(l.z0)}});
    }
    return o.str();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

/// Hash of the canonical serialization; threads do not influence results and are left out.
inline std::string config_hash(RunConfig c, const std::string& command = "")
{
    if (c.run) c.run->threads = 0;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a(command + "\n" + serialize(c)));
    return buf;
}

inline FermionMode parse_fermion_mode(const std::string& s)
{
    if (s == "unitary") return FermionMode::unitary;
    if (s == "adiabatic") return FermionMode::adiabatic;
    throw ConfigError("fermion mode must be unitary|adiabatic, got '" + s + "'");
}

inline ZeroModeOccupation parse_zero_mode(const std::string& s)
{
    if (s == "both") return ZeroModeOccupation::both;
    if (s == "one") return ZeroModeOccupation::one;
    if (s == "none") return ZeroModeOccupation::none;
    throw ConfigError("zero-mode occupation must be both|one|none, got '" + s + "'");
}

}  // namespace jrlat
