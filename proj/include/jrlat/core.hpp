#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace jrlat {

using Vec = std::vector<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Physically invalid input or a failed physics validation.
class PhysicsError : public Error {
public:
    using Error::Error;
};

/// An iterative procedure ran out of iterations.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

struct LatticeSpec {
    int N = 160;
    double a = 1.0;
    double m0_sq = -2.0;
    double lam = 2.0 / 9.0;

    /// Couplings from the vacuum amplitude and kink width (both in lattice units).
    static LatticeSpec from_kink(int N, double Phi0, double xi0, double a = 1.0)
    {
        LatticeSpec s;
        s.N = N;
        s.a = a;
        s.m0_sq = -2.0 / (xi0 * xi0);
        s.lam = -s.m0_sq / (Phi0 * Phi0);
        s.validate();
        return s;
    }

    void validate() const
    {
        if (N < 8) throw PhysicsError("LatticeSpec: N must be >= 8, got " + std::to_string(N));
        if (!(a > 0)) throw PhysicsError("LatticeSpec: lattice spacing a must be > 0");
        if (!std::isfinite(m0_sq)) throw PhysicsError("LatticeSpec: m0_sq must be finite");
        // lam = 0 is allowed only for the free (quadratic) chain with m0_sq > 0
        if (!(lam > 0) && !(lam == 0 && m0_sq > 0)) throw PhysicsError("LatticeSpec: invariant lam > 0 violated");
    }

    bool broken() const { return m0_sq < 0; }

    double Phi0() const
    {
        if (!broken()) throw PhysicsError("Phi0 requires m0_sq < 0");
        return std::sqrt(-m0_sq / lam);
    }

    double xi0() const
    {
        if (!broken()) throw PhysicsError("xi0 requires m0_sq < 0");
        return std::sqrt(-2.0 / m0_sq);
    }

    /// Index of the chain midpoint site; x_n = n - center().
    int center() const { return (N - 1) / 2; }
    double x(int n) const { return double(n - center()); }
    /// Site parity (-1)^x_n, +1 on the midpoint site.
    int parity(int n) const { return ((n - center()) % 2 == 0) ? 1 : -1; }
};

inline int center_index(std::size_t N) { return (int(N) - 1) / 2; }
inline int site_parity(std::size_t N, int n) { return ((n - center_index(N)) % 2 == 0) ? 1 : -1; }

struct ScalarState {
    Vec phi;
    Vec pi;

    ScalarState() = default;
    explicit ScalarState(std::size_t N) : phi(N, 0.0), pi(N, 0.0) {}
    ScalarState(Vec p, Vec q) : phi(std::move(p)), pi(std::move(q)) {}

    std::size_t size() const { return phi.size(); }

    void validate(std::size_t N) const
    {
        if (phi.size() != N || pi.size() != N)
            throw PhysicsError("ScalarState: arrays must have length N=" + std::to_string(N));
        for (std::size_t i = 0; i < N; ++i)
            if (!std::isfinite(phi[i]) || !std::isfinite(pi[i]))
                throw PhysicsError("ScalarState: non-finite entry at site " + std::to_string(i));
    }
};

struct SolitonProfile {
    int q_t = 1;
    double center = 0.0;  // n0 relative to the chain midpoint
    double width = 1.0;   // xi0 / a
};

}  // namespace jrlat
