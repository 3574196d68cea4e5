#pragma once

#include <Eigen/Dense>
#include <set>

#include "lattice.hpp"
#include "rng.hpp"

namespace jrlat {

struct ElasticityMatrix {
    Eigen::VectorXd diag;     // a^2-scaled diagonal
    Eigen::VectorXd offdiag;  // all -1
    double a = 1.0;

    Eigen::MatrixXd dense() const
    {
        const int N = int(diag.size());
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N, N);
        for (int n = 0; n < N; ++n) {
            K(n, n) = diag[n];
            if (n + 1 < N) K(n, n + 1) = K(n + 1, n) = offdiag[n];
        }
        return K;
    }
};

inline ElasticityMatrix elasticity_matrix(const ScalarState& background, const LatticeSpec& spec)
{
    const int N = spec.N;
    if (int(background.phi.size()) != N) throw PhysicsError("elasticity_matrix: background length differs from N");
    const double a2 = spec.a * spec.a;
    ElasticityMatrix K;
    K.a = spec.a;
    K.diag.resize(N);
    K.offdiag = Eigen::VectorXd::Constant(N - 1, -1.0);
    for (int n = 0; n < N; ++n) {
        const double nb = (n == 0 || n == N - 1) ? 1.0 : 2.0;
        const double p = background.phi[n];
        K.diag[n] = nb + spec.m0_sq * a2 + 3.0 * a2 * spec.lam * p * p;
    }
    return K;
}

struct ModeBasis {
    Vec omega_sq;            // ascending, 1/length^2
    Eigen::MatrixXd modes;   // columns are eigenvectors
};

/// Flip each column so that its largest-magnitude component (lowest index among ties) is positive.
inline void fix_column_signs(Eigen::MatrixXd& M)
{
    for (int j = 0; j < M.cols(); ++j) {
        const double mx = M.col(j).cwiseAbs().maxCoeff();
        for (int i = 0; i < M.rows(); ++i) {
            if (std::abs(M(i, j)) >= mx * (1.0 - 1e-9)) {
                if (M(i, j) < 0) M.col(j) *= -1.0;
                break;
            }
        }
    }
}

inline ModeBasis normal_modes(const ElasticityMatrix& K)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(K.diag, K.offdiag, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) throw Error("normal_modes: eigensolver did not converge");
    ModeBasis b;
    const double ia2 = 1.0 / (K.a * K.a);
    b.omega_sq.resize(K.diag.size());
    for (int i = 0; i < K.diag.size(); ++i) b.omega_sq[i] = es.eigenvalues()[i] * ia2;
    b.modes = es.eigenvectors();
    fix_column_signs(b.modes);
    return b;
}

inline ModeBasis normal_modes(const ScalarState& background, const LatticeSpec& spec)
{
    return normal_modes(elasticity_matrix(background, spec));
}

enum class Stability { stable, unstable };

inline Stability stability_classify(const ScalarState& relaxed, const LatticeSpec& spec, double threshold = 1e-10)
{
    const ElasticityMatrix K = elasticity_matrix(relaxed, spec);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(K.diag, K.offdiag, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0] < -threshold ? Stability::unstable : Stability::stable;
}

struct WignerSpec {
    ScalarState background;
    ModeBasis basis;
    double a = 1.0;
    Vec var_q, var_p, mean_p;
    std::vector<char> frozen;
    std::vector<std::string> warnings;

    /// Harmonic ground state of every stable mode; frozen modes get zero variance.
    static WignerSpec ground_state(const ScalarState& background, const ModeBasis& basis, const LatticeSpec& spec,
                                   const std::set<int>& frozen_modes = {})
    {
        WignerSpec w;
        w.background = background;
        w.basis = basis;
        w.a = spec.a;
        const int N = int(basis.omega_sq.size());
        w.var_q.assign(N, 0.0);
        w.var_p.assign(N, 0.0);
        w.mean_p.assign(N, 0.0);
        w.frozen.assign(N, 0);
        for (int v = 0; v < N; ++v) {
            if (frozen_modes.count(v)) {
                w.frozen[v] = 1;
                continue;
            }
            const double w2 = basis.omega_sq[v];
            if (w2 > 0) {
                const double om = std::sqrt(w2);
                w.var_q[v] = 1.0 / (2.0 * om);
                w.var_p[v] = om / 2.0;
            }
        }
        if (spec.broken() && N > 0 && !w.frozen[0] && w.var_q[0] > 0.1 * spec.Phi0() * spec.Phi0())
            w.warnings.push_back("Goldstone mode variance sigma_Q0^2 = " + std::to_string(w.var_q[0]) +
                                 " exceeds 0.1 Phi0^2; the linearised Wigner state is not reliable");
        return w;
    }

    void validate() const
    {
        const std::size_t N = basis.omega_sq.size();
        if (var_q.size() != N || var_p.size() != N || mean_p.size() != N || frozen.size() != N)
            throw PhysicsError("WignerSpec: per-mode arrays must have one entry per mode");
        for (std::size_t v = 0; v < N; ++v)
            if (var_q[v] < 0 || var_p[v] < 0) throw PhysicsError("WignerSpec: variances must be >= 0");
    }
};

/// One Wigner sample around the background. Two normals are drawn per sampled mode, in mode order.
inline ScalarState sample_initial(const WignerSpec& w, CounterRng& rng)
{
    w.validate();
    const int N = int(w.basis.omega_sq.size());
    Eigen::VectorXd Q = Eigen::VectorXd::Zero(N), P = Eigen::VectorXd::Zero(N);
    for (int v = 0; v < N; ++v) {
        P[v] = w.mean_p[v];
        if (w.frozen[v]) continue;
        if (!(w.basis.omega_sq[v] > 0))
            throw PhysicsError("sample_initial: mode " + std::to_string(v) + " has Omega^2 <= 0 and is not frozen");
        Q[v] = std::sqrt(w.var_q[v]) * rng.normal();
        P[v] += std::sqrt(w.var_p[v]) * rng.normal();
    }
    const Eigen::VectorXd dphi = w.basis.modes * Q;
    const Eigen::VectorXd dpi = w.basis.modes * P / w.a;
    ScalarState s = w.background;
    if (s.pi.size() != std::size_t(N)) s.pi.assign(N, 0.0);
    for (int n = 0; n < N; ++n) {
        s.phi[n] += dphi[n];
        s.pi[n] += dpi[n];
    }
    return s;
}

}  // namespace jrlat
