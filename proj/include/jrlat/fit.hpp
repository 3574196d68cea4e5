#pragma once

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <functional>
#include <map>

#include "core.hpp"

namespace jrlat {

struct FitResult {
    Vec params;
    Vec ci95;  // half-widths
    double residual_norm = 0.0;
    int first = 0, last = 0;  // inclusive sample window
    bool converged = false;
    int iterations = 0;
    std::map<std::string, double> metrics;
};

/// y = f(x; p); grad receives df/dp when non-null.
using FitModel = std::function<double(double x, const Vec& p, double* grad)>;

inline double t_quantile_975(int dof)
{
    if (dof <= 0) return std::numeric_limits<double>::infinity();
    return boost::math::quantile(boost::math::students_t(dof), 0.975);
}

/// Gauss-Newton with step halving; confidence half-widths from the linearised covariance.
inline FitResult gauss_newton(const Vec& x, const Vec& y, Vec p, const FitModel& f, int max_iter = 200,
                              double tol = 1e-13)
{
    const int m = int(x.size()), k = int(p.size());
    if (m < k) throw PhysicsError("gauss_newton: fewer samples than parameters");
    Eigen::MatrixXd Jm(m, k);
    Eigen::VectorXd r(m);
    std::vector<double> grad(k);
    auto evaluate = [&](const Vec& q, bool jac) {
        double ssr = 0.0;
        for (int i = 0; i < m; ++i) {
            const double v = f(x[i], q, jac ? grad.data() : nullptr);
            r[i] = y[i] - v;
            ssr += r[i] * r[i];
            if (jac)
                for (int j = 0; j < k; ++j) Jm(i, j) = grad[j];
        }
        return ssr;
    };
    FitResult out;
    double ssr = evaluate(p, true);
    for (int it = 0; it < max_iter; ++it) {
        out.iterations = it + 1;
        const Eigen::VectorXd delta = Jm.colPivHouseholderQr().solve(r);
        if (!delta.allFinite()) break;
        double step = 1.0;
        Vec trial(k);
        double ssr_new = ssr;
        bool improved = false;
        for (int bt = 0; bt < 40; ++bt) {
            for (int j = 0; j < k; ++j) trial[j] = p[j] + step * delta[j];
            ssr_new = evaluate(trial, false);
            if (std::isfinite(ssr_new) && ssr_new <= ssr) {
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) {
            out.converged = ssr < 1e-24 || delta.norm() <= tol * (1.0 + Eigen::Map<Eigen::VectorXd>(p.data(), k).norm()) * 1e3;
            break;
        }
        const double rel = step * delta.norm() / (1.0 + Eigen::Map<Eigen::VectorXd>(p.data(), k).norm());
        p = trial;
        const double prev = ssr;
        ssr = evaluate(p, true);
        if (rel < tol || prev - ssr <= tol * tol * (1.0 + prev) || ssr < 1e-28) {
            out.converged = true;
            break;
        }
    }
    ssr = evaluate(p, true);
    out.params = p;
    out.residual_norm = std::sqrt(ssr);
    out.ci95.assign(k, std::numeric_limits<double>::infinity());
    const int dof = m - k;
    if (dof > 0) {
        const Eigen::MatrixXd JtJ = Jm.transpose() * Jm;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(JtJ);
        if (lu.isInvertible()) {
            const Eigen::MatrixXd cov = lu.inverse() * (ssr / dof);
            const double tq = t_quantile_975(dof);
            for (int j = 0; j < k; ++j) out.ci95[j] = tq * std::sqrt(std::max(0.0, cov(j, j)));
        }
    }
    return out;
}

namespace detail {

/// Position (relative to the midpoint) where y first crosses `level`, by linear interpolation.
inline double first_crossing(const Vec& x, const Vec& y, double level)
{
    for (std::size_t i = 0; i + 1 < y.size(); ++i) {
        const double a = y[i] - level, b = y[i + 1] - level;
        if (a == 0.0) return x[i];
        if ((a < 0) != (b < 0)) return x[i] + a / (a - b) * (x[i + 1] - x[i]);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// Centre and width guesses from the midpoint crossing and the 10-90% rise distance.
inline void tanh_guess(const Vec& x, const Vec& y, double lo, double hi, double& center, double& width)
{
    const double mid = 0.5 * (lo + hi), span = hi - lo;
    center = first_crossing(x, y, mid);
    if (!std::isfinite(center)) center = 0.5 * (x.front() + x.back());
    const double x10 = first_crossing(x, y, lo + 0.1 * span);
    const double x90 = first_crossing(x, y, lo + 0.9 * span);
    width = std::abs(x90 - x10) / (2.0 * std::atanh(0.8));
    if (!std::isfinite(width) || width < 0.05) width = 1.0;
}

inline double edge_mean(const Vec& y, bool left, int count = 3)
{
    double s = 0.0;
    const int n = std::min<int>(count, int(y.size()));
    for (int i = 0; i < n; ++i) s += left ? y[i] : y[y.size() - 1 - i];
    return s / n;
}

}  // namespace detail

/// Phi0 tanh((x - n0)/xi) on sites [exclusion, N-1-exclusion]; params {Phi0, xi, n0}.
inline FitResult fit_kink(const Vec& phi, int exclusion = 3)
{
    const int N = int(phi.size());
    const int c = center_index(phi.size());
    Vec x, y;
    for (int n = exclusion; n < N - exclusion; ++n) {
        x.push_back(n - c);
        y.push_back(phi[n]);
    }
    if (x.size() < 4) throw PhysicsError("fit_kink: window too small");
    const double l = detail::edge_mean(y, true), r = detail::edge_mean(y, false);
    double n0, xi;
    detail::tanh_guess(x, y, std::min(l, r), std::max(l, r), n0, xi);
    const double amp = 0.5 * (r - l);
    FitModel model = [](double xv, const Vec& p, double* g) {
        const double u = (xv - p[2]) / p[1];
        const double t = std::tanh(u);
        if (g) {
            const double s2 = 1.0 - t * t;
            g[0] = t;
            g[1] = -p[0] * s2 * u / p[1];
            g[2] = -p[0] * s2 / p[1];
        }
        return p[0] * t;
    };
    FitResult out = gauss_newton(x, y, {amp, xi, n0}, model);
    if (out.params[1] < 0) out.params[1] = -out.params[1], out.params[0] = -out.params[0];
    out.first = exclusion;
    out.last = N - 1 - exclusion;
    return out;
}

/// A tanh((x - n0)/xi_f) + B over the accumulated-charge window; params {A, xi_f, n0, B}.
/// `x` holds the cell positions relative to the chain midpoint.
inline FitResult fit_accumulated_charge(const Vec& x, const Vec& dq)
{
    if (x.size() != dq.size() || x.size() < 5) throw PhysicsError("fit_accumulated_charge: bad window");
    const double l = detail::edge_mean(dq, true), r = detail::edge_mean(dq, false);
    double n0, xi;
    detail::tanh_guess(x, dq, std::min(l, r), std::max(l, r), n0, xi);
    FitModel model = [](double xv, const Vec& p, double* g) {
        const double u = (xv - p[2]) / p[1];
        const double t = std::tanh(u);
        if (g) {
            const double s2 = 1.0 - t * t;
            g[0] = t;
            g[1] = -p[0] * s2 * u / p[1];
            g[2] = -p[0] * s2 / p[1];
            g[3] = 1.0;
        }
        return p[0] * t + p[3];
    };
    FitResult out = gauss_newton(x, dq, {0.5 * (r - l), xi, n0, 0.5 * (r + l)}, model);
    if (out.params[1] < 0) out.params[1] = -out.params[1], out.params[0] = -out.params[0];
    out.first = 0;
    out.last = int(x.size()) - 1;
    return out;
}

/// Cell positions (relative to the midpoint) of accumulated_charge(rho, exclusion) entries.
inline Vec accumulated_charge_positions(int N, int exclusion = 3)
{
    const int c = center_index(std::size_t(N));
    Vec x;
    for (int j = exclusion; j < N - 1 - exclusion; ++j) x.push_back(j + 0.5 - c);
    return x;
}

/// xi(t) = c t^alpha by regression of log xi on log t after dropping the first `skip_fraction`.
/// metrics: r_squared, rms_log_residual, accepted (1/0), bounded_oscillation (1/0).
inline FitResult fit_power_law(const Vec& t, const Vec& xi, double skip_fraction = 0.1, double min_r2 = 0.8,
                               double min_alpha = 0.1)
{
    if (t.size() != xi.size()) throw PhysicsError("fit_power_law: length mismatch");
    const int n = int(t.size());
    int first = int(std::ceil(skip_fraction * n));
    while (first < n && !(t[first] > 0)) ++first;
    if (n - first < 3) throw PhysicsError("fit_power_law: fewer than 3 samples in the window");
    Vec lx, ly;
    for (int i = first; i < n; ++i) {
        if (!(xi[i] > 0)) throw PhysicsError("fit_power_law: non-positive entry in the fit window");
        lx.push_back(std::log(t[i]));
        ly.push_back(std::log(xi[i]));
    }
    const int m = int(lx.size());
    double mx = 0, my = 0;
    for (int i = 0; i < m; ++i) mx += lx[i], my += ly[i];
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    const double alpha = sxy / sxx;
    const double b = my - alpha * mx;
    double ssr = 0;
    for (int i = 0; i < m; ++i) {
        const double e = ly[i] - (b + alpha * lx[i]);
        ssr += e * e;
    }
    FitResult out;
    out.params = {std::exp(b), alpha};
    const double s2 = m > 2 ? ssr / (m - 2) : 0.0;
    const double tq = t_quantile_975(m - 2);
    const double se_a = std::sqrt(s2 / sxx);
    const double se_b = std::sqrt(s2 * (1.0 / m + mx * mx / sxx));
    out.ci95 = {std::exp(b) * tq * se_b, tq * se_a};
    out.residual_norm = std::sqrt(ssr);
    out.first = first;
    out.last = n - 1;
    out.converged = true;
    out.iterations = 1;
    const double r2 = syy > 0 ? 1.0 - ssr / syy : 0.0;
    const bool accepted = r2 >= min_r2 && alpha >= min_alpha;
    double lo = xi[first], hi = xi[first];
    for (int i = first; i < n; ++i) lo = std::min(lo, xi[i]), hi = std::max(hi, xi[i]);
    out.metrics = {{"r_squared", r2},
                   {"rms_log_residual", std::sqrt(ssr / m)},
                   {"accepted", accepted ? 1.0 : 0.0},
                   {"bounded_oscillation", (!accepted && hi / lo < 1.5) ? 1.0 : 0.0}};
    return out;
}

}  // namespace jrlat
